use super::*;
use proptest::prelude::*;
use std::collections::HashSet;

fn window(f: impl FnMut(usize, usize) -> f64) -> Window {
    Window::from_fn(f).unwrap()
}

fn arb_window() -> impl Strategy<Value = Window> {
    proptest::collection::vec(-100.0f64..100.0, WINDOW_LEN).prop_map(|v| {
        let mut a = [0.0; WINDOW_LEN];
        a.copy_from_slice(&v);
        Window::new(a).unwrap()
    })
}

/// Dense 256x256 reference without the symmetric shortcuts of the
/// production code.
fn dense_haralick(q: &QuantizedWindow, d: usize, dir: (isize, isize)) -> [f64; 13] {
    let mut p = vec![0.0f64; 256 * 256];
    let mut total = 0.0;
    for r in 0..8isize {
        for c in 0..8isize {
            let (r2, c2) = (r + dir.0 * d as isize, c + dir.1 * d as isize);
            if (0..8).contains(&r2) && (0..8).contains(&c2) {
                let a = q.get(r as usize, c as usize) as usize;
                let b = q.get(r2 as usize, c2 as usize) as usize;
                p[a * 256 + b] += 1.0;
                p[b * 256 + a] += 1.0;
                total += 2.0;
            }
        }
    }
    p.iter_mut().for_each(|v| *v /= total);
    let lg = |x: f64| if x > 0.0 { x.log2() } else { 0.0 };
    let mut px = [0.0; 256];
    let mut py = [0.0; 256];
    for i in 0..256 {
        for j in 0..256 {
            px[i] += p[i * 256 + j];
            py[j] += p[i * 256 + j];
        }
    }
    let mux: f64 = (0..256).map(|i| i as f64 * px[i]).sum();
    let muy: f64 = (0..256).map(|j| j as f64 * py[j]).sum();
    let sx = (0..256).map(|i| (i as f64 - mux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..256).map(|j| (j as f64 - muy).powi(2) * py[j]).sum::<f64>().sqrt();
    let mut f = [0.0; 13];
    let mut psum = vec![0.0; 511];
    let mut pdiff = vec![0.0; 256];
    let mut cov = 0.0;
    let (mut hxy1, mut hxy2) = (0.0, 0.0);
    for i in 0..256 {
        for j in 0..256 {
            let v = p[i * 256 + j];
            let (fi, fj) = (i as f64, j as f64);
            f[0] += v * v;
            f[1] += (fi - fj).powi(2) * v;
            cov += (fi - mux) * (fj - muy) * v;
            f[3] += (fi - mux).powi(2) * v;
            f[4] += v / (1.0 + (fi - fj).powi(2));
            f[8] -= v * lg(v);
            psum[i + j] += v;
            pdiff[i.abs_diff(j)] += v;
            let pp = px[i] * py[j];
            hxy1 -= v * lg(pp);
            hxy2 -= pp * lg(pp);
        }
    }
    f[2] = if sx * sy > 1e-9 { cov / (sx * sy) } else { 0.0 };
    f[5] = (0..511).map(|k| k as f64 * psum[k]).sum();
    f[6] = (0..511).map(|k| (k as f64 - f[5]).powi(2) * psum[k]).sum();
    f[7] = -(0..511).map(|k| psum[k] * lg(psum[k])).sum::<f64>();
    let dm: f64 = (0..256).map(|k| k as f64 * pdiff[k]).sum();
    f[9] = (0..256).map(|k| (k as f64 - dm).powi(2) * pdiff[k]).sum();
    f[10] = -(0..256).map(|k| pdiff[k] * lg(pdiff[k])).sum::<f64>();
    let hx = -(0..256).map(|i| px[i] * lg(px[i])).sum::<f64>();
    let hy = -(0..256).map(|j| py[j] * lg(py[j])).sum::<f64>();
    f[11] = if hx.max(hy) > 0.0 { (f[8] - hxy1) / hx.max(hy) } else { 0.0 };
    f[12] = (1.0 - (-2.0 * (hxy2 - f[8])).exp()).max(0.0).sqrt();
    f
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn window_bounds_and_indexing() {
    let plane = Plane::from_fn(10, 10, |_, _| 5.0);
    assert!(extract_window(&plane, 5, 5).unwrap().values().iter().all(|&v| v == 5.0));
    assert_eq!(
        extract_window(&plane, 3, 3),
        Err(FeatureError::OutOfBounds { row: 3, col: 3, width: 10, height: 10 })
    );
    assert!(extract_window(&plane, 6, 6).is_ok());
    assert!(extract_window(&plane, 7, 6).is_err());

    let ramp = Plane::from_fn(16, 16, |_, c| c as f32);
    let w = extract_window(&ramp, 9, 8).unwrap();
    for r in 0..8 {
        for c in 0..8 {
            assert_eq!(w.get(r, c), (4 + c) as f64);
        }
    }
}

#[test]
fn quantize_examples() {
    assert!(quantize(&window(|_, _| 7.3)).levels().iter().all(|&l| l == 0));
    let q = quantize(&window(|r, _| if r < 4 { 0.0 } else { 1.0 }));
    assert_eq!(q.get(0, 0), 0);
    assert_eq!(q.get(7, 7), 255);
    let q = quantize(&window(|r, c| [0.0, 0.5, 1.0][(r * 8 + c) % 3]));
    assert_eq!(&q.levels()[..3], &[0, 128, 255]);
}

#[test]
fn constant_window_statistics() {
    let s = statistical_features(&window(|_, _| 3.5));
    assert_eq!(s[0], 3.5);
    assert_eq!(s[1], 0.0);
    assert_eq!(s[11], 0.0);
    assert_eq!(s[15], 0.0);
    assert_eq!(s[16], 0.0);
    assert_eq!(s[17], 1.0);
    assert_eq!(s[4], 0.0);
}

#[test]
fn two_point_statistics() {
    let s = statistical_features(&window(|r, _| if r % 2 == 0 { 0.0 } else { 1.0 }));
    assert_eq!(s[0], 0.5);
    assert_eq!(s[9], 0.5);
    assert_eq!(s[11], 1.0);
    assert_eq!(s[17], 0.5);
    assert!((s[4] - 1.0).abs() < 1e-15);
    assert_eq!(s[1], 0.5);
    assert_eq!(s[12], 0.5);
    assert_eq!(s[2], 32.0);
    assert_eq!(s[16], 1.0);
}

#[test]
fn percentiles_match_order_statistics() {
    // values 0..64 in scrambled order
    let s = statistical_features(&window(|r, c| ((r * 8 + c) * 37 % 64) as f64));
    assert_eq!(s[5], 0.0);
    assert_eq!(s[8], 63.0);
    assert!((s[6] - 6.3).abs() < 1e-12);
    assert!((s[7] - 56.7).abs() < 1e-12);
    assert_eq!(s[9], 31.5);
    assert!((s[10] - 31.5).abs() < 1e-12);
}

#[test]
fn constant_glcm() {
    let q = quantize(&window(|_, _| 1.0));
    for d in DISTANCES {
        for dir in DIRECTIONS {
            let m = GlcmMatrix::new(&q, d, dir);
            assert_eq!(m.entries().len(), 1);
        }
    }
    let g = glcm_features(&q);
    for k in 0..2 {
        assert_eq!(g[13 * k], 1.0);
        assert_eq!(g[13 * k + 1], 0.0);
        assert_eq!(g[13 * k + 8], 0.0);
        assert_eq!(g[13 * k + 2], 0.0);
    }
}

#[test]
fn stripe_contrast_by_pair_enumeration() {
    let q = quantize(&window(|_, c| (c % 2) as f64));
    // direct pair count per direction at d = 1
    let mut expected = 0.0;
    for dir in DIRECTIONS {
        let (mut sum, mut n) = (0.0, 0.0);
        for r in 0..8isize {
            for c in 0..8isize {
                let (r2, c2) = (r + dir.0, c + dir.1);
                if (0..8).contains(&r2) && (0..8).contains(&c2) {
                    let a = q.get(r as usize, c as usize) as f64;
                    let b = q.get(r2 as usize, c2 as usize) as f64;
                    sum += (a - b).powi(2);
                    n += 1.0;
                }
            }
        }
        expected += sum / n / 4.0;
    }
    let g = glcm_features(&q);
    assert!((g[1] - expected).abs() < 1e-9);
    assert!((expected - 0.75 * 255.0 * 255.0).abs() < 1e-9);
    assert_eq!(haralick(&GlcmMatrix::new(&q, 1, (0, 1)))[1], 255.0 * 255.0);
    assert_eq!(haralick(&GlcmMatrix::new(&q, 1, (-1, 0)))[1], 0.0);
}

#[test]
fn gabor_zero_and_constant() {
    assert!(gabor_features(&window(|_, _| 0.0)).iter().all(|&v| v == 0.0));
    let g = gabor_features(&window(|_, _| 42.0));
    for k in 0..6 {
        assert_eq!(g[2 * k + 1], 0.0);
    }
    // constant raw field: zero-mean kernels annihilate it everywhere
    let r = gabor_response_features(&[3.0; WINDOW_LEN]);
    assert!(r.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn gabor_impulse_response() {
    let mut v = [0.0; WINDOW_LEN];
    v[4 * 8 + 4] = 1.0;
    let r = gabor_response_features(&v);
    let mut k = 0;
    for s in SIGMAS {
        for f in FREQUENCIES {
            let mut expected = 0.0;
            for o in 0..ORIENTATIONS {
                let ker = gabor_kernel(s, f, o as f64 * std::f64::consts::PI / 4.0);
                expected += ker.iter().map(|x| x.abs()).sum::<f64>() / 4.0;
            }
            expected /= 64.0;
            assert!((r[2 * k] - expected).abs() < 1e-14, "sigma {s} f {f}");
            k += 1;
        }
    }
}

#[test]
fn gabor_kernels_are_zero_mean_and_even() {
    for s in SIGMAS {
        for f in FREQUENCIES {
            for o in 0..4 {
                let k = gabor_kernel(s, f, o as f64 * std::f64::consts::PI / 4.0);
                assert!(k.iter().sum::<f64>().abs() < 1e-12);
                for i in 0..49 {
                    assert!((k[i] - k[48 - i]).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn layout_lengths_and_names() {
    assert_eq!(FEATURES_PER_CONTRAST, 56);
    let five = FeatureLayout::default_five();
    assert_eq!(five.len(), 280);
    assert_eq!(FeatureLayout::new(["T2"]).len(), 56);
    let names = five.names();
    assert_eq!(names.iter().collect::<HashSet<_>>().len(), 280);
    assert_eq!(names[0], "T1+C.mean");
    assert_eq!(names[56], "T2.mean");
    assert!(five.manifest().starts_with("0,T1+C.mean\n1,T1+C.std\n"));
}

#[test]
fn block_locality() {
    let a = Plane::from_fn(12, 12, |r, c| (r * 3 + c * c) as f32);
    let b = Plane::from_fn(12, 12, |r, c| ((r + 1) * (c + 2)) as f32);
    let z = Plane::from_fn(12, 12, |r, c| (r as f32).sin() + c as f32);
    let x = features_from_planes(&[&a, &b], 6, 6).unwrap();
    let y = features_from_planes(&[&a, &z], 6, 6).unwrap();
    assert_eq!(x.len(), 112);
    assert_eq!(x[..56], y[..56]);
    assert_ne!(x[56..], y[56..]);
    assert!(x.iter().all(|v| v.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glcm_is_a_symmetric_distribution(w in arb_window(), d in 0usize..2, k in 0usize..4) {
        let m = GlcmMatrix::new(&quantize(&w), DISTANCES[d], DIRECTIONS[k]);
        prop_assert!((m.total() - 1.0).abs() <= 1e-12);
        for &((i, j), p) in m.entries() {
            prop_assert!(p > 0.0);
            prop_assert_eq!(m.get(j, i), p);
        }
    }

    #[test]
    fn haralick_matches_dense_reference(w in arb_window(), d in 0usize..2, k in 0usize..4) {
        let q = quantize(&w);
        let got = haralick(&GlcmMatrix::new(&q, DISTANCES[d], DIRECTIONS[k]));
        let want = dense_haralick(&q, DISTANCES[d], DIRECTIONS[k]);
        for f in 0..13 {
            prop_assert!(close(got[f], want[f], 1e-9), "feature {} got {} want {}", f, got[f], want[f]);
        }
    }

    #[test]
    fn affine_invariance(w in arb_window(), a in 0.1f64..10.0, b in -50.0f64..50.0) {
        let t = Window::from_fn(|r, c| a * w.get(r, c) + b).unwrap();
        let (qw, qt) = (quantize(&w), quantize(&t));
        prop_assert_eq!(&qw, &qt);
        prop_assert_eq!(glcm_features(&qw), glcm_features(&qt));
        prop_assert_eq!(gabor_features(&w), gabor_features(&t));
        let (s, u) = (statistical_features(&w), statistical_features(&t));
        prop_assert_eq!(s[4], u[4]);
        prop_assert_eq!(s[17], u[17]);
        prop_assert!(close(u[15], s[15], 1e-8));
        for f in [1usize, 11, 12] {
            prop_assert!(close(u[f], a * s[f], 1e-9));
        }
        prop_assert!(close(u[0], a * s[0] + b, 1e-9));
    }

    #[test]
    fn scaling_is_equivariant(w in arb_window(), a in 0.1f64..10.0) {
        let t = Window::from_fn(|r, c| a * w.get(r, c)).unwrap();
        let (s, u) = (statistical_features(&w), statistical_features(&t));
        for f in [0usize, 1, 11, 12, 14] {
            prop_assert!(close(u[f], a * s[f], 1e-9));
        }
        prop_assert!(close(u[15], s[15], 1e-8));
        prop_assert_eq!(s[4], u[4]);
        prop_assert_eq!(s[17], u[17]);
    }

    #[test]
    fn quantize_is_idempotent(w in arb_window()) {
        let q = quantize(&w);
        prop_assert_eq!(quantize(&q.to_window()), q);
    }

    #[test]
    fn window_features_are_finite_and_pure(w in arb_window()) {
        let mut a = [0.0; FEATURES_PER_CONTRAST];
        let mut b = [0.0; FEATURES_PER_CONTRAST];
        window_features(&w, &mut a);
        window_features(&w, &mut b);
        prop_assert!(a.iter().all(|v| v.is_finite()));
        prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }
}
