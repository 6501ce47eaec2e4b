use super::*;
use crate::features::extract_window;

fn small() -> PhantomConfig {
    PhantomConfig { width: 64, height: 64, ..PhantomConfig::default() }
}

#[test]
fn generation_is_deterministic() {
    let a = generate(&small()).unwrap();
    let b = generate(&small()).unwrap();
    assert_eq!(a, b);
    let c = generate(&PhantomConfig { seed: 2, ..small() }).unwrap();
    assert_ne!(a.channels, c.channels);
}

#[test]
fn too_small_is_rejected() {
    let r = generate(&PhantomConfig { width: 16, ..small() });
    assert_eq!(r, Err(PhantomError::TooSmall { width: 16, height: 64 }));
}

#[test]
fn bad_prevalence_is_rejected() {
    let mut cfg = small();
    cfg.genes[0].prevalence = 1.0;
    assert!(matches!(generate(&cfg), Err(PhantomError::InvalidConfig(_))));
}

#[test]
fn masks_obey_region_algebra() {
    let s = generate(&PhantomConfig::default()).unwrap();
    s.check_consistency().unwrap();
    assert!(!s.ce.is_empty() && !s.ne.is_empty() && !s.necrosis.is_empty() && !s.contralateral.is_empty());
    // necrosis sits inside the CE ellipse and contralateral is left-right mirrored
    let w = s.width();
    for (r, c) in s.aoi().pixels() {
        assert!(s.brain.get(r, c));
        assert!(!s.aoi().get(r, w - 1 - c));
    }
}

#[test]
fn planted_prevalence_matches_target() {
    let s = generate(&PhantomConfig::default()).unwrap();
    for g in &PhantomConfig::default().genes {
        let t = s.truth(&g.name).unwrap();
        let aoi = s.aoi();
        let altered = aoi.pixels().filter(|&(r, c)| t.get(r, c) == 2.0).count();
        let frac = altered as f64 / aoi.count() as f64;
        assert!((frac - g.prevalence).abs() < 0.1, "{} {}", g.name, frac);
    }
}

#[test]
fn noiseless_stack_still_has_texture() {
    let s = generate(&PhantomConfig { noise: 0.0, ..small() }).unwrap();
    let (r, c) = s.contralateral.pixels().find(|&(r, c)| s.valid_center(r, c)).unwrap();
    let w = extract_window(&s.channels[0], r, c).unwrap();
    let v = w.values();
    assert!(v.iter().any(|&x| x != v[0]));
}

#[test]
fn biopsy_postconditions() {
    let s = generate(&PhantomConfig::default()).unwrap();
    let opts = BiopsyOptions::default();
    let b = sample_biopsies(&s, "geneA", 30, &opts, 7).unwrap();
    assert_eq!(b.len(), 30);
    let t = s.truth("geneA").unwrap();
    for (i, x) in b.iter().enumerate() {
        assert!(s.aoi().get(x.row, x.col) && !s.necrosis.get(x.row, x.col));
        assert!(s.valid_center(x.row, x.col));
        assert_eq!(x.label.value() as f32, t.get(x.row, x.col));
        for y in &b[..i] {
            let d2 = (x.row as f64 - y.row as f64).powi(2) + (x.col as f64 - y.col as f64).powi(2);
            assert!(d2 >= 16.0);
        }
    }
    assert_eq!(b, sample_biopsies(&s, "geneA", 30, &opts, 7).unwrap());
    assert_eq!(sample_biopsies(&s, "geneA", 1, &opts, 3).unwrap().len(), 1);
}

#[test]
fn biopsy_purity_option() {
    let s = generate(&PhantomConfig::default()).unwrap();
    let opts = BiopsyOptions { min_separation: 4.0, min_purity: Some(1.0) };
    let t = s.truth("geneA").unwrap();
    for x in sample_biopsies(&s, "geneA", 20, &opts, 11).unwrap() {
        for r in x.row - 4..x.row + 4 {
            for c in x.col - 4..x.col + 4 {
                assert_eq!(t.get(r, c), t.get(x.row, x.col));
            }
        }
    }
}

#[test]
fn oversized_separation_fails() {
    let s = generate(&small()).unwrap();
    let opts = BiopsyOptions { min_separation: 1000.0, min_purity: None };
    assert!(matches!(sample_biopsies(&s, "geneA", 2, &opts, 1), Err(PhantomError::Placement { placed: 1, .. })));
    assert_eq!(sample_biopsies(&s, "nope", 2, &opts, 1), Err(PhantomError::UnknownGene("nope".into())));
}

#[test]
fn label_ratio_tracks_prevalence() {
    let s = generate(&PhantomConfig::default()).unwrap();
    let opts = BiopsyOptions { min_separation: 1.0, min_purity: None };
    let b = sample_biopsies(&s, "geneA", 200, &opts, 21).unwrap();
    let frac = b.iter().filter(|x| x.label == ClassLabelAlias::Altered).count() as f64 / 200.0;
    assert!((frac - 0.4).abs() <= 0.1, "{frac}");
}

use crate::wso::ClassLabel as ClassLabelAlias;

#[test]
fn unlabeled_is_balanced() {
    let s = generate(&PhantomConfig::default()).unwrap();
    let u = sample_unlabeled(&s, 4, 3).unwrap();
    assert_eq!(u.len(), 4);
    assert!(u[..2].iter().all(|c| s.ce.get(c.row, c.col)));
    assert!(u[2..].iter().all(|c| s.ne.get(c.row, c.col)));
    assert!(u.iter().all(|c| !s.necrosis.get(c.row, c.col) && s.valid_center(c.row, c.col)));
    assert!(sample_unlabeled(&s, 0, 3).unwrap().is_empty());
    assert_eq!(sample_unlabeled(&s, 3, 3), Err(PhantomError::OddCount(3)));
}

#[test]
fn necrosis_covering_ce_blocks_unlabeled() {
    let mut s = generate(&PhantomConfig::default()).unwrap();
    s.necrosis = s.necrosis.union(&s.ce);
    assert!(matches!(sample_unlabeled(&s, 4, 1), Err(PhantomError::InsufficientRegion { region: "CE", .. })));
}

#[test]
fn normal_samples_are_contralateral() {
    let s = generate(&PhantomConfig::default()).unwrap();
    let n = sample_normal(&s, 25, 4).unwrap();
    assert_eq!(n.len(), 25);
    assert!(n.iter().all(|c| s.contralateral.get(c.row, c.col) && s.valid_center(c.row, c.col)));
    assert_eq!(n, sample_normal(&s, 25, 4).unwrap());
}
