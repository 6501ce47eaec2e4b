//! Even (cosine) Gabor filter bank on a single window.

use super::window::{quantize, Window, WINDOW_LEN};
use super::WINDOW_SIZE;
use std::sync::OnceLock;

pub const SIGMAS: [f64; 2] = [0.4, 0.7];
pub const FREQUENCIES: [f64; 3] = [0.1, 0.3, 0.5];
pub const ORIENTATIONS: usize = 4;
pub const KERNEL_SIZE: usize = 7;
const RADIUS: usize = KERNEL_SIZE / 2;
const PADDED: usize = WINDOW_SIZE + 2 * RADIUS;

type Kernel = [f64; KERNEL_SIZE * KERNEL_SIZE];

/// `exp(-r^2 / 2 sigma^2) (cos(2 pi f x') - c)`, with `c` chosen so the
/// kernel sums to zero.
pub fn gabor_kernel(sigma: f64, frequency: f64, theta: f64) -> Kernel {
    let mut env = [0.0; KERNEL_SIZE * KERNEL_SIZE];
    let mut carrier = [0.0; KERNEL_SIZE * KERNEL_SIZE];
    let (s, c) = theta.sin_cos();
    for y in 0..KERNEL_SIZE {
        for x in 0..KERNEL_SIZE {
            let (fx, fy) = (x as f64 - RADIUS as f64, y as f64 - RADIUS as f64);
            let xr = fx * c + fy * s;
            env[y * KERNEL_SIZE + x] = (-(fx * fx + fy * fy) / (2.0 * sigma * sigma)).exp();
            carrier[y * KERNEL_SIZE + x] = (2.0 * std::f64::consts::PI * frequency * xr).cos();
        }
    }
    let dc = env.iter().zip(&carrier).map(|(e, k)| e * k).sum::<f64>() / env.iter().sum::<f64>();
    let mut k = [0.0; KERNEL_SIZE * KERNEL_SIZE];
    for i in 0..k.len() {
        k[i] = env[i] * (carrier[i] - dc);
    }
    k
}

/// Bank indexed `[(sigma, frequency)][orientation]`, sigma-major.
pub fn bank() -> &'static [[Kernel; ORIENTATIONS]; 6] {
    static BANK: OnceLock<[[Kernel; ORIENTATIONS]; 6]> = OnceLock::new();
    BANK.get_or_init(|| {
        let mut b = [[[0.0; KERNEL_SIZE * KERNEL_SIZE]; ORIENTATIONS]; 6];
        for (si, &s) in SIGMAS.iter().enumerate() {
            for (fi, &f) in FREQUENCIES.iter().enumerate() {
                for o in 0..ORIENTATIONS {
                    let theta = o as f64 * std::f64::consts::PI / ORIENTATIONS as f64;
                    b[si * FREQUENCIES.len() + fi][o] = gabor_kernel(s, f, theta);
                }
            }
        }
        b
    })
}

/// Half-sample symmetric reflection: -1 -> 0, 8 -> 7.
fn reflect(i: isize) -> usize {
    let n = WINDOW_SIZE as isize;
    let r = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - 1 - i
    } else {
        i
    };
    r as usize
}

/// Filter bank applied to raw window values (no quantization): mean and
/// standard deviation of the orientation-averaged magnitude, per
/// `(sigma, frequency)`.
pub fn gabor_response_features(values: &[f64; WINDOW_LEN]) -> [f64; 12] {
    let mut pad = [0.0; PADDED * PADDED];
    for r in 0..PADDED {
        let sr = reflect(r as isize - RADIUS as isize);
        for c in 0..PADDED {
            pad[r * PADDED + c] = values[sr * WINDOW_SIZE + reflect(c as isize - RADIUS as isize)];
        }
    }
    let mut out = [0.0; 12];
    for (b, kernels) in bank().iter().enumerate() {
        let mut mag = [0.0; WINDOW_LEN];
        for k in kernels {
            for r in 0..WINDOW_SIZE {
                for c in 0..WINDOW_SIZE {
                    let mut acc = 0.0;
                    for y in 0..KERNEL_SIZE {
                        let row = &pad[(r + y) * PADDED + c..(r + y) * PADDED + c + KERNEL_SIZE];
                        let krow = &k[y * KERNEL_SIZE..(y + 1) * KERNEL_SIZE];
                        for x in 0..KERNEL_SIZE {
                            acc += row[x] * krow[x];
                        }
                    }
                    mag[r * WINDOW_SIZE + c] += acc.abs() / ORIENTATIONS as f64;
                }
            }
        }
        let mean = mag.iter().sum::<f64>() / WINDOW_LEN as f64;
        let var = mag.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / WINDOW_LEN as f64;
        out[2 * b] = mean;
        out[2 * b + 1] = var.sqrt();
    }
    out
}

/// Gabor features of the quantized window.
pub fn gabor_features(w: &Window) -> [f64; 12] {
    gabor_response_features(quantize(w).to_window().values())
}
