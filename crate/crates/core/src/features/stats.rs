use super::window::{quantize, QuantizedWindow, Window, WINDOW_LEN};

pub const STAT_NAMES: [&str; 18] = [
    "mean",
    "std",
    "energy",
    "total_energy",
    "entropy",
    "minimum",
    "p10",
    "p90",
    "maximum",
    "median",
    "iqr",
    "range",
    "mad",
    "rmad",
    "rms",
    "skewness",
    "kurtosis",
    "uniformity",
];

/// Linear interpolation between order statistics at index `p (n - 1)`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Shannon entropy (bits) and uniformity of the 256-bin level histogram.
pub fn histogram_entropy_uniformity(q: &QuantizedWindow) -> (f64, f64) {
    let mut counts = [0u32; 256];
    for &l in q.levels() {
        counts[l as usize] += 1;
    }
    let n = WINDOW_LEN as f64;
    let mut entropy = 0.0;
    let mut uniformity = 0.0;
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        entropy -= p * p.log2();
        uniformity += p * p;
    }
    (entropy, uniformity)
}

pub fn statistical_features(w: &Window) -> [f64; 18] {
    statistical_features_with(w, &quantize(w))
}

pub(crate) fn statistical_features_with(w: &Window, q: &QuantizedWindow) -> [f64; 18] {
    let x = w.values();
    let n = WINDOW_LEN as f64;
    let mut sorted = *x;
    sorted.sort_by(f64::total_cmp);

    let mean = x.iter().sum::<f64>() / n;
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let (mut m2, mut m3, mut m4, mut mad) = (0.0, 0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        mad += d.abs();
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;

    let min = sorted[0];
    let max = sorted[WINDOW_LEN - 1];
    let p10 = percentile(&sorted, 0.10);
    let p90 = percentile(&sorted, 0.90);
    let median = percentile(&sorted, 0.5);
    let iqr = percentile(&sorted, 0.75) - percentile(&sorted, 0.25);

    let inner: Vec<f64> = sorted.iter().copied().filter(|&v| v >= p10 && v <= p90).collect();
    let inner_mean = inner.iter().sum::<f64>() / inner.len() as f64;
    let rmad = inner.iter().map(|v| (v - inner_mean).abs()).sum::<f64>() / inner.len() as f64;

    let (skewness, kurtosis) = if max > min && m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2)) } else { (0.0, 0.0) };
    let (entropy, uniformity) = histogram_entropy_uniformity(q);

    [
        mean,
        m2.sqrt(),
        energy,
        energy,
        entropy,
        min,
        p10,
        p90,
        max,
        median,
        iqr,
        max - min,
        mad,
        rmad,
        (energy / n).sqrt(),
        skewness,
        kurtosis,
        uniformity,
    ]
}
