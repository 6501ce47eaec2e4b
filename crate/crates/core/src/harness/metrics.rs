use super::HarnessError;
use crate::wso::ClassLabel;

/// Biopsy metrics with class 2 as the positive class. A rate whose
/// denominator is empty is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

pub fn metrics(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<Metrics, HarnessError> {
    if predicted.len() != truth.len() {
        return Err(HarnessError::LengthMismatch { predicted: predicted.len(), truth: truth.len() });
    }
    if truth.is_empty() {
        return Err(HarnessError::Empty("metrics input"));
    }
    let (mut tp, mut pos, mut tn, mut neg, mut correct) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        if p == t {
            correct += 1;
        }
        match t {
            ClassLabel::Altered => {
                pos += 1;
                tp += (p == t) as usize;
            }
            ClassLabel::NonAltered => {
                neg += 1;
                tn += (p == t) as usize;
            }
            ClassLabel::Normal => {}
        }
    }
    let rate = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(Metrics { accuracy: correct as f64 / truth.len() as f64, sensitivity: rate(tp, pos), specificity: rate(tn, neg) })
}

/// Mean and sample standard deviation; `None` for an empty input.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}
