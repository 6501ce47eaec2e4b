use super::{FeatureError, WINDOW_SIZE};
use crate::phantom::Plane;

pub const WINDOW_LEN: usize = WINDOW_SIZE * WINDOW_SIZE;

/// Offset of the first window row/column relative to the center. An even
/// window has no middle pixel; the center sits at index 4 of rows 0..8.
pub const HALF: usize = WINDOW_SIZE / 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: [f64; WINDOW_LEN],
}

impl Window {
    pub fn new(values: [f64; WINDOW_LEN]) -> Result<Self, FeatureError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, FeatureError> {
        let mut values = [0.0; WINDOW_LEN];
        for r in 0..WINDOW_SIZE {
            for c in 0..WINDOW_SIZE {
                values[r * WINDOW_SIZE + c] = f(r, c);
            }
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64; WINDOW_LEN] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * WINDOW_SIZE + col]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedWindow {
    levels: [u8; WINDOW_LEN],
}

impl QuantizedWindow {
    pub fn from_levels(levels: [u8; WINDOW_LEN]) -> Self {
        Self { levels }
    }

    pub fn levels(&self) -> &[u8; WINDOW_LEN] {
        &self.levels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.levels[row * WINDOW_SIZE + col]
    }

    pub fn to_window(&self) -> Window {
        let mut values = [0.0; WINDOW_LEN];
        for (v, &l) in values.iter_mut().zip(&self.levels) {
            *v = l as f64;
        }
        Window { values }
    }
}

/// Min-max mapping onto `0..=255`, rounding half away from zero.
pub fn quantize(w: &Window) -> QuantizedWindow {
    let (lo, hi) = w.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut levels = [0u8; WINDOW_LEN];
    if hi > lo {
        let range = hi - lo;
        for (l, &v) in levels.iter_mut().zip(&w.values) {
            *l = (255.0 * (v - lo) / range).round().clamp(0.0, 255.0) as u8;
        }
    }
    QuantizedWindow { levels }
}

/// Whether the window around `(row, col)` lies inside a `width x height`
/// image.
pub fn window_fits(width: usize, height: usize, row: usize, col: usize) -> bool {
    row >= HALF && col >= HALF && row + WINDOW_SIZE - HALF <= height && col + WINDOW_SIZE - HALF <= width
}

/// Rows `row-4 ..= row+3` and columns `col-4 ..= col+3`, row-major.
pub fn extract_window(plane: &Plane, row: usize, col: usize) -> Result<Window, FeatureError> {
    let (w, h) = (plane.width(), plane.height());
    if !window_fits(w, h, row, col) {
        return Err(FeatureError::OutOfBounds { row, col, width: w, height: h });
    }
    let mut values = [0.0; WINDOW_LEN];
    let (r0, c0) = (row - HALF, col - HALF);
    for r in 0..WINDOW_SIZE {
        let src = &plane.data()[(r0 + r) * w + c0..(r0 + r) * w + c0 + WINDOW_SIZE];
        for (c, &v) in src.iter().enumerate() {
            values[r * WINDOW_SIZE + c] = v as f64;
        }
    }
    Window::new(values)
}
