//! Stride-1 sliding-window prediction maps over the tumoral AOI.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{features_from_planes, window_fits, FEATURES_PER_CONTRAST};
use crate::phantom::{ContrastStack, Plane};
use crate::wso::{ClassLabel, TrainedModel};

/// Raw label of pixels that were not classified.
pub const OUTSIDE: i8 = -1;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("model expects {expected} features but the stack yields {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("maps differ in geometry")]
    Geometry,
    #[error("map has no classified pixels")]
    Empty,
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MapError + '_ {
    move |source| MapError::Io { path: path.display().to_string(), source }
}

/// Per-pixel labels: [`OUTSIDE`] or a class value 0, 1, 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionMap {
    width: usize,
    height: usize,
    labels: Vec<i8>,
    pub gene: String,
    pub model_digest: String,
}

/// Fractions over classified pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportions {
    pub altered: f64,
    pub non_altered: f64,
    pub class0: f64,
    pub classified: usize,
}

impl Proportions {
    /// Altered share among tumoral (class 1 or 2) pixels, if any.
    pub fn tumoral_altered(&self) -> Option<f64> {
        let t = self.altered + self.non_altered;
        (t > 0.0).then(|| self.altered / t)
    }
}

impl PredictionMap {
    pub fn outside(width: usize, height: usize, gene: impl Into<String>, model_digest: impl Into<String>) -> Self {
        Self { width, height, labels: vec![OUTSIDE; width * height], gene: gene.into(), model_digest: model_digest.into() }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<i8>, gene: impl Into<String>) -> Option<Self> {
        let ok = labels.len() == width * height && labels.iter().all(|&v| (-1..=2).contains(&v));
        ok.then(|| Self { width, height, labels, gene: gene.into(), model_digest: String::new() })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn raw(&self, row: usize, col: usize) -> i8 {
        self.labels[row * self.width + col]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<ClassLabel> {
        u8::try_from(self.raw(row, col)).ok().and_then(ClassLabel::from_value)
    }

    pub fn set(&mut self, row: usize, col: usize, label: Option<ClassLabel>) {
        self.labels[row * self.width + col] = label.map_or(OUTSIDE, |l| l.value() as i8);
    }

    pub fn same_geometry(&self, other: &PredictionMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn classified(&self) -> usize {
        self.labels.iter().filter(|&&v| v != OUTSIDE).count()
    }

    pub fn proportions(&self) -> Result<Proportions, MapError> {
        let mut counts = [0usize; 3];
        for &v in &self.labels {
            if v >= 0 {
                counts[v as usize] += 1;
            }
        }
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(MapError::Empty);
        }
        let nf = n as f64;
        Ok(Proportions {
            altered: counts[2] as f64 / nf,
            non_altered: counts[1] as f64 / nf,
            class0: counts[0] as f64 / nf,
            classified: n,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema: wso-map/1\n");
        let _ = writeln!(s, "# gene,{}", self.gene);
        let _ = writeln!(s, "# size,{},{}", self.width, self.height);
        write_rows(&mut s, &self.labels, self.width);
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, MapError> {
        let (meta, width, height, labels) = parse_label_csv(text, "wso-map/1", -1, 2)?;
        let gene = meta.iter().find(|(k, _)| k == "gene").map(|(_, v)| v.clone()).unwrap_or_default();
        Ok(Self { width, height, labels, gene, model_digest: String::new() })
    }

    /// 8-bit grayscale bytes: outside 0, class 0 64, class 1 128, class 2 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        pgm(self.width, self.height, self.labels.iter().map(|&v| match v {
            0 => 64,
            1 => 128,
            2 => 255,
            _ => 0,
        }))
    }

    /// Writes `<stem>.pgm` and `<stem>.csv`.
    pub fn render(&self, stem: &Path) -> Result<(), MapError> {
        write_pair(stem, &self.to_pgm(), &self.to_csv())
    }

    pub fn summary_text(&self, seed: u64) -> Result<String, MapError> {
        let p = self.proportions()?;
        Ok(format!(
            "{{\n  \"gene\": \"{}\",\n  \"altered\": {},\n  \"non_altered\": {},\n  \"class0\": {},\n  \"classified\": {},\n  \"model_digest\": \"{}\",\n  \"seed\": {}\n}}\n",
            self.gene, p.altered, p.non_altered, p.class0, p.classified, self.model_digest, seed
        ))
    }
}

/// Joint categories: [`OUTSIDE`], none 0, A only 1, B only 2, both 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointMap {
    width: usize,
    height: usize,
    cells: Vec<i8>,
    pub genes: (String, String),
}

pub const JOINT_NONE: i8 = 0;
pub const JOINT_A: i8 = 1;
pub const JOINT_B: i8 = 2;
pub const JOINT_BOTH: i8 = 3;

impl JointMap {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn cells(&self) -> &[i8] {
        &self.cells
    }
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.cells[row * self.width + col]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema: wso-joint/1\n");
        let _ = writeln!(s, "# genes,{},{}", self.genes.0, self.genes.1);
        let _ = writeln!(s, "# size,{},{}", self.width, self.height);
        write_rows(&mut s, &self.cells, self.width);
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, MapError> {
        let (meta, width, height, cells) = parse_label_csv(text, "wso-joint/1", -1, 3)?;
        let genes = meta
            .iter()
            .find(|(k, _)| k == "genes")
            .and_then(|(_, v)| v.split_once(','))
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .unwrap_or_default();
        Ok(Self { width, height, cells, genes })
    }

    /// outside 0, none 32, A 128, B 192, both 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        pgm(self.width, self.height, self.cells.iter().map(|&v| match v {
            JOINT_NONE => 32,
            JOINT_A => 128,
            JOINT_B => 192,
            JOINT_BOTH => 255,
            _ => 0,
        }))
    }

    pub fn render(&self, stem: &Path) -> Result<(), MapError> {
        write_pair(stem, &self.to_pgm(), &self.to_csv())
    }
}

/// Combines two maps pixelwise. A pixel that is outside or class 0 in
/// either map is outside in the result.
pub fn joint_map(a: &PredictionMap, b: &PredictionMap) -> Result<JointMap, MapError> {
    if !a.same_geometry(b) {
        return Err(MapError::Geometry);
    }
    let cells = a
        .labels
        .iter()
        .zip(&b.labels)
        .map(|(&x, &y)| match (x, y) {
            (1 | 2, 1 | 2) => (x == 2) as i8 * JOINT_A + (y == 2) as i8 * JOINT_B,
            _ => OUTSIDE,
        })
        .collect();
    Ok(JointMap { width: a.width, height: a.height, cells, genes: (a.gene.clone(), b.gene.clone()) })
}

pub fn proportions(map: &PredictionMap) -> Result<Proportions, MapError> {
    map.proportions()
}

/// Pixels that get a label: AOI centers whose window lies inside the image.
pub fn mappable(stack: &ContrastStack, row: usize, col: usize) -> bool {
    window_fits(stack.width(), stack.height(), row, col) && (stack.ce.get(row, col) || stack.ne.get(row, col))
}

/// Classifies every mappable pixel. `jobs` caps the worker count; the
/// result does not depend on it.
pub fn predict_map(model: &TrainedModel, stack: &ContrastStack, gene: &str, jobs: usize) -> Result<PredictionMap, MapError> {
    let got = stack.channels().len() * FEATURES_PER_CONTRAST;
    if model.dim() != got {
        return Err(MapError::ChannelMismatch { expected: model.dim(), got });
    }
    let (w, h) = (stack.width(), stack.height());
    let planes: Vec<&Plane> = stack.channels().iter().collect();
    let row_labels = |r: usize| -> Vec<i8> {
        (0..w)
            .map(|c| {
                if !mappable(stack, r, c) {
                    return OUTSIDE;
                }
                let x = features_from_planes(&planes, r, c).expect("window checked");
                model.classify_value(model.decision_value(&x).expect("dimension checked")).value() as i8
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| MapError::Pool(e.to_string()))?;
    let rows: Vec<Vec<i8>> = pool.install(|| (0..h).into_par_iter().map(row_labels).collect());
    let mut map = PredictionMap::outside(w, h, gene, "");
    map.labels = rows.concat();
    Ok(map)
}

/// Fraction of classified pixels matching `truth` (1 or 2), skipping pixels
/// within `band` (Chebyshev distance) of a change in the truth plane,
/// including the AOI edge.
pub fn truth_agreement(map: &PredictionMap, truth: &Plane, band: usize) -> Option<f64> {
    let (w, h) = (map.width, map.height);
    if truth.width() != w || truth.height() != h {
        return None;
    }
    let (mut hit, mut total) = (0usize, 0usize);
    for r in 0..h {
        for c in 0..w {
            let v = map.raw(r, c);
            let t = truth.get(r, c);
            if v == OUTSIDE || t == 0.0 {
                continue;
            }
            let interior = r >= band
                && c >= band
                && r + band < h
                && c + band < w
                && (r - band..=r + band).all(|rr| (c - band..=c + band).all(|cc| truth.get(rr, cc) == t));
            if interior {
                total += 1;
                hit += (v as f32 == t) as usize;
            }
        }
    }
    (total > 0).then(|| hit as f64 / total as f64)
}

fn write_rows(s: &mut String, labels: &[i8], width: usize) {
    for row in labels.chunks(width.max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
}

type Parsed = (Vec<(String, String)>, usize, usize, Vec<i8>);

fn parse_label_csv(text: &str, schema: &str, min: i8, max: i8) -> Result<Parsed, MapError> {
    let perr = |line: usize, msg: String| MapError::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == format!("# schema: {schema}") => {}
        Some((n, l)) => return Err(perr(n, format!("expected schema {schema}, found {l:?}"))),
        None => return Err(perr(1, "empty file".into())),
    }
    let mut meta = Vec::new();
    let mut size = None;
    let mut labels = Vec::new();
    let mut rows = 0;
    for (n, line) in lines {
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once(',').ok_or_else(|| perr(n, "malformed metadata".into()))?;
            if k == "size" {
                let (a, b) = v.split_once(',').ok_or_else(|| perr(n, "malformed size".into()))?;
                let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| perr(n, e.to_string()));
                size = Some((parse(a)?, parse(b)?));
            }
            meta.push((k.to_string(), v.to_string()));
            continue;
        }
        let (w, _) = size.ok_or_else(|| perr(n, "size must precede the label rows".into()))?;
        let row: Vec<i8> = line
            .split(',')
            .map(|f| match f.trim().parse::<i8>() {
                Ok(v) if (min..=max).contains(&v) => Ok(v),
                _ => Err(perr(n, format!("invalid label {f:?}"))),
            })
            .collect::<Result<_, _>>()?;
        if row.len() != w {
            return Err(perr(n, format!("expected {w} labels, found {}", row.len())));
        }
        labels.extend(row);
        rows += 1;
    }
    let (w, h) = size.ok_or_else(|| perr(1, "missing size".into()))?;
    if rows != h {
        return Err(perr(text.lines().count(), format!("expected {h} rows, found {rows}")));
    }
    Ok((meta, w, h, labels))
}

fn pgm(width: usize, height: usize, bytes: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(bytes);
    out
}

fn write_pair(stem: &Path, pgm: &[u8], csv: &str) -> Result<(), MapError> {
    let p = stem.with_extension("pgm");
    std::fs::write(&p, pgm).map_err(io_err(&p))?;
    let c = stem.with_extension("csv");
    std::fs::write(&c, csv).map_err(io_err(&c))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(w: usize, h: usize, labels: &[i8]) -> PredictionMap {
        PredictionMap::from_labels(w, h, labels.to_vec(), "g").unwrap()
    }

    #[test]
    fn empty_map_has_no_proportions() {
        let m = PredictionMap::outside(4, 4, "g", "");
        assert!(matches!(m.proportions(), Err(MapError::Empty)));
    }

    #[test]
    fn proportion_examples() {
        let p = map(2, 1, &[2, 2]).proportions().unwrap();
        assert_eq!((p.altered, p.non_altered, p.class0), (1.0, 0.0, 0.0));
        let p = map(2, 2, &[1, 2, -1, 1]).proportions().unwrap();
        assert_eq!(p.classified, 3);
        let p = map(2, 2, &[1, 2, 2, 1]).proportions().unwrap();
        assert_eq!((p.altered, p.non_altered, p.class0), (0.5, 0.5, 0.0));
    }

    #[test]
    fn joint_truth_table() {
        let a = map(3, 3, &[2, 2, 1, 1, 0, -1, 2, 1, 2]);
        let b = map(3, 3, &[2, 1, 2, 1, 2, 2, -1, 0, 2]);
        let j = joint_map(&a, &b).unwrap();
        assert_eq!(j.cells(), &[3, 1, 2, 0, -1, -1, -1, -1, 3]);
        let all_non = map(3, 3, &[1; 9]);
        assert!(joint_map(&a, &all_non).unwrap().cells().iter().all(|&v| v == OUTSIDE || v == JOINT_NONE || v == JOINT_A));
        let all_alt = map(2, 1, &[2, 2]);
        assert_eq!(joint_map(&all_alt, &all_alt).unwrap().cells(), &[3, 3]);
        assert!(matches!(joint_map(&a, &all_alt), Err(MapError::Geometry)));
    }

    #[test]
    fn pgm_palette() {
        let bytes = map(2, 2, &[2; 4]).to_pgm();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[255; 4]);
        let payload = map(4, 1, &[-1, 0, 1, 2]).to_pgm();
        let mut tail = payload[payload.len() - 4..].to_vec();
        tail.dedup();
        assert_eq!(tail.len(), 4);
        let a = map(2, 2, &[2, 2, 1, 1]);
        let b = map(2, 2, &[2, 1, 2, 1]);
        let j = joint_map(&a, &b).unwrap().to_pgm();
        assert_eq!(&j[j.len() - 4..], &[255, 128, 192, 32]);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(PredictionMap::from_csv("# schema: wso-map/2\n").is_err());
        assert!(PredictionMap::from_csv("# schema: wso-map/1\n# size,2,1\n1,7\n").is_err());
        assert!(PredictionMap::from_csv("# schema: wso-map/1\n# size,2,2\n1,1\n").is_err());
        let j = joint_map(&map(1, 1, &[2]), &map(1, 1, &[1])).unwrap();
        assert_eq!(JointMap::from_csv(&j.to_csv()).unwrap(), j);
    }

    #[test]
    fn agreement_skips_band() {
        let truth = Plane::from_fn(6, 6, |_, c| if c < 3 { 1.0 } else { 2.0 });
        let m = map(6, 6, &[1; 36]);
        assert_eq!(truth_agreement(&m, &truth, 0), Some(0.5));
        // every pixel is within one column of the edge of its class
        assert_eq!(truth_agreement(&m, &truth, 2), None);
    }

    proptest! {
        #[test]
        fn csv_round_trip_and_counts(w in 1usize..8, h in 1usize..8, seed in proptest::collection::vec(-1i8..3, 64)) {
            let labels: Vec<i8> = seed[..w * h].to_vec();
            let m = map(w, h, &labels);
            prop_assert_eq!(&PredictionMap::from_csv(&m.to_csv()).unwrap(), &m);
            let count = |v: i8| labels.iter().filter(|&&x| x == v).count();
            let n = count(0) + count(1) + count(2);
            match m.proportions() {
                Ok(p) => {
                    prop_assert_eq!(p.classified, n);
                    prop_assert!((p.altered - count(2) as f64 / n as f64).abs() < 1e-15);
                    prop_assert!((p.altered + p.non_altered + p.class0 - 1.0).abs() <= 1e-12);
                }
                Err(_) => prop_assert_eq!(n, 0),
            }
        }
    }
}
