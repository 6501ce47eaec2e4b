//! Model file: `key = value` lines in a fixed order.
//!
//! ```text
//! format_version = 1
//! kernel = gaussian
//! gamma = 0.0035
//! ...
//! support_count = 2
//! sv = <coef>,<x_1>,...,<x_d>
//! ```
//!
//! Support rows hold standardized samples; background rows hold raw ones.

use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, sha256_hex, write_bytes, IoError};
use crate::features::FeatureLayout;
use crate::kernels::{KernelSpec, Standardizer};
use crate::qp::KktReport;
use crate::wso::{ModelParts, TrainedModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TrainedModel,
    pub gene: String,
    pub contrasts: Vec<String>,
    /// Digest of the configuration the model was trained under.
    pub config_digest: String,
}

impl ModelFile {
    /// Digest of the feature manifest implied by the contrasts.
    pub fn layout_digest(&self) -> String {
        layout_digest(&self.contrasts)
    }

    pub fn to_text(&self) -> String {
        let p = self.model.to_parts();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("format_version", MODEL_FORMAT_VERSION.to_string());
        match p.kernel {
            KernelSpec::Linear => kv("kernel", "linear".into()),
            KernelSpec::Gaussian { gamma } => {
                kv("kernel", "gaussian".into());
                kv("gamma", gamma.to_string());
            }
        }
        kv("c1", p.c1.to_string());
        kv("c2", p.c2.to_string());
        kv("b0", p.b0.to_string());
        kv("b1", p.b1.to_string());
        kv("seed", p.seed.to_string());
        kv("objective", p.objective.to_string());
        kv("kkt_stationarity", p.kkt.stationarity_residual.to_string());
        kv("kkt_primal", p.kkt.primal_feas_residual.to_string());
        kv("kkt_dual", p.kkt.dual_feas_residual.to_string());
        kv("kkt_complementarity", p.kkt.complementarity_residual.to_string());
        kv("kkt_iterations", p.kkt.iterations.to_string());
        kv("gene", self.gene.clone());
        kv("contrasts", self.contrasts.join(","));
        kv("layout_digest", self.layout_digest());
        kv("config_digest", self.config_digest.clone());
        kv("dim", p.standardizer.dim().to_string());
        kv("means", join(&p.standardizer.means));
        kv("stds", join(&p.standardizer.stds));
        kv("support_count", p.support.len().to_string());
        for (x, c) in p.support.iter().zip(&p.coef) {
            kv("sv", format!("{c},{}", join(x)));
        }
        kv("background_count", p.background.len().to_string());
        for x in &p.background {
            kv("bg", join(x));
        }
        s
    }

    pub fn from_text(context: &str, text: &str) -> Result<Self, IoError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        let mut next = |key: &str| -> Result<(usize, String), IoError> {
            let (n, line) = lines.next().ok_or_else(|| IoError::parse(context, text.lines().count() + 1, format!("missing {key}")))?;
            let (k, v) = line.split_once(" = ").ok_or_else(|| IoError::parse(context, n, "expected key = value"))?;
            if k != key {
                return Err(IoError::parse(context, n, format!("expected key {key:?}, found {k:?}")));
            }
            Ok((n, v.to_string()))
        };
        fn num<T: std::str::FromStr>(context: &str, (n, v): (usize, String)) -> Result<T, IoError> {
            v.parse().map_err(|_| IoError::parse(context, n, format!("bad number {v:?}")))
        }
        let (n, version) = next("format_version")?;
        if version != MODEL_FORMAT_VERSION.to_string() {
            return Err(IoError::Schema { context: format!("{context} line {n}"), expected: MODEL_FORMAT_VERSION.to_string(), found: version });
        }
        let (n, kernel_name) = next("kernel")?;
        let kernel = match kernel_name.as_str() {
            "linear" => KernelSpec::Linear,
            "gaussian" => {
                let gamma: f64 = num(context, next("gamma")?)?;
                KernelSpec::gaussian(gamma).map_err(|e| IoError::parse(context, n + 1, e.to_string()))?
            }
            other => return Err(IoError::parse(context, n, format!("unknown kernel {other:?}"))),
        };
        let c1 = num(context, next("c1")?)?;
        let c2 = num(context, next("c2")?)?;
        let b0 = num(context, next("b0")?)?;
        let b1 = num(context, next("b1")?)?;
        let seed = num(context, next("seed")?)?;
        let objective = num(context, next("objective")?)?;
        let kkt = KktReport {
            stationarity_residual: num(context, next("kkt_stationarity")?)?,
            primal_feas_residual: num(context, next("kkt_primal")?)?,
            dual_feas_residual: num(context, next("kkt_dual")?)?,
            complementarity_residual: num(context, next("kkt_complementarity")?)?,
            iterations: num(context, next("kkt_iterations")?)?,
        };
        let (_, gene) = next("gene")?;
        let (_, contrasts) = next("contrasts")?;
        let contrasts: Vec<String> = contrasts.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect();
        let (n, digest) = next("layout_digest")?;
        if digest != layout_digest(&contrasts) {
            return Err(IoError::parse(context, n, "layout digest does not match the contrasts"));
        }
        let (_, config_digest) = next("config_digest")?;
        let dim: usize = num(context, next("dim")?)?;
        let means = floats(context, next("means")?, dim)?;
        let stds = floats(context, next("stds")?, dim)?;
        let count: usize = num(context, next("support_count")?)?;
        let mut support = Vec::with_capacity(count);
        let mut coef = Vec::with_capacity(count);
        for _ in 0..count {
            let mut row = floats(context, next("sv")?, dim + 1)?;
            coef.push(row.remove(0));
            support.push(row);
        }
        let count: usize = num(context, next("background_count")?)?;
        let background = (0..count).map(|_| floats(context, next("bg")?, dim)).collect::<Result<_, _>>()?;
        if let Some((n, _)) = lines.next() {
            return Err(IoError::parse(context, n, "trailing content"));
        }
        let model = TrainedModel::from_parts(ModelParts {
            kernel,
            c1,
            c2,
            standardizer: Standardizer { means, stds },
            support,
            coef,
            b0,
            b1,
            background,
            seed,
            kkt,
            objective,
        })
        .map_err(|e| IoError::Invalid(format!("{context}: {e}")))?;
        Ok(Self { model, gene, contrasts, config_digest })
    }
}

pub fn layout_digest(contrasts: &[String]) -> String {
    sha256_hex(FeatureLayout::new(contrasts.iter().cloned()).manifest().as_bytes())
}

fn join(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    parts.join(",")
}

fn floats(context: &str, (n, v): (usize, String), expected: usize) -> Result<Vec<f64>, IoError> {
    let out: Vec<f64> = if v.is_empty() {
        Vec::new()
    } else {
        v.split(',').map(|f| f.parse::<f64>().map_err(|_| IoError::parse(context, n, format!("bad number {f:?}")))).collect::<Result<_, _>>()?
    };
    if out.len() != expected {
        return Err(IoError::parse(context, n, format!("expected {expected} values, found {}", out.len())));
    }
    Ok(out)
}

pub fn write_model(path: &Path, m: &ModelFile) -> Result<(), IoError> {
    write_bytes(path, m.to_text().as_bytes())
}

pub fn read_model(path: &Path) -> Result<ModelFile, IoError> {
    ModelFile::from_text(&path.display().to_string(), &read_text(path)?)
}
