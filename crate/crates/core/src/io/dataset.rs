//! Dataset and centers CSVs.
//!
//! ```text
//! # schema: wso-dataset/1
//! # contrasts,T1+C,T2,MD,FA,rCBV
//! role,class,row,col,f000,...,f279
//! biopsy,2,40,31,0.25,...
//! ```

use std::fmt::Write as _;

use super::{expect_schema, IoError};
use crate::harness::Dataset;
use crate::wso::ClassLabel;

const DATASET_SCHEMA: &str = "wso-dataset/1";
const CENTERS_SCHEMA: &str = "wso-centers/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Biopsy,
    Unlabeled,
    Normal,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Biopsy => "biopsy",
            Role::Unlabeled => "unlabeled",
            Role::Normal => "normal",
        }
    }

    fn parse(s: &str) -> Option<Role> {
        match s {
            "biopsy" => Some(Role::Biopsy),
            "unlabeled" => Some(Role::Unlabeled),
            "normal" => Some(Role::Normal),
            _ => None,
        }
    }
}

fn class_str(c: Option<ClassLabel>) -> String {
    c.map_or("NA".to_string(), |c| c.value().to_string())
}

/// Parses and checks a role/class pair: biopsies are 1 or 2, unlabeled
/// samples NA, normal samples 0.
fn parse_role_class(ctx: &str, n: usize, role: &str, class: &str) -> Result<(Role, Option<ClassLabel>), IoError> {
    let role = Role::parse(role).ok_or_else(|| IoError::parse(ctx, n, format!("unknown role {role:?}")))?;
    let class = match class {
        "NA" => None,
        s => Some(s.parse::<u8>().ok().and_then(ClassLabel::from_value).ok_or_else(|| IoError::parse(ctx, n, format!("unknown class {s:?}")))?),
    };
    let ok = match role {
        Role::Biopsy => matches!(class, Some(ClassLabel::NonAltered | ClassLabel::Altered)),
        Role::Unlabeled => class.is_none(),
        Role::Normal => class == Some(ClassLabel::Normal),
    };
    if !ok {
        return Err(IoError::parse(ctx, n, format!("class {} is not valid for role {}", class_str(class), role.as_str())));
    }
    Ok((role, class))
}

fn parse_usize(ctx: &str, n: usize, s: &str) -> Result<usize, IoError> {
    s.parse().map_err(|_| IoError::parse(ctx, n, format!("bad coordinate {s:?}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub role: Role,
    pub class: Option<ClassLabel>,
    pub row: usize,
    pub col: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetFile {
    pub contrasts: Vec<String>,
    pub dim: usize,
    pub rows: Vec<DatasetRow>,
}

impl DatasetFile {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema: {DATASET_SCHEMA}\n# contrasts,{}\nrole,class,row,col", self.contrasts.join(","));
        for i in 0..self.dim {
            let _ = write!(s, ",f{i:03}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{},{},{}", r.role.as_str(), class_str(r.class), r.row, r.col);
            for v in &r.features {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(context: &str, text: &str) -> Result<Self, IoError> {
        expect_schema(context, text, DATASET_SCHEMA)?;
        let mut contrasts = Vec::new();
        let mut dim = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let n = i + 1;
            if let Some(rest) = line.strip_prefix("# contrasts,") {
                contrasts = rest.split(',').map(str::to_string).collect();
                continue;
            }
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let Some(d) = dim else {
                if fields.len() < 4 || fields[..4] != ["role", "class", "row", "col"] {
                    return Err(IoError::parse(context, n, "expected header role,class,row,col,f000,..."));
                }
                for (k, f) in fields[4..].iter().enumerate() {
                    if *f != format!("f{k:03}") {
                        return Err(IoError::parse(context, n, format!("unexpected column {f:?}")));
                    }
                }
                dim = Some(fields.len() - 4);
                continue;
            };
            if fields.len() != d + 4 {
                return Err(IoError::parse(context, n, format!("expected {} fields, found {}", d + 4, fields.len())));
            }
            let (role, class) = parse_role_class(context, n, fields[0], fields[1])?;
            let features = fields[4..]
                .iter()
                .map(|f| match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(IoError::parse(context, n, format!("bad feature value {f:?}"))),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(DatasetRow { role, class, row: parse_usize(context, n, fields[2])?, col: parse_usize(context, n, fields[3])?, features });
        }
        let dim = dim.ok_or_else(|| IoError::parse(context, text.lines().count(), "missing header row"))?;
        Ok(Self { contrasts, dim, rows })
    }

    /// Splits rows by role into the harness representation.
    pub fn to_dataset(&self) -> Result<Dataset, IoError> {
        let mut biopsies = Vec::new();
        let mut labels = Vec::new();
        let mut unlabeled = Vec::new();
        let mut normal = Vec::new();
        for r in &self.rows {
            match r.role {
                Role::Biopsy => {
                    biopsies.push(r.features.clone());
                    labels.push(r.class.expect("checked on parse"));
                }
                Role::Unlabeled => unlabeled.push(r.features.clone()),
                Role::Normal => normal.push(r.features.clone()),
            }
        }
        Dataset::new(biopsies, labels, unlabeled, normal).map_err(|e| IoError::Invalid(e.to_string()))
    }
}

/// Sample centers with role and class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Centers {
    pub rows: Vec<(Role, Option<ClassLabel>, usize, usize)>,
}

impl Centers {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema: {CENTERS_SCHEMA}\nrole,class,row,col\n");
        for (role, class, r, c) in &self.rows {
            let _ = writeln!(s, "{},{},{r},{c}", role.as_str(), class_str(*class));
        }
        s
    }

    pub fn from_csv(context: &str, text: &str) -> Result<Self, IoError> {
        expect_schema(context, text, CENTERS_SCHEMA)?;
        let mut rows = Vec::new();
        let mut header = false;
        for (i, line) in text.lines().enumerate().skip(1) {
            let n = i + 1;
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            if !header {
                if line != "role,class,row,col" {
                    return Err(IoError::parse(context, n, "expected header role,class,row,col"));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(IoError::parse(context, n, format!("expected 4 fields, found {}", f.len())));
            }
            let (role, class) = parse_role_class(context, n, f[0], f[1])?;
            rows.push((role, class, parse_usize(context, n, f[2])?, parse_usize(context, n, f[3])?));
        }
        Ok(Self { rows })
    }
}
