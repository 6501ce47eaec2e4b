use std::collections::BTreeMap;
use std::path::Path;

use wso_core::explain::{self, Aggregation, ShapMode};
use wso_core::features::{feature_vector, window_fits};
use wso_core::harness::{self, CvConfig, Dataset};
use wso_core::io::{self, Centers, DatasetFile, DatasetRow, ModelFile, Role};
use wso_core::kernels::KernelSpec;
use wso_core::maps::{joint_map, predict_map, PredictionMap};
use wso_core::phantom::{self, BiopsyOptions, ContrastStack, PhantomConfig};
use wso_core::wso::{self as model, TrainingSet};
use wso_core::{ClassLabel, FeatureLayout, KernelChoice, SeedTree, TrainParams};

use crate::error::CliError;
use crate::{AggArg, CvArgs, ExplainArgs, ExtractArgs, KernelArg, MapArgs, ModeArg, ModelArgs, RoleArg, SampleArgs, SynthArgs, TrainArgs, TuneArgs};

const SYNTH_KEYS: [&str; 5] = ["width", "height", "seed", "noise", "texture"];

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// `provenance.txt` in `out`: command, resolved parameters and input
/// digests. Output paths are left out so re-runs elsewhere compare equal.
fn provenance(out: &Path, command: &str, params: &[(&str, String)], inputs: &[(&str, &Path)]) -> Result<(), CliError> {
    let mut entries = vec![("command".to_string(), command.to_string())];
    entries.extend(params.iter().map(|(k, v)| (k.to_string(), v.clone())));
    for (name, path) in inputs {
        entries.push((format!("input.{name}"), io::file_digest(path)?));
    }
    io::write_provenance(out, &entries)?;
    Ok(())
}

fn model_params(a: &ModelArgs) -> Vec<(&'static str, String)> {
    let kernel = match (a.kernel, a.gamma) {
        (KernelArg::Linear, _) => "linear".to_string(),
        (KernelArg::Gaussian, Some(g)) => format!("gaussian,gamma={g}"),
        (KernelArg::Gaussian, None) => "gaussian,median".to_string(),
    };
    vec![("kernel", kernel), ("seed", a.seed.to_string())]
}

fn train_params(a: &ModelArgs, c1: f64, c2: f64) -> Result<TrainParams, CliError> {
    if a.kernel == KernelArg::Linear && (a.gamma.is_some() || a.median) {
        return Err(CliError::Usage("--gamma and --median apply to the gaussian kernel only".into()));
    }
    let kernel = match (a.kernel, a.gamma) {
        (KernelArg::Linear, _) => KernelChoice::Linear,
        (KernelArg::Gaussian, Some(g)) => KernelChoice::Gaussian(g),
        (KernelArg::Gaussian, None) => KernelChoice::GaussianMedian,
    };
    if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
        return Err(CliError::Usage(format!("C1 and C2 must be positive, got {c1} and {c2}")));
    }
    Ok(TrainParams { kernel, seed: a.seed, ..TrainParams::default() }.with_c(c1, c2))
}

fn read_dataset(path: &Path) -> Result<(DatasetFile, Dataset), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file = DatasetFile::from_csv(&path.display().to_string(), &text)?;
    let ds = file.to_dataset()?;
    Ok((file, ds))
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = PhantomConfig::default();
    let mut inputs = Vec::new();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let map = io::parse_config(&path.display().to_string(), &text, &SYNTH_KEYS)?;
        let usage = |e: io::IoError| CliError::Usage(e.to_string());
        if let Some(v) = map.get("width").map_err(usage)? {
            cfg.width = v;
        }
        if let Some(v) = map.get("height").map_err(usage)? {
            cfg.height = v;
        }
        if let Some(v) = map.get("seed").map_err(usage)? {
            cfg.seed = v;
        }
        if let Some(v) = map.get("noise").map_err(usage)? {
            cfg.noise = v;
        }
        if let Some(v) = map.get("texture").map_err(usage)? {
            cfg.texture = v;
        }
        inputs.push(("config", path.as_path()));
    }
    cfg.validate()?;
    let stack = phantom::generate(&cfg)?;
    create_dir(&a.out)?;
    io::write_stack(&a.out, &stack)?;
    let resolved = format!(
        "width = {}\nheight = {}\nseed = {}\nnoise = {}\ntexture = {}\n",
        cfg.width, cfg.height, cfg.seed, cfg.noise, cfg.texture
    );
    write_text(&a.out.join("synth.config"), &resolved)?;
    let params = [
        ("width", cfg.width.to_string()),
        ("height", cfg.height.to_string()),
        ("seed", cfg.seed.to_string()),
        ("noise", cfg.noise.to_string()),
        ("texture", cfg.texture.to_string()),
    ];
    provenance(&a.out, "synth", &params, &inputs)?;
    println!("stack,{}", a.out.join("stack.manifest").display());
    Ok(())
}

pub fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let stack = io::read_stack(&a.stack)?;
    let seeds = SeedTree::new(a.seed);
    let opts = BiopsyOptions { min_separation: a.min_separation, min_purity: a.purity };
    let biopsies = phantom::sample_biopsies(&stack, &a.gene, a.biopsies, &opts, seeds.seed("sample/biopsies"))?;
    let unlabeled = phantom::sample_unlabeled(&stack, a.unlabeled, seeds.seed("sample/unlabeled"))?;
    let normal = phantom::sample_normal(&stack, a.normal, seeds.seed("sample/normal"))?;
    let mut centers = Centers::default();
    centers.rows.extend(biopsies.iter().map(|b| (Role::Biopsy, Some(b.label), b.row, b.col)));
    centers.rows.extend(unlabeled.iter().map(|c| (Role::Unlabeled, None, c.row, c.col)));
    centers.rows.extend(normal.iter().map(|c| (Role::Normal, Some(ClassLabel::Normal), c.row, c.col)));
    create_dir(&a.out)?;
    write_text(&a.out.join("centers.csv"), &centers.to_csv())?;
    let params = [
        ("gene", a.gene.clone()),
        ("biopsies", a.biopsies.to_string()),
        ("unlabeled", a.unlabeled.to_string()),
        ("normal", a.normal.to_string()),
        ("purity", a.purity.map_or("none".into(), |p| p.to_string())),
        ("min_separation", a.min_separation.to_string()),
        ("seed", a.seed.to_string()),
    ];
    provenance(&a.out, "sample", &params, &[("stack", &a.stack)])?;
    println!("centers,{}", centers.rows.len());
    Ok(())
}

fn extract_rows(stack: &ContrastStack, centers: &Centers) -> Result<Vec<DatasetRow>, CliError> {
    let mut rows = Vec::with_capacity(centers.rows.len());
    for (i, &(role, class, row, col)) in centers.rows.iter().enumerate() {
        if !window_fits(stack.width(), stack.height(), row, col) {
            return Err(CliError::Data(format!(
                "center {} (line {}) at ({row}, {col}) puts its window outside the {}x{} stack",
                i + 1,
                i + 3,
                stack.width(),
                stack.height()
            )));
        }
        let features = feature_vector(stack, row, col).map_err(|e| CliError::Data(e.to_string()))?.into_vec();
        rows.push(DatasetRow { role, class, row, col, features });
    }
    Ok(rows)
}

pub fn extract(a: &ExtractArgs) -> Result<(), CliError> {
    let stack = io::read_stack(&a.stack)?;
    let text = std::fs::read_to_string(&a.centers).map_err(|e| CliError::Data(format!("{}: {e}", a.centers.display())))?;
    let centers = Centers::from_csv(&a.centers.display().to_string(), &text)?;
    let layout = FeatureLayout::new(stack.names.iter().cloned());
    let file = DatasetFile { contrasts: stack.names.clone(), dim: layout.len(), rows: extract_rows(&stack, &centers)? };
    create_dir(&a.out)?;
    write_text(&a.out.join("dataset.csv"), &file.to_csv())?;
    write_text(&a.out.join("features.manifest"), &layout.manifest())?;
    provenance(&a.out, "extract", &[], &[("stack", &a.stack), ("centers", &a.centers)])?;
    println!("rows,{}", file.rows.len());
    Ok(())
}

fn config_digest(params: &[(&str, String)]) -> String {
    let text: String = params.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    io::sha256_hex(text.as_bytes())
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let params = train_params(&a.model, a.c1, a.c2)?;
    let (file, ds) = read_dataset(&a.data)?;
    let ts = ds.full_training_set()?;
    let trained = model::train(&ts, &params)?;
    let mut prov = model_params(&a.model);
    prov.extend([("c1", a.c1.to_string()), ("c2", a.c2.to_string()), ("gene", a.gene.clone())]);
    let mf = ModelFile { model: trained, gene: a.gene.clone(), contrasts: file.contrasts.clone(), config_digest: config_digest(&prov) };
    create_dir(&a.out)?;
    io::write_model(&a.out.join("model.txt"), &mf)?;
    provenance(&a.out, "train", &prov, &[("data", &a.data)])?;
    let hits = ds.biopsies.iter().zip(&ds.labels).filter(|(x, &l)| mf.model.classify(x).is_ok_and(|p| p == l)).count();
    println!("training_accuracy,{:.3}", hits as f64 / ds.biopsies.len().max(1) as f64);
    println!("support_vectors,{}", mf.model.support_count());
    Ok(())
}

pub fn tune(a: &TuneArgs) -> Result<(), CliError> {
    let base = train_params(&a.model, 1.0, 1.0)?;
    let (_, ds) = read_dataset(&a.data)?;
    let config = CvConfig {
        folds: a.folds,
        repeats: 1,
        seed: a.model.seed,
        c1_grid: a.c1_grid.clone().unwrap_or_else(harness::default_c1_grid),
        c2_grid: a.c2_grid.clone().unwrap_or_else(harness::default_c2_grid),
        screen_threshold: a.screen_threshold,
        ablation: false,
    };
    let report = harness::tune(&ds, &base, &config)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("tune.csv"), &report.to_csv())?;
    let grid = |g: &[f64]| g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    let mut prov = model_params(&a.model);
    prov.extend([
        ("folds", a.folds.to_string()),
        ("screen_threshold", a.screen_threshold.to_string()),
        ("c1_grid", grid(&config.c1_grid)),
        ("c2_grid", grid(&config.c2_grid)),
    ]);
    provenance(&a.out, "tune", &prov, &[("data", &a.data)])?;
    println!("c1,{}\nc2,{}", report.c1, report.c2);
    Ok(())
}

pub fn cv(a: &CvArgs) -> Result<(), CliError> {
    let params = train_params(&a.model, a.c1, a.c2)?;
    let (_, ds) = read_dataset(&a.data)?;
    let config = CvConfig { folds: a.folds, repeats: a.repeats, seed: a.model.seed, ablation: a.ablation, ..CvConfig::default() };
    let report = harness::repeated_cv(&ds, &params, &config)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("cv.csv"), &report.to_csv(&ds))?;
    let summary = report.summary_text();
    write_text(&a.out.join("cv_summary.txt"), &summary)?;
    let mut prov = model_params(&a.model);
    prov.extend([
        ("c1", a.c1.to_string()),
        ("c2", a.c2.to_string()),
        ("folds", a.folds.to_string()),
        ("repeats", a.repeats.to_string()),
        ("ablation", a.ablation.to_string()),
    ]);
    provenance(&a.out, "cv", &prov, &[("data", &a.data)])?;
    print!("{summary}");
    Ok(())
}

fn kernel_choice(spec: &KernelSpec) -> KernelChoice {
    match *spec {
        KernelSpec::Linear => KernelChoice::Linear,
        KernelSpec::Gaussian { gamma } => KernelChoice::Gaussian(gamma),
    }
}

/// Dataset biopsies plus unlabeled and normal samples drawn from `stack`.
fn retrain(mf: &ModelFile, file: &DatasetFile, stack: &ContrastStack, count: usize, seeds: &SeedTree) -> Result<ModelFile, CliError> {
    let gene = &mf.gene;
    let un = phantom::sample_unlabeled(stack, count - count % 2, seeds.seed(&format!("map/retrain/{gene}/unlabeled")))?;
    let no = phantom::sample_normal(stack, count, seeds.seed(&format!("map/retrain/{gene}/normal")))?;
    let fv = |c: &phantom::Center| feature_vector(stack, c.row, c.col).map(|f| f.into_vec()).map_err(|e| CliError::Data(e.to_string()));
    let pick = |l: ClassLabel| -> Vec<Vec<f64>> { file.rows.iter().filter(|r| r.role == Role::Biopsy && r.class == Some(l)).map(|r| r.features.clone()).collect() };
    let ts = TrainingSet::new(
        pick(ClassLabel::NonAltered),
        pick(ClassLabel::Altered),
        un.iter().map(fv).collect::<Result<_, _>>()?,
        no.iter().map(fv).collect::<Result<_, _>>()?,
    )?;
    let m = &mf.model;
    let params = TrainParams { kernel: kernel_choice(m.kernel()), seed: seeds.seed(&format!("map/retrain/{gene}/train")), ..TrainParams::default() }
        .with_c(m.c1(), m.c2());
    let trained = model::train(&ts, &params)?;
    Ok(ModelFile { model: trained, gene: gene.clone(), contrasts: mf.contrasts.clone(), config_digest: mf.config_digest.clone() })
}

pub fn map(a: &MapArgs) -> Result<(), CliError> {
    let stack = io::read_stack(&a.stack)?;
    let stack_digest = io::layout_digest(&stack.names);
    let seeds = SeedTree::new(a.seed);
    let retrain_data = match &a.retrain {
        Some(p) => Some(read_dataset(p)?.0),
        None => None,
    };
    create_dir(&a.out)?;

    let mut maps: BTreeMap<String, PredictionMap> = BTreeMap::new();
    let mut inputs: Vec<(String, &Path)> = vec![("stack".into(), a.stack.as_path())];
    for spec in &a.models {
        let (gene, path) = spec.split_once('=').ok_or_else(|| CliError::Usage(format!("--model expects gene=path, got {spec:?}")))?;
        let path = Path::new(path);
        let mut mf = io::read_model(path)?;
        if mf.layout_digest() != stack_digest {
            return Err(CliError::Data(format!(
                "feature layout digest of {} ({}) does not match the stack channels {:?}",
                path.display(),
                &mf.layout_digest()[..12],
                stack.names
            )));
        }
        mf.gene = gene.to_string();
        let mut digest = io::file_digest(path)?;
        if let Some(file) = &retrain_data {
            mf = retrain(&mf, file, &stack, a.retrain_count, &seeds)?;
            let text = mf.to_text();
            write_text(&a.out.join(format!("model_{gene}.txt")), &text)?;
            digest = io::sha256_hex(text.as_bytes());
        }
        let mut pm = predict_map(&mf.model, &stack, gene, a.jobs)?;
        pm.model_digest = digest;
        pm.render(&a.out.join(format!("map_{gene}")))?;
        write_text(&a.out.join(format!("map_{gene}_summary.txt")), &pm.summary_text(a.seed)?)?;
        let p = pm.proportions()?;
        println!("{gene},altered,{:.4},non_altered,{:.4},class0,{:.4}", p.altered, p.non_altered, p.class0);
        inputs.push((format!("model.{gene}"), path));
        if maps.insert(gene.to_string(), pm).is_some() {
            return Err(CliError::Usage(format!("gene {gene} given twice")));
        }
    }
    if let Some(pair) = &a.joint {
        let get = |g: &String| maps.get(g).ok_or_else(|| CliError::Usage(format!("--joint gene {g} has no --model")));
        let j = joint_map(get(&pair[0])?, get(&pair[1])?)?;
        j.render(&a.out.join(format!("joint_{}_{}", pair[0], pair[1])))?;
    }
    if let Some(p) = &a.retrain {
        inputs.push(("retrain".into(), p.as_path()));
    }
    let params = [
        ("seed", a.seed.to_string()),
        ("joint", a.joint.as_ref().map_or("none".into(), |j| j.join(","))),
        ("retrain_count", if a.retrain.is_some() { a.retrain_count.to_string() } else { "none".into() }),
    ];
    let inputs: Vec<(&str, &Path)> = inputs.iter().map(|(k, p)| (k.as_str(), *p)).collect();
    provenance(&a.out, "map", &params, &inputs)
}

pub fn explain(a: &ExplainArgs) -> Result<(), CliError> {
    let mf = io::read_model(&a.model)?;
    let (file, _) = read_dataset(&a.data)?;
    if file.contrasts != mf.contrasts {
        return Err(CliError::Data(format!("dataset contrasts {:?} differ from the model's {:?}", file.contrasts, mf.contrasts)));
    }
    let layout = FeatureLayout::new(mf.contrasts.iter().cloned());
    let wanted = |r: &DatasetRow| match a.role {
        RoleArg::All => true,
        RoleArg::Biopsy => r.role == Role::Biopsy,
        RoleArg::Unlabeled => r.role == Role::Unlabeled,
        RoleArg::Normal => r.role == Role::Normal,
    };
    let samples: Vec<(String, Vec<f64>)> = file
        .rows
        .iter()
        .filter(|r| wanted(r))
        .take(a.limit.unwrap_or(usize::MAX))
        .map(|r| (format!("{}@{}:{}", r.role.as_str(), r.row, r.col), r.features.clone()))
        .collect();
    let mode = match a.mode {
        ModeArg::Exact => ShapMode::ExactGroup,
        ModeArg::Sampled => ShapMode::SampledFeature { draws: a.draws, seed: a.seed },
    };
    let agg = match a.aggregation {
        AggArg::SumThenAbs => Aggregation::SumThenAbs,
        AggArg::AbsThenSum => Aggregation::AbsThenSum,
    };
    if agg == Aggregation::AbsThenSum && a.mode == ModeArg::Exact {
        return Err(CliError::Usage("abs-then-sum needs --mode sampled".into()));
    }
    let report = explain::explain(&mf.model, &samples, mf.model.background(), &layout, mode)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("shap.csv"), &report.to_csv())?;
    let summary = report.summary_csv(agg, &layout)?;
    write_text(&a.out.join("shap_summary.csv"), &summary)?;
    let params = [
        ("mode", format!("{:?}", a.mode).to_lowercase()),
        ("draws", a.draws.to_string()),
        ("aggregation", format!("{:?}", a.aggregation).to_lowercase()),
        ("role", format!("{:?}", a.role).to_lowercase()),
        ("limit", a.limit.map_or("none".into(), |l| l.to_string())),
        ("seed", a.seed.to_string()),
    ];
    provenance(&a.out, "explain", &params, &[("model", &a.model), ("data", &a.data)])?;
    print!("{summary}");
    Ok(())
}
