use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use lamkit_core::approx::{find_alpha_star, squared_error, ALPHA_STAR};
use lamkit_core::data::{load_csv, synth_logistic, write_csv_to, DatasetConfig, FeatureDistribution, SynthSpec};
use lamkit_core::metrics::{cross_validate, read_reports, write_reports, FixedModel, MetricReport, ModelTrainer, Trainer};
use lamkit_core::model::{from_json, to_json};
use lamkit_core::stats::{compare, trinomial_test, ComparisonReport, Direction, Metric, ScoreMatrix, TrinomialResult};
use lamkit_core::train::{fit_model, ModelKind, MonotoneDirection, NnlrOptions, TrainOptions};

use crate::args::{Command, Format};
use crate::manifest::RunManifest;
use crate::{manifest_path, read_file, write_file, CliError, Result};

fn train_options(ridge: f64, min_leaf: Option<usize>) -> Result<TrainOptions> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(CliError::Usage(format!("--ridge must be a non-negative number, got {ridge}")));
    }
    Ok(TrainOptions { nnlr: NnlrOptions { c: ridge, ..NnlrOptions::default() }, min_leaf })
}

fn kind_param(kind: ModelKind) -> String {
    kind.name().to_ascii_lowercase()
}

fn with_manifest<T: Serialize>(body: &T, manifest: &RunManifest) -> String {
    let mut value = serde_json::to_value(body).expect("report serialises");
    if let Value::Object(map) = &mut value {
        map.insert("manifest".into(), manifest.to_value());
    }
    let mut text = serde_json::to_string_pretty(&value).expect("json");
    text.push('\n');
    text
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// CSV outputs carry their manifest in a sidecar file next to them.
fn emit_csv(out: Option<&Path>, text: &str, manifest: &RunManifest) -> Result<()> {
    emit(out, text)?;
    let Some(path) = out else {
        log::info!("csv written to stdout; no manifest sidecar");
        return Ok(());
    };
    let mut json = serde_json::to_string_pretty(&manifest.to_value()).expect("json");
    json.push('\n');
    write_file(&manifest_path(path), &json)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaReport {
    pub minimiser: f64,
    pub squared_error_at_minimiser: f64,
    pub iterations: usize,
    pub method: String,
    pub constant: f64,
    pub constant_expression: String,
    pub squared_error_at_constant: f64,
    /// `constant - minimiser`.
    pub difference: f64,
    /// `SE(constant) - SE(minimiser)`.
    pub squared_error_difference: f64,
}

pub fn cmd_alpha(tolerance: f64) -> Result<AlphaReport> {
    let found = find_alpha_star(tolerance)?;
    let se_constant = squared_error(ALPHA_STAR)?;
    Ok(AlphaReport {
        minimiser: found.alpha,
        squared_error_at_minimiser: found.squared_error,
        iterations: found.iterations,
        method: format!("{:?}", found.method).to_ascii_lowercase(),
        constant: ALPHA_STAR,
        constant_expression: "80000/30773".into(),
        squared_error_at_constant: se_constant,
        difference: ALPHA_STAR - found.alpha,
        squared_error_difference: se_constant - found.squared_error,
    })
}

fn alpha_text(r: &AlphaReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "minimiser              {:.13}  ({} iterations, {})", r.minimiser, r.iterations, r.method);
    let _ = writeln!(s, "  squared error        {:.15}", r.squared_error_at_minimiser);
    let _ = writeln!(s, "constant {:<13} {:.13}", r.constant_expression, r.constant);
    let _ = writeln!(s, "  squared error        {:.15}", r.squared_error_at_constant);
    let _ = writeln!(s, "difference             {:.3e}", r.difference);
    let _ = writeln!(s, "squared error increase {:.3e}", r.squared_error_difference);
    s
}

#[derive(Debug, Clone)]
pub struct FitRequest {
    pub data: PathBuf,
    pub config: PathBuf,
    pub kind: ModelKind,
    pub seed: u64,
    pub ridge: f64,
    pub min_leaf: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fits the requested family and returns the model document.
pub fn cmd_fit(req: &FitRequest) -> Result<String> {
    let opts = train_options(req.ridge, req.min_leaf)?;
    let config = DatasetConfig::load(&req.config)?;
    let ds = load_csv(&req.data, &config)?;
    let model = fit_model(&ds, req.kind, &opts)?;
    let mut manifest = RunManifest::new("fit")
        .input(&req.data)
        .config(&req.config)
        .seed(req.seed)
        .output(req.out.as_deref())
        .param("kind", kind_param(req.kind))
        .param("ridge", req.ridge);
    if let Some(m) = req.min_leaf {
        manifest = manifest.param("min_leaf", m);
    }
    Ok(to_json(&model, Some(&manifest.to_value())))
}

/// Linearises a logistic model document without touching any data.
pub fn cmd_linearise(model: &Path, out: Option<&Path>) -> Result<String> {
    let (logistic, source) = from_json(&read_file(model)?)?;
    let lam = logistic.linearise()?;
    let manifest = RunManifest::new("linearise").input(model).output(out).source(source);
    Ok(to_json(&lam, Some(&manifest.to_value())))
}

#[derive(Debug, Clone)]
pub struct EvaluateRequest {
    pub data: PathBuf,
    pub config: PathBuf,
    pub kinds: Vec<ModelKind>,
    /// `(classifier id, model file)`.
    pub models: Vec<(String, PathBuf)>,
    pub with_lam: bool,
    pub folds: usize,
    pub seed: u64,
    pub ridge: f64,
    pub min_leaf: Option<usize>,
    pub out: Option<PathBuf>,
}

/// `path` or `id=path`; a bare path is identified by its file stem.
pub(crate) fn parse_model_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((id, path)) if !id.is_empty() => (id.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let id = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            (id, path)
        }
    }
}

/// Cross-validates every requested classifier on one shared fold split.
/// Returns the metric CSV and its manifest.
pub fn cmd_evaluate(req: &EvaluateRequest) -> Result<(String, RunManifest)> {
    if req.kinds.is_empty() && req.models.is_empty() {
        return Err(CliError::Usage("evaluate needs at least one --kind or --model".into()));
    }
    let opts = train_options(req.ridge, req.min_leaf)?;
    let config = DatasetConfig::load(&req.config)?;
    let ds = load_csv(&req.data, &config)?;

    let mut trainers: Vec<Box<dyn Trainer>> = Vec::new();
    for &kind in &req.kinds {
        trainers.push(Box::new(ModelTrainer { kind, options: opts, with_lam: req.with_lam }));
    }
    let mut model_sources = Vec::new();
    for (id, path) in &req.models {
        let (model, source) = from_json(&read_file(path)?)?;
        model_sources.push(serde_json::json!({ "id": id, "path": path.display().to_string(), "manifest": source }));
        trainers.push(Box::new(FixedModel { id: id.clone(), model }));
    }
    let mut seen = HashSet::new();
    for id in trainers.iter().flat_map(|t| t.classifier_ids()) {
        if !seen.insert(id.clone()) {
            return Err(CliError::Usage(format!("classifier id `{id}` appears twice")));
        }
    }

    let mut reports: Vec<MetricReport> = Vec::new();
    for t in &trainers {
        reports.extend(cross_validate(t.as_ref(), &ds, req.folds, req.seed)?);
    }
    let mut buf = Vec::new();
    write_reports(&reports, &mut buf)?;
    let csv = String::from_utf8(buf).expect("csv output is utf-8");

    let mut manifest = RunManifest::new("evaluate")
        .input(&req.data)
        .config(&req.config)
        .seed(req.seed)
        .output(req.out.as_deref())
        .param("folds", req.folds)
        .param("kinds", req.kinds.iter().map(|&k| kind_param(k)).collect::<Vec<_>>())
        .param("linearised", req.with_lam)
        .param("ridge", req.ridge);
    if let Some(m) = req.min_leaf {
        manifest = manifest.param("min_leaf", m);
    }
    if !model_sources.is_empty() {
        manifest = manifest.param("models", model_sources);
    }
    Ok((csv, manifest))
}

/// Averages per-fold metric rows into a score matrix CSV.
pub fn cmd_pivot(metrics: &[PathBuf], metric: Metric) -> Result<String> {
    let mut reports = Vec::new();
    for path in metrics {
        let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        reports.extend(read_reports(file)?);
    }
    let matrix = ScoreMatrix::from_reports(&reports, metric, metric.direction())?;
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn cmd_compare(scores: &Path, direction: Direction, alpha: f64) -> Result<ComparisonReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha-level must lie in (0, 1), got {alpha}")));
    }
    let file = std::fs::File::open(scores).map_err(|source| CliError::Io { path: scores.display().to_string(), source })?;
    let matrix = ScoreMatrix::from_csv(file, direction)?;
    Ok(compare(&matrix, alpha)?)
}

fn compare_text(r: &ComparisonReport) -> String {
    let mut s = String::new();
    let width = r.classifiers.iter().map(String::len).max().unwrap_or(0).max(10);
    let _ = writeln!(s, "{} classifiers on {} datasets, alpha = {}", r.classifiers.len(), r.n_datasets, r.alpha);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<width$}  mean rank", "classifier");
    let mut order: Vec<usize> = (0..r.classifiers.len()).collect();
    order.sort_by(|&a, &b| r.mean_ranks[a].total_cmp(&r.mean_ranks[b]));
    for i in order {
        let _ = writeln!(s, "{:<width$}  {:.3}", r.classifiers[i], r.mean_ranks[i]);
    }
    let _ = writeln!(s);
    match r.omnibus.f {
        Some(f) => {
            let _ = writeln!(s, "Friedman chi2 = {:.4}, Iman-Davenport F = {:.4}, p = {:.4e}", r.omnibus.chi2, f, r.omnibus.p);
        }
        None => {
            let _ = writeln!(s, "Friedman chi2 = {:.4} (at its maximum; every dataset ranks alike)", r.omnibus.chi2);
        }
    }
    if r.pairwise_flagged {
        let _ = writeln!(s, "omnibus null retained: pairwise results below are descriptive only");
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<width$}  {:<width$}  {:>8}  {:>10}  {:>10}  {:>8}  {:>12}",
        "row", "column", "T", "p", "p (Holm)", "reject", "pseudomedian"
    );
    for p in &r.pairwise {
        let _ = writeln!(
            s,
            "{:<width$}  {:<width$}  {:>8.1}  {:>10.4e}  {:>10.4e}  {:>8}  {:>12.5}",
            p.row,
            p.column,
            p.t,
            p.p,
            p.p_holm,
            if p.reject { "yes" } else { "no" },
            p.pseudomedian
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "not distinguished:");
    for [a, b] in &r.edges {
        let _ = writeln!(s, "  {a} -- {b}");
    }
    s
}

pub fn cmd_trinomial(n_a: u64, n_b: u64, n_0: u64) -> Result<TrinomialResult> {
    Ok(trinomial_test(n_a, n_b, n_0)?)
}

fn trinomial_text(r: &TrinomialResult) -> String {
    format!(
        "n = {}, n_d = {}, tie rate = {:.4}\none-sided p = {:.6e}\ntwo-sided p = {:.6e}\n",
        r.n, r.n_d, r.p0, r.p_one_sided, r.p_two_sided
    )
}

#[derive(Debug, Clone)]
pub struct SynthRequest {
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub samples: usize,
    pub seed: u64,
    pub distribution: FeatureDistribution,
    pub subscales: Option<usize>,
}

pub(crate) fn parse_distribution(s: &str) -> Result<FeatureDistribution> {
    let bad = || CliError::Usage(format!("--distribution must be `normal` or `uniform:LOW:HIGH`, got `{s}`"));
    if s == "normal" {
        return Ok(FeatureDistribution::Normal);
    }
    let rest = s.strip_prefix("uniform:").ok_or_else(bad)?;
    let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
    let low: f64 = lo.parse().map_err(|_| bad())?;
    let high: f64 = hi.parse().map_err(|_| bad())?;
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(bad());
    }
    Ok(FeatureDistribution::Uniform { low, high })
}

/// Draws the dataset and returns `(csv, config json)`.
pub fn cmd_synth(req: &SynthRequest) -> Result<(String, String)> {
    if req.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    if req.coefficients.iter().any(|b| !b.is_finite()) || !req.bias.is_finite() {
        return Err(CliError::Usage("coefficients and bias must be finite".into()));
    }
    let spec = SynthSpec {
        bias: req.bias,
        coefficients: req.coefficients.clone(),
        distribution: req.distribution,
        samples: req.samples,
    };
    let ds = synth_logistic(&spec, req.seed);
    let mut buf = Vec::new();
    write_csv_to(&ds, &mut buf)?;

    let features: Vec<Value> = ds
        .features()
        .iter()
        .map(|f| {
            let mut v = serde_json::json!({ "name": f.name });
            if f.monotone != MonotoneDirection::Unconstrained {
                v["monotone"] = Value::String(f.monotone.to_string());
            }
            v
        })
        .collect();
    let label = ds.label_spec();
    let mut config = serde_json::json!({
        "name": ds.id,
        "label": label.column,
        "positive_label": label.positive,
        "negative_label": label.negative,
        "features": features,
    });
    if let Some(k) = req.subscales {
        if k == 0 || k > ds.n_features() {
            return Err(CliError::Usage(format!("--subscales must lie in 1..={}", ds.n_features())));
        }
        let mut map = serde_json::Map::new();
        for s in 0..k {
            let members: Vec<&str> =
                ds.features().iter().skip(s).step_by(k).map(|f| f.name.as_str()).collect();
            map.insert(format!("s{}", s + 1), serde_json::json!(members));
        }
        config["subscales"] = Value::Object(map);
    }
    // the config must load back through the normal path
    DatasetConfig::from_json(&config.to_string())?;
    let mut config_text = serde_json::to_string_pretty(&config).expect("json");
    config_text.push('\n');
    Ok((String::from_utf8(buf).expect("csv output is utf-8"), config_text))
}

pub(crate) fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Alpha { tolerance, format, out } => {
            let report = cmd_alpha(tolerance)?;
            let text = match format {
                Format::Json => {
                    let manifest = RunManifest::new("alpha").output(out.as_deref()).param("tolerance", tolerance);
                    with_manifest(&report, &manifest)
                }
                Format::Text => alpha_text(&report),
            };
            emit(out.as_deref(), &text)
        }
        Command::Fit { data, config, kind, seed, ridge, min_leaf, out } => {
            let req = FitRequest { data, config, kind: kind.into(), seed, ridge, min_leaf, out };
            let doc = cmd_fit(&req)?;
            emit(req.out.as_deref(), &doc)
        }
        Command::Linearise { model, out } => {
            let doc = cmd_linearise(&model, out.as_deref())?;
            emit(out.as_deref(), &doc)
        }
        Command::Evaluate { data, config, kinds, models, no_lam, folds, seed, ridge, min_leaf, out } => {
            let req = EvaluateRequest {
                data,
                config,
                kinds: kinds.into_iter().map(ModelKind::from).collect(),
                models: models.iter().map(|m| parse_model_spec(m)).collect(),
                with_lam: !no_lam,
                folds,
                seed,
                ridge,
                min_leaf,
                out,
            };
            let (csv, manifest) = cmd_evaluate(&req)?;
            emit_csv(req.out.as_deref(), &csv, &manifest)
        }
        Command::Pivot { metrics, metric, out } => {
            let metric: Metric = metric.into();
            let csv = cmd_pivot(&metrics, metric)?;
            let mut manifest = RunManifest::new("pivot").output(out.as_deref()).param(
                "metric",
                serde_json::to_value(metric).expect("json"),
            );
            for m in &metrics {
                manifest = manifest.input(m);
            }
            emit_csv(out.as_deref(), &csv, &manifest)
        }
        Command::Compare { scores, direction, alpha_level, format, out } => {
            let direction: Direction = direction.into();
            let report = cmd_compare(&scores, direction, alpha_level)?;
            let text = match format {
                Format::Json => {
                    let manifest = RunManifest::new("compare")
                        .input(&scores)
                        .output(out.as_deref())
                        .param("direction", serde_json::to_value(direction).expect("json"))
                        .param("alpha_level", alpha_level);
                    with_manifest(&report, &manifest)
                }
                Format::Text => compare_text(&report),
            };
            emit(out.as_deref(), &text)
        }
        Command::Trinomial { n_a, n_b, n_0, format, out } => {
            let r = cmd_trinomial(n_a, n_b, n_0)?;
            let text = match format {
                Format::Json => {
                    let manifest = RunManifest::new("trinomial")
                        .output(out.as_deref())
                        .param("n_a", n_a)
                        .param("n_b", n_b)
                        .param("n_0", n_0);
                    with_manifest(&r, &manifest)
                }
                Format::Text => trinomial_text(&r),
            };
            emit(out.as_deref(), &text)
        }
        Command::Synth { coefficients, bias, samples, seed, distribution, subscales, out, config_out } => {
            let req = SynthRequest {
                coefficients,
                bias,
                samples,
                seed,
                distribution: parse_distribution(&distribution)?,
                subscales,
            };
            let (csv, config) = cmd_synth(&req)?;
            let mut manifest = RunManifest::new("synth")
                .seed(seed)
                .output(Some(&out))
                .param("coefficients", req.coefficients.clone())
                .param("bias", bias)
                .param("samples", samples)
                .param("distribution", distribution)
                .param("config_out", config_out.display().to_string());
            if let Some(k) = subscales {
                manifest = manifest.param("subscales", k);
            }
            write_file(&config_out, &config)?;
            emit_csv(Some(&out), &csv, &manifest)
        }
    }
}
