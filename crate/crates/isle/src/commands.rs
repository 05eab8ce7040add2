//! The five commands, each driven by a flat configuration.

use std::path::{Path, PathBuf};

use isle_core::dataset::{gen_friedman_popescu_with, gen_linear_sparse_with, kfold_split, FRIEDMAN_POPESCU_N};
use isle_core::eval::{cv_select, default_grid, fit_method_with, FittedMethod, LearnerProblem, MethodId, MethodSettings, MethodSpec};
use isle_core::importance::{column_std, rule_importance, tree_importance_from_std, variable_importance, Learners};
use isle_core::rules::{column_support, extract_rules, rule_matrix};
use isle_core::{IsleConfig, Matrix, RuleScope};

use crate::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkResult};
use crate::config::{parse_bool, KeyValues};
use crate::container::{load_bundle, write_json, Bundle, EnsembleFile, VERSION};
use crate::csv_io::{create, load_csv, read_table_file, select_features, write_column_file, write_dataset_file};
use crate::error::{CliError, Result};
use crate::parallel::generate_ensemble_parallel;
use crate::settings::{parse_method, read_cv_folds, read_isle, read_method_settings, read_scope};
use crate::text::render_conditions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    LinearSparse,
    Friedman,
}

/// Resolved `simulate` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub generator: Generator,
    pub seed: u64,
    pub n: usize,
    pub noise: f64,
    pub output: PathBuf,
    pub truth: PathBuf,
}

impl SimulateConfig {
    pub fn from_keys(kv: &KeyValues) -> Result<Self> {
        let mut f = kv.reader();
        let generator = f
            .parse_with("generator", |s| match s {
                "linear_sparse" => Ok(Generator::LinearSparse),
                "friedman" => Ok(Generator::Friedman),
                _ => Err("expected linear_sparse or friedman".into()),
            })
            .unwrap_or(Generator::LinearSparse);
        let seed = f.or("seed", 1u64);
        let n = f.or("n", FRIEDMAN_POPESCU_N);
        let default_noise = match generator {
            Generator::LinearSparse => isle_core::dataset::LINEAR_SPARSE_NOISE_VAR,
            Generator::Friedman => 1.0,
        };
        let noise = f.or("noise", default_noise);
        let output = f.required("output").map(PathBuf::from).unwrap_or_default();
        let truth = f.str("truth").map(PathBuf::from).unwrap_or_else(|| output.with_extension("truth.csv"));
        if n == 0 {
            f.problem("n must be >= 1");
        }
        if !(noise >= 0.0) {
            f.problem("noise must be >= 0");
        }
        if generator == Generator::LinearSparse && kv.get("n").is_some() {
            f.problem("n applies to the friedman generator only");
        }
        f.finish()?;
        Ok(SimulateConfig { generator, seed, n, noise, output, truth })
    }
}

/// Writes the dataset (target column `y`) and the ground-truth sidecar:
/// `beta` for the linear generator, the noiseless `y_clean` for Friedman.
pub fn cmd_simulate(c: &SimulateConfig) -> Result<()> {
    match c.generator {
        Generator::LinearSparse => {
            let (d, beta) = gen_linear_sparse_with(c.seed, c.noise);
            write_dataset_file(&c.output, &d, "y")?;
            write_column_file(&c.truth, "beta", &beta)
        }
        Generator::Friedman => {
            let (d, clean) = gen_friedman_popescu_with(c.seed, c.n, c.noise);
            write_dataset_file(&c.output, &d, "y")?;
            write_column_file(&c.truth, "y_clean", &clean)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub data: PathBuf,
    pub target: String,
    pub output: PathBuf,
    pub method: MethodId,
    pub isle: IsleConfig,
    pub rule_scope: RuleScope,
    pub cv_folds: usize,
    pub fold_seed: u64,
    pub settings: MethodSettings,
    pub folds_output: Option<PathBuf>,
    pub keys: KeyValues,
}

impl TrainConfig {
    pub fn from_keys(kv: &KeyValues) -> Result<Self> {
        let mut f = kv.reader();
        let data = f.required("data").map(PathBuf::from).unwrap_or_default();
        let target = f.required("target").unwrap_or_default();
        let output = f.required("output").map(PathBuf::from).unwrap_or_default();
        let method = f.parse_with("method", parse_method).unwrap_or(MethodId::RPls);
        let isle = read_isle(&mut f, IsleConfig::default());
        let rule_scope = read_scope(&mut f, RuleScope::AllNodes);
        let cv_folds = read_cv_folds(&mut f, 10);
        let fold_seed = f.or("fold_seed", isle.seed);
        let settings = read_method_settings(&mut f, MethodSettings::default());
        let folds_output = f.str("folds_output").map(PathBuf::from);
        f.finish()?;
        Ok(TrainConfig {
            data,
            target,
            output,
            method,
            isle,
            rule_scope,
            cv_folds,
            fold_seed,
            settings,
            folds_output,
            keys: kv.clone(),
        })
    }
}

/// Fits the ensemble, extracts rules, selects the hyperparameter by
/// cross-validation and writes the bundle.
pub fn cmd_train(c: &TrainConfig) -> Result<Bundle> {
    let d = load_csv(&c.data, &c.target)?;
    if c.cv_folds > d.n() {
        return Err(CliError::Config(format!("cv_folds = {} exceeds the {} training rows", c.cv_folds, d.n())));
    }
    let e = generate_ensemble_parallel(&d, &c.isle)?;
    let tree_train = e.learner_matrix(d.features())?;
    let oob = e.oob_mask();
    let (rules, b) = if c.method.uses_rules() {
        let rs = extract_rules(&e, c.rule_scope);
        let r = rule_matrix(&rs, d.features())?;
        (Some(rs), r)
    } else {
        (None, tree_train)
    };
    if b.cols() == 0 {
        return Err(CliError::Numeric("the ensemble produced no rules".into()));
    }
    let problem = LearnerProblem { b: &b, y: d.target(), oob: (!c.method.uses_rules()).then_some(&oob) };
    let folds = kfold_split(d.n(), c.cv_folds, c.fold_seed)?;
    if let Some(p) = &c.folds_output {
        crate::csv_io::write_folds_file(p, &folds)?;
    }
    let spec = MethodSpec { id: c.method, grid: default_grid(c.method, &problem, &c.settings)? };
    let cv = cv_select(&spec, &problem, &folds, &c.settings)?;
    let model = fit_method_with(c.method, &cv.best, &problem, &c.settings)?;
    let fitted = model.predict_rows(&b)?;
    let learner_stats = if rules.is_some() { column_support(&b)? } else { column_std(&b) };
    let bundle = Bundle {
        format: Bundle::FORMAT.into(),
        version: VERSION,
        config: c.keys.entries().clone(),
        feature_names: d.column_names().to_vec(),
        target: c.target.clone(),
        method: c.method,
        rule_scope: c.rule_scope,
        cv_folds: c.cv_folds,
        settings: c.settings.clone(),
        ensemble: EnsembleFile::new(&e),
        rules: rules.as_ref().map(Bundle::rule_lines).unwrap_or_default(),
        model,
        cv,
        learner_stats,
        fitted,
    };
    write_json(&c.output, &bundle)?;
    Ok(bundle)
}

/// Learner matrix of `x` for the bundle's method.
pub fn bundle_learner_matrix(b: &Bundle, x: &Matrix) -> Result<Matrix> {
    let e = b.ensemble.to_ensemble()?;
    if b.method.uses_rules() {
        Ok(rule_matrix(&b.rule_set()?, x)?)
    } else {
        Ok(e.learner_matrix(x)?)
    }
}

pub fn predict_table(b: &Bundle, data: &Path) -> Result<Vec<f64>> {
    let t = read_table_file(data)?;
    let (x, _) = select_features(&t, &b.feature_names, Some(&b.target))?;
    Ok(b.model.predict_rows(&bundle_learner_matrix(b, &x)?)?)
}

pub fn cmd_predict(kv: &KeyValues) -> Result<Vec<f64>> {
    let mut f = kv.reader();
    let bundle = f.required("bundle").map(PathBuf::from).unwrap_or_default();
    let data = f.required("data").map(PathBuf::from).unwrap_or_default();
    let output = f.required("output").map(PathBuf::from).unwrap_or_default();
    f.finish()?;
    let b = load_bundle(&bundle)?;
    let p = predict_table(&b, &data)?;
    write_column_file(&output, "prediction", &p)?;
    Ok(p)
}

/// One line of the importance report.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRow {
    pub kind: &'static str,
    pub id: usize,
    pub description: String,
    pub importance: f64,
}

fn kind_rank(k: &str) -> u8 {
    match k {
        "variable" => 0,
        "tree" => 1,
        _ => 2,
    }
}

/// Learner and variable importances, sorted by decreasing importance (ties
/// by kind, then id).
pub fn importance_rows(b: &Bundle, shared_credit: bool) -> Result<Vec<ImportanceRow>> {
    let FittedMethod::Linear(w) = &b.model else {
        return Err(CliError::Config(format!("{} is a kernel smoother and has no learner weights", b.method)));
    };
    let e = b.ensemble.to_ensemble()?;
    let names = Some(b.feature_names.as_slice());
    let p = b.feature_names.len();
    let mut rows = Vec::new();
    let variables = if b.method.uses_rules() {
        let rs = b.rule_set()?;
        let imp = rule_importance(w, &b.learner_stats)?;
        for (k, (r, i)) in rs.rules().iter().zip(&imp).enumerate() {
            rows.push(ImportanceRow { kind: "rule", id: k, description: render_conditions(r, names), importance: *i });
        }
        variable_importance(Learners::Rules(&rs), &imp, p, shared_credit)?
    } else {
        let imp = tree_importance_from_std(w, &b.learner_stats)?;
        for (k, (t, i)) in e.trees().iter().zip(&imp).enumerate() {
            let used: Vec<&str> = t.features_used().iter().map(|&f| b.feature_names[f].as_str()).collect();
            let description = format!("tree {k} on {}", if used.is_empty() { "(constant)".into() } else { used.join(" ") });
            rows.push(ImportanceRow { kind: "tree", id: k, description, importance: *i });
        }
        variable_importance(Learners::Trees(&e), &imp, p, shared_credit)?
    };
    for (l, v) in variables.iter().enumerate() {
        rows.push(ImportanceRow { kind: "variable", id: l, description: b.feature_names[l].clone(), importance: *v });
    }
    rows.sort_by(|a, c| {
        c.importance.total_cmp(&a.importance).then(kind_rank(a.kind).cmp(&kind_rank(c.kind))).then(a.id.cmp(&c.id))
    });
    Ok(rows)
}

pub fn write_importance<W: std::io::Write>(w: W, rows: &[ImportanceRow]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["kind", "id", "description", "importance"])?;
    for r in rows {
        wr.write_record([r.kind, &r.id.to_string(), &r.description, &r.importance.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn cmd_importance(kv: &KeyValues) -> Result<Vec<ImportanceRow>> {
    let mut f = kv.reader();
    let bundle = f.required("bundle").map(PathBuf::from).unwrap_or_default();
    let output = f.required("output").map(PathBuf::from).unwrap_or_default();
    let shared = f.parse_with("shared_credit", parse_bool).unwrap_or(false);
    f.finish()?;
    let rows = importance_rows(&load_bundle(&bundle)?, shared)?;
    write_importance(create(&output)?, &rows).map_err(|e| CliError::Data(format!("{}: {e}", output.display())))?;
    Ok(rows)
}

pub fn cmd_benchmark(kv: &KeyValues) -> Result<(BenchmarkResult, PathBuf, PathBuf)> {
    let mut f = kv.reader();
    let cfg = BenchmarkConfig::from_fields(&mut f)?;
    let dir = f.str("output_dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("benchmark_out"));
    f.finish()?;
    let r = run_benchmark(&cfg)?;
    let (c, j) = r.write(&dir)?;
    Ok((r, c, j))
}
