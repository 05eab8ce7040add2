//! Benchmark engine: per replication (or outer fold) one shared ensemble,
//! its rules, and every requested post-processor selected by inner
//! cross-validation and scored on held-out rows.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use isle_core::dataset::{gen_friedman_popescu_with, gen_linear_sparse_with, kfold_split, train_test_split, SplitSpec};
use isle_core::eval::{evaluate_method, MatrixChecksums, MethodId, MethodSettings, Replication};
use isle_core::postproc::Hyperparams;
use isle_core::rng::child_seed;
use isle_core::{Dataset, IsleConfig, Kernel, RuleScope, TreeParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Fields, KeyValues};
use crate::csv_io::{create, load_csv, read_table, table_to_dataset};
use crate::error::{CliError, Result};
use crate::parallel::generate_ensemble_parallel;
use crate::settings::{parse_method, read_cv_folds, read_isle, read_method_settings, read_scope};

/// Bundled copy of the Boston Housing data (506 rows, target `medv`).
pub const BOSTON_CSV: &str = include_str!("../data/boston.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// 150×100 sparse linear model, 2:1 split per replication.
    LinearSparse { noise_var: f64 },
    /// Friedman–Popescu simulation with `n` rows, 2:1 split per replication.
    Friedman { n: usize, noise_sd: f64 },
    /// A CSV dataset evaluated by outer k-fold cross-validation. `data`
    /// unset means the bundled Boston Housing file.
    Csv { data: Option<PathBuf>, target: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub preset: String,
    pub experiment: Experiment,
    /// Replications, or outer folds for CSV experiments.
    pub units: usize,
    pub seed: u64,
    pub methods: Vec<MethodId>,
    pub isle: IsleConfig,
    pub rule_scope: RuleScope,
    pub cv_folds: usize,
    pub settings: MethodSettings,
}

fn preset_isle(n_trees: usize, max_depth: usize) -> IsleConfig {
    IsleConfig {
        n_trees,
        tree: TreeParams { max_depth, feature_fraction: 1.0 / 3.0, ..TreeParams::default() },
        ..IsleConfig::default()
    }
}

impl BenchmarkConfig {
    /// `ex2`, `ex3` and `boston` encode the figure captions; `csv` needs
    /// `data` and `target`.
    pub fn preset(name: &str) -> Option<Self> {
        let (experiment, units, isle) = match name {
            "ex2" => (Experiment::LinearSparse { noise_var: 0.3 }, 100, preset_isle(200, 2)),
            "ex3" => (Experiment::Friedman { n: 1000, noise_sd: 1.0 }, 100, preset_isle(200, 2)),
            "boston" => (Experiment::Csv { data: None, target: "medv".into() }, 10, preset_isle(300, 4)),
            "csv" => (Experiment::Csv { data: None, target: String::new() }, 10, preset_isle(200, 2)),
            _ => return None,
        };
        Some(BenchmarkConfig {
            preset: name.into(),
            experiment,
            units,
            seed: 1,
            methods: MethodId::ALL.to_vec(),
            isle,
            rule_scope: RuleScope::AllNodes,
            cv_folds: 10,
            settings: MethodSettings { kernel: Kernel::Gaussian, ..MethodSettings::default() },
        })
    }

    /// Reads `experiment` first to pick the preset, then layers every other
    /// key over it.
    pub fn from_keys(kv: &KeyValues) -> Result<Self> {
        let mut f = kv.reader();
        let c = Self::from_fields(&mut f)?;
        f.finish()?;
        Ok(c)
    }

    /// As [`BenchmarkConfig::from_keys`] but leaves unknown-key checking to
    /// the caller, who may read further keys.
    pub fn from_fields(f: &mut Fields<'_>) -> Result<Self> {
        let name = f.str("experiment").unwrap_or_else(|| "ex3".into());
        let Some(mut c) = Self::preset(&name) else {
            return Err(CliError::Config(format!("experiment = {name:?}: expected ex2, ex3, boston or csv")));
        };
        c.read(f);
        Ok(c)
    }

    fn read(&mut self, f: &mut Fields<'_>) {
        self.units = f.or("replications", self.units);
        if self.units == 0 {
            f.problem("replications must be >= 1");
        }
        self.seed = f.or("seed", self.seed);
        if let Some(m) = f.parse_with("methods", |s| s.split(',').map(|t| parse_method(t.trim())).collect()) {
            self.methods = m;
        }
        if self.methods.is_empty() {
            f.problem("methods must list at least one method");
        }
        // the per-unit seed replaces isle.seed, so it is not a key here
        let seed = self.isle.seed;
        self.isle = read_isle(f, self.isle);
        self.isle.seed = seed;
        self.rule_scope = read_scope(f, self.rule_scope);
        self.cv_folds = read_cv_folds(f, self.cv_folds);
        self.settings = read_method_settings(f, self.settings.clone());
        match &mut self.experiment {
            Experiment::LinearSparse { noise_var } => *noise_var = f.or("noise_var", *noise_var),
            Experiment::Friedman { n, noise_sd } => {
                *n = f.or("n", *n);
                *noise_sd = f.or("noise_sd", *noise_sd);
            }
            Experiment::Csv { data, target } => {
                if let Some(p) = f.str("data") {
                    *data = Some(PathBuf::from(p));
                }
                if let Some(t) = f.str("target") {
                    *target = t;
                }
                if target.is_empty() {
                    f.problem("target: required for csv experiments");
                }
                if data.is_none() && self.preset == "csv" {
                    f.problem("data: required for csv experiments");
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: MethodId,
    pub accuracy: Option<f64>,
    pub degenerate: bool,
    pub rmse: Option<f64>,
    pub hyper: Option<Hyperparams>,
    pub error: Option<String>,
    pub matrix_checksum: Option<u64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub unit: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_rules: usize,
    pub checksums: Option<MatrixChecksums>,
    pub error: Option<String>,
    pub cells: Vec<Cell>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub units: Vec<UnitResult>,
    pub wall_seconds: f64,
    pub started_unix: u64,
    pub threads: usize,
}

fn load_experiment_data(e: &Experiment) -> Result<Option<Dataset>> {
    match e {
        Experiment::Csv { data: Some(p), target } => load_csv(p, target).map(Some),
        Experiment::Csv { data: None, target } => table_to_dataset(read_table(BOSTON_CSV.as_bytes())?, target).map(Some),
        _ => Ok(None),
    }
}

/// Training and test portions of unit `u`, plus its seed.
fn unit_split(cfg: &BenchmarkConfig, data: Option<&Dataset>, u: usize) -> isle_core::Result<(Dataset, Dataset, u64)> {
    let seed = child_seed(cfg.seed, u as u64);
    Ok(match (&cfg.experiment, data) {
        (Experiment::LinearSparse { noise_var }, _) => {
            let (d, _) = gen_linear_sparse_with(seed, *noise_var);
            let (a, b) = train_test_split(&d, &SplitSpec::two_to_one(seed))?;
            (a, b, seed)
        }
        (Experiment::Friedman { n, noise_sd }, _) => {
            let (d, _) = gen_friedman_popescu_with(seed, *n, *noise_sd);
            let (a, b) = train_test_split(&d, &SplitSpec::two_to_one(seed))?;
            (a, b, seed)
        }
        (Experiment::Csv { .. }, Some(d)) => {
            let outer = kfold_split(d.n(), cfg.units, cfg.seed)?;
            (d.select_rows(&outer.training(u)), d.select_rows(&outer.held_out(u)), seed)
        }
        (Experiment::Csv { .. }, None) => unreachable!("csv data loaded up front"),
    })
}

fn run_unit(cfg: &BenchmarkConfig, data: Option<&Dataset>, u: usize) -> UnitResult {
    let start = Instant::now();
    let failed = |seed: u64, n_train, n_test, e: String| UnitResult {
        unit: u,
        seed,
        n_train,
        n_test,
        n_rules: 0,
        checksums: None,
        cells: cfg
            .methods
            .iter()
            .map(|&method| Cell {
                method,
                accuracy: None,
                degenerate: false,
                rmse: None,
                hyper: None,
                error: Some(e.clone()),
                matrix_checksum: None,
                wall_seconds: 0.0,
            })
            .collect(),
        error: Some(e),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let (train, test, seed) = match unit_split(cfg, data, u) {
        Ok(s) => s,
        Err(e) => return failed(child_seed(cfg.seed, u as u64), 0, 0, e.to_string()),
    };
    let isle = IsleConfig { seed: child_seed(seed, 1), ..cfg.isle };
    let rep = generate_ensemble_parallel(&train, &isle)
        .and_then(|e| Replication::new(&train, &test, e, cfg.rule_scope, cfg.cv_folds, child_seed(seed, 2)));
    let rep = match rep {
        Ok(r) => r,
        Err(e) => return failed(seed, train.n(), test.n(), e.to_string()),
    };
    let cells = cfg
        .methods
        .iter()
        .map(|&method| {
            let t = Instant::now();
            match evaluate_method(&rep, method, &cfg.settings) {
                Ok(o) => Cell {
                    method,
                    accuracy: Some(o.accuracy.value),
                    degenerate: o.accuracy.degenerate,
                    rmse: Some(o.rmse),
                    hyper: Some(o.hyper),
                    error: None,
                    matrix_checksum: Some(o.matrix_checksum),
                    wall_seconds: t.elapsed().as_secs_f64(),
                },
                Err(e) => Cell {
                    method,
                    accuracy: None,
                    degenerate: false,
                    rmse: None,
                    hyper: None,
                    error: Some(e.to_string()),
                    matrix_checksum: None,
                    wall_seconds: t.elapsed().as_secs_f64(),
                },
            }
        })
        .collect();
    UnitResult {
        unit: u,
        seed,
        n_train: train.n(),
        n_test: test.n(),
        n_rules: rep.rules.len(),
        checksums: Some(rep.checksums()),
        error: None,
        cells,
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Units run concurrently; results come back ordered by unit index.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let start = Instant::now();
    let data = load_experiment_data(&cfg.experiment)?;
    if let Some(d) = &data {
        if cfg.units < 2 || cfg.units > d.n() {
            return Err(CliError::Config(format!("outer folds must be in 2..={}, got {}", d.n(), cfg.units)));
        }
    }
    let units = (0..cfg.units).into_par_iter().map(|u| run_unit(cfg, data.as_ref(), u)).collect();
    Ok(BenchmarkResult {
        config: cfg.clone(),
        units,
        wall_seconds: start.elapsed().as_secs_f64(),
        started_unix,
        threads: rayon::current_num_threads(),
    })
}

/// Name of the hyperparameter a method selects, if any.
pub fn hyper_metric(id: MethodId) -> Option<&'static str> {
    match id {
        MethodId::RPls | MethodId::TPls => Some("components"),
        MethodId::RLasso | MethodId::TLasso => Some("lambda"),
        MethodId::WOob | MethodId::WtOob | MethodId::Ksr | MethodId::Kst => Some("bandwidth"),
        MethodId::Rf => None,
    }
}

fn hyper_value(h: &Hyperparams) -> f64 {
    match *h {
        Hyperparams::None => f64::NAN,
        Hyperparams::Components(k) => k as f64,
        Hyperparams::Lambda(l) => l,
        Hyperparams::Bandwidth(b) | Hyperparams::Oob { bandwidth: b, .. } => b,
    }
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

impl BenchmarkResult {
    /// Long-form `method,replication,metric,value` rows, ordered by unit and
    /// then by the configured method order. Failed cells hold `NaN`.
    pub fn write_long_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["method", "replication", "metric", "value"])?;
        for u in &self.units {
            for c in &u.cells {
                let name = c.method.name();
                let rep = u.unit.to_string();
                wr.write_record([name, &rep, "accuracy", &opt(c.accuracy).to_string()])?;
                wr.write_record([name, &rep, "rmse", &opt(c.rmse).to_string()])?;
                if let Some(m) = hyper_metric(c.method) {
                    wr.write_record([name, &rep, m, &opt(c.hyper.as_ref().map(hyper_value)).to_string()])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn long_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_long_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Successful accuracies of `id` in unit order.
    pub fn accuracies(&self, id: MethodId) -> Vec<f64> {
        self.units.iter().flat_map(|u| &u.cells).filter(|c| c.method == id).filter_map(|c| c.accuracy).collect()
    }

    pub fn summary(&self) -> Summary {
        let methods = self
            .config
            .methods
            .iter()
            .map(|&id| {
                let cells: Vec<&Cell> = self.units.iter().flat_map(|u| &u.cells).filter(|c| c.method == id).collect();
                let acc: Vec<f64> = cells.iter().filter_map(|c| c.accuracy).collect();
                let rmse: Vec<f64> = cells.iter().filter_map(|c| c.rmse).collect();
                MethodSummary {
                    method: id,
                    accuracy: Stats::of(&acc),
                    rmse: Stats::of(&rmse),
                    failed: cells.iter().filter(|c| c.error.is_some()).count(),
                }
            })
            .collect();
        let units = self
            .units
            .iter()
            .map(|u| UnitSummary {
                unit: u.unit,
                seed: u.seed,
                n_train: u.n_train,
                n_test: u.n_test,
                n_rules: u.n_rules,
                checksums: u.checksums,
                failures: u
                    .cells
                    .iter()
                    .filter_map(|c| c.error.as_ref().map(|e| Failure { method: c.method, error: e.clone() }))
                    .collect(),
            })
            .collect();
        Summary {
            format: "isle-benchmark".into(),
            version: crate::container::VERSION,
            config: self.config.clone(),
            methods,
            units,
            metadata: Metadata {
                started_unix: self.started_unix,
                wall_seconds: self.wall_seconds,
                threads: self.threads,
                unit_seconds: self.units.iter().map(|u| u.wall_seconds).collect(),
                cell_seconds: self
                    .units
                    .iter()
                    .flat_map(|u| u.cells.iter().map(move |c| CellTime { unit: u.unit, method: c.method, seconds: c.wall_seconds }))
                    .collect(),
            },
        }
    }

    /// Writes `results.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join("results.csv");
        let json_path = dir.join("summary.json");
        let mut w = create(&csv_path)?;
        w.write_all(self.long_csv().as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(&csv_path, e))?;
        crate::container::write_json(&json_path, &self.summary())?;
        Ok((csv_path, json_path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Sample standard deviation (n − 1).
    pub sd: Option<f64>,
}

impl Stats {
    pub fn of(v: &[f64]) -> Stats {
        let n = v.len();
        if n == 0 {
            return Stats { count: 0, mean: None, median: None, sd: None };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        let sd = (n > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Stats { count: n, mean: Some(mean), median: Some(median), sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MethodId,
    pub accuracy: Stats,
    pub rmse: Stats,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub method: MethodId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSummary {
    pub unit: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_rules: usize,
    pub checksums: Option<MatrixChecksums>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTime {
    pub unit: usize,
    pub method: MethodId,
    pub seconds: f64,
}

/// Run-dependent values, kept apart so everything else is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub threads: usize,
    pub unit_seconds: Vec<f64>,
    pub cell_seconds: Vec<CellTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format: String,
    pub version: u32,
    pub config: BenchmarkConfig,
    pub methods: Vec<MethodSummary>,
    pub units: Vec<UnitSummary>,
    pub metadata: Metadata,
}
