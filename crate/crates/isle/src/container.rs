//! Versioned JSON containers for ensembles, weight models and trained
//! model bundles.

use std::collections::BTreeMap;
use std::path::Path;

use isle_core::eval::{CvOutcome, FittedMethod, MethodId, MethodSettings};
use isle_core::{Ensemble, IsleConfig, RuleScope, RuleSet, WeightModel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::text::{parse_rules, parse_tree, render_rule, render_tree};

pub const VERSION: u32 = 1;

fn check(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(CliError::Data(format!("expected a {expected:?} file, found {format:?}")));
    }
    if version != VERSION {
        return Err(CliError::Data(format!("unsupported {expected} version {version} (this build reads {VERSION})")));
    }
    Ok(())
}

/// Trees are stored in the text tree format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub format: String,
    pub version: u32,
    pub config: IsleConfig,
    pub n_train: usize,
    pub trees: Vec<String>,
    pub coeffs: Vec<f64>,
    pub in_bag: Vec<Vec<usize>>,
}

impl EnsembleFile {
    pub const FORMAT: &'static str = "isle-ensemble";

    pub fn new(e: &Ensemble) -> Self {
        EnsembleFile {
            format: Self::FORMAT.into(),
            version: VERSION,
            config: *e.config(),
            n_train: e.n_train(),
            trees: e.trees().iter().map(render_tree).collect(),
            coeffs: e.coeffs().to_vec(),
            in_bag: e.in_bag().to_vec(),
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble> {
        check(&self.format, self.version, Self::FORMAT)?;
        let trees = self.trees.iter().map(|t| parse_tree(t)).collect::<Result<Vec<_>>>()?;
        Ok(Ensemble::from_parts(trees, self.coeffs.clone(), self.in_bag.clone(), self.config, self.n_train)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightModelFile {
    pub format: String,
    pub version: u32,
    pub model: WeightModel,
}

impl WeightModelFile {
    pub const FORMAT: &'static str = "isle-weights";

    pub fn new(model: &WeightModel) -> Self {
        WeightModelFile { format: Self::FORMAT.into(), version: VERSION, model: model.clone() }
    }

    pub fn into_model(self) -> Result<WeightModel> {
        check(&self.format, self.version, Self::FORMAT)?;
        Ok(self.model)
    }
}

/// Everything needed to predict with and explain a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub version: u32,
    /// The resolved flat configuration the model was trained with.
    pub config: BTreeMap<String, String>,
    pub feature_names: Vec<String>,
    pub target: String,
    pub method: MethodId,
    pub rule_scope: RuleScope,
    pub cv_folds: usize,
    pub settings: MethodSettings,
    pub ensemble: EnsembleFile,
    /// Rule text lines; empty unless the method uses rules.
    pub rules: Vec<String>,
    pub model: FittedMethod,
    pub cv: CvOutcome,
    /// Per learner column on the training rows: population standard
    /// deviation for trees, support for rules.
    pub learner_stats: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl Bundle {
    pub const FORMAT: &'static str = "isle-bundle";

    pub fn validate(&self) -> Result<()> {
        check(&self.format, self.version, Self::FORMAT)
    }

    pub fn rule_set(&self) -> Result<RuleSet> {
        parse_rules(&self.rules.join("\n"))
    }

    pub fn rule_lines(rs: &RuleSet) -> Vec<String> {
        rs.rules().iter().map(render_rule).collect()
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("containers serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    use std::io::Write;
    let mut w = crate::csv_io::create(path)?;
    w.write_all(to_json(v).as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn load_bundle(path: &Path) -> Result<Bundle> {
    let b: Bundle = read_json(path)?;
    b.validate()?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use isle_core::dataset::gen_friedman_popescu;
    use isle_core::isle::generate_ensemble;

    #[test]
    fn ensemble_round_trip() {
        let d = gen_friedman_popescu(1, 60);
        let e = generate_ensemble(&d, &IsleConfig { n_trees: 5, ..IsleConfig::default() }).unwrap();
        let file = EnsembleFile::new(&e);
        let back: EnsembleFile = serde_json::from_str(&to_json(&file)).unwrap();
        assert_eq!(back.to_ensemble().unwrap(), e);
    }

    #[test]
    fn weight_model_round_trip_and_version_check() {
        let w = isle_core::postproc::fit_pls(
            &isle_core::Matrix::from_fn(10, 2, |i, j| (i * (j + 2)) as f64 + (i % 3) as f64),
            &[1.0, 3.0, 2.0, 5.0, 4.0, 6.0, 8.0, 7.0, 9.0, 10.0],
            2,
        )
        .unwrap();
        let json = to_json(&WeightModelFile::new(&w));
        let back: WeightModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.clone().into_model().unwrap(), w);
        let mut wrong = back;
        wrong.version = 99;
        assert!(wrong.into_model().is_err());
    }
}
