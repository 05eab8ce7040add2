//! Typed readers for the configuration keys shared by several commands.

use isle_core::eval::{MethodId, MethodSettings};
use isle_core::{IsleConfig, Kernel, RuleScope, Sampling, SamplingMode, SplitSearch};

use crate::config::{parse_bool, Fields};

pub fn parse_sampling_mode(s: &str) -> Result<SamplingMode, String> {
    match s {
        "bootstrap" => Ok(SamplingMode::Bootstrap),
        "subsample" => Ok(SamplingMode::Subsample),
        _ => Err("expected bootstrap or subsample".into()),
    }
}

pub fn parse_kernel(s: &str) -> Result<Kernel, String> {
    match s {
        "gaussian" => Ok(Kernel::Gaussian),
        "epanechnikov" => Ok(Kernel::Epanechnikov),
        _ => Err("expected gaussian or epanechnikov".into()),
    }
}

pub fn parse_scope(s: &str) -> Result<RuleScope, String> {
    match s {
        "all" => Ok(RuleScope::AllNodes),
        "terminal" => Ok(RuleScope::TerminalOnly),
        _ => Err("expected all or terminal".into()),
    }
}

pub fn scope_name(s: RuleScope) -> &'static str {
    match s {
        RuleScope::AllNodes => "all",
        RuleScope::TerminalOnly => "terminal",
    }
}

pub fn kernel_name(k: Kernel) -> &'static str {
    match k {
        Kernel::Gaussian => "gaussian",
        Kernel::Epanechnikov => "epanechnikov",
    }
}

fn parse_search(s: &str) -> Result<SplitSearch, String> {
    match s {
        "greedy" => Ok(SplitSearch::Greedy),
        "exhaustive" => Ok(SplitSearch::Exhaustive),
        _ => Err("expected greedy or exhaustive".into()),
    }
}

pub fn parse_method(s: &str) -> Result<MethodId, String> {
    s.parse::<MethodId>().map_err(|e| e.to_string())
}

/// Ensemble generation keys layered over `base`.
pub fn read_isle(f: &mut Fields<'_>, base: IsleConfig) -> IsleConfig {
    let mut c = base;
    c.n_trees = f.or("n_trees", c.n_trees);
    c.memory = f.or("memory", c.memory);
    c.seed = f.or("seed", c.seed);
    c.tree.max_depth = f.or("max_depth", c.tree.max_depth);
    c.tree.min_leaf = f.or("min_leaf", c.tree.min_leaf);
    c.tree.feature_fraction = f.or("feature_fraction", c.tree.feature_fraction);
    if let Some(s) = f.parse_with("split_search", parse_search) {
        c.tree.search = s;
    }
    let mode = f.parse_with("sampling", parse_sampling_mode).unwrap_or(c.sampling.mode);
    c.sampling = Sampling { mode, fraction: f.or("sample_fraction", c.sampling.fraction) };
    if let Some(b) = f.parse_with("require_oob", parse_bool) {
        c.require_oob = b;
    }
    if let Err(e) = c.validate() {
        f.problem(e.to_string());
    }
    c
}

/// Post-processing grid keys layered over `base`.
pub fn read_method_settings(f: &mut Fields<'_>, base: MethodSettings) -> MethodSettings {
    let mut s = base;
    if let Some(k) = f.parse_with("kernel", parse_kernel) {
        s.kernel = k;
    }
    s.keep_fraction = f.or("keep_fraction", s.keep_fraction);
    s.max_components = f.or("max_components", s.max_components);
    s.n_lambdas = f.or("n_lambdas", s.n_lambdas);
    s.lambda_ratio = f.or("lambda_ratio", s.lambda_ratio);
    s.n_bandwidths = f.or("n_bandwidths", s.n_bandwidths);
    s.bandwidth_span = (f.or("bandwidth_lo", s.bandwidth_span.0), f.or("bandwidth_hi", s.bandwidth_span.1));
    if let Some(h) = f.list("oob_bandwidths") {
        s.oob_bandwidths = Some(h);
    }
    if let Some(h) = f.list("nw_bandwidths") {
        s.nw_bandwidths = Some(h);
    }
    if let Err(e) = s.validate() {
        f.problem(e.to_string());
    }
    s
}

pub fn read_scope(f: &mut Fields<'_>, base: RuleScope) -> RuleScope {
    f.parse_with("rule_scope", parse_scope).unwrap_or(base)
}

pub fn read_cv_folds(f: &mut Fields<'_>, base: usize) -> usize {
    let k = f.or("cv_folds", base);
    if k < 2 {
        f.problem(format!("cv_folds = {k}: need at least 2"));
    }
    k
}
