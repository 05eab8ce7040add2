//! Multi-threaded ensemble generation.

use isle_core::isle::{generate_ensemble, generate_member};
use isle_core::{Dataset, Ensemble, IsleConfig};
use rayon::prelude::*;

/// With memory ν = 0 every tree is fit to `y` from its own seeded stream, so
/// trees are generated concurrently and the result is identical to the
/// sequential one. Boosting (ν > 0) is inherently sequential.
pub fn generate_ensemble_parallel(train: &Dataset, cfg: &IsleConfig) -> isle_core::Result<Ensemble> {
    if cfg.memory != 0.0 {
        return generate_ensemble(train, cfg);
    }
    cfg.validate()?;
    if train.n() == 0 {
        return Err(isle_core::Error::InvalidArgument("training set is empty".into()));
    }
    let members = (0..cfg.n_trees)
        .into_par_iter()
        .map(|j| generate_member(train, train.target(), cfg, j))
        .collect::<isle_core::Result<Vec<_>>>()?;
    Ensemble::from_members(members, *cfg, train.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use isle_core::dataset::gen_friedman_popescu;

    #[test]
    fn matches_sequential() {
        let d = gen_friedman_popescu(7, 120);
        for memory in [0.0, 0.5] {
            let cfg = IsleConfig { n_trees: 16, memory, seed: 3, ..IsleConfig::default() };
            assert_eq!(generate_ensemble_parallel(&d, &cfg).unwrap(), generate_ensemble(&d, &cfg).unwrap());
        }
    }
}
