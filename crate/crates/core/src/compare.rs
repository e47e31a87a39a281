//! Scheme comparison: runs each learning scheme against the identical
//! owner population (same master seed) and collects convergence and
//! payoff statistics per scheme.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex_string, ConfigError, GameConfig, Scheme};
use crate::engine::{Engine, IterationRecord, RunSummary};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    /// Iterations actually played (early stop included).
    pub iterations_run: u64,
    pub converged: bool,
    /// Convergence iteration; the iteration budget when never converged,
    /// so unconverged schemes sort last.
    pub iterations_to_convergence: u64,
    pub converged_mean_delta_sigma: f64,
    pub converged_mean_price: f64,
    /// Mean per-iteration curator payoff over the final window.
    pub converged_curator_payoff: f64,
    pub cumulative_do_payoff: f64,
    pub cumulative_curator_payoff: f64,
    /// Digest of the sampled owner population; equal across schemes run
    /// from the same seed.
    pub population_digest: String,
}

/// Runs every requested scheme on the same population and summarizes
/// each run. The trace of each run is handed back for serialization.
pub fn compare_schemes(
    base: &GameConfig,
    schemes: &[Scheme],
) -> Result<Vec<(SchemeResult, Vec<IterationRecord>)>, ConfigError> {
    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let mut config = base.clone();
        config.do_scheme = scheme;
        config.curator_scheme = scheme;
        let mut engine = Engine::new(config)?;
        let digest = population_digest(&engine);
        let (trace, summary) = engine.run();
        out.push((
            scheme_result(scheme, &summary, digest, base.max_iterations),
            trace,
        ));
    }
    Ok(out)
}

fn scheme_result(
    scheme: Scheme,
    summary: &RunSummary,
    population_digest: String,
    max_iterations: u64,
) -> SchemeResult {
    SchemeResult {
        scheme,
        iterations_run: summary.iterations_run,
        converged: summary.converged,
        iterations_to_convergence: summary.convergence_iteration.unwrap_or(max_iterations),
        converged_mean_delta_sigma: summary.converged_mean_delta_sigma,
        converged_mean_price: summary.converged_mean_price,
        converged_curator_payoff: summary.converged_curator_payoff,
        cumulative_do_payoff: summary.cumulative_do_payoff,
        cumulative_curator_payoff: summary.cumulative_curator_payoff,
        population_digest,
    }
}

pub fn population_digest(engine: &Engine) -> String {
    let bytes = serde_json::to_vec(engine.profiles()).expect("profiles serialize");
    hex_string(&Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn single_scheme_matches_plain_run() {
        let cfg =
            parse_config("[game]\nnum_dos = 2\nmax_iterations = 60\nmaster_seed = 4\n").unwrap();
        let results = compare_schemes(&cfg, &[Scheme::WolfPhc]).unwrap();
        assert_eq!(results.len(), 1);
        let (res, trace) = &results[0];
        let mut engine = Engine::new(cfg).unwrap();
        let (direct_trace, direct_summary) = engine.run();
        assert_eq!(*trace, direct_trace);
        assert_eq!(res.iterations_run, direct_summary.iterations_run);
        assert_eq!(
            res.cumulative_curator_payoff,
            direct_summary.cumulative_curator_payoff
        );
    }

    #[test]
    fn schemes_share_the_population() {
        let cfg =
            parse_config("[game]\nnum_dos = 5\nmax_iterations = 40\nmaster_seed = 9\n").unwrap();
        let results = compare_schemes(&cfg, &Scheme::ALL).unwrap();
        assert_eq!(results.len(), 3);
        let digest = &results[0].0.population_digest;
        for (res, _) in &results {
            assert_eq!(&res.population_digest, digest);
        }
    }
}
