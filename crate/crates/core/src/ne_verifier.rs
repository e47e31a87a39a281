//! Best-response oracle certifying approximate Nash equilibria of
//! converged strategy profiles.
//!
//! Both expected payoffs are linear in each single player's mixed
//! strategy, so the best pure deviation attains the best mixed one and
//! exhaustive enumeration over the action grid is exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Engine, RunSnapshot};
use crate::game_model::{self, ActionGrids, DoProfile, EconParams, LossModelParams, MixedStrategy};
use crate::learners::LearnerState;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no visited states: run the game before verifying")]
    NoVisitedStates,
    #[error(transparent)]
    Model(#[from] game_model::ModelError),
}

/// Unilateral-deviation gains of a strategy profile. The profile is an
/// `eps`-equilibrium iff `epsilon <= eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExploitabilityReport {
    /// Per-owner best-response gain over the owner's noise strategy.
    pub do_gains: Vec<f64>,
    /// Per-owner components of the curator's best-response gain.
    pub curator_gains_per_do: Vec<f64>,
    /// Total curator gain (the per-owner components summed).
    pub curator_gain: f64,
    /// Maximum of all reported gains.
    pub epsilon: f64,
    /// State each owner strategy was read from (most visited).
    pub do_states: Vec<usize>,
    /// State each curator strategy was read from (most visited).
    pub curator_states: Vec<usize>,
    /// Gains of the visit-weighted average policies, for reference.
    pub visit_weighted_do_gains: Vec<f64>,
    pub visit_weighted_curator_gain: f64,
}

/// Best gain an owner can earn by deviating from `y_n` to any pure
/// noise-saving action, holding the curator's `x_n` fixed.
pub fn do_best_response_gain(
    x_n: &MixedStrategy,
    y_n: &MixedStrategy,
    profile: &DoProfile,
    econ: &EconParams,
    grids: &ActionGrids,
) -> Result<f64, game_model::ModelError> {
    let current = game_model::do_expected_payoff(x_n, y_n, profile, econ, grids)?;
    let mut best = f64::NEG_INFINITY;
    for j in 0..grids.noise_levels() {
        let pure = MixedStrategy::point_mass(grids.noise_levels(), j);
        best = best.max(game_model::do_expected_payoff(
            x_n, &pure, profile, econ, grids,
        )?);
    }
    Ok(best - current)
}

/// Best gain the curator can earn by deviating in its per-owner pricing
/// strategies; the payoff separates over owners, so the total is the sum
/// of independent per-owner gains.
pub fn curator_best_response_gain(
    x: &[MixedStrategy],
    y: &[MixedStrategy],
    profiles: &[DoProfile],
    econ: &EconParams,
    loss_params: &LossModelParams,
    grids: &ActionGrids,
) -> Result<f64, game_model::ModelError> {
    Ok(
        curator_gains_per_do(x, y, profiles, econ, loss_params, grids)?
            .iter()
            .sum(),
    )
}

pub fn curator_gains_per_do(
    x: &[MixedStrategy],
    y: &[MixedStrategy],
    profiles: &[DoProfile],
    econ: &EconParams,
    loss_params: &LossModelParams,
    grids: &ActionGrids,
) -> Result<Vec<f64>, game_model::ModelError> {
    if x.len() != profiles.len() {
        return Err(game_model::ModelError::LengthMismatch {
            expected: profiles.len(),
            got: x.len(),
        });
    }
    if y.len() != profiles.len() {
        return Err(game_model::ModelError::LengthMismatch {
            expected: profiles.len(),
            got: y.len(),
        });
    }
    let mut gains = Vec::with_capacity(profiles.len());
    for ((x_n, y_n), profile) in x.iter().zip(y).zip(profiles) {
        let current = game_model::curator_expected_payoff_per_do(
            x_n,
            y_n,
            profile,
            econ,
            loss_params,
            grids,
        )?;
        let mut best = f64::NEG_INFINITY;
        for k in 0..grids.price_levels() {
            let pure = MixedStrategy::point_mass(grids.price_levels(), k);
            best = best.max(game_model::curator_expected_payoff_per_do(
                &pure,
                y_n,
                profile,
                econ,
                loss_params,
                grids,
            )?);
        }
        gains.push(best - current);
    }
    Ok(gains)
}

/// Assembles the equilibrium certificate for a finished run: each
/// agent's strategy is its policy row at its most-visited state.
pub fn exploitability(engine: &Engine) -> Result<ExploitabilityReport, VerifyError> {
    let snapshot = engine.snapshot();
    exploitability_of_snapshot(
        &snapshot,
        engine.config().grids,
        engine.config().econ,
        engine.config().loss,
    )
}

pub fn exploitability_of_snapshot(
    snapshot: &RunSnapshot,
    grids: ActionGrids,
    econ: EconParams,
    loss: LossModelParams,
) -> Result<ExploitabilityReport, VerifyError> {
    let visited: u64 = snapshot
        .do_learners
        .iter()
        .chain(&snapshot.curator_learners)
        .map(|l| (0..l.num_states()).map(|s| l.visit_count(s)).sum::<u64>())
        .sum();
    if visited == 0 {
        return Err(VerifyError::NoVisitedStates);
    }

    let strategy_at = |l: &LearnerState, s: usize| -> Result<MixedStrategy, VerifyError> {
        Ok(MixedStrategy::new(l.policy_row(s).to_vec())?)
    };

    let do_states: Vec<usize> = snapshot
        .do_learners
        .iter()
        .map(|l| l.most_visited_state())
        .collect();
    let curator_states: Vec<usize> = snapshot
        .curator_learners
        .iter()
        .map(|l| l.most_visited_state())
        .collect();

    let y: Vec<MixedStrategy> = snapshot
        .do_learners
        .iter()
        .zip(&do_states)
        .map(|(l, &s)| strategy_at(l, s))
        .collect::<Result<_, _>>()?;
    let x: Vec<MixedStrategy> = snapshot
        .curator_learners
        .iter()
        .zip(&curator_states)
        .map(|(l, &s)| strategy_at(l, s))
        .collect::<Result<_, _>>()?;

    let mut do_gains = Vec::with_capacity(y.len());
    for (n, (x_n, y_n)) in x.iter().zip(&y).enumerate() {
        do_gains.push(do_best_response_gain(
            x_n,
            y_n,
            &snapshot.profiles[n],
            &econ,
            &grids,
        )?);
    }
    let curator_per_do = curator_gains_per_do(&x, &y, &snapshot.profiles, &econ, &loss, &grids)?;
    let curator_gain: f64 = curator_per_do.iter().sum();

    // Same gains for the visit-weighted average of each policy table.
    let y_w: Vec<MixedStrategy> = snapshot
        .do_learners
        .iter()
        .map(|l| MixedStrategy::new(l.visit_weighted_policy()).map_err(VerifyError::from))
        .collect::<Result<_, _>>()?;
    let x_w: Vec<MixedStrategy> = snapshot
        .curator_learners
        .iter()
        .map(|l| MixedStrategy::new(l.visit_weighted_policy()).map_err(VerifyError::from))
        .collect::<Result<_, _>>()?;
    let mut visit_weighted_do_gains = Vec::with_capacity(y_w.len());
    for (n, (x_n, y_n)) in x_w.iter().zip(&y_w).enumerate() {
        visit_weighted_do_gains.push(do_best_response_gain(
            x_n,
            y_n,
            &snapshot.profiles[n],
            &econ,
            &grids,
        )?);
    }
    let visit_weighted_curator_gain =
        curator_best_response_gain(&x_w, &y_w, &snapshot.profiles, &econ, &loss, &grids)?;

    let epsilon = do_gains
        .iter()
        .chain(std::iter::once(&curator_gain))
        .fold(f64::NEG_INFINITY, |m, &g| m.max(g));

    Ok(ExploitabilityReport {
        do_gains,
        curator_gains_per_do: curator_per_do,
        curator_gain,
        epsilon,
        do_states,
        curator_states,
        visit_weighted_do_gains,
        visit_weighted_curator_gain,
    })
}
