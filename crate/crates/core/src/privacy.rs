//! Privacy budget accounting for the Gaussian mechanism under zCDP.
//!
//! Budgets are reporting-only: no noise is sampled here. A zero noise
//! scale carries no zCDP guarantee and is reported as an infinite budget.

use serde::{Deserialize, Serialize};

use crate::game_model::{ActionGrids, DoProfile, ModelError};

/// Per-owner, per-configuration privacy accounting snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    /// Query sensitivity of the local model update.
    pub sensitivity: f64,
    /// Realized Gaussian noise scale, `sigma_max - delta_sigma`.
    pub sigma: f64,
    /// zCDP budget; `+inf` when sigma is zero.
    pub alpha: f64,
}

/// Query sensitivity `2 L / X_n` of an owner's clipped mini-batch update.
pub fn query_sensitivity(profile: &DoProfile) -> f64 {
    2.0 * profile.lipschitz / profile.batch_size as f64
}

/// zCDP budget of the Gaussian mechanism: `2 L^2 / (X_n^2 sigma^2)`.
///
/// `sigma = 0` yields `+inf` (no privacy guarantee).
pub fn zcdp_budget(sigma: f64, profile: &DoProfile) -> Result<f64, ModelError> {
    if sigma < 0.0 {
        return Err(ModelError::OutOfDomain {
            name: "sigma",
            value: sigma,
        });
    }
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let x = profile.batch_size as f64;
    Ok(2.0 * profile.lipschitz * profile.lipschitz / (x * x * sigma * sigma))
}

/// Assembles the report for one noise-saving grid index.
pub fn privacy_report(
    delta_sigma_index: usize,
    profile: &DoProfile,
    grids: &ActionGrids,
) -> Result<PrivacyReport, ModelError> {
    let delta_sigma = grids.noise_saving_of_index(delta_sigma_index)?;
    let sigma = grids.sigma_max - delta_sigma;
    Ok(PrivacyReport {
        sensitivity: query_sensitivity(profile),
        sigma,
        alpha: zcdp_budget(sigma, profile)?,
    })
}
