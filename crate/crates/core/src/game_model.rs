//! Economic model of the pricing game: quantized action grids, payoff
//! functions, the quality function, and the fitted loss surface.
//!
//! Everything here is a pure function of its arguments and safe to call
//! from any number of threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("index {index} out of range for grid with {levels} levels")]
    IndexOutOfRange { index: usize, levels: usize },
    #[error("{name} = {value} is outside its valid domain")]
    OutOfDomain { name: &'static str, value: f64 },
    #[error("{name} = {value} does not lie on the action grid")]
    OffGrid { name: &'static str, value: f64 },
    #[error("strategy is not a probability simplex: {reason}")]
    SimplexViolation { reason: String },
    #[error("expected {expected} strategies, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Shared quantization of both players' action spaces: `K+1` price levels
/// spanning `[0, p_max]` and `J+1` noise-saving levels spanning `[0, sigma_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionGrids {
    /// Number of price intervals; the grid has `K+1` levels.
    pub price_intervals: usize,
    /// Number of noise-saving intervals; the grid has `J+1` levels.
    pub noise_intervals: usize,
    /// Maximum affordable payment.
    pub p_max: f64,
    /// Uniform ceiling on the locally added DP noise scale.
    pub sigma_max: f64,
}

impl ActionGrids {
    pub fn new(
        price_intervals: usize,
        noise_intervals: usize,
        p_max: f64,
        sigma_max: f64,
    ) -> Result<Self, ModelError> {
        if price_intervals == 0 {
            return Err(ModelError::InvalidParameter(
                "price_intervals (K) must be >= 1".into(),
            ));
        }
        if noise_intervals == 0 {
            return Err(ModelError::InvalidParameter(
                "noise_intervals (J) must be >= 1".into(),
            ));
        }
        if !(p_max > 0.0) {
            return Err(ModelError::InvalidParameter("p_max must be > 0".into()));
        }
        if !(sigma_max > 0.0) {
            return Err(ModelError::InvalidParameter("sigma_max must be > 0".into()));
        }
        Ok(Self {
            price_intervals,
            noise_intervals,
            p_max,
            sigma_max,
        })
    }

    pub fn price_levels(&self) -> usize {
        self.price_intervals + 1
    }

    pub fn noise_levels(&self) -> usize {
        self.noise_intervals + 1
    }

    /// Payment at grid index `k`: `(k / K) * p_max`.
    pub fn price_of_index(&self, k: usize) -> Result<f64, ModelError> {
        if k > self.price_intervals {
            return Err(ModelError::IndexOutOfRange {
                index: k,
                levels: self.price_levels(),
            });
        }
        Ok(k as f64 / self.price_intervals as f64 * self.p_max)
    }

    /// Saved noise scale at grid index `j`: `(j / J) * sigma_max`.
    /// The realized noise scale is `sigma_max - delta_sigma`.
    pub fn noise_saving_of_index(&self, j: usize) -> Result<f64, ModelError> {
        if j > self.noise_intervals {
            return Err(ModelError::IndexOutOfRange {
                index: j,
                levels: self.noise_levels(),
            });
        }
        Ok(j as f64 / self.noise_intervals as f64 * self.sigma_max)
    }

    fn index_of_price(&self, p: f64) -> Result<usize, ModelError> {
        let k = (p / self.p_max * self.price_intervals as f64).round();
        if k < 0.0 || k > self.price_intervals as f64 {
            return Err(ModelError::OffGrid {
                name: "price",
                value: p,
            });
        }
        let k = k as usize;
        let on_grid = self.price_of_index(k)?;
        if (p - on_grid).abs() > 1e-9 * self.p_max.max(1.0) {
            return Err(ModelError::OffGrid {
                name: "price",
                value: p,
            });
        }
        Ok(k)
    }

    fn index_of_noise_saving(&self, delta_sigma: f64) -> Result<usize, ModelError> {
        let j = (delta_sigma / self.sigma_max * self.noise_intervals as f64).round();
        if j < 0.0 || j > self.noise_intervals as f64 {
            return Err(ModelError::OffGrid {
                name: "noise saving",
                value: delta_sigma,
            });
        }
        let j = j as usize;
        let on_grid = self.noise_saving_of_index(j)?;
        if (delta_sigma - on_grid).abs() > 1e-9 * self.sigma_max.max(1.0) {
            return Err(ModelError::OffGrid {
                name: "noise saving",
                value: delta_sigma,
            });
        }
        Ok(j)
    }
}

/// One data owner's private parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoProfile {
    /// Unit privacy leakage cost `c_n`.
    pub unit_privacy_cost: f64,
    /// Dirichlet non-IID degree `beta_n`.
    pub non_iid_degree: f64,
    /// Mini-batch size `X_n`.
    pub batch_size: u32,
    /// Lipschitz constant of the local objective.
    pub lipschitz: f64,
    /// Training data size; carried for reporting only.
    pub data_size: u64,
}

impl DoProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.unit_privacy_cost > 0.0) {
            return Err(ModelError::InvalidParameter(
                "unit_privacy_cost must be > 0".into(),
            ));
        }
        if !(self.non_iid_degree > 0.0) {
            return Err(ModelError::InvalidParameter(
                "non_iid_degree must be > 0".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidParameter(
                "batch_size must be >= 1".into(),
            ));
        }
        if !(self.lipschitz > 0.0) {
            return Err(ModelError::InvalidParameter("lipschitz must be > 0".into()));
        }
        Ok(())
    }
}

/// Adjustment factors of both payoff functions and the quality mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    /// Revenue factor in the data-owner payoff.
    pub lambda_r: f64,
    /// Privacy-loss factor in the data-owner payoff.
    pub nu: f64,
    /// Curator's quality weight, in `[0, 1]`.
    pub varpi: f64,
    /// Curator's quality factor.
    pub lambda_s: f64,
    /// Curator's payment factor.
    pub mu: f64,
    /// Quality-loss slope.
    pub zeta_1: f64,
    /// Maximum model quality, attained as the loss goes to zero.
    pub zeta_2: f64,
}

impl EconParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("lambda_r", self.lambda_r),
            ("nu", self.nu),
            ("lambda_s", self.lambda_s),
            ("mu", self.mu),
            ("zeta_1", self.zeta_1),
            ("zeta_2", self.zeta_2),
        ] {
            if !(v > 0.0) {
                return Err(ModelError::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.varpi) {
            return Err(ModelError::InvalidParameter(
                "varpi must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Fitted coefficients of the 3D sigmoid loss surface, together with the
/// noise ceiling it was fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModelParams {
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub gamma_3: f64,
    pub gamma_4: f64,
    pub gamma_5: f64,
    pub sigma_max: f64,
}

impl LossModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("gamma_3", self.gamma_3),
            ("gamma_4", self.gamma_4),
            ("gamma_5", self.gamma_5),
            ("sigma_max", self.sigma_max),
        ] {
            if !(v > 0.0) {
                return Err(ModelError::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }
}

/// A probability distribution over one action grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        check_simplex(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        assert!(index < len);
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Shared simplex check: entries in `[0, 1]`, sum within `1e-9` of one.
pub fn check_simplex(probs: &[f64]) -> Result<(), ModelError> {
    if probs.is_empty() {
        return Err(ModelError::SimplexViolation {
            reason: "empty probability vector".into(),
        });
    }
    for (i, &p) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::SimplexViolation {
                reason: format!("entry {i} = {p} outside [0, 1]"),
            });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > MixedStrategy::SUM_TOLERANCE {
        return Err(ModelError::SimplexViolation {
            reason: format!("entries sum to {sum}"),
        });
    }
    Ok(())
}

/// Fitted model loss as a function of the saved noise scale and the
/// non-IID degree:
/// `gamma_1 * exp(-gamma_2 * beta) / (gamma_3 + exp(-gamma_4 * (sigma_max - delta_sigma))) + gamma_5`.
pub fn model_loss(
    delta_sigma: f64,
    beta: f64,
    params: &LossModelParams,
) -> Result<f64, ModelError> {
    if !(0.0..=params.sigma_max).contains(&delta_sigma) {
        return Err(ModelError::OutOfDomain {
            name: "delta_sigma",
            value: delta_sigma,
        });
    }
    if !(beta > 0.0) {
        return Err(ModelError::OutOfDomain {
            name: "beta",
            value: beta,
        });
    }
    let numerator = params.gamma_1 * (-params.gamma_2 * beta).exp();
    let denominator = params.gamma_3 + (-params.gamma_4 * (params.sigma_max - delta_sigma)).exp();
    Ok(numerator / denominator + params.gamma_5)
}

/// Model quality measured from the loss: `-zeta_1 * loss + zeta_2`.
pub fn model_quality(
    delta_sigma: f64,
    beta: f64,
    econ: &EconParams,
    params: &LossModelParams,
) -> Result<f64, ModelError> {
    Ok(-econ.zeta_1 * model_loss(delta_sigma, beta, params)? + econ.zeta_2)
}

/// Data-owner payoff realized for one pure action pair:
/// `lambda_r * p - nu * c_n * (sigma_max - delta_sigma)`.
pub fn do_realized_payoff(
    p: f64,
    delta_sigma: f64,
    profile: &DoProfile,
    econ: &EconParams,
    grids: &ActionGrids,
) -> Result<f64, ModelError> {
    grids.index_of_price(p)?;
    grids.index_of_noise_saving(delta_sigma)?;
    Ok(do_realized_payoff_unchecked(
        p,
        delta_sigma,
        profile,
        econ,
        grids,
    ))
}

pub(crate) fn do_realized_payoff_unchecked(
    p: f64,
    delta_sigma: f64,
    profile: &DoProfile,
    econ: &EconParams,
    grids: &ActionGrids,
) -> f64 {
    econ.lambda_r * p - econ.nu * profile.unit_privacy_cost * (grids.sigma_max - delta_sigma)
}

/// Curator payoff realized for one pure action pair with one data owner:
/// `varpi * lambda_s * quality(delta_sigma, beta) - (1 - varpi) * mu * p`.
pub fn curator_realized_payoff_per_do(
    p: f64,
    delta_sigma: f64,
    beta: f64,
    econ: &EconParams,
    loss_params: &LossModelParams,
) -> Result<f64, ModelError> {
    let quality = model_quality(delta_sigma, beta, econ, loss_params)?;
    Ok(econ.varpi * econ.lambda_s * quality - (1.0 - econ.varpi) * econ.mu * p)
}

/// Bilinear expectation of the data-owner payoff under a product
/// distribution over the two action grids.
///
/// `x_n` mixes over the `K+1` price levels, `y_n` over the `J+1`
/// noise-saving levels.
pub fn do_expected_payoff(
    x_n: &MixedStrategy,
    y_n: &MixedStrategy,
    profile: &DoProfile,
    econ: &EconParams,
    grids: &ActionGrids,
) -> Result<f64, ModelError> {
    if x_n.len() != grids.price_levels() {
        return Err(ModelError::LengthMismatch {
            expected: grids.price_levels(),
            got: x_n.len(),
        });
    }
    if y_n.len() != grids.noise_levels() {
        return Err(ModelError::LengthMismatch {
            expected: grids.noise_levels(),
            got: y_n.len(),
        });
    }
    check_simplex(x_n.probs())?;
    check_simplex(y_n.probs())?;
    let mut total = 0.0;
    for (k, &xk) in x_n.probs().iter().enumerate() {
        let p = grids.price_of_index(k)?;
        for (j, &yj) in y_n.probs().iter().enumerate() {
            let ds = grids.noise_saving_of_index(j)?;
            total += xk * yj * do_realized_payoff_unchecked(p, ds, profile, econ, grids);
        }
    }
    Ok(total)
}

/// Curator's expected payoff: the sum over data owners of the bilinear
/// expectation of the per-owner realized payoff.
pub fn curator_expected_payoff(
    x: &[MixedStrategy],
    y: &[MixedStrategy],
    profiles: &[DoProfile],
    econ: &EconParams,
    loss_params: &LossModelParams,
    grids: &ActionGrids,
) -> Result<f64, ModelError> {
    if x.len() != profiles.len() {
        return Err(ModelError::LengthMismatch {
            expected: profiles.len(),
            got: x.len(),
        });
    }
    if y.len() != profiles.len() {
        return Err(ModelError::LengthMismatch {
            expected: profiles.len(),
            got: y.len(),
        });
    }
    let mut total = 0.0;
    for ((x_n, y_n), profile) in x.iter().zip(y).zip(profiles) {
        total += curator_expected_payoff_per_do(x_n, y_n, profile, econ, loss_params, grids)?;
    }
    Ok(total)
}

/// Per-owner term of the curator's expected payoff.
pub fn curator_expected_payoff_per_do(
    x_n: &MixedStrategy,
    y_n: &MixedStrategy,
    profile: &DoProfile,
    econ: &EconParams,
    loss_params: &LossModelParams,
    grids: &ActionGrids,
) -> Result<f64, ModelError> {
    if x_n.len() != grids.price_levels() {
        return Err(ModelError::LengthMismatch {
            expected: grids.price_levels(),
            got: x_n.len(),
        });
    }
    if y_n.len() != grids.noise_levels() {
        return Err(ModelError::LengthMismatch {
            expected: grids.noise_levels(),
            got: y_n.len(),
        });
    }
    check_simplex(x_n.probs())?;
    check_simplex(y_n.probs())?;
    let mut total = 0.0;
    for (k, &xk) in x_n.probs().iter().enumerate() {
        let p = grids.price_of_index(k)?;
        for (j, &yj) in y_n.probs().iter().enumerate() {
            let ds = grids.noise_saving_of_index(j)?;
            total += xk
                * yj
                * curator_realized_payoff_per_do(p, ds, profile.non_iid_degree, econ, loss_params)?;
        }
    }
    Ok(total)
}
