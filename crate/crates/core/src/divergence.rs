//! Renyi-divergence calculus: closed forms for Gaussian pairs, the
//! empirical divergence of discrete distributions, and conversions between
//! the max-relative-Renyi robustness budget and the PixelDP / pure Renyi
//! views of the same mechanism.
//!
//! Everything that exponentiates probabilities runs in log space so orders
//! up to 1e6 and probabilities down to 1e-9 stay representable.

use crate::error::{Error, Result};
use crate::math::logaddexp;

/// A Renyi order `alpha` in `(1, infinity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::invalid(format!("Renyi order must exceed 1, got {alpha}")));
        }
        Ok(RenyiOrder(alpha))
    }

    /// The sup-divergence order.
    pub const fn infinity() -> Self {
        RenyiOrder(f64::INFINITY)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// Perturbation norm for robustness statements.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Norm {
    L2,
    Linf,
    /// General order `p >= 2` (finite).
    Lp(f64),
}

impl Norm {
    /// Build from a numeric order; `p = 2` maps to `L2` and infinite `p`
    /// to `Linf`.
    pub fn from_order(p: f64) -> Result<Self> {
        if !(p >= 2.0) {
            return Err(Error::invalid(format!("norm order must satisfy p >= 2, got {p}")));
        }
        if p.is_infinite() {
            Ok(Norm::Linf)
        } else if p == 2.0 {
            Ok(Norm::L2)
        } else {
            Ok(Norm::Lp(p))
        }
    }

    /// Numeric order (infinity for `Linf`).
    pub fn order(self) -> f64 {
        match self {
            Norm::L2 => 2.0,
            Norm::Linf => f64::INFINITY,
            Norm::Lp(p) => p,
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Norm::L2 => write!(f, "l2"),
            Norm::Linf => write!(f, "linf"),
            Norm::Lp(p) => write!(f, "lp:{p}"),
        }
    }
}

/// A robustness budget `(radius, norm, epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessBudget {
    pub radius: f64,
    pub norm: Norm,
    pub epsilon: f64,
}

impl RobustnessBudget {
    pub fn new(radius: f64, norm: Norm, epsilon: f64) -> Result<Self> {
        if !(radius >= 0.0) || !(epsilon >= 0.0) {
            return Err(Error::invalid(format!(
                "radius and epsilon must be nonnegative, got r={radius}, eps={epsilon}"
            )));
        }
        if let Norm::Lp(p) = norm {
            if !(p >= 2.0) {
                return Err(Error::invalid(format!("norm order must satisfy p >= 2, got {p}")));
            }
        }
        Ok(RobustnessBudget { radius, norm, epsilon })
    }
}

/// Renyi divergence of two isotropic Gaussians with shared scale at l2
/// distance `dist`: `alpha * dist^2 / (2 sigma^2)`.
pub fn renyi_gaussian(order: RenyiOrder, dist: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(dist >= 0.0) {
        return Err(Error::invalid(format!("distance must be nonnegative, got {dist}")));
    }
    if dist == 0.0 {
        return Ok(0.0);
    }
    Ok(order.value() * dist * dist / (2.0 * sigma * sigma))
}

/// Max-relative-Renyi divergence of the same Gaussian pair. The ratio
/// `D_alpha / alpha` is constant in alpha for Gaussians, so the maximum is
/// simply `dist^2 / (2 sigma^2)`.
pub fn mr_gaussian(dist: f64, sigma: f64) -> Result<f64> {
    renyi_gaussian(RenyiOrder(2.0), dist, sigma).map(|v| v / 2.0)
}

/// Convert a max-relative-Renyi budget `eps` into the PixelDP epsilon at
/// failure probability `delta`: `eps + 2 sqrt(eps ln(1/delta))`.
///
/// Equals the minimum over `alpha > 1` of
/// `alpha eps + ln(1/delta) / (alpha - 1)`.
pub fn dmr_to_pixeldp(eps: f64, delta: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0, 1), got {delta}")));
    }
    Ok(eps + 2.0 * (eps * (1.0 / delta).ln()).sqrt())
}

/// Bound the order-`alpha` Renyi divergence of a pair with symmetric
/// sup-divergence at most `eps_inf`: `alpha * eps_inf^2 / 2`.
pub fn dinf_to_renyi(eps_inf: f64, order: RenyiOrder) -> Result<f64> {
    if !(eps_inf >= 0.0) {
        return Err(Error::invalid(format!(
            "sup-divergence must be nonnegative, got {eps_inf}"
        )));
    }
    if eps_inf == 0.0 {
        return Ok(0.0);
    }
    Ok(order.value() * eps_inf * eps_inf / 2.0)
}

/// Renyi divergence of two discrete distributions on a shared support.
///
/// `D_alpha(P||Q) = 1/(alpha-1) * log sum_i p_i^alpha q_i^(1-alpha)`,
/// accumulated as a log-sum-exp over `alpha ln p_i + (1-alpha) ln q_i`.
/// Entries with `p_i = 0` contribute nothing; `p_i > 0` where `q_i = 0`
/// makes the divergence undefined.
pub fn renyi_empirical(p: &[f64], q: &[f64], order: RenyiOrder) -> Result<f64> {
    check_distributions(p, q)?;

    if order.is_infinite() {
        let mut max_log_ratio = f64::NEG_INFINITY;
        for (&pi, &qi) in p.iter().zip(q) {
            if pi > 0.0 {
                max_log_ratio = max_log_ratio.max(pi.ln() - qi.ln());
            }
        }
        return Ok(max_log_ratio.max(0.0));
    }

    let alpha = order.value();
    let mut log_sum = f64::NEG_INFINITY;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            log_sum = logaddexp(log_sum, alpha * pi.ln() + (1.0 - alpha) * qi.ln());
        }
    }
    // Rounding can push the sum for identical distributions a hair below 1.
    Ok((log_sum / (alpha - 1.0)).max(0.0))
}

/// Like [`renyi_empirical`] but with zero probabilities raised to `floor`
/// (default regularization 1e-12) and the distributions renormalized.
///
/// This is a documented regularization for empirical histograms that
/// contain structural zeros; prefer the erroring variant when zeros are
/// meaningful.
pub fn renyi_empirical_floored(p: &[f64], q: &[f64], order: RenyiOrder, floor: f64) -> Result<f64> {
    if !(floor > 0.0) {
        return Err(Error::invalid(format!("floor must be positive, got {floor}")));
    }
    let raise = |dist: &[f64]| -> Vec<f64> {
        let raised: Vec<f64> = dist.iter().map(|&v| v.max(floor)).collect();
        let total: f64 = raised.iter().sum();
        raised.iter().map(|v| v / total).collect()
    };
    renyi_empirical(&raise(p), &raise(q), order)
}

fn check_distributions(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "distributions must share a nonempty support, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !(0.0..=1.0 + 1e-12).contains(&pi) || !(0.0..=1.0 + 1e-12).contains(&qi) {
            return Err(Error::invalid(format!(
                "probabilities must lie in [0, 1]; index {i} has p={pi}, q={qi}"
            )));
        }
        if pi > 0.0 && qi == 0.0 {
            return Err(Error::DivergenceUndefined(format!(
                "P has mass {pi} at index {i} where Q is zero"
            )));
        }
    }
    Ok(())
}
