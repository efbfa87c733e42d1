//! Certified-radius computation: the Renyi bound `B(alpha; p1, p2)` on the
//! divergence budget, its supremum over `alpha in (1, inf)`, and the radius
//! formulas for the Gaussian (l2, linf, lp) and Exponential (linf)
//! mechanisms, plus the Neyman-Pearson-style comparison radius.
//!
//! All probability powers are taken as `exp((1 - alpha) * ln p)` combined by
//! log-sum-exp, so the solver survives alpha up to 1e6 and probabilities
//! down to 1e-9.

use crate::error::{Error, Result};
use crate::math::{golden_section_max, logaddexp, normal_quantile};

/// Runner-up probabilities below this are raised to it before evaluating
/// the bound; `p2^(1 - alpha)` diverges at exactly zero.
pub const P2_FLOOR: f64 = 1e-9;

const GRID_POINTS: usize = 200;
const ALPHA_MIN: f64 = 1.0 + 1e-6;
const ALPHA_MAX: f64 = 1e6;

/// Confidence-bounded class probabilities: `p1` is a lower bound on the
/// top-class probability, `p2` an upper bound on the runner-up.
///
/// The pair certifies only when `p1 > p2`. The two one-sided bounds may
/// overlap the simplex constraint, so `p1 + p2 <= 1` is not required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityPair {
    p1: f64,
    p2: f64,
}

impl ProbabilityPair {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) {
            return Err(Error::invalid(format!(
                "probabilities must lie in [0, 1], got p1={p1}, p2={p2}"
            )));
        }
        Ok(ProbabilityPair { p1, p2 })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Whether the pair separates the top class from the runner-up.
    pub fn certifies(&self) -> bool {
        self.p1 > self.p2
    }
}

/// Outcome of the supremum search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupremumResult {
    /// Supremum of `B(alpha)` over the search range; the certified budget.
    pub eps_star: f64,
    /// Argmax location (a grid boundary when the maximum was not interior).
    pub alpha_star: f64,
    /// False when no certification is possible or the maximum sat on the
    /// boundary of the search range.
    pub converged: bool,
}

/// The divergence budget certified by probabilities `(p1, p2)` at order
/// `alpha`:
///
/// `B(alpha) = -(1/alpha) ln(1 - p1 - p2 + 2 (0.5 (p1^(1-alpha) + p2^(1-alpha)))^(1/(1-alpha)))`
///
/// Returns an infinity sentinel if the log argument is nonpositive, which
/// cannot happen for probabilities inside the stated preconditions.
pub fn bound_b(alpha: f64, pp: &ProbabilityPair) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::invalid(format!("alpha must exceed 1, got {alpha}")));
    }
    if pp.p2 == 0.0 {
        return Err(Error::DegenerateInput(
            "p2 = 0 makes p2^(1-alpha) diverge; floor it first (see P2_FLOOR)".into(),
        ));
    }
    if pp.p1 < pp.p2 {
        return Err(Error::invalid(format!(
            "bound_b requires p1 >= p2, got p1={}, p2={}",
            pp.p1, pp.p2
        )));
    }
    Ok(bound_b_ln(alpha, pp.p1.ln(), pp.p2.ln(), pp.p1, pp.p2))
}

/// Log-space kernel. `t = 1 - alpha < 0`; the inner power mean is
/// `exp((logaddexp(t ln p1, t ln p2) - ln 2) / t)`, always in `(0, 1]`.
#[inline]
fn bound_b_ln(alpha: f64, ln_p1: f64, ln_p2: f64, p1: f64, p2: f64) -> f64 {
    let t = 1.0 - alpha;
    let ln_mean = (logaddexp(t * ln_p1, t * ln_p2) - std::f64::consts::LN_2) / t;
    let arg = 1.0 - p1 - p2 + 2.0 * ln_mean.exp();
    if arg <= 0.0 {
        return f64::INFINITY;
    }
    -arg.ln() / alpha
}

/// Supremum of `B(alpha)` over `alpha in (1, inf)`.
///
/// Search strategy: 200 log-spaced points in `alpha - 1` over
/// `[1e-6, 1e6 - 1]`, then golden-section refinement between the grid
/// neighbours of the argmax. `p1 <= p2` yields the no-certification signal
/// (`eps_star = 0`, `converged = false`); a runner-up below [`P2_FLOOR`]
/// is floored before evaluation.
pub fn sup_bound(pp: &ProbabilityPair) -> SupremumResult {
    if !pp.certifies() {
        return SupremumResult {
            eps_star: 0.0,
            alpha_star: ALPHA_MIN,
            converged: false,
        };
    }
    let p1 = pp.p1;
    let p2 = pp.p2.max(P2_FLOOR);
    let (ln_p1, ln_p2) = (p1.ln(), p2.ln());
    let b = |alpha: f64| bound_b_ln(alpha, ln_p1, ln_p2, p1, p2);

    let log_lo = 1e-6f64.ln();
    let log_hi = (ALPHA_MAX - 1.0).ln();
    let step = (log_hi - log_lo) / (GRID_POINTS - 1) as f64;
    let alpha_at = |i: usize| 1.0 + (log_lo + i as f64 * step).exp();

    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let v = b(alpha_at(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }

    let lo = alpha_at(best_i.saturating_sub(1));
    let hi = alpha_at((best_i + 1).min(GRID_POINTS - 1));
    let (alpha_ref, b_ref) = golden_section_max(b, lo, hi, 1e-12, 300);

    let (eps_star, alpha_star) = if b_ref >= best {
        (b_ref, alpha_ref)
    } else {
        (best, alpha_at(best_i))
    };
    let interior = best_i > 0 && best_i < GRID_POINTS - 1;
    SupremumResult {
        eps_star: eps_star.max(0.0),
        alpha_star,
        converged: interior && eps_star > 0.0,
    }
}

/// Certified l2 radius of the Gaussian mechanism:
/// `sqrt(2 sigma^2 eps_star)`; zero when the pair does not certify.
pub fn radius_l2_gaussian(sigma: f64, pp: &ProbabilityPair) -> Result<f64> {
    check_sigma(sigma)?;
    if !pp.certifies() {
        return Ok(0.0);
    }
    Ok(sigma * (2.0 * sup_bound(pp).eps_star).sqrt())
}

/// Project a certified l2 radius onto the l-infinity ball: `r2 / sqrt(d)`.
pub fn radius_linf_from_l2(r2: f64, dim: usize) -> Result<f64> {
    if !(r2 >= 0.0) {
        return Err(Error::invalid(format!("radius must be nonnegative, got {r2}")));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(r2 / (dim as f64).sqrt())
}

/// Certified l-infinity radius of the Exponential mechanism: the better of
/// its two budgets, `max(sigma * eps_star, sqrt(2 sigma^2 eps_star))`.
/// The square-root branch dominates exactly when `eps_star < 2`.
pub fn radius_linf_exponential(sigma: f64, pp: &ProbabilityPair) -> Result<f64> {
    check_sigma(sigma)?;
    if !pp.certifies() {
        return Ok(0.0);
    }
    let eps = sup_bound(pp).eps_star;
    let linear = sigma * eps;
    let sqrt = sigma * (2.0 * eps).sqrt();
    Ok(linear.max(sqrt))
}

/// Map a certified l2 radius onto the lp ball (`p >= 2`, infinity allowed):
/// `r2 / d^(1/2 - 1/p)`.
pub fn radius_lp_gaussian(r2: f64, dim: usize, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::invalid(format!("norm order must satisfy p >= 2, got {p}")));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(r2 >= 0.0) {
        return Err(Error::invalid(format!("radius must be nonnegative, got {r2}")));
    }
    let exponent = if p.is_infinite() { 0.5 } else { 0.5 - 1.0 / p };
    Ok(r2 / (dim as f64).powf(exponent))
}

/// The tight l2 comparison radius
/// `sigma / 2 * (Phi^-1(p1) - Phi^-1(p2))`.
pub fn radius_l2_cohen(sigma: f64, pp: &ProbabilityPair) -> Result<f64> {
    check_sigma(sigma)?;
    if !(pp.p2 > 0.0 && pp.p1 < 1.0 && pp.p2 <= pp.p1) {
        return Err(Error::invalid(format!(
            "comparison radius requires 0 < p2 <= p1 < 1, got p1={}, p2={}",
            pp.p1, pp.p2
        )));
    }
    if pp.p1 == pp.p2 {
        return Ok(0.0);
    }
    Ok(sigma / 2.0 * (normal_quantile(pp.p1) - normal_quantile(pp.p2)))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}
