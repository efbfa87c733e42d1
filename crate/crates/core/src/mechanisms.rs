//! Smoothing-noise mechanisms and their analytic magnitude quantities.
//!
//! Two mechanisms are supported: isotropic Gaussian noise with density
//! proportional to `exp(-||z||_2^2 / (2 sigma^2))`, and the l-infinity
//! Exponential mechanism with density proportional to `exp(-||z||_inf / sigma)`.
//! The Exponential mechanism is sampled by drawing a radius `R` from
//! `Gamma(d + 1, sigma)` and then a point uniformly from the cube `[-R, R]^d`;
//! the resulting `||z||_inf` follows `Gamma(d, sigma)` with mean `d * sigma`.
//!
//! # Determinism contract
//!
//! All sampling is keyed by a [`RandomSeed`] and is a pure function of
//! `(parameters, seed)`. The generator is ChaCha8 keyed by the 64-bit seed
//! value; independent draws use ChaCha8 streams (draw `i` reads stream `i`).
//! Within one draw the coordinate order is fixed: Gaussian noise consumes
//! `d` consecutive standard-normal variates (scaled by sigma); Exponential
//! noise consumes one `Gamma(d + 1, sigma)` variate followed by `d`
//! consecutive uniforms on `[-1, 1]` (scaled by the radius). Identical seeds
//! and parameters therefore reproduce bit-identical noise vectors.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::math::splitmix64;

/// The two noise families under assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MechanismKind {
    Gaussian,
    LinfExponential,
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MechanismKind::Gaussian => write!(f, "gaussian"),
            MechanismKind::LinfExponential => write!(f, "exp-linf"),
        }
    }
}

/// A smoothing mechanism: noise family, scale, and input dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMechanism {
    kind: MechanismKind,
    sigma: f64,
    dim: usize,
}

impl NoiseMechanism {
    pub fn new(kind: MechanismKind, sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(NoiseMechanism { kind, sigma, dim })
    }

    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        Self::new(MechanismKind::Gaussian, sigma, dim)
    }

    pub fn linf_exponential(sigma: f64, dim: usize) -> Result<Self> {
        Self::new(MechanismKind::LinfExponential, sigma, dim)
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draw one noise vector. Pure in `(self, seed)`; equivalent to
    /// [`NoiseMechanism::sample_draw`] at draw index 0.
    pub fn sample(&self, seed: RandomSeed) -> Vec<f64> {
        self.sample_draw(seed, 0)
    }

    /// Noise vector for Monte Carlo draw `draw` under `seed` (ChaCha8
    /// stream = draw index). Draws are independent and any prefix is
    /// reproducible without generating the rest.
    pub fn sample_draw(&self, seed: RandomSeed, draw: u64) -> Vec<f64> {
        let mut rng = seed.stream_rng(draw);
        match self.kind {
            MechanismKind::Gaussian => gaussian_vector(self.dim, self.sigma, &mut rng),
            MechanismKind::LinfExponential => {
                linf_exponential_vector(self.dim, self.sigma, &mut rng)
            }
        }
    }
}

/// 64-bit seed for reproducible sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    /// Generator keyed by this seed, reading the default stream.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Generator keyed by this seed, reading stream `stream`. Streams are
    /// statistically independent, so draw `i` of a Monte Carlo run owns
    /// stream `i` and any prefix of draws is reproducible in isolation.
    pub fn stream_rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Derive an independent sub-seed (SplitMix64 of seed and index).
    pub fn derive(self, index: u64) -> RandomSeed {
        RandomSeed(splitmix64(
            self.0.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        ))
    }
}

fn gaussian_vector(dim: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            sigma * g
        })
        .collect()
}

fn linf_exponential_vector(dim: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Marsaglia-Tsang rejection sampling; valid for arbitrarily large shape
    // without forming Gamma(d) or any product that could overflow.
    let gamma = Gamma::new(dim as f64 + 1.0, sigma).expect("validated parameters");
    let radius = gamma.sample(rng);
    let unit = Uniform::new_inclusive(-1.0f64, 1.0f64);
    (0..dim).map(|_| radius * unit.sample(rng)).collect()
}

/// Draw `d` independent `N(0, sigma^2)` coordinates.
pub fn sample_gaussian(dim: usize, sigma: f64, seed: RandomSeed) -> Result<Vec<f64>> {
    let mech = NoiseMechanism::gaussian(sigma, dim)?;
    Ok(mech.sample(seed))
}

/// Draw one vector from the l-infinity Exponential mechanism.
pub fn sample_linf_exponential(dim: usize, sigma: f64, seed: RandomSeed) -> Result<Vec<f64>> {
    let mech = NoiseMechanism::linf_exponential(sigma, dim)?;
    Ok(mech.sample(seed))
}

/// Exact expected noise magnitude `E[||z||_inf] = d * sigma` of the
/// Exponential mechanism.
pub fn expected_linf_exponential(mech: &NoiseMechanism) -> Result<f64> {
    if mech.kind != MechanismKind::LinfExponential {
        return Err(Error::invalid(
            "expected_linf_exponential requires the exp-linf mechanism",
        ));
    }
    Ok(mech.dim as f64 * mech.sigma)
}

/// A Monte Carlo magnitude estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte Carlo estimate of `E[||z||_inf]` for the Gaussian mechanism.
///
/// No closed form exists; the estimate divided by sigma concentrates inside
/// `[sqrt(ln d), sqrt(2 ln d) + 1]` for `d >= 16`, which callers use as a
/// sanity window.
pub fn expected_linf_gaussian(
    mech: &NoiseMechanism,
    n_samples: usize,
    seed: RandomSeed,
) -> Result<MagnitudeEstimate> {
    if mech.kind != MechanismKind::Gaussian {
        return Err(Error::invalid(
            "expected_linf_gaussian requires the gaussian mechanism",
        ));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    Ok(magnitude_estimate(mech, n_samples, seed))
}

/// Mean and standard error of `||z||_inf` over `n_samples` seeded draws of
/// `mech`. Draw `i` uses stream `i`; the reduction is done in index order,
/// so the result does not depend on the worker count.
pub(crate) fn magnitude_estimate(
    mech: &NoiseMechanism,
    n_samples: usize,
    seed: RandomSeed,
) -> MagnitudeEstimate {
    let mech = *mech;
    let norms = exec::map_indexed(n_samples, move |i| {
        let z = mech.sample_draw(seed, i as u64);
        z.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    });
    summarize(&norms)
}

fn summarize(norms: &[f64]) -> MagnitudeEstimate {
    let n = norms.len();
    let mean = norms.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        norms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MagnitudeEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
    }
}

/// Gaussian scale certifying l-infinity robustness at radius `r` and budget
/// `eps`: `sigma = sqrt(d r^2 / (2 eps))`.
pub fn sigma_for_gaussian_linf(r: f64, eps: f64, dim: usize) -> Result<f64> {
    sigma_for_gaussian_lp(r, eps, dim, f64::INFINITY)
}

/// Gaussian scale certifying lp robustness (`p >= 2`, infinity allowed):
/// `sigma = sqrt(d^(1 - 2/p) r^2 / (2 eps))`.
pub fn sigma_for_gaussian_lp(r: f64, eps: f64, dim: usize, p: f64) -> Result<f64> {
    if !(r > 0.0) || !(eps > 0.0) {
        return Err(Error::invalid(format!(
            "radius and budget must be positive, got r={r}, eps={eps}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(p >= 2.0) {
        return Err(Error::invalid(format!("norm order must satisfy p >= 2, got {p}")));
    }
    let exponent = if p.is_infinite() { 1.0 } else { 1.0 - 2.0 / p };
    Ok(((dim as f64).powf(exponent) * r * r / (2.0 * eps)).sqrt())
}
