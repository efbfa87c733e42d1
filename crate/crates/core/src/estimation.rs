//! Monte Carlo estimation of smoothed class probabilities and the
//! simultaneous confidence bounds `(p1, p2)` they induce.
//!
//! `sample_counts` evaluates `f(x + z_i)` over `n` seeded draws; draw `i`
//! owns ChaCha8 stream `i` of the point seed, so parallel and serial runs
//! (and any prefix of draws) agree bit-exactly. `top2_bounds` converts the
//! counts into a lower confidence bound on the top class and an upper bound
//! on the runner-up via exact one-sided Clopper-Pearson intervals with a
//! Bonferroni split of the error budget.

use statrs::distribution::{Beta, ContinuousCDF};

use crate::classifiers::ClassifierModel;
use crate::error::{Error, Result};
use crate::exec;
use crate::mechanisms::{NoiseMechanism, RandomSeed};
use crate::radius::ProbabilityPair;

/// Class histogram of `n` smoothed predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts {
    counts: Vec<u64>,
    n: usize,
    seed: RandomSeed,
}

impl ClassCounts {
    pub fn new(counts: Vec<u64>, seed: RandomSeed) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("counts must cover at least one class"));
        }
        let n = counts.iter().sum::<u64>() as usize;
        if n == 0 {
            return Err(Error::invalid("counts must total at least one sample"));
        }
        Ok(ClassCounts { counts, n, seed })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> RandomSeed {
        self.seed
    }

    /// Empirically most frequent class; ties break toward the smallest index.
    pub fn top_class(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate().skip(1) {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Empirical runner-up; ties break toward the smallest index. With a
    /// single tracked class the runner-up count is zero.
    pub fn runner_up(&self) -> Option<usize> {
        let top = self.top_class();
        let mut best: Option<usize> = None;
        for (i, &c) in self.counts.iter().enumerate() {
            if i == top {
                continue;
            }
            match best {
                Some(b) if self.counts[b] >= c => {}
                _ => best = Some(i),
            }
        }
        best
    }
}

/// How the simultaneous `(p1, p2)` confidence bounds are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ConfidenceMethod {
    /// Half the error budget to each one-sided exact binomial bound.
    BonferroniClopperPearson,
}

/// Overall simultaneous confidence level for the pair of bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceSpec {
    level: f64,
    method: ConfidenceMethod,
}

impl ConfidenceSpec {
    pub fn new(level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!("confidence level must be in (0, 1), got {level}")));
        }
        Ok(ConfidenceSpec {
            level,
            method: ConfidenceMethod::BonferroniClopperPearson,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn method(&self) -> ConfidenceMethod {
        self.method
    }

    /// Per-side level after the Bonferroni split.
    fn side_level(&self) -> f64 {
        1.0 - (1.0 - self.level) / 2.0
    }
}

/// Which side of the exact binomial interval to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// One-sided exact (Clopper-Pearson) binomial confidence bound via Beta
/// quantiles. `Lower(0, n) = 0` and `Upper(n, n) = 1` exactly.
pub fn clopper_pearson(k: u64, n: u64, level: f64, side: BoundSide) -> Result<f64> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!("need 0 <= k <= n with n >= 1, got k={k}, n={n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must be in (0, 1), got {level}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    match side {
        BoundSide::Lower => {
            if k == 0 {
                return Ok(0.0);
            }
            let beta = Beta::new(kf, nf - kf + 1.0).expect("positive shape parameters");
            Ok(beta.inverse_cdf(1.0 - level))
        }
        BoundSide::Upper => {
            if k == n {
                return Ok(1.0);
            }
            let beta = Beta::new(kf + 1.0, nf - kf).expect("positive shape parameters");
            Ok(beta.inverse_cdf(level))
        }
    }
}

/// Simultaneous bounds for Algorithm-style certification: a lower bound on
/// the probability of the empirically largest class and an upper bound on
/// the runner-up, each at the Bonferroni-split level, so joint coverage is
/// at least `spec.level()`.
pub fn top2_bounds(counts: &ClassCounts, spec: &ConfidenceSpec) -> Result<ProbabilityPair> {
    let side = spec.side_level();
    let n = counts.n() as u64;
    let top_k = counts.counts()[counts.top_class()];
    let runner_k = counts.runner_up().map_or(0, |i| counts.counts()[i]);
    let p1 = clopper_pearson(top_k, n, side, BoundSide::Lower)?;
    let p2 = clopper_pearson(runner_k, n, side, BoundSide::Upper)?;
    ProbabilityPair::new(p1, p2)
}

/// Histogram of `f(x + z_i)` over `n` seeded draws of `mech`.
pub fn sample_counts(
    model: &ClassifierModel,
    x: &[f64],
    mech: &NoiseMechanism,
    n: usize,
    seed: RandomSeed,
) -> Result<ClassCounts> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if model.dim() != x.len() || mech.dim() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} coordinates, model expects {}, mechanism expects {}",
            x.len(),
            model.dim(),
            mech.dim()
        )));
    }

    let outcomes = exec::map_indexed(n, |i| {
        let z = mech.sample_draw(seed, i as u64);
        let noisy: Vec<f64> = x.iter().zip(&z).map(|(xi, zi)| xi + zi).collect();
        model.predict(&noisy)
    });

    let mut counts = vec![0u64; model.num_classes()];
    for (draw, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(class) => counts[class] += 1,
            Err(e) => {
                return Err(Error::DrawFailed {
                    draw,
                    source: Box::new(e),
                })
            }
        }
    }
    ClassCounts::new(counts, seed)
}

/// Sequential reference for [`sample_counts`]; used by benchmarks and the
/// parallel-equivalence tests.
pub fn sample_counts_serial(
    model: &ClassifierModel,
    x: &[f64],
    mech: &NoiseMechanism,
    n: usize,
    seed: RandomSeed,
) -> Result<ClassCounts> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if model.dim() != x.len() || mech.dim() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} coordinates, model expects {}, mechanism expects {}",
            x.len(),
            model.dim(),
            mech.dim()
        )));
    }
    let outcomes = exec::map_indexed_serial(n, |i| {
        let z = mech.sample_draw(seed, i as u64);
        let noisy: Vec<f64> = x.iter().zip(&z).map(|(xi, zi)| xi + zi).collect();
        model.predict(&noisy)
    });
    let mut counts = vec![0u64; model.num_classes()];
    for (draw, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(class) => counts[class] += 1,
            Err(e) => {
                return Err(Error::DrawFailed {
                    draw,
                    source: Box::new(e),
                })
            }
        }
    }
    ClassCounts::new(counts, seed)
}
