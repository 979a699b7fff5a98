//! The thresholding estimator.
//!
//! Step 0 picks the finest level `j0`. Step 1 computes every non-zero
//! empirical coefficient `β̂_jk = (1/n) Σ ψ_jk(X_i)` with `-1 ≤ j ≤ j0`
//! together with its unbiased variance estimate. Step 2 keeps `β̂_jk` when
//! `|β̂_jk| ≥ η_jk`. Step 3 sums the kept coefficients against the
//! reconstruction wavelets, optionally clipping at zero.
//!
//! Only translates whose decomposition support holds at least one
//! observation can have `β̂_jk ≠ 0`, so the coefficients are accumulated
//! observation by observation: each one touches at most `W` translates per
//! level, where `W` is the support width of `ψ`.

mod besov;
mod threshold;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use besov::besov_seminorm;
pub use threshold::{
    threshold_practical, threshold_real, threshold_theoretical, variance_hat, variance_tilde,
    variance_tilde_real, ThresholdMode,
};

use crate::basis::{BasisKind, BiorthogonalBasis, CoefficientIndex, DEFAULT_GRID_EXPONENT};
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::signals::TestSignal;

pub const ESTIMATE_FORMAT: &str = "wavedens-estimate/1";

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub basis: Arc<BiorthogonalBasis>,
    pub mode: ThresholdMode,
    pub j0_override: Option<i32>,
    /// Compute levels on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl EstimatorConfig {
    pub fn new(basis: Arc<BiorthogonalBasis>, mode: ThresholdMode) -> Self {
        Self {
            basis,
            mode,
            j0_override: None,
            parallel: true,
        }
    }

    pub fn with_j0(mut self, j0: i32) -> Self {
        self.j0_override = Some(j0);
        self
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn finest_level(&self, n: usize) -> i32 {
        self.j0_override.unwrap_or_else(|| self.mode.finest_level(n))
    }

    fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if let Some(j0) = self.j0_override {
            if !(-1..=40).contains(&j0) {
                return Err(Error::InvalidParameter(format!("j0 must lie in [-1, 40], got {j0}")));
            }
        }
        Ok(())
    }
}

/// One non-zero empirical coefficient with everything its threshold needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCoefficient {
    pub idx: CoefficientIndex,
    pub beta_hat: f64,
    pub sigma_hat_sq: f64,
    /// Only filled in for the theoretical rule.
    pub sigma_tilde_sq: Option<f64>,
    pub psi_sup_norm: f64,
    /// Observations falling where `ψ_jk ≠ 0`.
    pub n_jk: usize,
    pub threshold: f64,
}

/// Threshold `η_jk` of `coeff` under `mode`.
pub fn threshold(coeff: &EmpiricalCoefficient, n: usize, mode: ThresholdMode) -> f64 {
    match mode {
        ThresholdMode::Theoretical { gamma, .. } => {
            let tilde = coeff.sigma_tilde_sq.unwrap_or_else(|| {
                variance_tilde(coeff.sigma_hat_sq, coeff.psi_sup_norm, n, gamma)
            });
            threshold_theoretical(tilde, coeff.psi_sup_norm, n, gamma)
        }
        ThresholdMode::Practical => threshold_practical(coeff.sigma_hat_sq, coeff.psi_sup_norm, n, 1.0),
        ThresholdMode::PracticalGamma { gamma } => {
            threshold_practical(coeff.sigma_hat_sq, coeff.psi_sup_norm, n, gamma)
        }
    }
}

/// All non-zero `β̂_jk` for `-1 ≤ j ≤ j0`, sorted by `(j, k)`.
pub fn empirical_coefficients(
    sample: &Sample,
    config: &EstimatorConfig,
) -> Result<Vec<EmpiricalCoefficient>> {
    config.validate()?;
    let j0 = config.finest_level(sample.len());
    let levels: Vec<i32> = (-1..=j0).collect();
    let per_level = |&j: &i32| level_coefficients(sample, config, j);
    let rows: Vec<Vec<EmpiricalCoefficient>> = if config.parallel {
        levels.par_iter().map(per_level).collect()
    } else {
        levels.iter().map(per_level).collect()
    };
    Ok(rows.into_iter().flatten().collect())
}

fn level_coefficients(sample: &Sample, config: &EstimatorConfig, j: i32) -> Vec<EmpiricalCoefficient> {
    let basis = &config.basis;
    let base = basis.decomposition_base(j);
    let (a, b) = base.support();
    let (dil, amp) = CoefficientIndex::new(j, 0).dilation();
    let pieces = base.values().len();

    // counts[k][p]: observations landing in piece p of translate k.
    let mut counts: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for &x in sample.as_slice() {
        let y = dil * x;
        let first = (y - b).floor() as i64 + 1;
        let last = (y - a).floor() as i64;
        for k in first..=last {
            if let Some(p) = base.piece_index(y - k as f64) {
                counts.entry(k).or_insert_with(|| vec![0; pieces])[p] += 1;
            }
        }
    }

    let n = sample.len();
    let nf = n as f64;
    let mut out = Vec::with_capacity(counts.len());
    for (k, c) in counts {
        let idx = CoefficientIndex::new(j, k);
        let mut n_jk = 0usize;
        let mut sum = 0.0;
        for (&cp, &v) in c.iter().zip(base.values()) {
            if v != 0.0 && cp > 0 {
                n_jk += cp as usize;
                sum += cp as f64 * v;
            }
        }
        let beta_hat = amp * sum / nf;
        if beta_hat == 0.0 {
            continue;
        }
        // Centered second moment over all n values, the zeros included.
        let mut centered = (n - n_jk) as f64 * beta_hat * beta_hat;
        for (&cp, &v) in c.iter().zip(base.values()) {
            if v != 0.0 && cp > 0 {
                let d = amp * v - beta_hat;
                centered += cp as f64 * d * d;
            }
        }
        let sigma_hat_sq = centered / (nf - 1.0);
        let psi_sup_norm = basis.sup_norm(idx);
        let sigma_tilde_sq = match config.mode {
            ThresholdMode::Theoretical { gamma, .. } => {
                Some(variance_tilde(sigma_hat_sq, psi_sup_norm, n, gamma))
            }
            _ => None,
        };
        let mut coeff = EmpiricalCoefficient {
            idx,
            beta_hat,
            sigma_hat_sq,
            sigma_tilde_sq,
            psi_sup_norm,
            n_jk,
            threshold: 0.0,
        };
        coeff.threshold = threshold(&coeff, n, config.mode);
        out.push(coeff);
    }
    out
}

/// A kept coefficient and the threshold it cleared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeptCoefficient {
    pub value: f64,
    pub threshold: f64,
}

/// Sparse reconstruction `Σ β̃_jk ψ̃_jk`, clipped at zero when `positive_part` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub kept: BTreeMap<CoefficientIndex, KeptCoefficient>,
    pub basis: Arc<BiorthogonalBasis>,
    pub positive_part: bool,
    pub n: usize,
    pub j0: i32,
    pub mode: ThresholdMode,
    /// Coefficients were selected by the oracle rule; thresholds are then recorded as 0.
    pub oracle: bool,
}

/// Thresholded estimate of the density behind `sample`.
pub fn estimate(sample: &Sample, config: &EstimatorConfig) -> Result<DensityEstimate> {
    let coeffs = empirical_coefficients(sample, config)?;
    let kept = coeffs
        .into_iter()
        .filter(|c| c.beta_hat.abs() >= c.threshold)
        .map(|c| {
            (
                c.idx,
                KeptCoefficient {
                    value: c.beta_hat,
                    threshold: c.threshold,
                },
            )
        })
        .collect();
    Ok(DensityEstimate {
        kept,
        basis: Arc::clone(&config.basis),
        positive_part: config.mode.positive_part(),
        n: sample.len(),
        j0: config.finest_level(sample.len()),
        mode: config.mode,
        oracle: false,
    })
}

/// The oracle benchmark: keeps `β̂_jk` exactly when `β_jk² > σ_jk² / n`, using
/// the true coefficients of `signal`. No positive part is taken.
pub fn oracle_estimate(
    sample: &Sample,
    signal: &TestSignal,
    config: &EstimatorConfig,
) -> Result<DensityEstimate> {
    let coeffs = empirical_coefficients(sample, config)?;
    let nf = sample.len() as f64;
    let basis = &config.basis;
    let decide = |c: &EmpiricalCoefficient| -> Result<Option<(CoefficientIndex, KeptCoefficient)>> {
        let beta = signal.true_coefficient(basis, c.idx)?;
        let sigma_sq = signal.true_sigma_sq(basis, c.idx)?;
        Ok((beta * beta > sigma_sq / nf).then_some((
            c.idx,
            KeptCoefficient {
                value: c.beta_hat,
                threshold: 0.0,
            },
        )))
    };
    let decisions: Vec<_> = if config.parallel {
        coeffs.par_iter().map(decide).collect::<Result<_>>()?
    } else {
        coeffs.iter().map(decide).collect::<Result<_>>()?
    };
    Ok(DensityEstimate {
        kept: decisions.into_iter().flatten().collect(),
        basis: Arc::clone(basis),
        positive_part: false,
        n: sample.len(),
        j0: config.finest_level(sample.len()),
        mode: config.mode,
        oracle: true,
    })
}

impl DensityEstimate {
    /// The zero function.
    pub fn is_zero(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v: f64 = self
            .kept
            .iter()
            .map(|(idx, c)| c.value * self.basis.eval_reconstruction(*idx, x))
            .sum();
        self.clip(v)
    }

    /// Pointwise values on `grid`. Sorted grids only visit each coefficient's support.
    pub fn evaluate(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        let sorted = grid.windows(2).all(|w| w[0] <= w[1]);
        for (idx, c) in &self.kept {
            let range = if sorted {
                let (lo, hi) = self.basis.reconstruction_support(*idx);
                grid.partition_point(|&x| x < lo)..grid.partition_point(|&x| x <= hi)
            } else {
                0..grid.len()
            };
            for i in range {
                out[i] += c.value * self.basis.eval_reconstruction(*idx, grid[i]);
            }
        }
        if self.positive_part {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        out
    }

    fn clip(&self, v: f64) -> f64 {
        if self.positive_part {
            v.max(0.0)
        } else {
            v
        }
    }

    /// Smallest interval holding every kept reconstruction support.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        self.kept.keys().map(|idx| self.basis.reconstruction_support(*idx)).reduce(
            |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
        )
    }

    /// `∫ f̂` by the trapezoid rule on a `2^-grid_exponent` grid; the estimate is not renormalized.
    pub fn integral(&self, grid_exponent: u32) -> f64 {
        let Some((lo, hi)) = self.support_hull() else {
            return 0.0;
        };
        let step = (-(grid_exponent as f64)).exp2();
        let hi = lo + ((hi - lo) / step).ceil() * step;
        let grid = crate::output::uniform_grid(lo, hi, step);
        crate::quad::trapezoid(&self.evaluate(&grid), step)
    }

    /// Kept values as a plain coefficient map.
    pub fn coefficients(&self) -> BTreeMap<CoefficientIndex, f64> {
        self.kept.iter().map(|(i, c)| (*i, c.value)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EstimateDocument {
            format: ESTIMATE_FORMAT.into(),
            n: self.n,
            basis: self.basis.kind(),
            grid_exponent: match self.basis.kind() {
                BasisKind::Haar => None,
                BasisKind::Spline => match self.basis.phi_tilde() {
                    crate::basis::Reconstruction::Tabulated(t) => Some(t.grid_exponent()),
                    crate::basis::Reconstruction::Step(_) => None,
                },
            },
            mode: self.mode,
            oracle: self.oracle,
            j0: self.j0,
            positive_part: self.positive_part,
            kept: self
                .kept
                .iter()
                .map(|(i, c)| (i.j, i.k, c.value, c.threshold))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EstimateDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        if doc.format != ESTIMATE_FORMAT {
            return Err(Error::InvalidParameter(format!(
                "unsupported estimate format {:?}",
                doc.format
            )));
        }
        let basis = BiorthogonalBasis::build(
            doc.basis,
            doc.grid_exponent.unwrap_or(DEFAULT_GRID_EXPONENT),
        )?;
        Ok(Self {
            kept: doc
                .kept
                .into_iter()
                .map(|(j, k, value, threshold)| {
                    (CoefficientIndex::new(j, k), KeptCoefficient { value, threshold })
                })
                .collect(),
            basis: Arc::new(basis),
            positive_part: doc.positive_part,
            n: doc.n,
            j0: doc.j0,
            mode: doc.mode,
            oracle: doc.oracle,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateDocument {
    format: String,
    n: usize,
    basis: BasisKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    grid_exponent: Option<u32>,
    mode: ThresholdMode,
    #[serde(default)]
    oracle: bool,
    j0: i32,
    positive_part: bool,
    kept: Vec<(i32, i64, f64, f64)>,
}
