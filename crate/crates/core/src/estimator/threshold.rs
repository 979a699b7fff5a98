//! Variance estimates and data-driven thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which threshold the keep-or-kill step uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Inflated variance `σ̃²` and `η_{jk,γ}`; no positive part at reconstruction.
    Theoretical { gamma: f64, c: f64, c_prime: f64 },
    /// `η^Prac` built on the unbiased variance `σ̂²`.
    Practical,
    /// `η^Prac` with both terms scaled by `γ`.
    PracticalGamma { gamma: f64 },
}

impl ThresholdMode {
    /// The theoretical rule with `c = 1`, `c' = 0`.
    pub fn theoretical(gamma: f64) -> Self {
        ThresholdMode::Theoretical {
            gamma,
            c: 1.0,
            c_prime: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        match *self {
            ThresholdMode::Theoretical { gamma, c, c_prime } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("gamma must be positive, got {gamma}"));
                }
                if !(c >= 1.0 && c.is_finite()) {
                    return bad(format!("c must be at least 1, got {c}"));
                }
                if !c_prime.is_finite() {
                    return bad(format!("c' must be finite, got {c_prime}"));
                }
            }
            ThresholdMode::PracticalGamma { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("gamma must be positive, got {gamma}"));
                }
            }
            ThresholdMode::Practical => {}
        }
        Ok(())
    }

    /// Finest level `j0` for a sample of size `n`.
    pub fn finest_level(&self, n: usize) -> i32 {
        match *self {
            ThresholdMode::Theoretical { c, c_prime, .. } => {
                let nf = n as f64;
                let log2 = c * nf.log2() + c_prime * nf.ln().log2();
                // Guard against log2(2^m) landing a hair under m.
                (log2 + 1e-12).floor() as i32
            }
            ThresholdMode::Practical | ThresholdMode::PracticalGamma { .. } => {
                (usize::BITS - 1 - n.leading_zeros()) as i32
            }
        }
    }

    /// Whether negative parts are clipped at reconstruction.
    pub fn positive_part(&self) -> bool {
        !matches!(self, ThresholdMode::Theoretical { .. })
    }

    pub fn label(&self) -> String {
        match self {
            ThresholdMode::Theoretical { gamma, c, c_prime } => {
                format!("theoretical(gamma={gamma},c={c},c'={c_prime})")
            }
            ThresholdMode::Practical => "practical".into(),
            ThresholdMode::PracticalGamma { gamma } => format!("practical(gamma={gamma})"),
        }
    }
}

/// Unbiased variance of `values`, the U-statistic
/// `(1 / (n(n−1))) Σ_{i<l} (v_i − v_l)²`, evaluated in O(n) as
/// `n (m₂ − m₁²) / (n − 1)` in its centered two-pass form.
pub fn variance_hat(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(centered / (n - 1) as f64)
}

/// `σ̃² = σ̂² + 2‖ψ‖∞ √(2γ σ̂² ln n / n) + 8γ ‖ψ‖∞² ln n / n`.
pub fn variance_tilde(sigma_hat_sq: f64, psi_sup: f64, n: usize, gamma: f64) -> f64 {
    variance_tilde_real(sigma_hat_sq, psi_sup, n as f64, gamma)
}

/// [`variance_tilde`] for a real-valued sample size.
pub fn variance_tilde_real(sigma_hat_sq: f64, psi_sup: f64, n: f64, gamma: f64) -> f64 {
    let log_ratio = n.ln() / n;
    sigma_hat_sq
        + 2.0 * psi_sup * (2.0 * gamma * sigma_hat_sq * log_ratio).sqrt()
        + 8.0 * gamma * psi_sup * psi_sup * log_ratio
}

/// `η_{jk,γ} = √(2γ σ̃² ln n / n) + 2 ‖ψ‖∞ γ ln n / (3n)`.
pub fn threshold_theoretical(sigma_tilde_sq: f64, psi_sup: f64, n: usize, gamma: f64) -> f64 {
    threshold_real(sigma_tilde_sq, psi_sup, n as f64, gamma)
}

/// `η = √(2γ σ̂² ln n / n) + 2 γ ‖ψ‖∞ ln n / (3n)`; `γ = 1` gives `η^Prac`.
pub fn threshold_practical(sigma_hat_sq: f64, psi_sup: f64, n: usize, gamma: f64) -> f64 {
    threshold_real(sigma_hat_sq, psi_sup, n as f64, gamma)
}

/// Shared shape of both thresholds, with the variance estimate passed in.
pub fn threshold_real(variance: f64, psi_sup: f64, n: f64, gamma: f64) -> f64 {
    let ln_n = n.ln();
    (2.0 * gamma * variance * ln_n / n).sqrt() + 2.0 * psi_sup * gamma * ln_n / (3.0 * n)
}
