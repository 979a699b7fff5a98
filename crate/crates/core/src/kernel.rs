//! Gaussian kernel density estimator with a least-squares cross-validated bandwidth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Sample;

pub const BANDWIDTH_GRID_SIZE: usize = 40;
pub const BANDWIDTH_GRID_SPAN: (f64, f64) = (0.05, 5.0);
/// Kernels are cut off this many bandwidths from their centre.
pub const KERNEL_CUTOFF: f64 = 10.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gauss(x: f64, h: f64) -> f64 {
    let z = x / h;
    INV_SQRT_2PI / h * (-0.5 * z * z).exp()
}

/// `∫ f̂_h² − (2/n) Σ_i f̂_h^{(−i)}(X_i)`, with `∫ f̂_h²` in closed form as a
/// double sum of `N(0, 2h²)` densities.
pub fn lscv_score(sample: &Sample, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    let xs = sample.as_slice();
    let n = xs.len() as f64;
    let h2 = std::f64::consts::SQRT_2 * h;
    let mut conv = 0.0;
    let mut loo = 0.0;
    // Beyond this distance both kernels underflow to zero.
    let reach = 40.0 * h2;
    for (i, &xi) in xs.iter().enumerate() {
        for &xj in xs[..i].iter().rev() {
            let d = xi - xj;
            if d > reach {
                break;
            }
            conv += gauss(d, h2);
            loo += gauss(d, h);
        }
    }
    // Off-diagonal pairs counted twice; the diagonal only enters the convolution term.
    let square = (2.0 * conv + n * gauss(0.0, h2)) / (n * n);
    let cross = 2.0 * (2.0 * loo) / (n * (n - 1.0));
    Ok(square - cross)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    #[serde(skip)]
    sample: Option<Sample>,
    pub bandwidth: f64,
    pub reference_bandwidth: f64,
    pub cv_scores: Vec<(f64, f64)>,
}

/// Bandwidth grid: log-spaced over `[0.05, 5] × h0`.
pub fn bandwidth_grid(h0: f64) -> Vec<f64> {
    let (lo, hi) = BANDWIDTH_GRID_SPAN;
    let last = (BANDWIDTH_GRID_SIZE - 1) as f64;
    (0..BANDWIDTH_GRID_SIZE)
        .map(|i| h0 * lo * (hi / lo).powf(i as f64 / last))
        .collect()
}

/// Reference rule `1.06 σ̂ n^{-1/5}`.
pub fn reference_bandwidth(sample: &Sample) -> Result<f64> {
    let xs = sample.as_slice();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(Error::DegenerateSample("sample has zero variance".into()));
    }
    Ok(1.06 * var.sqrt() * n.powf(-0.2))
}

/// Minimizes the LSCV score over the bandwidth grid; ties go to the larger bandwidth.
pub fn fit_kernel(sample: &Sample) -> Result<KernelEstimate> {
    let h0 = reference_bandwidth(sample)?;
    let grid = bandwidth_grid(h0);
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&h| lscv_score(sample, h))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s <= scores[best] {
            best = i;
        }
    }
    Ok(KernelEstimate {
        sample: Some(sample.clone()),
        bandwidth: grid[best],
        reference_bandwidth: h0,
        cv_scores: grid.into_iter().zip(scores).collect(),
    })
}

impl KernelEstimate {
    fn observations(&self) -> &[f64] {
        self.sample.as_ref().map_or(&[], |s| s.as_slice())
    }

    /// `(1/n) Σ φ_h(x − X_i)`, skipping kernels more than `KERNEL_CUTOFF · h` away.
    pub fn evaluate(&self, grid: &[f64]) -> Vec<f64> {
        let xs = self.observations();
        let h = self.bandwidth;
        let reach = KERNEL_CUTOFF * h;
        let n = xs.len() as f64;
        grid.iter()
            .map(|&x| {
                let lo = xs.partition_point(|&v| v < x - reach);
                let hi = xs.partition_point(|&v| v <= x + reach);
                xs[lo..hi].iter().map(|&v| gauss(x - v, h)).sum::<f64>() / n
            })
            .collect()
    }

    /// `[min X − 10h, max X + 10h]`.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        let xs = self.observations();
        let reach = KERNEL_CUTOFF * self.bandwidth;
        Some((xs.first()? - reach, xs.last()? + reach))
    }
}
