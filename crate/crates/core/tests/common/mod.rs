#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavedens::basis::{BiorthogonalBasis, CoefficientIndex};

/// Trapezoid rule for `∫ f` over `[lo, hi]` on nodes `lo + i·step`.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> f64 {
    let count = ((hi - lo) / step).round() as usize;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..count {
        acc += f(lo + i as f64 * step);
    }
    acc * step
}

/// Midpoint rule; exact for integrands that are polynomial of degree ≤ 1 on every cell.
pub fn midpoint<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> f64 {
    let count = ((hi - lo) / step).round() as usize;
    (0..count).map(|i| f(lo + (i as f64 + 0.5) * step)).sum::<f64>() * step
}

/// Largest `|∫ ψ_jk ψ̃_j'k' − 1_{(j,k)=(j',k')}|` over `j, j' ∈ {−1,…,2}`, `|k|, |k'| ≤ 3`.
pub fn biorthogonality_error(basis: &BiorthogonalBasis, step: f64) -> f64 {
    let idx: Vec<CoefficientIndex> = (-1..=2)
        .flat_map(|j| (-3..=3).map(move |k| CoefficientIndex::new(j, k)))
        .collect();
    let mut worst = 0.0f64;
    for &a in &idx {
        for &b in &idx {
            let (a_lo, a_hi) = basis.support_interval(a);
            let (b_lo, b_hi) = basis.reconstruction_support(b);
            let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
            let inner = if lo < hi {
                trapezoid(
                    |x| basis.eval_decomposition(a, x) * basis.eval_reconstruction(b, x),
                    lo,
                    hi,
                    step,
                )
            } else {
                0.0
            };
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((inner - want).abs());
        }
    }
    worst
}

/// Relative gap between `‖Σ β ψ̃‖²` and `Σ β²` for random Haar coefficients on `[0, 1]`.
pub fn haar_frame_gap(seed: u64) -> f64 {
    let basis = BiorthogonalBasis::haar();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![(CoefficientIndex::new(-1, 0), rng.random_range(-1.0..1.0))];
    for j in 0..5 {
        for k in 0..(1i64 << j) {
            coeffs.push((CoefficientIndex::new(j, k), rng.random_range(-1.0..1.0)));
        }
    }
    let f = |x: f64| -> f64 { coeffs.iter().map(|&(i, b)| b * basis.eval_reconstruction(i, x)).sum() };
    let norm = midpoint(|x| f(x).powi(2), 0.0, 1.0, 1.0 / 4096.0);
    let energy: f64 = coeffs.iter().map(|(_, b)| b * b).sum();
    (norm - energy).abs() / energy
}
