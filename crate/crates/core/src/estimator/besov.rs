//! Sequence-space Besov norm of a coefficient map, used as a diagnostic.

use std::collections::BTreeMap;

use crate::basis::CoefficientIndex;

fn lp(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `‖(α_k)‖_p + [Σ_j 2^{jq(α+1/2−1/p)} ‖(β_jk)_k‖_p^q]^{1/q}`, with the usual
/// sup forms when `p` or `q` is infinite. Levels absent from `coeffs` count as zero.
pub fn besov_seminorm(coeffs: &BTreeMap<CoefficientIndex, f64>, alpha: f64, p: f64, q: f64) -> f64 {
    let mut rows: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (idx, &v) in coeffs {
        rows.entry(idx.j).or_default().push(v);
    }
    let father = rows.remove(&-1).map_or(0.0, |r| lp(&r, p));
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let weighted = rows
        .iter()
        .map(|(&j, r)| (j as f64 * (alpha + 0.5 - inv_p)).exp2() * lp(r, p));
    let detail = if q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        weighted.map(|w| w.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    father + detail
}
