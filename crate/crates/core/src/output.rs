//! Grids and plain-text writers shared by the estimators and the CLI.

use std::io::Write;

use crate::error::Result;

/// `lo, lo + step, …` up to the last node not beyond `hi` (plus `hi` itself when it falls between nodes).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).floor() as usize + 1;
    let mut grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    if grid.last().is_some_and(|&x| x < hi) {
        grid.push(hi);
    }
    grid
}

/// Two-column `x,density` CSV.
pub fn write_grid_csv<W: Write>(mut w: W, grid: &[f64], values: &[f64]) -> Result<()> {
    writeln!(w, "x,density")?;
    for (x, v) in grid.iter().zip(values) {
        writeln!(w, "{x},{v}")?;
    }
    Ok(())
}
