//! Biorthogonal wavelet families with a piecewise constant decomposition side.
//!
//! Two families are provided:
//!
//! * **Haar**: `φ = φ̃ = 1_[0,1)`, `ψ = ψ̃ = 1_[0,½) − 1_[½,1)`.
//! * **Spline**: the Cohen–Daubechies–Feauveau (1,3) pair. The analysis side keeps the
//!   box scaling function, so `ψ` is an exact step function read off the dual
//!   low-pass filter. The synthesis side `φ̃`, `ψ̃` has no closed form and is
//!   tabulated on a dyadic grid by the cascade algorithm.
//!
//! Coefficient indices use `j = -1` for the translates of the scaling function,
//! `ψ_{-1,k} := φ(· − k)`, and `ψ_{jk} = 2^{j/2} ψ(2^j · − k)` for `j ≥ 0`.

mod step;
mod tabulated;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use step::StepFunction;
pub use tabulated::TabulatedFunction;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_EXPONENT: u32 = 12;
pub const MIN_GRID_EXPONENT: u32 = 10;
const CASCADE_TOLERANCE: f64 = 1e-10;
const CASCADE_MAX_ITERATIONS: usize = 60;
const BASIS_CACHE_HEADER: &str = "wavedens-basis-cache v1";

/// Dual low-pass filter of the CDF(1,3) pair (taps sum to 1), first tap at `n = -2`.
const CDF13_DUAL_LOWPASS: [f64; 6] = [
    -1.0 / 16.0,
    1.0 / 16.0,
    0.5,
    0.5,
    1.0 / 16.0,
    -1.0 / 16.0,
];
const CDF13_DUAL_OFFSET: i32 = -2;

/// Smoothness parameter `r` of the Spline pair (`φ̃ ∈ C^{r+1}`). Successive
/// finite-difference ratios of the tabulated `φ̃` approach a Hölder exponent of
/// 1 from below, so `r` is taken as 0. `ψ` itself has three vanishing moments.
pub const SPLINE_SMOOTHNESS: f64 = 0.0;
pub const SPLINE_VANISHING_MOMENTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Haar,
    Spline,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::Haar => "haar",
            BasisKind::Spline => "spline",
        })
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(BasisKind::Haar),
            "spline" | "cdf13" => Ok(BasisKind::Spline),
            other => Err(Error::InvalidParameter(format!(
                "unknown basis {other:?} (expected haar or spline)"
            ))),
        }
    }
}

/// `(j, k)` with `j ≥ -1`. Ordered by level, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoefficientIndex {
    pub j: i32,
    pub k: i64,
}

impl CoefficientIndex {
    pub const fn new(j: i32, k: i64) -> Self {
        Self { j, k }
    }

    pub fn is_father(&self) -> bool {
        self.j < 0
    }

    /// `(2^j, 2^{j/2})`, with `(1, 1)` for the father row.
    #[inline]
    pub fn dilation(&self) -> (f64, f64) {
        if self.j < 0 {
            (1.0, 1.0)
        } else {
            let d = (self.j as f64).exp2();
            (d, d.sqrt())
        }
    }
}

/// Reconstruction-side function: exact for Haar, tabulated otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    Step(StepFunction),
    Tabulated(TabulatedFunction),
}

impl Reconstruction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Reconstruction::Step(s) => s.eval(x),
            Reconstruction::Tabulated(t) => t.eval(x),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Reconstruction::Step(s) => s.support(),
            Reconstruction::Tabulated(t) => t.support(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalBasis {
    kind: BasisKind,
    phi: StepFunction,
    psi: StepFunction,
    phi_tilde: Reconstruction,
    psi_tilde: Reconstruction,
    r: f64,
}

impl BiorthogonalBasis {
    pub fn haar() -> Self {
        let phi = StepFunction::indicator(0.0, 1.0);
        let psi = StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.0, -1.0]).expect("haar");
        Self {
            kind: BasisKind::Haar,
            phi_tilde: Reconstruction::Step(phi.clone()),
            psi_tilde: Reconstruction::Step(psi.clone()),
            phi,
            psi,
            r: 0.0,
        }
    }

    /// Builds the CDF(1,3) pair, tabulating the synthesis side on a `2^-grid_exponent` grid.
    pub fn spline(grid_exponent: u32) -> Result<Self> {
        if grid_exponent < MIN_GRID_EXPONENT {
            return Err(Error::InvalidParameter(format!(
                "grid exponent must be at least {MIN_GRID_EXPONENT}, got {grid_exponent}"
            )));
        }
        let phi_tilde = cascade(
            &CDF13_DUAL_LOWPASS,
            CDF13_DUAL_OFFSET,
            grid_exponent,
            CASCADE_TOLERANCE,
            CASCADE_MAX_ITERATIONS,
        )?;
        let psi_tilde = box_dual_wavelet(&phi_tilde)?;
        Self::spline_from_tabulations(phi_tilde, psi_tilde)
    }

    fn spline_from_tabulations(
        phi_tilde: TabulatedFunction,
        psi_tilde: TabulatedFunction,
    ) -> Result<Self> {
        Ok(Self {
            kind: BasisKind::Spline,
            phi: StepFunction::indicator(0.0, 1.0),
            psi: box_primal_wavelet(&CDF13_DUAL_LOWPASS, CDF13_DUAL_OFFSET)?,
            phi_tilde: Reconstruction::Tabulated(phi_tilde),
            psi_tilde: Reconstruction::Tabulated(psi_tilde),
            r: SPLINE_SMOOTHNESS,
        })
    }

    pub fn build(kind: BasisKind, grid_exponent: u32) -> Result<Self> {
        match kind {
            BasisKind::Haar => Ok(Self::haar()),
            BasisKind::Spline => Self::spline(grid_exponent),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn smoothness(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> &StepFunction {
        &self.phi
    }

    pub fn psi(&self) -> &StepFunction {
        &self.psi
    }

    pub fn phi_tilde(&self) -> &Reconstruction {
        &self.phi_tilde
    }

    pub fn psi_tilde(&self) -> &Reconstruction {
        &self.psi_tilde
    }

    /// Base (undilated) decomposition function for the row of `idx`.
    #[inline]
    pub fn decomposition_base(&self, j: i32) -> &StepFunction {
        if j < 0 {
            &self.phi
        } else {
            &self.psi
        }
    }

    #[inline]
    pub fn reconstruction_base(&self, j: i32) -> &Reconstruction {
        if j < 0 {
            &self.phi_tilde
        } else {
            &self.psi_tilde
        }
    }

    /// `ψ_jk(x)`, an exact step lookup.
    #[inline]
    pub fn eval_decomposition(&self, idx: CoefficientIndex, x: f64) -> f64 {
        let (dil, amp) = idx.dilation();
        amp * self.decomposition_base(idx.j).eval(dil * x - idx.k as f64)
    }

    /// `ψ̃_jk(x)`.
    #[inline]
    pub fn eval_reconstruction(&self, idx: CoefficientIndex, x: f64) -> f64 {
        let (dil, amp) = idx.dilation();
        amp * self.reconstruction_base(idx.j).eval(dil * x - idx.k as f64)
    }

    /// `‖ψ_jk‖_∞`.
    pub fn sup_norm(&self, idx: CoefficientIndex) -> f64 {
        idx.dilation().1 * self.decomposition_base(idx.j).sup_norm()
    }

    /// Closed support of `ψ_jk`.
    pub fn support_interval(&self, idx: CoefficientIndex) -> (f64, f64) {
        scale_interval(self.decomposition_base(idx.j).support(), idx)
    }

    /// Closed support of `ψ̃_jk`.
    pub fn reconstruction_support(&self, idx: CoefficientIndex) -> (f64, f64) {
        scale_interval(self.reconstruction_base(idx.j).support(), idx)
    }

    /// Widest decomposition support, in integer translates.
    pub fn max_support_width(&self) -> f64 {
        let width = |(a, b): (f64, f64)| b - a;
        width(self.phi.support()).max(width(self.psi.support()))
    }

    /// Translates `k` on row `j` whose decomposition support meets `[lo, hi]`.
    pub fn translates_meeting(&self, j: i32, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
        let (a, b) = self.decomposition_base(j).support();
        let (dil, _) = CoefficientIndex::new(j, 0).dilation();
        let first = (dil * lo - b).ceil() as i64;
        let last = (dil * hi - a).floor() as i64;
        first..=last
    }

    /// Writes the synthesis tabulations; no-op content for Haar beyond the header.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{BASIS_CACHE_HEADER}")?;
        writeln!(w, "basis {}", self.kind)?;
        if let (Reconstruction::Tabulated(p), Reconstruction::Tabulated(q)) =
            (&self.phi_tilde, &self.psi_tilde)
        {
            p.write_to(&mut w)?;
            q.write_to(&mut w)?;
        }
        Ok(())
    }

    pub fn read_cache<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim() != BASIS_CACHE_HEADER {
            return Err(Error::CacheFormat(format!("bad header {:?}", line.trim())));
        }
        line.clear();
        r.read_line(&mut line)?;
        let kind: BasisKind = line
            .trim()
            .strip_prefix("basis ")
            .ok_or_else(|| Error::CacheFormat(format!("expected basis line, got {line:?}")))?
            .parse()?;
        match kind {
            BasisKind::Haar => Ok(Self::haar()),
            BasisKind::Spline => {
                let phi_tilde = TabulatedFunction::read_from(&mut r)?;
                let psi_tilde = TabulatedFunction::read_from(&mut r)?;
                Self::spline_from_tabulations(phi_tilde, psi_tilde)
            }
        }
    }
}

fn scale_interval((a, b): (f64, f64), idx: CoefficientIndex) -> (f64, f64) {
    let (dil, _) = idx.dilation();
    let k = idx.k as f64;
    ((a + k) / dil, (b + k) / dil)
}

/// Cascade (refinement) iteration for `φ̃(x) = Σ_n 2 h_n φ̃(2x − n)` on the
/// grid `2^-grid_exponent`, started from the box function. Stops once the
/// sup-norm change between iterates drops below `tol`.
pub fn cascade(
    taps: &[f64],
    offset: i32,
    grid_exponent: u32,
    tol: f64,
    max_iterations: usize,
) -> Result<TabulatedFunction> {
    let per_unit = 1usize << grid_exponent;
    let width = taps.len() - 1;
    let nodes = width * per_unit + 1;
    let lo = offset as f64;

    let mut current = vec![0.0; nodes];
    let start = (-offset) as usize * per_unit;
    current[start..start + per_unit].fill(1.0);
    let mut next = vec![0.0; nodes];

    let mut delta = f64::INFINITY;
    for _ in 0..max_iterations {
        for (m, out) in next.iter_mut().enumerate() {
            // Node m sits at lo + m/per_unit; 2x - n, n = lo + i, lands on node 2m - i * per_unit.
            let mut acc = 0.0;
            for (i, &h) in taps.iter().enumerate() {
                let src = 2 * m as i64 - (i * per_unit) as i64;
                if (0..nodes as i64).contains(&src) {
                    acc += 2.0 * h * current[src as usize];
                }
            }
            *out = acc;
        }
        delta = current
            .iter()
            .zip(&next)
            .fold(0.0, |d, (a, b)| d.max((a - b).abs()));
        std::mem::swap(&mut current, &mut next);
        if delta < tol {
            return TabulatedFunction::new(lo, grid_exponent, current);
        }
    }
    Err(Error::CascadeDiverged {
        iterations: max_iterations,
        delta,
    })
}

/// Step-function wavelet `ψ = Σ_n 2 g_n 1_[0,1)(2x − n)` with `g_n = (−1)^n h̃_{1−n}`.
fn box_primal_wavelet(dual_taps: &[f64], dual_offset: i32) -> Result<StepFunction> {
    let first = 1 - (dual_offset + dual_taps.len() as i32 - 1);
    let last = 1 - dual_offset;
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    for n in first..=last {
        let tap = dual_taps[(1 - n - dual_offset) as usize];
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        breakpoints.push(n as f64 / 2.0);
        values.push(2.0 * sign * tap);
    }
    breakpoints.push((last + 1) as f64 / 2.0);
    StepFunction::new(breakpoints, values)
}

/// Synthesis wavelet for a box primal: `ψ̃(x) = φ̃(2x) − φ̃(2x − 1)`.
///
/// `2x` of a grid node is again a node, so the result is exact on the grid.
fn box_dual_wavelet(phi_tilde: &TabulatedFunction) -> Result<TabulatedFunction> {
    let (a, b) = phi_tilde.support();
    let lo = a / 2.0;
    let hi = (b + 1.0) / 2.0;
    let step = phi_tilde.grid_step();
    let nodes = ((hi - lo) / step).round() as usize + 1;
    let samples = (0..nodes)
        .map(|i| {
            let x = lo + i as f64 * step;
            phi_tilde.eval(2.0 * x) - phi_tilde.eval(2.0 * x - 1.0)
        })
        .collect();
    TabulatedFunction::new(lo, phi_tilde.grid_exponent(), samples)
}
