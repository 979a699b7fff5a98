//! Integrated squared error and the Monte-Carlo sweeps built on it.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BiorthogonalBasis, DEFAULT_GRID_EXPONENT};
use crate::error::{Error, Result};
use crate::estimator::{estimate, oracle_estimate, DensityEstimate, EstimatorConfig, ThresholdMode};
use crate::kernel::{fit_kernel, KernelEstimate};
use crate::quad::trapezoid;
use crate::sample::Sample;
use crate::signals::{SignalSpec, TestSignal};

pub const DEFAULT_RISK_STEP: f64 = 1.0 / 1024.0;
pub const MAX_GRID_POINTS: usize = 10_000_000;
/// Padding added on both sides of the region the grid has to cover.
pub const GRID_PADDING: f64 = 1.0;

/// Uniform grid `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    /// `hi` is pushed up to the next node when `hi − lo` is not a multiple of `step`.
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
        }
        let intervals = ((hi - lo) / step).ceil();
        if intervals + 1.0 > MAX_GRID_POINTS as f64 {
            return Err(Error::InvalidParameter(format!(
                "grid [{lo}, {hi}] with step {step} exceeds {MAX_GRID_POINTS} points"
            )));
        }
        Ok(Self {
            lo,
            hi: lo + intervals * step,
            step,
        })
    }

    /// Grid over `[lo, hi]` with endpoints on multiples of `step`; the step
    /// doubles until the point budget is met.
    pub fn covering(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let mut step = step;
        loop {
            let a = (lo / step).floor() * step;
            let b = (hi / step).ceil() * step;
            if (b - a) / step + 1.0 <= MAX_GRID_POINTS as f64 {
                return Self::new(a, b, step);
            }
            step *= 2.0;
        }
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.lo + i as f64 * self.step).collect()
    }

    fn check_covers(&self, lo: f64, hi: f64) -> Result<()> {
        if self.lo > lo || self.hi < hi {
            return Err(Error::GridCoverage {
                grid_lo: self.lo,
                grid_hi: self.hi,
                lo,
                hi,
            });
        }
        Ok(())
    }
}

/// A fitted density that can be evaluated on a grid.
pub trait FittedDensity: Send + Sync {
    fn evaluate(&self, grid: &[f64]) -> Vec<f64>;
    /// Interval outside of which the fit vanishes (`None` for the zero function).
    fn support_hull(&self) -> Option<(f64, f64)>;
}

impl FittedDensity for DensityEstimate {
    fn evaluate(&self, grid: &[f64]) -> Vec<f64> {
        DensityEstimate::evaluate(self, grid)
    }

    fn support_hull(&self) -> Option<(f64, f64)> {
        DensityEstimate::support_hull(self)
    }
}

impl FittedDensity for KernelEstimate {
    fn evaluate(&self, grid: &[f64]) -> Vec<f64> {
        KernelEstimate::evaluate(self, grid)
    }

    fn support_hull(&self) -> Option<(f64, f64)> {
        KernelEstimate::support_hull(self)
    }
}

/// Default grid for comparing `fit` with `signal`: the signal's quadrature
/// window, the fit's support and `extra`, padded by one on each side.
pub fn default_grid(
    fit: &dyn FittedDensity,
    signal: &TestSignal,
    extra: Option<(f64, f64)>,
) -> Result<GridSpec> {
    let (mut lo, mut hi) = signal.quadrature_window();
    for (a, b) in fit.support_hull().into_iter().chain(extra) {
        lo = lo.min(a);
        hi = hi.max(b);
    }
    GridSpec::covering(lo - GRID_PADDING, hi + GRID_PADDING, DEFAULT_RISK_STEP)
}

/// `∫ (f − f̂)²`: trapezoid rule on `grid` plus `∫ f²` outside it.
pub fn ise(fit: &dyn FittedDensity, signal: &TestSignal, grid: &GridSpec) -> Result<f64> {
    if let Some((lo, hi)) = fit.support_hull() {
        grid.check_covers(lo, hi)?;
    }
    ise_with(signal, grid, |xs| fit.evaluate(xs))
}

/// [`ise`] for an arbitrary `f̂` given through its grid evaluations.
///
/// Node values are averages of the left and right limits, which makes the
/// rule exact for piecewise-constant integrands with jumps on the nodes.
pub fn ise_with<F>(signal: &TestSignal, grid: &GridSpec, fhat: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let (wlo, whi) = signal.quadrature_window();
    grid.check_covers(wlo, whi)?;
    let right = grid.nodes();
    let left: Vec<f64> = right.iter().map(|x| x.next_down()).collect();
    let sq_err = |xs: &[f64]| -> Vec<f64> {
        let est = fhat(xs);
        xs.iter()
            .zip(est)
            .map(|(&x, e)| {
                let d = signal.pdf(x) - e;
                d * d
            })
            .collect()
    };
    let (r, l) = (sq_err(&right), sq_err(&left));
    let avg: Vec<f64> = r.iter().zip(&l).map(|(a, b)| 0.5 * (a + b)).collect();
    let inside = trapezoid(&avg, grid.step);
    Ok(inside + signal.tail_square_integral(grid.lo, grid.hi)?)
}

/// Estimation methods compared in the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Wavelet { basis: BasisKind, mode: ThresholdMode },
    Oracle { basis: BasisKind },
    Kernel,
}

pub const METHOD_CODES: [&str; 4] = ["S", "H", "S*", "K"];

impl Method {
    pub const S: Method = Method::Wavelet {
        basis: BasisKind::Spline,
        mode: ThresholdMode::Practical,
    };
    pub const H: Method = Method::Wavelet {
        basis: BasisKind::Haar,
        mode: ThresholdMode::Practical,
    };
    pub const S_STAR: Method = Method::Wavelet {
        basis: BasisKind::Spline,
        mode: ThresholdMode::PracticalGamma { gamma: 0.5 },
    };

    pub fn from_code(code: &str) -> Result<Self> {
        match code.trim() {
            "S" => Ok(Self::S),
            "H" => Ok(Self::H),
            "S*" => Ok(Self::S_STAR),
            "K" => Ok(Method::Kernel),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?}; valid methods are {}",
                METHOD_CODES.join(", ")
            ))),
        }
    }

    pub fn code(&self) -> String {
        match *self {
            m if m == Self::S => "S".into(),
            m if m == Self::H => "H".into(),
            m if m == Self::S_STAR => "S*".into(),
            Method::Kernel => "K".into(),
            Method::Oracle { basis } => format!("oracle-{basis}"),
            Method::Wavelet { basis, mode } => format!("{basis}-{}", mode.label()),
        }
    }

    fn basis(&self) -> Option<BasisKind> {
        match *self {
            Method::Wavelet { basis, .. } | Method::Oracle { basis } => Some(basis),
            Method::Kernel => None,
        }
    }
}

/// Bases built once per sweep and shared by every replication.
#[derive(Debug, Clone, Default)]
pub struct BasisSet {
    bases: HashMap<BasisKind, Arc<BiorthogonalBasis>>,
}

impl BasisSet {
    pub fn for_methods(methods: &[Method], grid_exponent: u32) -> Result<Self> {
        let mut bases = HashMap::new();
        for kind in methods.iter().filter_map(Method::basis) {
            if let Entry::Vacant(slot) = bases.entry(kind) {
                slot.insert(Arc::new(BiorthogonalBasis::build(kind, grid_exponent)?));
            }
        }
        Ok(Self { bases })
    }

    fn get(&self, kind: BasisKind) -> Arc<BiorthogonalBasis> {
        Arc::clone(&self.bases[&kind])
    }
}

/// A fit together with the number of coefficients it kept, when that makes sense.
pub fn fit_method(
    method: Method,
    sample: &Sample,
    signal: &TestSignal,
    bases: &BasisSet,
) -> Result<(Box<dyn FittedDensity>, Option<usize>)> {
    Ok(match method {
        Method::Wavelet { basis, mode } => {
            let est = estimate(sample, &EstimatorConfig::new(bases.get(basis), mode))?;
            let kept = est.kept.len();
            (Box::new(est), Some(kept))
        }
        Method::Oracle { basis } => {
            let config = EstimatorConfig::new(bases.get(basis), ThresholdMode::Practical);
            let est = oracle_estimate(sample, signal, &config)?;
            let kept = est.kept.len();
            (Box::new(est), Some(kept))
        }
        Method::Kernel => (Box::new(fit_kernel(sample)?), None),
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep` under `master_seed`.
pub fn replication_seed(master_seed: u64, rep: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(rep as u64))
}

/// Per-method ISE values of a sweep, with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub signal: String,
    pub method: String,
    pub parameter: Option<f64>,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub ise_values: Vec<f64>,
    pub kept_counts: Vec<Option<usize>>,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

/// Type-7 sample quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl RiskReport {
    fn new(
        signal: String,
        method: String,
        parameter: Option<f64>,
        n: usize,
        master_seed: u64,
        ise_values: Vec<f64>,
        kept_counts: Vec<Option<usize>>,
    ) -> Self {
        let mut sorted = ise_values.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            signal,
            method,
            parameter,
            n,
            replications: ise_values.len(),
            master_seed,
            mean: ise_values.iter().sum::<f64>() / ise_values.len() as f64,
            median: quantile(&sorted, 0.5),
            q25: quantile(&sorted, 0.25),
            q75: quantile(&sorted, 0.75),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            ise_values,
            kept_counts,
        }
    }

    /// `n × MISE`.
    pub fn n_mise(&self) -> f64 {
        self.n as f64 * self.mean
    }

    fn with_parameter(mut self, parameter: f64) -> Self {
        self.parameter = Some(parameter);
        self
    }
}

/// Knobs shared by every sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub grid_exponent: u32,
}

impl SweepSettings {
    pub fn new(n: usize, replications: usize, master_seed: u64) -> Self {
        Self {
            n,
            replications,
            master_seed,
            grid_exponent: DEFAULT_GRID_EXPONENT,
        }
    }
}

/// One report per method. Each replication draws one sample that every method sees.
pub fn mise_sweep(signal: &TestSignal, methods: &[Method], settings: &SweepSettings) -> Result<Vec<RiskReport>> {
    mise_sweep_within(signal, methods, settings, None)
}

fn mise_sweep_within(
    signal: &TestSignal,
    methods: &[Method],
    settings: &SweepSettings,
    extra: Option<(f64, f64)>,
) -> Result<Vec<RiskReport>> {
    if settings.replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let bases = BasisSet::for_methods(methods, settings.grid_exponent)?;
    let per_rep: Vec<Vec<(f64, Option<usize>)>> = (0..settings.replications)
        .into_par_iter()
        .map(|rep| {
            let sample = signal.sample(replication_seed(settings.master_seed, rep), settings.n)?;
            methods
                .iter()
                .map(|&m| {
                    let (fit, kept) = fit_method(m, &sample, signal, &bases)?;
                    let grid = default_grid(fit.as_ref(), signal, extra)?;
                    Ok((ise(fit.as_ref(), signal, &grid)?, kept))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (ise_values, kept) = per_rep.iter().map(|r| r[i]).unzip();
            RiskReport::new(
                signal.id(),
                m.code(),
                None,
                settings.n,
                settings.master_seed,
                ise_values,
                kept,
            )
        })
        .collect())
}

/// `PracticalGamma(γ)` over `gammas`; reports carry `γ` as their parameter.
pub fn calibration_sweep(
    signal: &TestSignal,
    basis: BasisKind,
    gammas: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<RiskReport>> {
    let methods: Vec<Method> = gammas
        .iter()
        .map(|&gamma| Method::Wavelet {
            basis,
            mode: ThresholdMode::PracticalGamma { gamma },
        })
        .collect();
    Ok(mise_sweep(signal, &methods, settings)?
        .into_iter()
        .zip(gammas)
        .map(|(r, &g)| r.with_parameter(g))
        .collect())
}

/// Sweep over `g_d` for each `d`; the grid always spans at least `[−10, d + 10]`.
pub fn support_sweep(d_values: &[f64], methods: &[Method], settings: &SweepSettings) -> Result<Vec<RiskReport>> {
    let mut out = Vec::new();
    for &d in d_values {
        let signal = TestSignal::new(SignalSpec::MixtureGd { d })?;
        let reports = mise_sweep_within(&signal, methods, settings, Some((-10.0, d + 10.0)))?;
        out.extend(reports.into_iter().map(|r| r.with_parameter(d)));
    }
    Ok(out)
}

/// Sweep over `h_k` for each `k`.
pub fn tail_sweep(k_values: &[f64], methods: &[Method], settings: &SweepSettings) -> Result<Vec<RiskReport>> {
    let mut out = Vec::new();
    for &k in k_values {
        let signal = TestSignal::new(SignalSpec::MixtureHk { k })?;
        let reports = mise_sweep(&signal, methods, settings)?;
        out.extend(reports.into_iter().map(|r| r.with_parameter(k)));
    }
    Ok(out)
}

fn fmt_param(p: Option<f64>) -> String {
    p.map_or_else(String::new, |v| v.to_string())
}

/// One row per replication.
pub fn write_replications_csv<W: Write>(mut w: W, reports: &[RiskReport]) -> Result<()> {
    writeln!(w, "signal,method,parameter,n,replication,seed,ise,kept")?;
    for r in reports {
        for (rep, (ise, kept)) in r.ise_values.iter().zip(&r.kept_counts).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.signal,
                r.method,
                fmt_param(r.parameter),
                r.n,
                rep,
                replication_seed(r.master_seed, rep),
                ise,
                kept.map_or_else(String::new, |k| k.to_string())
            )?;
        }
    }
    Ok(())
}

/// `method,parameter,mean,q25,q75` for plotting.
pub fn write_plot_csv<W: Write>(mut w: W, reports: &[RiskReport]) -> Result<()> {
    writeln!(w, "method,parameter,mean,q25,q75")?;
    for r in reports {
        writeln!(w, "{},{},{},{},{}", r.method, fmt_param(r.parameter), r.mean, r.q25, r.q75)?;
    }
    Ok(())
}

/// Boxplot data: `method,parameter,min,q25,median,q75,max,mean`.
pub fn write_quartiles_csv<W: Write>(mut w: W, reports: &[RiskReport]) -> Result<()> {
    writeln!(w, "method,parameter,min,q25,median,q75,max,mean")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.method,
            fmt_param(r.parameter),
            r.min,
            r.q25,
            r.median,
            r.q75,
            r.max,
            r.mean
        )?;
    }
    Ok(())
}
