//! Analytic test densities with seeded samplers and exact access to their
//! wavelet coefficients.
//!
//! Because every decomposition function is piecewise constant, the true
//! coefficient `β_jk = ∫ψ_jk f` is a finite sum of step values times interval
//! masses, so it only needs the distribution function of `f`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::basis::{BiorthogonalBasis, CoefficientIndex};
use crate::error::{Error, Result};
use crate::quad;
use crate::sample::Sample;

/// Bump locations, heights and widths of the Bumps signal.
pub const BUMPS_POSITIONS: [f64; 11] = [
    0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78, 0.81,
];
pub const BUMPS_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
pub const BUMPS_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];
/// The rounded normalizing constant usually quoted for the Bumps density.
pub const BUMPS_QUOTED_NORMALIZER: f64 = 0.284;

/// Adaptive Simpson tolerance for the Bumps distribution function.
const BUMPS_QUAD_TOL: f64 = 1e-10;
/// Proposals allowed per accepted Bumps draw.
pub const MAX_REJECTION_PROPOSALS: u64 = 10_000_000;
/// Half-width, in standard deviations, of the quadrature window of a Gaussian component.
const GAUSS_WINDOW_SDS: f64 = 8.0;
const STUDENT_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `1_[0,1]`.
    Uniform01,
    Gauss { mean: f64, sd: f64 },
    /// `½ N(0,1) + ½ N(d,1)`.
    MixtureGd { d: f64 },
    /// Student `T(k)` plus four narrow Gaussians.
    MixtureHk { k: f64 },
    Bumps,
}

impl SignalSpec {
    pub fn id(&self) -> String {
        match self {
            SignalSpec::Uniform01 => "uniform".into(),
            SignalSpec::Gauss { mean, sd } => format!("gauss({mean},{sd})"),
            SignalSpec::MixtureGd { d } => format!("g_d({d})"),
            SignalSpec::MixtureHk { k } => format!("h_k({k})"),
            SignalSpec::Bumps => "bumps".into(),
        }
    }
}

impl std::fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Debug, Clone)]
enum Component {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Student { dist: StudentsT, dof: f64 },
    Bumps { normalizer: f64, envelope: f64 },
}

impl Component {
    fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidParameter(format!("normal({mean}, {sd})")));
        }
        Ok(Component::Normal { mean, sd })
    }

    fn pdf(&self, x: f64) -> f64 {
        match self {
            Component::Uniform { lo, hi } => {
                if x >= *lo && x < *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Component::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Component::Student { dist, .. } => dist.pdf(x),
            Component::Bumps { normalizer, .. } => bumps_raw(x) / normalizer,
        }
    }

    /// Lower-tail distribution function; symmetric families use it for both tails.
    fn lower_cdf(&self, x: f64) -> f64 {
        match self {
            Component::Normal { mean, sd } => 0.5 * libm::erfc((mean - x) / (sd * std::f64::consts::SQRT_2)),
            Component::Student { dist, .. } => dist.cdf(x),
            _ => unreachable!("only symmetric components use lower_cdf"),
        }
    }

    /// `P(a ≤ X < b)`, computed from whichever tail keeps full relative precision.
    fn mass(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        Ok(match self {
            Component::Uniform { lo, hi } => {
                let a = a.max(*lo);
                let b = b.min(*hi);
                if b > a {
                    (b - a) / (hi - lo)
                } else {
                    0.0
                }
            }
            Component::Normal { .. } | Component::Student { .. } => {
                let center = self.center();
                if a >= center {
                    // Upper tail via reflection: P(X ≥ t) = F(2c − t).
                    self.lower_cdf(2.0 * center - a) - self.lower_cdf(2.0 * center - b)
                } else if b <= center {
                    self.lower_cdf(b) - self.lower_cdf(a)
                } else {
                    (0.5 - self.lower_cdf(a)) + (0.5 - self.lower_cdf(2.0 * center - b))
                }
            }
            Component::Bumps { normalizer, .. } => {
                let a = a.max(0.0);
                let b = b.min(1.0);
                if b <= a {
                    0.0
                } else {
                    bumps_raw_integral(a, b)? / normalizer
                }
            }
        }
        .max(0.0))
    }

    fn center(&self) -> f64 {
        match self {
            Component::Normal { mean, .. } => *mean,
            Component::Student { .. } => 0.0,
            Component::Uniform { lo, hi } => 0.5 * (lo + hi),
            Component::Bumps { .. } => 0.5,
        }
    }

    fn window(&self) -> (f64, f64) {
        match self {
            Component::Uniform { lo, hi } => (*lo, *hi),
            Component::Normal { mean, sd, .. } => {
                (mean - GAUSS_WINDOW_SDS * sd, mean + GAUSS_WINDOW_SDS * sd)
            }
            Component::Student { .. } => (-STUDENT_WINDOW, STUDENT_WINDOW),
            Component::Bumps { .. } => (0.0, 1.0),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        Ok(match self {
            Component::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Component::Normal { mean, sd, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Component::Student { dof, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                let chi = ChiSquared::new(*dof)
                    .map_err(|e| Error::InvalidParameter(format!("chi-square({dof}): {e}")))?;
                let v: f64 = chi.sample(rng);
                z / (v / dof).sqrt()
            }
            Component::Bumps { envelope, .. } => {
                rejection_draw(|x| self.pdf(x), 0.0, 1.0, *envelope, rng, MAX_REJECTION_PROPOSALS)?
            }
        })
    }
}

/// Unnormalized Bumps profile `Σ g_j (1 + |x − p_j| / w_j)^-4` on `[0, 1]`.
pub fn bumps_raw(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        bumps_profile(x)
    } else {
        0.0
    }
}

fn bumps_profile(x: f64) -> f64 {
    BUMPS_POSITIONS
        .iter()
        .zip(&BUMPS_HEIGHTS)
        .zip(&BUMPS_WIDTHS)
        .map(|((p, g), w)| g * (1.0 + (x - p).abs() / w).powi(-4))
        .sum()
}

/// `∫_a^b` of the unnormalized Bumps profile by adaptive Simpson, split at the cusps.
pub fn bumps_raw_integral(a: f64, b: f64) -> Result<f64> {
    let mut cusps = BUMPS_POSITIONS;
    cusps.sort_by(f64::total_cmp);
    quad::adaptive_simpson_split(bumps_profile, a, b, &cusps, BUMPS_QUAD_TOL)
}

/// Draws from `pdf` on `[lo, hi)` by rejection against the constant `envelope`.
pub fn rejection_draw<F: Fn(f64) -> f64>(
    pdf: F,
    lo: f64,
    hi: f64,
    envelope: f64,
    rng: &mut ChaCha8Rng,
    max_proposals: u64,
) -> Result<f64> {
    for _ in 0..max_proposals {
        let x = lo + (hi - lo) * rng.random::<f64>();
        let u = envelope * rng.random::<f64>();
        if u < pdf(x) {
            return Ok(x);
        }
    }
    Err(Error::RejectionExhausted(max_proposals))
}

/// An analytic density: finite mixture of uniform, Gaussian, Student and Bumps parts.
#[derive(Debug, Clone)]
pub struct TestSignal {
    spec: SignalSpec,
    components: Vec<(f64, Component)>,
}

impl TestSignal {
    pub fn new(spec: SignalSpec) -> Result<Self> {
        let components = match spec {
            SignalSpec::Uniform01 => vec![(1.0, Component::Uniform { lo: 0.0, hi: 1.0 })],
            SignalSpec::Gauss { mean, sd } => vec![(1.0, Component::normal(mean, sd)?)],
            SignalSpec::MixtureGd { d } => vec![
                (0.5, Component::normal(0.0, 1.0)?),
                (0.5, Component::normal(d, 1.0)?),
            ],
            SignalSpec::MixtureHk { k } => {
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "degrees of freedom must be positive, got {k}"
                    )));
                }
                let student = StudentsT::new(0.0, 1.0, k)
                    .map_err(|e| Error::InvalidParameter(format!("student({k}): {e}")))?;
                // The listed weights add up to 1.1; they are rescaled to a probability vector.
                let raw = [
                    (0.45, Component::Student { dist: student, dof: k }),
                    (0.15, Component::normal(-1.0, 0.05)?),
                    (0.1, Component::normal(-0.7, 0.005)?),
                    (0.25, Component::normal(1.0, 0.025)?),
                    (0.15, Component::normal(2.0, 0.05)?),
                ];
                let total: f64 = raw.iter().map(|(w, _)| w).sum();
                raw.into_iter().map(|(w, c)| (w / total, c)).collect()
            }
            SignalSpec::Bumps => {
                let normalizer = bumps_raw_integral(0.0, 1.0)?;
                let envelope = 1.05 * bumps_sup(normalizer);
                vec![(1.0, Component::Bumps { normalizer, envelope })]
            }
        };
        Ok(Self { spec, components })
    }

    pub fn spec(&self) -> SignalSpec {
        self.spec
    }

    pub fn id(&self) -> String {
        self.spec.id()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, c)| w * c.pdf(x)).sum()
    }

    /// `P(a ≤ X < b)`.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        self.components
            .iter()
            .map(|(w, c)| c.mass(a, b).map(|m| w * m))
            .sum()
    }

    /// Normalizer actually used for Bumps (the exact integral of the profile).
    pub fn bumps_normalizer(&self) -> Option<f64> {
        self.components.iter().find_map(|(_, c)| match c {
            Component::Bumps { normalizer, .. } => Some(*normalizer),
            _ => None,
        })
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Sample> {
        if n < 2 {
            return Err(Error::TooFewObservations(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let c = self.pick_component(&mut rng);
            xs.push(c.draw(&mut rng)?);
        }
        Sample::new(xs)
    }

    fn pick_component(&self, rng: &mut ChaCha8Rng) -> &Component {
        if self.components.len() == 1 {
            return &self.components[0].1;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, c) in &self.components {
            acc += w;
            if u < acc {
                return c;
            }
        }
        &self.components[self.components.len() - 1].1
    }

    /// Interval outside of which `f` carries less than `1e-9` of its mass.
    pub fn effective_support(&self) -> Result<(f64, f64)> {
        const TAIL: f64 = 0.5e-9;
        let (wlo, whi) = self.quadrature_window();
        let compact = self
            .components
            .iter()
            .all(|(_, c)| matches!(c, Component::Uniform { .. } | Component::Bumps { .. }));
        if compact {
            return Ok((wlo, whi));
        }
        let mid = 0.5 * (wlo + whi);
        let below = |x: f64| self.interval_mass(f64::NEG_INFINITY, x);
        let above = |x: f64| self.interval_mass(x, f64::INFINITY);
        let lo = bracket(mid, -1.0, |x| below(x).map(|m| m <= TAIL))?;
        let hi = bracket(mid, 1.0, |x| above(x).map(|m| m <= TAIL))?;
        Ok((lo, hi))
    }

    /// Interval on which risk quadrature is carried out on a fine grid; the
    /// remaining `∫f²` outside it is integrated separately.
    pub fn quadrature_window(&self) -> (f64, f64) {
        self.components
            .iter()
            .map(|(_, c)| c.window())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    /// `∫ f²` over `(-∞, lo] ∪ [hi, ∞)`.
    pub fn tail_square_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        const TOL: f64 = 1e-12;
        let sq = |x: f64| {
            let v = self.pdf(x);
            v * v
        };
        let right = quad::upper_tail_integral(sq, hi, 1.0, TOL)?;
        let left = quad::upper_tail_integral(|x| sq(-x), -lo, 1.0, TOL)?;
        Ok(left + right)
    }

    /// `β_jk = ∫ ψ_jk f`, summed exactly over the pieces of `ψ_jk`.
    pub fn true_coefficient(&self, basis: &BiorthogonalBasis, idx: CoefficientIndex) -> Result<f64> {
        self.piece_moments(basis, idx).map(|(first, _)| first)
    }

    /// `σ²_jk = ∫ ψ_jk² f − β_jk²`.
    pub fn true_sigma_sq(&self, basis: &BiorthogonalBasis, idx: CoefficientIndex) -> Result<f64> {
        self.piece_moments(basis, idx)
            .map(|(first, second)| (second - first * first).max(0.0))
    }

    fn piece_moments(&self, basis: &BiorthogonalBasis, idx: CoefficientIndex) -> Result<(f64, f64)> {
        let base = basis.decomposition_base(idx.j);
        let (dil, amp) = idx.dilation();
        let k = idx.k as f64;
        let mut first = 0.0;
        let mut second = 0.0;
        for (w, &v) in base.breakpoints().windows(2).zip(base.values()) {
            if v == 0.0 {
                continue;
            }
            let mass = self.interval_mass((w[0] + k) / dil, (w[1] + k) / dil)?;
            let value = amp * v;
            first += value * mass;
            second += value * value * mass;
        }
        Ok((first, second))
    }
}

fn bumps_sup(normalizer: f64) -> f64 {
    let steps = 1usize << 14;
    (0..steps)
        .map(|i| i as f64 / steps as f64)
        .chain(BUMPS_POSITIONS)
        .map(|x| bumps_raw(x) / normalizer)
        .fold(0.0, f64::max)
}

/// Walks from `start` in `direction` with doubling steps until `done` holds,
/// then bisects down to a relative width of `1e-9`.
fn bracket<F>(start: f64, direction: f64, done: F) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    let mut inner = start;
    let mut step = 1.0;
    let mut outer = start;
    while !done(outer)? {
        inner = outer;
        outer = start + direction * step;
        step *= 2.0;
        if step > 1e12 {
            return Err(Error::InvalidParameter("tail does not decay".into()));
        }
    }
    if outer == start {
        return Ok(start);
    }
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if done(mid)? {
            outer = mid;
        } else {
            inner = mid;
        }
        if (outer - inner).abs() <= 1e-9 * outer.abs().max(1.0) {
            break;
        }
    }
    Ok(outer)
}
