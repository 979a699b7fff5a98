use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub(crate) const TABULATION_HEADER: &str = "wavedens-tabulation v1";

/// A function sampled on the dyadic grid `lo + i * 2^-G`, linearly
/// interpolated between nodes and zero outside `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    lo: f64,
    grid_exponent: u32,
    samples: Vec<f64>,
}

impl TabulatedFunction {
    pub fn new(lo: f64, grid_exponent: u32, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("tabulation needs at least 2 nodes".into()));
        }
        if !lo.is_finite() || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulation must be finite".into()));
        }
        if grid_exponent > 30 {
            return Err(Error::InvalidParameter(format!(
                "grid exponent {grid_exponent} too fine"
            )));
        }
        Ok(Self {
            lo,
            grid_exponent,
            samples,
        })
    }

    pub fn grid_exponent(&self) -> u32 {
        self.grid_exponent
    }

    pub fn grid_step(&self) -> f64 {
        (-(self.grid_exponent as f64)).exp2()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.lo,
            self.lo + (self.samples.len() - 1) as f64 * self.grid_step(),
        )
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.grid_step()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) * (self.grid_exponent as f64).exp2();
        if !(pos >= 0.0) {
            return 0.0;
        }
        let last = self.samples.len() - 1;
        let i = pos.floor();
        if i >= last as f64 {
            return if pos == last as f64 { self.samples[last] } else { 0.0 };
        }
        let i = i as usize;
        let frac = pos - i as f64;
        if frac == 0.0 {
            return self.samples[i];
        }
        self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid integral over the tabulation, exact for the interpolant.
    pub fn integral(&self) -> f64 {
        crate::quad::trapezoid(&self.samples, self.grid_step())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TABULATION_HEADER}")?;
        writeln!(w, "grid_exponent {}", self.grid_exponent)?;
        let (lo, hi) = self.support();
        writeln!(w, "support {lo} {hi}")?;
        writeln!(w, "count {}", self.samples.len())?;
        for s in &self.samples {
            writeln!(w, "{s:e}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut line = String::new();
        let mut next = |line: &mut String| -> Result<String> {
            line.clear();
            if r.read_line(line)? == 0 {
                return Err(Error::CacheFormat("unexpected end of file".into()));
            }
            Ok(line.trim().to_string())
        };
        let header = next(&mut line)?;
        if header != TABULATION_HEADER {
            return Err(Error::CacheFormat(format!("bad header {header:?}")));
        }
        let grid_exponent: u32 = field(&next(&mut line)?, "grid_exponent")?;
        let support = next(&mut line)?;
        let mut parts = support.split_whitespace();
        if parts.next() != Some("support") {
            return Err(Error::CacheFormat(format!("expected support, got {support:?}")));
        }
        let lo: f64 = parse(parts.next())?;
        let hi: f64 = parse(parts.next())?;
        let count: usize = field(&next(&mut line)?, "count")?;
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            samples.push(parse(Some(&next(&mut line)?))?);
        }
        let tab = Self::new(lo, grid_exponent, samples)?;
        if tab.support().1 != hi {
            return Err(Error::CacheFormat(format!(
                "support end {hi} inconsistent with {count} nodes"
            )));
        }
        Ok(tab)
    }
}

fn field<T: std::str::FromStr>(line: &str, name: &str) -> Result<T> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(name) {
        return Err(Error::CacheFormat(format!("expected {name}, got {line:?}")));
    }
    parse(parts.next())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::CacheFormat(format!("unparsable token {tok:?}")))
}
