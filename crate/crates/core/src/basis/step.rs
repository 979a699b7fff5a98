use crate::error::{Error, Result};

/// Compactly supported piecewise constant function.
///
/// Pieces are half-open `[t_i, t_{i+1})`, so the function vanishes at the
/// right end of its support.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidParameter(format!(
                "step function needs len(values) + 1 == len(breakpoints) >= 2, got {} and {}",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "step function breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("step function must be finite".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// `1_[lo, hi)`.
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo, hi], vec![1.0]).expect("indicator bounds")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    /// Index of the piece containing `x`, if any.
    #[inline]
    pub fn piece_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(x >= lo && x < hi) {
            return None;
        }
        Some(self.breakpoints.partition_point(|&t| t <= x) - 1)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.piece_index(x).map_or(0.0, |i| self.values[i])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ x^m f(x) dx`, integrated piece by piece in closed form.
    pub fn moment(&self, m: u32) -> f64 {
        let p = m as i32 + 1;
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| v * (w[1].powi(p) - w[0].powi(p)) / p as f64)
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.moment(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed() {
        assert!(StepFunction::new(vec![0.0], vec![]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn half_open_pieces() {
        let f = StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.0, -1.0]).unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(0.5), -1.0);
        assert_eq!(f.eval(0.999), -1.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.eval(-1e-300), 0.0);
        assert_eq!(f.integral(), 0.0);
        assert_eq!(f.moment(1), 0.125 - 0.375);
    }
}
