use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Sorted, finite observations; at least two of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    observations: Vec<f64>,
}

impl Sample {
    pub fn new(mut observations: Vec<f64>) -> Result<Self> {
        if let Some(i) = observations.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if observations.len() < 2 {
            return Err(Error::TooFewObservations(observations.len()));
        }
        observations.sort_by(f64::total_cmp);
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.observations
    }

    pub fn min(&self) -> f64 {
        self.observations[0]
    }

    pub fn max(&self) -> f64 {
        self.observations[self.observations.len() - 1]
    }

    /// Divides every observation by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rescale factor must be positive, got {factor}"
            )));
        }
        Self::new(self.observations.iter().map(|x| x / factor).collect())
    }

    /// Reads a one-column CSV. A non-numeric first line is treated as a header.
    ///
    /// Errors carry the 1-based line number of the offending record.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut values = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(i as u64 + 1, |p| p.line());
                Error::InvalidParameter(format!("line {line}: {e}"))
            })?;
            let line = record.position().map_or(i as u64 + 1, |p| p.line());
            if record.len() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "line {line}: expected one column, found {}",
                    record.len()
                )));
            }
            let field = &record[0];
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "line {line}: not a finite number: {field:?}"
                    )))
                }
            }
        }
        Self::new(values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x")?;
        for x in &self.observations {
            writeln!(w, "{x}")?;
        }
        Ok(())
    }
}
