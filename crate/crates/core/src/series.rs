//! Named columns of observables on a time grid.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub taus: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        Ok(Self { taus, columns: Vec::new() })
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.taus.len() {
            return Err(Error::DimensionMismatch(format!(
                "column has {} values for {} times",
                values.len(),
                self.taus.len()
            )));
        }
        self.columns.push((name.into(), values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_grid_and_ragged_columns() {
        assert!(TimeSeries::new(vec![0.0, 0.0]).is_err());
        let mut ts = TimeSeries::new(vec![0.0, 1.0]).unwrap();
        assert!(ts.push("p", vec![1.0]).is_err());
        ts.push("p", vec![1.0, 2.0]).unwrap();
        assert_eq!(ts.column("p"), Some(&[1.0, 2.0][..]));
    }
}
