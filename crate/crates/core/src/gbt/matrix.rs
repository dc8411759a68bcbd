use alloc::string::String;
use alloc::vec::Vec;

use super::GbtError;

/// Row-major feature values with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    n_rows: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self, GbtError> {
        let n_features = names.len();
        if n_features == 0 {
            if values.is_empty() {
                return Ok(Self { names, n_rows: 0, values });
            }
            return Err(GbtError::Shape("values given for zero features".into()));
        }
        if values.len() % n_features != 0 {
            return Err(GbtError::Shape(alloc::format!(
                "{} values do not fill rows of {n_features} features",
                values.len()
            )));
        }
        Ok(Self { n_rows: values.len() / n_features, names, values })
    }

    pub fn from_rows<'r, I>(names: Vec<String>, rows: I) -> Result<Self, GbtError>
    where
        I: IntoIterator<Item = &'r [f64]>,
    {
        let mut values = Vec::new();
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != names.len() {
                return Err(GbtError::Shape(alloc::format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    names.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nf = self.names.len();
        &self.values[i * nf..(i + 1) * nf]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.names.len() + feature]
    }

    /// First `(row, feature)` holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let nf = self.names.len().max(1);
        self.values.iter().position(|v| !v.is_finite()).map(|i| (i / nf, i % nf))
    }
}

/// One row of named feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }
}
