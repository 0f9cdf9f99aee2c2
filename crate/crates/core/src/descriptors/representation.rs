use crate::error::{Error, Result};

/// A `count × dim` matrix of representations, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationSet {
    data: Vec<f64>,
    count: usize,
    dim: usize,
    layer_index: Option<usize>,
}

impl RepresentationSet {
    pub fn new(data: Vec<f64>, count: usize, dim: usize) -> Result<Self> {
        if count == 0 || dim == 0 {
            return Err(Error::validation(format!(
                "representation set must be non-empty, got {count}×{dim}"
            )));
        }
        if data.len() != count * dim {
            return Err(Error::shape(format!(
                "{} values cannot form a {count}×{dim} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value at row {}, column {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self {
            data,
            count,
            dim,
            layer_index: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(i) = rows.iter().position(|r| r.as_ref().len() != dim) {
            return Err(Error::shape(format!("row {i} has a different width than row 0")));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(data, rows.len(), dim)
    }

    pub fn with_layer_index(mut self, layer: usize) -> Self {
        self.layer_index = Some(layer);
        self
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layer_index(&self) -> Option<usize> {
        self.layer_index
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Columns `start..start + width` as a new set.
    pub fn columns(&self, start: usize, width: usize) -> Result<Self> {
        if width == 0 || start + width > self.dim {
            return Err(Error::shape(format!(
                "columns {start}..{} outside dimension {}",
                start + width,
                self.dim
            )));
        }
        let data = self
            .rows()
            .flat_map(|r| r[start..start + width].iter().copied())
            .collect();
        Ok(Self {
            data,
            count: self.count,
            dim: width,
            layer_index: self.layer_index,
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let data = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self::new(data, rows.len(), self.dim)
    }

    /// Stacks two sets with the same width.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::shape(format!(
                "cannot stack width {} onto width {}",
                other.dim, self.dim
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(data, self.count + other.count, self.dim)
    }

    /// Per-dimension attested minimum and maximum.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for row in self.rows() {
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        ranges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(RepresentationSet::new(vec![], 0, 3).is_err());
        assert!(RepresentationSet::new(vec![1.0; 5], 2, 3).is_err());
        let err = RepresentationSet::new(vec![1.0, f64::NAN, 0.0, 0.0], 2, 2).unwrap_err();
        assert!(err.to_string().contains("row 0, column 1"));
    }

    #[test]
    fn slicing() {
        let y = RepresentationSet::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let c = y.columns(1, 2).unwrap();
        assert_eq!(c.as_slice(), &[2.0, 3.0, 5.0, 6.0]);
        assert!(y.columns(2, 2).is_err());
        let s = y.select_rows(&[1, 1]).unwrap();
        assert_eq!(s.row(0), &[4.0, 5.0, 6.0]);
        assert_eq!(y.concat(&s).unwrap().count(), 4);
        assert_eq!(y.column_ranges()[2], (3.0, 6.0));
    }
}
