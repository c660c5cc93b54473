use serde::{Deserialize, Serialize};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec::default()
    }

    /// Builds from `(index, value)` pairs; indices must strictly increase.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Option<Self> {
        let mut v = SparseVec::new();
        for (i, x) in pairs {
            if !v.push(i, x) {
                return None;
            }
        }
        Some(v)
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let mut v = SparseVec::new();
        for (i, &x) in dense.iter().enumerate() {
            if x != 0.0 {
                v.push(i, x);
            }
        }
        v
    }

    /// Appends an entry past the current last index. Returns false (and
    /// leaves the vector unchanged) when the index does not increase.
    pub fn push(&mut self, index: usize, value: f64) -> bool {
        if self.indices.last().is_some_and(|&last| last as usize >= index) {
            return false;
        }
        self.indices.push(index as u32);
        self.values.push(value);
        true
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().map(|&i| i as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, x)| x * dense[i]).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    /// Squared Euclidean distance, merging the two index lists.
    pub fn squared_distance(&self, other: &SparseVec) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            let (ia, ib) = (self.indices[a], other.indices[b]);
            let d = if ia == ib {
                a += 1;
                b += 1;
                self.values[a - 1] - other.values[b - 1]
            } else if ia < ib {
                a += 1;
                self.values[a - 1]
            } else {
                b += 1;
                other.values[b - 1]
            };
            sum += d * d;
        }
        sum += self.values[a..].iter().map(|x| x * x).sum::<f64>();
        sum += other.values[b..].iter().map(|x| x * x).sum::<f64>();
        sum
    }

    pub fn to_dense(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for (i, x) in self.iter() {
            out[i] = x;
        }
        out
    }
}

impl AsRef<SparseVec> for SparseVec {
    fn as_ref(&self) -> &SparseVec {
        self
    }
}
