//! Who-knows-whom matrices and the column indicator basis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Certainty level in `[0, 1]` that an observer knows a target is Byzantine.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct CertaintyValue<T>(pub(crate) T);

impl<T: Scalar> CertaintyValue<T> {
    pub fn value(self) -> T {
        self.0
    }
}

/// Square matrix of certainties. Row = observer, column = target; both
/// indexed from 0 here (process `i` lives at index `i - 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnowledgeMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> KnowledgeMatrix<T> {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoProcesses);
        }
        Ok(Self {
            n,
            entries: vec![T::zero(); n * n],
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for obs in 0..n {
            for tgt in 0..n {
                m.entries[obs * n + tgt] = f(obs, tgt);
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, observer: usize, target: usize) -> T {
        assert!(observer < self.n && target < self.n, "index out of bounds");
        self.entries[observer * self.n + target]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.entries.chunks(self.n)
    }

    /// Adds `scale * indicator` in place.
    pub fn add_scaled_indicator(&mut self, indicator: &IndicatorMatrix, scale: T) -> Result<()> {
        if indicator.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: indicator.n(),
            });
        }
        let col = indicator.column() - 1;
        for obs in 0..self.n {
            self.entries[obs * self.n + col] = self.entries[obs * self.n + col] + scale;
        }
        Ok(())
    }

    /// Largest elementwise absolute difference between two matrices.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    /// True when every row is identical, i.e. each column is constant.
    pub fn is_column_homogeneous(&self) -> bool {
        let first = &self.entries[..self.n];
        self.rows().all(|row| row == first)
    }
}

/// The `n x n` matrix whose `column`-th column (1-based) is all ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndicatorMatrix {
    n: usize,
    column: usize,
}

impl IndicatorMatrix {
    pub fn new(n: usize, column: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoProcesses);
        }
        if column == 0 || column > n {
            return Err(Error::IndexOutOfRange { index: column, n });
        }
        Ok(Self { n, column })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based index of the all-ones column.
    pub fn column(&self) -> usize {
        self.column
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get<T: Scalar>(&self, row: usize, col: usize) -> T {
        assert!(row < self.n && col < self.n, "index out of bounds");
        if col + 1 == self.column {
            T::one()
        } else {
            T::zero()
        }
    }

    pub fn to_dense<T: Scalar>(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c)).collect())
            .collect()
    }
}
