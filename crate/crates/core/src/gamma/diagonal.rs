use serde::Serialize;

use crate::error::{Error, Result};
use crate::extgrid::ExtReal;

/// Rectangular array `a[k][n]`: `k` is the outer index along which the final
/// limsup is taken, `n` the index to be chosen per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSeq {
    rows: usize,
    cols: usize,
    data: Vec<ExtReal>,
}

impl DoubleSeq {
    pub fn new(rows: usize, cols: usize, data: Vec<ExtReal>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadParameter(format!(
                "{} entries for a {rows}x{cols} array",
                data.len()
            )));
        }
        Ok(DoubleSeq { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> ExtReal) -> Self {
        let data = (0..rows)
            .flat_map(|k| (0..cols).map(move |n| (k, n)))
            .map(|(k, n)| f(k, n))
            .collect();
        DoubleSeq { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, n: usize) -> ExtReal {
        self.data[k * self.cols + n]
    }

    /// First index of the last quarter (at least one entry).
    pub fn tail_from(len: usize) -> usize {
        len - (len / 4).max(1)
    }

    /// Truncated `limsup_n limsup_k a[k][n]`: max over the last quarter of
    /// columns of the max over the last quarter of rows.
    pub fn iterated_limsup(&self) -> ExtReal {
        let r0 = Self::tail_from(self.rows);
        let c0 = Self::tail_from(self.cols);
        (c0..self.cols)
            .flat_map(|n| (r0..self.rows).map(move |k| (k, n)))
            .map(|(k, n)| self.get(k, n))
            .max()
            .expect("nonempty tail")
    }

    /// Truncated `limsup_k a[k][path[k]]`.
    pub fn path_limsup(&self, path: &[usize]) -> ExtReal {
        let r0 = Self::tail_from(self.rows);
        (r0..self.rows)
            .map(|k| self.get(k, path[k]))
            .max()
            .expect("nonempty tail")
    }
}

/// Column choice per row, with the two sides of the interchange inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalPath {
    pub columns: Vec<usize>,
    /// Truncated limsup along the path.
    pub achieved: ExtReal,
    /// Truncated iterated limsup.
    pub bound: ExtReal,
    /// Rows where no column met the bound; the smallest suffix was taken.
    pub fallback_rows: usize,
}

impl DiagonalPath {
    pub fn holds(&self, tol: f64) -> bool {
        self.achieved <= self.bound.add_real(tol)
    }
}

/// Greedy diagonal selection: for each row pick the smallest column, no
/// smaller than the previous choice and than the ramp `k * cols / rows`,
/// whose supremum over the remaining rows stays within `tol` of the iterated
/// bound.
pub fn diagonal_index(a: &DoubleSeq, tol: f64) -> Result<DiagonalPath> {
    if a.rows < 4 || a.cols < 4 {
        return Err(Error::HorizonExceeded(format!(
            "need at least 4 rows and 4 columns, got {}x{}",
            a.rows, a.cols
        )));
    }
    let bound = a.iterated_limsup();
    let cap = bound.add_real(tol);
    // suffix[k][n] = max over rows k.. of a[.][n]
    let mut suffix = vec![ExtReal::NegInf; a.rows * a.cols];
    for k in (0..a.rows).rev() {
        for n in 0..a.cols {
            let below = if k + 1 < a.rows {
                suffix[(k + 1) * a.cols + n]
            } else {
                ExtReal::NegInf
            };
            suffix[k * a.cols + n] = a.get(k, n).max(below);
        }
    }
    let mut columns = Vec::with_capacity(a.rows);
    let mut prev = 0;
    let mut fallback_rows = 0;
    for k in 0..a.rows {
        let ramp = k * a.cols / a.rows;
        let start = prev.max(ramp);
        let row = &suffix[k * a.cols..(k + 1) * a.cols];
        let pick = (start..a.cols).find(|&n| row[n] <= cap);
        let n = pick.unwrap_or_else(|| {
            fallback_rows += 1;
            // first column with the smallest remaining supremum
            (start..a.cols).fold(start, |best, n| if row[n] < row[best] { n } else { best })
        });
        columns.push(n);
        prev = n;
    }
    let achieved = a.path_limsup(&columns);
    Ok(DiagonalPath {
        columns,
        achieved,
        bound,
        fallback_rows,
    })
}
