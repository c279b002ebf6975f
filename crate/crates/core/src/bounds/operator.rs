//! Largest singular value of the probability-weighted kernel matrix.
//!
//! For order-2 kernels the supremum of `E sum_ij h_ij(X_i, Y_j) f_i(X_i) g_j(Y_j)`
//! over `E sum f_i^2 <= 1`, `E sum g_j^2 <= 1` is the spectral norm of
//! `M[(i,a),(j,b)] = sqrt(P_i(a)) sqrt(Q_j(b)) h_ij(a, b)`.

use nalgebra::DMatrix;

use crate::model::UStatInstance;

/// Largest dimension handled by the dense decomposition in automatic mode.
pub const DENSE_LIMIT: usize = 2000;
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Row/column blocks: `(offset, sqrt-probabilities)` per index.
    row_blocks: Vec<(usize, Vec<f64>)>,
    col_blocks: Vec<(usize, Vec<f64>)>,
}

impl WeightedMatrix {
    /// Builds `M` for an order-2 instance.
    pub fn from_instance(inst: &UStatInstance) -> Self {
        let n = inst.n();
        let blocks = |slot: usize| -> Vec<(usize, Vec<f64>)> {
            let mut offset = 0;
            (0..n)
                .map(|i| {
                    let w: Vec<f64> = inst.law(slot, i).probs().iter().map(|p| p.sqrt()).collect();
                    let start = offset;
                    offset += w.len();
                    (start, w)
                })
                .collect()
        };
        let row_blocks = blocks(0);
        let col_blocks = blocks(1);
        let rows: usize = row_blocks.iter().map(|b| b.1.len()).sum();
        let cols: usize = col_blocks.iter().map(|b| b.1.len()).sum();
        let mut data = vec![0.0; rows * cols];
        for (i, (r0, wr)) in row_blocks.iter().enumerate() {
            for (j, (c0, wc)) in col_blocks.iter().enumerate() {
                let t = inst.kernel().table(&[i, j]);
                for (a, &x) in wr.iter().enumerate() {
                    for (b, &y) in wc.iter().enumerate() {
                        data[(r0 + a) * cols + c0 + b] = x * y * t.get(&[a, b]);
                    }
                }
            }
        }
        Self {
            rows,
            cols,
            data,
            row_blocks,
            col_blocks,
        }
    }

    /// A plain matrix without block structure; [`Self::centered`] leaves it unchanged.
    pub fn from_dense(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self {
            rows,
            cols,
            data,
            row_blocks: Vec::new(),
            col_blocks: Vec::new(),
        }
    }

    /// `P M Q` with `P`, `Q` projecting each block onto the complement of its
    /// sqrt-probability vector (the image of centered functions).
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = &mut out.data[r * self.cols..(r + 1) * self.cols];
            for (c0, w) in &self.col_blocks {
                project_out(&mut row[*c0..c0 + w.len()], w);
            }
        }
        let mut column = vec![0.0; self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                column[r] = out.data[r * self.cols + c];
            }
            for (r0, w) in &self.row_blocks {
                project_out(&mut column[*r0..r0 + w.len()], w);
            }
            for r in 0..self.rows {
                out.data[r * self.cols + c] = column[r];
            }
        }
        out
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &x) in v.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * x;
            }
        }
    }

    pub fn max_dimension(&self) -> usize {
        self.rows.max(self.cols)
    }
}

/// Removes from `x` its component along the unit vector `w` (a block of
/// sqrt-probabilities, which has unit norm).
fn project_out(x: &mut [f64], w: &[f64]) {
    let dot: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    for (a, b) in x.iter_mut().zip(w) {
        *a -= dot * b;
    }
}

/// Spectral norm via a dense singular value decomposition.
pub fn spectral_norm_dense(m: &WeightedMatrix) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    let mat = DMatrix::from_row_slice(m.rows, m.cols, &m.data);
    mat.singular_values().iter().fold(0.0, |acc: f64, &s| acc.max(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Spectral norm via power iteration on `M^T M`.
///
/// Stops when the eigen-residual `|M^T M v - rho v|` falls below `tol * rho`.
/// The start vector is a fixed low-discrepancy sequence: the all-ones vector
/// is annihilated by canonical kernels whenever the laws are uniform.
pub fn spectral_norm_power(m: &WeightedMatrix, tol: f64, max_iter: usize) -> PowerResult {
    if m.rows == 0 || m.cols == 0 || m.data.iter().all(|&x| x == 0.0) {
        return PowerResult {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let golden = 0.618_033_988_749_894_9_f64;
    let mut v: Vec<f64> = (0..m.cols)
        .map(|k| 0.5 + ((k + 1) as f64 * golden).fract())
        .collect();
    normalize(&mut v);
    let mut mv = vec![0.0; m.rows];
    let mut w = vec![0.0; m.cols];
    let mut rho = 0.0;
    for it in 1..=max_iter {
        m.apply(&v, &mut mv);
        m.apply_transpose(&mv, &mut w);
        rho = dot(&v, &w);
        let residual: f64 = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - rho * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return PowerResult {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        if residual <= tol * rho {
            return PowerResult {
                value: rho.max(0.0).sqrt(),
                iterations: it,
                converged: true,
            };
        }
        std::mem::swap(&mut v, &mut w);
    }
    PowerResult {
        value: rho.max(0.0).sqrt(),
        iterations: max_iter,
        converged: false,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Dense decomposition up to [`DENSE_LIMIT`], power iteration above.
pub fn spectral_norm(m: &WeightedMatrix) -> f64 {
    if m.max_dimension() <= DENSE_LIMIT {
        spectral_norm_dense(m)
    } else {
        spectral_norm_power(m, POWER_TOL, POWER_MAX_ITER).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rademacher_chaos;

    #[test]
    fn diagonal_chaos_norm() {
        let inst = rademacher_chaos(&[vec![3.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let m = WeightedMatrix::from_instance(&inst);
        assert!((spectral_norm_dense(&m) - 3.0).abs() < 1e-12);
        let p = spectral_norm_power(&m, 1e-10, 10_000);
        assert!(p.converged);
        assert!((p.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn centering_leaves_canonical_kernels_alone() {
        let inst = rademacher_chaos(&[vec![1.0, 2.0], vec![0.5, -1.0]]).unwrap();
        let m = WeightedMatrix::from_instance(&inst);
        let c = m.centered();
        for (a, b) in m.data.iter().zip(&c.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
