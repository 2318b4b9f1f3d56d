//! Direct solvers for cyclic block-banded systems, real or complex.
//!
//! Matrices have `N` block rows of `d×d` blocks on the block diagonals
//! `−2..=2`, wrapping cyclically, optionally bordered by one extra column and
//! a row that is zero except for its corner:
//!
//! ```text
//!     [ M   c ]
//!     [ 0ᵀ  κ ]
//! ```
//!
//! The bordered form carries the affine wrap term of cocompact curves.
//!
//! The cyclic core is reordered as `0, n−1, 1, n−2, …`, which turns a cyclic
//! band of half-width `p` into an ordinary band of half-width at most `2p`,
//! and then factorised by band LU with partial pivoting. Factorisation is
//! `O(n p²)`, each solve `O(n p)`. The border is eliminated through its
//! corner before the core solve.

use num_complex::Complex64;
use num_traits::NumAssign;
use std::fmt::Debug;
use std::ops::Neg;

use crate::error::{ChenError, Result};

/// Block half-bandwidth of every operator in this crate.
pub const HALF_WIDTH: usize = 2;
const DIAGONALS: usize = 2 * HALF_WIDTH + 1;

/// Residual contract `‖Mx − b‖∞ ≤ tol · (‖M‖∞‖x‖∞ + ‖b‖∞)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Pivots below this multiple of `‖M‖∞` count as singular.
const PIVOT_TOL: f64 = 1e-14;

/// Largest system the dense oracle accepts.
pub const DENSE_ORACLE_MAX: usize = 512;

pub trait Scalar:
    Copy + Send + Sync + Debug + PartialEq + NumAssign + Neg<Output = Self> + 'static
{
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
}

fn norm_inf<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// Extra column `c` and corner `κ` of a bordered matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Border<T> {
    pub column: Vec<T>,
    pub corner: T,
}

/// Cyclic block-banded matrix with optional border.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBlockBanded<T> {
    n_blocks: usize,
    block_dim: usize,
    /// `[row block][diagonal][r][c]`, diagonal index = offset + HALF_WIDTH.
    blocks: Vec<T>,
    border: Option<Border<T>>,
}

impl<T: Scalar> CyclicBlockBanded<T> {
    pub fn zeros(n_blocks: usize, block_dim: usize) -> Result<Self> {
        if n_blocks < DIAGONALS {
            return Err(ChenError::TooFewPoints(n_blocks));
        }
        if block_dim == 0 {
            return Err(ChenError::BadDimension(0));
        }
        Ok(CyclicBlockBanded {
            n_blocks,
            block_dim,
            blocks: vec![T::zero(); n_blocks * DIAGONALS * block_dim * block_dim],
            border: None,
        })
    }

    pub fn identity(n_blocks: usize, block_dim: usize) -> Result<Self> {
        let mut m = Self::zeros(n_blocks, block_dim)?;
        for i in 0..n_blocks {
            let b = m.block_mut(i, 0);
            for r in 0..block_dim {
                b[r * block_dim + r] = T::one();
            }
        }
        Ok(m)
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Size of the cyclic core, `N·d`.
    pub fn core_size(&self) -> usize {
        self.n_blocks * self.block_dim
    }

    /// Total size including the border row/column.
    pub fn size(&self) -> usize {
        self.core_size() + usize::from(self.border.is_some())
    }

    fn block_index(&self, i: usize, offset: isize) -> usize {
        assert!(offset.unsigned_abs() <= HALF_WIDTH, "offset out of band");
        let diag = (offset + HALF_WIDTH as isize) as usize;
        (i * DIAGONALS + diag) * self.block_dim * self.block_dim
    }

    /// Row-major `d×d` block coupling block row `i` to block column `i + offset`.
    pub fn block(&self, i: usize, offset: isize) -> &[T] {
        let s = self.block_index(i, offset);
        &self.blocks[s..s + self.block_dim * self.block_dim]
    }

    pub fn block_mut(&mut self, i: usize, offset: isize) -> &mut [T] {
        let s = self.block_index(i, offset);
        let len = self.block_dim * self.block_dim;
        &mut self.blocks[s..s + len]
    }

    pub fn border(&self) -> Option<&Border<T>> {
        self.border.as_ref()
    }

    pub fn set_border(&mut self, column: Vec<T>, corner: T) -> Result<()> {
        if column.len() != self.core_size() {
            return Err(ChenError::DimensionMismatch {
                expected: self.core_size(),
                got: column.len(),
            });
        }
        self.border = Some(Border { column, corner });
        Ok(())
    }

    pub fn without_border(&self) -> Self {
        CyclicBlockBanded {
            border: None,
            ..self.clone()
        }
    }

    /// Iterates `(row, col, value)` over stored core entries (wrapped columns).
    /// Calls `f(row, col, value)` for every stored core entry, cyclic
    /// column indices wrapped.
    fn for_each_core_entry(&self, mut f: impl FnMut(usize, usize, T)) {
        let d = self.block_dim;
        let nb = self.n_blocks as isize;
        let hw = HALF_WIDTH as isize;
        for i in 0..self.n_blocks {
            for m in -hw..=hw {
                let j = (i as isize + m).rem_euclid(nb) as usize;
                let blk = self.block(i, m);
                for r in 0..d {
                    for c in 0..d {
                        f(i * d + r, j * d + c, blk[r * d + c]);
                    }
                }
            }
        }
    }

    /// Matrix-vector product over the full (bordered) matrix.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.size(), "vector length must match matrix size");
        let n = self.core_size();
        let mut y = vec![T::zero(); self.size()];
        self.for_each_core_entry(|r, c, v| y[r] += v * x[c]);
        if let Some(b) = &self.border {
            let last = x[n];
            for (yr, &cr) in y.iter_mut().zip(&b.column) {
                *yr += cr * last;
            }
            y[n] = b.corner * last;
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut dense = DenseMatrix::zeros(self.size());
        self.for_each_core_entry(|r, c, v| *dense.get_mut(r, c) += v);
        if let Some(b) = &self.border {
            let n = self.core_size();
            for (r, &v) in b.column.iter().enumerate() {
                *dense.get_mut(r, n) = v;
            }
            *dense.get_mut(n, n) = b.corner;
        }
        dense
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.core_size();
        let mut rows = vec![0.0; self.size()];
        self.for_each_core_entry(|r, _, v| rows[r] += v.modulus());
        if let Some(b) = &self.border {
            for (row, v) in rows.iter_mut().zip(&b.column) {
                *row += v.modulus();
            }
            rows[n] = b.corner.modulus();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Number of structurally nonzero entries (value ≠ 0) in scalar row `r`.
    pub fn row_nonzeros(&self, r: usize) -> usize {
        let mut count = 0;
        self.for_each_core_entry(|row, _, v| {
            if row == r && v != T::zero() {
                count += 1;
            }
        });
        if let Some(b) = &self.border {
            if r < self.core_size() && b.column[r] != T::zero() {
                count += 1;
            }
        }
        count
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CyclicBlockBanded<U> {
        CyclicBlockBanded {
            n_blocks: self.n_blocks,
            block_dim: self.block_dim,
            blocks: self.blocks.iter().map(|&v| f(v)).collect(),
            border: self.border.as_ref().map(|b| Border {
                column: b.column.iter().map(|&v| f(v)).collect(),
                corner: f(b.corner),
            }),
        }
    }

    /// `scale · M + shift · I` (the identity includes the border corner).
    pub fn scale_shift(&self, scale: T, shift: T) -> Self {
        let mut out = self.map(|v| v * scale);
        let d = self.block_dim;
        for i in 0..self.n_blocks {
            let b = out.block_mut(i, 0);
            for r in 0..d {
                b[r * d + r] += shift;
            }
        }
        if let Some(b) = &mut out.border {
            b.corner += shift;
        }
        out
    }

    /// Entrywise sum; a missing border counts as zero.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n_blocks != other.n_blocks || self.block_dim != other.block_dim {
            return Err(ChenError::DimensionMismatch {
                expected: self.core_size(),
                got: other.core_size(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(&a, &b)| a + b)
            .collect();
        let border = match (&self.border, &other.border) {
            (None, None) => None,
            (Some(b), None) | (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => Some(Border {
                column: a.column.iter().zip(&b.column).map(|(&x, &y)| x + y).collect(),
                corner: a.corner + b.corner,
            }),
        };
        Ok(CyclicBlockBanded {
            n_blocks: self.n_blocks,
            block_dim: self.block_dim,
            blocks,
            border,
        })
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(ChenError::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.n + c]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().map(|v| v.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Dense LU with partial pivoting, `PA = LU` stored in place.
#[derive(Debug, Clone)]
struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    /// `tiny` is the absolute pivot threshold; pivot failures report
    /// `pivot_base + column`.
    fn factor(n: usize, mut lu: Vec<T>, tiny: f64, pivot_base: usize) -> Result<Self> {
        let mut piv = vec![0; n];
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, lu[r * n + k].modulus()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if !(best > tiny) {
                return Err(ChenError::SolverFailure {
                    pivot: pivot_base + k,
                });
            }
            piv[k] = p;
            // Multipliers left of column k stay with their rows, matching the
            // interleaved row exchanges in `solve_in_place`.
            if p != k {
                for c in k..n {
                    lu.swap(k * n + c, p * n + c);
                }
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let m = lu[r * n + k] / pivot;
                lu[r * n + k] = m;
                if m != T::zero() {
                    for c in k + 1..n {
                        let u = lu[k * n + c];
                        lu[r * n + c] -= m * u;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, piv })
    }

    fn solve_in_place(&self, x: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for r in k + 1..n {
                x[r] -= self.lu[r * n + k] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= self.lu[k * n + c] * x[c];
            }
            x[k] = acc / self.lu[k * n + k];
        }
    }
}

/// Partial-pivoting Gaussian elimination on a dense matrix. Test oracle and
/// small-system path; refuses `n > 512`.
pub fn dense_oracle_solve<T: Scalar>(matrix: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    let n = matrix.size();
    if n > DENSE_ORACLE_MAX {
        return Err(ChenError::TooLargeForDense(n));
    }
    if rhs.len() != n {
        return Err(ChenError::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let lu = DenseLu::factor(n, matrix.data.clone(), 0.0, 0)?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// Order `0, n−1, 1, n−2, …`. Cyclic neighbours within distance `p` end up
/// within distance `2p`, so the cyclic band becomes an ordinary band.
fn interleaved_order(n: usize) -> Vec<usize> {
    (0..n)
        .map(|k| if k % 2 == 0 { k / 2 } else { n - 1 - k / 2 })
        .collect()
}

/// Band LU with partial pivoting of the interleaved matrix.
#[derive(Debug, Clone)]
struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// `order[k]` is the original index at position `k`.
    order: Vec<usize>,
    /// Row windows `[i − kl, i + kl + ku]`; holds `U` after factorisation.
    band: Vec<T>,
    lower: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (2 * self.kl + self.ku + 1) + (j + self.kl - i)
    }

    fn factor(m: &CyclicBlockBanded<T>, tiny: f64) -> Result<Self> {
        let n = m.core_size();
        let order = interleaved_order(n);
        let mut pos = vec![0; n];
        for (k, &o) in order.iter().enumerate() {
            pos[o] = k;
        }
        let (mut kl, mut ku) = (0, 0);
        m.for_each_core_entry(|r, c, _| {
            let (i, j) = (pos[r], pos[c]);
            kl = kl.max(i.saturating_sub(j));
            ku = ku.max(j.saturating_sub(i));
        });
        let width = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            order,
            band: vec![T::zero(); n * width],
            lower: vec![T::zero(); n * kl],
            piv: vec![0; n],
        };
        let width = lu.band.len() / n;
        m.for_each_core_entry(|r, c, v| {
            let (i, j) = (pos[r], pos[c]);
            lu.band[i * width + (j + kl - i)] += v;
        });

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let (prow, best) = (k..=last_row)
                .map(|i| (i, lu.band[lu.at(i, k)].modulus()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if !(best > tiny) {
                return Err(ChenError::SolverFailure { pivot: k });
            }
            lu.piv[k] = prow;
            if prow != k {
                for j in k..=last_col {
                    let (a, b) = (lu.at(k, j), lu.at(prow, j));
                    lu.band.swap(a, b);
                }
            }
            let pivot = lu.band[lu.at(k, k)];
            for i in k + 1..=last_row {
                let ik = lu.at(i, k);
                let mult = lu.band[ik] / pivot;
                lu.lower[k * kl + (i - k - 1)] = mult;
                lu.band[ik] = T::zero();
                if mult == T::zero() {
                    continue;
                }
                // Rows are contiguous in j, and row k precedes row i.
                let len = last_col - k;
                let (kj, ij) = (lu.at(k, k + 1), lu.at(i, k + 1));
                let (upper, lower) = lu.band.split_at_mut(ij);
                for (a, &u) in lower[..len].iter_mut().zip(&upper[kj..kj + len]) {
                    *a -= mult * u;
                }
            }
        }
        Ok(lu)
    }

    fn solve(&self, rhs: &[T]) -> Vec<T> {
        let (n, kl) = (self.n, self.kl);
        let mut y: Vec<T> = self.order.iter().map(|&o| rhs[o]).collect();
        for k in 0..n {
            y.swap(k, self.piv[k]);
            let yk = y[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                y[i] -= self.lower[k * kl + (i - k - 1)] * yk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            let end = (i + kl + self.ku).min(n - 1);
            let row = &self.band[self.at(i, i + 1).min(self.band.len())..];
            for (&u, &yj) in row.iter().zip(&y[i + 1..=end]) {
                acc -= u * yj;
            }
            y[i] = acc / self.band[self.at(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for (k, &o) in self.order.iter().enumerate() {
            x[o] = y[k];
        }
        x
    }
}

#[derive(Debug, Clone)]
enum FactorKind<T> {
    Banded(BandLu<T>),
    Dense(DenseLu<T>),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Use dense elimination when the core size is below this.
    pub dense_below: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dense_below: 64 }
    }
}

/// A solution and its relative residual
/// `‖Mx − b‖∞ / (‖M‖∞‖x‖∞ + ‖b‖∞)`.
#[derive(Debug, Clone)]
pub struct Solved<T> {
    pub x: Vec<T>,
    pub residual_ratio: f64,
}

/// Immutable factorisation; `solve` may be called concurrently.
#[derive(Debug, Clone)]
pub struct Factorization<T> {
    kind: FactorKind<T>,
    matrix: CyclicBlockBanded<T>,
    norm: f64,
}

impl<T: Scalar> Factorization<T> {
    pub fn new(matrix: &CyclicBlockBanded<T>, options: SolverOptions) -> Result<Self> {
        let norm = matrix.norm_inf();
        let tiny = PIVOT_TOL * norm;
        let core = matrix.without_border();
        let n = core.core_size();
        let kind = if n < options.dense_below {
            let dense = core.to_dense();
            FactorKind::Dense(DenseLu::factor(n, dense.data, tiny, 0)?)
        } else {
            FactorKind::Banded(BandLu::factor(&core, tiny)?)
        };
        if let Some(b) = matrix.border() {
            if !(b.corner.modulus() > tiny) {
                return Err(ChenError::SolverFailure { pivot: n });
            }
        }
        Ok(Factorization {
            kind,
            matrix: matrix.clone(),
            norm,
        })
    }

    fn raw_solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.matrix.core_size();
        let mut core_rhs = rhs[..n].to_vec();
        let last = self.matrix.border().map(|b| {
            let last = rhs[n] / b.corner;
            for (r, &c) in core_rhs.iter_mut().zip(&b.column) {
                *r -= c * last;
            }
            last
        });
        let mut x = match &self.kind {
            FactorKind::Banded(lu) => lu.solve(&core_rhs),
            FactorKind::Dense(lu) => {
                lu.solve_in_place(&mut core_rhs);
                core_rhs
            }
        };
        x.extend(last);
        x
    }

    fn residual(&self, x: &[T], rhs: &[T]) -> (Vec<T>, f64) {
        let mut r = self.matrix.apply(x);
        for (ri, &bi) in r.iter_mut().zip(rhs) {
            *ri -= bi;
        }
        let denom = self.norm * norm_inf(x) + norm_inf(rhs);
        let ratio = if denom > 0.0 { norm_inf(&r) / denom } else { 0.0 };
        (r, ratio)
    }

    /// Solves `M x = rhs`, with one step of iterative refinement if the
    /// residual contract is not met on the first pass.
    pub fn solve(&self, rhs: &[T]) -> Result<Solved<T>> {
        if rhs.len() != self.matrix.size() {
            return Err(ChenError::DimensionMismatch {
                expected: self.matrix.size(),
                got: rhs.len(),
            });
        }
        let mut x = self.raw_solve(rhs);
        let (r, mut ratio) = self.residual(&x, rhs);
        if !(ratio <= RESIDUAL_TOL) {
            let correction = self.raw_solve(&r);
            for (xi, ci) in x.iter_mut().zip(correction) {
                *xi -= ci;
            }
            ratio = self.residual(&x, rhs).1;
        }
        if !(ratio <= RESIDUAL_TOL) {
            return Err(ChenError::ResidualTooLarge {
                ratio,
                tolerance: RESIDUAL_TOL,
            });
        }
        Ok(Solved {
            x,
            residual_ratio: ratio,
        })
    }
}

/// Factor and solve in one go with default options.
pub fn solve<T: Scalar>(matrix: &CyclicBlockBanded<T>, rhs: &[T]) -> Result<Solved<T>> {
    Factorization::new(matrix, SolverOptions::default())?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    const BANDED: SolverOptions = SolverOptions { dense_below: 0 };

    fn random_matrix(rng: &mut StdRng, n: usize, d: usize, shift: f64) -> CyclicBlockBanded<f64> {
        let mut m = CyclicBlockBanded::zeros(n, d).unwrap();
        for i in 0..n {
            for off in -2..=2isize {
                for v in m.block_mut(i, off) {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
        }
        m.scale_shift(1.0, shift)
    }

    fn rel_err<T: Scalar>(a: &[T], b: &[T]) -> f64 {
        let diff: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        norm_inf(&diff) / norm_inf(b).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn identity_returns_rhs() {
        let m = CyclicBlockBanded::<f64>::identity(7, 2).unwrap();
        let rhs: Vec<f64> = (0..14).map(|i| i as f64 - 3.5).collect();
        for opts in [BANDED, SolverOptions::default()] {
            let s = Factorization::new(&m, opts).unwrap().solve(&rhs).unwrap();
            assert_eq!(s.x, rhs);
        }
    }

    #[test]
    fn scalar_cyclic_system_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        // 8×8 cyclic tridiagonal inside the pentadiagonal storage.
        let mut m = CyclicBlockBanded::<f64>::zeros(8, 1).unwrap();
        for i in 0..8 {
            m.block_mut(i, -1)[0] = rng.gen_range(-1.0..1.0);
            m.block_mut(i, 0)[0] = 4.0 + rng.gen_range(-1.0..1.0);
            m.block_mut(i, 1)[0] = rng.gen_range(-1.0..1.0);
        }
        let rhs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = dense_oracle_solve(&m.to_dense(), &rhs).unwrap();
        let banded = Factorization::new(&m, BANDED).unwrap().solve(&rhs).unwrap();
        assert!(rel_err(&banded.x, &oracle) < 1e-11);
    }

    #[test]
    fn complex_shift_of_zero_operator() {
        let zero = CyclicBlockBanded::<f64>::zeros(6, 2).unwrap();
        let m = zero
            .map(Complex64::from_real)
            .scale_shift(Complex64::new(0.5, 0.0), Complex64::new(-1.0, -1.0));
        let w: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let rhs: Vec<Complex64> = w.iter().map(|&v| Complex64::new(0.0, v)).collect();
        let x = Factorization::new(&m, BANDED).unwrap().solve(&rhs).unwrap().x;
        for (xi, wi) in x.iter().zip(&w) {
            let expect = Complex64::new(-0.5, -0.5) * wi;
            assert!((xi - expect).norm() < 1e-15);
            assert!((-2.0 * xi.re - wi).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_oracle_small_cases() {
        let one = DenseMatrix::from_rows(1, vec![2.0]).unwrap();
        assert_eq!(dense_oracle_solve(&one, &[4.0]).unwrap(), vec![2.0]);
        let singular = DenseMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            dense_oracle_solve(&singular, &[1.0, 1.0]),
            Err(ChenError::SolverFailure { pivot: 1 })
        ));
        let big = DenseMatrix::<f64>::zeros(513);
        assert!(matches!(
            dense_oracle_solve(&big, &vec![0.0; 513]),
            Err(ChenError::TooLargeForDense(513))
        ));
    }

    #[test]
    fn hilbert_inverse() {
        let n = 4;
        let h: Vec<f64> = (0..n * n)
            .map(|k| 1.0 / ((k / n + k % n + 1) as f64))
            .collect();
        let h = DenseMatrix::from_rows(n, h).unwrap();
        // Classical closed-form inverse of the 4×4 Hilbert matrix.
        let inv = [
            [16.0, -120.0, 240.0, -140.0],
            [-120.0, 1200.0, -2700.0, 1680.0],
            [240.0, -2700.0, 6480.0, -4200.0],
            [-140.0, 1680.0, -4200.0, 2800.0],
        ];
        for c in 0..n {
            let e: Vec<f64> = (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect();
            let col = dense_oracle_solve(&h, &e).unwrap();
            for r in 0..n {
                assert!((col[r] - inv[r][c]).abs() <= 1e-8 * inv[r][c].abs());
            }
            let back = h.mul_vec(&col);
            assert!(rel_err(&back, &e) < 1e-10);
        }
    }

    #[test]
    fn dense_oracle_complex_residual() {
        let mut rng = StdRng::seed_from_u64(3);
        let n = 16;
        let data: Vec<Complex64> = (0..n * n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let m = DenseMatrix::from_rows(n, data).unwrap();
        let b: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x = dense_oracle_solve(&m, &b).unwrap();
        let r: Vec<Complex64> = m.mul_vec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&r) <= 1e-11 * (m.norm_inf() * norm_inf(&x) + norm_inf(&b)));
    }

    #[test]
    fn banded_matches_oracle_across_shapes() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in 5..=16 {
            for d in 1..=3 {
                let m = random_matrix(&mut rng, n, d, 3.0);
                let rhs: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let oracle = dense_oracle_solve(&m.to_dense(), &rhs).unwrap();
                let got = Factorization::new(&m, BANDED).unwrap().solve(&rhs).unwrap();
                assert!(rel_err(&got.x, &oracle) < 1e-9, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Zero diagonal everywhere: the first pivot needs a row exchange.
        for n in [9, 10, 13] {
            let mut m = CyclicBlockBanded::<f64>::zeros(n, 1).unwrap();
            for i in 0..n {
                m.block_mut(i, 1)[0] = 1.0;
                m.block_mut(i, -2)[0] = 0.25;
            }
            let y: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
            let rhs = m.apply(&y);
            let got = Factorization::new(&m, BANDED).unwrap().solve(&rhs).unwrap();
            assert!(rel_err(&got.x, &y) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn interleaving_keeps_band_narrow() {
        for n in [5, 6, 7, 40, 41] {
            let order = interleaved_order(n);
            let mut pos = vec![0; n];
            for (k, &o) in order.iter().enumerate() {
                pos[o] = k;
            }
            for i in 0..n {
                for off in 1..=3 {
                    let j = (i + off) % n;
                    assert!(pos[i].abs_diff(pos[j]) <= 2 * off, "n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn bordered_system() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut m = random_matrix(&mut rng, 10, 2, 4.0);
        let col: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        m.set_border(col, 2.0).unwrap();
        let y: Vec<f64> = (0..21).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs = m.apply(&y);
        let got = Factorization::new(&m, BANDED).unwrap().solve(&rhs).unwrap();
        assert!(rel_err(&got.x, &y) < 1e-12);
        let oracle = dense_oracle_solve(&m.to_dense(), &rhs).unwrap();
        assert!(rel_err(&got.x, &oracle) < 1e-12);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let m = CyclicBlockBanded::<f64>::zeros(8, 2).unwrap();
        assert!(matches!(
            Factorization::new(&m, BANDED),
            Err(ChenError::SolverFailure { .. })
        ));
    }

    #[test]
    fn complex_solve_of_real_system_is_real() {
        let mut rng = StdRng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 12, 2, 3.0);
        let rhs: Vec<f64> = (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mc = m.map(Complex64::from_real);
        let rc: Vec<Complex64> = rhs.iter().map(|&v| Complex64::from_real(v)).collect();
        let x = Factorization::new(&mc, BANDED).unwrap().solve(&rc).unwrap().x;
        let max_im = x.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im <= 1e-12 * norm_inf(&x));
    }

    #[test]
    fn large_system_solves_in_linear_storage() {
        let mut rng = StdRng::seed_from_u64(13);
        let m = random_matrix(&mut rng, 2048, 2, 6.0);
        let y: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs = m.apply(&y);
        let got = solve(&m, &rhs).unwrap();
        assert!(rel_err(&got.x, &y) < 1e-10);
        assert!(got.residual_ratio <= RESIDUAL_TOL);
    }

    #[test]
    fn dense_and_banded_storage_agree() {
        let mut rng = StdRng::seed_from_u64(17);
        let m = random_matrix(&mut rng, 6, 3, 0.0);
        let x: Vec<f64> = (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = m.apply(&x);
        let b = m.to_dense().mul_vec(&x);
        assert!(rel_err(&a, &b) < 1e-15);
        assert!((m.norm_inf() - m.to_dense().norm_inf()).abs() < 1e-12);
    }
}
