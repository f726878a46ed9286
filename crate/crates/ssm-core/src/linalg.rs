//! Complex linear algebra and randomness primitives.
//!
//! Channel matrices in this simulator never exceed roughly 16x16, so all
//! routines are plain dense O(n^3) implementations with no external solver:
//! a column-pivoted Householder QR drives null-space extraction, and an
//! LL^H Cholesky factorization drives noise whitening.
//!
//! Randomness is addressed by [`RngStream`], a (seed, stream) pair mapped
//! onto independent ChaCha streams. Identical (seed, stream) values always
//! reproduce identical sample sequences, no matter how work is scheduled
//! across threads, which is what makes every experiment byte-reproducible.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default relative tolerance for numerical-rank decisions. Channels are
/// continuous random draws, so exact rank deficiency is measure-zero; this
/// only guards against near-degenerate conditioning.
pub const DEFAULT_NULL_SPACE_TOL: f64 = 1e-10;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    #[serde(rename = "entries")]
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from a row-major entry vector.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        assert!(j < self.cols);
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// New matrix keeping only the listed columns, in the listed order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self::from_fn(self.rows, indices.len(), |i, j| self[(i, indices[j])])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn swap_columns(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Orthonormal basis of the (right) null space, `A T = 0`.
    ///
    /// Computed by column-pivoted Householder QR of `A^H`: the Q columns
    /// beyond the numerical rank span the null space of `A`. The rank
    /// threshold is `tol * ||A||_F`; with the wide matrices used here the
    /// returned `T` satisfies `||A T||_F <= tol * ||A||_F` and `T^H T = I`
    /// to machine precision.
    ///
    /// Returns [`Error::DegenerateRank`] when the rank fills all columns
    /// (square or tall full-rank input), i.e. no null space exists.
    pub fn null_space_basis(&self, tol: f64) -> Result<ComplexMatrix> {
        assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
        let threshold = (tol * self.frobenius_norm()).max(f64::MIN_POSITIVE);

        let mut r = self.conj_transpose();
        let m = r.rows; // = self.cols
        let n = r.cols; // = self.rows
        let mut q = ComplexMatrix::identity(m);

        let trailing_norm_sq = |r: &ComplexMatrix, from: usize, col: usize| -> f64 {
            (from..r.rows).map(|i| r[(i, col)].norm_sqr()).sum()
        };

        let kmax = m.min(n);
        for k in 0..kmax {
            // Greedy column pivot on trailing norms keeps the factorization
            // rank-revealing: small diagonals imply a small trailing block.
            let mut best = k;
            let mut best_norm_sq = trailing_norm_sq(&r, k, k);
            for j in (k + 1)..n {
                let nj = trailing_norm_sq(&r, k, j);
                if nj > best_norm_sq {
                    best = j;
                    best_norm_sq = nj;
                }
            }
            if best != k {
                r.swap_columns(k, best);
            }
            let norm_x = best_norm_sq.sqrt();
            if norm_x <= threshold {
                break;
            }

            let x0 = r[(k, k)];
            let phase = if x0.norm() > 0.0 {
                x0 / x0.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let alpha = -phase * norm_x;
            let mut v: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
            v[0] -= alpha;
            let v_norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if v_norm_sq == 0.0 {
                continue;
            }
            let beta = 2.0 / v_norm_sq;

            // R <- H R on the trailing block.
            for c in k..n {
                let s: Complex64 = (k..m).map(|i| v[i - k].conj() * r[(i, c)]).sum();
                let s = s * beta;
                for i in k..m {
                    let adj = v[i - k] * s;
                    r[(i, c)] -= adj;
                }
            }
            // Q <- Q H accumulates the full unitary factor.
            for row in 0..m {
                let s: Complex64 = (k..m).map(|i| q[(row, i)] * v[i - k]).sum();
                let s = s * beta;
                for i in k..m {
                    let adj = s * v[i - k].conj();
                    q[(row, i)] -= adj;
                }
            }
        }

        let mut rank = 0;
        for k in 0..kmax {
            if r[(k, k)].norm() > threshold {
                rank += 1;
            } else {
                break;
            }
        }
        if rank >= m {
            return Err(Error::DegenerateRank { rank, cols: m });
        }
        Ok(ComplexMatrix::from_fn(m, m - rank, |i, j| q[(i, rank + j)]))
    }

    /// Lower-triangular Cholesky factor `L` with `L L^H = K`.
    ///
    /// Only the lower triangle of the input is read; the caller guarantees
    /// Hermitian symmetry. Fails with [`Error::NotPositiveDefinite`] on the
    /// first non-positive leading minor.
    pub fn cholesky_factor(&self) -> Result<ComplexMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cholesky needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, value: d });
            }
            let dj = d.sqrt();
            l[(j, j)] = Complex64::new(dj, 0.0);
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(l)
    }

    /// Whitening transform `W = L^{-1}` such that `W K W^H = I`.
    pub fn cholesky_whitener(&self) -> Result<ComplexMatrix> {
        let l = self.cholesky_factor()?;
        let n = l.rows;
        let mut w = ComplexMatrix::zeros(n, n);
        for col in 0..n {
            for i in col..n {
                let mut s = if i == col {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for k in col..i {
                    s -= l[(i, k)] * w[(k, col)];
                }
                w[(i, col)] = s / l[(i, i)].re;
            }
        }
        Ok(w)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Address of a deterministic random stream: a base seed plus a stream id.
///
/// Streams map onto ChaCha's independent stream counter, so any number of
/// workers can draw from disjoint streams without coordination and still
/// reproduce the serial run bit for bit. Derive per-task streams with
/// [`RngStream::child`]; the mixing is deterministic and collision-safe for
/// any realistic tag tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn root(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Deterministically derived sub-stream for the given tag.
    pub fn child(&self, tag: u64) -> Self {
        let mixed = splitmix64(splitmix64(self.stream) ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
        Self { seed: self.seed, stream: mixed }
    }

    /// Instantiates the generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Draws `n` i.i.d. circularly-symmetric complex Gaussian samples with the
/// given per-entry variance (real and imaginary parts carry half each).
pub fn sample_cn(rng: &mut impl Rng, n: usize, variance: f64) -> Vec<Complex64> {
    assert!(variance >= 0.0 && variance.is_finite(), "variance must be >= 0");
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("valid std dev");
    (0..n)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cn(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_vec(rows, cols, sample_cn(rng, rows * cols, 1.0))
    }

    #[test]
    fn null_space_of_identity_block_spans_e3() {
        let a = ComplexMatrix::from_rows(&[
            vec![cn(1.0, 0.0), cn(0.0, 0.0), cn(0.0, 0.0)],
            vec![cn(0.0, 0.0), cn(1.0, 0.0), cn(0.0, 0.0)],
        ]);
        let t = a.null_space_basis(DEFAULT_NULL_SPACE_TOL).unwrap();
        assert_eq!((t.rows(), t.cols()), (3, 1));
        // Spans e3 up to a unit phase.
        assert!(t[(0, 0)].norm() < 1e-12);
        assert!(t[(1, 0)].norm() < 1e-12);
        assert!((t[(2, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_residual_random_wide() {
        let mut rng = RngStream::new(7, 0).rng();
        let a = random_matrix(&mut rng, 2, 4);
        let t = a.null_space_basis(DEFAULT_NULL_SPACE_TOL).unwrap();
        assert_eq!((t.rows(), t.cols()), (4, 2));
        let residual = a.mul(&t).frobenius_norm();
        assert!(residual <= 1e-10 * a.frobenius_norm(), "residual {residual}");
        let gram = t.conj_transpose().mul(&t);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - cn(expected, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn null_space_rank_deficient_duplicated_row() {
        let mut rng = RngStream::new(9, 0).rng();
        let row = sample_cn(&mut rng, 4, 1.0);
        let a = ComplexMatrix::from_rows(&[row.clone(), row]);
        let t = a.null_space_basis(DEFAULT_NULL_SPACE_TOL).unwrap();
        assert_eq!((t.rows(), t.cols()), (4, 3));
        assert!(a.mul(&t).frobenius_norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn null_space_full_rank_square_errors() {
        let a = ComplexMatrix::identity(3);
        match a.null_space_basis(DEFAULT_NULL_SPACE_TOL) {
            Err(Error::DegenerateRank { rank, cols }) => {
                assert_eq!((rank, cols), (3, 3));
            }
            other => panic!("expected DegenerateRank, got {other:?}"),
        }
    }

    #[test]
    fn whitener_of_scalar_matrix() {
        let k = ComplexMatrix::identity(2).scale(4.0);
        let w = k.cholesky_whitener().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 0.5 } else { 0.0 };
                assert!((w[(i, j)] - cn(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn whitener_of_identity_is_identity() {
        let w = ComplexMatrix::identity(3).cholesky_whitener().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((w[(i, j)] - cn(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn whitener_reconstructs_rank_one_update() {
        let mut rng = RngStream::new(11, 0).rng();
        let v = sample_cn(&mut rng, 3, 1.0);
        let vm = ComplexMatrix::from_vec(3, 1, v);
        let k = ComplexMatrix::identity(3)
            .scale(0.7)
            .add(&vm.mul(&vm.conj_transpose()).scale(2.5));
        let w = k.cholesky_whitener().unwrap();
        let recon = w.mul(&k).mul(&w.conj_transpose());
        let diff = recon.add(&ComplexMatrix::identity(3).scale(-1.0));
        assert!(diff.frobenius_norm() <= 1e-10 * k.frobenius_norm());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let k = ComplexMatrix::identity(2).scale(-1.0);
        match k.cholesky_factor() {
            Err(Error::NotPositiveDefinite { index: 0, .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn sample_cn_moments() {
        let mut rng = RngStream::new(3, 5).rng();
        let v = sample_cn(&mut rng, 1_000_000, 1.0);
        let mean_power: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64;
        assert!((0.995..=1.005).contains(&mean_power), "power {mean_power}");

        let v2 = sample_cn(&mut rng, 500_000, 2.0);
        let p2: f64 = v2.iter().map(|z| z.norm_sqr()).sum::<f64>() / v2.len() as f64;
        assert!((p2 - 2.0).abs() / 2.0 < 0.01, "power {p2}");
    }

    #[test]
    fn same_stream_reproduces_samples() {
        let s = RngStream::new(42, 17);
        let a = sample_cn(&mut s.rng(), 64, 1.0);
        let b = sample_cn(&mut s.rng(), 64, 1.0);
        assert_eq!(a, b);
        // A different stream id diverges.
        let c = sample_cn(&mut RngStream::new(42, 18).rng(), 64, 1.0);
        assert_ne!(a, c);
    }

    #[test]
    fn child_streams_are_distinct_and_stable() {
        let root = RngStream::root(1);
        assert_eq!(root.child(3), root.child(3));
        assert_ne!(root.child(3), root.child(4));
        assert_ne!(root.child(0), root);
    }
}
