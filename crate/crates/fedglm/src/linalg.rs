//! Dense QR machinery: Householder block decomposition, Givens row updates,
//! factor stacking/merging and triangular solves.
//!
//! All factors produced here follow a fixed sign convention (nonnegative
//! diagonal), which makes the thin R factor of a full-rank matrix unique and
//! lets independently computed factors be compared entrywise.

use crate::error::{Error, Result};

/// Relative rank tolerance: a diagonal entry of R below
/// `RANK_TOL_REL * max |r_jj|` is treated as a rank deficiency.
pub const RANK_TOL_REL: f64 = 1e-10;

/// Dense row-major matrix of finite f64 values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stacks `[self; other]` vertically.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot stack {} columns over {}",
                other.cols, self.cols
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        DenseMatrix::new(self.rows + other.rows, self.cols, values)
    }

    /// `[self | extra]` with one extra column.
    pub fn hstack_col(&self, col: &[f64]) -> Result<DenseMatrix> {
        if col.len() != self.rows {
            return Err(Error::Shape(format!(
                "column of length {} against {} rows",
                col.len(),
                self.rows
            )));
        }
        let mut values = Vec::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            values.extend_from_slice(self.row(i));
            values.push(col[i]);
        }
        DenseMatrix::new(self.rows, self.cols + 1, values)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.values[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// XᵀX without forming the transpose.
    pub fn gram(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for j in 0..self.cols {
                for k in j..self.cols {
                    out.values[j * self.cols + k] += r[j] * r[k];
                }
            }
        }
        for j in 0..self.cols {
            for k in 0..j {
                out.values[j * self.cols + k] = out.values[k * self.cols + j];
            }
        }
        out
    }
}

/// Packed upper triangle of the augmented (p+1)x(p+1) factor `[R θ; 0 √RSS]`.
///
/// This is the only object exchanged between nodes: the leading p x p block is
/// R, column p holds θ, and the bottom-right entry is the square root of the
/// residual sum of squares. Packing stores the triangle row-major and makes
/// triangularity structural.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularFactor {
    p: usize,
    packed: Vec<f64>,
}

impl TriangularFactor {
    /// Zero factor for `p` predictor columns (the starting point of a stream).
    pub fn zero(p: usize) -> Self {
        let dim = p + 1;
        Self {
            p,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn from_packed(p: usize, packed: Vec<f64>) -> Result<Self> {
        let dim = p + 1;
        if packed.len() != dim * (dim + 1) / 2 {
            return Err(Error::Shape(format!(
                "packed triangle for p={} needs {} values, got {}",
                p,
                dim * (dim + 1) / 2,
                packed.len()
            )));
        }
        if packed.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("factor entries must be finite".into()));
        }
        Ok(Self { p, packed })
    }

    /// Predictor-column count; the full factor is (p+1)x(p+1).
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.p + 1
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j >= i);
        let dim = self.dim();
        i * (2 * dim - i + 1) / 2 + (j - i)
    }

    /// Entry (i, j) of the implied full matrix; zero below the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.packed[self.idx(i, j)]
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.packed[k] = v;
    }

    /// √RSS, the bottom-right entry.
    pub fn sqrt_rss(&self) -> f64 {
        self.get(self.p, self.p)
    }

    /// θ = QᵀY, the first p entries of the last column.
    pub fn theta(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, self.p)).collect()
    }

    /// Expands to the full (p+1)x(p+1) dense matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let dim = self.dim();
        let mut m = DenseMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    /// Max |r_jj| over the leading p x p block times [`RANK_TOL_REL`].
    pub fn rank_tol(&self) -> f64 {
        let mut maxd: f64 = 0.0;
        for j in 0..self.p {
            maxd = maxd.max(self.get(j, j).abs());
        }
        RANK_TOL_REL * maxd
    }
}

/// In-place Householder triangularization of a row-major n x m buffer
/// (n >= m). When `reflectors` is given the elementary reflectors are pushed
/// onto it so the caller can accumulate Q.
fn householder_triangularize(
    values: &mut [f64],
    n: usize,
    m: usize,
    mut reflectors: Option<&mut Vec<Vec<f64>>>,
) {
    for k in 0..m {
        let mut norm2 = 0.0;
        for i in k..n {
            let x = values[i * m + k];
            norm2 += x * x;
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            if let Some(refs) = reflectors.as_deref_mut() {
                refs.push(Vec::new());
            }
            continue;
        }
        let x0 = values[k * m + k];
        // v = x + sign(x0)·‖x‖·e1 avoids cancellation
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| values[i * m + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..m {
                let mut dot = 0.0;
                for (t, vi) in v.iter().enumerate() {
                    dot += vi * values[(k + t) * m + j];
                }
                let scale = 2.0 * dot / vnorm2;
                for (t, vi) in v.iter().enumerate() {
                    values[(k + t) * m + j] -= scale * vi;
                }
            }
        }
        values[k * m + k] = alpha;
        for i in (k + 1)..n {
            values[i * m + k] = 0.0;
        }
        if let Some(refs) = reflectors.as_deref_mut() {
            if vnorm2 > 0.0 {
                let inv = 1.0 / vnorm2.sqrt();
                for vi in v.iter_mut() {
                    *vi *= inv;
                }
                refs.push(v);
            } else {
                refs.push(Vec::new());
            }
        }
    }
}

/// Full QR of a tall matrix by Householder reflections.
///
/// Returns the thin factorization: Q is n x m with orthonormal columns, R is
/// m x m upper triangular with nonnegative diagonal. Deterministic for
/// identical input bytes.
pub fn householder_qr(a: &DenseMatrix) -> Result<QrResult> {
    let (n, m) = (a.rows(), a.cols());
    if n < m {
        return Err(Error::Shape(format!(
            "QR needs rows >= cols, got {}x{}",
            n, m
        )));
    }
    let mut r = a.values().to_vec();
    let mut reflectors = Vec::with_capacity(m);
    householder_triangularize(&mut r, n, m, Some(&mut reflectors));

    // Q = H_0 ... H_{m-1} applied to the first m columns of the identity.
    let mut q = DenseMatrix::zeros(n, m);
    for j in 0..m {
        q.set(j, j, 1.0);
    }
    for k in (0..m).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        for j in 0..m {
            let mut dot = 0.0;
            for (t, vi) in v.iter().enumerate() {
                dot += vi * q.get(k + t, j);
            }
            let scale = 2.0 * dot;
            for (t, vi) in v.iter().enumerate() {
                let cur = q.get(k + t, j);
                q.set(k + t, j, cur - scale * vi);
            }
        }
    }

    // sign convention: nonnegative diagonal of R
    let mut r_mat = DenseMatrix::new(m, m, r[..m * m].to_vec())?;
    for j in 0..m {
        if r_mat.get(j, j) < 0.0 {
            for c in j..m {
                let v = r_mat.get(j, c);
                r_mat.set(j, c, -v);
            }
            for i in 0..n {
                let v = q.get(i, j);
                q.set(i, j, -v);
            }
        }
    }
    Ok(QrResult { q, r: r_mat })
}

/// Thin QR result: `q` has orthonormal columns, `r` is upper triangular with
/// nonnegative diagonal and `q * r` reconstructs the input.
#[derive(Debug, Clone)]
pub struct QrResult {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

/// The R factor of the augmented matrix `[X Y]`, with Q discarded.
///
/// The last column of `a` is the response; the result packs R, θ and √RSS
/// into a [`TriangularFactor`]. Satisfies the Gram identity RᵀR = AᵀA.
pub fn thin_r(a: &DenseMatrix) -> Result<TriangularFactor> {
    let (n, m) = (a.rows(), a.cols());
    if n < m {
        return Err(Error::Shape(format!(
            "thin R needs rows >= cols, got {}x{}",
            n, m
        )));
    }
    if m < 1 {
        return Err(Error::EmptyInput("matrix needs at least one column".into()));
    }
    let mut buf = a.values().to_vec();
    householder_triangularize(&mut buf, n, m, None);
    pack_with_sign_fix(&buf, m)
}

/// Packs the leading m x m triangle of a row-major buffer, flipping row signs
/// to the nonnegative-diagonal convention.
fn pack_with_sign_fix(buf: &[f64], m: usize) -> Result<TriangularFactor> {
    let p = m - 1;
    let mut f = TriangularFactor::zero(p);
    for i in 0..m {
        let flip = buf[i * m + i] < 0.0;
        for j in i..m {
            let v = buf[i * m + j];
            f.set(i, j, if flip { -v } else { v });
        }
    }
    // -0.0 on the diagonal is normalized by the flip above only when negative;
    // √RSS must be >= 0 either way
    Ok(f)
}

/// Folds one observation row `[x | y]` into a factor by Givens rotations,
/// O(p²) per row. Equivalent to re-triangularizing the stacked matrix.
pub fn append_row(f: &TriangularFactor, row: &[f64]) -> Result<TriangularFactor> {
    let dim = f.dim();
    if row.len() != dim {
        return Err(Error::Shape(format!(
            "row of length {} against factor dim {}",
            row.len(),
            dim
        )));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("row entries must be finite".into()));
    }
    let mut out = f.clone();
    let mut work = row.to_vec();
    for j in 0..dim {
        let b = work[j];
        if b == 0.0 {
            continue;
        }
        let a = out.get(j, j);
        let r = a.hypot(b);
        let c = a / r;
        let s = b / r;
        for k in j..dim {
            let t1 = out.get(j, k);
            let t2 = work[k];
            out.set(j, k, c * t1 + s * t2);
            work[k] = -s * t1 + c * t2;
        }
        // hypot is nonnegative, so the sign convention is preserved
        out.set(j, j, r);
    }
    Ok(out)
}

/// Re-triangularizes the vertical stack of factors into one factor.
///
/// The result preserves the summed Gram matrix Σᵢ fᵢᵀfᵢ, which is what makes
/// the distributed fit agree with the centralized one. A single factor merges
/// to itself, bit for bit.
pub fn merge_factors(factors: &[TriangularFactor]) -> Result<TriangularFactor> {
    let first = factors
        .first()
        .ok_or_else(|| Error::EmptyInput("merge of no factors".into()))?;
    let p = first.p();
    if factors.iter().any(|f| f.p() != p) {
        return Err(Error::Shape("factors with mixed p cannot be merged".into()));
    }
    if factors.len() == 1 {
        return Ok(first.clone());
    }
    let dim = p + 1;
    let n = factors.len() * dim;
    let mut buf = vec![0.0; n * dim];
    for (b, f) in factors.iter().enumerate() {
        for i in 0..dim {
            for j in i..dim {
                buf[(b * dim + i) * dim + j] = f.get(i, j);
            }
        }
    }
    householder_triangularize(&mut buf, n, dim, None);
    pack_with_sign_fix(&buf, dim)
}

/// Back-substitution on the leading p x p block: solves R·x = theta.
///
/// Fails with the first rank-deficient column when any |r_jj| falls below the
/// factor's rank tolerance.
pub fn back_substitute(f: &TriangularFactor, theta: &[f64]) -> Result<Vec<f64>> {
    let p = f.p();
    if theta.len() != p {
        return Err(Error::Shape(format!(
            "theta of length {} against p = {}",
            theta.len(),
            p
        )));
    }
    let tol = f.rank_tol();
    for j in 0..p {
        if f.get(j, j).abs() <= tol {
            return Err(Error::SingularDesign(j));
        }
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = theta[i];
        for j in (i + 1)..p {
            acc -= f.get(i, j) * x[j];
        }
        x[i] = acc / f.get(i, i);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha12Rng, n: usize, m: usize) -> DenseMatrix {
        let values: Vec<f64> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
        DenseMatrix::new(n, m, values).unwrap()
    }

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn qr_identity() {
        let a = DenseMatrix::identity(2);
        let qr = householder_qr(&a).unwrap();
        assert_eq!(max_abs_diff(&qr.q, &a), 0.0);
        assert_eq!(max_abs_diff(&qr.r, &a), 0.0);
    }

    #[test]
    fn qr_345_column() {
        let a = DenseMatrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let qr = householder_qr(&a).unwrap();
        assert!((qr.r.get(0, 0) - 5.0).abs() < 1e-14);
        assert!((qr.q.get(0, 0) - 0.6).abs() < 1e-14);
        assert!((qr.q.get(1, 0) - 0.8).abs() < 1e-14);
    }

    // the Appendix-A witness pair: both matrices share the same R
    #[test]
    fn qr_privacy_witness() {
        let x2 = DenseMatrix::new(2, 2, vec![0.0, -1.0, 1.0, 2.0]).unwrap();
        let qr = householder_qr(&x2).unwrap();
        let r_expect = [[1.0, 2.0], [0.0, 1.0]];
        let q_expect = [[0.0, -1.0], [1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((qr.r.get(i, j) - r_expect[i][j]).abs() < 1e-15);
                assert!((qr.q.get(i, j) - q_expect[i][j]).abs() < 1e-15);
            }
        }
        let x1 = DenseMatrix::new(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        let f1 = thin_r(&x1).unwrap();
        let f2 = thin_r(&x2).unwrap();
        for i in 0..2 {
            for j in i..2 {
                assert!((f1.get(i, j) - r_expect[i][j]).abs() < 1e-15);
                assert!((f2.get(i, j) - r_expect[i][j]).abs() < 1e-15);
            }
        }
        assert_ne!(x1, x2);
    }

    #[test]
    fn qr_shape_error() {
        let a = DenseMatrix::zeros(1, 2);
        assert!(matches!(householder_qr(&a), Err(Error::Shape(_))));
        assert!(matches!(thin_r(&a), Err(Error::Shape(_))));
    }

    #[test]
    fn qr_orthogonality_and_reconstruction() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(3..40);
            let m = rng.gen_range(1..=n.min(6));
            let a = random_matrix(&mut rng, n, m);
            let qr = householder_qr(&a).unwrap();
            let qtq = qr.q.gram();
            let eye = DenseMatrix::identity(m);
            assert!(max_abs_diff(&qtq, &eye) <= 1e-12);
            let recon = qr.q.matmul(&qr.r).unwrap();
            let num: f64 = recon
                .values()
                .iter()
                .zip(a.values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let den: f64 = a.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(num / den <= 1e-12);
            for j in 0..m {
                assert!(qr.r.get(j, j) >= 0.0);
            }
        }
    }

    #[test]
    fn thin_r_of_triangular_input_is_identity() {
        let a = DenseMatrix::new(3, 3, vec![2.0, 1.0, 3.0, 0.0, 1.5, -1.0, 0.0, 0.0, 0.5]).unwrap();
        let f = thin_r(&a).unwrap();
        for i in 0..3 {
            for j in i..3 {
                assert!((f.get(i, j) - a.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn thin_r_exact_fit_zero_rss() {
        // Y = 1 + 2x exactly
        let a = DenseMatrix::new(
            3,
            3,
            vec![1.0, 0.0, 1.0, 1.0, 1.0, 3.0, 1.0, 2.0, 5.0],
        )
        .unwrap();
        let f = thin_r(&a).unwrap();
        assert!(f.sqrt_rss().abs() < 1e-14);
    }

    #[test]
    fn thin_r_gram_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 50, 4);
        let f = thin_r(&a).unwrap();
        let g1 = f.to_dense().gram();
        let g2 = a.gram();
        let scale: f64 = g2.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max_abs_diff(&g1, &g2) / scale <= 1e-10);
    }

    #[test]
    fn append_zero_row_is_noop() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 10, 3);
        let f = thin_r(&a).unwrap();
        let g = append_row(&f, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.packed(), g.packed());
    }

    #[test]
    fn append_row_matches_batch() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 20, 4);
        let head = DenseMatrix::new(19, 4, a.values()[..19 * 4].to_vec()).unwrap();
        let f = thin_r(&head).unwrap();
        let g = append_row(&f, a.row(19)).unwrap();
        let full = thin_r(&a).unwrap();
        for (x, y) in g.packed().iter().zip(full.packed()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn append_to_empty_factor() {
        let f = TriangularFactor::zero(2);
        let g = append_row(&f, &[-2.0, 1.0, 4.0]).unwrap();
        // single-row QR: |row| normalized into the first row
        assert!((g.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((g.get(0, 1) + 1.0).abs() < 1e-15);
        assert!((g.get(0, 2) + 4.0).abs() < 1e-15);
        for i in 1..3 {
            for j in i..3 {
                assert_eq!(g.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn append_row_shape_error() {
        let f = TriangularFactor::zero(2);
        assert!(matches!(append_row(&f, &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn merge_single_factor_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let f = thin_r(&random_matrix(&mut rng, 8, 3)).unwrap();
        let m = merge_factors(std::slice::from_ref(&f)).unwrap();
        assert_eq!(f.packed(), m.packed());
    }

    #[test]
    fn merge_two_copies_scales_by_sqrt2() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let f = thin_r(&random_matrix(&mut rng, 12, 3)).unwrap();
        let m = merge_factors(&[f.clone(), f.clone()]).unwrap();
        let s = 2.0_f64.sqrt();
        for (x, y) in m.packed().iter().zip(f.packed()) {
            assert!((x - s * y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn merge_matches_centralized() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 30, 4);
        let parts: Vec<TriangularFactor> = (0..3)
            .map(|b| {
                let rows = a.values()[b * 10 * 4..(b + 1) * 10 * 4].to_vec();
                thin_r(&DenseMatrix::new(10, 4, rows).unwrap()).unwrap()
            })
            .collect();
        let merged = merge_factors(&parts).unwrap();
        let central = thin_r(&a).unwrap();
        for (x, y) in merged.packed().iter().zip(central.packed()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn merge_errors() {
        assert!(matches!(merge_factors(&[]), Err(Error::EmptyInput(_))));
        let a = TriangularFactor::zero(2);
        let b = TriangularFactor::zero(3);
        assert!(matches!(merge_factors(&[a, b]), Err(Error::Shape(_))));
    }

    #[test]
    fn merge_permutation_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let factors: Vec<TriangularFactor> = (0..5)
            .map(|_| thin_r(&random_matrix(&mut rng, 15, 3)).unwrap())
            .collect();
        let base = merge_factors(&factors).unwrap();
        let mut perm = factors.clone();
        perm.reverse();
        let other = merge_factors(&perm).unwrap();
        for (x, y) in base.packed().iter().zip(other.packed()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn back_substitute_identity() {
        let mut f = TriangularFactor::zero(2);
        f.set(0, 0, 1.0);
        f.set(1, 1, 1.0);
        f.set(2, 2, 0.0);
        let x = back_substitute(&f, &[7.0, -2.0]).unwrap();
        assert_eq!(x, vec![7.0, -2.0]);
    }

    #[test]
    fn back_substitute_hand_case() {
        let mut f = TriangularFactor::zero(2);
        f.set(0, 0, 2.0);
        f.set(0, 1, 1.0);
        f.set(1, 1, 1.0);
        let x = back_substitute(&f, &[3.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn back_substitute_random_residual() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        // well-conditioned upper triangular from QR of a random matrix
        let a = random_matrix(&mut rng, 20, 7);
        let f = thin_r(&a).unwrap();
        let theta = f.theta();
        let x = back_substitute(&f, &theta).unwrap();
        for i in 0..6 {
            let mut acc = 0.0;
            for j in i..6 {
                acc += f.get(i, j) * x[j];
            }
            assert!((acc - theta[i]).abs() <= 1e-12 * (1.0 + theta[i].abs()));
        }
    }

    #[test]
    fn back_substitute_singular_names_first_column() {
        let mut f = TriangularFactor::zero(3);
        f.set(0, 0, 2.0);
        // column 1 diagonal left at zero
        f.set(2, 2, 1.0);
        match back_substitute(&f, &[1.0, 1.0, 1.0]) {
            Err(Error::SingularDesign(j)) => assert_eq!(j, 1),
            other => panic!("expected SingularDesign, got {:?}", other),
        }
    }
}
