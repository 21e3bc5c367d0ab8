//! Linear-model fitting from triangular factors: coefficient extraction,
//! RSS, standard errors, and a streaming one-row-at-a-time updater.

use crate::error::{Error, Result};
use crate::linalg::{append_row, back_substitute, thin_r, DenseMatrix, TriangularFactor};

/// A fitted model. `std_errors` is populated only when n > p.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub rss: f64,
    pub std_errors: Option<Vec<f64>>,
    pub n: usize,
    pub p: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Diagonal of (RᵀR)⁻¹ via triangular solves on the leading p x p block;
/// the explicit inverse of XᵀX is never formed.
pub fn vcov_diag_unscaled(f: &TriangularFactor) -> Result<Vec<f64>> {
    let p = f.p();
    let mut diag = vec![0.0; p];
    let mut e = vec![0.0; p];
    for j in 0..p {
        e[j] = 1.0;
        let col = back_substitute(f, &e)?; // column j of R⁻¹
        e[j] = 0.0;
        for i in 0..p {
            diag[i] += col[i] * col[i]; // (R⁻¹R⁻ᵀ)_ii = Σ_j (R⁻¹)_ij²
        }
    }
    Ok(diag)
}

/// OLS standard errors from a factor: se_j = √(diag_j((RᵀR)⁻¹) · rss/(n−p)).
pub fn std_errors(f: &TriangularFactor, n_total: usize) -> Result<Vec<f64>> {
    let p = f.p();
    if n_total <= p {
        return Err(Error::DegenerateDof { n: n_total, p });
    }
    let sigma2 = f.sqrt_rss().powi(2) / (n_total - p) as f64;
    let diag = vcov_diag_unscaled(f)?;
    Ok(diag.iter().map(|d| (d * sigma2).sqrt()).collect())
}

/// Extracts β, RSS and standard errors from an augmented factor.
pub fn fit_from_factor(f: &TriangularFactor, n_total: usize) -> Result<FitResult> {
    if n_total < 1 {
        return Err(Error::EmptyInput("fit needs at least one observation".into()));
    }
    let p = f.p();
    let beta = back_substitute(f, &f.theta())?;
    let rss = f.sqrt_rss().powi(2);
    let std_errors = if n_total > p {
        Some(std_errors(f, n_total)?)
    } else {
        None
    };
    Ok(FitResult {
        beta,
        rss,
        std_errors,
        n: n_total,
        p,
        iterations: 1,
        converged: true,
    })
}

/// One-shot centralized fit of `[X Y]`.
pub fn fit_lm(x: &DenseMatrix, y: &[f64]) -> Result<FitResult> {
    let a = x.hstack_col(y)?;
    let f = thin_r(&a)?;
    fit_from_factor(&f, x.rows())
}

/// Streaming regression state. A value type: each update returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState {
    factor: TriangularFactor,
    n_seen: usize,
}

impl StreamState {
    /// Empty stream for p predictor columns: a zero (p+1)x(p+1) triangle.
    pub fn new(p: usize) -> Result<Self> {
        if p < 1 {
            return Err(Error::Config("stream needs p >= 1".into()));
        }
        Ok(Self {
            factor: TriangularFactor::zero(p),
            n_seen: 0,
        })
    }

    pub fn factor(&self) -> &TriangularFactor {
        &self.factor
    }

    pub fn n_seen(&self) -> usize {
        self.n_seen
    }

    /// Folds one observation `(x_row, y)` into the factor.
    pub fn update(&self, x_row: &[f64], y: f64) -> Result<StreamState> {
        if x_row.len() != self.factor.p() {
            return Err(Error::Shape(format!(
                "row of length {} against p = {}",
                x_row.len(),
                self.factor.p()
            )));
        }
        let mut row = x_row.to_vec();
        row.push(y);
        Ok(StreamState {
            factor: append_row(&self.factor, &row)?,
            n_seen: self.n_seen + 1,
        })
    }

    /// Fit over everything seen so far.
    pub fn fit(&self) -> Result<FitResult> {
        fit_from_factor(&self.factor, self.n_seen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::thin_r;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn exact_line() -> (DenseMatrix, Vec<f64>) {
        let x = DenseMatrix::new(3, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        (x, vec![1.0, 3.0, 5.0])
    }

    #[test]
    fn exact_line_fit() {
        let (x, y) = exact_line();
        let fit = fit_lm(&x, &y).unwrap();
        assert!((fit.beta[0] - 1.0).abs() < 1e-12);
        assert!((fit.beta[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-24);
        // zero residual variance means zero standard errors
        for se in fit.std_errors.unwrap() {
            assert!(se < 1e-12);
        }
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let x = DenseMatrix::new(
            100,
            3,
            (0..300).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..100)
            .map(|i| {
                let r = x.row(i);
                r[0] + 2.0 * r[1] - r[2] + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let fit = fit_lm(&x, &y).unwrap();
        let oracle = crate::oracle::normal_equations_fit(&x, &y).unwrap();
        for (a, b) in fit.beta.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn std_errors_orthonormal_unit_dispersion() {
        // R = I and rss/(n-p) = 1 force all standard errors to 1
        let mut packed = vec![0.0; 6];
        packed[0] = 1.0; // (0,0)
        packed[3] = 1.0; // (1,1)
        packed[5] = 2.0_f64.sqrt(); // √RSS with n-p = 2 → rss/(n-p) = 1
        let f = crate::linalg::TriangularFactor::from_packed(2, packed).unwrap();
        let se = std_errors(&f, 4).unwrap();
        for s in se {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn std_errors_match_explicit_inverse() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 200;
        let p = 4;
        let x = DenseMatrix::new(
            n,
            p,
            (0..n * p).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let fit = fit_lm(&x, &y).unwrap();
        let se = fit.std_errors.unwrap();
        // brute force: invert XᵀX by Gauss-Jordan
        let g = x.gram();
        let inv = crate::oracle::invert_spd_for_tests(&g).unwrap();
        let sigma2 = fit.rss / (n - p) as f64;
        for j in 0..p {
            let expect = (inv.get(j, j) * sigma2).sqrt();
            assert!((se[j] - expect).abs() <= 1e-9 * (1.0 + expect));
        }
    }

    #[test]
    fn degenerate_dof() {
        let (x, y) = exact_line();
        let f = thin_r(&x.hstack_col(&y).unwrap()).unwrap();
        assert!(matches!(
            std_errors(&f, 2),
            Err(Error::DegenerateDof { .. })
        ));
        // n == p: fit succeeds, std errors absent
        let fit = fit_from_factor(&f, 2).unwrap();
        assert!(fit.std_errors.is_none());
    }

    #[test]
    fn empty_stream_fit_is_singular() {
        let s = StreamState::new(2).unwrap();
        assert!(matches!(s.fit(), Err(Error::EmptyInput(_))));
        // one row is not enough to identify two coefficients either
        let s = s.update(&[1.0, 2.0], 3.0).unwrap();
        assert!(matches!(s.fit(), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn stream_matches_batch() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let n = 40;
        let p = 3;
        let x = DenseMatrix::new(
            n,
            p,
            (0..n * p).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut s = StreamState::new(p).unwrap();
        for i in 0..n {
            s = s.update(x.row(i), y[i]).unwrap();
            if i >= p && (i + 1) % 10 == 0 {
                // interleaved checkpoints agree with the batch fit so far
                let head = DenseMatrix::new(i + 1, p, x.values()[..(i + 1) * p].to_vec()).unwrap();
                let batch = fit_lm(&head, &y[..=i]).unwrap();
                let streamed = s.fit().unwrap();
                for (a, b) in streamed.beta.iter().zip(&batch.beta) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                }
            }
        }
        assert_eq!(s.n_seen(), n);
    }

    #[test]
    fn stream_zero_row_keeps_factor() {
        let s = StreamState::new(2).unwrap();
        let s1 = s.update(&[1.0, 2.0], 3.0).unwrap();
        let s2 = s1.update(&[0.0, 0.0], 0.0).unwrap();
        assert_eq!(s1.factor().packed(), s2.factor().packed());
        assert_eq!(s2.n_seen(), 2);
    }

    #[test]
    fn stream_order_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let rows: Vec<(Vec<f64>, f64)> = (0..25)
            .map(|_| {
                (
                    (0..3).map(|_| rng.sample(StandardNormal)).collect(),
                    rng.sample(StandardNormal),
                )
            })
            .collect();
        let fold = |order: &[usize]| {
            let mut s = StreamState::new(3).unwrap();
            for &i in order {
                s = s.update(&rows[i].0, rows[i].1).unwrap();
            }
            s
        };
        let fwd: Vec<usize> = (0..25).collect();
        let rev: Vec<usize> = (0..25).rev().collect();
        let a = fold(&fwd);
        let b = fold(&rev);
        for (x, y) in a.factor().packed().iter().zip(b.factor().packed()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn rss_monotone_under_appends() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let mut s = StreamState::new(2).unwrap();
        let mut last = 0.0;
        for _ in 0..30 {
            let row: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
            s = s.update(&row, rng.sample(StandardNormal)).unwrap();
            let rss = s.factor().sqrt_rss().powi(2);
            assert!(rss + 1e-12 >= last);
            last = rss;
        }
    }

    #[test]
    fn scale_equivariance() {
        let (x, _) = exact_line();
        let y = vec![1.0, 2.5, 4.1];
        let fit = fit_lm(&x, &y).unwrap();
        let c = 3.5;
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let fitc = fit_lm(&x, &yc).unwrap();
        for (a, b) in fit.beta.iter().zip(&fitc.beta) {
            assert!((c * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        assert!((c * fit.rss.sqrt() - fitc.rss.sqrt()).abs() <= 1e-10);
    }
}
