//! Independent, deliberately simple centralized solvers used by tests and the
//! `compare` command: normal-equations OLS, summation-form distributed IRLS,
//! and a finite-difference log-likelihood checker.
//!
//! Nothing here touches the QR path (only the matrix container is shared), so
//! agreement between this module and the main path is evidence rather than
//! tautology. Gaussian elimination is used on purpose: it reproduces the
//! classic cross-product formulation the QR path exists to avoid.

use crate::error::{Error, Result};
use crate::glm::Family;
use crate::linalg::DenseMatrix;

/// Solves A·x = b by Gaussian elimination with partial pivoting.
fn gauss_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Shape("gauss_solve needs a square system".into()));
    }
    let mut m = a.values().to_vec();
    let mut rhs = b.to_vec();
    let scale: f64 = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1.0);
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if m[i * n + k].abs() > m[piv * n + k].abs() {
                piv = i;
            }
        }
        if m[piv * n + k].abs() <= tol {
            return Err(Error::SingularDesign(k));
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            rhs.swap(k, piv);
        }
        for i in (k + 1)..n {
            let factor = m[i * n + k] / m[k * n + k];
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                m[i * n + j] -= factor * m[k * n + j];
            }
            rhs[i] -= factor * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc -= m[i * n + j] * x[j];
        }
        x[i] = acc / m[i * n + i];
    }
    Ok(x)
}

/// Full inverse by Gauss-Jordan; test support for brute-force vcov checks.
pub fn invert_spd_for_tests(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = gauss_solve(a, &e)?;
        e[j] = 0.0;
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    Ok(inv)
}

/// OLS by the normal equations: solves (XᵀX)β = XᵀY directly.
pub fn normal_equations_fit(x: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} responses against {} rows",
            y.len(),
            x.rows()
        )));
    }
    let g = x.gram();
    let p = x.cols();
    let mut xty = vec![0.0; p];
    for i in 0..x.rows() {
        let row = x.row(i);
        for j in 0..p {
            xty[j] += row[j] * y[i];
        }
    }
    gauss_solve(&g, &xty)
}

/// Summation-form parallel IRLS: accumulates Σ XᵢᵀWᵢXᵢ and Σ XᵢᵀWᵢzᵢ across
/// partitions and solves the cross-product system each round.
///
/// A second oracle for the distributed GLM. It inherits the conditioning
/// problems of the explicit cross-product, which is exactly the behaviour it
/// exists to document.
pub fn summation_irls_fit(
    partitions: &[(DenseMatrix, Vec<f64>)],
    fam: Family,
    maxit: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::EmptyInput("no partitions".into()))?;
    let p = first.0.cols();
    let n_total: usize = partitions.iter().map(|(x, _)| x.rows()).sum();
    let mut beta = vec![0.0; p];
    for _round in 0..maxit {
        let mut xtwx = DenseMatrix::zeros(p, p);
        let mut xtwz = vec![0.0; p];
        let mut rss = 0.0;
        for (x, y) in partitions {
            let (xt, zt) = crate::glm::irls_local_transform(x, y, &beta, fam)?;
            for i in 0..xt.rows() {
                let row = xt.row(i);
                for a in 0..p {
                    for b in 0..p {
                        let v = xtwx.get(a, b) + row[a] * row[b];
                        xtwx.set(a, b, v);
                    }
                    xtwz[a] += row[a] * zt[i];
                }
            }
        }
        let beta_new = gauss_solve(&xtwx, &xtwz)?;
        // working Pearson rss for the dispersion scaling
        for (x, y) in partitions {
            let (xt, zt) = crate::glm::irls_local_transform(x, y, &beta, fam)?;
            for i in 0..xt.rows() {
                let fitted: f64 = xt.row(i).iter().zip(&beta_new).map(|(a, b)| a * b).sum();
                let r = zt[i] - fitted;
                rss += r * r;
            }
        }
        let dispersion = fam.dispersion(rss, n_total, p)?;
        let inv = invert_spd_for_tests(&xtwx)?;
        let mut worst: f64 = 0.0;
        for j in 0..p {
            let d = (beta[j] - beta_new[j]).abs();
            if d == 0.0 {
                continue;
            }
            let se = (inv.get(j, j) * dispersion).sqrt();
            worst = worst.max(if se > 0.0 { d / se } else { f64::INFINITY });
        }
        beta = beta_new;
        if worst < tol {
            return Ok(beta);
        }
    }
    Err(Error::NotConverged(maxit))
}

/// Log-likelihood coded from the density formulas, independent of the Family
/// link machinery (dispersion fixed at 1; it only rescales the score).
pub fn loglik(x: &DenseMatrix, y: &[f64], fam: Family, beta: &[f64]) -> Result<f64> {
    use crate::glm::{FamilyKind, LinkKind};
    let mut ll = 0.0;
    for i in 0..x.rows() {
        let eta: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
        let yi = y[i];
        let term = match (fam.kind(), fam.link_kind()) {
            (FamilyKind::Gaussian, LinkKind::Identity) => -0.5 * (yi - eta) * (yi - eta),
            (FamilyKind::Binomial, LinkKind::Logit) => {
                // y·η − ln(1 + e^η), stable for large |η|
                let log1pexp = if eta > 30.0 { eta } else { (eta.exp()).ln_1p() };
                yi * eta - log1pexp
            }
            (FamilyKind::Poisson, LinkKind::Log) => yi * eta - eta.exp(),
            (FamilyKind::Gamma, LinkKind::Inverse) => {
                let mu = (1.0 / eta).max(1e-300);
                -mu.ln() - yi / mu
            }
            (FamilyKind::Gamma, LinkKind::Log) => -eta - yi * (-eta).exp(),
            _ => return Err(Error::Domain("unsupported family/link".into())),
        };
        if !term.is_finite() {
            return Err(Error::Domain(format!("log-likelihood undefined at row {}", i)));
        }
        ll += term;
    }
    Ok(ll)
}

/// Central finite differences of the log-likelihood, step 1e-6 relative.
pub fn loglik_gradient_fd(
    x: &DenseMatrix,
    y: &[f64],
    fam: Family,
    beta: &[f64],
) -> Result<Vec<f64>> {
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain("beta must be finite".into()));
    }
    let mut grad = vec![0.0; beta.len()];
    let mut work = beta.to_vec();
    for j in 0..beta.len() {
        let h = 1e-6 * beta[j].abs().max(1.0);
        work[j] = beta[j] + h;
        let up = loglik(x, y, fam, &work)?;
        work[j] = beta[j] - h;
        let down = loglik(x, y, fam, &work)?;
        work[j] = beta[j];
        grad[j] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}
