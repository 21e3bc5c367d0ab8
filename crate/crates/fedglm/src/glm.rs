//! Exponential-family machinery and the IRLS loop that reduces GLM fitting
//! to repeated weighted least squares on √W-transformed data.
//!
//! Each iteration builds the working response z and weight matrix W, scales
//! rows by √w, and hands the resulting augmented matrix to the same QR path
//! the linear model uses. The round-exchange callback is the only place where
//! a federation (or a pass-through, for the centralized path) plugs in.

use crate::error::{Error, Result};
use crate::linalg::{back_substitute, thin_r, DenseMatrix, TriangularFactor};
use crate::lm::{vcov_diag_unscaled, FitResult};

/// Default IRLS iteration cap.
pub const DEFAULT_MAXIT: usize = 25;
/// Default convergence tolerance on |Δβ| in standard-error units.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Lower clamp for means and weights near the domain boundary.
const MU_EPS: f64 = 1e-10;
/// Weight floor applied before taking √W.
const W_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Gaussian,
    Binomial,
    Poisson,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Identity,
    Logit,
    Log,
    Inverse,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "binomial" => Ok(Self::Binomial),
            "poisson" => Ok(Self::Poisson),
            "gamma" => Ok(Self::Gamma),
            _ => Err(Error::Config(format!("unknown family '{}'", s))),
        }
    }
}

impl LinkKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "logit" => Ok(Self::Logit),
            "log" => Ok(Self::Log),
            "inverse" => Ok(Self::Inverse),
            _ => Err(Error::Config(format!("unknown link '{}'", s))),
        }
    }
}

/// A response family paired with a validated link function.
///
/// Supported pairs: gaussian+identity, binomial+logit, poisson+log,
/// gamma+inverse, gamma+log. Anything else is a configuration error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Family {
    kind: FamilyKind,
    link: LinkKind,
}

impl Family {
    pub fn new(kind: FamilyKind, link: LinkKind) -> Result<Self> {
        let ok = matches!(
            (kind, link),
            (FamilyKind::Gaussian, LinkKind::Identity)
                | (FamilyKind::Binomial, LinkKind::Logit)
                | (FamilyKind::Poisson, LinkKind::Log)
                | (FamilyKind::Gamma, LinkKind::Inverse)
                | (FamilyKind::Gamma, LinkKind::Log)
        );
        if !ok {
            return Err(Error::Config(format!(
                "unsupported family/link pair {:?}/{:?}",
                kind, link
            )));
        }
        Ok(Self { kind, link })
    }

    /// The family with its canonical link.
    pub fn canonical(kind: FamilyKind) -> Self {
        let link = match kind {
            FamilyKind::Gaussian => LinkKind::Identity,
            FamilyKind::Binomial => LinkKind::Logit,
            FamilyKind::Poisson => LinkKind::Log,
            FamilyKind::Gamma => LinkKind::Inverse,
        };
        Self { kind, link }
    }

    pub fn gaussian() -> Self {
        Self::canonical(FamilyKind::Gaussian)
    }

    pub fn binomial() -> Self {
        Self::canonical(FamilyKind::Binomial)
    }

    pub fn poisson() -> Self {
        Self::canonical(FamilyKind::Poisson)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn link_kind(&self) -> LinkKind {
        self.link
    }

    /// Clamps a mean into the family's open domain.
    pub fn clamp_mu(&self, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => mu,
            FamilyKind::Binomial => mu.clamp(MU_EPS, 1.0 - MU_EPS),
            FamilyKind::Poisson | FamilyKind::Gamma => mu.max(MU_EPS),
        }
    }

    /// Link function g(μ).
    pub fn link(&self, mu: f64) -> Result<f64> {
        let mu = self.clamp_mu(mu);
        let v = match self.link {
            LinkKind::Identity => mu,
            LinkKind::Logit => (mu / (1.0 - mu)).ln(),
            LinkKind::Log => mu.ln(),
            LinkKind::Inverse => 1.0 / mu,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("link undefined at mu = {}", mu)))
        }
    }

    /// Inverse link g⁻¹(η), clamped into the mean domain.
    pub fn inverse_link(&self, eta: f64) -> f64 {
        let mu = match self.link {
            LinkKind::Identity => eta,
            LinkKind::Logit => 1.0 / (1.0 + (-eta).exp()),
            LinkKind::Log => eta.exp(),
            LinkKind::Inverse => 1.0 / eta,
        };
        self.clamp_mu(mu)
    }

    /// ∂μ/∂η evaluated at a (clamped) mean.
    pub fn mu_eta(&self, mu: f64) -> f64 {
        match self.link {
            LinkKind::Identity => 1.0,
            LinkKind::Logit => mu * (1.0 - mu),
            LinkKind::Log => mu,
            LinkKind::Inverse => -(mu * mu),
        }
    }

    /// Variance function V(μ).
    pub fn variance(&self, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Binomial => mu * (1.0 - mu),
            FamilyKind::Poisson => mu,
            FamilyKind::Gamma => mu * mu,
        }
    }

    /// Whether the dispersion is fixed at 1 (binomial, poisson).
    pub fn fixed_dispersion(&self) -> bool {
        matches!(self.kind, FamilyKind::Binomial | FamilyKind::Poisson)
    }

    /// Dispersion used to scale vcov: 1 when fixed, else the working
    /// Pearson estimate rss/(n−p).
    pub fn dispersion(&self, rss: f64, n: usize, p: usize) -> Result<f64> {
        if self.fixed_dispersion() {
            Ok(1.0)
        } else if n > p {
            Ok(rss / (n - p) as f64)
        } else {
            Err(Error::DegenerateDof { n, p })
        }
    }
}

/// IRLS loop variables for one node.
#[derive(Debug, Clone)]
pub struct IrlsState {
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub mu: Vec<f64>,
    pub round: usize,
    pub converged: bool,
}

/// One IRLS transformation: returns (√W·X, √W·z) for the current β.
///
/// w_i = (∂μ/∂η)² / V(μ_i) with a floor before the square root,
/// z_i = η_i + (y_i − μ_i)/(∂μ/∂η).
pub fn irls_local_transform(
    x: &DenseMatrix,
    y: &[f64],
    beta: &[f64],
    fam: Family,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Shape(format!(
            "{} responses against {} rows",
            y.len(),
            n
        )));
    }
    if beta.len() != p {
        return Err(Error::Shape(format!(
            "beta of length {} against p = {}",
            beta.len(),
            p
        )));
    }
    let mut xt = Vec::with_capacity(n * p);
    let mut zt = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = fam.inverse_link(eta);
        let mup = fam.mu_eta(mu);
        let var = fam.variance(mu);
        let w = (mup * mup / var).max(W_FLOOR);
        let z = eta + (y[i] - mu) / mup;
        let sw = w.sqrt();
        if !(z.is_finite() && sw.is_finite()) {
            return Err(Error::Domain(format!(
                "working response escaped the family domain at row {}",
                i
            )));
        }
        for &v in row {
            xt.push(sw * v);
        }
        zt.push(sw * z);
    }
    Ok((DenseMatrix::new(n, p, xt)?, zt))
}

/// Convergence test on standardized coefficient movement:
/// max_j |Δβ_j| / se_j < tol, with se from the round's global factor.
pub fn check_convergence(
    beta_old: &[f64],
    beta_new: &[f64],
    f_global: &TriangularFactor,
    fam: Family,
    n_total: usize,
    tol: f64,
) -> Result<bool> {
    let p = f_global.p();
    let rss = f_global.sqrt_rss().powi(2);
    let dispersion = fam.dispersion(rss, n_total, p)?;
    let diag = vcov_diag_unscaled(f_global)?;
    let mut worst: f64 = 0.0;
    for j in 0..p {
        let d = (beta_old[j] - beta_new[j]).abs();
        if d == 0.0 {
            continue;
        }
        let se = (diag[j] * dispersion).sqrt();
        worst = worst.max(if se > 0.0 { d / se } else { f64::INFINITY });
    }
    Ok(worst < tol)
}

/// The factor a node contributes for one round: the thin R of `[X̃ z̃]`.
/// Short blocks (fewer rows than p+1) are zero-padded before the QR so every
/// node always produces a (p+1)x(p+1) triangle.
pub fn local_factor(x_tilde: &DenseMatrix, z_tilde: &[f64]) -> Result<TriangularFactor> {
    let a = x_tilde.hstack_col(z_tilde)?;
    if a.rows() >= a.cols() {
        thin_r(&a)
    } else {
        let pad = DenseMatrix::zeros(a.cols() - a.rows(), a.cols());
        thin_r(&a.vstack(&pad)?)
    }
}

/// Runs the full IRLS loop with a pluggable per-round exchange.
///
/// `exchange(round, local_factor, n_local)` must return the merged global
/// factor and the global observation count for the round. A pass-through
/// exchange makes this exactly the centralized IRLS path; a federation's
/// all-to-all merge makes it the distributed one, with identical code on
/// either side of the callback.
pub fn fit_glm_local_loop<E>(
    x: &DenseMatrix,
    y: &[f64],
    fam: Family,
    maxit: usize,
    tol: f64,
    mut exchange: E,
) -> Result<FitResult>
where
    E: FnMut(u32, &TriangularFactor, u64) -> Result<(TriangularFactor, u64)>,
{
    if maxit < 1 {
        return Err(Error::Config("maxit must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tol must be > 0".into()));
    }
    let p = x.cols();
    let n_local = x.rows() as u64;
    let mut state = IrlsState {
        beta: vec![0.0; p],
        eta: vec![0.0; x.rows()],
        mu: Vec::new(),
        round: 0,
        converged: false,
    };
    for round in 0..maxit {
        let (xt, zt) = irls_local_transform(x, y, &state.beta, fam)?;
        let f_local = local_factor(&xt, &zt)?;
        let (f_global, n_total) = exchange(round as u32, &f_local, n_local)?;
        if f_global.p() != p {
            return Err(Error::Shape(format!(
                "global factor has p = {}, expected {}",
                f_global.p(),
                p
            )));
        }
        let beta_new = back_substitute(&f_global, &f_global.theta())?;
        let n_total = n_total as usize;
        state.converged = check_convergence(&state.beta, &beta_new, &f_global, fam, n_total, tol)?;
        state.eta = (0..x.rows())
            .map(|i| x.row(i).iter().zip(&beta_new).map(|(a, b)| a * b).sum())
            .collect();
        state.mu = state.eta.iter().map(|&e| fam.inverse_link(e)).collect();
        state.beta = beta_new;
        state.round = round + 1;
        if state.converged {
            let rss = f_global.sqrt_rss().powi(2);
            let dispersion = fam.dispersion(rss, n_total, p)?;
            let std_errors = if n_total > p {
                let diag = vcov_diag_unscaled(&f_global)?;
                Some(diag.iter().map(|d| (d * dispersion).sqrt()).collect())
            } else {
                None
            };
            return Ok(FitResult {
                beta: state.beta,
                rss,
                std_errors,
                n: n_total,
                p,
                iterations: state.round,
                converged: true,
            });
        }
    }
    Err(Error::NotConverged(maxit))
}

/// Centralized GLM fit: the local loop with a pass-through exchange.
pub fn fit_glm(
    x: &DenseMatrix,
    y: &[f64],
    fam: Family,
    maxit: usize,
    tol: f64,
) -> Result<FitResult> {
    fit_glm_local_loop(x, y, fam, maxit, tol, |_round, f, n| Ok((f.clone(), n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::fit_lm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn logit_symmetry_point() {
        let fam = Family::binomial();
        assert!(fam.link(0.5).unwrap().abs() < 1e-15);
        assert!((fam.inverse_link(0.0) - 0.5).abs() < 1e-15);
        assert!((fam.mu_eta(0.5) - 0.25).abs() < 1e-15);
        assert!((fam.variance(0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn poisson_log_at_zero() {
        let fam = Family::poisson();
        assert!((fam.inverse_link(0.0) - 1.0).abs() < 1e-15);
        assert!((fam.variance(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsupported_pairs() {
        assert!(Family::new(FamilyKind::Binomial, LinkKind::Log).is_err());
        assert!(Family::new(FamilyKind::Poisson, LinkKind::Identity).is_err());
        assert!(Family::new(FamilyKind::Gamma, LinkKind::Log).is_ok());
    }

    #[test]
    fn gaussian_transform_is_identity() {
        let x = DenseMatrix::new(3, 2, vec![1.0, 0.5, 1.0, -1.0, 1.0, 2.0]).unwrap();
        let y = vec![0.3, -0.7, 1.9];
        let (xt, zt) = irls_local_transform(&x, &y, &[0.1, -0.2], Family::gaussian()).unwrap();
        assert_eq!(xt.values(), x.values());
        for (a, b) in zt.iter().zip(&y) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn binomial_transform_at_zero_beta() {
        let x = DenseMatrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let y = vec![0.0, 1.0];
        let (xt, zt) = irls_local_transform(&x, &y, &[0.0], Family::binomial()).unwrap();
        // mu = 0.5 everywhere: w = 0.25, z = 4(y - 0.5)
        let sw = 0.25_f64.sqrt();
        assert!((xt.get(0, 0) - sw).abs() < 1e-15);
        assert!((zt[0] - sw * -2.0).abs() < 1e-15);
        assert!((zt[1] - sw * 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_glm_matches_lm() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let n = 50;
        let x = DenseMatrix::new(
            n,
            2,
            (0..n * 2).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.5 * x.get(i, 0) - 0.5 * x.get(i, 1) + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let glm = fit_glm(&x, &y, Family::gaussian(), DEFAULT_MAXIT, DEFAULT_TOL).unwrap();
        let lm = fit_lm(&x, &y).unwrap();
        for (a, b) in glm.beta.iter().zip(&lm.beta) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        // weights are identically 1, so the second round only confirms the first
        assert!(glm.iterations <= 2);
    }

    #[test]
    fn intercept_only_binomial_balanced() {
        let x = DenseMatrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let y = vec![0.0, 1.0];
        let fit = fit_glm(&x, &y, Family::binomial(), DEFAULT_MAXIT, DEFAULT_TOL).unwrap();
        assert!(fit.beta[0].abs() < 1e-12);
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
    }

    #[test]
    fn convergence_is_strict_at_boundary() {
        // beta_old == beta_new converges for any tol > 0
        let x = DenseMatrix::new(4, 1, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let y = vec![0.0, 1.0, 1.0, 0.0];
        let (xt, zt) = irls_local_transform(&x, &y, &[0.0], Family::binomial()).unwrap();
        let f = local_factor(&xt, &zt).unwrap();
        let beta = vec![0.3];
        assert!(check_convergence(&beta, &beta, &f, Family::binomial(), 4, 1e-30).unwrap());
        // a movement of exactly tol·se fails the strict inequality
        let diag = vcov_diag_unscaled(&f).unwrap();
        let se = diag[0].sqrt();
        let tol = 0.5;
        let moved = vec![beta[0] + tol * se];
        assert!(!check_convergence(&beta, &moved, &f, Family::binomial(), 4, tol).unwrap());
    }

    #[test]
    fn one_irls_step_matches_newton_raphson() {
        // poisson/log is canonical, so one IRLS step from beta is one Newton
        // step on the log-likelihood; verify against finite differences
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let n = 30;
        let x = DenseMatrix::new(
            n,
            2,
            (0..n * 2)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.5)
                .collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        let beta0 = vec![0.1, -0.2];
        let fam = Family::poisson();

        let (xt, zt) = irls_local_transform(&x, &y, &beta0, fam).unwrap();
        let f = local_factor(&xt, &zt).unwrap();
        let beta1 = back_substitute(&f, &f.theta()).unwrap();

        // Newton step: beta1 = beta0 + H⁻¹·score, both by brute force
        let score = crate::oracle::loglik_gradient_fd(&x, &y, fam, &beta0).unwrap();
        let mut hess = DenseMatrix::zeros(2, 2);
        for i in 0..n {
            let eta: f64 = x.row(i).iter().zip(&beta0).map(|(a, b)| a * b).sum();
            let mu = eta.exp();
            for a in 0..2 {
                for b in 0..2 {
                    let v = hess.get(a, b) + mu * x.get(i, a) * x.get(i, b);
                    hess.set(a, b, v);
                }
            }
        }
        let hinv = crate::oracle::invert_spd_for_tests(&hess).unwrap();
        for a in 0..2 {
            let step: f64 = (0..2).map(|b| hinv.get(a, b) * score[b]).sum();
            let expect = beta0[a] + step;
            assert!(
                (beta1[a] - expect).abs() <= 1e-5 * (1.0 + expect.abs()),
                "coordinate {}: {} vs {}",
                a,
                beta1[a],
                expect
            );
        }
    }

    #[test]
    fn not_converged_when_maxit_exhausted() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let n = 60;
        let x = DenseMatrix::new(
            n,
            1,
            (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let p = 1.0 / (1.0 + (-2.0 * x.get(i, 0)).exp());
                if rng.gen::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        match fit_glm(&x, &y, Family::binomial(), 1, 1e-12) {
            Err(Error::NotConverged(1)) => {}
            other => panic!("expected NotConverged(1), got {:?}", other),
        }
    }
}
