//! Synthetic experiment grids: distributed-vs-centralized coefficient
//! agreement measured as MAE (mean absolute error over coefficients, then
//! averaged over replicas), plus the pairwise comparison rule used by the
//! `compare` command.

use crate::error::{Error, Result};
use crate::fednet::sim::{run_federated_glm, run_federated_lm};
use crate::glm::{fit_glm, Family};
use crate::ingest::{gen_synthetic, SyntheticKind, SyntheticSpec};
use crate::lm::fit_lm;

/// Default absolute tolerance of the pairwise comparison rule.
pub const COMPARE_ATOL: f64 = 1e-8;
/// Default relative tolerance of the pairwise comparison rule.
pub const COMPARE_RTOL: f64 = 1e-5;

/// |β_d − β_c| ≤ atol + rtol·|β_c|, per coefficient.
pub fn pairwise_within(
    beta_distributed: &[f64],
    beta_central: &[f64],
    atol: f64,
    rtol: f64,
) -> Result<Vec<bool>> {
    if beta_distributed.len() != beta_central.len() {
        return Err(Error::Shape(format!(
            "{} coefficients against {}",
            beta_distributed.len(),
            beta_central.len()
        )));
    }
    Ok(beta_distributed
        .iter()
        .zip(beta_central)
        .map(|(d, c)| (d - c).abs() <= atol + rtol * c.abs())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Lm,
    Glm,
}

/// A grid of (observations × predictors × node counts) cells, each averaged
/// over `replicas` seeded replications.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub obs: Vec<usize>,
    pub preds: Vec<usize>,
    pub nodes: Vec<usize>,
    pub replicas: usize,
    pub model: ModelKind,
    pub seed: u64,
    pub maxit: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CellResult {
    pub n: usize,
    pub p: usize,
    pub nodes: usize,
    pub mae: f64,
}

// splitmix64-style hash so every (cell, replica) gets an independent stream
fn derive_seed(base: u64, n: usize, p: usize, nodes: usize, replica: usize) -> u64 {
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(1 + n as u64))
        .wrapping_add(0xbf58476d1ce4e5b9u64.wrapping_mul(1 + p as u64))
        .wrapping_add(0x94d049bb133111ebu64.wrapping_mul(1 + nodes as u64))
        .wrapping_add(0xd6e8feb86659fd93u64.wrapping_mul(1 + replica as u64));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// MAE of one replica: mean over coefficients of |β_d − β_c|.
fn replica_mae(beta_d: &[f64], beta_c: &[f64]) -> f64 {
    let p = beta_c.len() as f64;
    beta_d
        .iter()
        .zip(beta_c)
        .map(|(d, c)| (d - c).abs())
        .sum::<f64>()
        / p
}

/// Runs one cell and returns its replica-averaged MAE.
pub fn run_cell(
    model: ModelKind,
    n: usize,
    p: usize,
    nodes: usize,
    replicas: usize,
    seed: u64,
    maxit: usize,
    tol: f64,
) -> Result<CellResult> {
    let mut total = 0.0;
    for r in 0..replicas {
        let spec = SyntheticSpec {
            n,
            p,
            beta_true: 3.0,
            noise: 1.0,
            seed: derive_seed(seed, n, p, nodes, r),
            kind: match model {
                ModelKind::Lm => SyntheticKind::Linear,
                ModelKind::Glm => SyntheticKind::Binomial,
            },
        };
        let (x, y) = gen_synthetic(&spec)?;
        let (beta_c, beta_d) = match model {
            ModelKind::Lm => {
                let central = fit_lm(&x, &y)?;
                let fits = run_federated_lm(&x, &y, nodes)?;
                (central.beta, fits.into_iter().next().unwrap().beta)
            }
            ModelKind::Glm => {
                let central = fit_glm(&x, &y, Family::binomial(), maxit, tol)?;
                let fits = run_federated_glm(&x, &y, Family::binomial(), maxit, tol, nodes)?;
                (central.beta, fits.into_iter().next().unwrap().beta)
            }
        };
        total += replica_mae(&beta_d, &beta_c);
    }
    Ok(CellResult {
        n,
        p,
        nodes,
        mae: total / replicas as f64,
    })
}

/// Runs the whole grid, cells in (n, p, nodes) order.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<CellResult>> {
    let mut cells = Vec::new();
    for &n in &spec.obs {
        for &p in &spec.preds {
            for &nodes in &spec.nodes {
                cells.push(run_cell(
                    spec.model,
                    n,
                    p,
                    nodes,
                    spec.replicas,
                    spec.seed,
                    spec.maxit,
                    spec.tol,
                )?);
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_rule_boundary_arithmetic() {
        // identical fits pass
        let v = pairwise_within(&[1.0, -2.0], &[1.0, -2.0], COMPARE_ATOL, COMPARE_RTOL).unwrap();
        assert!(v.iter().all(|&x| x));
        // 2e-5 off a unit coefficient exceeds 1e-8 + 1e-5
        let v = pairwise_within(&[1.0 + 2e-5], &[1.0], COMPARE_ATOL, COMPARE_RTOL).unwrap();
        assert!(!v[0]);
        let v = pairwise_within(&[1.0 + 0.9e-5], &[1.0], COMPARE_ATOL, COMPARE_RTOL).unwrap();
        assert!(v[0]);
    }

    #[test]
    fn name_count_mismatch() {
        assert!(pairwise_within(&[1.0], &[1.0, 2.0], 1e-8, 1e-5).is_err());
    }

    #[test]
    fn small_lm_cell_is_tight() {
        let cell = run_cell(ModelKind::Lm, 200, 2, 4, 3, 9, 25, 1e-8).unwrap();
        assert!(cell.mae <= 1e-12, "mae = {}", cell.mae);
    }
}
