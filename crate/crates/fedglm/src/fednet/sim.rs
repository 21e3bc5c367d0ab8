//! In-process federation driver: partitions a dataset across N simulated
//! nodes, runs each node's protocol on its own thread, and returns every
//! node's fit. This is the simulation mode behind `--transport inproc` and
//! the experiment grids.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::fednet::protocol::{run_glm_protocol, run_lm_protocol, NodeCtx, DEFAULT_ROUND_TIMEOUT};
use crate::fednet::transport::inproc_network;
use crate::glm::Family;
use crate::ingest::partition_rows;
use crate::linalg::DenseMatrix;
use crate::lm::FitResult;

fn slice_partition(x: &DenseMatrix, y: &[f64], range: &std::ops::Range<usize>) -> (DenseMatrix, Vec<f64>) {
    let p = x.cols();
    let values = x.values()[range.start * p..range.end * p].to_vec();
    let xs = DenseMatrix::new(range.end - range.start, p, values).expect("partition slice");
    (xs, y[range.clone()].to_vec())
}

fn run_federated<F>(x: &DenseMatrix, y: &[f64], n_nodes: usize, run_node: F) -> Result<Vec<FitResult>>
where
    F: Fn(NodeCtx<crate::fednet::transport::InprocTransport>, DenseMatrix, Vec<f64>) -> Result<FitResult>
        + Sync,
{
    if y.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} responses against {} rows",
            y.len(),
            x.rows()
        )));
    }
    let ranges = partition_rows(x.rows(), n_nodes)?;
    let transports = inproc_network(n_nodes);

    let mut results: Vec<Option<Result<FitResult>>> = (0..n_nodes).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(n_nodes);
        for (transport, range) in transports.into_iter().zip(&ranges) {
            let (xs, ys) = slice_partition(x, y, range);
            let run_node = &run_node;
            handles.push(scope.spawn(move || run_node(NodeCtx::new(transport), xs, ys)));
        }
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().unwrap_or_else(|_| {
                Err(Error::Config("node thread panicked".into()))
            }));
        }
    });
    results.into_iter().map(|r| r.unwrap()).collect()
}

/// Runs the distributed LM over an in-process federation of `n_nodes`.
/// Returns one [`FitResult`] per node, in node-id order.
pub fn run_federated_lm(x: &DenseMatrix, y: &[f64], n_nodes: usize) -> Result<Vec<FitResult>> {
    run_federated(x, y, n_nodes, |mut ctx, xs, ys| {
        run_lm_protocol(&mut ctx, &xs, &ys)
    })
}

/// Runs the distributed GLM over an in-process federation of `n_nodes`.
pub fn run_federated_glm(
    x: &DenseMatrix,
    y: &[f64],
    fam: Family,
    maxit: usize,
    tol: f64,
    n_nodes: usize,
) -> Result<Vec<FitResult>> {
    run_federated_glm_with_timeout(x, y, fam, maxit, tol, n_nodes, DEFAULT_ROUND_TIMEOUT)
}

pub fn run_federated_glm_with_timeout(
    x: &DenseMatrix,
    y: &[f64],
    fam: Family,
    maxit: usize,
    tol: f64,
    n_nodes: usize,
    timeout: Duration,
) -> Result<Vec<FitResult>> {
    run_federated(x, y, n_nodes, move |mut ctx, xs, ys| {
        ctx.timeout = timeout;
        run_glm_protocol(&mut ctx, &xs, &ys, fam, maxit, tol)
    })
}
