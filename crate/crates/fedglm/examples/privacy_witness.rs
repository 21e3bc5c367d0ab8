//! Why exchanging triangular factors does not reveal the data.
//!
//! Two different datasets can produce the same factor, so a factor alone
//! cannot be inverted back to the rows: any orthogonal completion is an
//! equally valid preimage. The second half captures actual wire traffic from
//! a two-node run and scans it for the raw observations.
//!
//! Run with: cargo run --example privacy_witness

use std::time::Duration;

use fedglm::fednet::protocol::{run_lm_protocol, NodeCtx};
use fedglm::fednet::transport::{inproc_network, new_capture};
use fedglm::ingest::{gen_synthetic, partition_rows, SyntheticKind, SyntheticSpec};
use fedglm::linalg::{householder_qr, DenseMatrix};

fn main() -> fedglm::Result<()> {
    let x1 = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]])?;
    let x2 = DenseMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 2.0]])?;
    let r1 = householder_qr(&x1)?.r;
    let r2 = householder_qr(&x2)?.r;

    println!("X1 = {:?}", x1.values());
    println!("X2 = {:?}", x2.values());
    println!("R of X1 = [[{}, {}], [0, {}]]", r1.get(0, 0), r1.get(0, 1), r1.get(1, 1));
    println!("R of X2 = [[{}, {}], [0, {}]]", r2.get(0, 0), r2.get(0, 1), r2.get(1, 1));
    println!("different data, identical factor: the factor does not determine the data\n");

    // capture everything two nodes put on the wire during a fit
    let (x, y) = gen_synthetic(&SyntheticSpec {
        n: 50,
        p: 2,
        beta_true: 3.0,
        noise: 1.0,
        seed: 5,
        kind: SyntheticKind::Linear,
    })?;
    let ranges = partition_rows(x.rows(), 2)?;
    let capture = new_capture();
    let transports = inproc_network(2);
    std::thread::scope(|scope| {
        for (mut t, range) in transports.into_iter().zip(ranges.clone()) {
            t.set_capture(capture.clone());
            let (x, y) = (&x, &y);
            scope.spawn(move || {
                let p = x.cols();
                let rows = range.end - range.start;
                let values = x.values()[range.start * p..range.end * p].to_vec();
                let xs = DenseMatrix::new(rows, p, values).unwrap();
                let mut ctx = NodeCtx::with_timeout(t, Duration::from_secs(5));
                run_lm_protocol(&mut ctx, &xs, &y[range]).unwrap();
            });
        }
    });

    let wire = capture.lock().unwrap();
    println!("captured {} bytes of traffic for {} observations", wire.len(), x.rows());
    let mut leaks = 0;
    for i in 0..x.rows() {
        let mut needle = Vec::new();
        for v in x.row(i) {
            needle.extend_from_slice(&v.to_le_bytes());
        }
        needle.extend_from_slice(&y[i].to_le_bytes());
        if wire.windows(needle.len()).any(|w| w == needle) {
            leaks += 1;
        }
    }
    println!("observation rows found in the traffic: {}", leaks);
    Ok(())
}
