//! A three-node federation over real TCP sockets on localhost.
//!
//! Each node binds a listener, connects to its peers (dialing upward,
//! accepting downward), and runs the same protocol as the in-process
//! simulation. In production each node would be its own process started with
//! `fedglm fit --transport socket --node-id N --peers ...`; here threads
//! stand in for processes.
//!
//! Run with: cargo run --example socket_federation

use std::net::{SocketAddr, TcpListener};
use std::time::Duration;

use fedglm::fednet::protocol::{run_lm_protocol, NodeCtx};
use fedglm::fednet::transport::{SocketTransport, Transport};
use fedglm::ingest::{gen_synthetic, partition_rows, SyntheticKind, SyntheticSpec};
use fedglm::linalg::DenseMatrix;

fn main() -> fedglm::Result<()> {
    let (x, y) = gen_synthetic(&SyntheticSpec {
        n: 600,
        p: 2,
        beta_true: 3.0,
        noise: 1.0,
        seed: 11,
        kind: SyntheticKind::Linear,
    })?;
    let p = x.cols();
    let ranges = partition_rows(x.rows(), 3)?;

    let listeners: Vec<TcpListener> = (0..3)
        .map(|_| TcpListener::bind("127.0.0.1:0").expect("bind"))
        .collect();
    let addrs: Vec<SocketAddr> = listeners.iter().map(|l| l.local_addr().unwrap()).collect();
    println!("node addresses: {:?}\n", addrs);

    std::thread::scope(|scope| {
        for (id, listener) in listeners.into_iter().enumerate() {
            let peers: Vec<(u32, SocketAddr)> = addrs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != id)
                .map(|(j, &a)| (j as u32, a))
                .collect();
            let range = ranges[id].clone();
            let (x, y) = (&x, &y);
            scope.spawn(move || {
                let rows = range.end - range.start;
                let values = x.values()[range.start * p..range.end * p].to_vec();
                let xs = DenseMatrix::new(rows, p, values).unwrap();
                let transport =
                    SocketTransport::connect(id as u32, listener, &peers, Duration::from_secs(10), None)
                        .expect("peer setup");
                let mut ctx = NodeCtx::new(transport);
                let fit = run_lm_protocol(&mut ctx, &xs, &y[range]).expect("protocol");
                println!(
                    "node {} ({} local rows, {} messages sent): beta = {:?}",
                    id,
                    rows,
                    ctx.transport.sent_messages(),
                    fit.beta
                );
            });
        }
    });
    Ok(())
}
