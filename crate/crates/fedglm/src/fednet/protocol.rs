//! Barrier-synchronized all-to-all factor exchange and the node-side entry
//! points for the distributed LM and GLM protocols.
//!
//! Every node sends its local factor to all peers, blocks until it holds one
//! factor per peer for the current round, then merges the full set sorted by
//! node id. The deterministic merge order means every node computes the same
//! global factor byte for byte, so loop-exit decisions never diverge between
//! nodes.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fednet::codec::{decode_message, encode_message, FactorMessage};
use crate::fednet::transport::Transport;
use crate::glm::{fit_glm_local_loop, local_factor, Family};
use crate::linalg::{merge_factors, DenseMatrix, TriangularFactor};
use crate::lm::{fit_from_factor, FitResult};

/// Default per-round deadline.
pub const DEFAULT_ROUND_TIMEOUT: Duration = Duration::from_secs(30);

/// One node's protocol context: its transport plus the round deadline and a
/// stash for messages that arrive one round early.
pub struct NodeCtx<T: Transport> {
    pub transport: T,
    pub timeout: Duration,
    stash: Vec<FactorMessage>,
}

impl<T: Transport> NodeCtx<T> {
    pub fn new(transport: T) -> Self {
        Self::with_timeout(transport, DEFAULT_ROUND_TIMEOUT)
    }

    pub fn with_timeout(transport: T, timeout: Duration) -> Self {
        Self {
            transport,
            timeout,
            stash: Vec::new(),
        }
    }

    pub fn node_id(&self) -> u32 {
        self.transport.node_id()
    }
}

/// One all-to-all exchange: broadcast the local factor, gather one factor per
/// peer, and merge everything in node-id order. Returns the merged factor and
/// the global observation count.
pub fn exchange_round<T: Transport>(
    ctx: &mut NodeCtx<T>,
    factor: &TriangularFactor,
    n_local: u64,
    round: u32,
) -> Result<(TriangularFactor, u64)> {
    let p = factor.p();
    let own = FactorMessage {
        node_id: ctx.transport.node_id(),
        round,
        n_local,
        factor: factor.clone(),
    };
    let bytes = encode_message(&own);
    let peers: Vec<u32> = ctx.transport.peers().to_vec();
    for &peer in &peers {
        ctx.transport.send(peer, &bytes)?;
    }

    let mut received: BTreeMap<u32, FactorMessage> = BTreeMap::new();
    let mut take = Vec::new();
    std::mem::swap(&mut take, &mut ctx.stash);
    let mut pending: Vec<FactorMessage> = Vec::new();
    for msg in take {
        if msg.round == round {
            received.insert(msg.node_id, msg);
        } else {
            pending.push(msg);
        }
    }
    ctx.stash = pending;

    let deadline = Instant::now() + ctx.timeout;
    while received.len() < peers.len() {
        let remaining = deadline.saturating_duration_since(Instant::now());
        let timed_out = remaining.is_zero();
        let frame = if timed_out {
            None
        } else {
            ctx.transport.recv_timeout(remaining)?
        };
        let Some(frame) = frame else {
            let missing = peers
                .iter()
                .copied()
                .find(|peer| !received.contains_key(peer))
                .unwrap_or(0);
            return Err(Error::PeerTimeout {
                node: missing,
                round,
            });
        };
        let msg = decode_message(&frame)?;
        if msg.factor.p() != p {
            return Err(Error::Shape(format!(
                "node {} sent a factor with p = {}, expected {}",
                msg.node_id,
                msg.factor.p(),
                p
            )));
        }
        if msg.round == round {
            received.insert(msg.node_id, msg);
        } else if msg.round > round {
            // a faster peer already started the next round
            ctx.stash.push(msg);
        } else {
            return Err(Error::Config(format!(
                "stale message from node {} for round {} while in round {}",
                msg.node_id, msg.round, round
            )));
        }
    }

    let mut all: Vec<(u32, &TriangularFactor, u64)> = Vec::with_capacity(peers.len() + 1);
    all.push((own.node_id, &own.factor, own.n_local));
    for msg in received.values() {
        all.push((msg.node_id, &msg.factor, msg.n_local));
    }
    all.sort_by_key(|&(id, _, _)| id);
    let ordered: Vec<TriangularFactor> = all.iter().map(|&(_, f, _)| f.clone()).collect();
    let n_total: u64 = all.iter().map(|&(_, _, n)| n).sum();
    Ok((merge_factors(&ordered)?, n_total))
}

/// Distributed linear regression: one local QR, one exchange, one backsolve.
pub fn run_lm_protocol<T: Transport>(
    ctx: &mut NodeCtx<T>,
    x_local: &DenseMatrix,
    y_local: &[f64],
) -> Result<FitResult> {
    let f_local = local_factor(x_local, y_local)?;
    let (f_global, n_total) = exchange_round(ctx, &f_local, x_local.rows() as u64, 0)?;
    fit_from_factor(&f_global, n_total as usize)
}

/// Distributed GLM: the IRLS loop with one all-to-all exchange per round.
pub fn run_glm_protocol<T: Transport>(
    ctx: &mut NodeCtx<T>,
    x_local: &DenseMatrix,
    y_local: &[f64],
    fam: Family,
    maxit: usize,
    tol: f64,
) -> Result<FitResult> {
    fit_glm_local_loop(x_local, y_local, fam, maxit, tol, |round, f, n| {
        exchange_round(ctx, f, n, round)
    })
}
