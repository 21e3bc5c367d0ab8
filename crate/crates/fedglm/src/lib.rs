//! Federated linear and generalized linear models.
//!
//! Nodes fit ordinary least squares and iteratively reweighted least squares
//! without ever pooling raw observations: each node reduces its local data to
//! an augmented upper-triangular QR factor, exchanges only that factor with
//! its peers, and merges the set into a global factor that yields exactly the
//! coefficients, standard errors, and residual sum of squares a centralized
//! fit on the pooled data would produce.
//!
//! Module map:
//! - [`linalg`]: dense matrices, Householder QR, Givens row appends, factor
//!   merging, triangular solves.
//! - [`lm`]: least-squares fits from a factor, plus streaming row updates.
//! - [`glm`]: families, links, the IRLS transform and convergence rule, and
//!   the round-driven fitting loop.
//! - [`fednet`]: wire codec, in-process and TCP transports, the barrier
//!   exchange protocol, and a threaded simulation driver.
//! - [`ingest`]: CSV parsing, schemas, design matrices, partitioning, and
//!   synthetic data generation.
//! - [`experiment`]: distributed-vs-centralized agreement grids.
//! - [`oracle`]: independent reference implementations used by the tests.
//! - [`cli`]: the `fedglm` command line.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod fednet;
pub mod glm;
pub mod ingest;
pub mod linalg;
pub mod lm;
pub mod oracle;

pub use error::{Error, Result};
pub use glm::{fit_glm, Family, FamilyKind, LinkKind};
pub use linalg::{DenseMatrix, TriangularFactor};
pub use lm::{fit_lm, FitResult, StreamState};
