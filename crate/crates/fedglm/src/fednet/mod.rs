//! The federation: message codec, transports, the all-to-all exchange
//! protocol, and an in-process simulation driver.

pub mod codec;
pub mod protocol;
pub mod sim;
pub mod transport;

pub use codec::{decode_message, encode_message, FactorMessage, HEADER_LEN};
pub use protocol::{
    exchange_round, run_glm_protocol, run_lm_protocol, NodeCtx, DEFAULT_ROUND_TIMEOUT,
};
pub use sim::{run_federated_glm, run_federated_glm_with_timeout, run_federated_lm};
pub use transport::{
    inproc_network, new_capture, InprocTransport, SocketTransport, TrafficCapture, Transport,
};
