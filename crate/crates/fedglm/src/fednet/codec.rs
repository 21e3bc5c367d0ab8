//! Wire codec for factor messages.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! magic "FGLM" (4) | version u8 = 1 | msg_type u8 (1 = factor) |
//! round u32 | node_id u32 | n_local u64 | p u32 |
//! payload: (p+1)(p+2)/2 f64, packed upper triangle, row-major
//! ```

use crate::error::{Error, Result};
use crate::linalg::TriangularFactor;

pub const MAGIC: &[u8; 4] = b"FGLM";
pub const VERSION: u8 = 1;
pub const MSG_TYPE_FACTOR: u8 = 1;
/// Fixed header size in bytes.
pub const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4 + 8 + 4;

/// Envelope for one triangular factor in transit.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMessage {
    pub node_id: u32,
    pub round: u32,
    pub n_local: u64,
    pub factor: TriangularFactor,
}

pub fn encode_message(m: &FactorMessage) -> Vec<u8> {
    let packed = m.factor.packed();
    let mut out = Vec::with_capacity(HEADER_LEN + packed.len() * 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(MSG_TYPE_FACTOR);
    out.extend_from_slice(&m.round.to_le_bytes());
    out.extend_from_slice(&m.node_id.to_le_bytes());
    out.extend_from_slice(&m.n_local.to_le_bytes());
    out.extend_from_slice(&(m.factor.p() as u32).to_le_bytes());
    for v in packed {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn err_at(offset: usize, what: &str) -> Error {
    Error::Codec {
        offset,
        what: what.into(),
    }
}

pub fn decode_message(bytes: &[u8]) -> Result<FactorMessage> {
    if bytes.len() < HEADER_LEN {
        return Err(err_at(bytes.len(), "truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(err_at(0, "bad magic"));
    }
    if bytes[4] != VERSION {
        return Err(err_at(4, "unsupported version"));
    }
    if bytes[5] != MSG_TYPE_FACTOR {
        return Err(err_at(5, "unknown message type"));
    }
    let round = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let node_id = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    let n_local = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let p = u32::from_le_bytes(bytes[22..26].try_into().unwrap()) as usize;
    let tri_len = (p + 1) * (p + 2) / 2;
    let expected = HEADER_LEN + tri_len * 8;
    if bytes.len() < expected {
        return Err(err_at(bytes.len(), "truncated payload"));
    }
    if bytes.len() > expected {
        return Err(err_at(expected, "trailing bytes"));
    }
    let mut packed = Vec::with_capacity(tri_len);
    for k in 0..tri_len {
        let off = HEADER_LEN + k * 8;
        let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(err_at(off, "non-finite factor entry"));
        }
        packed.push(v);
    }
    let factor = TriangularFactor::from_packed(p, packed)
        .map_err(|_| err_at(HEADER_LEN, "inconsistent payload length"))?;
    Ok(FactorMessage {
        node_id,
        round,
        n_local,
        factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_message(p: usize) -> FactorMessage {
        let dim = p + 1;
        let packed: Vec<f64> = (0..dim * (dim + 1) / 2).map(|k| k as f64 * 0.5).collect();
        FactorMessage {
            node_id: 3,
            round: 7,
            n_local: 1000,
            factor: TriangularFactor::from_packed(p, packed).unwrap(),
        }
    }

    #[test]
    fn round_trip_identity() {
        let m = sample_message(4);
        let bytes = encode_message(&m);
        assert_eq!(decode_message(&bytes).unwrap(), m);
    }

    #[test]
    fn p2_message_size() {
        let m = sample_message(2);
        let bytes = encode_message(&m);
        // 4+1+1+4+4+8+4 header bytes plus 6 triangle floats
        assert_eq!(bytes.len(), 26 + 6 * 8);
    }

    #[test]
    fn truncation_reports_offset() {
        let m = sample_message(2);
        let bytes = encode_message(&m);
        for cut in [3, 10, 26, 40] {
            match decode_message(&bytes[..cut]) {
                Err(Error::Codec { offset, .. }) => assert_eq!(offset, cut),
                other => panic!("expected codec error, got {:?}", other),
            }
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let m = sample_message(1);
        let mut bytes = encode_message(&m);
        bytes[0] = b'X';
        assert!(matches!(
            decode_message(&bytes),
            Err(Error::Codec { offset: 0, .. })
        ));
        let mut bytes = encode_message(&m);
        bytes[4] = 9;
        assert!(matches!(
            decode_message(&bytes),
            Err(Error::Codec { offset: 4, .. })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let m = sample_message(1);
        let mut bytes = encode_message(&m);
        let expected = bytes.len();
        bytes.push(0);
        match decode_message(&bytes) {
            Err(Error::Codec { offset, .. }) => assert_eq!(offset, expected),
            other => panic!("expected codec error, got {:?}", other),
        }
    }
}
