//! Container header.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DGPC"
//! 4       1     version (1)
//! 5       1     d
//! 6       d     b_i, one byte per axis
//! 6+d     1     flags: bit0 prediction, bit1 depth-first, bit2 bounds block present
//! 7+d     1     axis policy id
//! 8+d     1     representative policy id
//! 9+d     4     n, big-endian
//! 13+d    16d   optional: (lo_i, hi_i) per axis, IEEE-754 f64 big-endian
//! ...           arithmetic payload to the end
//! ```

use crate::config::{AxisPolicy, CodecConfig, RepresentativePolicy, Traversal};
use crate::error::{Error, Result};
use crate::points::BoundsSpec;

pub const MAGIC: &[u8; 4] = b"DGPC";
pub const VERSION: u8 = 1;

const FLAG_PREDICTION: u8 = 1 << 0;
const FLAG_DEPTH_FIRST: u8 = 1 << 1;
const FLAG_DEQUANT: u8 = 1 << 2;

/// Real-valued range of each axis, used to map quantized coordinates back.
#[derive(Clone, Debug, PartialEq)]
pub struct Dequantization {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub bounds: BoundsSpec,
    pub config: CodecConfig,
    pub count: u32,
    pub dequantization: Option<Dequantization>,
}

impl Header {
    pub fn encoded_len(&self) -> usize {
        let d = self.bounds.dim();
        13 + d + if self.dequantization.is_some() { 16 * d } else { 0 }
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.bounds.dim() as u8);
        out.extend_from_slice(self.bounds.bits());
        let mut flags = 0;
        if self.config.prediction {
            flags |= FLAG_PREDICTION;
        }
        if self.config.traversal == Traversal::DepthFirst {
            flags |= FLAG_DEPTH_FIRST;
        }
        if self.dequantization.is_some() {
            flags |= FLAG_DEQUANT;
        }
        out.push(flags);
        out.push(self.config.axis_policy.id());
        out.push(self.config.representative.id());
        out.extend_from_slice(&self.count.to_be_bytes());
        if let Some(dq) = &self.dequantization {
            for (lo, hi) in dq.lo.iter().zip(&dq.hi) {
                out.extend_from_slice(&lo.to_be_bytes());
                out.extend_from_slice(&hi.to_be_bytes());
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out);
        out
    }

    /// Parses a header, returning it with the remaining bytes (the payload).
    pub fn parse(bytes: &[u8]) -> Result<(Header, &[u8])> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let d = usize::from(r.u8()?);
        let bits = r.take(d)?.to_vec();
        let bounds = BoundsSpec::new(&bits).map_err(|e| Error::Format(e.to_string()))?;
        let flags = r.u8()?;
        if flags & !(FLAG_PREDICTION | FLAG_DEPTH_FIRST | FLAG_DEQUANT) != 0 {
            return Err(Error::Format(format!("unknown flag bits {flags:#04x}")));
        }
        let axis_policy = AxisPolicy::from_id(r.u8()?)?;
        let representative =
            RepresentativePolicy::from_id(r.u8()?).map_err(|e| Error::Format(e.to_string()))?;
        let count = u32::from_be_bytes(r.take(4)?.try_into().unwrap());
        let dequantization = if flags & FLAG_DEQUANT != 0 {
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            for _ in 0..d {
                lo.push(f64::from_be_bytes(r.take(8)?.try_into().unwrap()));
                hi.push(f64::from_be_bytes(r.take(8)?.try_into().unwrap()));
            }
            Some(Dequantization { lo, hi })
        } else {
            None
        };
        let config = CodecConfig {
            axis_policy,
            traversal: if flags & FLAG_DEPTH_FIRST != 0 {
                Traversal::DepthFirst
            } else {
                Traversal::BreadthFirst
            },
            prediction: flags & FLAG_PREDICTION != 0,
            representative,
        };
        let header = Header { bounds, config, count, dequantization };
        Ok((header, &bytes[r.pos..]))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Truncated);
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Header {
        Header {
            bounds: BoundsSpec::new(&[10, 10, 6]).unwrap(),
            config: CodecConfig {
                axis_policy: AxisPolicy::LongestAxisFirst,
                traversal: Traversal::DepthFirst,
                prediction: true,
                representative: RepresentativePolicy::RegularGrid,
            },
            count: 3721,
            dequantization: Some(Dequantization { lo: vec![0.0, -1.5, 2.0], hi: vec![1.0, 1.5, 9.0] }),
        }
    }

    #[test]
    fn layout_is_bit_exact() {
        let mut h = sample();
        h.dequantization = None;
        let bytes = h.to_bytes();
        assert_eq!(
            bytes,
            [b'D', b'G', b'P', b'C', 1, 3, 10, 10, 6, 0b011, 1, 2, 0, 0, 0x0E, 0x89]
        );
        assert_eq!(bytes.len(), h.encoded_len());
    }

    #[test]
    fn parse_inverts_write() {
        let h = sample();
        let mut bytes = h.to_bytes();
        assert_eq!(bytes.len(), h.encoded_len());
        bytes.extend_from_slice(&[9, 9]);
        let (parsed, rest) = Header::parse(&bytes).unwrap();
        assert_eq!(parsed, h);
        assert_eq!(rest, &[9, 9]);
    }

    #[test]
    fn rejects_bad_input() {
        let bytes = sample().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Header::parse(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(Header::parse(&bad), Err(Error::Format(_))));
        assert!(matches!(Header::parse(&bytes[..7]), Err(Error::Truncated)));
        assert!(matches!(Header::parse(&bytes[..20]), Err(Error::Truncated)));
    }
}
