//! Size accounting against the uniform-distribution cost model.
//!
//! For `n` uniform points in a domain of `Q` bits, separating the points
//! costs at most `2.402 n` bits and localizing each isolated point costs
//! `Q - log2 n` one-bit splits, for a total of `n (Q - log2 n + 2.402)`.
//! Logarithms are real-valued, so non-power-of-two `n` are accepted.

use crate::codec::encode;
use crate::config::CodecConfig;
use crate::container::Header;
use crate::error::{invalid, Result};
use crate::points::QuantizedPointSet;

/// Upper bound on separation bits per point for uniform data.
pub const SEPARATION_BITS_PER_POINT: f64 = 2.402;

pub fn separation_bound(n: u64) -> f64 {
    SEPARATION_BITS_PER_POINT * n as f64
}

pub fn localization_bits(n: u64, q: u32) -> f64 {
    n as f64 * (f64::from(q) - (n as f64).log2())
}

pub fn theoretical_bits(n: u64, q: u32) -> f64 {
    n as f64 * (f64::from(q) - (n as f64).log2() + SEPARATION_BITS_PER_POINT)
}

/// `nQ / N`.
pub fn theoretical_factor(n: u64, q: u32) -> f64 {
    f64::from(q) / (f64::from(q) - (n as f64).log2() + SEPARATION_BITS_PER_POINT)
}

/// Raw size in bytes, `ceil(nQ / 8)`.
pub fn raw_bytes(n: u64, q: u32) -> u64 {
    (n * u64::from(q)).div_ceil(8)
}

/// Measured and predicted sizes of one encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub n: u64,
    pub q: u32,
    /// Arithmetic payload, excluding the header.
    pub payload_bits: u64,
    pub container_bytes: u64,
    pub raw_bits: u64,
    /// `raw_bits / payload_bits`.
    pub factor: f64,
    /// N.
    pub theoretical_bits: f64,
    /// N1.
    pub separation_bound: f64,
    /// N2.
    pub localization_bits: f64,
}

impl CostReport {
    pub fn from_container(points: &QuantizedPointSet, container: &[u8]) -> Result<Self> {
        let n = points.len() as u64;
        if n == 0 {
            return Err(invalid("cost report needs at least one point"));
        }
        let (_, payload) = Header::parse(container)?;
        let q = points.bounds().total_bits();
        let payload_bits = payload.len() as u64 * 8;
        let raw_bits = points.raw_bits();
        Ok(CostReport {
            n,
            q,
            payload_bits,
            container_bytes: container.len() as u64,
            raw_bits,
            factor: raw_bits as f64 / payload_bits as f64,
            theoretical_bits: theoretical_bits(n, q),
            separation_bound: separation_bound(n),
            localization_bits: localization_bits(n, q),
        })
    }

    pub fn bits_per_point(&self) -> f64 {
        self.payload_bits as f64 / self.n as f64
    }

    pub fn theoretical_bits_per_point(&self) -> f64 {
        self.theoretical_bits / self.n as f64
    }

    pub fn theoretical_factor(&self) -> f64 {
        self.raw_bits as f64 / self.theoretical_bits
    }

    pub fn raw_bytes(&self) -> u64 {
        self.raw_bits.div_ceil(8)
    }

    pub fn container_bits_per_point(&self) -> f64 {
        (self.container_bytes * 8) as f64 / self.n as f64
    }

    /// Raw size over the full container size.
    pub fn container_factor(&self) -> f64 {
        self.raw_bits as f64 / (self.container_bytes * 8) as f64
    }
}

/// Encodes `points` and reports measured against theoretical size.
pub fn cost_report(points: &QuantizedPointSet, config: &CodecConfig) -> Result<CostReport> {
    let bytes = encode(points, config)?;
    CostReport::from_container(points, &bytes)
}
