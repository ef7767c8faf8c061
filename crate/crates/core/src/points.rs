use crate::error::{invalid, Result};

pub const MAX_DIMENSION: usize = 16;
pub const MAX_AXIS_BITS: u8 = 32;
pub const MAX_TOTAL_BITS: u32 = 256;

/// Dimension and per-axis bit widths of a quantized domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundsSpec {
    bits: Vec<u8>,
}

impl BoundsSpec {
    pub fn new(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() || bits.len() > MAX_DIMENSION {
            return Err(invalid(format!(
                "dimension must be in 1..={MAX_DIMENSION}, got {}",
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b == 0 || b > MAX_AXIS_BITS) {
            return Err(invalid(format!("axis bit width {b} outside 1..=32")));
        }
        let spec = BoundsSpec { bits: bits.to_vec() };
        if spec.total_bits() > MAX_TOTAL_BITS {
            return Err(invalid(format!("total precision {} exceeds 256", spec.total_bits())));
        }
        Ok(spec)
    }

    /// `d` axes of `b` bits each.
    pub fn uniform(d: usize, b: u8) -> Result<Self> {
        Self::new(&vec![b; d])
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Q, the number of bits of one uncompressed point.
    pub fn total_bits(&self) -> u32 {
        self.bits.iter().map(|&b| u32::from(b)).sum()
    }

    /// Exclusive upper limit of coordinates on `axis`.
    pub fn extent(&self, axis: usize) -> u64 {
        1u64 << self.bits[axis]
    }

    pub fn contains(&self, point: &[u32]) -> bool {
        point.len() == self.dim()
            && point.iter().zip(&self.bits).all(|(&c, &b)| u64::from(c) < 1u64 << b)
    }
}

/// A multiset of points with integer coordinates inside a [`BoundsSpec`].
/// Coordinates are stored row-major: point `i` is `coords[i*d..(i+1)*d]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedPointSet {
    bounds: BoundsSpec,
    coords: Vec<u32>,
}

impl QuantizedPointSet {
    pub fn empty(bounds: BoundsSpec) -> Self {
        QuantizedPointSet { bounds, coords: Vec::new() }
    }

    pub fn from_flat(bounds: BoundsSpec, coords: Vec<u32>) -> Result<Self> {
        let d = bounds.dim();
        if !coords.len().is_multiple_of(d) {
            return Err(invalid(format!(
                "{} coordinates do not form whole {d}-dimensional points",
                coords.len()
            )));
        }
        for (i, p) in coords.chunks_exact(d).enumerate() {
            if !bounds.contains(p) {
                return Err(invalid(format!("point {i} {p:?} lies outside the bounds")));
            }
        }
        Ok(QuantizedPointSet { bounds, coords })
    }

    pub fn from_points<P: AsRef<[u32]>>(bounds: BoundsSpec, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * bounds.dim());
        for p in points {
            let p = p.as_ref();
            if p.len() != bounds.dim() {
                return Err(invalid(format!("point {p:?} has wrong dimension")));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(bounds, coords)
    }

    pub fn bounds(&self) -> &BoundsSpec {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.bounds.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[u32] {
        let d = self.bounds.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, u32> {
        self.coords.chunks_exact(self.bounds.dim())
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub(crate) fn push_unchecked(&mut self, point: &[u32]) {
        self.coords.extend_from_slice(point);
    }

    /// Points in lexicographic order; the canonical form of the multiset.
    pub fn sorted_points(&self) -> Vec<Vec<u32>> {
        let mut pts: Vec<Vec<u32>> = self.iter().map(<[u32]>::to_vec).collect();
        pts.sort_unstable();
        pts
    }

    /// Multiset equality: same bounds and same points regardless of order.
    pub fn same_multiset(&self, other: &Self) -> bool {
        self.bounds == other.bounds && self.len() == other.len() && self.sorted_points() == other.sorted_points()
    }

    /// Raw size in bits, `n * Q`.
    pub fn raw_bits(&self) -> u64 {
        self.len() as u64 * u64::from(self.bounds.total_bits())
    }
}
