//! Breadth-first decoding one wave at a time.
//!
//! In a breadth-first stream every cell of tree level `k` is coded before any
//! cell of level `k + 1`. After each complete level the list of cells and
//! counts is a [`Snapshot`]: a version of the point set at uniform precision.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::Decoder;
use crate::cell::{CellBox, Coord};
use crate::codec::{split_corners, DecCell, SplitContext};
use crate::config::{RepresentativePolicy, Traversal};
use crate::container::Header;
use crate::error::{Error, Result};
use crate::points::{BoundsSpec, QuantizedPointSet};

/// Cells and counts known after a complete wave.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub bounds: BoundsSpec,
    /// Tree level of every cell in the snapshot.
    pub level: usize,
    /// Bits resolved on each axis.
    pub precision: Vec<u8>,
    pub cells: Vec<(CellBox, u64)>,
}

impl Snapshot {
    pub fn total_count(&self) -> u64 {
        self.cells.iter().map(|(_, c)| c).sum()
    }

    pub fn is_final(&self) -> bool {
        self.precision.as_slice() == self.bounds.bits()
    }

    /// The box of the snapshot holding `point`, if any.
    pub fn cell_of(&self, point: &[u32]) -> Option<&CellBox> {
        self.cells.iter().map(|(b, _)| b).find(|b| b.contains(point))
    }
}

/// Incremental decoder yielding one [`Snapshot`] per level, starting with the
/// root (level 0) and ending with unit cells (level Q). An empty point set
/// yields a single empty snapshot at full precision.
pub struct WaveDecoder<'a> {
    header: Header,
    dec: Option<Decoder<'a>>,
    ctx: SplitContext,
    queue: VecDeque<DecCell>,
    level: usize,
    started: bool,
    done: bool,
}

impl<'a> WaveDecoder<'a> {
    pub fn new(stream: &'a [u8]) -> Result<Self> {
        let (header, payload) = Header::parse(stream)?;
        if header.config.traversal != Traversal::BreadthFirst {
            return Err(Error::Unsupported(
                "wave decoding needs a breadth-first stream; this one is depth-first".into(),
            ));
        }
        let dec = Decoder::new(payload)?;
        let mut ctx = SplitContext::new(&header.bounds, &header.config);
        let n = u64::from(header.count);
        let mut queue = VecDeque::new();
        if n > 0 {
            ctx.add_root(n);
            queue.push_back(DecCell { level: 0, lower: Coord::from_elem(0, header.bounds.dim()), count: n });
        }
        Ok(WaveDecoder { header, dec: Some(dec), ctx, queue, level: 0, started: false, done: false })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn depth(&self) -> usize {
        self.ctx.schedule().depth()
    }

    fn snapshot(&self) -> Snapshot {
        let bounds = self.header.bounds.clone();
        let level = if self.header.count == 0 { self.depth() } else { self.level };
        let remaining = self.ctx.schedule().remaining(level);
        let precision = bounds.bits().iter().zip(remaining).map(|(b, r)| b - r).collect();
        let cells = self
            .queue
            .iter()
            .map(|c| (self.ctx.schedule().cell_box(c.level, &c.lower), c.count))
            .collect();
        Snapshot { bounds, level, precision, cells }
    }

    /// Decodes the next complete level.
    fn advance(&mut self) -> Result<()> {
        let depth = self.depth();
        let mut dec = self.dec.take().expect("decoder present while waves remain");
        let wave = self.queue.len();
        for _ in 0..wave {
            let cell = self.queue.pop_front().unwrap();
            let left = self.ctx.decode_split(&mut dec, cell.level, &cell.lower, cell.count, None)?;
            let (ll, rl) = split_corners(self.ctx.schedule(), cell.level, &cell.lower);
            let child = cell.level + 1;
            let right = cell.count - left;
            // terminal children stay in the list so the last wave holds them
            if left > 0 {
                self.queue.push_back(DecCell { level: child, lower: ll, count: left });
            }
            if right > 0 {
                self.queue.push_back(DecCell { level: child, lower: rl, count: right });
            }
        }
        self.level += 1;
        if self.level == depth {
            dec.finish()?;
        } else {
            self.dec = Some(dec);
        }
        Ok(())
    }

    /// Decodes up to the first wave at or beyond `level` and returns it.
    pub fn decode_to_level(&mut self, level: usize) -> Result<Snapshot> {
        let mut last = None;
        for snap in self.by_ref() {
            let snap = snap?;
            let reached = snap.level >= level;
            last = Some(snap);
            if reached {
                break;
            }
        }
        last.ok_or_else(|| Error::InvalidArgument("no waves left to decode".into()))
    }
}

impl Iterator for WaveDecoder<'_> {
    type Item = Result<Snapshot>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.header.count == 0 {
                self.done = true;
                let res = self.dec.take().unwrap().finish().map(|_| self.snapshot());
                return Some(res);
            }
            return Some(Ok(self.snapshot()));
        }
        if self.level >= self.depth() {
            self.done = true;
            return None;
        }
        match self.advance() {
            Ok(()) => Some(Ok(self.snapshot())),
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Every wave of a breadth-first stream.
pub fn decode_waves(stream: &[u8]) -> Result<Vec<Snapshot>> {
    WaveDecoder::new(stream)?.collect()
}

/// Places `count` points in every snapshot cell according to `policy`.
/// `seed` only affects [`RepresentativePolicy::UniformRandom`].
pub fn representative_points(snapshot: &Snapshot, policy: RepresentativePolicy, seed: u64) -> QuantizedPointSet {
    let mut out = QuantizedPointSet::empty(snapshot.bounds.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = snapshot.bounds.dim();
    let mut point = vec![0u32; d];
    for (cell, count) in &snapshot.cells {
        match policy {
            RepresentativePolicy::Center => {
                for (a, p) in point.iter_mut().enumerate() {
                    *p = (u64::from(cell.lower[a]) + cell.side(a) / 2) as u32;
                }
                for _ in 0..*count {
                    out.push_unchecked(&point);
                }
            }
            RepresentativePolicy::UniformRandom => {
                for _ in 0..*count {
                    for (a, p) in point.iter_mut().enumerate() {
                        *p = (u64::from(cell.lower[a]) + rng.gen_range(0..cell.side(a))) as u32;
                    }
                    out.push_unchecked(&point);
                }
            }
            RepresentativePolicy::RegularGrid => grid_points(cell, *count, &mut point, &mut out),
        }
    }
    out
}

/// `count` points on the smallest `g^k` lattice (over the `k` axes of the
/// cell wider than one) with at least `count` sites, filled in row-major
/// order. Lattice site `j` on an axis of side `s` sits at `(2j + 1) s / 2g`.
fn grid_points(cell: &CellBox, count: u64, point: &mut [u32], out: &mut QuantizedPointSet) {
    let axes: Vec<usize> = (0..cell.dim()).filter(|&a| cell.side(a) > 1).collect();
    let g = lattice_size(count, axes.len() as u32);
    point.copy_from_slice(&cell.lower);
    for mut j in 0..count {
        for &a in &axes {
            let digit = u128::from(j % g);
            j /= g;
            let offset = (2 * digit + 1) * u128::from(cell.side(a)) / (2 * u128::from(g));
            point[a] = cell.lower[a] + offset as u32;
        }
        out.push_unchecked(point);
    }
}

/// Smallest `g >= 1` with `g^k >= count`.
fn lattice_size(count: u64, k: u32) -> u64 {
    if k == 0 || count <= 1 {
        return 1;
    }
    let covers = |g: u64| g.checked_pow(k).is_none_or(|v| v >= count);
    let mut g = (count as f64).powf(1.0 / f64::from(k)).floor().max(1.0) as u64;
    while g > 1 && covers(g - 1) {
        g -= 1;
    }
    while !covers(g) {
        g += 1;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{decode, encode};
    use crate::config::CodecConfig;

    fn snapshot_of(cells: Vec<(CellBox, u64)>, bits: &[u8]) -> Snapshot {
        let bounds = BoundsSpec::new(bits).unwrap();
        let precision = bits.iter().zip(&cells[0].0.remaining).map(|(b, r)| b - r).collect();
        Snapshot { bounds, level: 0, precision, cells }
    }

    #[test]
    fn center_policy() {
        let cell = CellBox { lower: vec![4, 0], remaining: vec![2, 2] };
        let snap = snapshot_of(vec![(cell, 3)], &[3, 3]);
        let pts = representative_points(&snap, RepresentativePolicy::Center, 0);
        assert_eq!(pts.sorted_points(), vec![vec![6, 2]; 3]);
    }

    #[test]
    fn unit_cell_center_is_its_corner() {
        let cell = CellBox { lower: vec![5], remaining: vec![0] };
        let snap = snapshot_of(vec![(cell, 2)], &[3]);
        let pts = representative_points(&snap, RepresentativePolicy::Center, 0);
        assert_eq!(pts.sorted_points(), vec![vec![5], vec![5]]);
    }

    #[test]
    fn uniform_policy_is_seeded() {
        let cell = CellBox { lower: vec![0, 64], remaining: vec![6, 6] };
        let snap = snapshot_of(vec![(cell, 50)], &[8, 8]);
        let a = representative_points(&snap, RepresentativePolicy::UniformRandom, 7);
        let b = representative_points(&snap, RepresentativePolicy::UniformRandom, 7);
        let c = representative_points(&snap, RepresentativePolicy::UniformRandom, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn grid_policy_spreads_points() {
        let cell = CellBox { lower: vec![8, 0], remaining: vec![3, 3] };
        let snap = snapshot_of(vec![(cell, 4)], &[4, 4]);
        let pts = representative_points(&snap, RepresentativePolicy::RegularGrid, 0);
        assert_eq!(pts.sorted_points(), vec![vec![10, 2], vec![10, 6], vec![14, 2], vec![14, 6]]);
        assert_eq!(lattice_size(5, 2), 3);
        assert_eq!(lattice_size(9, 2), 3);
        assert_eq!(lattice_size(1 << 40, 1), 1 << 40);
        assert_eq!(lattice_size(1_000_001, 3), 101);
    }

    #[test]
    fn waves_end_at_full_decode() {
        let b = BoundsSpec::new(&[5, 3]).unwrap();
        let pts: Vec<Vec<u32>> = (0..40u32).map(|i| vec![i * 13 % 32, i % 8]).collect();
        let s = QuantizedPointSet::from_points(b, &pts).unwrap();
        let bytes = encode(&s, &CodecConfig::default()).unwrap();
        let waves = decode_waves(&bytes).unwrap();
        assert_eq!(waves.len(), 9);
        assert!(waves.iter().all(|w| w.total_count() == 40));
        let last = waves.last().unwrap();
        assert!(last.is_final());
        let full = representative_points(last, RepresentativePolicy::Center, 0);
        assert!(full.same_multiset(&decode(&bytes).unwrap()));
    }

    #[test]
    fn empty_stream_has_one_wave() {
        let s = QuantizedPointSet::empty(BoundsSpec::new(&[4]).unwrap());
        let bytes = encode(&s, &CodecConfig::default()).unwrap();
        let waves = decode_waves(&bytes).unwrap();
        assert_eq!(waves.len(), 1);
        assert!(waves[0].cells.is_empty() && waves[0].is_final());
    }

    #[test]
    fn depth_first_streams_are_refused() {
        let s = QuantizedPointSet::from_points(BoundsSpec::new(&[4]).unwrap(), &[[3u32]]).unwrap();
        let bytes = encode(&s, &CodecConfig::default().with_traversal(Traversal::DepthFirst)).unwrap();
        assert!(matches!(WaveDecoder::new(&bytes), Err(Error::Unsupported(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn boxes_nest_and_points_stay_inside(
                pts in prop::collection::vec((0u32..64, 0u32..16), 1..60),
                policy in 0u8..3,
                seed in any::<u64>(),
            ) {
                let b = BoundsSpec::new(&[6, 4]).unwrap();
                let pts: Vec<[u32; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
                let s = QuantizedPointSet::from_points(b, &pts).unwrap();
                let bytes = encode(&s, &CodecConfig::default()).unwrap();
                let waves = decode_waves(&bytes).unwrap();
                for pair in waves.windows(2) {
                    for p in &pts {
                        let outer = pair[0].cell_of(p).unwrap();
                        let inner = pair[1].cell_of(p).unwrap();
                        prop_assert!(outer.contains_box(inner));
                    }
                }
                let policy = RepresentativePolicy::from_id(policy).unwrap();
                for w in &waves {
                    prop_assert_eq!(w.total_count(), pts.len() as u64);
                    let gen = representative_points(w, policy, seed);
                    prop_assert_eq!(gen.len(), pts.len());
                    // counts per cell are preserved
                    for (cell, count) in &w.cells {
                        let inside = gen.iter().filter(|p| cell.contains(p)).count() as u64;
                        prop_assert_eq!(inside, *count);
                    }
                }
            }
        }
    }
}
