//! Neighbor-density context model for split counts.
//!
//! Before a cell holding `p` points is split, the masses of the two cells
//! flanking it along the split axis are measured from what the decoder
//! already knows. Their ratio predicts the left-half count, and a discrete
//! Gaussian around that prediction replaces the uniform table over `0..=p`.
//!
//! Everything here is a function of decoder-visible state, and the floating
//! point steps use only correctly rounded IEEE operations (no libm calls), so
//! coder and decoder build identical tables.

use rustc_hash::FxHashMap;

use crate::arith::FreqTable;
use crate::cell::{CellBox, Coord, Schedule};
use crate::codec;
use crate::config::CodecConfig;
use crate::error::Result;
use crate::points::{BoundsSpec, QuantizedPointSet};

/// Total of every predicted table.
pub const PREDICTED_TOTAL: u32 = 1 << 16;

/// Cells with more points than this are coded with the uniform table; a
/// 2^16 total cannot give a Gaussian meaningful mass over more outcomes.
pub const MAX_PREDICTED_COUNT: u64 = (PREDICTED_TOTAL as u64 / 2) - 1;

/// Masses of the two cells flanking a split.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeighborView {
    pub left: f64,
    pub right: f64,
}

impl NeighborView {
    pub fn is_empty(&self) -> bool {
        self.left + self.right <= 0.0
    }
}

/// Model parameters. They are fixed by the container version and are not
/// written to any header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionParams {
    /// The Gaussian's standard deviation is `max(1, sigma_scale * sqrt(p))`.
    pub sigma_scale: f64,
    /// Frequency given to every outcome before the Gaussian mass is added.
    pub min_freq: u32,
}

impl Default for PredictionParams {
    fn default() -> Self {
        PredictionParams { sigma_scale: 1.0, min_freq: 1 }
    }
}

impl PredictionParams {
    pub fn sigma(&self, p: u64) -> f64 {
        (self.sigma_scale * (p as f64).sqrt()).max(1.0)
    }
}

/// `round(p * L / (L + R))` with halves rounded up, or `None` without context.
pub fn predicted_center(p: u64, view: &NeighborView) -> Option<u64> {
    if view.is_empty() {
        return None;
    }
    let exact = p as f64 * view.left / (view.left + view.right);
    Some(((exact + 0.5).floor() as u64).min(p))
}

/// Split table for a cell of `p` points given its neighborhood.
pub fn predicted_table(p: u64, view: &NeighborView, params: &PredictionParams) -> Result<FreqTable> {
    match predicted_center(p, view) {
        Some(mu) if p <= MAX_PREDICTED_COUNT => Ok(gaussian_table(p, mu, params)),
        _ => crate::arith::uniform_table(p + 1),
    }
}

fn gaussian_table(p: u64, mu: u64, params: &PredictionParams) -> FreqTable {
    let len = (p + 1) as usize;
    let mu = mu as usize;
    let sigma = params.sigma(p);
    let two_var = 2.0 * sigma * sigma;
    let max_dist = mu.max(len - 1 - mu);

    // Weight by distance from the center; summed pairwise by distance so the
    // total is the same for a table and its mirror image.
    let weights: Vec<f64> = (0..=max_dist).map(|d| exp_neg((d * d) as f64 / two_var)).collect();
    let mut mass = weights[0];
    for (d, &w) in weights.iter().enumerate().skip(1) {
        let below = if d <= mu { w } else { 0.0 };
        let above = if mu + d < len { w } else { 0.0 };
        mass += below + above;
    }

    let floor_total = params.min_freq as u64 * len as u64;
    let budget = (u64::from(PREDICTED_TOTAL) - floor_total) as f64;
    let scale = budget / mass;
    let mut freqs: Vec<u32> = (0..len)
        .map(|k| params.min_freq + (weights[k.abs_diff(mu)] * scale) as u32)
        .collect();
    let sum: i64 = freqs.iter().map(|&f| i64::from(f)).sum();
    // the center carries the largest weight; it absorbs the rounding slack
    freqs[mu] = (i64::from(freqs[mu]) + i64::from(PREDICTED_TOTAL) - sum) as u32;
    FreqTable::from_freqs(&freqs).expect("predicted table satisfies the table invariants")
}

/// `e^-x` for `x >= 0` using only basic IEEE operations.
pub(crate) fn exp_neg(x: f64) -> f64 {
    // ln 2 split so that k * LN2_HI is exact
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    if x.is_nan() || x > 700.0 {
        return 0.0;
    }
    let k = (x / std::f64::consts::LN_2).floor();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut acc = 1.0;
    for i in (1..=20).rev() {
        acc = 1.0 - r / f64::from(i) * acc;
    }
    acc * f64::from_bits(((1023 - k as i64) as u64) << 52)
}

/// Box of `cell` shifted by one cell width along `axis`, if it stays inside
/// the root.
fn flank(cell: &CellBox, bounds: &BoundsSpec, axis: usize, towards_upper: bool) -> Option<CellBox> {
    let side = cell.side(axis);
    let lower = u64::from(cell.lower[axis]);
    let shifted = if towards_upper {
        (lower + side < bounds.extent(axis)).then_some(lower + side)?
    } else {
        lower.checked_sub(side)?
    };
    let mut b = cell.clone();
    b.lower[axis] = shifted as u32;
    Some(b)
}

fn overlap_fraction(known: &CellBox, query: &CellBox) -> f64 {
    let mut frac = 1.0;
    for a in 0..known.dim() {
        let lo = u64::from(known.lower[a]).max(u64::from(query.lower[a]));
        let hi = known.upper(a).min(query.upper(a));
        if hi <= lo {
            return 0.0;
        }
        frac *= (hi - lo) as f64 / known.side(a) as f64;
    }
    frac
}

/// Flanking masses of `cell` along `axis`, computed directly from a list of
/// known cells: each contributes its count times the fraction of its volume
/// inside the flanking box.
pub fn neighbor_view(cell: &CellBox, axis: usize, bounds: &BoundsSpec, known: &[(CellBox, u64)]) -> NeighborView {
    let mass = |q: Option<CellBox>| {
        q.map_or(0.0, |q| known.iter().map(|(k, c)| *c as f64 * overlap_fraction(k, &q)).sum())
    };
    NeighborView {
        left: mass(flank(cell, bounds, axis, false)),
        right: mass(flank(cell, bounds, axis, true)),
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    count: u64,
    split: bool,
}

/// Every cell created so far, keyed by level and lower corner.
///
/// All cells of one level share a shape, so a flanking box is itself a cell
/// position on the query level. Its mass is the count of that cell if it was
/// ever created. Otherwise the deepest created ancestor decides: a split
/// ancestor means the flank is empty, an unsplit one contributes its count
/// scaled by the volume ratio.
#[derive(Clone, Debug, Default)]
pub(crate) struct KnownCells {
    levels: Vec<FxHashMap<Coord, Node>>,
}

impl KnownCells {
    pub fn new(depth: usize) -> Self {
        KnownCells { levels: vec![FxHashMap::default(); depth + 1] }
    }

    pub fn insert(&mut self, level: usize, lower: Coord, count: u64) {
        self.levels[level].insert(lower, Node { count, split: false });
    }

    pub fn mark_split(&mut self, level: usize, lower: &[u32]) {
        if let Some(n) = self.levels[level].get_mut(lower) {
            n.split = true;
        }
    }

    fn mass(&self, schedule: &Schedule, level: usize, lower: &[u32]) -> f64 {
        if let Some(n) = self.levels[level].get(lower) {
            return n.count as f64;
        }
        // every ancestor of a created cell was created too, so the deepest
        // created ancestor is found by bisection
        let (mut lo, mut hi) = (0, level);
        let mut found = None;
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.levels[mid].get(&schedule.ancestor_corner(mid, lower)) {
                Some(n) => {
                    found = Some((mid, *n));
                    lo = mid + 1;
                }
                None => hi = mid,
            }
        }
        match found {
            Some((_, n)) if n.split => 0.0,
            Some((anc, n)) => n.count as f64 * 0.5f64.powi((level - anc) as i32),
            None => 0.0,
        }
    }

    pub fn view(&self, schedule: &Schedule, bounds: &BoundsSpec, level: usize, lower: &[u32]) -> NeighborView {
        let axis = schedule.axis(level);
        let side = 1u64 << schedule.remaining(level)[axis];
        let at = u64::from(lower[axis]);
        let mut probe: Coord = lower.iter().copied().collect();
        let mut side_mass = |pos: Option<u64>| {
            pos.map_or(0.0, |pos| {
                probe[axis] = pos as u32;
                self.mass(schedule, level, &probe)
            })
        };
        let left = side_mass(at.checked_sub(side));
        let right = side_mass(Some(at + side).filter(|&p| p < bounds.extent(axis)));
        NeighborView { left, right }
    }
}

/// Relative size reduction, in percent, from enabling prediction.
pub fn predicted_cost_gain(points: &QuantizedPointSet, config: CodecConfig) -> Result<f64> {
    let off = codec::encode(points, &config.with_prediction(false))?.len() as f64;
    let on = codec::encode(points, &config.with_prediction(true))?.len() as f64;
    Ok((1.0 - on / off) * 100.0)
}
