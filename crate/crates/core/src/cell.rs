//! Dyadic cells, cell splitting and the axis schedule.

use smallvec::SmallVec;

use crate::config::AxisPolicy;
use crate::error::{invalid, Result};
use crate::points::BoundsSpec;

pub(crate) type Coord = SmallVec<[u32; 4]>;

/// The box `[lower_i, lower_i + 2^remaining_i)` on every axis `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellBox {
    pub lower: Vec<u32>,
    pub remaining: Vec<u8>,
}

impl CellBox {
    /// The whole domain.
    pub fn root(bounds: &BoundsSpec) -> Self {
        CellBox {
            lower: vec![0; bounds.dim()],
            remaining: bounds.bits().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn side(&self, axis: usize) -> u64 {
        1u64 << self.remaining[axis]
    }

    /// Exclusive upper coordinate on `axis`.
    pub fn upper(&self, axis: usize) -> u64 {
        u64::from(self.lower[axis]) + self.side(axis)
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining.iter().all(|&r| r == 0)
    }

    pub fn contains(&self, point: &[u32]) -> bool {
        point.len() == self.dim()
            && (0..self.dim()).all(|a| self.lower[a] <= point[a] && u64::from(point[a]) < self.upper(a))
    }

    pub fn contains_box(&self, other: &CellBox) -> bool {
        (0..self.dim()).all(|a| self.lower[a] <= other.lower[a] && other.upper(a) <= self.upper(a))
    }

    /// Whether the box meets the inclusive region `[lo, hi]`.
    pub fn intersects(&self, lo: &[u32], hi: &[u32]) -> bool {
        (0..self.dim()).all(|a| u64::from(lo[a]) < self.upper(a) && self.lower[a] <= hi[a])
    }

    /// Bits resolved so far on each axis.
    pub fn precision(&self, bounds: &BoundsSpec) -> Vec<u8> {
        bounds.bits().iter().zip(&self.remaining).map(|(b, r)| b - r).collect()
    }

    /// Lower and upper halves along `axis`.
    pub fn split(&self, axis: usize) -> Result<(CellBox, CellBox)> {
        if axis >= self.dim() {
            return Err(invalid(format!("axis {axis} out of range")));
        }
        let r = self.remaining[axis];
        if r == 0 {
            return Err(invalid(format!("axis {axis} is exhausted")));
        }
        let mut left = self.clone();
        left.remaining[axis] = r - 1;
        let mut right = left.clone();
        right.lower[axis] += 1 << (r - 1);
        Ok((left, right))
    }
}

/// A cell on the coder side: its box, its count and the points it holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub cell_box: CellBox,
    pub count: u64,
    pub points: Vec<Vec<u32>>,
}

impl Cell {
    pub fn new(cell_box: CellBox, points: Vec<Vec<u32>>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !cell_box.contains(p)) {
            return Err(invalid(format!("point {p:?} lies outside the cell")));
        }
        Ok(Cell { cell_box, count: points.len() as u64, points })
    }
}

/// Halves `cell` along `axis`, distributing its points by coordinate.
pub fn split_cell(cell: &Cell, axis: usize) -> Result<(Cell, Cell)> {
    let (lb, rb) = cell.cell_box.split(axis)?;
    let (left, right): (Vec<_>, Vec<_>) = cell.points.iter().cloned().partition(|p| lb.contains(p));
    Ok((
        Cell { cell_box: lb, count: left.len() as u64, points: left },
        Cell { cell_box: rb, count: right.len() as u64, points: right },
    ))
}

/// The axis `policy` splits next for a box with the given remaining bits.
pub fn next_axis(cell: &CellBox, bounds: &BoundsSpec, policy: AxisPolicy) -> Result<usize> {
    choose_axis(bounds.bits(), &cell.remaining, policy)
        .ok_or_else(|| invalid("terminal cell has no axis left to split"))
}

fn choose_axis(bits: &[u8], remaining: &[u8], policy: AxisPolicy) -> Option<usize> {
    let live = (0..bits.len()).filter(|&a| remaining[a] > 0);
    match policy {
        AxisPolicy::RoundRobin => live.min_by_key(|&a| (bits[a] - remaining[a], a)),
        AxisPolicy::LongestAxisFirst => live.min_by_key(|&a| (std::cmp::Reverse(remaining[a]), a)),
        AxisPolicy::AxisMajor => live.min(),
    }
}

/// Split axes by tree level. Every policy depends only on the remaining
/// bits, which are the same for all cells of one level, so the whole tree
/// shares one schedule.
#[derive(Clone, Debug)]
pub struct Schedule {
    dim: usize,
    axes: Vec<u8>,
    /// `(Q + 1) * d` remaining-bit counts, row per level.
    remaining: Vec<u8>,
}

impl Schedule {
    pub fn new(bounds: &BoundsSpec, policy: AxisPolicy) -> Self {
        let dim = bounds.dim();
        let mut rem = bounds.bits().to_vec();
        let mut axes = Vec::with_capacity(bounds.total_bits() as usize);
        let mut remaining = rem.clone();
        while let Some(a) = choose_axis(bounds.bits(), &rem, policy) {
            axes.push(a as u8);
            rem[a] -= 1;
            remaining.extend_from_slice(&rem);
        }
        Schedule { dim, axes, remaining }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Depth of terminal cells (Q).
    pub fn depth(&self) -> usize {
        self.axes.len()
    }

    /// Split axis of a cell at `level`.
    pub fn axis(&self, level: usize) -> usize {
        usize::from(self.axes[level])
    }

    pub fn remaining(&self, level: usize) -> &[u8] {
        &self.remaining[level * self.dim..(level + 1) * self.dim]
    }

    pub fn cell_box(&self, level: usize, lower: &[u32]) -> CellBox {
        CellBox {
            lower: lower.to_vec(),
            remaining: self.remaining(level).to_vec(),
        }
    }

    /// Lower corner of the level-`level` ancestor of a cell with corner `lower`.
    pub(crate) fn ancestor_corner(&self, level: usize, lower: &[u32]) -> Coord {
        self.remaining(level)
            .iter()
            .zip(lower)
            .map(|(&r, &c)| if r >= 32 { 0 } else { c & !((1u32 << r) - 1) })
            .collect()
    }

    /// Level at which every axis has at least `precision[i]` resolved bits
    /// (clamped to the axis width).
    pub fn level_for_precision(&self, bounds: &BoundsSpec, precision: &[u8]) -> usize {
        (0..=self.depth())
            .find(|&level| {
                self.remaining(level)
                    .iter()
                    .zip(bounds.bits())
                    .zip(precision)
                    .all(|((&r, &b), &p)| b - r >= p.min(b))
            })
            .unwrap_or(self.depth())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(bits: &[u8]) -> BoundsSpec {
        BoundsSpec::new(bits).unwrap()
    }

    #[test]
    fn split_counts_points_by_half() {
        let b = bounds(&[2, 2]);
        let cell = Cell::new(CellBox::root(&b), vec![vec![0, 1], vec![3, 2]]).unwrap();
        let (l, r) = split_cell(&cell, 0).unwrap();
        assert_eq!((l.count, r.count), (1, 1));
        assert_eq!(l.cell_box.lower, vec![0, 0]);
        assert_eq!(r.cell_box.lower, vec![2, 0]);
        assert_eq!(l.cell_box.remaining, vec![1, 2]);
    }

    #[test]
    fn coincident_points_stay_together() {
        let b = bounds(&[1]);
        let cell = Cell::new(CellBox::root(&b), vec![vec![1]; 3]).unwrap();
        let (l, r) = split_cell(&cell, 0).unwrap();
        assert_eq!((l.count, r.count), (0, 3));
        assert!(r.cell_box.is_terminal());
        assert!(split_cell(&r, 0).is_err());
    }

    #[test]
    fn round_robin_cycles_axes() {
        let b = bounds(&[4, 4, 4]);
        let s = Schedule::new(&b, AxisPolicy::RoundRobin);
        assert_eq!((0..6).map(|l| s.axis(l)).collect::<Vec<_>>(), vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(s.depth(), 12);
    }

    #[test]
    fn exhausted_axes_are_skipped() {
        let b = bounds(&[8, 2]);
        let s = Schedule::new(&b, AxisPolicy::RoundRobin);
        let axes: Vec<_> = (0..s.depth()).map(|l| s.axis(l)).collect();
        assert_eq!(axes, vec![0, 1, 0, 1, 0, 0, 0, 0, 0, 0]);
        let mut cell = CellBox::root(&b);
        for &a in &axes {
            assert_eq!(next_axis(&cell, &b, AxisPolicy::RoundRobin).unwrap(), a);
            cell = cell.split(a).unwrap().0;
        }
        assert!(next_axis(&cell, &b, AxisPolicy::RoundRobin).is_err());
    }

    #[test]
    fn longest_axis_breaks_ties_low() {
        let b = bounds(&[3, 5, 5]);
        let cell = CellBox::root(&b);
        assert_eq!(next_axis(&cell, &b, AxisPolicy::LongestAxisFirst).unwrap(), 1);
        let s = Schedule::new(&b, AxisPolicy::LongestAxisFirst);
        assert_eq!((0..5).map(|l| s.axis(l)).collect::<Vec<_>>(), vec![1, 2, 1, 2, 0]);
    }

    #[test]
    fn axis_major_exhausts_in_order() {
        let b = bounds(&[2, 3]);
        let s = Schedule::new(&b, AxisPolicy::AxisMajor);
        assert_eq!((0..5).map(|l| s.axis(l)).collect::<Vec<_>>(), vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn precision_levels() {
        let b = bounds(&[10, 10, 6]);
        let s = Schedule::new(&b, AxisPolicy::RoundRobin);
        let level = s.level_for_precision(&b, &[6, 6, 6]);
        assert_eq!(level, 18);
        assert_eq!(s.remaining(level), &[4, 4, 0]);
        assert_eq!(s.level_for_precision(&b, &[32, 32, 32]), 26);
    }

    #[test]
    fn ancestor_corners_mask_low_bits() {
        let b = bounds(&[4, 4]);
        let s = Schedule::new(&b, AxisPolicy::RoundRobin);
        assert_eq!(s.ancestor_corner(2, &[7, 13]).as_slice(), &[0, 8]);
        assert_eq!(s.ancestor_corner(5, &[7, 13]).as_slice(), &[6, 12]);
        assert_eq!(s.ancestor_corner(0, &[7, 13]).as_slice(), &[0, 0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn children_partition_parent(
                pts in prop::collection::vec((0u32..64, 0u32..16), 0..40),
                axis in 0usize..2,
                depth in 0usize..4,
            ) {
                let b = bounds(&[6, 4]);
                let mut cell = Cell::new(CellBox::root(&b), pts.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap();
                // descend along the lower half a few levels first
                for _ in 0..depth {
                    let (l, r) = split_cell(&cell, 1 - axis).unwrap();
                    cell = if l.count >= r.count { l } else { r };
                }
                let (l, r) = split_cell(&cell, axis).unwrap();
                prop_assert_eq!(l.count + r.count, cell.count);
                prop_assert!(cell.cell_box.contains_box(&l.cell_box));
                prop_assert!(cell.cell_box.contains_box(&r.cell_box));
                prop_assert_eq!(l.cell_box.upper(axis), u64::from(r.cell_box.lower[axis]));
                prop_assert_eq!(l.cell_box.side(axis) * 2, cell.cell_box.side(axis));
                prop_assert!(l.points.iter().all(|p| l.cell_box.contains(p)));
                prop_assert!(r.points.iter().all(|p| r.cell_box.contains(p)));
            }
        }
    }
}
