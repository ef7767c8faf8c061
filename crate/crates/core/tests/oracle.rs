//! The coder against a straightforward simulation of the subdivision
//! listings: plain vectors of points per cell, FIFO order, left count coded.

use std::collections::VecDeque;

use dgpc::{encode_traced, AxisPolicy, BoundsSpec, CodecConfig, QuantizedPointSet, Traversal};

struct SimCell {
    lower: Vec<u64>,
    side: Vec<u64>,
    points: Vec<Vec<u64>>,
}

/// Splits round-robin over axes that are still wider than one unit.
fn simulate(bits: &[u8], points: &[Vec<u64>]) -> Vec<(u64, u64)> {
    let d = bits.len();
    let mut out = Vec::new();
    let mut list = VecDeque::new();
    let root = SimCell { lower: vec![0; d], side: bits.iter().map(|&b| 1u64 << b).collect(), points: points.to_vec() };
    if points.is_empty() {
        return out;
    }
    list.push_back((root, vec![0u32; d]));
    while let Some((cell, done)) = list.pop_front() {
        let axis = (0..d).filter(|&a| cell.side[a] > 1).min_by_key(|&a| (done[a], a)).unwrap();
        let half = cell.side[axis] / 2;
        let mid = cell.lower[axis] + half;
        let (l, r): (Vec<_>, Vec<_>) = cell.points.iter().cloned().partition(|p| p[axis] < mid);
        out.push((cell.points.len() as u64, l.len() as u64));
        let mut side = cell.side.clone();
        side[axis] = half;
        let mut done2 = done.clone();
        done2[axis] += 1;
        let unit = side.iter().all(|&s| s == 1);
        for (lower_axis, pts) in [(cell.lower[axis], l), (mid, r)] {
            if pts.is_empty() || unit {
                continue;
            }
            let mut lower = cell.lower.clone();
            lower[axis] = lower_axis;
            list.push_back((SimCell { lower, side: side.clone(), points: pts }, done2.clone()));
        }
    }
    out
}

fn coded(bits: &[u8], points: &[Vec<u64>]) -> Vec<(u64, u64)> {
    let rows: Vec<Vec<u32>> = points.iter().map(|p| p.iter().map(|&c| c as u32).collect()).collect();
    let set = QuantizedPointSet::from_points(BoundsSpec::new(bits).unwrap(), &rows).unwrap();
    let (_, trace) = encode_traced(&set, &CodecConfig::default()).unwrap();
    trace.iter().map(|e| (e.count, e.left)).collect()
}

#[test]
fn seven_points_on_a_segment() {
    let pts: Vec<Vec<u64>> = [0, 1, 1, 3, 5, 6, 7].iter().map(|&x| vec![x]).collect();
    let expected = vec![(7, 4), (4, 3), (3, 1), (3, 1), (1, 0), (1, 0), (2, 1)];
    assert_eq!(simulate(&[3], &pts), expected);
    assert_eq!(coded(&[3], &pts), expected);
}

#[test]
fn random_sets_match_simulation() {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for case in 0..60 {
        let d = 1 + (case % 4);
        let bits: Vec<u8> = (0..d).map(|_| 1 + (next() % 6) as u8).collect();
        let n = (next() % 40) as usize;
        let pts: Vec<Vec<u64>> = (0..n).map(|_| bits.iter().map(|&b| next() % (1 << b)).collect()).collect();
        assert_eq!(coded(&bits, &pts), simulate(&bits, &pts), "bits {bits:?}");
    }
}

#[test]
fn traversal_and_axis_policy_change_the_order_only() {
    let pts: Vec<Vec<u32>> = (0..50u32).map(|i| vec![i * 7 % 32, i * 13 % 8]).collect();
    let set = QuantizedPointSet::from_points(BoundsSpec::new(&[5, 3]).unwrap(), &pts).unwrap();
    let mut lens = Vec::new();
    for policy in [AxisPolicy::RoundRobin, AxisPolicy::LongestAxisFirst, AxisPolicy::AxisMajor] {
        for traversal in [Traversal::BreadthFirst, Traversal::DepthFirst] {
            let config = CodecConfig::default().with_axis_policy(policy).with_traversal(traversal);
            let (_, trace) = encode_traced(&set, &config).unwrap();
            // every split is nonempty and the root comes first
            assert_eq!((trace[0].count, trace[0].level), (50, 0));
            assert!(trace.iter().all(|e| e.count > 0 && e.left <= e.count && e.level < 8));
            lens.push(trace.len());
        }
    }
    // the number of splits depends on the axis schedule, never on traversal
    for pair in lens.chunks(2) {
        assert_eq!(pair[0], pair[1]);
    }
}
