//! Subdivision coder and decoder.
//!
//! Both sides keep an active list of cells, initially the root. Each step
//! pops the front cell, splits it along the schedule axis and codes the
//! number of points in the lower half under the current split table. Nonempty
//! children that are not yet unit cells go back into the list: at the back
//! (left, then right) for breadth-first coding, at the front for depth-first.
//! Point positions are never transmitted; they follow from the order of the
//! coded counts.

use std::collections::VecDeque;

use crate::arith::{Decoder, Encoder, FreqTable, MAX_TOTAL};
use crate::cell::{Coord, Schedule};
use crate::config::{CodecConfig, Traversal};
use crate::container::{Dequantization, Header};
use crate::error::{Error, Result};
use crate::points::{BoundsSpec, QuantizedPointSet};
use crate::prediction::{predicted_table, KnownCells, PredictionParams};

/// Counts above this many outcomes are coded in two stages.
const STAGE_SHIFT: u32 = 12;

/// One coded split, as seen by either side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitEvent {
    pub level: usize,
    pub lower: Vec<u32>,
    pub count: u64,
    pub left: u64,
    /// FNV-1a digest of the split table (zero for staged uniform coding).
    pub table_digest: u64,
}

fn digest(table: &FreqTable) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |v: u32| {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    mix(table.len());
    mix(table.total());
    if table.len() <= 1 << 16 {
        for s in 0..table.len() {
            mix(table.freq(s));
        }
    }
    h
}

/// Codes `left` out of `0..=count` with the uniform model, splitting into a
/// high and a low stage when `count + 1` exceeds the table limit.
pub fn encode_uniform_count(enc: &mut Encoder, count: u64, left: u64) -> Result<()> {
    if left > count {
        return Err(crate::error::invalid(format!("left count {left} exceeds {count}")));
    }
    let m = count + 1;
    if m <= u64::from(MAX_TOTAL) {
        return enc.encode(&FreqTable::uniform(m as u32)?, left as u32);
    }
    let (high_table, last) = staged_high_table(m)?;
    let high = left >> STAGE_SHIFT;
    enc.encode(&high_table, high as u32)?;
    let low_size = if high + 1 == u64::from(high_table.len()) { last } else { 1 << STAGE_SHIFT };
    enc.encode(&FreqTable::uniform(low_size)?, (left & ((1 << STAGE_SHIFT) - 1)) as u32)
}

pub fn decode_uniform_count(dec: &mut Decoder<'_>, count: u64) -> Result<u64> {
    let m = count + 1;
    if m <= u64::from(MAX_TOTAL) {
        return Ok(u64::from(dec.decode(&FreqTable::uniform(m as u32)?)?));
    }
    let (high_table, last) = staged_high_table(m)?;
    let high = u64::from(dec.decode(&high_table)?);
    let low_size = if high + 1 == u64::from(high_table.len()) { last } else { 1 << STAGE_SHIFT };
    let low = u64::from(dec.decode(&FreqTable::uniform(low_size)?)?);
    Ok((high << STAGE_SHIFT) | low)
}

/// High-stage table over buckets of 2^12 outcomes. Bucket weights are the
/// bucket sizes divided by four, so full buckets weigh 1024 and the partial
/// last bucket is rounded up. Returns the table and the last bucket's size.
fn staged_high_table(m: u64) -> Result<(FreqTable, u32)> {
    if m > 1 << 32 {
        return Err(Error::Unsupported(format!("{m} outcomes exceed 2^32")));
    }
    let buckets = ((m - 1) >> STAGE_SHIFT) + 1;
    let last = (m - ((buckets - 1) << STAGE_SHIFT)) as u32;
    let table = FreqTable::buckets(buckets as u32, 1 << (STAGE_SHIFT - 2), last.div_ceil(4))?;
    Ok((table, last))
}

/// Split-table selection shared by every coder and decoder of a stream.
pub(crate) struct SplitContext {
    bounds: BoundsSpec,
    schedule: Schedule,
    known: Option<KnownCells>,
    params: PredictionParams,
}

impl SplitContext {
    pub fn new(bounds: &BoundsSpec, config: &CodecConfig) -> Self {
        let schedule = Schedule::new(bounds, config.axis_policy);
        let known = config.prediction.then(|| KnownCells::new(schedule.depth()));
        SplitContext {
            bounds: bounds.clone(),
            schedule,
            known,
            params: PredictionParams::default(),
        }
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn add_root(&mut self, count: u64) {
        if let Some(k) = &mut self.known {
            k.insert(0, Coord::from_elem(0, self.bounds.dim()), count);
        }
    }

    /// Table for splitting the cell, or `None` for plain uniform coding.
    fn table(&self, level: usize, lower: &[u32], count: u64) -> Result<Option<FreqTable>> {
        match &self.known {
            Some(known) => {
                let view = known.view(&self.schedule, &self.bounds, level, lower);
                if view.is_empty() {
                    return Ok(None);
                }
                predicted_table(count, &view, &self.params).map(Some)
            }
            None => Ok(None),
        }
    }

    /// Records the outcome of a split: the parent is split, nonempty
    /// non-terminal children become known.
    fn observe(&mut self, level: usize, lower: &[u32], count: u64, left: u64) {
        let Some(known) = &mut self.known else { return };
        known.mark_split(level, lower);
        let child = level + 1;
        if child >= self.schedule.depth() {
            return;
        }
        let (l, r) = split_corners(&self.schedule, level, lower);
        if left > 0 {
            known.insert(child, l, left);
        }
        if count > left {
            known.insert(child, r, count - left);
        }
    }

    pub fn encode_split(
        &mut self,
        enc: &mut Encoder,
        level: usize,
        lower: &[u32],
        count: u64,
        left: u64,
        trace: Option<&mut Vec<SplitEvent>>,
    ) -> Result<()> {
        let table = self.table(level, lower, count)?;
        match &table {
            Some(t) => enc.encode(t, left as u32)?,
            None => encode_uniform_count(enc, count, left)?,
        }
        if let Some(tr) = trace {
            tr.push(self.event(level, lower, count, left, table.as_ref()));
        }
        self.observe(level, lower, count, left);
        Ok(())
    }

    pub fn decode_split(
        &mut self,
        dec: &mut Decoder<'_>,
        level: usize,
        lower: &[u32],
        count: u64,
        trace: Option<&mut Vec<SplitEvent>>,
    ) -> Result<u64> {
        let table = self.table(level, lower, count)?;
        let left = match &table {
            Some(t) => u64::from(dec.decode(t)?),
            None => decode_uniform_count(dec, count)?,
        };
        if let Some(tr) = trace {
            tr.push(self.event(level, lower, count, left, table.as_ref()));
        }
        self.observe(level, lower, count, left);
        Ok(left)
    }

    fn event(&self, level: usize, lower: &[u32], count: u64, left: u64, table: Option<&FreqTable>) -> SplitEvent {
        let table_digest = match table {
            Some(t) => digest(t),
            None if count < u64::from(MAX_TOTAL) => digest(&FreqTable::uniform(count as u32 + 1).unwrap()),
            None => 0,
        };
        SplitEvent { level, lower: lower.to_vec(), count, left, table_digest }
    }
}

/// Corners of the two children of a cell at `level`.
pub(crate) fn split_corners(schedule: &Schedule, level: usize, lower: &[u32]) -> (Coord, Coord) {
    let axis = schedule.axis(level);
    let half = 1u32 << (schedule.remaining(level)[axis] - 1);
    let left: Coord = Coord::from_slice(lower);
    let mut right = left.clone();
    right[axis] += half;
    (left, right)
}

fn push_children<T>(queue: &mut VecDeque<T>, traversal: Traversal, left: Option<T>, right: Option<T>) {
    match traversal {
        Traversal::BreadthFirst => {
            queue.extend(left);
            queue.extend(right);
        }
        Traversal::DepthFirst => {
            if let Some(r) = right {
                queue.push_front(r);
            }
            if let Some(l) = left {
                queue.push_front(l);
            }
        }
    }
}

struct EncCell {
    level: usize,
    lower: Coord,
    start: usize,
    end: usize,
}

/// Compresses `points` into a container.
pub fn encode(points: &QuantizedPointSet, config: &CodecConfig) -> Result<Vec<u8>> {
    encode_inner(points, config, None, None)
}

/// Like [`encode`], recording dequantization bounds in the header.
pub fn encode_with_dequantization(
    points: &QuantizedPointSet,
    config: &CodecConfig,
    dequantization: Dequantization,
) -> Result<Vec<u8>> {
    if dequantization.lo.len() != points.bounds().dim() || dequantization.hi.len() != points.bounds().dim() {
        return Err(crate::error::invalid("dequantization bounds must have one entry per axis"));
    }
    encode_inner(points, config, Some(dequantization), None)
}

/// Compresses `points`, also returning every coded split in coding order.
pub fn encode_traced(points: &QuantizedPointSet, config: &CodecConfig) -> Result<(Vec<u8>, Vec<SplitEvent>)> {
    let mut trace = Vec::new();
    let bytes = encode_inner(points, config, None, Some(&mut trace))?;
    Ok((bytes, trace))
}

pub(crate) fn header_for(points: &QuantizedPointSet, config: &CodecConfig) -> Result<Header> {
    let count = u32::try_from(points.len())
        .map_err(|_| Error::Unsupported(format!("{} points exceed the 32-bit count field", points.len())))?;
    Ok(Header {
        bounds: points.bounds().clone(),
        config: *config,
        count,
        dequantization: None,
    })
}

fn encode_inner(
    points: &QuantizedPointSet,
    config: &CodecConfig,
    dequantization: Option<Dequantization>,
    mut trace: Option<&mut Vec<SplitEvent>>,
) -> Result<Vec<u8>> {
    let mut header = header_for(points, config)?;
    header.dequantization = dequantization;
    let mut out = header.to_bytes();

    let bounds = points.bounds();
    let d = bounds.dim();
    let coords = points.coords();
    let mut ctx = SplitContext::new(bounds, config);
    let depth = ctx.schedule().depth();
    let mut enc = Encoder::new();
    let mut order: Vec<u32> = (0..points.len() as u32).collect();
    let mut queue = VecDeque::new();
    if !points.is_empty() {
        ctx.add_root(points.len() as u64);
        queue.push_back(EncCell {
            level: 0,
            lower: Coord::from_elem(0, d),
            start: 0,
            end: order.len(),
        });
    }

    while let Some(cell) = queue.pop_front() {
        let axis = ctx.schedule().axis(cell.level);
        let bit = ctx.schedule().remaining(cell.level)[axis] - 1;
        let slice = &mut order[cell.start..cell.end];
        let left = partition(slice, |i| (coords[i as usize * d + axis] >> bit) & 1 == 0);
        let count = slice.len() as u64;
        ctx.encode_split(&mut enc, cell.level, &cell.lower, count, left as u64, trace.as_deref_mut())?;

        let child = cell.level + 1;
        if child == depth {
            continue;
        }
        let (ll, rl) = split_corners(ctx.schedule(), cell.level, &cell.lower);
        let mid = cell.start + left;
        let l = (mid > cell.start).then(|| EncCell { level: child, lower: ll, start: cell.start, end: mid });
        let r = (cell.end > mid).then(|| EncCell { level: child, lower: rl, start: mid, end: cell.end });
        push_children(&mut queue, config.traversal, l, r);
    }

    out.extend_from_slice(&enc.finish());
    Ok(out)
}

/// Moves the elements satisfying `pred` to the front; returns their number.
pub(crate) fn partition(slice: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut first = 0;
    for i in 0..slice.len() {
        if pred(slice[i]) {
            slice.swap(first, i);
            first += 1;
        }
    }
    first
}

pub(crate) struct DecCell {
    pub level: usize,
    pub lower: Coord,
    pub count: u64,
}

/// Decompressed points together with the container header.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub header: Header,
    pub points: QuantizedPointSet,
}

pub fn decode(stream: &[u8]) -> Result<QuantizedPointSet> {
    Ok(decode_inner(stream, None)?.points)
}

pub fn decode_with_header(stream: &[u8]) -> Result<Decoded> {
    decode_inner(stream, None)
}

pub fn decode_traced(stream: &[u8]) -> Result<(QuantizedPointSet, Vec<SplitEvent>)> {
    let mut trace = Vec::new();
    let decoded = decode_inner(stream, Some(&mut trace))?;
    Ok((decoded.points, trace))
}

fn decode_inner(stream: &[u8], mut trace: Option<&mut Vec<SplitEvent>>) -> Result<Decoded> {
    let (header, payload) = Header::parse(stream)?;
    let mut dec = Decoder::new(payload)?;
    let mut ctx = SplitContext::new(&header.bounds, &header.config);
    let depth = ctx.schedule().depth();
    let n = u64::from(header.count);
    let mut points = QuantizedPointSet::empty(header.bounds.clone());
    let mut queue = VecDeque::new();
    if n > 0 {
        ctx.add_root(n);
        queue.push_back(DecCell { level: 0, lower: Coord::from_elem(0, header.bounds.dim()), count: n });
    }

    while let Some(cell) = queue.pop_front() {
        let left = ctx.decode_split(&mut dec, cell.level, &cell.lower, cell.count, trace.as_deref_mut())?;
        let (ll, rl) = split_corners(ctx.schedule(), cell.level, &cell.lower);
        let child = cell.level + 1;
        let right = cell.count - left;
        if child == depth {
            for (corner, c) in [(ll, left), (rl, right)] {
                for _ in 0..c {
                    points.push_unchecked(&corner);
                }
            }
            continue;
        }
        let l = (left > 0).then(|| DecCell { level: child, lower: ll, count: left });
        let r = (right > 0).then(|| DecCell { level: child, lower: rl, count: right });
        push_children(&mut queue, header.config.traversal, l, r);
    }
    dec.finish()?;
    Ok(Decoded { header, points })
}
