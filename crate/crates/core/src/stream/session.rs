//! Server and client halves of a refinement session.
//!
//! Both sides hold the same ordered cell list, initially the root. Cells
//! whose boxes are unit cells stay in the list but are never refined. A
//! batch takes the selected cells out of the list, refines each one and
//! appends its leaves, event by event, to the end of the list. Within one
//! event the cell is split breadth-first for `depth` levels; unit cells
//! reached on the way are carried along unsplit, so with `depth = 1` over
//! the whole domain a batch is exactly one wave of the file decoder.

use crate::arith::{Decoder, Encoder};
use crate::cell::{CellBox, Coord};
use crate::codec::{header_for, partition, split_corners, SplitContext, SplitEvent};
use crate::config::CodecConfig;
use crate::container::{Dequantization, Header};
use crate::error::{Error, Result};
use crate::points::QuantizedPointSet;
use crate::stream::protocol::{RefineBatch, RefineRequest};
use crate::waves::Snapshot;

#[derive(Clone, Debug)]
struct SrvCell {
    level: usize,
    lower: Coord,
    start: usize,
    end: usize,
}

impl SrvCell {
    fn count(&self) -> u64 {
        (self.end - self.start) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct CliCell {
    level: usize,
    lower: Coord,
    count: u64,
}

/// Authoritative side of a session over one dataset.
pub struct ServerSession {
    header: Header,
    coords: Vec<u32>,
    order: Vec<u32>,
    cells: Vec<SrvCell>,
    ctx: SplitContext,
    bytes_sent: u64,
    batches: u64,
}

impl ServerSession {
    pub fn new(points: &QuantizedPointSet, config: &CodecConfig) -> Result<Self> {
        let header = header_for(points, config)?;
        let mut ctx = SplitContext::new(points.bounds(), config);
        let mut cells = Vec::new();
        if !points.is_empty() {
            ctx.add_root(points.len() as u64);
            cells.push(SrvCell { level: 0, lower: Coord::from_elem(0, points.bounds().dim()), start: 0, end: points.len() });
        }
        Ok(ServerSession {
            header,
            coords: points.coords().to_vec(),
            order: (0..points.len() as u32).collect(),
            cells,
            ctx,
            bytes_sent: 0,
            batches: 0,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn header_bytes(&self) -> Vec<u8> {
        self.header.to_bytes()
    }

    /// Real-valued bounds announced in the header; coding is unaffected.
    pub fn set_dequantization(&mut self, dequantization: Option<Dequantization>) {
        self.header.dequantization = dequantization;
    }

    /// Frame bytes of every batch produced so far.
    pub fn bytes_sent(&self) -> u64 {
        self.bytes_sent
    }

    pub fn batches_sent(&self) -> u64 {
        self.batches
    }

    /// The server's copy of the client list.
    pub fn cells(&self) -> Vec<(CellBox, u64)> {
        let s = self.ctx.schedule();
        self.cells.iter().map(|c| (s.cell_box(c.level, &c.lower), c.count())).collect()
    }

    /// Number of cells that can still be refined.
    pub fn refinable(&self) -> usize {
        let depth = self.ctx.schedule().depth();
        self.cells.iter().filter(|c| c.level < depth).count()
    }

    pub fn refine(&mut self, request: &RefineRequest) -> Result<RefineBatch> {
        self.refine_traced(request, None)
    }

    pub fn refine_traced(&mut self, request: &RefineRequest, mut trace: Option<&mut Vec<SplitEvent>>) -> Result<RefineBatch> {
        request.validate(&self.header.bounds)?;
        let depth = self.ctx.schedule().depth();
        let selected: Vec<usize> = (0..self.cells.len())
            .filter(|&i| {
                let c = &self.cells[i];
                c.level < depth && self.ctx.schedule().cell_box(c.level, &c.lower).intersects(&request.lo, &request.hi)
            })
            .collect();

        let mut enc = Encoder::new();
        let mut indices = Vec::new();
        let mut taken = vec![false; self.cells.len()];
        let mut appended = Vec::new();
        for &i in &selected {
            if let Some(budget) = request.budget {
                if enc.bytes_emitted() >= u64::from(budget) {
                    break;
                }
            }
            indices.push((i - indices.len()) as u32);
            taken[i] = true;
            let leaves = self.refine_cell(&mut enc, self.cells[i].clone(), request.depth, trace.as_deref_mut())?;
            appended.extend(leaves);
        }

        let payload = if indices.is_empty() { Vec::new() } else { enc.finish() };
        let mut next: Vec<SrvCell> = std::mem::take(&mut self.cells)
            .into_iter()
            .zip(taken)
            .filter_map(|(c, t)| (!t).then_some(c))
            .collect();
        next.extend(appended);
        self.cells = next;

        let batch = RefineBatch { depth: request.depth, indices, payload };
        self.bytes_sent += batch.frame_len() as u64;
        self.batches += 1;
        Ok(batch)
    }

    fn refine_cell(
        &mut self,
        enc: &mut Encoder,
        cell: SrvCell,
        levels: u32,
        mut trace: Option<&mut Vec<SplitEvent>>,
    ) -> Result<Vec<SrvCell>> {
        let depth = self.ctx.schedule().depth();
        let d = self.header.bounds.dim();
        let mut frontier = vec![cell];
        for _ in 0..levels {
            if frontier.iter().all(|c| c.level == depth) {
                break;
            }
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for c in frontier {
                if c.level == depth {
                    next.push(c);
                    continue;
                }
                let axis = self.ctx.schedule().axis(c.level);
                let bit = self.ctx.schedule().remaining(c.level)[axis] - 1;
                let coords = &self.coords;
                let left = partition(&mut self.order[c.start..c.end], |i| (coords[i as usize * d + axis] >> bit) & 1 == 0);
                self.ctx.encode_split(enc, c.level, &c.lower, c.count(), left as u64, trace.as_deref_mut())?;
                let (ll, rl) = split_corners(self.ctx.schedule(), c.level, &c.lower);
                let mid = c.start + left;
                if left > 0 {
                    next.push(SrvCell { level: c.level + 1, lower: ll, start: c.start, end: mid });
                }
                if mid < c.end {
                    next.push(SrvCell { level: c.level + 1, lower: rl, start: mid, end: c.end });
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }
}

/// Cells a batch replaced and the cells it added, for incremental display.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchDelta {
    pub removed: Vec<(CellBox, u64)>,
    pub added: Vec<(CellBox, u64)>,
}

/// Decoder side of a session.
pub struct ClientSession {
    header: Header,
    cells: Vec<CliCell>,
    ctx: SplitContext,
    bytes_received: u64,
}

impl ClientSession {
    pub fn new(header: Header) -> Self {
        let mut ctx = SplitContext::new(&header.bounds, &header.config);
        let n = u64::from(header.count);
        let mut cells = Vec::new();
        if n > 0 {
            ctx.add_root(n);
            cells.push(CliCell { level: 0, lower: Coord::from_elem(0, header.bounds.dim()), count: n });
        }
        ClientSession { header, cells, ctx, bytes_received: 0 }
    }

    /// Starts from the bytes of a HEADER message.
    pub fn from_header_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, rest) = Header::parse(bytes)?;
        if !rest.is_empty() {
            return Err(Error::Protocol(format!("{} stray bytes after the header", rest.len())));
        }
        Ok(ClientSession::new(header))
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn bytes_received(&self) -> u64 {
        self.bytes_received
    }

    pub fn cells(&self) -> Vec<(CellBox, u64)> {
        let s = self.ctx.schedule();
        self.cells.iter().map(|c| (s.cell_box(c.level, &c.lower), c.count)).collect()
    }

    pub fn refinable(&self) -> usize {
        let depth = self.ctx.schedule().depth();
        self.cells.iter().filter(|c| c.level < depth).count()
    }

    /// True once every cell is a unit cell.
    pub fn is_complete(&self) -> bool {
        self.refinable() == 0
    }

    /// The current state as a snapshot. Its level and precision are those of
    /// the coarsest cell in the list.
    pub fn snapshot(&self) -> Snapshot {
        let schedule = self.ctx.schedule();
        let level = self.cells.iter().map(|c| c.level).min().unwrap_or(schedule.depth());
        let bounds = self.header.bounds.clone();
        let precision = bounds.bits().iter().zip(schedule.remaining(level)).map(|(b, r)| b - r).collect();
        Snapshot { bounds, level, precision, cells: self.cells() }
    }

    /// The decoded points; only available once the session is complete.
    pub fn points(&self) -> Result<QuantizedPointSet> {
        if !self.is_complete() {
            return Err(Error::InvalidArgument(format!("{} cells are still coarse", self.refinable())));
        }
        let mut set = QuantizedPointSet::empty(self.header.bounds.clone());
        for c in &self.cells {
            for _ in 0..c.count {
                set.push_unchecked(&c.lower);
            }
        }
        Ok(set)
    }

    pub fn apply_batch(&mut self, batch: &RefineBatch) -> Result<BatchDelta> {
        self.apply_batch_traced(batch, None)
    }

    /// Applies a batch. Any inconsistency leaves the session unusable.
    pub fn apply_batch_traced(&mut self, batch: &RefineBatch, mut trace: Option<&mut Vec<SplitEvent>>) -> Result<BatchDelta> {
        self.bytes_received += batch.frame_len() as u64;
        let mut delta = BatchDelta::default();
        if batch.is_empty() {
            return Ok(delta);
        }
        if batch.depth == 0 {
            return Err(Error::Protocol("batch with events has depth 0".into()));
        }
        let depth = self.ctx.schedule().depth();
        // positions in the list as it was before the batch
        let mut original = Vec::with_capacity(batch.indices.len());
        for (j, &i) in batch.indices.iter().enumerate() {
            let pos = i as usize + j;
            if pos >= self.cells.len() || original.last().is_some_and(|&p| pos <= p) {
                return Err(Error::Protocol(format!("event {j} names list position {i}, out of range")));
            }
            if self.cells[pos].level >= depth {
                return Err(Error::Protocol(format!("event {j} refines a unit cell")));
            }
            original.push(pos);
        }

        let mut dec = Decoder::new(&batch.payload)?;
        let mut appended = Vec::new();
        for &pos in &original {
            let cell = self.cells[pos].clone();
            delta.removed.push((self.ctx.schedule().cell_box(cell.level, &cell.lower), cell.count));
            appended.extend(self.refine_cell(&mut dec, cell, batch.depth, trace.as_deref_mut())?);
        }
        dec.finish()?;

        let old = std::mem::take(&mut self.cells);
        let mut skip = original.iter().peekable();
        for (i, c) in old.into_iter().enumerate() {
            if skip.peek() == Some(&&i) {
                skip.next();
            } else {
                self.cells.push(c);
            }
        }
        let s = self.ctx.schedule();
        delta.added = appended.iter().map(|c| (s.cell_box(c.level, &c.lower), c.count)).collect();
        self.cells.extend(appended);
        Ok(delta)
    }

    fn refine_cell(
        &mut self,
        dec: &mut Decoder<'_>,
        cell: CliCell,
        levels: u32,
        mut trace: Option<&mut Vec<SplitEvent>>,
    ) -> Result<Vec<CliCell>> {
        let depth = self.ctx.schedule().depth();
        let mut frontier = vec![cell];
        for _ in 0..levels {
            if frontier.iter().all(|c| c.level == depth) {
                break;
            }
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for c in frontier {
                if c.level == depth {
                    next.push(c);
                    continue;
                }
                let left = self.ctx.decode_split(dec, c.level, &c.lower, c.count, trace.as_deref_mut())?;
                let (ll, rl) = split_corners(self.ctx.schedule(), c.level, &c.lower);
                if left > 0 {
                    next.push(CliCell { level: c.level + 1, lower: ll, count: left });
                }
                if c.count > left {
                    next.push(CliCell { level: c.level + 1, lower: rl, count: c.count - left });
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }
}
