//! Wire messages.
//!
//! Every message is a frame: a 1-byte tag, a 4-byte big-endian body length
//! and the body. All integers are big-endian.
//!
//! | tag | message | body |
//! |-----|---------|------|
//! | 1 | HELLO  | dataset id, UTF-8 |
//! | 2 | HEADER | container header bytes |
//! | 3 | REFINE | `d` x lo u32, `d` x hi u32, depth u32, budget u32 |
//! | 4 | BATCH  | depth u32, event count u32, count x index delta u32, payload |
//! | 5 | ERROR  | message, UTF-8 |
//! | 6 | BYE    | empty |

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::points::BoundsSpec;

pub const TAG_HELLO: u8 = 1;
pub const TAG_HEADER: u8 = 2;
pub const TAG_REFINE: u8 = 3;
pub const TAG_BATCH: u8 = 4;
pub const TAG_ERROR: u8 = 5;
pub const TAG_BYE: u8 = 6;

/// Bytes before the body of every frame.
pub const FRAME_OVERHEAD: usize = 5;
/// Largest accepted body.
pub const MAX_BODY: usize = 1 << 30;

/// Refine every active cell meeting the inclusive box `lo..=hi` by `depth`
/// levels. A `budget` of `Some(b)` stops starting new cells once the batch
/// payload reaches `b` bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineRequest {
    pub lo: Vec<u32>,
    pub hi: Vec<u32>,
    pub depth: u32,
    pub budget: Option<u32>,
}

impl RefineRequest {
    pub fn new(lo: Vec<u32>, hi: Vec<u32>, depth: u32) -> Self {
        RefineRequest { lo, hi, depth, budget: None }
    }

    /// The whole domain.
    pub fn whole(bounds: &BoundsSpec, depth: u32) -> Self {
        let hi = (0..bounds.dim()).map(|a| (bounds.extent(a) - 1) as u32).collect();
        RefineRequest::new(vec![0; bounds.dim()], hi, depth)
    }

    pub fn with_budget(mut self, bytes: u32) -> Self {
        self.budget = Some(bytes);
        self
    }

    /// Checks the request against the stream geometry.
    pub fn validate(&self, bounds: &BoundsSpec) -> Result<()> {
        let d = bounds.dim();
        if self.lo.len() != d || self.hi.len() != d {
            return Err(Error::Protocol(format!("region has {} axes, dataset has {d}", self.lo.len())));
        }
        if self.depth == 0 {
            return Err(Error::Protocol("refinement depth must be at least 1".into()));
        }
        for a in 0..d {
            if self.lo[a] > self.hi[a] {
                return Err(Error::Protocol(format!("axis {a}: lo {} above hi {}", self.lo[a], self.hi[a])));
            }
            if u64::from(self.lo[a]) >= bounds.extent(a) {
                return Err(Error::Protocol(format!("axis {a}: region lies outside the domain")));
            }
        }
        Ok(())
    }

    fn encode_body(&self, out: &mut Vec<u8>) {
        for v in self.lo.iter().chain(&self.hi) {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.depth.to_be_bytes());
        out.extend_from_slice(&self.budget.unwrap_or(0).to_be_bytes());
    }

    fn decode_body(body: &[u8]) -> Result<Self> {
        if body.len() < 16 || !body.len().is_multiple_of(4) || !(body.len() / 4 - 2).is_multiple_of(2) {
            return Err(Error::Protocol(format!("REFINE body of {} bytes", body.len())));
        }
        let words: Vec<u32> = body.chunks_exact(4).map(|c| u32::from_be_bytes(c.try_into().unwrap())).collect();
        let d = (words.len() - 2) / 2;
        let budget = words[2 * d + 1];
        Ok(RefineRequest {
            lo: words[..d].to_vec(),
            hi: words[d..2 * d].to_vec(),
            depth: words[2 * d],
            budget: (budget != 0).then_some(budget),
        })
    }
}

/// One refinement response. `indices[j]` is the list position of the `j`-th
/// refined cell at the time it is applied, i.e. after the cells of events
/// `0..j` were taken out. They are sent as differences from the previous
/// index (the first from zero).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RefineBatch {
    pub depth: u32,
    pub indices: Vec<u32>,
    /// Flushed arithmetic payload; empty when there are no events.
    pub payload: Vec<u8>,
}

impl RefineBatch {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Encoded size including the frame header.
    pub fn frame_len(&self) -> usize {
        FRAME_OVERHEAD + 8 + 4 * self.indices.len() + self.payload.len()
    }

    fn encode_body(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.depth.to_be_bytes());
        out.extend_from_slice(&(self.indices.len() as u32).to_be_bytes());
        let mut prev = 0;
        for &i in &self.indices {
            out.extend_from_slice(&i.wrapping_sub(prev).to_be_bytes());
            prev = i;
        }
        out.extend_from_slice(&self.payload);
    }

    fn decode_body(body: &[u8]) -> Result<Self> {
        let word = |at: usize| -> Result<u32> {
            body.get(at..at + 4)
                .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
                .ok_or_else(|| Error::Protocol("BATCH body is truncated".into()))
        };
        let depth = word(0)?;
        let count = word(4)? as usize;
        if count > (body.len() - 8) / 4 {
            return Err(Error::Protocol("BATCH body is truncated".into()));
        }
        let mut indices = Vec::with_capacity(count);
        let mut prev = 0u32;
        for j in 0..count {
            prev = prev
                .checked_add(word(8 + 4 * j)?)
                .ok_or_else(|| Error::Protocol("BATCH index overflows".into()))?;
            indices.push(prev);
        }
        let payload = body[8 + 4 * count..].to_vec();
        if count == 0 && !payload.is_empty() {
            return Err(Error::Protocol("empty BATCH carries a payload".into()));
        }
        Ok(RefineBatch { depth, indices, payload })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Hello { dataset: String },
    Header(Vec<u8>),
    Refine(RefineRequest),
    Batch(RefineBatch),
    Error(String),
    Bye,
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Hello { .. } => TAG_HELLO,
            Message::Header(_) => TAG_HEADER,
            Message::Refine(_) => TAG_REFINE,
            Message::Batch(_) => TAG_BATCH,
            Message::Error(_) => TAG_ERROR,
            Message::Bye => TAG_BYE,
        }
    }

    pub fn body(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Message::Hello { dataset } => out.extend_from_slice(dataset.as_bytes()),
            Message::Header(h) => out.extend_from_slice(h),
            Message::Refine(r) => r.encode_body(&mut out),
            Message::Batch(b) => b.encode_body(&mut out),
            Message::Error(m) => out.extend_from_slice(m.as_bytes()),
            Message::Bye => {}
        }
        out
    }

    /// The complete frame.
    pub fn to_frame(&self) -> Vec<u8> {
        let body = self.body();
        let mut out = Vec::with_capacity(FRAME_OVERHEAD + body.len());
        out.push(self.tag());
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
        out
    }

    pub fn from_parts(tag: u8, body: &[u8]) -> Result<Self> {
        let text = |b: &[u8]| {
            String::from_utf8(b.to_vec()).map_err(|_| Error::Protocol("message text is not UTF-8".into()))
        };
        match tag {
            TAG_HELLO => Ok(Message::Hello { dataset: text(body)? }),
            TAG_HEADER => Ok(Message::Header(body.to_vec())),
            TAG_REFINE => RefineRequest::decode_body(body).map(Message::Refine),
            TAG_BATCH => RefineBatch::decode_body(body).map(Message::Batch),
            TAG_ERROR => Ok(Message::Error(text(body)?)),
            TAG_BYE if body.is_empty() => Ok(Message::Bye),
            TAG_BYE => Err(Error::Protocol("BYE carries a body".into())),
            _ => Err(Error::Protocol(format!("unknown message tag {tag}"))),
        }
    }

    /// Parses exactly one frame.
    pub fn from_frame(frame: &[u8]) -> Result<Self> {
        if frame.len() < FRAME_OVERHEAD {
            return Err(Error::Truncated);
        }
        let len = u32::from_be_bytes(frame[1..5].try_into().unwrap()) as usize;
        if frame.len() != FRAME_OVERHEAD + len {
            return Err(Error::Protocol(format!(
                "frame declares {len} body bytes but holds {}",
                frame.len() - FRAME_OVERHEAD
            )));
        }
        Message::from_parts(frame[0], &frame[FRAME_OVERHEAD..])
    }
}

/// Reads one message. Returns `None` on a clean end of stream before the
/// first byte of a frame.
pub fn read_message<R: Read>(reader: &mut R) -> Result<Option<Message>> {
    let mut head = [0u8; FRAME_OVERHEAD];
    let mut got = 0;
    while got < head.len() {
        match reader.read(&mut head[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Truncated),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(head[1..5].try_into().unwrap()) as usize;
    if len > MAX_BODY {
        return Err(Error::Protocol(format!("frame body of {len} bytes exceeds the limit")));
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated,
        _ => e.into(),
    })?;
    Message::from_parts(head[0], &body).map(Some)
}

pub fn write_message<W: Write>(writer: &mut W, msg: &Message) -> Result<usize> {
    let frame = msg.to_frame();
    writer.write_all(&frame)?;
    writer.flush()?;
    Ok(frame.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_layout() {
        let msg = Message::Refine(RefineRequest::new(vec![1, 2], vec![3, 4], 5).with_budget(6));
        let frame = msg.to_frame();
        assert_eq!(&frame[..5], &[3, 0, 0, 0, 24]);
        assert_eq!(&frame[5..9], &[0, 0, 0, 1]);
        assert_eq!(&frame[25..], &[0, 0, 0, 6]);
        assert_eq!(Message::from_frame(&frame).unwrap(), msg);
    }

    #[test]
    fn batch_indices_are_deltas() {
        let b = RefineBatch { depth: 2, indices: vec![3, 3, 10], payload: vec![0xAB, 0xCD] };
        let frame = Message::Batch(b.clone()).to_frame();
        assert_eq!(frame.len(), b.frame_len());
        assert_eq!(&frame[5..13], &[0, 0, 0, 2, 0, 0, 0, 3]);
        assert_eq!(&frame[13..25], &[0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0, 7]);
        assert_eq!(&frame[25..], &[0xAB, 0xCD]);
        assert_eq!(Message::from_frame(&frame).unwrap(), Message::Batch(b));
    }

    #[test]
    fn empty_batch_is_eight_bytes() {
        let frame = Message::Batch(RefineBatch::default()).to_frame();
        assert_eq!(frame, vec![4, 0, 0, 0, 8, 0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn stream_reading() {
        let mut bytes = Vec::new();
        for m in [Message::Hello { dataset: "terrain".into() }, Message::Bye, Message::Error("no".into())] {
            bytes.extend(m.to_frame());
        }
        let mut r = &bytes[..];
        assert_eq!(read_message(&mut r).unwrap(), Some(Message::Hello { dataset: "terrain".into() }));
        assert_eq!(read_message(&mut r).unwrap(), Some(Message::Bye));
        assert_eq!(read_message(&mut r).unwrap(), Some(Message::Error("no".into())));
        assert_eq!(read_message(&mut r).unwrap(), None);
        let mut cut = &bytes[..3];
        assert!(matches!(read_message(&mut cut), Err(Error::Truncated)));
        let mut cut = &bytes[..8];
        assert!(matches!(read_message(&mut cut), Err(Error::Truncated)));
    }

    #[test]
    fn malformed_messages() {
        assert!(Message::from_parts(9, &[]).is_err());
        assert!(Message::from_parts(TAG_BYE, &[1]).is_err());
        assert!(Message::from_parts(TAG_REFINE, &[0; 12]).is_err());
        assert!(Message::from_parts(TAG_BATCH, &[0, 0, 0, 1, 0, 0, 0, 5, 0, 0, 0, 0]).is_err());
        assert!(Message::from_parts(TAG_BATCH, &[0, 0, 0, 1, 0, 0, 0, 0, 7]).is_err());
        assert!(Message::from_parts(TAG_HELLO, &[0xFF]).is_err());
        let b = BoundsSpec::new(&[4, 4]).unwrap();
        assert!(RefineRequest::new(vec![0], vec![3], 1).validate(&b).is_err());
        assert!(RefineRequest::new(vec![2, 0], vec![1, 3], 1).validate(&b).is_err());
        assert!(RefineRequest::new(vec![0, 16], vec![3, 20], 1).validate(&b).is_err());
        assert!(RefineRequest::new(vec![0, 0], vec![3, 3], 0).validate(&b).is_err());
        assert!(RefineRequest::new(vec![0, 0], vec![99, 3], 1).validate(&b).is_ok());
    }
}
