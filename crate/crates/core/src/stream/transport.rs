//! Message handling independent of the byte transport.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::codec::decode_with_header;
use crate::config::CodecConfig;
use crate::container::Dequantization;
use crate::error::{Error, Result};
use crate::points::QuantizedPointSet;
use crate::stream::protocol::{read_message, write_message, Message, RefineBatch, RefineRequest};
use crate::stream::session::{BatchDelta, ClientSession, ServerSession};
use crate::waves::Snapshot;

/// A dataset a server can stream.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub points: QuantizedPointSet,
    pub config: CodecConfig,
    /// Sent in the session header so clients can map cells back to real
    /// coordinates.
    pub dequantization: Option<Dequantization>,
}

/// Immutable datasets shared by every session.
#[derive(Clone, Debug, Default)]
pub struct DatasetRegistry {
    datasets: BTreeMap<String, Arc<Dataset>>,
}

impl DatasetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, points: QuantizedPointSet, config: CodecConfig) {
        self.datasets.insert(id.into(), Arc::new(Dataset { points, config, dequantization: None }));
    }

    /// Registers the contents of a container under `id`, keeping its coding
    /// configuration.
    pub fn insert_container(&mut self, id: impl Into<String>, container: &[u8]) -> Result<()> {
        let decoded = decode_with_header(container)?;
        let dataset = Dataset {
            points: decoded.points,
            config: decoded.header.config,
            dequantization: decoded.header.dequantization,
        };
        self.datasets.insert(id.into(), Arc::new(dataset));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Arc<Dataset>> {
        self.datasets.get(id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.datasets.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }
}

/// Server side of one connection: consumes client messages and returns the
/// replies. A HELLO (re)starts the session.
pub struct ServerStateMachine {
    registry: Arc<DatasetRegistry>,
    session: Option<ServerSession>,
    closed: bool,
}

impl ServerStateMachine {
    pub fn new(registry: Arc<DatasetRegistry>) -> Self {
        ServerStateMachine { registry, session: None, closed: false }
    }

    pub fn session(&self) -> Option<&ServerSession> {
        self.session.as_ref()
    }

    /// True after BYE; no further messages are accepted.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn handle(&mut self, msg: Message) -> Vec<Message> {
        if self.closed {
            return vec![Message::Error("session is closed".into())];
        }
        match msg {
            Message::Hello { dataset } => match self.registry.get(&dataset) {
                Some(ds) => match ServerSession::new(&ds.points, &ds.config) {
                    Ok(mut s) => {
                        s.set_dequantization(ds.dequantization.clone());
                        let header = s.header_bytes();
                        self.session = Some(s);
                        vec![Message::Header(header)]
                    }
                    Err(e) => vec![Message::Error(e.to_string())],
                },
                None => {
                    self.session = None;
                    vec![Message::Error(format!("unknown dataset '{dataset}'"))]
                }
            },
            Message::Refine(req) => match &mut self.session {
                Some(s) => match s.refine(&req) {
                    Ok(batch) => vec![Message::Batch(batch)],
                    Err(e) => vec![Message::Error(e.to_string())],
                },
                None => vec![Message::Error("REFINE before a successful HELLO".into())],
            },
            Message::Bye => {
                self.closed = true;
                vec![Message::Bye]
            }
            other => vec![Message::Error(format!("unexpected message with tag {} from a client", other.tag()))],
        }
    }
}

/// Runs one connection until BYE or end of input.
pub fn serve_connection<R: Read, W: Write>(registry: Arc<DatasetRegistry>, mut reader: R, mut writer: W) -> Result<()> {
    let mut machine = ServerStateMachine::new(registry);
    while let Some(msg) = read_message(&mut reader)? {
        for reply in machine.handle(msg) {
            write_message(&mut writer, &reply)?;
        }
        if machine.is_closed() {
            break;
        }
    }
    Ok(())
}

/// Scripted client over any byte transport.
pub struct HeadlessClient<R: Read, W: Write> {
    reader: R,
    writer: W,
    session: ClientSession,
    header_frame_bytes: u64,
    log: Vec<Message>,
    record: bool,
}

impl<R: Read, W: Write> HeadlessClient<R, W> {
    /// Sends HELLO and waits for the header.
    pub fn connect(mut reader: R, mut writer: W, dataset: &str) -> Result<Self> {
        write_message(&mut writer, &Message::Hello { dataset: dataset.into() })?;
        match read_message(&mut reader)? {
            Some(Message::Header(bytes)) => Ok(HeadlessClient {
                reader,
                writer,
                header_frame_bytes: Message::Header(bytes.clone()).to_frame().len() as u64,
                session: ClientSession::from_header_bytes(&bytes)?,
                log: vec![Message::Header(bytes)],
                record: false,
            }),
            Some(Message::Error(m)) => Err(Error::Protocol(m)),
            Some(other) => Err(Error::Protocol(format!("expected HEADER, got tag {}", other.tag()))),
            None => Err(Error::Truncated),
        }
    }

    /// Keeps every received message; see [`HeadlessClient::received`].
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn session(&self) -> &ClientSession {
        &self.session
    }

    pub fn snapshot(&self) -> Snapshot {
        self.session.snapshot()
    }

    /// Frame bytes received in BATCH messages.
    pub fn batch_bytes(&self) -> u64 {
        self.session.bytes_received()
    }

    /// All frame bytes received, header included.
    pub fn total_bytes(&self) -> u64 {
        self.header_frame_bytes + self.session.bytes_received()
    }

    pub fn received(&self) -> &[Message] {
        &self.log
    }

    pub fn request(&mut self, req: &RefineRequest) -> Result<RefineBatch> {
        write_message(&mut self.writer, &Message::Refine(req.clone()))?;
        match read_message(&mut self.reader)? {
            Some(Message::Batch(b)) => {
                if self.record {
                    self.log.push(Message::Batch(b.clone()));
                }
                Ok(b)
            }
            Some(Message::Error(m)) => Err(Error::Protocol(m)),
            Some(other) => Err(Error::Protocol(format!("expected BATCH, got tag {}", other.tag()))),
            None => Err(Error::Truncated),
        }
    }

    /// Requests and applies one batch.
    pub fn refine(&mut self, req: &RefineRequest) -> Result<BatchDelta> {
        let batch = self.request(req)?;
        self.session.apply_batch(&batch)
    }

    pub fn close(mut self) -> Result<ClientSession> {
        write_message(&mut self.writer, &Message::Bye)?;
        match read_message(&mut self.reader)? {
            Some(Message::Bye) | None => Ok(self.session),
            Some(other) => Err(Error::Protocol(format!("expected BYE, got tag {}", other.tag()))),
        }
    }
}
