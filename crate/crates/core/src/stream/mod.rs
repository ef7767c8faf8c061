//! Interactive refinement sessions: the client chooses which cells are
//! refined next and the server answers with coded batches.

pub mod protocol;
pub mod session;
pub mod transport;

pub use protocol::{read_message, write_message, Message, RefineBatch, RefineRequest};
pub use session::{BatchDelta, ClientSession, ServerSession};
pub use transport::{serve_connection, Dataset, DatasetRegistry, HeadlessClient, ServerStateMachine};
