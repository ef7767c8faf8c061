//! Progressive, lossless compression of quantized point sets by recursive
//! kd-subdivision with arithmetic-coded split counts.

pub mod arith;
pub mod cell;
pub mod codec;
pub mod config;
pub mod container;
pub mod cost;
mod error;
pub mod experiment;
pub mod generate;
pub mod io;
pub mod points;
pub mod prediction;
pub mod stream;
pub mod waves;

pub use cell::{next_axis, split_cell, Cell, CellBox, Schedule};
pub use codec::{decode, decode_traced, decode_with_header, encode, encode_traced, encode_with_dequantization, Decoded, SplitEvent};
pub use config::{AxisPolicy, CodecConfig, RepresentativePolicy, Traversal};
pub use container::{Dequantization, Header};
pub use cost::{cost_report, CostReport};
pub use error::{Error, Result};
pub use generate::{DatasetSpec, Generator};
pub use io::{PointFormat, RawPointCloud};
pub use points::{BoundsSpec, QuantizedPointSet};
pub use waves::{decode_waves, representative_points, Snapshot, WaveDecoder};
