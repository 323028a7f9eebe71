//! File formats: SDPA sparse ingestion, result serialization, and the
//! block-arrow instance generator.

mod generator;
mod report;
mod sdpa;

pub use generator::{block_arrow_graph, generate_block_arrow, generate_block_arrow_sdpa, BlockArrowSpec};
pub use report::{write_result, write_trace_csv, ResultFormat};
pub use sdpa::{parse_sdpa, SdpaEntry, SdpaError, SdpaFile};
