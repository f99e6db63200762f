mod cursor;
mod hnsw;
mod range;
mod visited;

pub use cursor::{TopkCursor, DEFAULT_LOOKAHEAD};
pub use hnsw::{HnswIndex, HnswParams, Neighbor};
pub use range::RangeCursor;
