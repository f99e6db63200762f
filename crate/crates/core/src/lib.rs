//! Hybrid relational/vector query engine.

pub mod catalog;
pub mod data;
pub mod error;
pub mod exec;
pub mod index;
pub mod plan;
pub mod sql;
pub mod workload;

pub use catalog::{Catalog, CatalogEntry};
pub use data::{ColumnDef, DataType, Datum, Metric, RowId, ScalarValue, Schema, Table, TableBuilder};
pub use error::{Error, Location, Result};
