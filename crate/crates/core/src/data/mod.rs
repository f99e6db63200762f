pub mod io;
pub mod metric;
pub mod quantile;
pub mod schema;
pub mod table;
pub mod value;

pub use io::{load_table, read_table, read_vectors, save_table, write_table, write_vectors};
pub use metric::{add_distance_calls, distance_calls, Metric};
pub use quantile::quantile;
pub use schema::{ColumnDef, Schema};
pub use table::{RowId, Table, TableBuilder};
pub use value::{DataType, Datum, ScalarValue};
