use std::collections::HashSet;
use std::sync::Arc;

use super::schema::Schema;
use super::value::{DataType, Datum, ScalarValue};
use crate::error::{Error, Result};

/// Row position inside a table. Also the node id inside an index built on it.
pub type RowId = u32;

#[derive(Debug, Clone, PartialEq)]
enum ColumnData {
    Scalar(Vec<ScalarValue>),
    Vector { dim: usize, data: Vec<f32> },
}

/// Immutable columnar table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Arc<Schema>,
    columns: Vec<ColumnData>,
    row_count: usize,
}

impl Table {
    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn is_empty(&self) -> bool {
        self.row_count == 0
    }

    /// Scalar value at `(column, row)`. Panics on vector columns.
    pub fn value(&self, column: usize, row: RowId) -> &ScalarValue {
        match &self.columns[column] {
            ColumnData::Scalar(values) => &values[row as usize],
            ColumnData::Vector { .. } => panic!("column {column} holds vectors"),
        }
    }

    /// Embedding of `row` in the table's vector column.
    pub fn vector(&self, row: RowId) -> &[f32] {
        let (col, _) = self
            .schema
            .vector_column()
            .expect("table has no vector column");
        self.vector_at(col, row)
    }

    pub fn vector_at(&self, column: usize, row: RowId) -> &[f32] {
        match &self.columns[column] {
            ColumnData::Vector { dim, data } => {
                let start = row as usize * dim;
                &data[start..start + dim]
            }
            ColumnData::Scalar(_) => panic!("column {column} holds scalars"),
        }
    }

    /// Flat row-major storage of the vector column.
    pub fn vectors(&self) -> Option<(&[f32], usize)> {
        self.columns.iter().find_map(|c| match c {
            ColumnData::Vector { dim, data } => Some((data.as_slice(), *dim)),
            _ => None,
        })
    }

    pub fn datum(&self, column: usize, row: RowId) -> Datum {
        match &self.columns[column] {
            ColumnData::Scalar(values) => Datum::Scalar(values[row as usize].clone()),
            ColumnData::Vector { .. } => Datum::Vector(self.vector_at(column, row).to_vec()),
        }
    }

    pub fn row(&self, row: RowId) -> Vec<Datum> {
        (0..self.columns.len()).map(|c| self.datum(c, row)).collect()
    }

    pub fn primary_key(&self, row: RowId) -> i64 {
        self.value(self.schema.primary_key(), row)
            .as_i64()
            .expect("primary key is int64")
    }
}

/// Row-at-a-time table construction with validation.
pub struct TableBuilder {
    schema: Arc<Schema>,
    columns: Vec<ColumnData>,
    keys: HashSet<i64>,
    row_count: usize,
}

impl TableBuilder {
    pub fn new(schema: Schema) -> Self {
        Self::with_capacity(schema, 0)
    }

    pub fn with_capacity(schema: Schema, rows: usize) -> Self {
        let columns = schema
            .columns()
            .iter()
            .map(|c| match c.ty {
                DataType::Vector(dim) => ColumnData::Vector {
                    dim,
                    data: Vec::with_capacity(rows * dim),
                },
                _ => ColumnData::Scalar(Vec::with_capacity(rows)),
            })
            .collect();
        Self {
            schema: Arc::new(schema),
            columns,
            keys: HashSet::with_capacity(rows),
            row_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.row_count
    }

    pub fn is_empty(&self) -> bool {
        self.row_count == 0
    }

    /// Appends a row. The row is validated completely before any column is
    /// touched, so a rejected row leaves the builder unchanged.
    pub fn push_row(&mut self, row: Vec<Datum>) -> Result<()> {
        if row.len() != self.schema.len() {
            return Err(Error::plan(format!(
                "row has {} cells, schema has {} columns",
                row.len(),
                self.schema.len()
            )));
        }
        for (def, cell) in self.schema.columns().iter().zip(&row) {
            match (def.ty, cell) {
                (DataType::Vector(dim), Datum::Vector(v)) => {
                    if v.len() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            actual: v.len(),
                        });
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::plan(format!(
                            "non-finite component in `{}`",
                            def.name
                        )));
                    }
                }
                (_, Datum::Scalar(ScalarValue::Null)) => {}
                (ty, Datum::Scalar(v)) if v.data_type() == Some(ty) => {}
                (ty, other) => {
                    return Err(Error::Type(format!(
                        "column `{}` expects {ty}, got {other:?}",
                        def.name
                    )))
                }
            }
        }
        let pk = match &row[self.schema.primary_key()] {
            Datum::Scalar(ScalarValue::Int(k)) => *k,
            _ => return Err(Error::plan("primary key must be a non-null int64")),
        };
        if !self.keys.insert(pk) {
            return Err(Error::plan(format!("duplicate primary key {pk}")));
        }
        for (store, cell) in self.columns.iter_mut().zip(row) {
            match (store, cell) {
                (ColumnData::Scalar(values), Datum::Scalar(v)) => values.push(v),
                (ColumnData::Vector { data, .. }, Datum::Vector(v)) => data.extend_from_slice(&v),
                _ => unreachable!("validated above"),
            }
        }
        self.row_count += 1;
        Ok(())
    }

    pub fn finish(self) -> Table {
        Table {
            schema: self.schema,
            columns: self.columns,
            row_count: self.row_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::ColumnDef;

    fn schema() -> Schema {
        Schema::new(
            vec![
                ColumnDef::new("id", DataType::Int64),
                ColumnDef::new("vec", DataType::Vector(2)),
                ColumnDef::new("tag", DataType::Text),
            ],
            "id",
        )
        .unwrap()
    }

    fn row(id: i64, v: Vec<f32>, tag: &str) -> Vec<Datum> {
        vec![
            Datum::Scalar(ScalarValue::Int(id)),
            Datum::Vector(v),
            Datum::Scalar(ScalarValue::text(tag)),
        ]
    }

    #[test]
    fn builds_and_reads_back() {
        let mut b = TableBuilder::new(schema());
        b.push_row(row(7, vec![1.0, 2.0], "a")).unwrap();
        b.push_row(row(9, vec![3.0, 4.0], "b")).unwrap();
        let t = b.finish();
        assert_eq!(t.row_count(), 2);
        assert_eq!(t.vector(1), &[3.0, 4.0]);
        assert_eq!(t.primary_key(0), 7);
        assert_eq!(t.value(2, 1), &ScalarValue::text("b"));
    }

    #[test]
    fn rejects_bad_rows_without_partial_writes() {
        let mut b = TableBuilder::new(schema());
        assert!(matches!(
            b.push_row(row(1, vec![1.0], "a")),
            Err(Error::Dimension { expected: 2, actual: 1 })
        ));
        assert!(b.push_row(row(1, vec![f32::NAN, 0.0], "a")).is_err());
        b.push_row(row(1, vec![0.0, 0.0], "a")).unwrap();
        assert!(b.push_row(row(1, vec![0.0, 0.0], "b")).is_err());
        assert_eq!(b.finish().row_count(), 1);
    }
}
