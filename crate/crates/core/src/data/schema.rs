use std::collections::HashSet;

use super::value::DataType;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub ty: DataType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, ty: DataType) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

/// Ordered column list with a single int64 primary key and at most one
/// vector column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<ColumnDef>,
    primary_key: usize,
}

impl Schema {
    pub fn new(columns: Vec<ColumnDef>, primary_key: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::plan(format!("duplicate column `{}`", c.name)));
            }
        }
        if columns.iter().filter(|c| c.ty.is_vector()).count() > 1 {
            return Err(Error::plan("at most one vector column per table"));
        }
        let pk = columns
            .iter()
            .position(|c| c.name == primary_key)
            .ok_or_else(|| Error::plan(format!("primary key `{primary_key}` is not a column")))?;
        if columns[pk].ty != DataType::Int64 {
            return Err(Error::plan(format!(
                "primary key `{primary_key}` must be int64"
            )));
        }
        Ok(Self {
            columns,
            primary_key: pk,
        })
    }

    pub fn columns(&self) -> &[ColumnDef] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, idx: usize) -> &ColumnDef {
        &self.columns[idx]
    }

    pub fn primary_key(&self) -> usize {
        self.primary_key
    }

    pub fn primary_key_name(&self) -> &str {
        &self.columns[self.primary_key].name
    }

    /// Index and dimension of the vector column, if any.
    pub fn vector_column(&self) -> Option<(usize, usize)> {
        self.columns.iter().enumerate().find_map(|(i, c)| match c.ty {
            DataType::Vector(dim) => Some((i, dim)),
            _ => None,
        })
    }

    /// The `name:type,...` header line of the table file format.
    pub fn header(&self) -> String {
        self.columns
            .iter()
            .map(|c| format!("{}:{}", c.name, c.ty))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_columns_and_bad_keys() {
        let dup = vec![
            ColumnDef::new("id", DataType::Int64),
            ColumnDef::new("id", DataType::Text),
        ];
        assert!(Schema::new(dup, "id").is_err());

        let two_vectors = vec![
            ColumnDef::new("id", DataType::Int64),
            ColumnDef::new("a", DataType::Vector(2)),
            ColumnDef::new("b", DataType::Vector(2)),
        ];
        assert!(Schema::new(two_vectors, "id").is_err());

        let text_pk = vec![ColumnDef::new("id", DataType::Text)];
        assert!(Schema::new(text_pk, "id").is_err());
        let missing = vec![ColumnDef::new("id", DataType::Int64)];
        assert!(Schema::new(missing, "key").is_err());
    }

    #[test]
    fn header_lists_columns_in_order() {
        let s = Schema::new(
            vec![
                ColumnDef::new("id", DataType::Int64),
                ColumnDef::new("vec", DataType::Vector(3)),
                ColumnDef::new("price", DataType::Float64),
            ],
            "id",
        )
        .unwrap();
        assert_eq!(s.header(), "id:int64,vec:vector(3),price:float64");
        assert_eq!(s.vector_column(), Some((1, 3)));
    }
}
