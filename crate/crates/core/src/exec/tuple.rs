use std::sync::Arc;

use smallvec::SmallVec;

use crate::catalog::Catalog;
use crate::data::{Datum, RowId, ScalarValue, Table};
use crate::error::{Error, Result};
use crate::plan::{resolve, ColumnRef, Field};

/// A tuple flowing through a pipeline: one row id per joined relation,
/// computed columns, and the distance reported by an index-backed source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredTuple {
    pub rows: SmallVec<[RowId; 2]>,
    pub extras: SmallVec<[ScalarValue; 2]>,
    pub score: Option<f64>,
}

impl ScoredTuple {
    /// `prefix` extended by one base row.
    pub fn extend(prefix: Option<&ScoredTuple>, row: RowId, score: Option<f64>) -> Self {
        let mut t = prefix.cloned().unwrap_or_default();
        t.rows.push(row);
        t.score = score;
        t
    }
}

/// Where a column lives inside a [`ScoredTuple`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Base { rel: usize, col: usize },
    Extra(usize),
}

/// Maps logical fields to tuple slots.
///
/// `outer` holds columns of enclosing dependent joins; they form a prefix of
/// every tuple. `local` is searched first.
#[derive(Debug, Clone, Default)]
pub struct Layout {
    pub rels: Vec<Arc<Table>>,
    pub extra_count: usize,
    pub outer: Vec<(Field, Slot)>,
    pub local: Vec<(Field, Slot)>,
    /// Extras known to hold the source's score.
    pub score_extras: Vec<usize>,
}

impl Layout {
    pub fn resolve(&self, col: &ColumnRef) -> Result<(&Field, Slot)> {
        let local: Vec<Field> = self.local.iter().map(|(f, _)| f.clone()).collect();
        let outer: Vec<Field> = self.outer.iter().map(|(f, _)| f.clone()).collect();
        let hit = resolve(&local, &outer, col)?;
        let idx = local.iter().position(|f| std::ptr::eq(f, hit));
        Ok(match idx {
            Some(i) => (&self.local[i].0, self.local[i].1),
            None => {
                let j = outer.iter().position(|f| std::ptr::eq(f, hit)).expect("resolved");
                (&self.outer[j].0, self.outer[j].1)
            }
        })
    }

    pub fn table(&self, rel: usize) -> &Arc<Table> {
        &self.rels[rel]
    }

    /// Layout for the inner side of a dependent join below this one.
    pub fn as_outer(&self) -> Layout {
        let mut outer = self.outer.clone();
        outer.extend(self.local.iter().cloned());
        Layout {
            rels: self.rels.clone(),
            extra_count: self.extra_count,
            outer,
            local: Vec::new(),
            score_extras: Vec::new(),
        }
    }

    pub fn local_fields(&self) -> Vec<Field> {
        self.local.iter().map(|(f, _)| f.clone()).collect()
    }

    pub fn outer_fields(&self) -> Vec<Field> {
        self.outer.iter().map(|(f, _)| f.clone()).collect()
    }

    pub fn datum(&self, t: &ScoredTuple, slot: Slot) -> Datum {
        match slot {
            Slot::Base { rel, col } => self.rels[rel].datum(col, t.rows[rel]),
            Slot::Extra(i) => Datum::Scalar(t.extras[i].clone()),
        }
    }
}

/// Query result: column names plus rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Datum>>,
}

impl ResultSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Scalar columns of every row, sorted, for order-insensitive comparison.
    pub fn sorted_keys(&self) -> Result<Vec<Vec<ScalarValue>>> {
        let mut keys = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|d| match d {
                        Datum::Scalar(v) => Ok(v.clone()),
                        Datum::Vector(_) => Err(Error::exec("result", "vector column in key")),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        keys.sort();
        Ok(keys)
    }
}

pub(crate) fn table_of(catalog: &Catalog, name: &str) -> Result<Arc<Table>> {
    catalog
        .get(name)?
        .table
        .clone()
        .ok_or_else(|| Error::lowering(format!("Scan [{name}]"), "relation has no data"))
}
