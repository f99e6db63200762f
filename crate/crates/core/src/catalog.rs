use std::collections::BTreeMap;
use std::sync::Arc;

use crate::data::{Metric, Schema, Table};
use crate::error::{Error, Result};
use crate::index::HnswIndex;

/// One registered relation: schema, optional data and optional vector index.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub schema: Arc<Schema>,
    pub table: Option<Arc<Table>>,
    pub index: Option<Arc<HnswIndex>>,
    /// Metric declared for the vector column when no index is present.
    pub metric: Option<Metric>,
}

impl CatalogEntry {
    /// The metric `DISTANCE` uses on this relation: the index metric, else the
    /// declared one, else L2.
    pub fn distance_metric(&self) -> Metric {
        self.index
            .as_ref()
            .map(|i| i.metric())
            .or(self.metric)
            .unwrap_or(Metric::L2)
    }
}

/// Name → relation map. One table may be registered under several names.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_schema(&mut self, name: impl Into<String>, schema: Schema) {
        self.entries.insert(
            name.into(),
            CatalogEntry {
                schema: Arc::new(schema),
                table: None,
                index: None,
                metric: None,
            },
        );
    }

    pub fn register_table(&mut self, name: impl Into<String>, table: Arc<Table>) {
        self.entries.insert(
            name.into(),
            CatalogEntry {
                schema: table.schema().clone(),
                table: Some(table),
                index: None,
                metric: None,
            },
        );
    }

    pub fn register_indexed(&mut self, name: impl Into<String>, table: Arc<Table>, index: Arc<HnswIndex>) {
        self.entries.insert(
            name.into(),
            CatalogEntry {
                schema: table.schema().clone(),
                table: Some(table),
                metric: Some(index.metric()),
                index: Some(index),
            },
        );
    }

    pub fn set_metric(&mut self, name: &str, metric: Metric) -> Result<()> {
        self.entries
            .get_mut(name)
            .map(|e| e.metric = Some(metric))
            .ok_or_else(|| Error::plan(format!("unknown table `{name}`")))
    }

    /// Attaches an index to an already registered table.
    pub fn set_index(&mut self, name: &str, index: Arc<HnswIndex>) -> Result<()> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::plan(format!("unknown table `{name}`")))?;
        entry.metric = Some(index.metric());
        entry.index = Some(index);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&CatalogEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::plan(format!("unknown table `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
