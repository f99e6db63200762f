use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cursor::TopkCursor;
use super::range::RangeCursor;
use super::visited::Visited;
use crate::data::{Metric, RowId, Table};
use crate::error::{Error, Result};

const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HnswParams {
    /// Maximum neighbors per node on upper levels; level 0 allows twice this.
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            ef_search: 48,
            seed: 0x5eed,
        }
    }
}

/// A search result: row id and its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row: RowId,
    pub distance: f64,
}

impl Neighbor {
    pub(crate) fn new(row: RowId, distance: f64) -> Self {
        Self { row, distance }
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Ascending by distance, ties by row id.
impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.row.cmp(&other.row))
    }
}

/// Hierarchical proximity graph over the rows of one vector column.
#[derive(Debug, Clone)]
pub struct HnswIndex {
    params: HnswParams,
    metric: Metric,
    dim: usize,
    vectors: Vec<f32>,
    // links[node][level]
    links: Vec<Vec<Vec<u32>>>,
    entry_point: u32,
    max_level: usize,
}

impl HnswIndex {
    pub fn build(table: &Table, column: &str, params: HnswParams, metric: Metric) -> Result<Self> {
        let schema = table.schema();
        let col = schema
            .index_of(column)
            .ok_or_else(|| Error::plan(format!("unknown column `{column}`")))?;
        let crate::data::DataType::Vector(dim) = schema.column(col).ty else {
            return Err(Error::plan(format!("column `{column}` is not a vector column")));
        };
        if table.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty table".into()));
        }
        let mut data = Vec::with_capacity(table.row_count() * dim);
        for row in 0..table.row_count() as RowId {
            data.extend_from_slice(table.vector_at(col, row));
        }
        Self::from_vectors(dim, data, params, metric)
    }

    /// Builds over row-major `vectors`; node `i` is row `i`.
    pub fn from_vectors(dim: usize, vectors: Vec<f32>, params: HnswParams, metric: Metric) -> Result<Self> {
        if dim == 0 || !vectors.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: vectors.len(),
            });
        }
        if vectors.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty table".into()));
        }
        if params.m < 2 || params.ef_construction == 0 || params.ef_search == 0 {
            return Err(Error::Config(format!("invalid index parameters {params:?}")));
        }
        let n = vectors.len() / dim;
        let mut index = Self {
            params,
            metric,
            dim,
            vectors,
            links: Vec::with_capacity(n),
            entry_point: 0,
            max_level: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let level_scale = 1.0 / (params.m as f64).ln();
        for node in 0..n as u32 {
            let uniform: f64 = 1.0 - rng.random::<f64>();
            let level = ((-uniform.ln() * level_scale) as usize).min(MAX_LEVEL);
            index.insert(node, level);
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn entry_point(&self) -> u32 {
        self.entry_point
    }

    /// Number of levels `node` participates in.
    pub fn node_levels(&self, node: u32) -> usize {
        self.links[node as usize].len()
    }

    pub fn neighbors(&self, node: u32, level: usize) -> &[u32] {
        &self.links[node as usize][level]
    }

    pub fn max_neighbors(&self, level: usize) -> usize {
        if level == 0 {
            2 * self.params.m
        } else {
            self.params.m
        }
    }

    #[inline]
    pub(crate) fn vector(&self, node: u32) -> &[f32] {
        let start = node as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    #[inline]
    pub(crate) fn distance_to(&self, query: &[f32], node: u32) -> f64 {
        self.metric.eval(query, self.vector(node))
    }

    pub(crate) fn check_dim(&self, query: &[f32]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: query.len(),
            });
        }
        Ok(())
    }

    /// The `k` approximate nearest rows, ascending by (distance, row).
    pub fn search_topk(&self, query: &[f32], k: usize) -> Result<Vec<Neighbor>> {
        self.search_topk_ef(query, k, self.params.ef_search)
    }

    pub fn search_topk_ef(&self, query: &[f32], k: usize, ef: usize) -> Result<Vec<Neighbor>> {
        self.check_dim(query)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let entry = self.descend(query, 0);
        let mut visited = Visited::new(self.len());
        let mut found = self.search_level(query, &[entry], ef.max(k), 0, &mut visited);
        found.truncate(k);
        Ok(found)
    }

    pub fn topk_cursor(&self, query: &[f32]) -> Result<TopkCursor<'_>> {
        self.check_dim(query)?;
        Ok(TopkCursor::new(self, query.to_vec()))
    }

    /// Range cursor with threshold `radius` and out-of-range patience `patience`.
    pub fn range_cursor(&self, query: &[f32], radius: f64, patience: usize) -> Result<RangeCursor<'_>> {
        if radius.is_nan() || radius == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid range threshold {radius}")));
        }
        if patience == 0 {
            return Err(Error::Config("range patience must be at least 1".into()));
        }
        Ok(RangeCursor::new(self.topk_cursor(query)?, radius, patience))
    }

    /// Greedy descent from the entry point down to `stop_level`.
    pub(crate) fn descend(&self, query: &[f32], stop_level: usize) -> Neighbor {
        let mut best = Neighbor::new(self.entry_point, self.distance_to(query, self.entry_point));
        for level in (stop_level + 1..=self.max_level).rev() {
            let mut improved = true;
            while improved {
                improved = false;
                for &next in &self.links[best.row as usize][level] {
                    let d = self.distance_to(query, next);
                    if d < best.distance {
                        best = Neighbor::new(next, d);
                        improved = true;
                    }
                }
            }
        }
        best
    }

    /// Beam search on one level. Returns up to `ef` nodes, ascending.
    fn search_level(
        &self,
        query: &[f32],
        entries: &[Neighbor],
        ef: usize,
        level: usize,
        visited: &mut Visited,
    ) -> Vec<Neighbor> {
        let mut candidates: BinaryHeap<Reverse<Neighbor>> = BinaryHeap::new();
        let mut results: BinaryHeap<Neighbor> = BinaryHeap::new();
        for &e in entries {
            if visited.insert(e.row) {
                candidates.push(Reverse(e));
                results.push(e);
            }
        }
        while results.len() > ef {
            results.pop();
        }
        while let Some(Reverse(current)) = candidates.pop() {
            let worst = results.peek().map_or(f64::INFINITY, |w| w.distance);
            if current.distance > worst && results.len() >= ef {
                break;
            }
            for &next in &self.links[current.row as usize][level] {
                if !visited.insert(next) {
                    continue;
                }
                let d = self.distance_to(query, next);
                let worst = results.peek().map_or(f64::INFINITY, |w| w.distance);
                if results.len() < ef || d < worst {
                    let cand = Neighbor::new(next, d);
                    candidates.push(Reverse(cand));
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    fn insert(&mut self, node: u32, level: usize) {
        self.links.push(vec![Vec::new(); level + 1]);
        if node == 0 {
            self.entry_point = 0;
            self.max_level = level;
            return;
        }
        let query = self.vector(node).to_vec();
        let top = self.max_level;
        let mut entry = Neighbor::new(self.entry_point, self.distance_to(&query, self.entry_point));
        for l in (level + 1..=top).rev() {
            let mut visited = Visited::new(self.links.len());
            entry = self.search_level(&query, &[entry], 1, l, &mut visited)[0];
        }
        let mut entries = vec![entry];
        for l in (0..=level.min(top)).rev() {
            let mut visited = Visited::new(self.links.len());
            let found = self.search_level(&query, &entries, self.params.ef_construction, l, &mut visited);
            let chosen = self.select_neighbors(&found, self.params.m);
            self.links[node as usize][l] = chosen.iter().map(|n| n.row).collect();
            for peer in &chosen {
                self.link_back(peer.row, node, peer.distance, l);
            }
            entries = found;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry_point = node;
        }
    }

    fn link_back(&mut self, peer: u32, node: u32, distance: f64, level: usize) {
        let cap = self.max_neighbors(level);
        let list = &self.links[peer as usize][level];
        if list.len() < cap {
            self.links[peer as usize][level].push(node);
            return;
        }
        let base = self.vector(peer).to_vec();
        let mut pool: Vec<Neighbor> = list
            .iter()
            .map(|&other| Neighbor::new(other, self.metric.eval(&base, self.vector(other))))
            .collect();
        pool.push(Neighbor::new(node, distance));
        pool.sort();
        let kept = self.select_neighbors(&pool, cap);
        self.links[peer as usize][level] = kept.iter().map(|n| n.row).collect();
    }

    /// Diversity heuristic: keep a candidate only if it is closer to the base
    /// than to every neighbor already kept. `sorted` must be ascending.
    fn select_neighbors(&self, sorted: &[Neighbor], limit: usize) -> Vec<Neighbor> {
        let mut kept: Vec<Neighbor> = Vec::with_capacity(limit);
        for cand in sorted {
            if kept.len() >= limit {
                break;
            }
            let v = self.vector(cand.row);
            let diverse = kept
                .iter()
                .all(|k| self.metric.eval(v, self.vector(k.row)) > cand.distance);
            if diverse {
                kept.push(*cand);
            }
        }
        kept
    }
}
