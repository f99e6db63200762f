use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::hnsw::{HnswIndex, Neighbor};
use super::visited::Visited;

/// Expanded nodes held back before the closest one is released.
pub const DEFAULT_LOOKAHEAD: usize = 8;

/// Incremental nearest-neighbor stream over level 0 of an index.
///
/// Best-first traversal: a node is released once it and every node at least
/// as close have been expanded and `lookahead` expanded nodes are queued, so
/// emissions come out in roughly ascending distance without a fixed `k`.
/// When the reachable part of the graph is used up the traversal restarts
/// from the lowest unvisited row, so draining the cursor yields every row
/// exactly once.
pub struct TopkCursor<'a> {
    index: &'a HnswIndex,
    query: Vec<f32>,
    // Discovered, not yet expanded.
    frontier: BinaryHeap<Reverse<Neighbor>>,
    // Expanded, not yet emitted.
    ready: BinaryHeap<Reverse<Neighbor>>,
    lookahead: usize,
    visited: Visited,
    next_restart: u32,
    emitted: usize,
    exhausted: bool,
}

impl<'a> TopkCursor<'a> {
    pub(crate) fn new(index: &'a HnswIndex, query: Vec<f32>) -> Self {
        let mut cursor = Self {
            index,
            visited: Visited::new(index.len()),
            query,
            frontier: BinaryHeap::new(),
            ready: BinaryHeap::new(),
            lookahead: DEFAULT_LOOKAHEAD,
            next_restart: 0,
            emitted: 0,
            exhausted: false,
        };
        let entry = index.descend(&cursor.query, 0);
        cursor.discover(entry);
        cursor
    }

    /// Number of expanded nodes to hold before emitting (at least 1).
    pub fn with_lookahead(mut self, lookahead: usize) -> Self {
        self.lookahead = lookahead.max(1);
        self
    }

    fn discover(&mut self, node: Neighbor) {
        self.visited.insert(node.row);
        self.frontier.push(Reverse(node));
    }

    fn expand(&mut self, node: Neighbor) {
        self.ready.push(Reverse(node));
        for &next in self.index.neighbors(node.row, 0) {
            if !self.visited.contains(next) {
                let d = self.index.distance_to(&self.query, next);
                self.discover(Neighbor::new(next, d));
            }
        }
    }

    fn restart(&mut self) -> bool {
        match self.visited.first_unvisited(self.next_restart, self.index.len()) {
            Some(row) => {
                self.next_restart = row + 1;
                let d = self.index.distance_to(&self.query, row);
                self.discover(Neighbor::new(row, d));
                true
            }
            None => false,
        }
    }

    /// Next candidate, or `None` once every row has been emitted.
    pub fn next_candidate(&mut self) -> Option<Neighbor> {
        if self.exhausted {
            return None;
        }
        loop {
            let ready = self.ready.peek().map(|r| r.0);
            let frontier = self.frontier.peek().map(|r| r.0);
            match (ready, frontier) {
                (Some(p), f) if f.is_none_or(|f| p < f && self.ready.len() >= self.lookahead) => {
                    self.ready.pop();
                    self.emitted += 1;
                    return Some(p);
                }
                (_, Some(f)) => {
                    self.frontier.pop();
                    self.expand(f);
                }
                _ => {
                    if !self.restart() {
                        self.exhausted = true;
                        return None;
                    }
                }
            }
        }
    }

    /// Lower estimate of the distance of the next emission. Undiscovered
    /// nodes may still come out closer; the estimate is what the traversal
    /// currently knows. `None` when nothing is queued.
    pub fn peek_distance(&self) -> Option<(f64, u32)> {
        let p = self.ready.peek().map(|r| r.0);
        let f = self.frontier.peek().map(|r| r.0);
        match (p, f) {
            (Some(p), Some(f)) => Some(if p < f { (p.distance, p.row) } else { (f.distance, f.row) }),
            (Some(x), None) | (None, Some(x)) => Some((x.distance, x.row)),
            (None, None) => None,
        }
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }
}

impl Iterator for TopkCursor<'_> {
    type Item = Neighbor;

    fn next(&mut self) -> Option<Neighbor> {
        self.next_candidate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Metric;
    use crate::index::HnswParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
    }

    fn sorted_truth(data: &[f32], dim: usize, q: &[f32]) -> Vec<(f64, u32)> {
        let mut all: Vec<(f64, u32)> = data
            .chunks(dim)
            .enumerate()
            .map(|(i, v)| {
                let d: f64 = v.iter().zip(q).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum();
                (d.sqrt(), i as u32)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }

    #[test]
    fn single_point_emits_once() {
        let index = HnswIndex::from_vectors(2, vec![1.0, 1.0], HnswParams::default(), Metric::L2).unwrap();
        let mut c = index.topk_cursor(&[0.0, 0.0]).unwrap();
        assert_eq!(c.next_candidate().map(|n| n.row), Some(0));
        assert_eq!(c.next_candidate(), None);
        assert_eq!(c.next_candidate(), None);
        assert!(c.is_exhausted());
    }

    #[test]
    fn drain_is_a_permutation() {
        let n = 3_000;
        let index = HnswIndex::from_vectors(8, random_vectors(n, 8, 9), HnswParams::default(), Metric::L2).unwrap();
        let q = random_vectors(1, 8, 10);
        let rows: Vec<u32> = index.topk_cursor(&q).unwrap().map(|x| x.row).collect();
        assert_eq!(rows.len(), n);
        assert_eq!(rows.iter().collect::<HashSet<_>>().len(), n);
    }

    #[test]
    fn prefix_contains_most_of_true_topk() {
        // The first m emissions, re-sorted, should hold the true top 0.9*m.
        // Averaged over queries: best-first order is relaxed, not strict.
        let (n, dim) = (5_000, 16);
        let data = random_vectors(n, dim, 11);
        let index = HnswIndex::from_vectors(dim, data.clone(), HnswParams::default(), Metric::L2).unwrap();
        for m in [10usize, 20, 50] {
            let need = (0.9 * m as f64).ceil() as usize;
            let mut contained = 0.0;
            for seed in 0..40 {
                let q = random_vectors(1, dim, 100 + seed);
                let truth = sorted_truth(&data, dim, &q);
                let prefix: HashSet<u32> = index.topk_cursor(&q).unwrap().take(m).map(|x| x.row).collect();
                let hits = truth[..need].iter().filter(|t| prefix.contains(&t.1)).count();
                contained += hits as f64 / need as f64;
            }
            let mean = contained / 40.0;
            assert!(mean >= 0.9, "m {m}: {mean}");
        }
    }

    #[test]
    fn first_emission_is_near() {
        let dim = 8;
        for seed in 0..100u64 {
            let data = random_vectors(400, dim, 1_000 + seed);
            let params = HnswParams { seed, ..HnswParams::default() };
            let index = HnswIndex::from_vectors(dim, data, params, Metric::L2).unwrap();
            let q = random_vectors(1, dim, 5_000 + seed);
            let all: Vec<Neighbor> = index.topk_cursor(&q).unwrap().collect();
            let first = all[0].distance;
            let farther = all[1..].iter().filter(|x| x.distance >= first).count();
            assert!(farther as f64 >= 0.9 * (all.len() - 1) as f64, "seed {seed}");
        }
    }

    #[test]
    fn emissions_trend_upward() {
        let index = HnswIndex::from_vectors(16, random_vectors(4_000, 16, 12), HnswParams::default(), Metric::L2).unwrap();
        let q = random_vectors(1, 16, 13);
        let all: Vec<Neighbor> = index.topk_cursor(&q).unwrap().take(400).collect();
        let head: f64 = all[..100].iter().map(|x| x.distance).sum::<f64>() / 100.0;
        let tail: f64 = all[300..].iter().map(|x| x.distance).sum::<f64>() / 100.0;
        assert!(head < tail);
    }
}
