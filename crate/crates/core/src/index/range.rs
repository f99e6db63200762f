use super::cursor::TopkCursor;
use super::hnsw::Neighbor;

/// Distance-range stream on top of a [`TopkCursor`].
///
/// Probes the underlying traversal one candidate at a time. Candidates within
/// `radius` are emitted. Once the traversal has produced its first in-range
/// candidate, every out-of-range probe bumps a counter that resets on the
/// next in-range hit; `patience` consecutive misses end the scan. Before the
/// first hit misses are not counted, since the traversal is still converging.
pub struct RangeCursor<'a> {
    inner: TopkCursor<'a>,
    radius: f64,
    patience: usize,
    has_in_range: bool,
    out_of_range: usize,
    probes: usize,
    emitted: usize,
    terminated: bool,
}

impl<'a> RangeCursor<'a> {
    pub(crate) fn new(inner: TopkCursor<'a>, radius: f64, patience: usize) -> Self {
        Self {
            inner,
            radius,
            patience,
            has_in_range: false,
            out_of_range: 0,
            probes: 0,
            emitted: 0,
            terminated: false,
        }
    }

    pub fn next_in_range(&mut self) -> Option<Neighbor> {
        self.next_in_range_until(|| false)
    }

    /// Like [`next_in_range`](Self::next_in_range), but consults `stop` before
    /// every probe; a `true` answer ends the scan for good.
    pub fn next_in_range_until(&mut self, mut stop: impl FnMut() -> bool) -> Option<Neighbor> {
        while !self.terminated {
            if stop() {
                self.terminated = true;
                break;
            }
            let Some(candidate) = self.inner.next_candidate() else {
                self.terminated = true;
                break;
            };
            self.probes += 1;
            if candidate.distance <= self.radius {
                self.has_in_range = true;
                self.out_of_range = 0;
                self.emitted += 1;
                return Some(candidate);
            }
            if self.has_in_range {
                self.out_of_range += 1;
                if self.out_of_range >= self.patience {
                    self.terminated = true;
                }
            }
        }
        None
    }

    pub fn has_in_range(&self) -> bool {
        self.has_in_range
    }

    pub fn out_of_range_count(&self) -> usize {
        self.out_of_range
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Candidates pulled from the underlying traversal so far.
    pub fn probes(&self) -> usize {
        self.probes
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }
}

impl Iterator for RangeCursor<'_> {
    type Item = Neighbor;

    fn next(&mut self) -> Option<Neighbor> {
        self.next_in_range()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Metric;
    use crate::index::{HnswIndex, HnswParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
    }

    fn l2(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn nothing_in_range() {
        let data = random_vectors(500, 4, 1);
        let index = HnswIndex::from_vectors(4, data, HnswParams::default(), Metric::L2).unwrap();
        let mut c = index.range_cursor(&[10.0; 4], 1.0, 48).unwrap();
        assert_eq!(c.next_in_range(), None);
        assert!(!c.has_in_range());
        assert_eq!(c.probes(), 500);
    }

    #[test]
    fn infinite_radius_emits_everything() {
        let data = random_vectors(700, 4, 2);
        let index = HnswIndex::from_vectors(4, data, HnswParams::default(), Metric::L2).unwrap();
        let rows: HashSet<u32> = index.range_cursor(&[0.0; 4], f64::INFINITY, 1).unwrap().map(|n| n.row).collect();
        assert_eq!(rows.len(), 700);
    }

    #[test]
    fn invalid_arguments() {
        let index = HnswIndex::from_vectors(2, vec![0.0, 0.0], HnswParams::default(), Metric::L2).unwrap();
        assert!(index.range_cursor(&[0.0, 0.0], f64::NAN, 4).is_err());
        assert!(index.range_cursor(&[0.0, 0.0], 1.0, 0).is_err());
    }

    #[test]
    fn stop_closure_ends_scan() {
        let data = random_vectors(300, 4, 3);
        let index = HnswIndex::from_vectors(4, data, HnswParams::default(), Metric::L2).unwrap();
        let mut c = index.range_cursor(&[0.0; 4], f64::INFINITY, 8).unwrap();
        let mut budget = 5;
        let mut n = 0;
        while c
            .next_in_range_until(|| {
                budget -= 1;
                budget < 0
            })
            .is_some()
        {
            n += 1;
        }
        assert_eq!(n, 5);
        assert!(c.is_terminated());
        assert_eq!(c.next_in_range(), None);
    }

    #[test]
    fn range_recall_near_120_members() {
        let (n, dim) = (10_000, 16);
        let data = random_vectors(n, dim, 4);
        let index = HnswIndex::from_vectors(dim, data.clone(), HnswParams::default(), Metric::L2).unwrap();
        let mut total = 0.0;
        let queries = random_vectors(30, dim, 5);
        for q in queries.chunks(dim) {
            let mut dists: Vec<f64> = data.chunks(dim).map(|v| l2(v, q)).collect();
            let truth_sorted = {
                let mut d = dists.clone();
                d.sort_by(f64::total_cmp);
                d
            };
            let radius = truth_sorted[119];
            let truth: HashSet<u32> = (0..n as u32).filter(|&i| dists[i as usize] <= radius).collect();
            let got: Vec<Neighbor> = index.range_cursor(q, radius, 48).unwrap().collect();
            for g in &got {
                assert!(truth.contains(&g.row));
                assert!(g.distance <= radius);
            }
            dists.clear();
            total += got.len() as f64 / truth.len() as f64;
        }
        let mean = total / 30.0;
        assert!(mean >= 0.99, "recall {mean}");
    }
}
