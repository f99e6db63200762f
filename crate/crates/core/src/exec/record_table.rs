use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::data::ScalarValue;

/// Number of recent distances kept per category.
pub const RECENT_WINDOW: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
struct MaxF64(f64);

impl Eq for MaxF64 {}

impl PartialOrd for MaxF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MaxF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone)]
pub struct CategoryState {
    queue: VecDeque<f64>,
    filtered_k: usize,
    best: BinaryHeap<MaxF64>,
    done: bool,
}

impl CategoryState {
    fn new() -> Self {
        Self {
            queue: VecDeque::with_capacity(RECENT_WINDOW),
            filtered_k: 0,
            best: BinaryHeap::new(),
            done: false,
        }
    }

    pub fn filtered_k(&self) -> usize {
        self.filtered_k
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn recent(&self) -> impl Iterator<Item = f64> + '_ {
        self.queue.iter().copied()
    }

    /// Current k-th best distance, once k tuples have been seen.
    pub fn kth_best(&self, k: usize) -> Option<f64> {
        (self.best.len() >= k).then(|| self.best.peek().map(|m| m.0)).flatten()
    }
}

/// Per-category progress of a windowed top-k over a range scan.
///
/// A category is done once it has `k` tuples and a full window of its last
/// [`RECENT_WINDOW`] arrivals, none of which beats its current k-th best
/// distance.
#[derive(Debug, Clone)]
pub struct RecordTable {
    k: usize,
    window: usize,
    categories: HashMap<ScalarValue, CategoryState>,
    rest_elements: usize,
}

impl RecordTable {
    pub fn new(k: usize) -> Self {
        Self::with_window(k, RECENT_WINDOW)
    }

    pub fn with_window(k: usize, window: usize) -> Self {
        Self {
            k,
            window: window.max(1),
            categories: HashMap::new(),
            rest_elements: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Categories seen but not yet done.
    pub fn rest_elements(&self) -> usize {
        self.rest_elements
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn category(&self, c: &ScalarValue) -> Option<&CategoryState> {
        self.categories.get(c)
    }

    /// Records one tuple. Returns true when this tuple finished its category.
    pub fn update(&mut self, category: &ScalarValue, sim: f64) -> bool {
        let k = self.k;
        let window = self.window;
        let state = match self.categories.get_mut(category) {
            Some(s) => s,
            None => {
                self.rest_elements += 1;
                self.categories.entry(category.clone()).or_insert_with(CategoryState::new)
            }
        };
        if state.queue.len() == window {
            state.queue.pop_front();
        }
        state.queue.push_back(sim);
        if state.done {
            return false;
        }
        state.filtered_k += 1;
        if k > 0 {
            state.best.push(MaxF64(sim));
            if state.best.len() > k {
                state.best.pop();
            }
        }
        let terminated = state.filtered_k >= k;
        let monotonic = state.queue.len() == window
            && match state.kth_best(k) {
                Some(kth) => state.queue.iter().all(|&d| d >= kth),
                None => k == 0,
            };
        if terminated && monotonic {
            state.done = true;
            self.rest_elements -= 1;
            return true;
        }
        false
    }

    /// Whether a feedback-enabled scan may stop before its next probe: it
    /// has emitted something, some category reached this table, and every
    /// category seen is done.
    pub fn allows_stop(&self, emitted: usize) -> bool {
        emitted >= 1 && !self.categories.is_empty() && self.rest_elements == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(v: i64) -> ScalarValue {
        ScalarValue::Int(v)
    }

    #[test]
    fn new_category_increments_rest() {
        let mut rt = RecordTable::new(3);
        assert_eq!(rt.rest_elements(), 0);
        rt.update(&c(1), 0.5);
        assert_eq!(rt.rest_elements(), 1);
        rt.update(&c(2), 0.5);
        assert_eq!(rt.rest_elements(), 2);
        rt.update(&c(1), 0.6);
        assert_eq!(rt.rest_elements(), 2);
    }

    #[test]
    fn single_category_k1_done_at_first_tuple() {
        let mut rt = RecordTable::with_window(1, 1);
        assert!(rt.update(&c(0), 0.1));
        assert_eq!(rt.rest_elements(), 0);
        assert!(rt.allows_stop(1));
        assert!(!rt.allows_stop(0));
    }

    #[test]
    fn no_stop_before_any_category_arrives() {
        let rt = RecordTable::new(1);
        assert!(!rt.allows_stop(5));
    }

    #[test]
    fn done_category_only_appends_to_queue() {
        let mut rt = RecordTable::with_window(1, 2);
        rt.update(&c(0), 0.1);
        assert!(rt.update(&c(0), 0.2));
        let before = rt.category(&c(0)).unwrap().clone();
        rt.update(&c(0), 0.05);
        let after = rt.category(&c(0)).unwrap();
        assert_eq!(after.filtered_k(), before.filtered_k());
        assert_eq!(after.kth_best(1), before.kth_best(1));
        assert_eq!(after.recent().collect::<Vec<_>>(), vec![0.2, 0.05]);
        assert_eq!(rt.rest_elements(), 0);
    }

    #[test]
    fn ascending_stream_finishes_after_k_plus_window() {
        let k = 10;
        let mut rt = RecordTable::new(k);
        let mut finished_at = None;
        for i in 0..100 {
            if rt.update(&c(0), i as f64) {
                finished_at = Some(i + 1);
            }
        }
        assert_eq!(finished_at, Some(k + RECENT_WINDOW - 1));
    }

    #[test]
    fn small_k_waits_for_a_full_window() {
        let mut rt = RecordTable::new(1);
        let finished: Vec<bool> = (0..RECENT_WINDOW).map(|i| rt.update(&c(0), i as f64)).collect();
        assert!(finished[..RECENT_WINDOW - 1].iter().all(|f| !f));
        assert!(finished[RECENT_WINDOW - 1]);
    }

    /// Straight-line re-statement of the update rule over full history.
    fn reference(k: usize, w: usize, stream: &[(i64, f64)]) -> (usize, Vec<(i64, bool, usize)>) {
        let mut seen: Vec<i64> = Vec::new();
        let mut done: Vec<i64> = Vec::new();
        let mut hist: HashMap<i64, Vec<f64>> = HashMap::new();
        let mut counted: HashMap<i64, Vec<f64>> = HashMap::new();
        for &(cat, d) in stream {
            if !seen.contains(&cat) {
                seen.push(cat);
            }
            hist.entry(cat).or_default().push(d);
            if done.contains(&cat) {
                continue;
            }
            let mine = counted.entry(cat).or_default();
            mine.push(d);
            if mine.len() >= k {
                let mut sorted = mine.clone();
                sorted.sort_by(f64::total_cmp);
                let kth = if k == 0 { f64::NEG_INFINITY } else { sorted[k - 1] };
                let h = &hist[&cat];
                let recent = &h[h.len().saturating_sub(w)..];
                if recent.len() == w && recent.iter().all(|&x| x >= kth) {
                    done.push(cat);
                }
            }
        }
        let rest = seen.len() - done.len();
        let per = seen
            .iter()
            .map(|c| (*c, done.contains(c), counted.get(c).map_or(0, |v| v.len())))
            .collect();
        (rest, per)
    }

    proptest! {
        #[test]
        fn matches_reference_simulation(
            k in 1usize..6,
            w in 1usize..6,
            stream in proptest::collection::vec((0i64..4, 0u8..50), 0..120),
        ) {
            let stream: Vec<(i64, f64)> = stream.into_iter().map(|(c, d)| (c, d as f64 / 10.0)).collect();
            let mut rt = RecordTable::with_window(k, w);
            for (cat, d) in &stream {
                rt.update(&c(*cat), *d);
                prop_assert!(rt.rest_elements() <= rt.category_count());
            }
            let (rest, per) = reference(k, w, &stream);
            prop_assert_eq!(rt.rest_elements(), rest);
            for (cat, done, counted) in per {
                let s = rt.category(&c(cat)).unwrap();
                prop_assert_eq!(s.is_done(), done);
                prop_assert_eq!(s.filtered_k(), counted);
                prop_assert!(s.recent().count() <= w);
            }
        }
    }
}
