use std::cell::Cell;
use std::fmt;

use crate::error::{Error, Result};

thread_local! {
    static DISTANCE_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of distance evaluations performed on the current thread.
///
/// The counter is per thread so concurrent queries (and concurrent tests) do
/// not pollute each other. Work fanned out to helper threads is folded back
/// into the caller with [`add_distance_calls`].
pub fn distance_calls() -> u64 {
    DISTANCE_CALLS.with(|c| c.get())
}

pub fn add_distance_calls(n: u64) {
    DISTANCE_CALLS.with(|c| c.set(c.get() + n));
}

/// Similarity measure. Scores are always distances: smaller is closer.
/// Inner-product similarity `s` is reported as distance `-s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    L2,
    InnerProduct,
}

impl Metric {
    /// Checked distance between two vectors.
    pub fn distance(&self, a: &[f32], b: &[f32]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                actual: b.len(),
            });
        }
        Ok(self.eval(a, b))
    }

    /// Distance without the dimension check; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval(&self, a: &[f32], b: &[f32]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        DISTANCE_CALLS.with(|c| c.set(c.get() + 1));
        match self {
            Metric::L2 => {
                let mut sum = 0.0f64;
                for (x, y) in a.iter().zip(b) {
                    let d = f64::from(*x) - f64::from(*y);
                    sum += d * d;
                }
                sum.sqrt()
            }
            Metric::InnerProduct => {
                let mut sum = 0.0f64;
                for (x, y) in a.iter().zip(b) {
                    sum += f64::from(*x) * f64::from(*y);
                }
                -sum
            }
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Some(Metric::L2),
            "ip" | "inner_product" | "innerproduct" => Some(Metric::InnerProduct),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::L2 => f.write_str("l2"),
            Metric::InnerProduct => f.write_str("ip"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Reference implementations kept deliberately naive and separate.
    fn dot_oracle(a: &[f32], b: &[f32]) -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            s += a[i] as f64 * b[i] as f64;
        }
        s
    }

    #[test]
    fn pythagorean_l2() {
        assert_eq!(Metric::L2.distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn orthogonal_inner_product_is_zero() {
        assert_eq!(
            Metric::InnerProduct.distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn inner_product_matches_dot_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..20 {
            let a: Vec<f32> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f32> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = Metric::InnerProduct.distance(&a, &b).unwrap();
            assert!((got + dot_oracle(&a, &b)).abs() < 1e-6);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            Metric::L2.distance(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn calls_are_counted() {
        let before = distance_calls();
        Metric::L2.distance(&[1.0], &[2.0]).unwrap();
        Metric::InnerProduct.distance(&[1.0], &[2.0]).unwrap();
        assert_eq!(distance_calls() - before, 2);
        let _ = Metric::L2.distance(&[1.0], &[2.0, 3.0]);
        assert_eq!(distance_calls() - before, 2);
    }

    fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f32>> {
        proptest::collection::vec(-100.0f32..100.0, dim)
    }

    proptest! {
        #[test]
        fn l2_self_distance_is_zero(v in vec_strategy(8)) {
            prop_assert_eq!(Metric::L2.distance(&v, &v).unwrap(), 0.0);
        }

        #[test]
        fn distance_is_symmetric((a, b) in (1usize..12).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d)))) {
            for m in [Metric::L2, Metric::InnerProduct] {
                prop_assert_eq!(m.distance(&a, &b).unwrap(), m.distance(&b, &a).unwrap());
            }
        }

        #[test]
        fn inner_product_argmin_is_raw_argmax(
            q in vec_strategy(4),
            set in proptest::collection::vec(vec_strategy(4), 1..20),
        ) {
            let by_distance = set
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da = Metric::InnerProduct.distance(&q, a.1).unwrap();
                    let db = Metric::InnerProduct.distance(&q, b.1).unwrap();
                    da.total_cmp(&db).then(a.0.cmp(&b.0))
                })
                .unwrap()
                .0;
            let by_similarity = set
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    dot_oracle(&q, a.1)
                        .total_cmp(&dot_oracle(&q, b.1))
                        .then(b.0.cmp(&a.0))
                })
                .unwrap()
                .0;
            prop_assert_eq!(by_distance, by_similarity);
        }
    }
}
