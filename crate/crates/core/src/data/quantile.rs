use crate::error::{Error, Result};

/// Nearest-rank quantile: the value at 1-based rank `ceil(q * n)` of the
/// sorted input (rank clamped to at least 1).
///
/// On distinct values, `x <= quantile(xs, q)` holds for exactly
/// `max(1, ceil(q * n))` elements.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty column".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("quantile fraction {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_rank_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.5).unwrap(), 50.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 100.0);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptyInput(_))));
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn agrees_with_sort_oracle_within_one_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let got = quantile(&v, 0.3).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = sorted.iter().position(|x| *x == got).unwrap() as i64;
        assert!((rank - 2999).abs() <= 1, "rank {rank}");
    }

    #[test]
    fn selectivity_of_quantile_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..2_000).map(|_| rng.random::<f64>()).collect();
        for s in [0.03, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let cut = quantile(&v, s).unwrap();
            let below = v.iter().filter(|x| **x < cut).count() as f64 / v.len() as f64;
            let at_or_below = v.iter().filter(|x| **x <= cut).count() as f64 / v.len() as f64;
            assert!((below - s).abs() <= 1.0 / v.len() as f64 + 1e-12);
            assert!((at_or_below - s).abs() <= 1.0 / v.len() as f64 + 1e-12);
        }
    }
}
