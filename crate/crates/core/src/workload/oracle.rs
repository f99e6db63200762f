use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;

use crate::data::{RowId, ScalarValue, Table};
use crate::error::{Error, Result};

use super::datagen::Dataset;
use super::templates::Template;

/// Parameter values of one template instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryParams {
    /// Row of the query table used by single-query templates.
    pub query: usize,
    pub k: usize,
    pub threshold: f64,
    pub price_cut: f64,
}

// Plain L2, kept separate from the engine's metric code (and its counter).
fn l2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn price(items: &Table, row: RowId) -> f64 {
    items.value(1, row).as_f64().unwrap_or(f64::NAN)
}

fn category(items: &Table, row: RowId) -> i64 {
    items.value(2, row).as_i64().unwrap_or(i64::MIN)
}

fn id(t: &Table, row: RowId) -> i64 {
    t.primary_key(row)
}

/// `(distance, row)` for every item passing the price filter, ascending,
/// ties broken by row id.
fn ranked(items: &Table, query: &[f32], price_cut: f64) -> Vec<(f64, RowId)> {
    let mut v: Vec<(f64, RowId)> = (0..items.row_count() as RowId)
        .filter(|&r| price(items, r) <= price_cut)
        .map(|r| (l2(items.vector(r), query), r))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v
}

/// Top `k` per category among `(distance, row)` pairs already sorted.
fn per_category(items: &Table, sorted: &[(f64, RowId)], k: usize) -> Vec<RowId> {
    let mut taken: BTreeMap<i64, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for &(_, r) in sorted {
        let n = taken.entry(category(items, r)).or_default();
        if *n < k {
            *n += 1;
            out.push(r);
        }
    }
    out
}

/// Brute-force answer of `template` in the engine's output column order.
/// Q1 rows are in distance order; other templates are sorted by value.
pub fn oracle(template: Template, data: &Dataset, p: &QueryParams) -> Result<Vec<Vec<ScalarValue>>> {
    let items = &*data.items;
    let queries = &*data.queries;
    if !template.is_join() && p.query >= queries.row_count() {
        return Err(Error::Config(format!(
            "query row {} out of range ({} queries)",
            p.query,
            queries.row_count()
        )));
    }
    let int = ScalarValue::Int;
    let mut rows: Vec<Vec<ScalarValue>> = match template {
        Template::Q1 => {
            let all = ranked(items, queries.vector(p.query as RowId), p.price_cut);
            return Ok(all.iter().take(p.k).map(|&(_, r)| vec![int(id(items, r))]).collect());
        }
        Template::Q2 => ranked(items, queries.vector(p.query as RowId), p.price_cut)
            .into_iter()
            .take_while(|(d, _)| *d <= p.threshold)
            .map(|(_, r)| vec![int(id(items, r))])
            .collect(),
        Template::Q5 => {
            let within: Vec<_> = ranked(items, queries.vector(p.query as RowId), p.price_cut)
                .into_iter()
                .take_while(|(d, _)| *d <= p.threshold)
                .collect();
            per_category(items, &within, p.k)
                .into_iter()
                .map(|r| vec![int(id(items, r)), int(category(items, r))])
                .collect()
        }
        Template::Q3 | Template::Q4 | Template::Q6 => {
            let mut out = Vec::new();
            for q in 0..queries.row_count() as RowId {
                let qid = id(queries, q);
                let all = ranked(items, queries.vector(q), p.price_cut);
                match template {
                    Template::Q3 => out.extend(
                        all.iter()
                            .take_while(|(d, _)| *d <= p.threshold)
                            .map(|&(_, r)| vec![int(qid), int(id(items, r))]),
                    ),
                    Template::Q4 => out.extend(all.iter().take(p.k).map(|&(_, r)| vec![int(qid), int(id(items, r))])),
                    _ => {
                        let within: Vec<_> = all.into_iter().take_while(|(d, _)| *d <= p.threshold).collect();
                        out.extend(
                            per_category(items, &within, p.k)
                                .into_iter()
                                .map(|r| vec![int(qid), int(category(items, r)), int(id(items, r))]),
                        );
                    }
                }
            }
            out
        }
    };
    rows.sort();
    Ok(rows)
}

/// `|found ∩ truth| / |truth|`, 1 when `truth` is empty.
pub fn recall<T: Eq + Hash>(found: &[T], truth: &[T]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let found: HashSet<&T> = found.iter().collect();
    let hits = truth.iter().filter(|t| found.contains(t)).count();
    hits as f64 / truth.len() as f64
}

/// Mean recall per query id. Rows are `[qid, rest...]`; every qid in `qids`
/// counts, including ones with no true rows.
pub fn recall_by_query(found: &[Vec<ScalarValue>], truth: &[Vec<ScalarValue>], qids: &[i64]) -> f64 {
    if qids.is_empty() {
        return 1.0;
    }
    let split = |rows: &[Vec<ScalarValue>]| {
        let mut m: BTreeMap<i64, Vec<Vec<ScalarValue>>> = BTreeMap::new();
        for r in rows {
            if let Some(q) = r.first().and_then(ScalarValue::as_i64) {
                m.entry(q).or_default().push(r[1..].to_vec());
            }
        }
        m
    };
    let f = split(found);
    let t = split(truth);
    let empty = Vec::new();
    let total: f64 = qids
        .iter()
        .map(|q| recall(f.get(q).unwrap_or(&empty), t.get(q).unwrap_or(&empty)))
        .sum();
    total / qids.len() as f64
}

/// Radius at which a query has `target` items in range, taken as the median
/// over the first `sample` queries.
pub fn calibrate_threshold(data: &Dataset, target: usize, sample: usize) -> Result<f64> {
    let items = &*data.items;
    let n = items.row_count();
    let sample = sample.min(data.queries.row_count());
    if n == 0 || sample == 0 || target == 0 {
        return Err(Error::EmptyInput("threshold calibration needs items, queries and a target".into()));
    }
    let rank = target.min(n) - 1;
    let mut radii: Vec<f64> = (0..sample as RowId)
        .map(|q| {
            let query = data.queries.vector(q);
            let mut d: Vec<f64> = (0..n as RowId).map(|r| l2(items.vector(r), query)).collect();
            d.select_nth_unstable_by(rank, f64::total_cmp);
            d[rank]
        })
        .collect();
    radii.sort_by(f64::total_cmp);
    Ok(radii[radii.len() / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::datagen::{generate, DatasetConfig};

    fn data() -> Dataset {
        generate(&DatasetConfig {
            n: 500,
            nq: 4,
            dim: 4,
            categories: 3,
            seed: 8,
        })
        .unwrap()
    }

    #[test]
    fn recall_edges() {
        assert_eq!(recall(&[1, 2, 3], &[3, 2, 1]), 1.0);
        assert_eq!(recall(&[4], &[1, 2]), 0.0);
        assert_eq!(recall::<i32>(&[], &[]), 1.0);
        assert_eq!(recall(&[1, 9], &[1, 2]), 0.5);
    }

    #[test]
    fn q2_below_min_distance_is_empty() {
        let d = data();
        let p = QueryParams {
            query: 0,
            k: 1,
            threshold: -1.0,
            price_cut: f64::INFINITY,
        };
        assert!(oracle(Template::Q2, &d, &p).unwrap().is_empty());
    }

    #[test]
    fn q1_with_k_n_sorts_everything() {
        let d = data();
        let p = QueryParams {
            query: 1,
            k: 500,
            threshold: 0.0,
            price_cut: f64::INFINITY,
        };
        let rows = oracle(Template::Q1, &d, &p).unwrap();
        assert_eq!(rows.len(), 500);
        let q = d.query_vector(1);
        let dist: Vec<f64> = rows
            .iter()
            .map(|r| l2(d.items.vector(r[0].as_i64().unwrap() as u32), q))
            .collect();
        assert!(dist.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn q5_respects_k_per_category() {
        let d = data();
        let p = QueryParams {
            query: 2,
            k: 4,
            threshold: 1.2,
            price_cut: f64::INFINITY,
        };
        let rows = oracle(Template::Q5, &d, &p).unwrap();
        let mut per: BTreeMap<i64, usize> = BTreeMap::new();
        for r in &rows {
            *per.entry(r[1].as_i64().unwrap()).or_default() += 1;
        }
        assert!(per.values().all(|&c| c <= 4));
        assert_eq!(per.len(), 3);
    }

    #[test]
    fn calibration_hits_target_for_median_query() {
        let d = data();
        let t = calibrate_threshold(&d, 50, 4).unwrap();
        let counts: Vec<usize> = (0..4)
            .map(|q| {
                let query = d.query_vector(q);
                (0..500u32).filter(|&r| l2(d.items.vector(r), query) <= t).count()
            })
            .collect();
        assert!(counts.contains(&50) || counts.iter().any(|&c| c >= 50), "{counts:?}");
    }

    #[test]
    fn per_query_recall_counts_empty_queries() {
        let row = |q: i64, t: i64| vec![ScalarValue::Int(q), ScalarValue::Int(t)];
        let truth = vec![row(0, 1), row(0, 2)];
        let found = vec![row(0, 1)];
        assert_eq!(recall_by_query(&found, &truth, &[0, 1]), 0.75);
    }
}
