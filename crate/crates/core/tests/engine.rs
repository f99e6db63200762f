use hybridqe_core::exec::{lower, run_plan, ExecMode, ExecOptions};
use hybridqe_core::index::HnswParams;
use hybridqe_core::workload::bench::{build_plan, result_keys};
use hybridqe_core::workload::{generate, oracle, Dataset, DatasetConfig, QueryParams, Template};
use hybridqe_core::Error;
use proptest::prelude::*;

fn small(seed: u64, n: usize) -> Dataset {
    generate(&DatasetConfig {
        n,
        nq: 8,
        dim: 6,
        categories: 4,
        seed,
    })
    .unwrap()
}

fn params(data: &Dataset, query: usize, k: usize, threshold: f64, selectivity: f64) -> QueryParams {
    QueryParams {
        query,
        k,
        threshold,
        price_cut: data.price_cut(selectivity).unwrap(),
    }
}

fn run(t: Template, data: &Dataset, p: &QueryParams, options: &ExecOptions, rewrites: bool) -> Vec<Vec<hybridqe_core::ScalarValue>> {
    let catalog = data.catalog(None).unwrap();
    let plan = build_plan(t, data, &catalog, p, rewrites).unwrap();
    let (rows, _) = run_plan(&plan, &catalog, options).unwrap();
    result_keys(t, &rows.rows).unwrap()
}

#[test]
fn q1_exact_agrees_with_oracle_over_seeds() {
    let exact = ExecOptions::new(ExecMode::Exact);
    for seed in 0..20 {
        let data = small(seed, 800);
        let p = params(&data, (seed % 8) as usize, 25, 0.0, 0.5);
        assert_eq!(run(Template::Q1, &data, &p, &exact, true), oracle(Template::Q1, &data, &p).unwrap(), "seed {seed}");
    }
}

#[test]
fn q1_with_k_equal_n_returns_every_row_in_order() {
    let data = small(3, 300);
    let p = params(&data, 0, 300, 0.0, 1.0);
    let got = run(Template::Q1, &data, &p, &ExecOptions::new(ExecMode::Exact), true);
    assert_eq!(got.len(), 300);
    assert_eq!(got, oracle(Template::Q1, &data, &p).unwrap());
}

#[test]
fn q2_below_minimum_distance_is_empty() {
    let data = small(4, 300);
    let p = params(&data, 0, 1, -1.0, 1.0);
    for mode in [ExecMode::Exact, ExecMode::Unoptimized] {
        assert!(run(Template::Q2, &data, &p, &ExecOptions::new(mode), false).is_empty());
    }
}

#[test]
fn thread_count_does_not_change_join_results() {
    let data = small(5, 600);
    let p = params(&data, 0, 7, 0.9, 0.7);
    for t in [Template::Q3, Template::Q4, Template::Q6] {
        let one = ExecOptions {
            threads: 1,
            ..ExecOptions::new(ExecMode::Exact)
        };
        let many = ExecOptions {
            threads: 6,
            ..ExecOptions::new(ExecMode::Exact)
        };
        assert_eq!(run(t, &data, &p, &one, true), run(t, &data, &p, &many, true), "{t}");
    }
}

#[test]
fn ann_mode_without_index_is_a_lowering_error() {
    let data = small(6, 100);
    let catalog = data.catalog(None).unwrap();
    let p = params(&data, 0, 5, 0.5, 1.0);
    let plan = build_plan(Template::Q1, &data, &catalog, &p, true).unwrap();
    let err = lower(&plan, &catalog, &ExecOptions::new(ExecMode::Ann)).unwrap_err();
    assert!(matches!(err, Error::Lowering { .. }), "{err}");
}

#[test]
fn pipelines_split_at_breakers() {
    let data = small(7, 500);
    let catalog = data.catalog(Some(HnswParams::default())).unwrap();
    let p = params(&data, 0, 10, 0.5, 1.0);
    let shape = |t: Template, rewrites: bool| {
        let plan = build_plan(t, &data, &catalog, &p, rewrites).unwrap();
        lower(&plan, &catalog, &ExecOptions::new(ExecMode::Ann)).unwrap().describe_pipelines()
    };
    assert_eq!(
        shape(Template::Q1, true),
        "AnnTopkScan -> Map -> Filter -> SortSink\nLimit -> Project -> Collector"
    );
    assert_eq!(
        shape(Template::Q5, true),
        "AnnRangeScan -> Map -> Filter -> UpdateState -> WindowSink\nProject -> Selection -> Project -> Collector"
    );
    assert_eq!(shape(Template::Q2, false), "AnnRangeScan -> Filter -> Project -> Collector");
}

#[test]
fn unoptimized_scans_every_row_for_range_queries() {
    let data = small(8, 400);
    let catalog = data.catalog(None).unwrap();
    let p = params(&data, 1, 5, 0.7, 1.0);
    let plan = build_plan(Template::Q2, &data, &catalog, &p, false).unwrap();
    let (_, stats) = run_plan(&plan, &catalog, &ExecOptions::new(ExecMode::Unoptimized)).unwrap();
    assert_eq!(stats.tuples_scanned, 400);
    assert_eq!(stats.distance_calls, 400);
}

#[test]
fn rewritten_top_k_reuses_index_distances() {
    let data = small(9, 2000);
    let catalog = data.catalog(Some(HnswParams::default())).unwrap();
    let p = params(&data, 2, 20, 0.0, 1.0);
    let plan = build_plan(Template::Q1, &data, &catalog, &p, true).unwrap();
    let (rows, stats) = run_plan(&plan, &catalog, &ExecOptions::new(ExecMode::Ann)).unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(stats.distance_calls_in("Map"), 0);
    assert_eq!(stats.distance_calls_in("SortSink"), 0);
    assert!(stats.distance_calls_in("AnnTopkScan") > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_mode_matches_oracle(
        seed in 0u64..1000,
        n in 1usize..400,
        k in 1usize..20,
        threshold in 0.2f64..1.6,
        selectivity in prop::sample::select(vec![1.0, 0.9, 0.7, 0.5, 0.3, 0.03]),
        rewrites in any::<bool>(),
    ) {
        let data = small(seed, n);
        let p = params(&data, (seed % 8) as usize, k, threshold, selectivity);
        let options = ExecOptions { threads: 3, ..ExecOptions::new(ExecMode::Exact) };
        for t in Template::ALL {
            prop_assert_eq!(run(t, &data, &p, &options, rewrites), oracle(t, &data, &p).unwrap(), "{}", t);
        }
    }

    #[test]
    fn ann_results_respect_predicates(seed in 0u64..200, k in 1usize..30, threshold in 0.3f64..1.2) {
        let data = small(seed, 600);
        let catalog = data.catalog(Some(HnswParams::default())).unwrap();
        let p = params(&data, 0, k, threshold, 0.5);
        let options = ExecOptions::new(ExecMode::Ann);
        for t in [Template::Q1, Template::Q2, Template::Q5] {
            let plan = build_plan(t, &data, &catalog, &p, true).unwrap();
            let (rows, _) = run_plan(&plan, &catalog, &options).unwrap();
            let got = result_keys(t, &rows.rows).unwrap();
            let truth_all = oracle(t, &data, &QueryParams { k: usize::MAX / 2, ..p }).unwrap();
            for row in &got {
                prop_assert!(truth_all.contains(row), "{} returned {:?}", t, row);
            }
            if t == Template::Q1 {
                prop_assert!(got.len() <= k);
            }
        }
    }
}
