use hybridqe_core::plan::{detect_pattern, optimize, parse_explain, LogicalOp, PatternKind};
use hybridqe_core::sql::{parse, plan_sql, render, Params};
use hybridqe_core::workload::{example_catalog, example_params, Template};
use hybridqe_core::{Catalog, Error};
use proptest::prelude::*;

fn plan(sql: &str) -> LogicalOp {
    plan_sql(sql, &example_catalog(4), &example_params(4)).unwrap()
}

fn kind(sql: &str) -> PatternKind {
    detect_pattern(&plan(sql), &example_catalog(4)).unwrap().kind
}

#[test]
fn detected_patterns() {
    let expected = [
        (Template::Q1, PatternKind::KnnLike),
        (Template::Q2, PatternKind::None),
        (Template::Q3, PatternKind::None),
        (Template::Q4, PatternKind::EntityCentric),
        (Template::Q5, PatternKind::CategoryDriven),
        (Template::Q6, PatternKind::CategoryDriven),
    ];
    for (t, k) in expected {
        assert_eq!(kind(t.example_sql()), k, "{t}");
    }
}

#[test]
fn pattern_k_values() {
    let cat = example_catalog(4);
    let k = |t: Template| detect_pattern(&plan(t.example_sql()), &cat).unwrap().k;
    assert_eq!(k(Template::Q1), Some(50));
    assert_eq!(k(Template::Q4), Some(50));
    assert_eq!(k(Template::Q5), Some(10));
}

#[test]
fn order_without_limit_is_not_knn() {
    let sql = "SELECT id FROM products WHERE price < 100 ORDER BY DISTANCE(embedding, ${query_embedding})";
    assert_eq!(kind(sql), PatternKind::None);
}

#[test]
fn order_by_scalar_is_not_knn() {
    let sql = "SELECT id FROM products ORDER BY price LIMIT 5";
    assert_eq!(kind(sql), PatternKind::None);
}

#[test]
fn window_partitioned_by_non_key_is_rejected() {
    let sql = Template::Q4
        .example_sql()
        .replace("PARTITION BY users.id", "PARTITION BY users.preferred_rating");
    assert_eq!(kind(&sql), PatternKind::None);
}

#[test]
fn category_window_without_range_bound_is_rejected() {
    let sql = Template::Q5
        .example_sql()
        .replace("WHERE DISTANCE(embedding, ${ query_embedding }) <= ${ R1 }\nAND", "WHERE");
    assert!(!sql.contains("R1"));
    assert_eq!(kind(&sql), PatternKind::None);
}

#[test]
fn category_join_partitioned_by_category_only_is_rejected() {
    let sql = Template::Q6
        .example_sql()
        .replace("PARTITION BY queries.id, recipes.calorie_level", "PARTITION BY recipes.calorie_level");
    assert_eq!(kind(&sql), PatternKind::None);
}

#[test]
fn rewrites_are_idempotent_on_templates() {
    let cat = example_catalog(4);
    for t in Template::ALL {
        let once = optimize(&plan(t.example_sql()), &cat).unwrap();
        assert_eq!(optimize(&once, &cat).unwrap(), once, "{t}");
        assert_eq!(detect_pattern(&once, &cat).unwrap().kind, PatternKind::None, "{t}");
    }
}

#[test]
fn explain_parses_back_to_the_same_text() {
    let cat = example_catalog(4);
    for t in Template::ALL {
        let before = plan(t.example_sql());
        let after = optimize(&before, &cat).unwrap();
        for p in [before, after] {
            let text = p.explain();
            assert_eq!(parse_explain(&text).unwrap().explain(), text, "{t}");
        }
    }
}

#[test]
fn rendered_sql_parses_to_the_same_query() {
    for t in Template::ALL {
        for sql in [t.example_sql(), t.bench_sql()] {
            let q = parse(sql).unwrap();
            assert_eq!(parse(&render(&q)).unwrap(), q, "{t}");
        }
    }
}

#[test]
fn unsupported_sql_is_reported() {
    for sql in [
        "SELECT id FROM products WHERE price < 1 OR price > 5",
        "SELECT category FROM products GROUP BY category",
        "SELECT * FROM products",
    ] {
        assert!(matches!(parse(sql), Err(Error::Unsupported(_))), "{sql}");
    }
}

#[test]
fn unbound_parameter_is_a_plan_error() {
    let sql = "SELECT id FROM products ORDER BY DISTANCE(embedding, ${missing}) LIMIT 3";
    let err = plan_sql(sql, &example_catalog(4), &Params::new()).unwrap_err();
    assert!(matches!(err, Error::Plan(_)), "{err}");
}

#[test]
fn unknown_table_is_a_plan_error() {
    let err = plan_sql("SELECT id FROM nowhere", &Catalog::new(), &Params::new()).unwrap_err();
    assert!(matches!(err, Error::Plan(_)), "{err}");
}

fn column() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["id", "price", "category"])
}

fn comparison() -> impl Strategy<Value = String> {
    (
        prop::sample::select(vec!["price", "id"]),
        prop::sample::select(vec!["<", "<=", ">", "=", "<>"]),
        -1000i32..1000,
    )
        .prop_map(|(c, op, v)| format!("{c} {op} {v}"))
}

proptest! {
    #[test]
    fn random_queries_survive_render_and_explain(
        cols in prop::collection::vec(column(), 1..4),
        filters in prop::collection::vec(comparison(), 0..4),
        bound in prop::option::of(-2.0f64..2.0),
        limit in prop::option::of(1usize..100),
    ) {
        let mut conds = filters.clone();
        if let Some(b) = bound {
            conds.push(format!("DISTANCE(embedding, ${{query_embedding}}) <= {b:?}"));
        }
        let mut sql = format!("SELECT {} FROM products", cols.join(", "));
        if !conds.is_empty() {
            sql.push_str(&format!(" WHERE {}", conds.join(" AND ")));
        }
        if let Some(k) = limit {
            sql.push_str(&format!(" ORDER BY embedding <*> ${{query_embedding}} LIMIT {k}"));
        }
        let q = parse(&sql).unwrap();
        prop_assert_eq!(parse(&render(&q)).unwrap(), q);

        let cat = example_catalog(4);
        let p = plan(&sql);
        let rewritten = optimize(&p, &cat).unwrap();
        prop_assert_eq!(optimize(&rewritten, &cat).unwrap(), rewritten.clone());
        for op in [p, rewritten] {
            let text = op.explain();
            prop_assert_eq!(parse_explain(&text).unwrap().explain(), text);
        }
    }
}
