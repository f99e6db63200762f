use std::fmt;
use std::str::FromStr;

use crate::catalog::Catalog;
use crate::data::{ColumnDef, DataType, Metric, Schema};
use crate::error::{Error, Result};

/// The six hybrid query shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
}

impl Template {
    pub const ALL: [Template; 6] = [Template::Q1, Template::Q2, Template::Q3, Template::Q4, Template::Q5, Template::Q6];

    /// Whether the template joins a query table against the target table.
    pub fn is_join(self) -> bool {
        matches!(self, Template::Q3 | Template::Q4 | Template::Q6)
    }

    /// SQL over the generated `items`/`queries` tables.
    pub fn bench_sql(self) -> &'static str {
        match self {
            Template::Q1 => {
                "SELECT id FROM items WHERE price <= ${price_cut} \
                 ORDER BY DISTANCE(embedding, ${query_embedding}) LIMIT ${k}"
            }
            Template::Q2 => {
                "SELECT id FROM items \
                 WHERE DISTANCE(embedding, ${query_embedding}) <= ${threshold} AND price <= ${price_cut}"
            }
            Template::Q3 => {
                "SELECT queries.id AS qid, items.id AS tid FROM queries JOIN items \
                 ON DISTANCE(queries.embedding, items.embedding) <= ${threshold} AND items.price <= ${price_cut}"
            }
            Template::Q4 => {
                "SELECT qid, tid FROM (SELECT queries.id AS qid, items.id AS tid, \
                 RANK() OVER (PARTITION BY queries.id ORDER BY DISTANCE(queries.embedding, items.embedding)) AS rank \
                 FROM queries JOIN items ON items.price <= ${price_cut}) AS ranked WHERE ranked.rank <= ${k}"
            }
            Template::Q5 => {
                "SELECT qid, category FROM (SELECT id AS qid, category, \
                 RANK() OVER (PARTITION BY category ORDER BY DISTANCE(embedding, ${query_embedding})) AS rank \
                 FROM items WHERE DISTANCE(embedding, ${query_embedding}) <= ${threshold} AND price <= ${price_cut}) \
                 AS ranked WHERE ranked.rank <= ${k}"
            }
            Template::Q6 => {
                "SELECT qid, category, tid FROM (SELECT queries.id AS qid, items.id AS tid, \
                 items.category AS category, \
                 RANK() OVER (PARTITION BY queries.id, items.category \
                 ORDER BY DISTANCE(queries.embedding, items.embedding)) AS rank \
                 FROM queries JOIN items ON DISTANCE(queries.embedding, items.embedding) <= ${threshold} \
                 AND items.price <= ${price_cut}) AS ranked WHERE ranked.rank <= ${k}"
            }
        }
    }

    /// The query as written for an application schema (see [`example_catalog`]).
    pub fn example_sql(self) -> &'static str {
        match self {
            Template::Q1 => {
                "SELECT id
FROM products
WHERE category = 'Electronics'
    AND price < 100
ORDER BY DISTANCE(embedding, ${ query_embedding })
LIMIT 50;"
            }
            Template::Q2 => {
                "SELECT id
FROM images
WHERE DISTANCE(embedding, ${ query_embedding }) <= ${ THRESHOLD }
AND location = 'US'
AND capture_date > '2023-07-01';"
            }
            Template::Q3 => {
                "SELECT queries.id AS qid, images.id AS tid
FROM queries
JOIN images
ON DISTANCE(queries.embedding, images.embedding) <= ${ THRESHOLD }
AND images.capture_date > queries.capture_date;"
            }
            Template::Q4 => {
                "SELECT qid, tid
FROM (
SELECT users.id AS qid,
    movies.id AS tid,
    RANK() OVER (
    PARTITION BY users.id
    ORDER BY DISTANCE(users.embedding, movies.embedding)
    ) AS rank
FROM users
JOIN movies ON users.preferred_rating = movies.rating
AND movies.release_year > users.preferred_release_year
) AS ranked WHERE ranked.rank <= 50;"
            }
            Template::Q5 => {
                "SELECT qid, category
FROM (
SELECT id AS qid,
    calorie_level AS category,
    RANK() OVER (
    PARTITION BY calorie_level
    ORDER BY DISTANCE(embedding, ${ query_embedding })
    ) AS rank
FROM recipes
WHERE DISTANCE(embedding, ${ query_embedding }) <= ${ R1 }
AND cuisine <> 'Italian'
) AS ranked
WHERE ranked.rank <= 10;"
            }
            Template::Q6 => {
                "SELECT qid, category, tid
FROM (
SELECT queries.id AS qid,recipes.id AS tid,
    recipes.calorie_level AS category,
    RANK() OVER (
    PARTITION BY queries.id, recipes.calorie_level
    ORDER BY DISTANCE(queries.embedding, recipes.embedding)
    ) AS rank
FROM queries
JOIN recipes ON DISTANCE(queries.embedding, recipes.embedding) <= ${ R1 }
AND queries.cuisine <> recipes.cuisine
) AS ranked WHERE ranked.rank <= 10;"
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = *self as usize + 1;
        write!(f, "q{n}")
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown template `{s}` (expected q1..q6)")))
    }
}

fn schema(cols: &[(&str, DataType)]) -> Schema {
    Schema::new(cols.iter().map(|(n, t)| ColumnDef::new(*n, *t)).collect(), "id").expect("static schema")
}

/// Schemas (no data) for the application-style example queries. All vector
/// columns use inner product.
pub fn example_catalog(dim: usize) -> Catalog {
    use DataType::*;
    let v = Vector(dim);
    let mut c = Catalog::new();
    let tables: [(&str, Vec<(&str, DataType)>); 6] = [
        ("products", vec![("id", Int64), ("category", Text), ("price", Float64), ("embedding", v)]),
        ("images", vec![("id", Int64), ("location", Text), ("capture_date", Text), ("embedding", v)]),
        ("queries", vec![("id", Int64), ("capture_date", Text), ("cuisine", Text), ("embedding", v)]),
        ("users", vec![("id", Int64), ("preferred_rating", Int64), ("preferred_release_year", Int64), ("embedding", v)]),
        ("movies", vec![("id", Int64), ("rating", Int64), ("release_year", Int64), ("embedding", v)]),
        ("recipes", vec![("id", Int64), ("calorie_level", Int64), ("cuisine", Text), ("embedding", v)]),
    ];
    for (name, cols) in tables {
        c.register_schema(name, schema(&cols));
        c.set_metric(name, Metric::InnerProduct).expect("just registered");
    }
    c
}

/// Schema of the generated target table.
pub fn items_schema(dim: usize) -> Schema {
    schema(&[
        ("id", DataType::Int64),
        ("price", DataType::Float64),
        ("category", DataType::Int64),
        ("embedding", DataType::Vector(dim)),
    ])
}

/// Schema of the generated query table.
pub fn queries_schema(dim: usize) -> Schema {
    schema(&[("id", DataType::Int64), ("embedding", DataType::Vector(dim))])
}

/// Bindings for the example queries: a fixed unit query vector and the
/// radius parameters.
pub fn example_params(dim: usize) -> crate::sql::Params {
    use crate::data::ScalarValue;
    use crate::plan::ParamValue;
    let mut q = vec![0.0f32; dim];
    q[0] = 1.0;
    let mut p = crate::sql::Params::new();
    p.insert("query_embedding".into(), ParamValue::vector(q));
    p.insert("THRESHOLD".into(), ParamValue::Scalar(ScalarValue::Float(-0.8)));
    p.insert("R1".into(), ParamValue::Scalar(ScalarValue::Float(-0.8)));
    p
}
