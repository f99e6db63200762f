use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::Catalog;
use crate::data::{quantile, save_table, write_vectors, Datum, Metric, ScalarValue, Table, TableBuilder};
use crate::error::{Error, Result};
use crate::index::{HnswIndex, HnswParams};

use super::templates::{items_schema, queries_schema};

pub const DEFAULT_N: usize = 10_000;
pub const DEFAULT_NQ: usize = 100;
pub const DEFAULT_DIM: usize = 16;
pub const DEFAULT_CATEGORIES: usize = 10;

/// Shape of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub n: usize,
    pub nq: usize,
    pub dim: usize,
    pub categories: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            nq: DEFAULT_NQ,
            dim: DEFAULT_DIM,
            categories: DEFAULT_CATEGORIES,
            seed: 42,
        }
    }
}

impl DatasetConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 || self.categories == 0 {
            return Err(Error::Config("n, dim and categories must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generated target table `items` and query table `queries`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub items: Arc<Table>,
    pub queries: Arc<Table>,
}

/// Layout of the inner cluster built by [`generate_clustered`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    /// Members per category placed within `inner_radius` of the center.
    pub inner_per_category: usize,
    /// Members per category placed between `inner_radius` and twice it.
    pub outer_per_category: usize,
    pub inner_radius: f64,
}

fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| (x / norm) as f32).collect();
        }
    }
}

/// A point at L2 distance exactly `radius` from `center`, in a uniformly
/// random direction.
fn at_distance(rng: &mut impl Rng, center: &[f32], radius: f64) -> Vec<f32> {
    let dir = unit_vector(rng, center.len());
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| (f64::from(*c) + radius * f64::from(*d)) as f32)
        .collect()
}

/// Prices are a shuffled permutation of `1..=n`, so `price <= quantile(s)`
/// selects `max(1, ceil(s * n))` rows.
fn prices(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    p.shuffle(rng);
    p
}

fn build_items(vectors: Vec<Vec<f32>>, prices: Vec<f64>, categories: Vec<i64>, dim: usize) -> Result<Table> {
    let mut b = TableBuilder::with_capacity(items_schema(dim), vectors.len());
    for (i, ((v, p), c)) in vectors.into_iter().zip(prices).zip(categories).enumerate() {
        b.push_row(vec![
            Datum::Scalar(ScalarValue::Int(i as i64)),
            Datum::Scalar(ScalarValue::Float(p)),
            Datum::Scalar(ScalarValue::Int(c)),
            Datum::Vector(v),
        ])?;
    }
    Ok(b.finish())
}

fn build_queries(vectors: Vec<Vec<f32>>, dim: usize) -> Result<Table> {
    let mut b = TableBuilder::with_capacity(queries_schema(dim), vectors.len());
    for (i, v) in vectors.into_iter().enumerate() {
        b.push_row(vec![Datum::Scalar(ScalarValue::Int(i as i64)), Datum::Vector(v)])?;
    }
    Ok(b.finish())
}

/// Uniform random unit vectors, permutation prices and uniform categories.
pub fn generate(config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vectors: Vec<Vec<f32>> = (0..config.n).map(|_| unit_vector(&mut rng, config.dim)).collect();
    let prices = prices(&mut rng, config.n);
    let categories = (0..config.n)
        .map(|_| rng.random_range(0..config.categories) as i64)
        .collect();
    let queries = (0..config.nq).map(|_| unit_vector(&mut rng, config.dim)).collect();
    Ok(Dataset {
        config: config.clone(),
        items: Arc::new(build_items(vectors, prices, categories, config.dim)?),
        queries: Arc::new(build_queries(queries, config.dim)?),
    })
}

/// Items around the first query vector: every category gets
/// `inner_per_category` members within the inner radius and
/// `outer_per_category` members between one and two inner radii. The
/// remaining rows are uniform unit vectors with uniform categories.
pub fn generate_clustered(config: &DatasetConfig, spec: ClusterSpec) -> Result<Dataset> {
    config.validate()?;
    let clustered = config.categories * (spec.inner_per_category + spec.outer_per_category);
    if clustered > config.n {
        return Err(Error::Config(format!(
            "cluster needs {clustered} rows but n = {}",
            config.n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let center = unit_vector(&mut rng, config.dim);
    let mut rows: Vec<(Vec<f32>, i64)> = Vec::with_capacity(config.n);
    for c in 0..config.categories as i64 {
        for _ in 0..spec.inner_per_category {
            let r = spec.inner_radius * rng.random_range(0.0..1.0);
            rows.push((at_distance(&mut rng, &center, r), c));
        }
        for _ in 0..spec.outer_per_category {
            let r = spec.inner_radius * rng.random_range(1.0..2.0);
            rows.push((at_distance(&mut rng, &center, r), c));
        }
    }
    while rows.len() < config.n {
        let c = rng.random_range(0..config.categories) as i64;
        rows.push((unit_vector(&mut rng, config.dim), c));
    }
    rows.shuffle(&mut rng);
    let prices = prices(&mut rng, config.n);
    let (vectors, categories) = rows.into_iter().unzip();
    let mut queries = vec![center];
    queries.extend((1..config.nq).map(|_| unit_vector(&mut rng, config.dim)));
    Ok(Dataset {
        config: config.clone(),
        items: Arc::new(build_items(vectors, prices, categories, config.dim)?),
        queries: Arc::new(build_queries(queries, config.dim)?),
    })
}

/// Dataset over externally supplied embeddings (row-major, `dim` wide).
/// Prices and categories are generated from `config.seed`; `config.n`,
/// `config.nq` and `config.dim` are taken from the inputs.
pub fn from_vectors(config: &DatasetConfig, dim: usize, items: &[f32], queries: &[f32]) -> Result<Dataset> {
    if dim == 0 || !items.len().is_multiple_of(dim) || !queries.len().is_multiple_of(dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: items.len() % dim.max(1) + queries.len() % dim.max(1),
        });
    }
    let config = DatasetConfig {
        n: items.len() / dim,
        nq: queries.len() / dim,
        dim,
        ..config.clone()
    };
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let prices = prices(&mut rng, config.n);
    let categories = (0..config.n)
        .map(|_| rng.random_range(0..config.categories) as i64)
        .collect();
    let rows = |v: &[f32]| v.chunks_exact(dim).map(<[f32]>::to_vec).collect::<Vec<_>>();
    Ok(Dataset {
        items: Arc::new(build_items(rows(items), prices, categories, dim)?),
        queries: Arc::new(build_queries(rows(queries), dim)?),
        config,
    })
}

/// Reads tables written by [`Dataset::write_files`].
pub fn load(dir: impl AsRef<Path>, config: &DatasetConfig) -> Result<Dataset> {
    let dir = dir.as_ref();
    let items = crate::data::load_table(dir.join("items.csv"), items_schema(config.dim))?;
    let queries = crate::data::load_table(dir.join("queries.csv"), queries_schema(config.dim))?;
    Ok(Dataset {
        config: DatasetConfig {
            n: items.row_count(),
            nq: queries.row_count(),
            ..config.clone()
        },
        items: Arc::new(items),
        queries: Arc::new(queries),
    })
}

impl Dataset {
    /// Price bound realizing `selectivity` on `items`.
    pub fn price_cut(&self, selectivity: f64) -> Result<f64> {
        let prices: Vec<f64> = (0..self.items.row_count() as u32)
            .map(|r| self.items.value(1, r).as_f64().unwrap_or(f64::NAN))
            .collect();
        quantile(&prices, selectivity)
    }

    pub fn query_vector(&self, i: usize) -> &[f32] {
        self.queries.vector(i as u32)
    }

    /// Catalog with both tables; `items` gets an index when `index` is set.
    pub fn catalog(&self, index: Option<HnswParams>) -> Result<Catalog> {
        let mut c = Catalog::new();
        match index {
            Some(params) => {
                let idx = HnswIndex::build(&self.items, "embedding", params, Metric::L2)?;
                c.register_indexed("items", self.items.clone(), Arc::new(idx));
            }
            None => {
                c.register_table("items", self.items.clone());
                c.set_metric("items", Metric::L2)?;
            }
        }
        c.register_table("queries", self.queries.clone());
        c.set_metric("queries", Metric::L2)?;
        Ok(c)
    }

    /// Writes `items.csv`, `queries.csv` and `items.vec` (binary vectors)
    /// into `dir`, returning the paths written.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let items = dir.join("items.csv");
        let queries = dir.join("queries.csv");
        let vectors = dir.join("items.vec");
        save_table(&items, &self.items)?;
        save_table(&queries, &self.queries)?;
        let (values, dim) = self.items.vectors().ok_or_else(|| Error::Config("items have no vectors".into()))?;
        write_vectors(&vectors, dim, values)?;
        Ok(vec![items, queries, vectors])
    }
}
