//! Shared fixtures for the criterion benchmarks.

use hybridqe_core::exec::{ExecMode, ExecOptions};
use hybridqe_core::index::HnswParams;
use hybridqe_core::plan::LogicalOp;
use hybridqe_core::workload::bench::{build_plan, default_k, RANGE_TARGET};
use hybridqe_core::workload::{calibrate_threshold, generate, Dataset, DatasetConfig, QueryParams, Template};
use hybridqe_core::{Catalog, Result};

/// A generated dataset with an indexed and an unindexed catalog.
pub struct Fixture {
    pub data: Dataset,
    pub indexed: Catalog,
    pub plain: Catalog,
    pub threshold: f64,
}

impl Fixture {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        let data = generate(&DatasetConfig {
            n,
            dim,
            ..DatasetConfig::default()
        })?;
        let indexed = data.catalog(Some(HnswParams::default()))?;
        let plain = data.catalog(None)?;
        let threshold = calibrate_threshold(&data, RANGE_TARGET, data.queries.row_count())?;
        Ok(Fixture {
            data,
            indexed,
            plain,
            threshold,
        })
    }

    pub fn params(&self, template: Template, selectivity: f64) -> Result<QueryParams> {
        Ok(QueryParams {
            query: 0,
            k: default_k(template),
            threshold: self.threshold,
            price_cut: self.data.price_cut(selectivity)?,
        })
    }

    /// Plan and catalog for one configuration; unoptimized runs the unrewritten plan without an index.
    pub fn prepare(&self, template: Template, selectivity: f64, mode: ExecMode) -> Result<(LogicalOp, &Catalog, ExecOptions)> {
        let catalog = if mode == ExecMode::Ann { &self.indexed } else { &self.plain };
        let p = self.params(template, selectivity)?;
        let plan = build_plan(template, &self.data, catalog, &p, mode != ExecMode::Unoptimized)?;
        let options = ExecOptions {
            threads: 4,
            ..ExecOptions::new(mode)
        };
        Ok((plan, catalog, options))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybridqe_core::exec::run_plan;

    #[test]
    fn every_configuration_runs() {
        let f = Fixture::new(400, 4).unwrap();
        for t in Template::ALL {
            for mode in [ExecMode::Ann, ExecMode::Exact, ExecMode::Unoptimized] {
                let (plan, catalog, options) = f.prepare(t, 0.5, mode).unwrap();
                run_plan(&plan, catalog, &options).unwrap();
            }
        }
    }
}
