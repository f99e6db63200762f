use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use crate::catalog::Catalog;
use crate::data::{Datum, ScalarValue};
use crate::error::{Error, Result};
use crate::exec::{lower, ExecMode, ExecOptions, ExecStats, PhysicalPlan};
use crate::index::HnswParams;
use crate::plan::{optimize, LogicalOp, ParamValue};
use crate::sql::{plan_sql, Params};

use super::datagen::Dataset;
use super::oracle::{oracle, recall, recall_by_query, QueryParams};
use super::templates::Template;

/// Selectivity levels swept by default.
pub const SELECTIVITIES: [f64; 6] = [1.0, 0.9, 0.7, 0.5, 0.3, 0.03];

/// In-range target used to calibrate the range threshold.
pub const RANGE_TARGET: usize = 120;

/// Default K: 50 for the top-k templates, 10 for the category ones.
pub fn default_k(t: Template) -> usize {
    match t {
        Template::Q5 | Template::Q6 => 10,
        _ => 50,
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub templates: Vec<Template>,
    pub selectivities: Vec<f64>,
    pub mode: ExecMode,
    pub rewrites: bool,
    pub feedback: bool,
    /// Overrides [`default_k`].
    pub k: Option<usize>,
    /// Range threshold; calibrated to [`RANGE_TARGET`] when unset.
    pub threshold: Option<f64>,
    pub threads: usize,
    pub reps: usize,
    /// Query vectors per single-query template.
    pub queries: usize,
    pub index: HnswParams,
    pub patience: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            templates: Template::ALL.to_vec(),
            selectivities: SELECTIVITIES.to_vec(),
            mode: ExecMode::Ann,
            rewrites: true,
            feedback: true,
            k: None,
            threshold: None,
            threads: 8,
            reps: 3,
            queries: 20,
            index: HnswParams::default(),
            patience: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == ExecMode::Unoptimized && self.rewrites {
            return Err(Error::Config(
                "unoptimized mode runs the plans as written; turn rewrites off".into(),
            ));
        }
        if self.reps == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if let Some(s) = self.selectivities.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Config(format!("selectivity {s} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            mode: self.mode,
            patience: self.patience,
            feedback: self.feedback,
            threads: self.threads.max(1),
            ..ExecOptions::default()
        }
    }
}

/// One line of a benchmark report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub template: Template,
    pub selectivity: f64,
    pub mode: ExecMode,
    pub rewrites: bool,
    /// Median over repetitions of the summed execution time of all queries.
    pub exec_time_ms: f64,
    pub recall: f64,
    pub distance_calls: u64,
    pub tuples_scanned: u64,
}

pub const CSV_HEADER: [&str; 8] = [
    "template",
    "selectivity",
    "mode",
    "rewrites",
    "execTimeMs",
    "recall",
    "distanceCalls",
    "tuplesScanned",
];

/// Template parameters as SQL bindings.
pub fn bind(template: Template, data: &Dataset, p: &QueryParams) -> Params {
    let mut params = Params::new();
    params.insert("price_cut".into(), ParamValue::Scalar(ScalarValue::Float(p.price_cut)));
    params.insert("threshold".into(), ParamValue::Scalar(ScalarValue::Float(p.threshold)));
    params.insert("k".into(), ParamValue::Scalar(ScalarValue::Int(p.k as i64)));
    if !template.is_join() {
        params.insert("query_embedding".into(), ParamValue::vector(data.query_vector(p.query).to_vec()));
    }
    params
}

/// Logical plan of one template instance, rewritten when asked.
pub fn build_plan(template: Template, data: &Dataset, catalog: &Catalog, p: &QueryParams, rewrites: bool) -> Result<LogicalOp> {
    let plan = plan_sql(template.bench_sql(), catalog, &bind(template, data, p))?;
    if rewrites {
        optimize(&plan, catalog)
    } else {
        Ok(plan)
    }
}

/// Result rows as scalars, in template order (Q1 keeps its order; others
/// are sorted).
pub fn result_keys(template: Template, rows: &[Vec<Datum>]) -> Result<Vec<Vec<ScalarValue>>> {
    let mut keys = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|d| match d {
                    Datum::Scalar(v) => Ok(v.clone()),
                    Datum::Vector(_) => Err(Error::exec("result", "vector in result row")),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if template != Template::Q1 {
        keys.sort();
    }
    Ok(keys)
}

/// Compiled instances of one (template, selectivity) cell.
struct Cell {
    plans: Vec<(QueryParams, PhysicalPlan)>,
}

fn template_recall(template: Template, data: &Dataset, found: &[Vec<ScalarValue>], p: &QueryParams) -> Result<f64> {
    let truth = oracle(template, data, p)?;
    Ok(if template.is_join() {
        let qids: Vec<i64> = (0..data.queries.row_count() as u32).map(|q| data.queries.primary_key(q)).collect();
        recall_by_query(found, &truth, &qids)
    } else {
        recall(found, &truth)
    })
}

/// Runs every configured (template, selectivity) cell on `data`.
pub fn run_bench(config: &BenchConfig, data: &Dataset, catalog: &Catalog) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let options = config.exec_options();
    let threshold = match config.threshold {
        Some(t) => t,
        None => super::oracle::calibrate_threshold(data, RANGE_TARGET, data.queries.row_count())?,
    };
    let mut report = Vec::new();
    for &template in &config.templates {
        for &selectivity in &config.selectivities {
            let price_cut = data.price_cut(selectivity)?;
            let instances: Vec<usize> = if template.is_join() {
                vec![0]
            } else {
                (0..config.queries.min(data.queries.row_count()).max(1)).collect()
            };
            let mut cell = Cell { plans: Vec::new() };
            for query in instances {
                let p = QueryParams {
                    query,
                    k: config.k.unwrap_or_else(|| default_k(template)),
                    threshold,
                    price_cut,
                };
                let logical = build_plan(template, data, catalog, &p, config.rewrites)?;
                cell.plans.push((p, lower(&logical, catalog, &options)?));
            }
            report.push(run_cell(template, selectivity, config, data, &cell)?);
        }
    }
    Ok(report)
}

fn run_cell(template: Template, selectivity: f64, config: &BenchConfig, data: &Dataset, cell: &Cell) -> Result<ReportRow> {
    let mut times = Vec::with_capacity(config.reps);
    let mut last: Vec<(Vec<Vec<ScalarValue>>, ExecStats)> = Vec::new();
    for rep in 0..=config.reps {
        let mut elapsed = 0.0;
        last.clear();
        for (_, plan) in &cell.plans {
            let start = Instant::now();
            let (rows, stats) = plan.execute()?;
            elapsed += start.elapsed().as_secs_f64() * 1e3;
            last.push((result_keys(template, &rows.rows)?, stats));
        }
        if rep > 0 {
            times.push(elapsed);
        }
    }
    let mut recall_sum = 0.0;
    for ((p, _), (found, _)) in cell.plans.iter().zip(&last) {
        recall_sum += template_recall(template, data, found, p)?;
    }
    Ok(ReportRow {
        template,
        selectivity,
        mode: config.mode,
        rewrites: config.rewrites,
        exec_time_ms: median(&mut times),
        recall: recall_sum / cell.plans.len() as f64,
        distance_calls: last.iter().map(|(_, s)| s.distance_calls).sum(),
        tuples_scanned: last.iter().map(|(_, s)| s.tuples_scanned).sum(),
    })
}

/// Median; mean of the middle pair for even lengths. 0 for empty input.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn fields(r: &ReportRow) -> [String; 8] {
    [
        r.template.to_string(),
        format!("{}", r.selectivity),
        r.mode.to_string(),
        if r.rewrites { "on" } else { "off" }.to_string(),
        format!("{:.3}", r.exec_time_ms),
        format!("{:.4}", r.recall),
        r.distance_calls.to_string(),
        r.tuples_scanned.to_string(),
    ]
}

pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(fields(r)).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Right-aligned text table of the report.
pub fn format_table(rows: &[ReportRow]) -> String {
    let cells: Vec<[String; 8]> = rows.iter().map(fields).collect();
    let widths: Vec<usize> = (0..8)
        .map(|i| cells.iter().map(|c| c[i].len()).chain([CSV_HEADER[i].len()]).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    let line = |s: &mut String, vals: &[&str]| {
        let parts: Vec<String> = vals.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  "));
    };
    line(&mut s, &CSV_HEADER);
    for c in &cells {
        let refs: Vec<&str> = c.iter().map(String::as_str).collect();
        line(&mut s, &refs);
    }
    s
}
