//! Multi-seed sweeps over network size and scheme.
//!
//! Every cell `(N, scheme, seed)` is an independent run. Finished cells are
//! persisted under `cells/` (curve first, metrics row last, each via a
//! temporary file and a rename); a sweep over a directory that already
//! holds some cells only runs the missing ones. Aggregate files are always
//! rebuilt from the full, sorted cell set, so they do not depend on
//! completion order or on how many times the sweep was resumed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{anlt_empirical, RunMetrics, METRIC_NAMES};
use crate::sim::{format_ms, simulate};
use crate::stats::ci95;
use crate::trees::Scheme;

pub const DEFAULT_NODE_COUNTS: [usize; 6] = [50, 100, 150, 200, 250, 300];
pub const DEFAULT_SEEDS: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub node_counts: Vec<usize>,
    pub schemes: Vec<Scheme>,
    /// Seeds per (N, scheme); seed values are `base.seed + i`.
    pub seeds: usize,
    pub base: SimConfig,
    pub out: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        ExperimentPlan {
            node_counts: DEFAULT_NODE_COUNTS.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            seeds: DEFAULT_SEEDS,
            base: SimConfig::default(),
            out: out.into(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds < 1 {
            return Err(Error::InvalidConfig("seeds must be at least 1".into()));
        }
        if self.node_counts.is_empty() || self.schemes.is_empty() {
            return Err(Error::InvalidConfig("node counts and schemes must be non-empty".into()));
        }
        self.base.validate()
    }

    /// All cells in (N, scheme, seed) order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &nodes in &self.node_counts {
            for &scheme in &self.schemes {
                for i in 0..self.seeds {
                    out.push(CellKey {
                        nodes,
                        scheme,
                        seed: self.base.seed + i as u64,
                    });
                }
            }
        }
        out.sort();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub nodes: usize,
    pub scheme: Scheme,
    pub seed: u64,
}

impl CellKey {
    pub fn file_stem(&self) -> String {
        format!("n{}-{}-s{}", self.nodes, self.scheme, self.seed)
    }

    pub fn config(&self, base: &SimConfig) -> SimConfig {
        SimConfig {
            node_count: self.nodes,
            seed: self.seed,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub metrics: RunMetrics,
    /// (time µs, sources alive).
    pub curve: Vec<(u64, usize)>,
}

pub fn run_cell(base: &SimConfig, key: CellKey) -> Result<CellResult> {
    let cfg = key.config(base);
    let (_, _, trace) = simulate(&cfg, key.scheme)?;
    Ok(CellResult {
        key,
        metrics: RunMetrics::from_trace(&trace, cfg.node_count),
        curve: anlt_empirical(&trace).curve,
    })
}

/// Run `cells` in parallel; results come back in input order.
pub fn run_cells(base: &SimConfig, cells: &[CellKey]) -> Vec<(CellKey, Result<CellResult>)> {
    cells
        .par_iter()
        .map(|&k| (k, run_cell(base, k)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub results: Vec<CellResult>,
    pub failures: Vec<(CellKey, Error)>,
    /// Cells run by this call (the rest were loaded from disk).
    pub computed: usize,
}

/// Run (or resume) a sweep and write every output file.
pub fn sweep(plan: &ExperimentPlan) -> Result<SweepOutcome> {
    plan.validate()?;
    let cell_dir = plan.out.join("cells");
    fs::create_dir_all(&cell_dir)?;
    let mut results = Vec::new();
    let mut missing = Vec::new();
    for key in plan.cells() {
        match load_cell(&cell_dir, key)? {
            Some(r) => results.push(r),
            None => missing.push(key),
        }
    }
    let computed = missing.len();
    let run = || -> Vec<(CellKey, Result<CellResult>)> {
        missing
            .par_iter()
            .map(|&k| {
                let r = run_cell(&plan.base, k).and_then(|r| {
                    store_cell(&cell_dir, &r)?;
                    Ok(r)
                });
                (k, r)
            })
            .collect()
    };
    let fresh = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut failures = Vec::new();
    for (k, r) in fresh {
        match r {
            Ok(r) => results.push(r),
            Err(e) => failures.push((k, e)),
        }
    }
    results.sort_by_key(|r| r.key);
    write_outputs(&plan.out, &results, &failures)?;
    Ok(SweepOutcome {
        results,
        failures,
        computed,
    })
}

pub fn write_outputs(out: &Path, results: &[CellResult], failures: &[(CellKey, Error)]) -> Result<()> {
    let summary = Summary::from_results(results);
    write_atomic(&out.join("metrics.csv"), &metrics_csv(results))?;
    write_atomic(&out.join("summary.csv"), &summary.to_csv())?;
    write_atomic(&out.join("lifetime_curve.csv"), &lifetime_curve_csv(results))?;
    for (name, body) in figure_files(&summary, results) {
        write_atomic(&out.join(name), &body)?;
    }
    write_atomic(&out.join("vs_espan.csv"), &vs_espan_csv(&summary))?;
    let mut f = String::from(FAILURES_HEADER);
    f.push('\n');
    for (k, e) in failures {
        let _ = writeln!(f, "{},{},{},\"{}\"", k.nodes, k.scheme, k.seed, e.to_string().replace('"', "'"));
    }
    write_atomic(&out.join("failures.csv"), &f)?;
    Ok(())
}

pub const FAILURES_HEADER: &str = "nodes,scheme,seed,error";
pub const CURVE_HEADER: &str = "t_us,sources_alive";
pub const LIFETIME_CURVE_HEADER: &str = "scheme,N,seed,t_ms,sources_alive";

pub fn metrics_header() -> String {
    format!("nodes,scheme,seed,{}", METRIC_NAMES.join(","))
}

fn metrics_row(r: &CellResult) -> String {
    format!("{},{},{},{}", r.key.nodes, r.key.scheme, r.key.seed, r.metrics.csv_fields())
}

pub fn metrics_csv(results: &[CellResult]) -> String {
    let mut s = metrics_header();
    s.push('\n');
    for r in results {
        s.push_str(&metrics_row(r));
        s.push('\n');
    }
    s
}

fn lifetime_curve_csv(results: &[CellResult]) -> String {
    let mut s = String::from(LIFETIME_CURVE_HEADER);
    s.push('\n');
    for r in results {
        for &(t, alive) in &r.curve {
            let _ = writeln!(s, "{},{},{},{},{}", r.key.scheme, r.key.nodes, r.key.seed, format_ms(t), alive);
        }
    }
    s
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn store_cell(dir: &Path, r: &CellResult) -> Result<()> {
    let stem = r.key.file_stem();
    let mut curve = String::from(CURVE_HEADER);
    curve.push('\n');
    for &(t, a) in &r.curve {
        let _ = writeln!(curve, "{t},{a}");
    }
    write_atomic(&dir.join(format!("{stem}.curve.csv")), &curve)?;
    let metrics = format!("{}\n{}\n", metrics_header(), metrics_row(r));
    write_atomic(&dir.join(format!("{stem}.metrics.csv")), &metrics)
}

fn load_cell(dir: &Path, key: CellKey) -> Result<Option<CellResult>> {
    let stem = key.file_stem();
    let mpath = dir.join(format!("{stem}.metrics.csv"));
    let cpath = dir.join(format!("{stem}.curve.csv"));
    if !mpath.exists() || !cpath.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&mpath)?;
    let row = text
        .lines()
        .nth(1)
        .ok_or_else(|| Error::Parse { line: 2, msg: format!("{stem}: missing row") })?;
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 3 + METRIC_NAMES.len() {
        return Err(Error::Parse { line: 2, msg: format!("{stem}: wrong field count") });
    }
    let values = fields[3..]
        .iter()
        .map(|f| f.parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse { line: 2, msg: format!("{stem}: {e}") })?;
    let metrics = RunMetrics::from_values(&values)?;
    let mut curve = Vec::new();
    for (i, line) in fs::read_to_string(&cpath)?.lines().enumerate().skip(1) {
        let parsed = line
            .split_once(',')
            .and_then(|(t, a)| Some((t.parse().ok()?, a.parse().ok()?)));
        curve.push(parsed.ok_or_else(|| Error::Parse { line: i + 1, msg: format!("{stem}: bad curve row") })?);
    }
    Ok(Some(CellResult { key, metrics, curve }))
}

/// Seed means and 95% half-widths per (N, scheme).
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: BTreeMap<(usize, Scheme), SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub seeds: usize,
    pub mean: Vec<f64>,
    pub ci95: Vec<f64>,
}

impl SummaryRow {
    pub fn get(&self, metric: &str) -> Option<(f64, f64)> {
        let k = METRIC_NAMES.iter().position(|&m| m == metric)?;
        Some((self.mean[k], self.ci95[k]))
    }
}

impl Summary {
    pub fn from_results(results: &[CellResult]) -> Self {
        let mut groups: BTreeMap<(usize, Scheme), Vec<&CellResult>> = BTreeMap::new();
        for r in results {
            groups.entry((r.key.nodes, r.key.scheme)).or_default().push(r);
        }
        let rows = groups
            .into_iter()
            .map(|(k, rs)| {
                let mut mean = Vec::new();
                let mut hw = Vec::new();
                for m in 0..METRIC_NAMES.len() {
                    let xs: Vec<f64> = rs.iter().map(|r| r.metrics.values()[m]).collect();
                    let (mu, h) = mean_ci(&xs);
                    mean.push(mu);
                    hw.push(h);
                }
                (k, SummaryRow { seeds: rs.len(), mean, ci95: hw })
            })
            .collect();
        Summary { rows }
    }

    pub fn mean(&self, nodes: usize, scheme: Scheme, metric: &str) -> Option<f64> {
        self.rows.get(&(nodes, scheme))?.get(metric).map(|p| p.0)
    }

    pub fn header() -> String {
        let mut s = String::from("nodes,scheme,seeds");
        for m in METRIC_NAMES {
            let _ = write!(s, ",{m}_mean,{m}_ci95");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = Summary::header();
        s.push('\n');
        for (&(n, scheme), row) in &self.rows {
            let _ = write!(s, "{n},{scheme},{}", row.seeds);
            for k in 0..METRIC_NAMES.len() {
                let _ = write!(s, ",{},{}", row.mean[k], row.ci95[k]);
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != Summary::header() {
            return Err(Error::Parse { line: 1, msg: "unexpected summary header".into() });
        }
        let mut rows = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let bad = |msg: &str| Error::Parse { line: i + 2, msg: msg.into() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 + 2 * METRIC_NAMES.len() {
                return Err(bad("wrong field count"));
            }
            let n: usize = f[0].parse().map_err(|_| bad("bad node count"))?;
            let scheme: Scheme = f[1].parse()?;
            let seeds: usize = f[2].parse().map_err(|_| bad("bad seed count"))?;
            let nums = f[3..]
                .iter()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad number"))?;
            let mean = nums.iter().step_by(2).copied().collect();
            let ci95 = nums.iter().skip(1).step_by(2).copied().collect();
            rows.insert((n, scheme), SummaryRow { seeds, mean, ci95 });
        }
        Ok(Summary { rows })
    }
}

/// Mean and half-width; the half-width is NaN with fewer than two samples.
fn mean_ci(xs: &[f64]) -> (f64, f64) {
    match ci95(xs) {
        Ok(p) => p,
        Err(_) => (xs.first().copied().unwrap_or(f64::NAN), f64::NAN),
    }
}

/// Seed-averaged time until only `sources_remaining` sources are alive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeLevel {
    pub sources_remaining: usize,
    /// Seeds whose run got down to this level.
    pub seeds_reached: usize,
    pub t_mean_s: f64,
    pub t_ci95_s: f64,
}

/// Lifetime levels per (N, scheme), from all sources alive down to none.
pub fn lifetime_levels(results: &[CellResult]) -> BTreeMap<(usize, Scheme), Vec<LifetimeLevel>> {
    let mut groups: BTreeMap<(usize, Scheme), Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.key.nodes, r.key.scheme)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(k, rs)| {
            let top = rs.iter().map(|r| r.curve.first().map_or(0, |c| c.1)).max().unwrap_or(0);
            let levels = (0..=top)
                .rev()
                .map(|level| {
                    let ts: Vec<f64> = rs
                        .iter()
                        .filter_map(|r| r.curve.iter().find(|c| c.1 <= level).map(|c| c.0 as f64 * 1e-6))
                        .collect();
                    let (m, h) = if ts.is_empty() { (f64::NAN, f64::NAN) } else { mean_ci(&ts) };
                    LifetimeLevel {
                        sources_remaining: level,
                        seeds_reached: ts.len(),
                        t_mean_s: m,
                        t_ci95_s: h,
                    }
                })
                .collect();
            (k, levels)
        })
        .collect()
}

pub fn figure_files(summary: &Summary, results: &[CellResult]) -> Vec<(&'static str, String)> {
    let table = |metrics: &[&str]| {
        let mut s = String::from("nodes,scheme");
        for m in metrics {
            let _ = write!(s, ",{m}_mean,{m}_ci95");
        }
        s.push('\n');
        for (&(n, scheme), row) in &summary.rows {
            let _ = write!(s, "{n},{scheme}");
            for m in metrics {
                let (mu, h) = row.get(m).unwrap();
                let _ = write!(s, ",{mu},{h}");
            }
            s.push('\n');
        }
        s
    };
    let mut fig4 = String::from("nodes,scheme,sources_remaining,seeds_reached,t_mean_s,t_ci95_s\n");
    for ((n, scheme), levels) in lifetime_levels(results) {
        for l in levels {
            let _ = writeln!(
                fig4,
                "{n},{scheme},{},{},{},{}",
                l.sources_remaining, l.seeds_reached, l.t_mean_s, l.t_ci95_s
            );
        }
    }
    vec![
        ("fig1_asc.csv", table(&["asc"])),
        ("fig2_atd.csv", table(&["atd", "atd_paper"])),
        ("fig3_ade.csv", table(&["ade"])),
        ("fig4_lifetime.csv", fig4),
        ("fig5-7_delay.csv", table(&["avg_dly_rs", "avg_dly_sp", "avg_dly"])),
        ("fig8_dr.csv", table(&["avg_dr", "avg_dr_paper"])),
    ]
}

pub const COMPARE_HEADER: &str = "nodes,scheme,metric,a,b,ratio,diff,savings";
pub const VS_ESPAN_HEADER: &str = "nodes,scheme,metric,value,espan,ratio";

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub nodes: usize,
    pub scheme: Scheme,
    pub metric: &'static str,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    pub diff: f64,
    /// `1 - a / b`.
    pub savings: f64,
}

/// Metric-by-metric comparison of two summaries over the same keys.
pub fn compare(a: &Summary, b: &Summary) -> Result<Vec<CompareRow>> {
    let only_a: Vec<_> = a.rows.keys().filter(|k| !b.rows.contains_key(k)).collect();
    let only_b: Vec<_> = b.rows.keys().filter(|k| !a.rows.contains_key(k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        let fmt = |ks: &[&(usize, Scheme)]| {
            ks.iter().map(|(n, s)| format!("{n}/{s}")).collect::<Vec<_>>().join(" ")
        };
        return Err(Error::InvalidArgument(format!(
            "summaries cover different keys; only in first: [{}]; only in second: [{}]",
            fmt(&only_a),
            fmt(&only_b)
        )));
    }
    let mut out = Vec::new();
    for (&(nodes, scheme), ra) in &a.rows {
        let rb = &b.rows[&(nodes, scheme)];
        for (k, &metric) in METRIC_NAMES.iter().enumerate() {
            let (x, y) = (ra.mean[k], rb.mean[k]);
            out.push(CompareRow {
                nodes,
                scheme,
                metric,
                a: x,
                b: y,
                ratio: x / y,
                diff: x - y,
                savings: 1.0 - x / y,
            });
        }
    }
    Ok(out)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from(COMPARE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.nodes, r.scheme, r.metric, r.a, r.b, r.ratio, r.diff, r.savings
        );
    }
    s
}

/// Every scheme's metrics relative to E-Span at the same N.
pub fn vs_espan_csv(summary: &Summary) -> String {
    let mut s = String::from(VS_ESPAN_HEADER);
    s.push('\n');
    for (&(n, scheme), row) in &summary.rows {
        let Some(base) = summary.rows.get(&(n, Scheme::Espan)) else {
            continue;
        };
        for (k, m) in METRIC_NAMES.iter().enumerate() {
            let _ = writeln!(s, "{n},{scheme},{m},{},{},{}", row.mean[k], base.mean[k], row.mean[k] / base.mean[k]);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_plan(dir: &Path) -> ExperimentPlan {
        ExperimentPlan {
            node_counts: vec![50],
            schemes: vec![Scheme::Espan, Scheme::Dlmt],
            seeds: 2,
            base: SimConfig {
                sim_duration: 20.0,
                ..SimConfig::default()
            },
            out: dir.to_path_buf(),
            threads: Some(2),
        }
    }

    #[test]
    fn default_plan_has_270_cells() {
        assert_eq!(ExperimentPlan::new("x").cells().len(), 270);
    }

    #[test]
    fn resume_recomputes_only_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let plan = tiny_plan(dir.path());
        let first = sweep(&plan).unwrap();
        assert_eq!(first.computed, 4);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let victim = CellKey { nodes: 50, scheme: Scheme::Dlmt, seed: 2 };
        fs::remove_file(dir.path().join("cells").join(format!("{}.metrics.csv", victim.file_stem()))).unwrap();
        let second = sweep(&plan).unwrap();
        assert_eq!(second.computed, 1);
        assert_eq!(fs::read_to_string(dir.path().join("summary.csv")).unwrap(), summary);
        assert_eq!(first.results, second.results);
    }

    #[test]
    fn summary_round_trips_and_self_compare_is_unity() {
        let dir = tempfile::tempdir().unwrap();
        let out = sweep(&tiny_plan(dir.path())).unwrap();
        let s = Summary::from_results(&out.results);
        let back = Summary::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.to_csv(), s.to_csv());
        let rows = compare(&s, &back).unwrap();
        assert!(rows.iter().any(|r| r.metric == "asc"));
        for r in rows.iter().filter(|r| r.a.is_finite() && r.a != 0.0) {
            assert_eq!(r.ratio, 1.0, "{}", r.metric);
        }
    }

    #[test]
    fn compare_reports_missing_keys() {
        let dir = tempfile::tempdir().unwrap();
        let out = sweep(&tiny_plan(dir.path())).unwrap();
        let a = Summary::from_results(&out.results);
        let mut b = a.clone();
        b.rows.remove(&(50, Scheme::Dlmt));
        let err = compare(&a, &b).unwrap_err().to_string();
        assert!(err.contains("50/dlmt"), "{err}");
    }
}
