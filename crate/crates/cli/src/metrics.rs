//! Metrics, regret and report CSVs, plus the `key=value` run sidecar that
//! lets `report` label each run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use colband::replay::{ratio_series, MetricsSeries};
use colband::synth::RegretCurve;

use crate::error::CliError;

pub const METRICS_HEADER: &str =
    "bucket_index,matched,clicks,bucket_ctr,rolling_ctr,cumulative_ctr";
pub const REGRET_HEADER: &str = "step,inst_regret,cum_regret,cum_reward";
pub const REPORT_HEADER: &str = "run,bucket_index,cumulative_ratio,rolling_ratio";
pub const SUMMARY_HEADER: &str = "algo,clusters,sparsity,alpha,pct_over_random";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Metrics CSV; with `drop_warmup` the first `window − 1` buckets are left out.
pub fn format_metrics(series: &MetricsSeries, drop_warmup: bool) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    let bucket = series.bucket_ctr();
    let rolling = series.rolling_ctr();
    let cumulative = series.cumulative_ctr();
    let skip = if drop_warmup {
        series.window.saturating_sub(1)
    } else {
        0
    };
    for (i, &(m, c)) in series.buckets.iter().enumerate().skip(skip) {
        writeln!(
            out,
            "{i},{m},{c},{},{},{}",
            bucket[i], rolling[i], cumulative[i]
        )
        .expect("String");
    }
    out
}

pub fn format_regret(curve: &RegretCurve) -> String {
    let mut out = String::from(REGRET_HEADER);
    out.push('\n');
    for t in 0..curve.inst_regret.len() {
        writeln!(
            out,
            "{},{},{},{}",
            t + 1,
            curve.inst_regret[t],
            curve.cum_regret[t],
            curve.cum_reward[t]
        )
        .expect("String");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub bucket_index: usize,
    pub matched: u64,
    pub clicks: u64,
    pub bucket_ctr: f64,
    pub rolling_ctr: f64,
    pub cumulative_ctr: f64,
}

pub fn parse_metrics(text: &str, origin: &Path) -> Result<Vec<MetricsRow>, CliError> {
    let bad =
        |line: usize, msg: &str| CliError::Parse(format!("{}:{line}: {msg}", origin.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        _ => return Err(bad(1, "not a metrics CSV")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i + 1, "expected 6 fields"));
        }
        let int = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| bad(i + 1, "bad integer"))
        };
        let real = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(i + 1, "bad number"))
        };
        rows.push(MetricsRow {
            bucket_index: int(f[0])? as usize,
            matched: int(f[1])?,
            clicks: int(f[2])?,
            bucket_ctr: real(f[3])?,
            rolling_ctr: real(f[4])?,
            cumulative_ctr: real(f[5])?,
        });
    }
    Ok(rows)
}

/// Sidecar path for a run's output file.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn format_meta(fields: &[(&str, String)]) -> String {
    fields.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn parse_meta(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub struct Run {
    pub name: String,
    pub rows: Vec<MetricsRow>,
    pub meta: Vec<(String, String)>,
}

impl Run {
    pub fn meta(&self, key: &str) -> &str {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map_or("", |(_, v)| v.as_str())
    }

    fn final_ctr(&self) -> Option<f64> {
        self.rows.last().map(|r| r.cumulative_ctr)
    }
}

/// Percentage lift of `run`'s overall CTR over random's; `None` when either
/// run is empty or random never clicked.
pub fn pct_over_random(run: &Run, random: &Run) -> Option<f64> {
    let (p, r) = (run.final_ctr()?, random.final_ctr()?);
    (r != 0.0).then(|| (p / r - 1.0) * 100.0)
}

/// Per-bucket ratio table and summary table.
pub fn build_report(runs: &[Run], random: &Run) -> (String, String) {
    let mut table = String::from(REPORT_HEADER);
    table.push('\n');
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for run in runs {
        // join on bucket index
        let mut num_c = Vec::new();
        let mut den_c = Vec::new();
        let mut num_r = Vec::new();
        let mut den_r = Vec::new();
        let mut idx = Vec::new();
        for row in &run.rows {
            if let Some(base) = random
                .rows
                .iter()
                .find(|b| b.bucket_index == row.bucket_index)
            {
                idx.push(row.bucket_index);
                num_c.push(row.cumulative_ctr);
                den_c.push(base.cumulative_ctr);
                num_r.push(row.rolling_ctr);
                den_r.push(base.rolling_ctr);
            }
        }
        let cum = ratio_series(&num_c, &den_c);
        let roll = ratio_series(&num_r, &den_r);
        for k in 0..idx.len() {
            writeln!(
                table,
                "{},{},{},{}",
                run.name,
                idx[k],
                opt(cum[k]),
                opt(roll[k])
            )
            .expect("String");
        }
        writeln!(
            summary,
            "{},{},{},{},{}",
            run.meta("algo"),
            run.meta("clusters"),
            run.meta("sparsity"),
            run.meta("alpha"),
            opt(pct_over_random(run, random))
        )
        .expect("String");
    }
    (table, summary)
}
