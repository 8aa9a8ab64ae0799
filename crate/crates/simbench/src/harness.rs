//! Monte-Carlo driver: runs every `(method, n, rep)` cell and writes
//! `results.csv`, `summary.csv` and an SVG plot.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fcls_core::io::format_value;
use rayon::prelude::*;

use crate::data::generate_dataset;
use crate::error::{Result, SimError};
use crate::methods::run_method;
use crate::plot::render_svg;
use crate::scenario::SimScenario;

pub const RESULTS_HEADER: &str = "scenario,method,n,rep,metric,param,steps,wall_ms";
pub const SUMMARY_HEADER: &str = "scenario,method,n,mean,stderr,count,failures";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub method_index: usize,
    pub n: usize,
    pub rep: usize,
    /// NaN when the cell failed.
    pub metric: f64,
    pub param: Option<f64>,
    pub steps: usize,
    pub wall_ms: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `√count`; 0 for a single rep.
    pub stderr: f64,
    pub count: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SimReport {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    /// Sample sizes dropped as infeasible.
    pub skipped_n: Vec<usize>,
}

impl SimReport {
    pub fn failure_notes(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter_map(|r| {
                r.note
                    .as_ref()
                    .map(|note| format!("{} n={} rep={}: {note}", r.method, r.n, r.rep))
            })
            .collect()
    }
}

/// One data set, every method.
fn run_cell(scenario: &SimScenario, n: usize, rep: usize) -> Vec<ResultRow> {
    let row = |k: usize, name: &str| ResultRow {
        scenario: scenario.name.clone(),
        method: name.to_string(),
        method_index: k,
        n,
        rep,
        metric: f64::NAN,
        param: None,
        steps: 0,
        wall_ms: None,
        note: None,
    };
    let ds = match generate_dataset(scenario, n, rep) {
        Ok(ds) => ds,
        Err(e) => {
            return scenario
                .methods
                .iter()
                .enumerate()
                .map(|(k, m)| ResultRow {
                    note: Some(format!("data generation failed: {e}")),
                    ..row(k, &m.name)
                })
                .collect()
        }
    };
    scenario
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let start = Instant::now();
            let out = run_method(m, &ds, None, m.cheat);
            let wall_ms = scenario.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            match out {
                Ok(o) => ResultRow {
                    metric: o.metric,
                    param: o.param,
                    steps: o.steps,
                    wall_ms,
                    note: (o.grid_failures > 0).then(|| format!("{} grid point(s) failed", o.grid_failures)),
                    ..row(k, &m.name)
                },
                Err(e) => ResultRow {
                    wall_ms,
                    note: Some(e.to_string()),
                    ..row(k, &m.name)
                },
            }
        })
        .collect()
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for group in rows.chunk_by(|a, b| a.method_index == b.method_index && a.n == b.n) {
        let ok: Vec<f64> = group.iter().map(|r| r.metric).filter(|m| m.is_finite()).collect();
        let count = ok.len();
        let mean = if count > 0 { ok.iter().sum::<f64>() / count as f64 } else { f64::NAN };
        let stderr = if count > 1 {
            let var = ok.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else if count == 1 {
            0.0
        } else {
            f64::NAN
        };
        out.push(SummaryRow {
            scenario: group[0].scenario.clone(),
            method: group[0].method.clone(),
            n: group[0].n,
            mean,
            stderr,
            count,
            failures: group.len() - count,
        });
    }
    out
}

/// Runs all cells in the given order of `(n, rep)` pairs; the output does not
/// depend on that order or on the thread count.
pub fn run_cells(scenario: &SimScenario, cells: &[(usize, usize)], threads: Option<usize>) -> Result<Vec<ResultRow>> {
    let work = || -> Vec<ResultRow> {
        cells
            .par_iter()
            .flat_map_iter(|&(n, rep)| run_cell(scenario, n, rep))
            .collect()
    };
    let mut rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| SimError::Invalid(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    rows.sort_by_key(|r| (r.method_index, r.n, r.rep));
    Ok(rows)
}

/// Runs a scenario without writing files.
pub fn run_scenario(scenario: &SimScenario, threads: Option<usize>) -> Result<SimReport> {
    scenario.validate()?;
    let feasible = scenario.feasible_n_values();
    if feasible.is_empty() {
        return Err(SimError::Invalid(format!(
            "no sample size in {:?} is feasible (need at least {})",
            scenario.n_values,
            scenario.min_n()
        )));
    }
    let skipped_n = scenario
        .n_values
        .iter()
        .copied()
        .filter(|n| !feasible.contains(n))
        .collect();
    let cells: Vec<(usize, usize)> = feasible
        .iter()
        .flat_map(|&n| (0..scenario.reps).map(move |r| (n, r)))
        .collect();
    let rows = run_cells(scenario, &cells, threads)?;
    let summary = summarize(&rows);
    Ok(SimReport {
        rows,
        summary,
        skipped_n,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

fn metric_field(m: f64) -> String {
    if m.is_nan() {
        "NaN".into()
    } else {
        format_value(m)
    }
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        let wall = r.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.n,
            r.rep,
            metric_field(r.metric),
            opt(r.param),
            r.steps,
            wall
        )
        .unwrap();
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.n,
            metric_field(r.mean),
            metric_field(r.stderr),
            r.count,
            r.failures
        )
        .unwrap();
    }
    s
}

/// Parses `summary.csv` back into rows.
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(SimError::Invalid("summary.csv has an unexpected header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || SimError::Invalid(format!("summary.csv line {}: malformed row", k + 2));
            if f.len() != 7 {
                return Err(bad());
            }
            Ok(SummaryRow {
                scenario: f[0].to_string(),
                method: f[1].to_string(),
                n: f[2].parse().map_err(|_| bad())?,
                mean: f[3].parse().map_err(|_| bad())?,
                stderr: f[4].parse().map_err(|_| bad())?,
                count: f[5].parse().map_err(|_| bad())?,
                failures: f[6].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Paths written by [`monte_carlo`].
#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Runs a scenario and writes `results.csv`, `summary.csv` and
/// `plot_<scenario>.svg` into `out_dir`.
pub fn monte_carlo(scenario: &SimScenario, out_dir: &Path, threads: Option<usize>) -> Result<(SimReport, OutputFiles)> {
    let report = run_scenario(scenario, threads)?;
    fs::create_dir_all(out_dir)?;
    let files = OutputFiles {
        results: out_dir.join("results.csv"),
        summary: out_dir.join("summary.csv"),
        plot: out_dir.join(format!("plot_{}.svg", scenario.name)),
    };
    fs::write(&files.results, results_csv(&report.rows))?;
    let summary_text = summary_csv(&report.summary);
    fs::write(&files.summary, &summary_text)?;
    let parsed = parse_summary_csv(&summary_text)?;
    fs::write(&files.plot, render_svg(&scenario.name, &parsed))?;
    Ok((report, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method_index: usize, n: usize, rep: usize, metric: f64) -> ResultRow {
        ResultRow {
            scenario: "s".into(),
            method: format!("m{method_index}"),
            method_index,
            n,
            rep,
            metric,
            param: None,
            steps: 0,
            wall_ms: None,
            note: None,
        }
    }

    #[test]
    fn summary_statistics() {
        let rows = vec![row(0, 8, 0, 1.0), row(0, 8, 1, 2.0), row(0, 8, 2, 4.0), row(0, 8, 3, f64::NAN)];
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert!((s[0].mean - 7.0 / 3.0).abs() < 1e-15);
        let sd = ((1.0 - 7.0 / 3.0f64).powi(2) + (2.0 - 7.0 / 3.0f64).powi(2) + (4.0 - 7.0 / 3.0f64).powi(2)) / 2.0;
        assert!((s[0].stderr - (sd / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((s[0].count, s[0].failures), (3, 1));

        let single = summarize(&[row(1, 16, 0, 0.5)]);
        assert_eq!((single[0].mean, single[0].stderr), (0.5, 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let rows = summarize(&[row(0, 8, 0, 0.25), row(0, 8, 1, 0.75), row(1, 8, 0, 0.1)]);
        let text = summary_csv(&rows);
        assert!(text.starts_with(SUMMARY_HEADER));
        assert_eq!(parse_summary_csv(&text).unwrap(), rows);
        let r = results_csv(&[row(0, 8, 0, f64::NAN)]);
        assert_eq!(r, format!("{RESULTS_HEADER}\ns,m0,8,0,NaN,,0,\n"));
    }
}
