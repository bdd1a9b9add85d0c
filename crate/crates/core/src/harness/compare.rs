use std::fmt::Write as _;
use std::path::PathBuf;

use super::config::TrainConfig;
use super::metrics::MetricsRecord;
use super::train::{train, RunOutput};
use crate::par;
use crate::{Error, Result};

/// Consecutive evaluations that must stay at or above the threshold.
pub const SURPASS_WINDOW: usize = 3;

/// First evaluation step from which the return stays at or above
/// `threshold` for `SURPASS_WINDOW` consecutive evaluations (fewer if the
/// run ends first). `None` when that never happens.
pub fn surpass_step(records: &[MetricsRecord], threshold: f64) -> Option<u64> {
    (0..records.len()).find_map(|i| {
        let end = (i + SURPASS_WINDOW).min(records.len());
        records[i..end].iter().all(|r| r.eval_return >= threshold).then_some(records[i].step)
    })
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Median of surpass steps where "never" ranks above every step.
pub fn median_surpass(steps: &[Option<u64>]) -> Option<f64> {
    if steps.is_empty() {
        return None;
    }
    let v: Vec<f64> = steps.iter().map(|s| s.map_or(f64::INFINITY, |x| x as f64)).collect();
    let m = median(&v);
    m.is_finite().then_some(m)
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub outcome: std::result::Result<Vec<MetricsRecord>, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub final_returns: Vec<f64>,
    pub median_final: f64,
    pub q1_final: f64,
    pub q3_final: f64,
    pub surpass: Vec<Option<u64>>,
    pub median_surpass: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub threshold: f64,
    pub rows: Vec<CompareRow>,
    pub runs: Vec<RunResult>,
}

impl CompareReport {
    pub fn row(&self, label: &str) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "surpass threshold {:.4}", self.threshold).unwrap();
        writeln!(s, "{:<24} {:>5} {:>12} {:>25} {:>12}", "label", "runs", "median", "iqr", "surpass").unwrap();
        for r in &self.rows {
            let runs = if r.n_failed > 0 { format!("{}!{}", r.n_ok, r.n_failed) } else { r.n_ok.to_string() };
            let surpass = r.median_surpass.map_or("No".to_string(), |m| format!("{m:.0}"));
            writeln!(
                s,
                "{:<24} {:>5} {:>12.4} {:>25} {:>12}",
                r.label,
                runs,
                r.median_final,
                format!("[{:.4}, {:.4}]", r.q1_final, r.q3_final),
                surpass
            )
            .unwrap();
        }
        for run in &self.runs {
            if let Err(e) = &run.outcome {
                writeln!(s, "FAILED {} seed {}: {e}", run.label, run.seed).unwrap();
            }
        }
        s
    }
}

/// Summarises finished runs per label, keeping the first-seen label order.
pub fn summarize(runs: Vec<RunResult>, threshold: f64) -> CompareReport {
    let mut labels: Vec<String> = Vec::new();
    for r in &runs {
        if !labels.contains(&r.label) {
            labels.push(r.label.clone());
        }
    }
    let rows = labels
        .into_iter()
        .map(|label| {
            let mine: Vec<&RunResult> = runs.iter().filter(|r| r.label == label).collect();
            let ok: Vec<&Vec<MetricsRecord>> = mine.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let final_returns: Vec<f64> = ok.iter().map(|m| m.last().map_or(f64::NAN, |r| r.eval_return)).collect();
            let mut sorted = final_returns.clone();
            sorted.sort_by(f64::total_cmp);
            let surpass: Vec<Option<u64>> = ok.iter().map(|m| surpass_step(m, threshold)).collect();
            CompareRow {
                n_ok: ok.len(),
                n_failed: mine.len() - ok.len(),
                median_final: quantile_sorted(&sorted, 0.5),
                q1_final: quantile_sorted(&sorted, 0.25),
                q3_final: quantile_sorted(&sorted, 0.75),
                median_surpass: median_surpass(&surpass),
                final_returns,
                surpass,
                label,
            }
        })
        .collect();
    CompareReport { threshold, rows, runs }
}

/// Runs every `(config, seed)` pair, optionally in parallel, and
/// summarises. Failed runs are reported, not propagated. When `out_root`
/// is set each run writes into `out_root/<label>/seed-<seed>/`.
pub fn compare(
    configs: &[TrainConfig],
    seeds: &[u64],
    threshold: f64,
    parallel: bool,
    out_root: Option<PathBuf>,
) -> Result<CompareReport> {
    if seeds.is_empty() || configs.is_empty() {
        return Err(Error::Config("compare needs at least one config and one seed".into()));
    }
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<TrainConfig> =
        configs.iter().flat_map(|c| seeds.iter().map(move |&seed| TrainConfig { seed, ..c.clone() })).collect();
    let runs = par::map_indexed(parallel, jobs.len(), |i| {
        let c = &jobs[i];
        let out = match &out_root {
            Some(root) => RunOutput::dir(root.join(c.label()).join(format!("seed-{}", c.seed))),
            None => RunOutput::none(),
        };
        RunResult {
            label: c.label(),
            seed: c.seed,
            outcome: train(c, &out).map(|s| s.records).map_err(|e| e.to_string()),
        }
    });
    Ok(summarize(runs, threshold))
}
