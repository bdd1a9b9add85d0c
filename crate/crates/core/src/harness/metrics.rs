use std::fmt::Write as _;
use std::path::Path;

use super::Variant;
use crate::{Error, Result};

/// Columns of `metrics.csv`, in order.
pub const METRICS_HEADER: [&str; 13] = [
    "variant",
    "seed",
    "step",
    "eval_return",
    "critic_loss",
    "actor_loss",
    "lambda",
    "mean_target",
    "r_min",
    "be_trajectories",
    "updates",
    "episodes",
    "admitted",
];

/// One row per evaluation. Losses and the mean target are averages over
/// the updates since the previous evaluation (NaN when there were none);
/// `r_min` is NaN for variants without an experience buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub variant: String,
    pub seed: u64,
    pub step: u64,
    pub eval_return: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub lambda: f64,
    pub mean_target: f64,
    pub r_min: f64,
    pub be_trajectories: usize,
    pub updates: u64,
    pub episodes: u64,
    pub admitted: u64,
}

impl MetricsRecord {
    pub fn header_line() -> String {
        METRICS_HEADER.join(",")
    }

    pub fn to_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{}",
            self.variant,
            self.seed,
            self.step,
            self.eval_return,
            self.critic_loss,
            self.actor_loss,
            self.lambda,
            self.mean_target,
            self.r_min,
            self.be_trajectories,
            self.updates,
            self.episodes,
            self.admitted
        )
        .unwrap();
        s
    }
}

/// The whole metrics file as text.
pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut s = MetricsRecord::header_line();
    s.push('\n');
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

/// Parses a metrics file, checking the header and step ordering.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Validation(format!("{}: unexpected metrics header {:?}", path.display(), header.join(","))));
    }
    let mut out: Vec<MetricsRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let f = |k: usize| -> Result<&str> { row.get(k).ok_or_else(|| Error::parse(line, "missing field")) };
        let num = |k: usize| -> Result<f64> {
            f(k)?.parse().map_err(|_| Error::parse(line, format!("bad number in column {}", METRICS_HEADER[k])))
        };
        let int = |k: usize| -> Result<u64> {
            f(k)?.parse().map_err(|_| Error::parse(line, format!("bad integer in column {}", METRICS_HEADER[k])))
        };
        let rec = MetricsRecord {
            variant: f(0)?.to_string(),
            seed: int(1)?,
            step: int(2)?,
            eval_return: num(3)?,
            critic_loss: num(4)?,
            actor_loss: num(5)?,
            lambda: num(6)?,
            mean_target: num(7)?,
            r_min: num(8)?,
            be_trajectories: int(9)? as usize,
            updates: int(10)?,
            episodes: int(11)?,
            admitted: int(12)?,
        };
        if let Some(prev) = out.last() {
            if rec.step <= prev.step {
                return Err(Error::parse(line, "steps must be strictly increasing"));
            }
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("{}: metrics file has no records", path.display())));
    }
    Ok(out)
}

/// Label stored in the `variant` column: the configured label, else the variant name.
pub fn variant_column(label: Option<&str>, v: Variant) -> String {
    label.unwrap_or(v.name()).to_string()
}
