//! Reward curves: one line per variant (mean over seeds) and a shaded
//! min-max band when a variant has more than one run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use asilfd_core::harness::{read_metrics, MetricsRecord};
use plotters::prelude::*;

pub struct Curve {
    pub label: String,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub runs: usize,
}

/// Groups runs by their variant column. Runs of one group must share the
/// evaluation steps.
pub fn curves(runs: &[(PathBuf, Vec<MetricsRecord>)]) -> anyhow::Result<Vec<Curve>> {
    let mut groups: BTreeMap<String, Vec<&(PathBuf, Vec<MetricsRecord>)>> = BTreeMap::new();
    for r in runs {
        groups.entry(r.1[0].variant.clone()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (label, members) in groups {
        let steps: Vec<u64> = members[0].1.iter().map(|m| m.step).collect();
        for (path, recs) in &members[1..] {
            if recs.iter().map(|m| m.step).ne(steps.iter().copied()) {
                bail!("{}: evaluation steps differ from other `{label}` runs", path.display());
            }
        }
        let n = members.len() as f64;
        let col = |k: usize| members.iter().map(move |(_, r)| r[k].eval_return);
        let mean = (0..steps.len()).map(|k| col(k).sum::<f64>() / n).collect();
        let min = (0..steps.len()).map(|k| col(k).fold(f64::INFINITY, f64::min)).collect();
        let max = (0..steps.len()).map(|k| col(k).fold(f64::NEG_INFINITY, f64::max)).collect();
        out.push(Curve { label, steps, mean, min, max, runs: members.len() });
    }
    Ok(out)
}

pub fn run(files: &[PathBuf], out: &Path, title: &str) -> anyhow::Result<()> {
    let mut runs = Vec::new();
    for f in files {
        let recs = read_metrics(f).with_context(|| format!("reading {}", f.display()))?;
        runs.push((f.clone(), recs));
    }
    let curves = curves(&runs)?;
    draw(&curves, out, title)?;
    for c in &curves {
        println!("{}: {} run(s), {} points", c.label, c.runs, c.steps.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn draw(curves: &[Curve], out: &Path, title: &str) -> anyhow::Result<()> {
    let x_max = curves.iter().flat_map(|c| c.steps.last().copied()).max().unwrap_or(1).max(1) as f64;
    let finite = curves.iter().flat_map(|c| c.min.iter().chain(&c.max)).copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        bail!("no finite returns to plot");
    }
    let pad = ((hi - lo) * 0.05).max(1e-6);

    let root = SVGBackend::new(out, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..x_max, (lo - pad)..(hi + pad))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("environment steps")
        .y_desc("eval return")
        .draw()
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    for (i, c) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        if c.runs > 1 {
            let mut band: Vec<(f64, f64)> = c.steps.iter().zip(&c.max).map(|(&s, &v)| (s as f64, v)).collect();
            band.extend(c.steps.iter().zip(&c.min).rev().map(|(&s, &v)| (s as f64, v)));
            chart
                .draw_series(std::iter::once(Polygon::new(band, color.mix(0.2))))
                .map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        chart
            .draw_series(LineSeries::new(
                c.steps.iter().zip(&c.mean).map(|(&s, &v)| (s as f64, v)),
                color.stroke_width(2),
            ))
            .map_err(|e| anyhow::anyhow!("{e}"))?
            .label(format!("{} (n={})", c.label, c.runs))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(())
}
