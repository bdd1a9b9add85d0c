use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Coordinates checked when a parameter vector is larger than this.
pub const MAX_COORDS: usize = 200;

/// Denominator floor of the relative error; coordinates whose gradient is
/// below it are effectively compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-4;

/// Disagreement above which a coordinate is re-measured with smaller steps.
const KINK_SUSPECT: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares `analytic` against central differences of `loss` at `params`.
///
/// All coordinates are checked when there are at most [`MAX_COORDS`];
/// otherwise a fixed-seed uniform sample of that many. A central difference
/// that straddles a ReLU kink is wrong by construction, so a coordinate that
/// disagrees at step `h` is re-measured at `h/10` and `h/100` and the best
/// agreement is kept.
pub fn grad_check<F>(mut loss: F, params: &[f64], analytic: &[f64], h: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if params.len() != analytic.len() {
        return Err(Error::Shape(format!("{} params vs {} analytic gradient entries", params.len(), analytic.len())));
    }
    let base = loss(params)?;
    if !base.is_finite() {
        return Err(Error::Numeric("loss is not finite at the check point".into()));
    }
    let coords: Vec<usize> = if params.len() <= MAX_COORDS {
        (0..params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.len() as u64);
        let mut v = rand::seq::index::sample(&mut rng, params.len(), MAX_COORDS).into_vec();
        v.sort_unstable();
        v
    };
    let mut p = params.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, checked: coords.len() };
    for &i in &coords {
        let mut best = f64::INFINITY;
        for step in [h, h / 10.0, h / 100.0] {
            p[i] = params[i] + step;
            let up = loss(&p)?;
            p[i] = params[i] - step;
            let down = loss(&p)?;
            p[i] = params[i];
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::Numeric(format!("loss not finite around coordinate {i}")));
            }
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            best = best.min(err);
            if best <= KINK_SUSPECT {
                break;
            }
        }
        if best > report.max_rel_error {
            report.max_rel_error = best;
            report.worst_index = i;
        }
    }
    Ok(report)
}
