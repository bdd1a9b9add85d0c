use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::Float;

/// Floating-point element type of a network: `f64` for verification,
/// `f32` allowed for training runs.
pub trait Real: Float + Debug + Display + Default + FromStr + Sum + Send + Sync + 'static {
    const TAG: &'static str;

    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f64 {
    const TAG: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const TAG: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}
