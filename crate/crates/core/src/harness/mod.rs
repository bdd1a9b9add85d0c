//! The outer training loop, evaluation, baselines, the Q-error diagnostic
//! and multi-seed comparison.

mod compare;
mod config;
mod diagnostic;
mod eval;
pub mod fixtures;
mod gradsuite;
mod metrics;
mod train;

pub use compare::{
    compare, median, median_surpass, quantile_sorted, summarize, surpass_step, CompareReport, CompareRow, RunResult,
    SURPASS_WINDOW,
};
pub use config::{ExperienceUse, Precision, TrainConfig, Variant};
pub use diagnostic::{discounted_return, q_error_diagnostic, tail_bound, QErrorReport, StateError};
pub use eval::{bc_pretrain, episode_returns, evaluate, evaluate_policy, BcReport};
pub use gradsuite::{gradient_suite, GradFamily, GradSuiteReport, FD_STEP};
pub use metrics::{metrics_csv, read_metrics, variant_column, MetricsRecord, METRICS_HEADER};
pub use train::{load_demos, train, train_with_demos, RunOutput, RunSummary};
