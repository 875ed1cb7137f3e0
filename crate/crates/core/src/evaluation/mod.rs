//! Utility of published entropies: KL divergence, MSE, published ratio, and
//! parameter sweeps over them.

mod metrics;
mod sweep;

pub use metrics::{
    evaluate, evaluate_against, kl_divergence, mse, published_ratio, ActualEntropy, MetricMode,
    MetricReport,
};
pub use sweep::{run_sweep, SweepAggregate, SweepCell, SweepParam, SweepSpec, SweepTable, Summary};
