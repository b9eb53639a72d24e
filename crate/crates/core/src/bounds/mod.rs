//! Empirical verification engines.

mod lower;
mod norm;
mod report;
mod upper;

pub use lower::{
    lower_bound_recover, median, FunctionalValue, LowerBoundConfig, LowerBoundReport, MedianReport,
    NonDegenerateKernel,
};
pub use norm::{estimate_norm, tuple_digest, SamplerConfig, SamplerKind, WeightTuple};
pub use report::{RatioReport, RatioSample};
pub use upper::{complexity_sweep, sweep_operator, verify_upper_bound, SweepReport, SweepRow, UpperBoundReport};
