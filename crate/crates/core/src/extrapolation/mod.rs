//! Off-diagonal extrapolation in the last exponent on the dyadic grid.

mod cases;
mod demo;
mod rdf;
mod run;
mod split;

pub use rdf::{
    estimate_operator_norm, plain_exponent, prime_exponent, rdf_plain, rdf_prime, rdf_series, A1Bounds, Bound,
    NormEstimate, RdfOutput, RdfProperties, Series, DEFAULT_K_MAX, NORM_SAFETY, TAIL_THRESHOLD,
};
pub use split::{split_weights, two_index_characteristic, SplitCharacteristics, SplitWeights};
pub use cases::{
    case1_vn, case2_vn, dual_element, select_case, Case, Case1Output, Case2Output, ChainCheck, Memberships, RectangleCheck,
    CHAIN_TOL,
};
pub use demo::{ainfty_pair_check, demo_extrapolation, AinftyPairCheck, DemoConfig, DemoReport, Scenario, ScenarioReport};
pub use run::{extrapolate, ExtrapolationCharacteristics, ExtrapolationConfig, ExtrapolationReport};
