//! Exact simultaneous-eating assignment toolkit.
//!
//! This crate implements, with arbitrary-precision rational arithmetic
//! throughout:
//!
//! - the simultaneous-eating ("probabilistic serial") assignment rule as an
//!   event-driven simulation ([`ps`]),
//! - a polynomial-time downward-lexicographic best response for one
//!   manipulating agent ([`dlbr`]),
//! - sequential allocation of indivisible objects, the half-house bridge
//!   between the two settings, and an expected-utility best response for two
//!   agents ([`seqalloc`]),
//! - a brute-force oracle over all reports for ground-truth verification
//!   ([`oracle`]),
//! - a generator for satisfiability-encoding assignment instances that
//!   witness the hardness of expected-utility manipulation ([`hardness`]),
//! - instance file I/O and a seeded manipulability experiment harness
//!   ([`instance`], [`experiment`]).

pub mod dlbr;
pub mod error;
pub mod experiment;
pub mod hardness;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod ps;
pub mod rational;
pub mod seqalloc;

pub use dlbr::{
    dl_best_response, insert_candidate, sd_best_response, stingy_order, stingy_rounds,
    PartialResponse,
};
pub use error::{Error, Result};
pub use experiment::{
    random_profile, random_utilities, run_experiment, CellReport, ExperimentConfig,
    ExperimentReport,
};
pub use hardness::{
    evaluate_assignment, prescribed_report, reduce_3sat, timing_audit, verify_reduction,
    Clause, Lit, ReductionInstance, ReductionLayout, ReductionParams, ThreeSatFormula,
    TimingAudit, VerificationReport,
};
pub use model::{
    dl_compare, eu_value, sd_compare, AgentId, AssignmentProblem, ComparisonResult,
    FractionalAssignment, HouseId, UtilityFunction,
};
pub use instance::{InstanceFile, TomlRational};
pub use oracle::{brute_force_best_response, is_manipulable, Criterion, OracleOptions, OracleReport};
pub use ps::{
    est, ps, ps1, ps_with_observer, ps_with_report, ps_with_report_and_observer, EatingState,
    EatingTrace,
};
pub use rational::{format_rational, int, parse_rational, rat, Rational};
pub use seqalloc::{
    alternating_policy, eu_best_response_2, half_house_reduction, sa_best_response_2,
    sequential_allocation, DiscreteAssignment, HalfHouseMap, ObjectId, Pick,
    PickingBestResponse, SAInstance,
};
