//! Secrecy rates of a compress-forward relay scheme against an eavesdropper.
//!
//! The crate is organized bottom-up:
//!
//! * [`prob`]: channel laws, input designs, the joint distribution and entropy.
//! * [`quantities`]: the information functionals that decide the operating regime.
//! * [`regime`]: regime classification, closed-form rates and a brute-force oracle.
//! * [`optimize`]: input-design search and parameter sweeps.
//! * [`sim`]: finite-blocklength simulation with exact equivocation on micro instances.
//! * [`io`]: the JSON spec file and CSV result tables.

pub mod error;
pub mod prob;
pub mod quantities;
pub mod regime;
pub mod optimize;
pub mod sim;
pub mod io;

pub use error::{Error, Result, Violation};
pub use prob::{assemble_joint, validate_channel, Alphabets, ChannelSpec, InputDesign, JointDistribution, Var, VarSet};
pub use quantities::{compute_info_quantities, InfoQuantities};
pub use regime::{
    case_rate, classify, evaluate_rate_point, oracle_max_rate, BobStrategy, EveStrategy, Leaf, OracleConfig,
    RateChoice, RegimeCase,
};
