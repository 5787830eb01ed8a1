//! Spec files and result tables.

pub mod report;
pub mod specfile;

pub use report::{emit_csv, fmt_num, Destination, ResultTable};
pub use specfile::{format_decimal, Meta, SpecFile};
