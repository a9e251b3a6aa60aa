//! IO, file formats, harmonization, and reporting for the `mrkit` binary.

pub mod error;
pub mod formats;
pub mod harmonize;
pub mod report;
