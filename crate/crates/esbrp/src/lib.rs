//! File formats, reports, bundled fixtures and the solver front end for
//! the electric school bus routing core in `esbrp-core`.

pub mod budget;
pub mod fixtures;
pub mod io;
pub mod reports;
pub mod solve;

pub use esbrp_core as core;
