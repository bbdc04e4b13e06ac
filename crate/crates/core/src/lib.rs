//! Electric school bus routing with partial en-route charging.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the problem model,
//! arc elimination, route evaluation, the mixed-integer model compiler and
//! both solvers. File formats and the command-line tool live in `esbrp`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cost;
pub mod energy;
pub mod eval;
pub mod instance;
pub mod preprocess;
pub mod milp;
pub mod budget;
pub mod exact;
pub mod lns;
pub mod generate;

#[cfg(test)]
pub(crate) mod testkit;
