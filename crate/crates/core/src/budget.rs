//! Search budgets. The core crate has no clock, so wall-clock limits are
//! supplied by the caller.

pub trait Budget {
    /// True once the search should stop, given the nodes explored so far.
    fn exhausted(&self, nodes: u64) -> bool;

    /// Seconds since the search started, if the budget tracks time.
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Unlimited;

impl Budget for Unlimited {
    fn exhausted(&self, _nodes: u64) -> bool {
        false
    }
}

/// Stops after a fixed number of search nodes.
#[derive(Debug, Clone, Copy)]
pub struct NodeBudget(pub u64);

impl Budget for NodeBudget {
    fn exhausted(&self, nodes: u64) -> bool {
        nodes >= self.0
    }
}
