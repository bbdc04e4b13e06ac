//! Wall-clock budget.

use std::time::{Duration, Instant};

use esbrp_core::budget::Budget;

/// Stops the search after a time limit and, optionally, a node count.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    start: Instant,
    limit: Option<Duration>,
    max_nodes: Option<u64>,
}

impl Deadline {
    pub fn new(limit: Option<Duration>, max_nodes: Option<u64>) -> Deadline {
        Deadline {
            start: Instant::now(),
            limit,
            max_nodes,
        }
    }

    pub fn seconds(secs: f64) -> Deadline {
        Deadline::new(Some(Duration::from_secs_f64(secs)), None)
    }
}

impl Budget for Deadline {
    fn exhausted(&self, nodes: u64) -> bool {
        self.max_nodes.is_some_and(|m| nodes >= m) || self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    fn elapsed_secs(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
