use alloc::vec::Vec;

use crate::eval::Route;
use crate::instance::{Instance, NodeKind};
use crate::preprocess::ArcMask;

/// A point in the search: finished routes, at most one route still being
/// built, and the stops nobody serves yet.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub routes: Vec<Route>,
    /// Visits so far, starting at the depot and not yet at the school.
    pub open: Option<Route>,
    pub unassigned: Vec<usize>,
    /// Cost of the finished routes plus the fleet and travel cost of the
    /// open prefix.
    pub committed_cost: f64,
}

impl SearchNode {
    pub fn root(inst: &Instance) -> SearchNode {
        SearchNode {
            routes: Vec::new(),
            open: None,
            unassigned: inst.stops().to_vec(),
            committed_cost: 0.0,
        }
    }
}

/// Per-instance data behind [`lower_bound`], computed once per search.
#[derive(Debug, Clone)]
pub struct BoundData {
    /// Cheapest allowed incoming arc time for each node.
    incoming: Vec<f64>,
    min_time_cost: f64,
    min_fleet_cost: f64,
    max_capacity: i64,
}

impl BoundData {
    pub fn new(inst: &Instance, mask: &ArcMask) -> BoundData {
        let types = inst.active_types();
        let n = inst.len();
        let incoming = (0..n)
            .map(|j| {
                let mut best = f64::INFINITY;
                for k in types.clone() {
                    for i in mask.predecessors(k, j) {
                        best = best.min(inst.time(i, j));
                    }
                }
                best
            })
            .collect();
        let min_time_cost = types
            .clone()
            .map(|k| inst.bus_types[k].time_cost)
            .fold(f64::INFINITY, f64::min);
        let min_fleet_cost = types.clone().map(|k| inst.fleet_cost(k)).fold(f64::INFINITY, f64::min);
        let max_capacity = types.map(|k| inst.bus_types[k].capacity).max().unwrap_or(0);
        BoundData {
            incoming,
            min_time_cost,
            min_fleet_cost,
            max_capacity,
        }
    }

    pub fn eval(&self, inst: &Instance, state: &SearchNode) -> f64 {
        if state.unassigned.is_empty() {
            return state.committed_cost;
        }
        let arcs: f64 = state
            .unassigned
            .iter()
            .map(|&s| self.incoming[s] * self.min_time_cost)
            .sum();
        let remaining: i64 = state.unassigned.iter().map(|&s| inst.node(s).demand).sum();
        let buses = match &state.open {
            Some(open) => {
                let load: i64 = open
                    .visits
                    .iter()
                    .filter(|&&v| inst.kind(v) == NodeKind::Stop)
                    .map(|&v| inst.node(v).demand)
                    .sum();
                let room = inst.bus_types[open.bus_type].capacity - load;
                ceil_div((remaining - room).max(0), self.max_capacity)
            }
            None => ceil_div(remaining, self.max_capacity).max(1),
        };
        state.committed_cost + arcs + buses as f64 * self.min_fleet_cost
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    if b <= 0 {
        0
    } else {
        (a + b - 1) / b
    }
}

/// Admissible bound on the cost of any feasible completion of `state`:
/// committed cost, the cheapest way into every unassigned stop, and the
/// fixed cost of buses the remaining demand still needs.
pub fn lower_bound(state: &SearchNode, inst: &Instance, mask: &ArcMask) -> f64 {
    BoundData::new(inst, mask).eval(inst, state)
}
