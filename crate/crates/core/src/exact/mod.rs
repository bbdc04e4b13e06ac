//! Exact search.
//!
//! The search runs in two phases over the same feasible set as the model.
//! First, for every bus type, a depth-first walk from the depot enumerates
//! every feasible route, pruning any prefix that already breaks a window,
//! the capacity, the battery or the ride limit. Only the cheapest route is
//! kept for each combination of bus type, stop set and charger usage, since
//! those are all that couple routes. Second, a branch-and-bound picks
//! disjoint routes covering every stop. It branches on the uncovered stop
//! with the earliest deadline and bounds by a subset DP that ignores the
//! fleet and charger limits.

mod bound;
mod brute;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::budget::Budget;
use crate::energy::Energy;
use crate::eval::{check_prefix, objective, plan_route, ChargePolicy, CostBreakdown, ObjectiveForm, Route, Solution};
use crate::instance::{Instance, NodeKind};
use crate::preprocess::{connectivity_report, ArcMask};

pub use bound::{lower_bound, BoundData, SearchNode};
pub use brute::{brute_force, BRUTE_FORCE_MAX_CHARGERS, BRUTE_FORCE_MAX_STOPS};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: Solution,
    pub objective: CostBreakdown,
    pub proven_optimal: bool,
    pub nodes_explored: u64,
    /// Best proven lower bound on the optimum.
    pub lower_bound: f64,
    pub wall_time: f64,
    /// `(nodes explored, objective)` at every incumbent improvement.
    pub incumbent_trace: Vec<(u64, f64)>,
}

impl SolveResult {
    /// Relative gap between the incumbent and the bound.
    pub fn gap(&self) -> f64 {
        let total = self.objective.total;
        if total <= 0.0 {
            0.0
        } else {
            ((total - self.lower_bound) / total).max(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("infeasible: {reason}")]
    Infeasible { stop: Option<u32>, reason: String },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("no feasible solution found within the budget")]
    NoIncumbent,
}

/// Stops the exact solver accepts (one bit per stop).
pub const EXACT_MAX_STOPS: usize = 64;

/// Called at every set-partition node with the node and its bound.
pub type Observer<'a> = &'a mut dyn FnMut(&SearchNode, f64);

pub fn solve_exact(
    inst: &Instance,
    mask: &ArcMask,
    policy: ChargePolicy,
    budget: &dyn Budget,
) -> Result<SolveResult, SolveError> {
    solve_exact_observed(inst, mask, policy, budget, None)
}

pub fn solve_exact_observed(
    inst: &Instance,
    mask: &ArcMask,
    policy: ChargePolicy,
    budget: &dyn Budget,
    observer: Option<Observer<'_>>,
) -> Result<SolveResult, SolveError> {
    let n_stops = inst.stops().len();
    if n_stops > EXACT_MAX_STOPS {
        return Err(SolveError::TooLarge(format!(
            "{n_stops} stops, exact search handles at most {EXACT_MAX_STOPS}"
        )));
    }
    if n_stops == 0 {
        return Ok(SolveResult {
            solution: Solution::default(),
            objective: CostBreakdown::default(),
            proven_optimal: true,
            nodes_explored: 0,
            lower_bound: 0.0,
            wall_time: budget.elapsed_secs(),
            incumbent_trace: Vec::new(),
        });
    }
    if let Some(&s) = connectivity_report(inst, mask)
        .stranded_for_all(inst.active_types())
        .first()
    {
        return Err(SolveError::Infeasible {
            stop: Some(inst.node(s).id),
            reason: format!(
                "stop {} has no arc path from the depot to the school after arc elimination",
                inst.node(s).id
            ),
        });
    }

    let mut order: Vec<usize> = inst.stops().to_vec();
    order.sort_by(|&a, &b| {
        inst.node(a)
            .latest
            .partial_cmp(&inst.node(b).latest)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(inst.node(a).id.cmp(&inst.node(b).id))
    });
    let mut bit_of = vec![None; inst.len()];
    for (b, &s) in order.iter().enumerate() {
        bit_of[s] = Some(b);
    }
    let classes = charger_classes(inst, mask);

    let mut pool = Pool {
        inst,
        mask,
        policy,
        budget,
        nodes: 0,
        stopped: false,
        order: &order,
        bit_of: &bit_of,
        classes: &classes,
        drop_idle: policy == ChargePolicy::Partial && inst.is_metric(),
        routes: BTreeMap::new(),
    };
    for k in inst.active_types() {
        let mut visits = vec![inst.depot()];
        let mut usage = vec![0u8; classes.len()];
        pool.grow(k, &mut visits, 0, &mut usage);
        if pool.stopped {
            break;
        }
    }
    let pool_complete = !pool.stopped;
    let pool_nodes = pool.nodes;
    let columns: Vec<Column> = pool.routes.into_values().collect();

    let full: u64 = if n_stops == 64 { u64::MAX } else { (1u64 << n_stops) - 1 };
    let reachable = columns.iter().fold(0u64, |acc, c| acc | c.mask);
    if pool_complete && reachable != full {
        let b = (!reachable & full).trailing_zeros() as usize;
        let s = order[b];
        return Err(SolveError::Infeasible {
            stop: Some(inst.node(s).id),
            reason: unreachable_reason(inst, s, policy),
        });
    }

    let bound_data = BoundData::new(inst, mask);
    let mut search = Partition::new(inst, &columns, n_stops, &classes, budget, pool_nodes);
    search.bound_data = Some(&bound_data);
    search.order = &order;
    search.observer = observer;
    // A pool cut short by the budget still gets a bounded attempt at a
    // first incumbent.
    search.grace = !pool_complete;
    search.run(full);

    let proven = pool_complete && !search.stopped;
    let Some(chosen) = search.incumbent.clone() else {
        if proven {
            return Err(SolveError::Infeasible {
                stop: None,
                reason: String::from("every cover of the stops breaks a fleet-size or charger-copy limit"),
            });
        }
        return Err(SolveError::NoIncumbent);
    };
    let solution = assemble(inst, &columns, &chosen, &classes, policy);
    let cost = objective(inst, &solution, ObjectiveForm::Linearized, policy)
        .expect("assembled routes are feasible");
    let lower = if proven {
        cost.total
    } else if pool_complete {
        search.root_bound.min(cost.total)
    } else {
        bound_data.eval(inst, &SearchNode::root(inst)).min(cost.total)
    };
    Ok(SolveResult {
        solution,
        objective: cost,
        proven_optimal: proven,
        nodes_explored: search.nodes,
        lower_bound: lower,
        wall_time: budget.elapsed_secs(),
        incumbent_trace: search.trace,
    })
}

fn unreachable_reason(inst: &Instance, s: usize, policy: ChargePolicy) -> String {
    let id = inst.node(s).id;
    let direct = [inst.depot(), s, inst.school()];
    for k in inst.active_types() {
        if let Err(v) = plan_route(inst, k, &direct, policy) {
            return format!("no feasible route serves stop {id}; the direct route with bus type {k} fails: {v}");
        }
    }
    format!("no feasible route serves stop {id}")
}

/// Charger copies grouped so that copies in one class are interchangeable,
/// including under the arc mask.
fn charger_classes(inst: &Instance, mask: &ArcMask) -> Vec<Vec<usize>> {
    let same_mask = |a: usize, b: usize| {
        inst.active_types().all(|k| {
            (0..inst.len()).filter(|&j| j != a && j != b).all(|j| {
                mask.allowed(k, a, j) == mask.allowed(k, b, j) && mask.allowed(k, j, a) == mask.allowed(k, j, b)
            })
        })
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    for class in inst.charger_classes() {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for c in class {
            match groups.iter_mut().find(|g| same_mask(g[0], c)) {
                Some(g) => g.push(c),
                None => groups.push(vec![c]),
            }
        }
        out.extend(groups);
    }
    out
}

#[derive(Debug, Clone)]
struct Column {
    mask: u64,
    bus_type: usize,
    usage: Vec<u8>,
    cost: f64,
    route: Route,
}

struct Pool<'a> {
    inst: &'a Instance,
    mask: &'a ArcMask,
    policy: ChargePolicy,
    budget: &'a dyn Budget,
    nodes: u64,
    stopped: bool,
    order: &'a [usize],
    bit_of: &'a [Option<usize>],
    classes: &'a [Vec<usize>],
    /// Drop routes with a zero-charge charger visit. Valid when the
    /// triangle inequality holds: skipping the charger is no worse.
    drop_idle: bool,
    routes: BTreeMap<(usize, u64, Vec<u8>), Column>,
}

impl Pool<'_> {
    fn grow(&mut self, k: usize, visits: &mut Vec<usize>, set: u64, usage: &mut Vec<u8>) {
        self.nodes += 1;
        if self.budget.exhausted(self.nodes) {
            self.stopped = true;
            return;
        }
        let inst = self.inst;
        let last = *visits.last().expect("route starts at the depot");
        let school = inst.school();
        if set != 0 && self.mask.allowed(k, last, school) {
            visits.push(school);
            if let Ok(planned) = plan_route(inst, k, visits, self.policy) {
                let idle = planned.route.charges.values().any(|&e| e == Energy::ZERO);
                if !(self.drop_idle && idle) {
                    self.offer(k, set, usage, planned.cost.breakdown.total, planned.route);
                }
            }
            visits.pop();
        }
        for &s in self.order {
            let bit = 1u64 << self.bit_of[s].expect("stop bit");
            if set & bit != 0 || !self.mask.allowed(k, last, s) {
                continue;
            }
            visits.push(s);
            if check_prefix(inst, k, visits, self.policy).is_ok() {
                self.grow(k, visits, set | bit, usage);
            }
            visits.pop();
            if self.stopped {
                return;
            }
        }
        for ci in 0..self.classes.len() {
            let used = usage[ci] as usize;
            if used >= self.classes[ci].len() {
                continue;
            }
            let c = self.classes[ci][used];
            if !self.mask.allowed(k, last, c) {
                continue;
            }
            visits.push(c);
            usage[ci] += 1;
            if check_prefix(inst, k, visits, self.policy).is_ok() {
                self.grow(k, visits, set, usage);
            }
            usage[ci] -= 1;
            visits.pop();
            if self.stopped {
                return;
            }
        }
    }

    fn offer(&mut self, k: usize, set: u64, usage: &[u8], cost: f64, route: Route) {
        let key = (k, set, usage.to_vec());
        match self.routes.get(&key) {
            Some(old) if old.cost < cost || (old.cost == cost && old.route.visits <= route.visits) => {}
            _ => {
                self.routes.insert(
                    key,
                    Column {
                        mask: set,
                        bus_type: k,
                        usage: usage.to_vec(),
                        cost,
                        route,
                    },
                );
            }
        }
    }
}

/// Cheapest cover of a stop set, ignoring fleet and charger limits.
enum Memo {
    Dense(Vec<f64>),
    Sparse(BTreeMap<u64, f64>),
}

struct Partition<'a, 'o> {
    inst: &'a Instance,
    columns: &'a [Column],
    /// Columns grouped by their lowest stop bit, cheapest first.
    by_low: Vec<Vec<usize>>,
    /// Cheapest column cost per exact stop set, grouped by lowest bit.
    cheapest: Vec<Vec<(u64, f64)>>,
    memo: Memo,
    classes: &'a [Vec<usize>],
    budget: &'a dyn Budget,
    nodes: u64,
    stopped: bool,
    grace: bool,
    incumbent: Option<Vec<usize>>,
    incumbent_cost: f64,
    trace: Vec<(u64, f64)>,
    root_bound: f64,
    bound_data: Option<&'a BoundData>,
    order: &'a [usize],
    observer: Option<Observer<'o>>,
}

/// Nodes allowed after the budget ran out during route enumeration.
const GRACE_NODES: u64 = 1_000_000;

/// Largest stop count that gets a dense subset table.
const DENSE_STOPS: usize = 20;

impl<'a, 'o> Partition<'a, 'o> {
    fn new(
        inst: &'a Instance,
        columns: &'a [Column],
        n_stops: usize,
        classes: &'a [Vec<usize>],
        budget: &'a dyn Budget,
        start_nodes: u64,
    ) -> Partition<'a, 'o> {
        let mut by_low = vec![Vec::new(); n_stops];
        let mut cheapest_map: BTreeMap<u64, f64> = BTreeMap::new();
        for (i, c) in columns.iter().enumerate() {
            by_low[c.mask.trailing_zeros() as usize].push(i);
            let e = cheapest_map.entry(c.mask).or_insert(f64::INFINITY);
            *e = e.min(c.cost);
        }
        for group in &mut by_low {
            group.sort_by(|&a, &b| {
                columns[a]
                    .cost
                    .partial_cmp(&columns[b].cost)
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
        }
        let mut cheapest = vec![Vec::new(); n_stops];
        for (m, c) in cheapest_map {
            cheapest[m.trailing_zeros() as usize].push((m, c));
        }
        let memo = if n_stops <= DENSE_STOPS {
            let size = 1usize << n_stops;
            let mut best = vec![f64::INFINITY; size];
            best[0] = 0.0;
            for set in 1..size {
                let low = (set as u64).trailing_zeros() as usize;
                let mut b = f64::INFINITY;
                for &(m, c) in &cheapest[low] {
                    if m & !(set as u64) == 0 {
                        b = b.min(c + best[set & !(m as usize)]);
                    }
                }
                best[set] = b;
            }
            Memo::Dense(best)
        } else {
            Memo::Sparse(BTreeMap::new())
        };
        Partition {
            inst,
            columns,
            by_low,
            cheapest,
            memo,
            classes,
            budget,
            nodes: start_nodes,
            stopped: false,
            grace: false,
            incumbent: None,
            incumbent_cost: f64::INFINITY,
            trace: Vec::new(),
            root_bound: 0.0,
            bound_data: None,
            order: &[],
            observer: None,
        }
    }

    fn best(&mut self, set: u64) -> f64 {
        if set == 0 {
            return 0.0;
        }
        match &self.memo {
            Memo::Dense(t) => t[set as usize],
            Memo::Sparse(m) => {
                if let Some(&v) = m.get(&set) {
                    return v;
                }
                let low = set.trailing_zeros() as usize;
                let mut b = f64::INFINITY;
                for idx in 0..self.cheapest[low].len() {
                    let (m, c) = self.cheapest[low][idx];
                    if m & !set == 0 {
                        b = b.min(c + self.best(set & !m));
                    }
                }
                if let Memo::Sparse(map) = &mut self.memo {
                    map.insert(set, b);
                }
                b
            }
        }
    }

    fn run(&mut self, full: u64) {
        self.root_bound = self.best(full);
        let mut chosen = Vec::new();
        let mut types = vec![0u32; self.inst.bus_types.len()];
        let mut class_use = vec![0usize; self.classes.len()];
        self.branch(full, 0.0, &mut chosen, &mut types, &mut class_use);
    }

    fn out_of_budget(&self) -> bool {
        if self.grace {
            self.incumbent.is_some() || self.nodes >= GRACE_NODES
        } else {
            self.budget.exhausted(self.nodes)
        }
    }

    fn branch(&mut self, uncovered: u64, cost: f64, chosen: &mut Vec<usize>, types: &mut [u32], class_use: &mut [usize]) {
        self.nodes += 1;
        if self.out_of_budget() {
            self.stopped = true;
            return;
        }
        if uncovered == 0 {
            if cost < self.incumbent_cost {
                self.incumbent_cost = cost;
                self.incumbent = Some(chosen.clone());
                self.trace.push((self.nodes, cost));
            }
            return;
        }
        let bound = cost + self.best(uncovered);
        if self.observer.is_some() {
            let state = SearchNode {
                routes: chosen.iter().map(|&c| self.columns[c].route.clone()).collect(),
                open: None,
                unassigned: self
                    .order
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| uncovered & (1u64 << b) != 0)
                    .map(|(_, &s)| s)
                    .collect(),
                committed_cost: cost,
            };
            let simple = self.bound_data.map(|d| d.eval(self.inst, &state)).unwrap_or(0.0);
            if let Some(obs) = self.observer.as_mut() {
                obs(&state, bound.max(simple));
            }
        }
        if bound >= self.incumbent_cost - 1e-9 {
            return;
        }
        let low = uncovered.trailing_zeros() as usize;
        let mut children: Vec<(f64, usize)> = Vec::new();
        for gi in 0..self.by_low[low].len() {
            let ci = self.by_low[low][gi];
            let col = &self.columns[ci];
            if col.mask & !uncovered != 0 {
                continue;
            }
            if types[col.bus_type] >= self.inst.bus_types[col.bus_type].count {
                continue;
            }
            if col
                .usage
                .iter()
                .zip(class_use.iter())
                .zip(self.classes)
                .any(|((&u, &used), class)| used + u as usize > class.len())
            {
                continue;
            }
            let rest = uncovered & !col.mask;
            let child_bound = cost + col.cost + self.best(rest);
            if child_bound < self.incumbent_cost - 1e-9 {
                children.push((child_bound, ci));
            }
        }
        children.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        for (child_bound, ci) in children {
            if child_bound >= self.incumbent_cost - 1e-9 {
                continue;
            }
            let col = &self.columns[ci];
            let (k, m, c) = (col.bus_type, col.mask, col.cost);
            types[k] += 1;
            for (used, &u) in class_use.iter_mut().zip(&col.usage) {
                *used += u as usize;
            }
            chosen.push(ci);
            self.branch(uncovered & !m, cost + c, chosen, types, class_use);
            chosen.pop();
            let col = &self.columns[ci];
            for (used, &u) in class_use.iter_mut().zip(&col.usage) {
                *used -= u as usize;
            }
            types[k] -= 1;
            if self.stopped {
                return;
            }
        }
    }
}

/// Turns chosen columns into routes, giving each route its own copies of
/// the charger classes it uses.
fn assemble(inst: &Instance, columns: &[Column], chosen: &[usize], classes: &[Vec<usize>], policy: ChargePolicy) -> Solution {
    let mut class_of = vec![usize::MAX; inst.len()];
    for (ci, class) in classes.iter().enumerate() {
        for &c in class {
            class_of[c] = ci;
        }
    }
    let mut next = vec![0usize; classes.len()];
    let mut routes = Vec::with_capacity(chosen.len());
    for &i in chosen {
        let col = &columns[i];
        let visits: Vec<usize> = col
            .route
            .visits
            .iter()
            .map(|&v| {
                if inst.kind(v) == NodeKind::Charger {
                    let ci = class_of[v];
                    let copy = classes[ci][next[ci]];
                    next[ci] += 1;
                    copy
                } else {
                    v
                }
            })
            .collect();
        let planned = plan_route(inst, col.bus_type, &visits, policy).expect("copies are interchangeable");
        routes.push(planned.route);
    }
    Solution::new(routes).canonical()
}
