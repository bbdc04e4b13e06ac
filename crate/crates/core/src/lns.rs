//! Large neighborhood search.
//!
//! Each iteration removes a handful of stops (at random, the costliest ones,
//! or a whole route), reinserts them one by one at the cheapest feasible
//! position and then tidies charger visits. Charges are always re-derived by
//! the evaluator, so a route never carries a stale charge plan.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::budget::{Budget, Unlimited};
use crate::eval::{objective, plan_route, ChargePolicy, ObjectiveForm, PlannedRoute, Solution, ViolationKind};
use crate::exact::{lower_bound, SearchNode, SolveResult};
use crate::instance::Instance;
use crate::preprocess::ArcMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceptance {
    /// Keep a candidate only if it is no worse than the current solution.
    Greedy,
    /// Accept a worse candidate with probability `exp(-delta / T)`. The
    /// starting temperature is a fraction of the initial objective and is
    /// multiplied by `cooling` after every iteration.
    Annealing { initial_temperature: f64, cooling: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LnsConfig {
    pub seed: u64,
    pub iterations: u64,
    /// Share of the stops removed per iteration, in (0, 1).
    pub destroy_fraction: f64,
    /// Weights of the random, worst-cost and route removal operators.
    pub weights: [f64; 3],
    pub accept: Acceptance,
    pub policy: ChargePolicy,
}

impl Default for LnsConfig {
    fn default() -> Self {
        LnsConfig {
            seed: 0,
            iterations: 10_000,
            destroy_fraction: 0.3,
            weights: [1.0, 1.0, 1.0],
            accept: Acceptance::Annealing {
                initial_temperature: 0.02,
                cooling: 0.9995,
            },
            policy: ChargePolicy::Partial,
        }
    }
}

impl LnsConfig {
    pub fn validate(&self) -> Result<(), LnsError> {
        if !(self.destroy_fraction > 0.0 && self.destroy_fraction < 1.0) {
            return Err(LnsError::Config(format!(
                "destroy fraction must lie in (0, 1), got {}",
                self.destroy_fraction
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || self.weights.iter().all(|w| *w == 0.0) {
            return Err(LnsError::Config(String::from(
                "operator weights must be nonnegative and not all zero",
            )));
        }
        if let Acceptance::Annealing {
            initial_temperature,
            cooling,
        } = self.accept
        {
            if !(initial_temperature >= 0.0) || !(cooling > 0.0 && cooling <= 1.0) {
                return Err(LnsError::Config(String::from(
                    "annealing needs a nonnegative temperature and cooling in (0, 1]",
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LnsError {
    #[error("no feasible start: stop {stop} cannot be placed")]
    InfeasibleStart { stop: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Builds a first solution: stops in order of deadline, each at its
/// cheapest feasible position (a new bus counts as a position), with a
/// charger visit added only where the energy check fails without one.
pub fn greedy_construct(inst: &Instance, mask: &ArcMask, policy: ChargePolicy) -> Result<Solution, LnsError> {
    let mut state = State::new(inst, mask, policy);
    let mut order = inst.stops().to_vec();
    order.sort_by(|&a, &b| {
        let (na, nb) = (inst.node(a), inst.node(b));
        na.latest.total_cmp(&nb.latest).then(na.id.cmp(&nb.id))
    });
    for s in order {
        if !state.insert(s) {
            return Err(LnsError::InfeasibleStart { stop: inst.node(s).id });
        }
    }
    Ok(state.solution().canonical())
}

pub fn solve_lns(inst: &Instance, mask: &ArcMask, cfg: &LnsConfig) -> Result<SolveResult, LnsError> {
    solve_lns_with(inst, mask, cfg, &Unlimited, None)
}

/// As [`solve_lns`], stopping early once `budget` runs out (counted in
/// iterations) and calling `on_accept` with every accepted solution.
pub fn solve_lns_with(
    inst: &Instance,
    mask: &ArcMask,
    cfg: &LnsConfig,
    budget: &dyn Budget,
    mut on_accept: Option<&mut dyn FnMut(&Solution)>,
) -> Result<SolveResult, LnsError> {
    cfg.validate()?;
    let policy = cfg.policy;
    let start = greedy_construct(inst, mask, policy)?;
    let mut current = State::from_solution(inst, mask, policy, &start);
    let mut current_cost = current.cost();
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut trace = vec![(0, best_cost)];
    if let Some(f) = on_accept.as_deref_mut() {
        f(&start);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let operators = WeightedIndex::new(cfg.weights).expect("validated weights");
    let mut temperature = match cfg.accept {
        Acceptance::Annealing {
            initial_temperature, ..
        } => initial_temperature * current_cost.abs(),
        Acceptance::Greedy => 0.0,
    };
    let n_stops = inst.stops().len();
    let mut done = 0;
    while done < cfg.iterations && !budget.exhausted(done) {
        done += 1;
        let mut candidate = current.clone();
        let q = (libm::ceil(cfg.destroy_fraction * n_stops as f64) as usize).clamp(1, n_stops.max(1));
        let mut removed = match operators.sample(&mut rng) {
            0 => candidate.remove_random(q, &mut rng),
            1 => candidate.remove_worst(q, &mut rng),
            _ => candidate.remove_route(&mut rng),
        };
        removed.shuffle(&mut rng);
        if !removed.iter().all(|&s| candidate.insert(s)) {
            continue;
        }
        candidate.tidy_chargers();
        let cost = candidate.cost();
        let accept = match cfg.accept {
            Acceptance::Greedy => cost <= current_cost + 1e-9,
            Acceptance::Annealing { cooling, .. } => {
                let delta = cost - current_cost;
                let ok = delta <= 1e-9 || (temperature > 0.0 && rng.gen_bool(libm::exp(-delta / temperature)));
                temperature *= cooling;
                ok
            }
        };
        if accept {
            current = candidate;
            current_cost = cost;
            if let Some(f) = on_accept.as_deref_mut() {
                f(&current.solution());
            }
            if cost < best_cost - 1e-9 {
                best = current.clone();
                best_cost = cost;
                trace.push((done, cost));
            }
        }
    }

    let solution = best.solution().canonical();
    let breakdown = objective(inst, &solution, ObjectiveForm::Linearized, policy).expect("LNS keeps routes feasible");
    Ok(SolveResult {
        solution,
        objective: breakdown,
        proven_optimal: false,
        nodes_explored: done,
        lower_bound: lower_bound(&SearchNode::root(inst), inst, mask),
        wall_time: 0.0,
        incumbent_trace: trace,
    })
}

#[derive(Clone)]
struct State<'a> {
    inst: &'a Instance,
    mask: &'a ArcMask,
    policy: ChargePolicy,
    routes: Vec<PlannedRoute>,
    free_chargers: BTreeSet<usize>,
    buses_left: Vec<u32>,
}

impl<'a> State<'a> {
    fn new(inst: &'a Instance, mask: &'a ArcMask, policy: ChargePolicy) -> State<'a> {
        let mut buses_left = vec![0; inst.bus_types.len()];
        for k in inst.active_types() {
            buses_left[k] = inst.bus_types[k].count;
        }
        State {
            inst,
            mask,
            policy,
            routes: Vec::new(),
            free_chargers: inst.chargers().iter().copied().collect(),
            buses_left,
        }
    }

    fn from_solution(inst: &'a Instance, mask: &'a ArcMask, policy: ChargePolicy, sol: &Solution) -> State<'a> {
        let mut state = State::new(inst, mask, policy);
        for route in &sol.routes {
            let planned = plan_route(inst, route.bus_type, &route.visits, policy).expect("feasible start");
            state.claim(&planned);
            state.buses_left[route.bus_type] -= 1;
            state.routes.push(planned);
        }
        state
    }

    fn solution(&self) -> Solution {
        Solution::new(self.routes.iter().map(|p| p.route.clone()).collect())
    }

    fn cost(&self) -> f64 {
        self.routes.iter().map(|p| p.cost.breakdown.total).sum()
    }

    fn claim(&mut self, planned: &PlannedRoute) {
        for c in planned.route.chargers(self.inst) {
            self.free_chargers.remove(&c);
        }
    }

    fn release(&mut self, planned: &PlannedRoute) {
        self.free_chargers.extend(planned.route.chargers(self.inst));
    }

    fn plan(&self, k: usize, visits: &[usize]) -> Option<PlannedRoute> {
        if visits.windows(2).any(|w| !self.mask.allowed(k, w[0], w[1])) {
            return None;
        }
        plan_route(self.inst, k, visits, self.policy).ok()
    }

    fn plan_reason(&self, k: usize, visits: &[usize]) -> Result<PlannedRoute, Option<ViolationKind>> {
        if visits.windows(2).any(|w| !self.mask.allowed(k, w[0], w[1])) {
            return Err(None);
        }
        plan_route(self.inst, k, visits, self.policy).map_err(|v| Some(v.kind))
    }

    fn load(&self, r: usize) -> i64 {
        self.routes[r].route.stops(self.inst).map(|s| self.inst.node(s).demand).sum()
    }

    /// Cheapest feasible way to add stop `s`: into any route or as a new
    /// bus, or together with one extra charger where energy runs short.
    fn insert(&mut self, s: usize) -> bool {
        let demand = self.inst.node(s).demand;
        let mut best: Option<(f64, Option<usize>, PlannedRoute)> = None;
        let mut short_of_energy = Vec::new();
        let consider = |delta: f64, at: Option<usize>, p: PlannedRoute, best: &mut Option<(f64, Option<usize>, PlannedRoute)>| {
            if best.as_ref().map_or(true, |b| delta < b.0 - 1e-9) {
                *best = Some((delta, at, p));
            }
        };

        // A host route may also switch to another type with a bus to spare.
        for r in 0..self.routes.len() {
            let current = self.routes[r].route.bus_type;
            for k in self.inst.active_types() {
                if (k != current && self.buses_left[k] == 0)
                    || self.load(r) + demand > self.inst.bus_types[k].capacity
                {
                    continue;
                }
                let old = self.routes[r].cost.breakdown.total;
                let visits = &self.routes[r].route.visits;
                for pos in 1..visits.len() {
                    let mut v = visits.clone();
                    v.insert(pos, s);
                    match self.plan_reason(k, &v) {
                        Ok(p) => consider(p.cost.breakdown.total - old, Some(r), p, &mut best),
                        Err(Some(ViolationKind::BatteryDepleted)) => short_of_energy.push((Some(r), k, v)),
                        Err(_) => {}
                    }
                }
            }
        }
        for k in self.inst.active_types() {
            if self.buses_left[k] == 0 || demand > self.inst.bus_types[k].capacity {
                continue;
            }
            let v = vec![self.inst.depot(), s, self.inst.school()];
            match self.plan_reason(k, &v) {
                Ok(p) => consider(p.cost.breakdown.total, None, p, &mut best),
                Err(Some(ViolationKind::BatteryDepleted)) => short_of_energy.push((None, k, v)),
                Err(_) => {}
            }
        }

        // Positions that fail only for lack of energy get one more try with a
        // free charger anywhere on the route.
        for (at, k, visits) in short_of_energy {
            let old = at.map_or(0.0, |r| self.routes[r].cost.breakdown.total);
            for &c in &self.free_chargers {
                for pos in 1..visits.len() {
                    let mut v = visits.clone();
                    v.insert(pos, c);
                    if let Some(p) = self.plan(k, &v) {
                        consider(p.cost.breakdown.total - old, at, p, &mut best);
                    }
                }
            }
        }

        let Some((_, at, planned)) = best else { return false };
        self.claim(&planned);
        match at {
            Some(r) => {
                let (from, to) = (self.routes[r].route.bus_type, planned.route.bus_type);
                if from != to {
                    self.buses_left[from] += 1;
                    self.buses_left[to] -= 1;
                }
                self.routes[r] = planned;
            }
            None => {
                self.buses_left[planned.route.bus_type] -= 1;
                self.routes.push(planned);
            }
        }
        true
    }

    /// Removes the given stops, re-planning the routes they leave. A route
    /// that no longer plans is dissolved and its stops join the removed set.
    fn remove_stops(&mut self, stops: &[usize]) -> Vec<usize> {
        let mut removed = stops.to_vec();
        let mut r = 0;
        while r < self.routes.len() {
            let route = &self.routes[r].route;
            if !route.visits.iter().any(|v| stops.contains(v)) {
                r += 1;
                continue;
            }
            let k = route.bus_type;
            let kept: Vec<usize> = route.visits.iter().copied().filter(|v| !stops.contains(v)).collect();
            let old = self.routes[r].clone();
            self.release(&old);
            let has_stop = kept.iter().any(|&v| self.inst.stops().contains(&v));
            let replanned = if has_stop { self.plan(k, &kept) } else { None };
            match replanned {
                Some(p) => {
                    self.claim(&p);
                    self.routes[r] = p;
                    r += 1;
                }
                None => {
                    if has_stop {
                        removed.extend(old.route.stops(self.inst).filter(|s| !stops.contains(s)));
                    }
                    self.buses_left[k] += 1;
                    self.routes.remove(r);
                }
            }
        }
        self.tidy_chargers();
        removed
    }

    fn assigned_stops(&self) -> Vec<usize> {
        self.routes.iter().flat_map(|p| p.route.stops(self.inst)).collect()
    }

    fn remove_random(&mut self, q: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let stops = self.assigned_stops();
        let picked: Vec<usize> = stops.choose_multiple(rng, q.min(stops.len())).copied().collect();
        self.remove_stops(&picked)
    }

    /// Removes stops whose removal saves the most, with a random skew so the
    /// same stops are not picked every time.
    fn remove_worst(&mut self, q: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut savings = Vec::new();
        for p in &self.routes {
            let k = p.route.bus_type;
            for s in p.route.stops(self.inst) {
                let kept: Vec<usize> = p.route.visits.iter().copied().filter(|&v| v != s).collect();
                let without = if kept.len() > 2 {
                    self.plan(k, &kept).map_or(f64::INFINITY, |x| x.cost.breakdown.total)
                } else {
                    0.0
                };
                savings.push((p.cost.breakdown.total - without, s));
            }
        }
        savings.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut picked = Vec::new();
        while picked.len() < q && !savings.is_empty() {
            let y: f64 = rng.gen();
            let i = ((y * y * y) * savings.len() as f64) as usize;
            picked.push(savings.remove(i.min(savings.len() - 1)).1);
        }
        self.remove_stops(&picked)
    }

    fn remove_route(&mut self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        if self.routes.is_empty() {
            return Vec::new();
        }
        let r = rng.gen_range(0..self.routes.len());
        let stops: Vec<usize> = self.routes[r].route.stops(self.inst).collect();
        self.remove_stops(&stops)
    }

    /// Drops charger visits a route can do without and moves the remaining
    /// ones to the cheapest free charger and position.
    fn tidy_chargers(&mut self) {
        for r in 0..self.routes.len() {
            loop {
                let current = self.routes[r].clone();
                let k = current.route.bus_type;
                let chargers: Vec<usize> = current.route.chargers(self.inst).collect();
                let mut best: Option<PlannedRoute> = None;
                let improve = |p: PlannedRoute, best: &mut Option<PlannedRoute>| {
                    let bar = best.as_ref().map_or(current.cost.breakdown.total, |b| b.cost.breakdown.total);
                    if p.cost.breakdown.total < bar - 1e-9 {
                        *best = Some(p);
                    }
                };
                for &c in &chargers {
                    let without: Vec<usize> = current.route.visits.iter().copied().filter(|&v| v != c).collect();
                    if let Some(p) = self.plan(k, &without) {
                        improve(p, &mut best);
                        continue;
                    }
                    for &d in self.free_chargers.iter().chain(core::iter::once(&c)) {
                        for pos in 1..without.len() {
                            let mut v = without.clone();
                            v.insert(pos, d);
                            if v == current.route.visits {
                                continue;
                            }
                            if let Some(p) = self.plan(k, &v) {
                                improve(p, &mut best);
                            }
                        }
                    }
                }
                match best {
                    Some(p) => {
                        self.release(&current);
                        self.claim(&p);
                        self.routes[r] = p;
                    }
                    None => break,
                }
            }
        }
    }
}
