//! Route simulation and solution evaluation.
//!
//! A route is simulated in three passes. Energy first: the bus leaves the
//! depot full, each arc draws `r^k d_ij`, and at a charger the bus takes the
//! charge given by the policy. Then load. Then time: arrival at a node is
//! `max(T^e_j, t_i + s_i + t_ij)` (waiting is free), charging takes
//! `g p_i` seconds, and among all feasible schedules the one that starts the
//! first pickup as late as possible is reported, since it minimizes the ride
//! time of the first student.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::energy::Energy;
use crate::instance::{FleetMode, Instance, NodeKind};
use crate::preprocess::ArcMask;

/// Absolute tolerance on times, in seconds.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChargePolicy {
    /// Any amount up to the battery headroom.
    #[default]
    Partial,
    /// Every visited charger tops the battery up to `B^k`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveForm {
    /// Charge term computed as `(y - v) z` from the simulated trace.
    Nonlinear,
    /// Charge term taken from the stored `p` amounts.
    Linearized,
}

/// One bus: its type, the visited node indices (depot first, school last)
/// and the amount charged at each visited charger.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Route {
    pub bus_type: usize,
    pub visits: Vec<usize>,
    pub charges: BTreeMap<usize, Energy>,
}

impl Route {
    pub fn new(bus_type: usize, visits: Vec<usize>) -> Route {
        Route {
            bus_type,
            visits,
            charges: BTreeMap::new(),
        }
    }

    pub fn with_charge(mut self, charger: usize, amount: Energy) -> Route {
        self.charges.insert(charger, amount);
        self
    }

    pub fn stops<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = usize> + 'a {
        self.visits
            .iter()
            .copied()
            .filter(move |&v| inst.kind(v) == NodeKind::Stop)
    }

    pub fn chargers<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = usize> + 'a {
        self.visits
            .iter()
            .copied()
            .filter(move |&v| inst.kind(v) == NodeKind::Charger)
    }

    pub fn total_charge(&self) -> Energy {
        self.charges.values().copied().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Solution {
    pub routes: Vec<Route>,
}

impl Solution {
    pub fn new(routes: Vec<Route>) -> Solution {
        Solution { routes }
    }

    /// Routes sorted by bus type, then visit sequence.
    pub fn canonical(&self) -> Solution {
        let mut routes = self.routes.clone();
        routes.sort();
        Solution { routes }
    }

    pub fn fleet_size(&self) -> usize {
        self.routes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitState {
    pub node: usize,
    /// Service start (arrival after any wait), seconds.
    pub arrival: f64,
    /// Students on board after the pickup at this node.
    pub load: i64,
    pub soc_in: Energy,
    pub soc_out: Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteTrace {
    pub bus_type: usize,
    pub visits: Vec<VisitState>,
    /// School arrival minus departure from the first stop; `None` when the
    /// route picks nobody up.
    pub ride_time: Option<f64>,
}

impl RouteTrace {
    /// `(charger, soc_out - soc_in)` for every charger visit.
    pub fn charges<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = (usize, Energy)> + 'a {
        self.visits
            .iter()
            .filter(move |v| inst.kind(v.node) == NodeKind::Charger)
            .map(|v| (v.node, v.soc_out - v.soc_in))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Malformed,
    UnknownBusType,
    TypeNotInFleet,
    ArcNotAllowed,
    WindowMissed,
    BellTimeMissed,
    CapacityExceeded,
    BatteryDepleted,
    ChargeExceedsBattery,
    NegativeCharge,
    FullChargeMismatch,
    RideTimeExceeded,
    StopNotCovered,
    StopCoveredTwice,
    ChargerReused,
    ChargeFlagMismatch,
    FleetLimit,
}

impl ViolationKind {
    /// The model constraint the violation breaks.
    pub fn constraint(self) -> &'static str {
        match self {
            ViolationKind::Malformed => "route structure",
            ViolationKind::UnknownBusType | ViolationKind::TypeNotInFleet => "bus type",
            ViolationKind::ArcNotAllowed => "arc mask",
            ViolationKind::WindowMissed | ViolationKind::BellTimeMissed => "time window",
            ViolationKind::CapacityExceeded => "capacity",
            ViolationKind::BatteryDepleted => "state of charge",
            ViolationKind::ChargeExceedsBattery => "battery capacity",
            ViolationKind::NegativeCharge => "charge amount",
            ViolationKind::FullChargeMismatch => "full charge",
            ViolationKind::RideTimeExceeded => "max ride time",
            ViolationKind::StopNotCovered | ViolationKind::StopCoveredTwice => "stop coverage",
            ViolationKind::ChargerReused => "charger copy",
            ViolationKind::ChargeFlagMismatch => "charge flag",
            ViolationKind::FleetLimit => "fleet limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Index of the offending route within the solution, if any.
    pub route: Option<usize>,
    /// Node index the violation binds at, if any.
    pub node: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn at(kind: ViolationKind, node: usize, detail: String) -> Violation {
        Violation {
            kind,
            route: None,
            node: Some(node),
            detail,
        }
    }

    fn general(kind: ViolationKind, detail: String) -> Violation {
        Violation {
            kind,
            route: None,
            node: None,
            detail,
        }
    }

    pub fn constraint(&self) -> &'static str {
        self.kind.constraint()
    }

    fn in_route(mut self, r: usize) -> Violation {
        self.route = Some(r);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ({})", self.kind, self.constraint())?;
        if let Some(r) = self.route {
            write!(f, " route {r}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Objective components. `total` excludes the depot recharge term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub fleet_cost: f64,
    pub travel_time_cost: f64,
    pub charging_cost: f64,
    pub depot_charge_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn add(&mut self, other: &CostBreakdown) {
        self.fleet_cost += other.fleet_cost;
        self.travel_time_cost += other.travel_time_cost;
        self.charging_cost += other.charging_cost;
        self.depot_charge_cost += other.depot_charge_cost;
        self.total += other.total;
    }
}

/// Seconds spent charging `amount_kwh` at `rate` seconds per kWh.
pub fn charge_time(rate: f64, amount_kwh: f64) -> f64 {
    rate * amount_kwh
}

/// Charge-time slack gained by charging `partial_kwh` instead of topping up
/// from `soc_in` to `battery`.
pub fn charge_time_flexibility(rate: f64, battery: Energy, soc_in: Energy, partial: Energy) -> f64 {
    charge_time(rate, (battery - soc_in).kwh()) - charge_time(rate, partial.kwh())
}

#[derive(Clone, Copy)]
enum Charges<'a> {
    Given(&'a BTreeMap<usize, Energy>),
    Full,
    Minimal,
}

struct Pass {
    visits: Vec<VisitState>,
    ride_time: Option<f64>,
    first: Option<Violation>,
}

impl Pass {
    fn flag(&mut self, v: Violation) {
        if self.first.is_none() {
            self.first = Some(v);
        }
    }
}

fn structure(inst: &Instance, bus_type: usize, visits: &[usize], open_end: bool) -> Result<(), Violation> {
    use ViolationKind::*;
    if bus_type >= inst.bus_types.len() {
        return Err(Violation::general(UnknownBusType, format!("bus type {bus_type} not in catalog")));
    }
    if visits.iter().any(|&v| v >= inst.len()) {
        return Err(Violation::general(Malformed, String::from("visit index out of range")));
    }
    if visits.first() != Some(&inst.depot()) {
        return Err(Violation::general(Malformed, String::from("route must start at the depot")));
    }
    if !open_end && (visits.len() < 2 || visits.last() != Some(&inst.school())) {
        return Err(Violation::general(Malformed, String::from("route must end at the school")));
    }
    let interior_end = if open_end { visits.len() } else { visits.len() - 1 };
    for (pos, &v) in visits.iter().enumerate().take(interior_end).skip(1) {
        if !matches!(inst.kind(v), NodeKind::Stop | NodeKind::Charger) {
            return Err(Violation::at(
                Malformed,
                v,
                format!("{} node {} at position {pos}", inst.kind(v), inst.node(v).id),
            ));
        }
    }
    let mut seen = visits.to_vec();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Violation::at(
            Malformed,
            w[0],
            format!("node {} visited twice", inst.node(w[0]).id),
        ));
    }
    Ok(())
}

/// Runs all three passes. With `open_end` the last visit is treated as the
/// current end of a partial route: no school checks, and the ride time runs
/// to the departure from the last node.
fn simulate(inst: &Instance, bus_type: usize, visits: &[usize], charges: Charges<'_>, open_end: bool) -> Pass {
    use ViolationKind::*;
    let bus = &inst.bus_types[bus_type];
    let cap = bus.battery_energy();
    let m = visits.len();
    let params = &inst.params;
    let mut pass = Pass {
        visits: Vec::with_capacity(m),
        ride_time: None,
        first: None,
    };

    let arc_energy: Vec<Energy> = visits
        .windows(2)
        .map(|w| bus.energy_for(inst.dist(w[0], w[1])))
        .collect();
    // Energy from each visit to the next charger (or the end of the route).
    let mut need_ahead = vec![Energy::ZERO; m];
    for i in (0..m.saturating_sub(1)).rev() {
        let next_is_break = i + 1 == m - 1 || inst.kind(visits[i + 1]) == NodeKind::Charger;
        need_ahead[i] = arc_energy[i] + if next_is_break { Energy::ZERO } else { need_ahead[i + 1] };
    }

    let mut soc = cap;
    let mut load = 0i64;
    for (i, &node) in visits.iter().enumerate() {
        let kind = inst.kind(node);
        if soc.is_negative() {
            pass.flag(Violation::at(
                BatteryDepleted,
                node,
                format!("arrives at node {} with {} kWh", inst.node(node).id, soc),
            ));
        }
        let soc_in = soc;
        let mut amount = Energy::ZERO;
        if kind == NodeKind::Charger {
            amount = match charges {
                Charges::Given(map) => map.get(&node).copied().unwrap_or(Energy::ZERO),
                Charges::Full => cap - soc_in,
                Charges::Minimal => (need_ahead[i] - soc_in).max(Energy::ZERO),
            };
            if amount.is_negative() {
                pass.flag(Violation::at(
                    NegativeCharge,
                    node,
                    format!("charge {} kWh at node {}", amount, inst.node(node).id),
                ));
            }
            if soc_in + amount > cap {
                pass.flag(Violation::at(
                    ChargeExceedsBattery,
                    node,
                    format!(
                        "node {}: arrives with {} kWh, charge {} kWh exceeds battery {} kWh",
                        inst.node(node).id,
                        soc_in,
                        amount,
                        cap
                    ),
                ));
            }
        }
        load += inst.node(node).demand;
        if load > bus.capacity {
            pass.flag(Violation::at(
                CapacityExceeded,
                node,
                format!("load {} exceeds capacity {} at node {}", load, bus.capacity, inst.node(node).id),
            ));
        }
        let soc_out = soc_in + amount;
        if i + 1 < m {
            soc = soc_out - arc_energy[i];
        }
        pass.visits.push(VisitState {
            node,
            arrival: 0.0,
            load,
            soc_in,
            soc_out,
        });
    }

    // Time: the dwell at each visit is service time at stops and charging at
    // chargers.
    let dwell: Vec<f64> = pass
        .visits
        .iter()
        .map(|v| match inst.kind(v.node) {
            NodeKind::Stop => inst.node(v.node).service_time,
            NodeKind::Charger => charge_time(params.recharge_rate, (v.soc_out - v.soc_in).kwh()),
            _ => 0.0,
        })
        .collect();
    let mut earliest = vec![0.0; m];
    let mut on_time = true;
    for j in 0..m {
        let nd = inst.node(visits[j]);
        earliest[j] = if j == 0 {
            nd.earliest
        } else {
            nd.earliest
                .max(earliest[j - 1] + dwell[j - 1] + inst.time(visits[j - 1], visits[j]))
        };
        if earliest[j] > nd.latest + TIME_EPS {
            on_time = false;
            let kind = if nd.kind == NodeKind::School {
                BellTimeMissed
            } else {
                WindowMissed
            };
            pass.flag(Violation::at(
                kind,
                visits[j],
                format!(
                    "earliest arrival {} at node {} after latest {}",
                    earliest[j], nd.id, nd.latest
                ),
            ));
        }
    }
    let first_stop = visits.iter().position(|&v| inst.kind(v) == NodeKind::Stop);
    let mut times = earliest.clone();
    if let (true, Some(f)) = (on_time, first_stop) {
        let mut latest = vec![0.0; m];
        latest[m - 1] = inst.node(visits[m - 1]).latest;
        for i in (0..m - 1).rev() {
            latest[i] = inst
                .node(visits[i])
                .latest
                .min(latest[i + 1] - dwell[i] - inst.time(visits[i], visits[i + 1]));
        }
        times[..=f].copy_from_slice(&latest[..=f]);
        for j in f + 1..m {
            times[j] = inst
                .node(visits[j])
                .earliest
                .max(times[j - 1] + dwell[j - 1] + inst.time(visits[j - 1], visits[j]));
        }
    }
    for (v, t) in pass.visits.iter_mut().zip(&times) {
        v.arrival = *t;
    }
    if let Some(f) = first_stop {
        let start = times[f] + dwell[f];
        let end = if open_end { times[m - 1] + dwell[m - 1] } else { times[m - 1] };
        let ride = end - start;
        pass.ride_time = Some(ride);
        if ride > params.max_ride_time + TIME_EPS {
            pass.flag(Violation::at(
                RideTimeExceeded,
                visits[m - 1],
                format!("ride time {} exceeds {}", ride, params.max_ride_time),
            ));
        }
    }
    pass
}

/// Simulates `route` and returns its trace, or the first violation.
///
/// Under [`ChargePolicy::Partial`] the stored charge amounts are used (a
/// missing entry charges nothing); under [`ChargePolicy::Full`] every
/// charger tops up to `B^k` regardless of the stored amounts.
pub fn simulate_route(inst: &Instance, route: &Route, policy: ChargePolicy) -> Result<RouteTrace, Violation> {
    structure(inst, route.bus_type, &route.visits, false)?;
    let charges = match policy {
        ChargePolicy::Partial => Charges::Given(&route.charges),
        ChargePolicy::Full => Charges::Full,
    };
    let pass = simulate(inst, route.bus_type, &route.visits, charges, false);
    match pass.first {
        Some(v) => Err(v),
        None => Ok(RouteTrace {
            bus_type: route.bus_type,
            visits: pass.visits,
            ride_time: pass.ride_time,
        }),
    }
}

/// Like [`simulate_route`] but always returns the computed values, with
/// every violation found. Used to build model assignments for infeasible
/// routes.
pub fn trace_route_unchecked(
    inst: &Instance,
    route: &Route,
    policy: ChargePolicy,
) -> Result<(RouteTrace, Option<Violation>), Violation> {
    structure(inst, route.bus_type, &route.visits, false)?;
    let charges = match policy {
        ChargePolicy::Partial => Charges::Given(&route.charges),
        ChargePolicy::Full => Charges::Full,
    };
    let pass = simulate(inst, route.bus_type, &route.visits, charges, false);
    Ok((
        RouteTrace {
            bus_type: route.bus_type,
            visits: pass.visits,
            ride_time: pass.ride_time,
        },
        pass.first,
    ))
}

/// Smallest charge at each charger that keeps the SoC nonnegative: each
/// charger adds just enough to reach the next charger or the school. This
/// minimizes total charge at every prefix. On routes with one charger it is
/// also the least delaying plan; with several chargers an earlier split can
/// occasionally fit windows that this one misses. Returns the binding
/// violation when the plan fails.
pub fn min_charge_amounts(inst: &Instance, route: &Route) -> Result<BTreeMap<usize, Energy>, Violation> {
    structure(inst, route.bus_type, &route.visits, false)?;
    let pass = simulate(inst, route.bus_type, &route.visits, Charges::Minimal, false);
    if let Some(v) = pass.first {
        return Err(v);
    }
    Ok(pass
        .visits
        .iter()
        .filter(|v| inst.kind(v.node) == NodeKind::Charger)
        .map(|v| (v.node, v.soc_out - v.soc_in))
        .collect())
}

/// Cost and statistics of one evaluated route.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RouteCost {
    pub breakdown: CostBreakdown,
    pub distance: f64,
    pub travel_time: f64,
    pub charged: Energy,
}

/// A feasible route with the charges implied by the policy and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRoute {
    pub route: Route,
    pub cost: RouteCost,
}

/// Resolves charges for a visit sequence (minimal under Partial, top-up
/// under Full) and prices the route. Solvers use this to score candidates.
pub fn plan_route(
    inst: &Instance,
    bus_type: usize,
    visits: &[usize],
    policy: ChargePolicy,
) -> Result<PlannedRoute, Violation> {
    structure(inst, bus_type, visits, false)?;
    let charges = match policy {
        ChargePolicy::Partial => Charges::Minimal,
        ChargePolicy::Full => Charges::Full,
    };
    let pass = simulate(inst, bus_type, visits, charges, false);
    if let Some(v) = pass.first {
        return Err(v);
    }
    let mut route = Route::new(bus_type, visits.to_vec());
    for v in pass.visits.iter().filter(|v| inst.kind(v.node) == NodeKind::Charger) {
        route.charges.insert(v.node, v.soc_out - v.soc_in);
    }
    let cost = route_cost(inst, &route, &pass.visits, ObjectiveForm::Linearized);
    Ok(PlannedRoute { route, cost })
}

/// Feasibility of a route prefix that has not reached the school yet.
/// Charges are the least needed to reach the current end, so every window,
/// capacity, energy and ride-time failure here persists in all extensions.
pub fn check_prefix(inst: &Instance, bus_type: usize, visits: &[usize], policy: ChargePolicy) -> Result<(), Violation> {
    structure(inst, bus_type, visits, true)?;
    let charges = match policy {
        ChargePolicy::Partial => Charges::Minimal,
        ChargePolicy::Full => Charges::Full,
    };
    match simulate(inst, bus_type, visits, charges, true).first {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

fn route_cost(inst: &Instance, route: &Route, trace: &[VisitState], form: ObjectiveForm) -> RouteCost {
    let k = route.bus_type;
    let bus = &inst.bus_types[k];
    let coefficient = inst.charge_coefficient(k);
    let (mut distance, mut travel_time) = (0.0, 0.0);
    for w in route.visits.windows(2) {
        distance += inst.dist(w[0], w[1]);
        travel_time += inst.time(w[0], w[1]);
    }
    let mut charging_cost = 0.0;
    let mut charged = Energy::ZERO;
    for v in trace.iter().filter(|v| inst.kind(v.node) == NodeKind::Charger) {
        let amount = match form {
            ObjectiveForm::Linearized => route.charges.get(&v.node).copied().unwrap_or(Energy::ZERO),
            ObjectiveForm::Nonlinear => {
                let z = route.charges.contains_key(&v.node);
                if z {
                    v.soc_out - v.soc_in
                } else {
                    Energy::ZERO
                }
            }
        };
        charged += amount;
        charging_cost += coefficient * amount.kwh();
    }
    let end_soc = trace.last().map(|v| v.soc_in).unwrap_or(Energy::ZERO);
    let fleet_cost = inst.fleet_cost(k);
    let travel_time_cost = bus.time_cost * travel_time;
    RouteCost {
        breakdown: CostBreakdown {
            fleet_cost,
            travel_time_cost,
            charging_cost,
            depot_charge_cost: inst.params.depot_charge_cost * (bus.battery_energy() - end_soc).kwh(),
            total: fleet_cost + travel_time_cost + charging_cost,
        },
        distance,
        travel_time,
        charged,
    }
}

/// Objective of a solution whose routes all simulate cleanly.
pub fn objective(
    inst: &Instance,
    sol: &Solution,
    form: ObjectiveForm,
    policy: ChargePolicy,
) -> Result<CostBreakdown, Violation> {
    Ok(solution_costs(inst, sol, form, policy)?.0)
}

/// Objective plus per-route costs.
pub fn solution_costs(
    inst: &Instance,
    sol: &Solution,
    form: ObjectiveForm,
    policy: ChargePolicy,
) -> Result<(CostBreakdown, Vec<RouteCost>), Violation> {
    let mut total = CostBreakdown::default();
    let mut per_route = Vec::with_capacity(sol.routes.len());
    for (r, route) in sol.routes.iter().enumerate() {
        let trace = simulate_route(inst, route, policy).map_err(|v| v.in_route(r))?;
        let cost = route_cost(inst, route, &trace.visits, form);
        total.add(&cost.breakdown);
        per_route.push(cost);
    }
    Ok((total, per_route))
}

/// Collects every violation: coverage, charger reuse, charge flags, fleet
/// limits and the per-route simulation result.
pub fn check_solution(inst: &Instance, sol: &Solution, policy: ChargePolicy) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let mut stop_hits = vec![0usize; inst.len()];
    let mut charger_hits = vec![0usize; inst.len()];
    let mut fleet = vec![0u32; inst.bus_types.len()];
    for (r, route) in sol.routes.iter().enumerate() {
        if let Err(v) = structure(inst, route.bus_type, &route.visits, false) {
            out.push(v.in_route(r));
            continue;
        }
        if inst.fleet_mode == FleetMode::Homogeneous && route.bus_type != 0 {
            out.push(
                Violation::general(TypeNotInFleet, format!("bus type {} in a homogeneous fleet", route.bus_type))
                    .in_route(r),
            );
        }
        fleet[route.bus_type] += 1;
        for &v in &route.visits {
            match inst.kind(v) {
                NodeKind::Stop => stop_hits[v] += 1,
                NodeKind::Charger => {
                    charger_hits[v] += 1;
                    if !route.charges.contains_key(&v) {
                        out.push(
                            Violation::at(
                                ChargeFlagMismatch,
                                v,
                                format!("charger {} visited with z = 0", inst.node(v).id),
                            )
                            .in_route(r),
                        );
                    }
                }
                _ => {}
            }
        }
        for &c in route.charges.keys() {
            if !route.visits.contains(&c) {
                out.push(
                    Violation::at(
                        ChargeFlagMismatch,
                        c,
                        format!("charge recorded at unvisited node index {c}"),
                    )
                    .in_route(r),
                );
            }
        }
        match trace_route_unchecked(inst, route, policy) {
            Ok((trace, first)) => {
                if let Some(v) = first {
                    out.push(v.in_route(r));
                } else if policy == ChargePolicy::Full {
                    for (c, forced) in trace.charges(inst) {
                        if let Some(&stored) = route.charges.get(&c) {
                            if stored != forced {
                                out.push(
                                    Violation::at(
                                        FullChargeMismatch,
                                        c,
                                        format!("stored charge {stored} kWh, full top-up is {forced} kWh"),
                                    )
                                    .in_route(r),
                                );
                            }
                        }
                    }
                }
            }
            Err(v) => out.push(v.in_route(r)),
        }
    }
    for &s in inst.stops() {
        match stop_hits[s] {
            0 => out.push(Violation::at(
                StopNotCovered,
                s,
                format!("stop {} not visited", inst.node(s).id),
            )),
            1 => {}
            n => out.push(Violation::at(
                StopCoveredTwice,
                s,
                format!("stop {} visited {n} times", inst.node(s).id),
            )),
        }
    }
    for &c in inst.chargers() {
        if charger_hits[c] > 1 {
            out.push(Violation::at(
                ChargerReused,
                c,
                format!("charger copy {} used by {} routes", inst.node(c).id, charger_hits[c]),
            ));
        }
    }
    for (k, &used) in fleet.iter().enumerate() {
        if used > inst.bus_types[k].count {
            out.push(Violation::general(
                FleetLimit,
                format!("{used} buses of type {k}, {} available", inst.bus_types[k].count),
            ));
        }
    }
    out
}

/// Arcs used by the solution that the mask forbids.
pub fn check_arcs(inst: &Instance, sol: &Solution, mask: &ArcMask) -> Vec<Violation> {
    let mut out = Vec::new();
    for (r, route) in sol.routes.iter().enumerate() {
        if route.bus_type >= mask.type_count() {
            continue;
        }
        for w in route.visits.windows(2) {
            if !mask.allowed(route.bus_type, w[0], w[1]) {
                out.push(
                    Violation::at(
                        ViolationKind::ArcNotAllowed,
                        w[1],
                        format!("arc {} -> {} is eliminated", inst.node(w[0]).id, inst.node(w[1]).id),
                    )
                    .in_route(r),
                );
            }
        }
    }
    out
}
