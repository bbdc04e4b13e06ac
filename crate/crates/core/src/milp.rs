//! Linearized mixed-integer model: construction, LP text output, statistics,
//! and the mapping between solutions and variable assignments.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

use crate::energy::Energy;
use crate::eval::{trace_route_unchecked, ChargePolicy, Route, Solution, Violation};
use crate::instance::{FleetMode, Instance, NodeKind};
use crate::preprocess::{connectivity_report, ArcMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    /// `x_ij^k`, arc traversal.
    Arc,
    /// `z_i^k`, charger used.
    ChargeFlag,
    /// `t_i^k`, service start.
    Time,
    /// `v_i^k`, SoC on arrival.
    SocIn,
    /// `y_i^k`, SoC on leaving a charger.
    SocOut,
    /// `p_i^k`, amount charged.
    Charge,
    /// Load after pickup at a node.
    Load,
    /// Departure time from the first stop of the route through a node.
    RideStart,
}

impl VarKind {
    pub fn prefix(self) -> &'static str {
        match self {
            VarKind::Arc => "x",
            VarKind::ChargeFlag => "z",
            VarKind::Time => "t",
            VarKind::SocIn => "v",
            VarKind::SocOut => "y",
            VarKind::Charge => "p",
            VarKind::Load => "l",
            VarKind::RideStart => "w",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrality {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub bus_type: usize,
    /// Node index (tail node for arcs).
    pub node: usize,
    /// Head node index for arcs.
    pub head: Option<usize>,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Constraint family; row names start with it.
    pub family: &'static str,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub instance_hash: u64,
    pub fleet_mode: FleetMode,
    pub charge_policy: ChargePolicy,
    pub big_m: f64,
    pub bus_types: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimized.
    pub objective: Vec<(usize, f64)>,
    pub meta: ModelMeta,
    by_name: BTreeMap<String, usize>,
}

/// Variable values keyed by name; absent variables read as zero.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("arc mask covers {mask_nodes} nodes and {mask_types} bus types, instance has {nodes} nodes and needs {types} types")]
    MaskShape {
        mask_nodes: usize,
        mask_types: usize,
        nodes: usize,
        types: usize,
    },
    #[error("stop {0} has no feasible path from the depot to the school for any bus type")]
    StrandedStop(u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("broken flow: {0}")]
    BrokenFlow(String),
    #[error("variable {name} = {value} is not integral")]
    NotIntegral { name: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InduceError {
    #[error("route {route}: {violation}")]
    Malformed { route: usize, violation: Violation },
    #[error("route {route} uses bus type {bus_type}, which the model does not contain")]
    MissingType { route: usize, bus_type: usize },
    #[error("route {route} uses arc {from} -> {to}, which the model does not contain")]
    MissingArc { route: usize, from: u32, to: u32 },
}

impl Model {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.var(name).map(|i| &self.variables[i])
    }

    fn values(&self, assignment: &Assignment) -> Vec<f64> {
        self.variables
            .iter()
            .map(|v| assignment.get(&v.name).copied().unwrap_or(0.0))
            .collect()
    }

    /// Objective value, summed in variable-index order.
    pub fn objective_value(&self, assignment: &Assignment) -> f64 {
        let values = self.values(assignment);
        self.objective.iter().map(|&(i, c)| c * values[i]).sum()
    }

    /// Names of violated rows, bounds and integrality requirements.
    pub fn violations(&self, assignment: &Assignment, tol: f64) -> Vec<String> {
        let values = self.values(assignment);
        let mut out = Vec::new();
        for (v, &x) in self.variables.iter().zip(&values) {
            if x < v.lower - tol || x > v.upper + tol {
                out.push(format!("bound {}", v.name));
            }
            if v.integrality == Integrality::Binary && libm::fabs(x - libm::round(x)) > tol {
                out.push(format!("integrality {}", v.name));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(i, a)| a * values[i]).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => libm::fabs(lhs - c.rhs) <= tol,
            };
            if !ok {
                out.push(c.name.clone());
            }
        }
        out
    }
}

/// FNV-1a over the instance data, used to tag emitted models.
pub fn instance_hash(inst: &Instance) -> u64 {
    struct Fnv(u64);
    impl Fnv {
        fn bytes(&mut self, b: &[u8]) {
            for &x in b {
                self.0 ^= x as u64;
                self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        fn f(&mut self, x: f64) {
            self.bytes(&x.to_bits().to_le_bytes());
        }
    }
    let mut h = Fnv(0xcbf2_9ce4_8422_2325);
    for nd in inst.nodes() {
        h.bytes(&nd.id.to_le_bytes());
        h.bytes(nd.kind.as_str().as_bytes());
        h.bytes(&nd.demand.to_le_bytes());
        for x in [nd.service_time, nd.earliest, nd.latest] {
            h.f(x);
        }
    }
    for i in 0..inst.len() {
        for j in 0..inst.len() {
            h.f(inst.dist(i, j));
            h.f(inst.time(i, j));
        }
    }
    for bt in &inst.bus_types {
        h.bytes(bt.name.as_bytes());
        for x in [bt.battery, bt.capital, bt.time_cost, bt.consumption] {
            h.f(x);
        }
        h.bytes(&bt.capacity.to_le_bytes());
        h.bytes(&bt.count.to_le_bytes());
    }
    let p = &inst.params;
    for x in [
        p.recharge_rate,
        p.enroute_charge_cost,
        p.depot_charge_cost,
        p.speed,
        p.max_ride_time,
        p.bell_earliest,
        p.bell_latest,
        p.bus_depreciation_rate,
        p.battery_depreciation_rate,
        p.battery_price_per_kwh,
    ] {
        h.f(x);
    }
    h.bytes(&p.services_per_year.to_le_bytes());
    h.bytes(&p.useful_life_years.to_le_bytes());
    h.0
}

fn model_types(inst: &Instance, fleet: FleetMode) -> Vec<usize> {
    match fleet {
        FleetMode::Homogeneous => vec![0],
        FleetMode::Heterogeneous => (0..inst.bus_types.len()).collect(),
    }
}

/// Big-M shared by every disjunctive row.
pub fn big_m(inst: &Instance, types: &[usize]) -> f64 {
    let school = inst.node(inst.school()).latest;
    let max_service = inst.nodes().iter().map(|n| n.service_time).fold(0.0, f64::max);
    let mut max_time: f64 = 0.0;
    for i in 0..inst.len() {
        for j in 0..inst.len() {
            max_time = max_time.max(inst.time(i, j));
        }
    }
    let max_battery = types
        .iter()
        .map(|&k| inst.bus_types[k].battery)
        .fold(0.0, f64::max);
    school + max_service + max_time + inst.params.recharge_rate * max_battery
}

/// Nodes that may head an arc in the model: stops, chargers and school.
fn is_head(kind: NodeKind) -> bool {
    matches!(kind, NodeKind::Stop | NodeKind::Charger | NodeKind::School)
}

fn is_tail(kind: NodeKind) -> bool {
    matches!(kind, NodeKind::Depot | NodeKind::Stop | NodeKind::Charger)
}

struct Builder<'a> {
    inst: &'a Instance,
    hetero: bool,
    variables: Vec<Variable>,
    by_name: BTreeMap<String, usize>,
    constraints: Vec<Constraint>,
}

impl Builder<'_> {
    fn suffix(&self, k: usize) -> String {
        if self.hetero {
            format!("_{k}")
        } else {
            String::new()
        }
    }

    fn label(&self, i: usize) -> String {
        self.inst.node(i).label()
    }

    #[allow(clippy::too_many_arguments)]
    fn add_var(
        &mut self,
        kind: VarKind,
        k: usize,
        node: usize,
        head: Option<usize>,
        lower: f64,
        upper: f64,
        integrality: Integrality,
    ) -> usize {
        let name = match head {
            Some(j) => format!("{}_{}_{}{}", kind.prefix(), self.label(node), self.label(j), self.suffix(k)),
            None => format!("{}_{}{}", kind.prefix(), self.label(node), self.suffix(k)),
        };
        let idx = self.variables.len();
        self.by_name.insert(name.clone(), idx);
        self.variables.push(Variable {
            name,
            kind,
            bus_type: k,
            node,
            head,
            lower,
            upper,
            integrality,
        });
        idx
    }

    fn get(&self, kind: VarKind, k: usize, node: usize) -> Option<usize> {
        let name = format!("{}_{}{}", kind.prefix(), self.label(node), self.suffix(k));
        self.by_name.get(&name).copied()
    }

    fn row(&mut self, family: &'static str, tag: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name: format!("{family}_{tag}"),
            family,
            terms,
            sense,
            rhs,
        });
    }
}

/// Builds the linearized model over the arcs the mask allows.
///
/// Besides routing, timing, energy and charging rows the model carries a
/// per-type fleet limit, load propagation rows (when a type's capacity can
/// bind) and ride-time rows (when the limit is finite).
pub fn build_model(
    inst: &Instance,
    mask: &ArcMask,
    fleet: FleetMode,
    policy: ChargePolicy,
) -> Result<Model, ModelError> {
    let types = model_types(inst, fleet);
    if mask.node_count() != inst.len() || mask.type_count() < types.len() {
        return Err(ModelError::MaskShape {
            mask_nodes: mask.node_count(),
            mask_types: mask.type_count(),
            nodes: inst.len(),
            types: types.len(),
        });
    }
    let type_range = 0..types.len();
    if let Some(&s) = connectivity_report(inst, mask).stranded_for_all(type_range).first() {
        return Err(ModelError::StrandedStop(inst.node(s).id));
    }

    let m = big_m(inst, &types);
    let n = inst.len();
    let depot = inst.depot();
    let school = inst.school();
    let g = inst.params.recharge_rate;
    let ride_limit = inst.params.max_ride_time;
    let mut b = Builder {
        inst,
        hetero: fleet == FleetMode::Heterogeneous,
        variables: Vec::new(),
        by_name: BTreeMap::new(),
        constraints: Vec::new(),
    };
    let mut objective = Vec::new();
    // arcs[k] = (i, j, var)
    let mut arcs: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); types.len()];

    for &k in &types {
        let bus = &inst.bus_types[k];
        let cap = bus.battery;
        let fleet_cost = inst.fleet_cost(k);
        for i in (0..n).filter(|&i| is_tail(inst.kind(i))) {
            for j in (0..n).filter(|&j| j != i && is_head(inst.kind(j))) {
                if !mask.allowed(k, i, j) {
                    continue;
                }
                let x = b.add_var(VarKind::Arc, k, i, Some(j), 0.0, 1.0, Integrality::Binary);
                let mut c = bus.time_cost * inst.time(i, j);
                if i == depot {
                    c += fleet_cost;
                }
                objective.push((x, c));
                arcs[k].push((i, j, x));
            }
        }
        for &c in inst.chargers() {
            b.add_var(VarKind::ChargeFlag, k, c, None, 0.0, 1.0, Integrality::Binary);
            let p = b.add_var(VarKind::Charge, k, c, None, 0.0, cap, Integrality::Continuous);
            objective.push((p, inst.charge_coefficient(k)));
            if policy == ChargePolicy::Partial {
                b.add_var(VarKind::SocOut, k, c, None, 0.0, cap, Integrality::Continuous);
            }
        }
        for i in 0..n {
            let nd = inst.node(i);
            let (lo, hi) = if i == depot { (nd.earliest, nd.latest) } else { (0.0, nd.latest) };
            b.add_var(VarKind::Time, k, i, None, lo, hi, Integrality::Continuous);
        }
        for i in (0..n).filter(|&i| i != depot) {
            b.add_var(VarKind::SocIn, k, i, None, 0.0, cap, Integrality::Continuous);
        }
        if load_rows_needed(inst, k) {
            for i in (0..n).filter(|&i| matches!(inst.kind(i), NodeKind::Stop | NodeKind::Charger)) {
                b.add_var(VarKind::Load, k, i, None, 0.0, bus.capacity as f64, Integrality::Continuous);
            }
        }
        if ride_limit.is_finite() {
            for i in (0..n).filter(|&i| matches!(inst.kind(i), NodeKind::Stop | NodeKind::Charger)) {
                b.add_var(VarKind::RideStart, k, i, None, 0.0, m, Integrality::Continuous);
            }
        }
    }
    let var = |b: &Builder<'_>, kind, k, i| b.get(kind, k, i).expect("model variable");

    // Every stop left exactly once.
    for &s in inst.stops() {
        let terms: Vec<(usize, f64)> = arcs
            .iter()
            .flatten()
            .filter(|&&(i, _, _)| i == s)
            .map(|&(_, _, x)| (x, 1.0))
            .collect();
        let tag = b.label(s);
        b.row("cover", tag, terms, Sense::Eq, 1.0);
    }
    // Each charger copy used by at most one bus.
    for &c in inst.chargers() {
        let terms = types.iter().map(|&k| (var(&b, VarKind::ChargeFlag, k, c), 1.0)).collect();
        let tag = b.label(c);
        b.row("charger_once", tag, terms, Sense::Le, 1.0);
    }

    for &k in &types {
        let bus = &inst.bus_types[k];
        let cap = bus.battery;
        let sfx = b.suffix(k);
        let ks = &arcs[k];
        // Flow conservation.
        for p in (0..n).filter(|&p| matches!(inst.kind(p), NodeKind::Stop | NodeKind::Charger)) {
            let mut terms: Vec<(usize, f64)> = ks.iter().filter(|a| a.1 == p).map(|a| (a.2, 1.0)).collect();
            terms.extend(ks.iter().filter(|a| a.0 == p).map(|a| (a.2, -1.0)));
            let tag = format!("{}{sfx}", b.label(p));
            b.row("flow", tag, terms, Sense::Eq, 0.0);
        }
        for &(i, j, x) in ks {
            let tag = format!("{}_{}{sfx}", b.label(i), b.label(j));
            let (ti, tj) = (var(&b, VarKind::Time, k, i), var(&b, VarKind::Time, k, j));
            let tij = inst.time(i, j);
            let energy = bus.energy_for(inst.dist(i, j)).kwh();
            let vj = var(&b, VarKind::SocIn, k, j);
            if inst.kind(i) == NodeKind::Charger {
                // Time through a charger includes g p_i.
                let p = var(&b, VarKind::Charge, k, i);
                b.row("charge_time", tag.clone(), vec![(ti, 1.0), (tj, -1.0), (p, g), (x, tij + m)], Sense::Le, m);
                match policy {
                    ChargePolicy::Partial => {
                        let y = var(&b, VarKind::SocOut, k, i);
                        b.row("soc_charger", tag.clone(), vec![(vj, 1.0), (y, -1.0), (x, energy + cap)], Sense::Le, cap);
                    }
                    ChargePolicy::Full => {
                        b.row("soc_full", tag.clone(), vec![(vj, 1.0), (x, energy + cap)], Sense::Le, 2.0 * cap);
                    }
                }
            } else {
                // Time propagation from the depot and stops.
                let s = inst.node(i).service_time;
                b.row("time", tag.clone(), vec![(ti, 1.0), (tj, -1.0), (x, tij + s + m)], Sense::Le, m);
                // Energy, with the depot SoC fixed at B^k.
                if i == depot {
                    b.row("soc", tag.clone(), vec![(vj, 1.0), (x, energy + cap)], Sense::Le, 2.0 * cap);
                } else {
                    let vi = var(&b, VarKind::SocIn, k, i);
                    b.row("soc", tag.clone(), vec![(vj, 1.0), (vi, -1.0), (x, energy + cap)], Sense::Le, cap);
                }
            }
            // Load propagation.
            if let Some(lj) = b.get(VarKind::Load, k, j) {
                let q = inst.node(j).demand as f64;
                if i == depot {
                    b.row("load", tag.clone(), vec![(x, q), (lj, -1.0)], Sense::Le, 0.0);
                } else {
                    let li = var(&b, VarKind::Load, k, i);
                    let c = bus.capacity as f64;
                    b.row("load", tag.clone(), vec![(li, 1.0), (lj, -1.0), (x, q + c)], Sense::Le, c);
                }
            }
            // Ride-time limit.
            if ride_limit.is_finite() && i != depot {
                let wi = var(&b, VarKind::RideStart, k, i);
                if j == school {
                    let s = inst.node(i).service_time;
                    let e = inst.node(school).earliest;
                    b.row("ride", format!("bell_{tag}"), vec![(wi, -1.0), (x, m)], Sense::Le, ride_limit + m - e);
                    let mut terms = vec![(ti, 1.0), (wi, -1.0), (x, m)];
                    if inst.kind(i) == NodeKind::Charger {
                        terms.push((var(&b, VarKind::Charge, k, i), g));
                    }
                    b.row("ride", format!("arr_{tag}"), terms, Sense::Le, ride_limit + m - s - tij);
                } else {
                    let wj = var(&b, VarKind::RideStart, k, j);
                    b.row("ride", format!("carry_{tag}"), vec![(wj, 1.0), (wi, -1.0), (x, m)], Sense::Le, m);
                }
            }
        }
        if ride_limit.is_finite() {
            for &s in inst.stops() {
                let (w, t) = (var(&b, VarKind::RideStart, k, s), var(&b, VarKind::Time, k, s));
                let tag = format!("own_{}{sfx}", b.label(s));
                b.row("ride", tag, vec![(w, 1.0), (t, -1.0)], Sense::Le, inst.node(s).service_time);
            }
        }
        // Time windows on visited nodes.
        for j in (0..n).filter(|&j| is_head(inst.kind(j))) {
            let tj = var(&b, VarKind::Time, k, j);
            let nd = inst.node(j);
            let inflow: Vec<usize> = ks.iter().filter(|a| a.1 == j).map(|a| a.2).collect();
            if j == school {
                // Arrivals share t_E^k, so the lower bound applies per arc.
                for &(i, _, x) in ks.iter().filter(|a| a.1 == j) {
                    let tag = format!("e_{}_{}{sfx}", b.label(i), b.label(j));
                    b.row("window", tag, vec![(x, nd.earliest), (tj, -1.0)], Sense::Le, 0.0);
                }
            } else {
                let mut terms: Vec<(usize, f64)> = inflow.iter().map(|&x| (x, nd.earliest)).collect();
                terms.push((tj, -1.0));
                b.row("window", format!("e_{}{sfx}", b.label(j)), terms, Sense::Le, 0.0);
            }
            let mut terms: Vec<(usize, f64)> = inflow.iter().map(|&x| (x, -nd.latest)).collect();
            terms.push((tj, 1.0));
            b.row("window", format!("l_{}{sfx}", b.label(j)), terms, Sense::Le, 0.0);
        }
        // Charger rows: visit flag, charge bounds, and SoC rise or full top-up.
        for &c in inst.chargers() {
            let tag = format!("{}{sfx}", b.label(c));
            let z = var(&b, VarKind::ChargeFlag, k, c);
            let p = var(&b, VarKind::Charge, k, c);
            let v = var(&b, VarKind::SocIn, k, c);
            let mut terms = vec![(z, 1.0)];
            terms.extend(ks.iter().filter(|a| a.0 == c).map(|a| (a.2, -1.0)));
            b.row("charge_flag", tag.clone(), terms, Sense::Eq, 0.0);
            b.row("charge_cap", tag.clone(), vec![(p, 1.0), (z, -cap)], Sense::Le, 0.0);
            match policy {
                ChargePolicy::Partial => {
                    let y = var(&b, VarKind::SocOut, k, c);
                    b.row("soc_rise", tag.clone(), vec![(v, 1.0), (y, -1.0)], Sense::Le, 0.0);
                    b.row("charge_upper", tag.clone(), vec![(p, 1.0), (y, -1.0), (v, 1.0)], Sense::Le, 0.0);
                    b.row("charge_lower", tag, vec![(p, 1.0), (y, -1.0), (v, 1.0), (z, -cap)], Sense::Ge, -cap);
                }
                ChargePolicy::Full => {
                    b.row("full_upper", tag.clone(), vec![(p, 1.0), (v, 1.0)], Sense::Le, cap);
                    b.row("full_lower", tag, vec![(p, 1.0), (v, 1.0), (z, -cap)], Sense::Ge, 0.0);
                }
            }
        }
        // Buses available at the depot.
        let terms: Vec<(usize, f64)> = ks.iter().filter(|a| a.0 == depot).map(|a| (a.2, 1.0)).collect();
        let tag = if b.hetero { format!("{k}") } else { String::from("all") };
        b.row("fleet", tag, terms, Sense::Le, bus.count as f64);
    }

    Ok(Model {
        variables: b.variables,
        constraints: b.constraints,
        objective,
        meta: ModelMeta {
            instance_hash: instance_hash(inst),
            fleet_mode: fleet,
            charge_policy: policy,
            big_m: m,
            bus_types: types,
        },
        by_name: b.by_name,
    })
}

/// Load rows are only needed when the stops together can overfill a bus.
fn load_rows_needed(inst: &Instance, k: usize) -> bool {
    inst.total_demand() > inst.bus_types[k].capacity
}

/// Encodes a solution as a model assignment using the simulated trace
/// values. Infeasible routes are encoded as simulated, so some model row
/// or bound is violated exactly when the solution is rejected.
pub fn induced_assignment(
    inst: &Instance,
    model: &Model,
    sol: &Solution,
    policy: ChargePolicy,
) -> Result<Assignment, InduceError> {
    let hetero = model.meta.fleet_mode == FleetMode::Heterogeneous;
    let name = |prefix: &str, k: usize, i: usize| -> String {
        let sfx = if hetero { format!("_{k}") } else { String::new() };
        format!("{prefix}_{}{sfx}", inst.node(i).label())
    };
    let mut a: Assignment = model.variables.iter().map(|v| (v.name.clone(), 0.0)).collect();
    let m = model.meta.big_m;
    let depot = inst.depot();
    let school = inst.school();
    for &k in &model.meta.bus_types {
        a.insert(name("t", k, depot), inst.node(depot).earliest);
    }
    let mut depot_time: BTreeMap<usize, f64> = BTreeMap::new();
    let mut school_time: BTreeMap<usize, f64> = BTreeMap::new();
    let mut school_soc: BTreeMap<usize, Energy> = BTreeMap::new();
    for (r, route) in sol.routes.iter().enumerate() {
        let k = route.bus_type;
        if !model.meta.bus_types.contains(&k) {
            return Err(InduceError::MissingType { route: r, bus_type: k });
        }
        let (trace, _) = trace_route_unchecked(inst, route, policy)
            .map_err(|violation| InduceError::Malformed { route: r, violation })?;
        let sfx = if hetero { format!("_{k}") } else { String::new() };
        for w in route.visits.windows(2) {
            let x = format!("x_{}_{}{sfx}", inst.node(w[0]).label(), inst.node(w[1]).label());
            match a.get_mut(&x) {
                Some(v) => *v += 1.0,
                None => {
                    return Err(InduceError::MissingArc {
                        route: r,
                        from: inst.node(w[0]).id,
                        to: inst.node(w[1]).id,
                    })
                }
            }
        }
        let first = trace.visits.iter().position(|v| inst.kind(v.node) == NodeKind::Stop);
        let ride_start = first.map(|f| trace.visits[f].arrival + inst.node(trace.visits[f].node).service_time);
        for (pos, st) in trace.visits.iter().enumerate() {
            let i = st.node;
            if i == depot {
                let e = depot_time.entry(k).or_insert(st.arrival);
                *e = e.min(st.arrival);
                continue;
            }
            if i == school {
                let e = school_time.entry(k).or_insert(st.arrival);
                *e = e.max(st.arrival);
                // Shared by the type's routes; the energy rows only bound it
                // from above.
                let e = school_soc.entry(k).or_insert(st.soc_in);
                *e = (*e).min(st.soc_in);
                continue;
            }
            a.insert(name("t", k, i), st.arrival);
            a.insert(name("v", k, i), st.soc_in.kwh());
            let load = name("l", k, i);
            if a.contains_key(&load) {
                a.insert(load, st.load as f64);
            }
            let w = name("w", k, i);
            if a.contains_key(&w) {
                let value = match (first, ride_start) {
                    (Some(f), Some(start)) if pos >= f => start,
                    _ => m,
                };
                a.insert(w, value);
            }
            if inst.kind(i) == NodeKind::Charger {
                let y = name("y", k, i);
                if a.contains_key(&y) {
                    a.insert(y, st.soc_out.kwh());
                }
            }
        }
        for (&c, &amount) in &route.charges {
            if c < inst.len() && inst.kind(c) == NodeKind::Charger {
                let z = name("z", k, c);
                if let Some(v) = a.get_mut(&z) {
                    *v += 1.0;
                }
                a.insert(name("p", k, c), amount.kwh());
            }
        }
    }
    for (k, t) in depot_time {
        a.insert(name("t", k, depot), t);
    }
    for (k, t) in school_time {
        a.insert(name("t", k, school), t);
    }
    for (k, v) in school_soc {
        a.insert(name("v", k, school), v.kwh());
    }
    Ok(a)
}

/// Rebuilds routes by following arcs with `x > 0.5` from the depot.
pub fn extract_solution(inst: &Instance, model: &Model, assignment: &Assignment) -> Result<Solution, ExtractError> {
    let tol = 1e-6;
    for v in model.variables.iter().filter(|v| v.integrality == Integrality::Binary) {
        let x = assignment.get(&v.name).copied().unwrap_or(0.0);
        if libm::fabs(x - libm::round(x)) > tol {
            return Err(ExtractError::NotIntegral {
                name: v.name.clone(),
                value: x,
            });
        }
    }
    let id = |i: usize| inst.node(i).id;
    let mut routes = Vec::new();
    let mut covered = vec![false; inst.len()];
    for &k in &model.meta.bus_types {
        let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut used = 0usize;
        for v in model.variables.iter().filter(|v| v.kind == VarKind::Arc && v.bus_type == k) {
            if assignment.get(&v.name).copied().unwrap_or(0.0) > 0.5 {
                next.entry(v.node).or_default().push(v.head.expect("arc head"));
                used += 1;
            }
        }
        let starts = next.remove(&inst.depot()).unwrap_or_default();
        let mut followed = starts.len();
        for start in starts {
            let mut visits = vec![inst.depot()];
            let mut cur = start;
            loop {
                if visits.contains(&cur) {
                    return Err(ExtractError::BrokenFlow(format!("node {} revisited", id(cur))));
                }
                visits.push(cur);
                if cur == inst.school() {
                    break;
                }
                match next.get(&cur).map(Vec::as_slice) {
                    Some([only]) => {
                        let only = *only;
                        next.remove(&cur);
                        followed += 1;
                        cur = only;
                    }
                    Some(_) => {
                        return Err(ExtractError::BrokenFlow(format!("node {} has several successors", id(cur))))
                    }
                    None => return Err(ExtractError::BrokenFlow(format!("path ends at node {}", id(cur)))),
                }
            }
            let mut route = Route::new(k, visits);
            for &c in route.visits.iter().filter(|&&c| inst.kind(c) == NodeKind::Charger) {
                if covered[c] {
                    return Err(ExtractError::BrokenFlow(format!("charger {} used twice", id(c))));
                }
                covered[c] = true;
                let suffix = if model.meta.fleet_mode == FleetMode::Heterogeneous {
                    format!("_{k}")
                } else {
                    String::new()
                };
                let p = assignment
                    .get(&format!("p_{}{suffix}", inst.node(c).label()))
                    .copied()
                    .unwrap_or(0.0);
                route.charges.insert(c, Energy::from_kwh(p));
            }
            for &s in route.visits.iter().filter(|&&s| inst.kind(s) == NodeKind::Stop) {
                if covered[s] {
                    return Err(ExtractError::BrokenFlow(format!("stop {} covered twice", id(s))));
                }
                covered[s] = true;
            }
            routes.push(route);
        }
        if followed != used {
            let (&at, _) = next.iter().next().expect("leftover arc");
            return Err(ExtractError::BrokenFlow(format!("subtour through node {}", id(at))));
        }
    }
    if let Some(&s) = inst.stops().iter().find(|&&s| !covered[s]) {
        return Err(ExtractError::BrokenFlow(format!("stop {} not covered", id(s))));
    }
    Ok(Solution::new(routes))
}

fn fmt_num(x: f64) -> String {
    if x == libm::trunc(x) && libm::fabs(x) < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn write_expr(out: &mut String, model: &Model, terms: &[(usize, f64)]) {
    let mut sorted: Vec<(&str, f64)> = terms
        .iter()
        .filter(|t| t.1 != 0.0)
        .map(|&(i, c)| (model.variables[i].name.as_str(), c))
        .collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    if sorted.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (n, (name, c)) in sorted.iter().enumerate() {
        if n > 0 && n % 8 == 0 {
            out.push_str("\n   ");
        }
        let sign = if *c < 0.0 { '-' } else { '+' };
        let mag = libm::fabs(*c);
        if n == 0 && sign == '+' {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", fmt_num(mag));
        }
        out.push_str(name);
    }
}

/// LP-format text. Terms and bound lines are sorted by variable name so the
/// output is byte-stable.
pub fn emit_lp(model: &Model) -> String {
    let mut out = String::new();
    let meta = &model.meta;
    let _ = writeln!(
        out,
        "\\ instance {:016x} fleet {:?} charging {:?} big_M {}",
        meta.instance_hash,
        meta.fleet_mode,
        meta.charge_policy,
        fmt_num(meta.big_m)
    );
    out.push_str("Minimize\n obj:");
    // Merge duplicate objective entries per variable.
    let mut obj: BTreeMap<usize, f64> = BTreeMap::new();
    for &(i, c) in &model.objective {
        *obj.entry(i).or_insert(0.0) += c;
    }
    let obj: Vec<(usize, f64)> = obj.into_iter().collect();
    write_expr(&mut out, model, &obj);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, model, &c.terms);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {sense} {}", fmt_num(c.rhs));
    }
    let mut vars: Vec<&Variable> = model.variables.iter().collect();
    vars.sort_by(|a, b| a.name.cmp(&b.name));
    out.push_str("Bounds\n");
    for v in vars.iter().filter(|v| v.integrality == Integrality::Continuous) {
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, fmt_num(v.lower));
        } else if v.upper.is_finite() {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        } else {
            let _ = writeln!(out, " {} >= {}", v.name, fmt_num(v.lower));
        }
    }
    out.push_str("Binaries\n");
    for v in vars.iter().filter(|v| v.integrality == Integrality::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelStats {
    pub variables: usize,
    pub binaries: usize,
    pub constraints: usize,
    pub vars_by_kind: BTreeMap<&'static str, usize>,
    /// Variables per bus type.
    pub vars_by_type: BTreeMap<usize, usize>,
    pub rows_by_family: BTreeMap<&'static str, usize>,
    pub big_m: f64,
}

pub fn model_stats(model: &Model) -> ModelStats {
    let mut vars_by_kind = BTreeMap::new();
    let mut vars_by_type = BTreeMap::new();
    for v in &model.variables {
        *vars_by_kind.entry(v.kind.prefix()).or_insert(0) += 1;
        *vars_by_type.entry(v.bus_type).or_insert(0) += 1;
    }
    let mut rows_by_family = BTreeMap::new();
    for c in &model.constraints {
        *rows_by_family.entry(c.family).or_insert(0) += 1;
    }
    ModelStats {
        variables: model.variables.len(),
        binaries: model
            .variables
            .iter()
            .filter(|v| v.integrality == Integrality::Binary)
            .count(),
        constraints: model.constraints.len(),
        vars_by_kind,
        vars_by_type,
        rows_by_family,
        big_m: model.meta.big_m,
    }
}
