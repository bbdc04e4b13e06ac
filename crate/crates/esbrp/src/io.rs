//! Instance and solution files (TOML) and the CSV outputs.
//!
//! Instance file layout, all keys lowercase:
//!
//! ```toml
//! format_version = 1
//! name = "optional label"
//! fleet_mode = "heterogeneous"        # or "homogeneous" (first bus type only)
//! dist = [[0.0, 12.0], [12.0, 0.0]]   # optional; Euclidean from x/y if absent
//! time = [[...]]                      # optional; dist / speed if absent
//!
//! [params]                            # every key optional, defaults shown by `gen`
//! recharge_rate = 3.47                # s/kWh
//! max_ride_time = inf                 # s
//!
//! [[nodes]]
//! id = 0
//! kind = "depot"                      # depot | stop | charger | school
//! x = 0.0                             # optional
//! y = 0.0
//! demand = 0                          # students, stops only
//! service_time = 0.0                  # s
//! earliest = 0.0
//! latest = 1200.0
//!
//! [[bus_types]]
//! name = "I"
//! battery = 75.0                      # kWh
//! capacity = 80
//! capital = 352500.0
//! time_cost = 1.75                    # currency/s
//! consumption = 1.0                   # kWh per distance unit
//! count = 10
//! ```
//!
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use esbrp_core::energy::Energy;
use esbrp_core::eval::{trace_route_unchecked, ChargePolicy, CostBreakdown, Route, Solution};
use esbrp_core::exact::SolveResult;
use esbrp_core::instance::{
    BusType, FleetCostBasis, FleetMode, GlobalParams, Instance, InstanceError, Matrix, Node, NodeKind,
};
use esbrp_core::milp::ModelStats;
use esbrp_core::preprocess::{ArcMask, Rule};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Schema(String),
    #[error("invalid solution: {0}")]
    Solution(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Depot,
    Stop,
    Charger,
    School,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum FleetDoc {
    Homogeneous,
    #[default]
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum BasisDoc {
    #[default]
    PerService,
    Capital,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u32,
    kind: KindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(default)]
    demand: i64,
    #[serde(default)]
    service_time: f64,
    earliest: f64,
    latest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDoc {
    #[serde(default)]
    name: String,
    battery: f64,
    capacity: i64,
    capital: f64,
    time_cost: f64,
    consumption: f64,
    count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ParamsDoc {
    recharge_rate: f64,
    enroute_charge_cost: f64,
    depot_charge_cost: f64,
    speed: f64,
    max_ride_time: f64,
    bell_earliest: f64,
    bell_latest: f64,
    services_per_year: u32,
    bus_depreciation_rate: f64,
    battery_depreciation_rate: f64,
    useful_life_years: u32,
    battery_price_per_kwh: f64,
    fleet_cost_basis: BasisDoc,
}

impl Default for ParamsDoc {
    fn default() -> Self {
        ParamsDoc::from(&GlobalParams::default())
    }
}

impl From<&GlobalParams> for ParamsDoc {
    fn from(p: &GlobalParams) -> Self {
        ParamsDoc {
            recharge_rate: p.recharge_rate,
            enroute_charge_cost: p.enroute_charge_cost,
            depot_charge_cost: p.depot_charge_cost,
            speed: p.speed,
            max_ride_time: p.max_ride_time,
            bell_earliest: p.bell_earliest,
            bell_latest: p.bell_latest,
            services_per_year: p.services_per_year,
            bus_depreciation_rate: p.bus_depreciation_rate,
            battery_depreciation_rate: p.battery_depreciation_rate,
            useful_life_years: p.useful_life_years,
            battery_price_per_kwh: p.battery_price_per_kwh,
            fleet_cost_basis: match p.fleet_cost_basis {
                FleetCostBasis::PerService => BasisDoc::PerService,
                FleetCostBasis::Capital => BasisDoc::Capital,
            },
        }
    }
}

impl From<&ParamsDoc> for GlobalParams {
    fn from(p: &ParamsDoc) -> Self {
        GlobalParams {
            recharge_rate: p.recharge_rate,
            enroute_charge_cost: p.enroute_charge_cost,
            depot_charge_cost: p.depot_charge_cost,
            speed: p.speed,
            max_ride_time: p.max_ride_time,
            bell_earliest: p.bell_earliest,
            bell_latest: p.bell_latest,
            services_per_year: p.services_per_year,
            bus_depreciation_rate: p.bus_depreciation_rate,
            battery_depreciation_rate: p.battery_depreciation_rate,
            useful_life_years: p.useful_life_years,
            battery_price_per_kwh: p.battery_price_per_kwh,
            fleet_cost_basis: match p.fleet_cost_basis {
                BasisDoc::PerService => FleetCostBasis::PerService,
                BasisDoc::Capital => FleetCostBasis::Capital,
            },
        }
    }
}

// Plain values come before tables so the TOML serializer can emit them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    fleet_mode: FleetDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    params: ParamsDoc,
    nodes: Vec<NodeDoc>,
    bus_types: Vec<BusDoc>,
}

fn check_version(found: u32) -> Result<(), FileError> {
    if found != FORMAT_VERSION {
        return Err(FileError::Parse(format!(
            "format_version {found} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

fn schema(e: InstanceError) -> FileError {
    FileError::Schema(e.to_string())
}

/// Parses an instance file and validates it. Parse errors carry the TOML
/// line and column; invariant violations are listed one per line.
pub fn load_instance(text: &str) -> Result<Instance, FileError> {
    let doc: InstanceDoc = toml::from_str(text).map_err(|e| FileError::Parse(e.to_string()))?;
    check_version(doc.format_version)?;
    let nodes: Vec<Node> = doc
        .nodes
        .iter()
        .map(|n| Node {
            id: n.id,
            kind: match n.kind {
                KindDoc::Depot => NodeKind::Depot,
                KindDoc::Stop => NodeKind::Stop,
                KindDoc::Charger => NodeKind::Charger,
                KindDoc::School => NodeKind::School,
            },
            demand: n.demand,
            service_time: n.service_time,
            earliest: n.earliest,
            latest: n.latest,
            position: n.x.zip(n.y),
        })
        .collect();
    let bus_types = doc
        .bus_types
        .iter()
        .map(|b| BusType {
            name: b.name.clone(),
            battery: b.battery,
            capacity: b.capacity,
            capital: b.capital,
            time_cost: b.time_cost,
            consumption: b.consumption,
            count: b.count,
        })
        .collect();
    let params = GlobalParams::from(&doc.params);
    let fleet = match doc.fleet_mode {
        FleetDoc::Homogeneous => FleetMode::Homogeneous,
        FleetDoc::Heterogeneous => FleetMode::Heterogeneous,
    };
    let inst = match (&doc.dist, &doc.time) {
        (None, Some(_)) => return Err(FileError::Schema("a time matrix needs a distance matrix".into())),
        (None, None) => {
            if let Some(n) = doc.nodes.iter().find(|n| n.x.is_none() || n.y.is_none()) {
                return Err(FileError::Schema(format!(
                    "node {}: coordinates x and y are required when no dist matrix is given",
                    n.id
                )));
            }
            Instance::euclidean(nodes, bus_types, params, fleet).map_err(schema)?
        }
        (Some(d), None) => {
            let dist = Matrix::from_rows(d).map_err(schema)?;
            Instance::with_derived_times(nodes, dist, bus_types, params, fleet).map_err(schema)?
        }
        (Some(d), Some(t)) => {
            let dist = Matrix::from_rows(d).map_err(schema)?;
            let time = Matrix::from_rows(t).map_err(schema)?;
            Instance::new(nodes, dist, time, bus_types, params, fleet).map_err(schema)?
        }
    };
    let report = inst.validate();
    if !report.is_valid() {
        let lines: Vec<String> = report
            .issues
            .iter()
            .map(|i| match i.node {
                Some(id) => format!("node {id}: {i}"),
                None => i.to_string(),
            })
            .collect();
        return Err(FileError::Schema(lines.join("\n")));
    }
    Ok(inst)
}

pub fn read_instance(path: &Path) -> Result<Instance, FileError> {
    load_instance(&read(path)?)
}

/// Serializes an instance so that it reloads to the same numbers.
pub fn instance_to_toml(inst: &Instance, name: Option<&str>) -> String {
    let rows = |m: &Matrix| m.rows().map(|r| r.to_vec()).collect::<Vec<_>>();
    // Matrices are written only when coordinates and speed cannot rebuild
    // them exactly.
    let positioned = inst.nodes().iter().all(|n| n.position.is_some());
    let rebuilt = positioned
        .then(|| Instance::euclidean(inst.nodes().to_vec(), inst.bus_types.clone(), inst.params.clone(), inst.fleet_mode).ok())
        .flatten();
    let same = |a: &Matrix, b: &Matrix| a == b;
    let (dist, time) = match &rebuilt {
        Some(r) if same(r.dist_matrix(), inst.dist_matrix()) && same(r.time_matrix(), inst.time_matrix()) => (None, None),
        _ => {
            let derived = Matrix::from_fn(inst.len(), |i, j| inst.dist(i, j) / inst.params.speed);
            let time = (!same(&derived, inst.time_matrix())).then(|| rows(inst.time_matrix()));
            (Some(rows(inst.dist_matrix())), time)
        }
    };
    let doc = InstanceDoc {
        format_version: FORMAT_VERSION,
        name: name.map(str::to_owned),
        fleet_mode: match inst.fleet_mode {
            FleetMode::Homogeneous => FleetDoc::Homogeneous,
            FleetMode::Heterogeneous => FleetDoc::Heterogeneous,
        },
        dist,
        time,
        params: ParamsDoc::from(&inst.params),
        nodes: inst
            .nodes()
            .iter()
            .map(|n| NodeDoc {
                id: n.id,
                kind: match n.kind {
                    NodeKind::Depot => KindDoc::Depot,
                    NodeKind::Stop => KindDoc::Stop,
                    NodeKind::Charger => KindDoc::Charger,
                    NodeKind::School => KindDoc::School,
                },
                x: n.position.map(|p| p.0),
                y: n.position.map(|p| p.1),
                demand: n.demand,
                service_time: n.service_time,
                earliest: n.earliest,
                latest: n.latest,
            })
            .collect(),
        bus_types: inst
            .bus_types
            .iter()
            .map(|b| BusDoc {
                name: b.name.clone(),
                battery: b.battery,
                capacity: b.capacity,
                capital: b.capital,
                time_cost: b.time_cost,
                consumption: b.consumption,
                count: b.count,
            })
            .collect(),
    };
    toml::to_string(&doc).expect("instance documents always serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PolicyDoc {
    Partial,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChargeDoc {
    node: u32,
    kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteDoc {
    /// Index into the instance's bus types.
    bus_type: usize,
    /// Node ids from depot to school.
    visits: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    charges: Vec<ChargeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDoc {
    format_version: u32,
    charge_policy: PolicyDoc,
    /// Informational; recomputed on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(default)]
    routes: Vec<RouteDoc>,
}

/// A solution file: the routes and the policy they were planned under.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub solution: Solution,
    pub policy: ChargePolicy,
}

pub fn load_solution(inst: &Instance, text: &str) -> Result<SolutionFile, FileError> {
    let doc: SolutionDoc = toml::from_str(text).map_err(|e| FileError::Parse(e.to_string()))?;
    check_version(doc.format_version)?;
    let index = |id: u32| {
        inst.index_of(id)
            .ok_or_else(|| FileError::Solution(format!("unknown node id {id}")))
    };
    let mut routes = Vec::with_capacity(doc.routes.len());
    for (r, rd) in doc.routes.iter().enumerate() {
        if rd.bus_type >= inst.bus_types.len() {
            return Err(FileError::Solution(format!(
                "route {r}: bus type {} does not exist",
                rd.bus_type
            )));
        }
        let visits = rd.visits.iter().map(|&id| index(id)).collect::<Result<Vec<_>, _>>()?;
        let mut route = Route::new(rd.bus_type, visits);
        for c in &rd.charges {
            route.charges.insert(index(c.node)?, Energy::from_kwh(c.kwh));
        }
        routes.push(route);
    }
    Ok(SolutionFile {
        solution: Solution::new(routes),
        policy: match doc.charge_policy {
            PolicyDoc::Partial => ChargePolicy::Partial,
            PolicyDoc::Full => ChargePolicy::Full,
        },
    })
}

pub fn read_solution(inst: &Instance, path: &Path) -> Result<SolutionFile, FileError> {
    load_solution(inst, &read(path)?)
}

pub fn solution_to_toml(inst: &Instance, sol: &Solution, policy: ChargePolicy, objective: Option<f64>) -> String {
    let doc = SolutionDoc {
        format_version: FORMAT_VERSION,
        charge_policy: match policy {
            ChargePolicy::Partial => PolicyDoc::Partial,
            ChargePolicy::Full => PolicyDoc::Full,
        },
        objective,
        routes: sol
            .routes
            .iter()
            .map(|r| RouteDoc {
                bus_type: r.bus_type,
                visits: r.visits.iter().map(|&i| inst.node(i).id).collect(),
                charges: r
                    .charges
                    .iter()
                    .map(|(&c, e)| ChargeDoc {
                        node: inst.node(c).id,
                        kwh: e.kwh(),
                    })
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("solution documents always serialize")
}

fn read(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FileError> {
    std::fs::write(path, contents).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Per-visit trace: route, position, node, t, load, soc_in, soc_out.
/// Routes that break a constraint are still traced as simulated.
pub fn write_trace_csv<W: Write>(inst: &Instance, sol: &Solution, policy: ChargePolicy, out: W) -> Result<(), FileError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["route", "visit", "node", "kind", "t", "load", "soc_in", "soc_out"])?;
    for (r, route) in sol.routes.iter().enumerate() {
        let Ok((trace, _)) = trace_route_unchecked(inst, route, policy) else { continue };
        for (pos, v) in trace.visits.iter().enumerate() {
            let node = inst.node(v.node);
            w.write_record([
                r.to_string(),
                pos.to_string(),
                node.id.to_string(),
                node.kind.to_string(),
                format!("{:.6}", v.arrival),
                v.load.to_string(),
                format!("{:.6}", v.soc_in.kwh()),
                format!("{:.6}", v.soc_out.kwh()),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_costs_csv<W: Write>(cost: &CostBreakdown, out: W) -> Result<(), FileError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fleet_cost", "travel_time_cost", "charging_cost", "total", "depot_charge_cost"])?;
    w.write_record([
        format!("{:.6}", cost.fleet_cost),
        format!("{:.6}", cost.travel_time_cost),
        format!("{:.6}", cost.charging_cost),
        format!("{:.6}", cost.total),
        format!("{:.6}", cost.depot_charge_cost),
    ])?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Search log: one `incumbent` row per improvement, then the final bound.
pub fn write_search_log<W: Write>(res: &SolveResult, out: W) -> Result<(), FileError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event", "nodes", "value"])?;
    for &(nodes, value) in &res.incumbent_trace {
        w.write_record(["incumbent".to_string(), nodes.to_string(), format!("{value:.6}")])?;
    }
    w.write_record([
        "lower_bound".to_string(),
        res.nodes_explored.to_string(),
        format!("{:.6}", res.lower_bound),
    ])?;
    w.write_record([
        "proven_optimal".to_string(),
        res.nodes_explored.to_string(),
        (res.proven_optimal as u8).to_string(),
    ])?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Arcs removed per bus type and rule.
pub fn write_preprocess_csv<W: Write>(inst: &Instance, mask: &ArcMask, out: W) -> Result<(), FileError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["type", "rule", "removed_count"])?;
    for k in inst.active_types() {
        let removed = mask.removed_by_rule(k);
        for rule in Rule::ALL {
            w.write_record([
                inst.bus_types[k].name.clone(),
                rule.number().to_string(),
                removed[rule.number() - 1].to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Model statistics as `section,key,count` rows.
pub fn write_stats_csv<W: Write>(stats: &ModelStats, out: W) -> Result<(), FileError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["section", "key", "value"])?;
    let mut rows: Vec<(String, String, String)> = vec![
        ("total".into(), "variables".into(), stats.variables.to_string()),
        ("total".into(), "binaries".into(), stats.binaries.to_string()),
        ("total".into(), "constraints".into(), stats.constraints.to_string()),
        ("total".into(), "big_m".into(), stats.big_m.to_string()),
    ];
    let section = |name: &str, m: &BTreeMap<String, usize>| {
        m.iter()
            .map(|(k, v)| (name.to_string(), k.clone(), v.to_string()))
            .collect::<Vec<_>>()
    };
    let kinds: BTreeMap<String, usize> = stats.vars_by_kind.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let types: BTreeMap<String, usize> = stats.vars_by_type.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let families: BTreeMap<String, usize> = stats.rows_by_family.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    rows.extend(section("variables_by_kind", &kinds));
    rows.extend(section("variables_by_type", &types));
    rows.extend(section("rows_by_family", &families));
    for (a, b, c) in rows {
        w.write_record([a, b, c])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
