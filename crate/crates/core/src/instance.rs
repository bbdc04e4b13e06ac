//! Problem data: nodes, arc matrices, bus catalog and global parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Index;

use thiserror::Error;

use crate::cost;
use crate::energy::Energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Depot,
    Stop,
    Charger,
    School,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Depot => "depot",
            NodeKind::Stop => "stop",
            NodeKind::Charger => "charger",
            NodeKind::School => "school",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A vertex of the school network. Times are seconds, demand is students.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    pub demand: i64,
    pub service_time: f64,
    pub earliest: f64,
    pub latest: f64,
    pub position: Option<(f64, f64)>,
}

impl Node {
    pub fn new(id: u32, kind: NodeKind, earliest: f64, latest: f64) -> Node {
        Node {
            id,
            kind,
            demand: 0,
            service_time: 0.0,
            earliest,
            latest,
            position: None,
        }
    }

    pub fn stop(id: u32, demand: i64, service_time: f64, earliest: f64, latest: f64) -> Node {
        Node {
            demand,
            service_time,
            ..Node::new(id, NodeKind::Stop, earliest, latest)
        }
    }

    pub fn at(mut self, x: f64, y: f64) -> Node {
        self.position = Some((x, y));
        self
    }

    /// Label used in model variable names: `D`, `E`, `ch<id>` or the stop id.
    pub fn label(&self) -> String {
        match self.kind {
            NodeKind::Depot => String::from("D"),
            NodeKind::School => String::from("E"),
            NodeKind::Charger => format!("ch{}", self.id),
            NodeKind::Stop => format!("{}", self.id),
        }
    }
}

/// One row of the bus catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct BusType {
    pub name: String,
    /// Battery capacity in kWh.
    pub battery: f64,
    /// Seats.
    pub capacity: i64,
    /// Purchase price including battery.
    pub capital: f64,
    /// Currency per second of travel.
    pub time_cost: f64,
    /// kWh per distance unit.
    pub consumption: f64,
    pub count: u32,
}

impl BusType {
    pub fn battery_energy(&self) -> Energy {
        Energy::from_kwh(self.battery)
    }

    /// Energy drawn over `distance` units, rounded to the energy grid.
    pub fn energy_for(&self, distance: f64) -> Energy {
        Energy::from_kwh(self.consumption * distance)
    }
}

/// How the fixed vehicle term of the objective is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FleetCostBasis {
    /// Amortized annuity of bus body and battery divided by services per year.
    #[default]
    PerService,
    /// The raw purchase price.
    Capital,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FleetMode {
    /// Only the first catalog entry is used.
    Homogeneous,
    #[default]
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalParams {
    /// Seconds per kWh charged.
    pub recharge_rate: f64,
    /// Currency per kWh charged en route.
    pub enroute_charge_cost: f64,
    /// Currency per kWh recharged at the depot or school (reported only).
    pub depot_charge_cost: f64,
    /// Distance units per second.
    pub speed: f64,
    /// Seconds; `f64::INFINITY` disables the limit.
    pub max_ride_time: f64,
    pub bell_earliest: f64,
    pub bell_latest: f64,
    pub services_per_year: u32,
    pub bus_depreciation_rate: f64,
    pub battery_depreciation_rate: f64,
    pub useful_life_years: u32,
    pub battery_price_per_kwh: f64,
    pub fleet_cost_basis: FleetCostBasis,
}

impl Default for GlobalParams {
    fn default() -> Self {
        GlobalParams {
            recharge_rate: 3.47,
            enroute_charge_cost: 0.25,
            depot_charge_cost: 0.10,
            speed: 1.0,
            max_ride_time: f64::INFINITY,
            bell_earliest: 900.0,
            bell_latest: 1200.0,
            services_per_year: 360,
            bus_depreciation_rate: 0.05,
            battery_depreciation_rate: 0.06,
            useful_life_years: 12,
            battery_price_per_kwh: 700.0,
            fleet_cost_basis: FleetCostBasis::PerService,
        }
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, InstanceError> {
        let n = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(InstanceError::Shape(format!(
                "matrix row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        Ok(Matrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("exactly one Depot required, found {0}")]
    DepotCount(usize),
    #[error("exactly one School required, found {0}")]
    SchoolCount(usize),
    #[error("duplicate node id {0}")]
    DuplicateId(u32),
    #[error("matrix shape: {0}")]
    Shape(String),
    #[error("bus catalog is empty")]
    NoBusTypes,
}

/// The full problem. Node order is the internal index order used by routes,
/// masks and matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    nodes: Vec<Node>,
    dist: Matrix,
    time: Matrix,
    depot: usize,
    school: usize,
    stops: Vec<usize>,
    chargers: Vec<usize>,
    pub bus_types: Vec<BusType>,
    pub params: GlobalParams,
    pub fleet_mode: FleetMode,
}

impl Instance {
    pub fn new(
        nodes: Vec<Node>,
        dist: Matrix,
        time: Matrix,
        bus_types: Vec<BusType>,
        params: GlobalParams,
        fleet_mode: FleetMode,
    ) -> Result<Instance, InstanceError> {
        let n = nodes.len();
        if dist.size() != n || time.size() != n {
            return Err(InstanceError::Shape(format!(
                "{n} nodes but distance matrix is {0}x{0} and time matrix is {1}x{1}",
                dist.size(),
                time.size()
            )));
        }
        let mut ids: Vec<u32> = nodes.iter().map(|nd| nd.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(InstanceError::DuplicateId(w[0]));
        }
        let of_kind = |kind| -> Vec<usize> {
            nodes
                .iter()
                .enumerate()
                .filter(|(_, nd)| nd.kind == kind)
                .map(|(i, _)| i)
                .collect()
        };
        let depots = of_kind(NodeKind::Depot);
        if depots.len() != 1 {
            return Err(InstanceError::DepotCount(depots.len()));
        }
        let schools = of_kind(NodeKind::School);
        if schools.len() != 1 {
            return Err(InstanceError::SchoolCount(schools.len()));
        }
        if bus_types.is_empty() {
            return Err(InstanceError::NoBusTypes);
        }
        Ok(Instance {
            stops: of_kind(NodeKind::Stop),
            chargers: of_kind(NodeKind::Charger),
            depot: depots[0],
            school: schools[0],
            nodes,
            dist,
            time,
            bus_types,
            params,
            fleet_mode,
        })
    }

    /// Builds the instance with `t_ij = d_ij / speed`.
    pub fn with_derived_times(
        nodes: Vec<Node>,
        dist: Matrix,
        bus_types: Vec<BusType>,
        params: GlobalParams,
        fleet_mode: FleetMode,
    ) -> Result<Instance, InstanceError> {
        let speed = params.speed;
        let time = Matrix::from_fn(dist.size(), |i, j| dist.get(i, j) / speed);
        Instance::new(nodes, dist, time, bus_types, params, fleet_mode)
    }

    /// Euclidean distances from node positions; nodes without a position
    /// are placed at the origin.
    pub fn euclidean(
        nodes: Vec<Node>,
        bus_types: Vec<BusType>,
        params: GlobalParams,
        fleet_mode: FleetMode,
    ) -> Result<Instance, InstanceError> {
        let pos: Vec<(f64, f64)> = nodes
            .iter()
            .map(|nd| nd.position.unwrap_or((0.0, 0.0)))
            .collect();
        let dist = Matrix::from_fn(nodes.len(), |i, j| {
            let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
            libm::sqrt(dx * dx + dy * dy)
        });
        Instance::with_derived_times(nodes, dist, bus_types, params, fleet_mode)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dist_matrix(&self) -> &Matrix {
        &self.dist
    }

    pub fn time_matrix(&self) -> &Matrix {
        &self.time
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    #[inline]
    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.time.get(i, j)
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn school(&self) -> usize {
        self.school
    }

    pub fn stops(&self) -> &[usize] {
        &self.stops
    }

    pub fn chargers(&self) -> &[usize] {
        &self.chargers
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.nodes[i].kind
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|nd| nd.id == id)
    }

    /// Bus types the solvers may dispatch under the current fleet mode.
    pub fn active_types(&self) -> core::ops::Range<usize> {
        match self.fleet_mode {
            FleetMode::Homogeneous => 0..1,
            FleetMode::Heterogeneous => 0..self.bus_types.len(),
        }
    }

    /// Fixed cost charged once per dispatched bus of type `k`.
    pub fn fleet_cost(&self, k: usize) -> f64 {
        let bt = &self.bus_types[k];
        match self.params.fleet_cost_basis {
            FleetCostBasis::PerService => cost::per_service_fleet_cost(bt, &self.params),
            FleetCostBasis::Capital => bt.capital,
        }
    }

    /// Objective coefficient of one kWh charged en route by type `k`:
    /// energy price plus the travel-time cost of the charging wait.
    pub fn charge_coefficient(&self, k: usize) -> f64 {
        self.params.enroute_charge_cost
            + self.params.recharge_rate * self.bus_types[k].time_cost
    }

    pub fn total_demand(&self) -> i64 {
        self.stops.iter().map(|&s| self.nodes[s].demand).sum()
    }

    /// Replaces node windows; used by generators and property tests.
    pub fn set_window(&mut self, i: usize, earliest: f64, latest: f64) {
        self.nodes[i].earliest = earliest;
        self.nodes[i].latest = latest;
    }

    /// Groups charger copies that are interchangeable: identical window and
    /// identical distance and time rows and columns.
    pub fn charger_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &c in &self.chargers {
            match classes.iter_mut().find(|cl| self.same_charger(cl[0], c)) {
                Some(cl) => cl.push(c),
                None => classes.push(vec![c]),
            }
        }
        classes
    }

    fn same_charger(&self, a: usize, b: usize) -> bool {
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        if na.earliest != nb.earliest || na.latest != nb.latest {
            return false;
        }
        (0..self.len()).all(|j| {
            if j == a || j == b {
                return true;
            }
            self.dist(a, j) == self.dist(b, j)
                && self.dist(j, a) == self.dist(j, b)
                && self.time(a, j) == self.time(b, j)
                && self.time(j, a) == self.time(j, b)
        })
    }

    /// True when both matrices satisfy the triangle inequality (up to 1e-9).
    pub fn is_metric(&self) -> bool {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    if self.dist(i, j) > self.dist(i, m) + self.dist(m, j) + 1e-9
                        || self.time(i, j) > self.time(i, m) + self.time(m, j) + 1e-9
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All violated data invariants; empty means valid.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let mut push = |node: Option<u32>, field: &'static str, message: String| {
            issues.push(ValidationIssue {
                node,
                field,
                message,
            })
        };
        for nd in &self.nodes {
            let id = Some(nd.id);
            if !(nd.earliest >= 0.0) {
                push(id, "earliest", format!("node {}: earliest {} < 0", nd.id, nd.earliest));
            }
            if !(nd.earliest <= nd.latest) {
                push(
                    id,
                    "latest",
                    format!("node {}: earliest {} > latest {}", nd.id, nd.earliest, nd.latest),
                );
            }
            if nd.demand < 0 {
                push(id, "demand", format!("node {}: demand {} < 0", nd.id, nd.demand));
            }
            if nd.kind != NodeKind::Stop && nd.demand != 0 {
                push(id, "demand", format!("node {}: {} with nonzero demand", nd.id, nd.kind));
            }
            if !(nd.service_time >= 0.0) {
                push(id, "service_time", format!("node {}: negative service time", nd.id));
            }
            if nd.kind != NodeKind::Stop && nd.service_time != 0.0 {
                push(
                    id,
                    "service_time",
                    format!("node {}: {} with nonzero service time", nd.id, nd.kind),
                );
            }
        }
        let school = &self.nodes[self.school];
        if school.earliest != self.params.bell_earliest || school.latest != self.params.bell_latest {
            push(
                Some(school.id),
                "latest",
                format!(
                    "school window [{}, {}] differs from bell window [{}, {}]",
                    school.earliest, school.latest, self.params.bell_earliest, self.params.bell_latest
                ),
            );
        }
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                let (d, t) = (self.dist(i, j), self.time(i, j));
                let pair = (self.nodes[i].id, self.nodes[j].id);
                if i == j {
                    if d != 0.0 {
                        push(Some(pair.0), "dist", format!("d[{0}][{0}] = {d}, expected 0", pair.0));
                    }
                    if t != 0.0 {
                        push(Some(pair.0), "time", format!("t[{0}][{0}] = {t}, expected 0", pair.0));
                    }
                } else {
                    // Copies of one charger share a location.
                    let copies = self.nodes[i].kind == NodeKind::Charger
                        && self.nodes[j].kind == NodeKind::Charger
                        && d == 0.0;
                    if !copies && (!(d > 0.0) || !d.is_finite()) {
                        push(
                            Some(pair.0),
                            "dist",
                            format!("d[{}][{}] = {d}, expected finite > 0", pair.0, pair.1),
                        );
                    }
                    if !(t >= 0.0) || !t.is_finite() {
                        push(
                            Some(pair.0),
                            "time",
                            format!("t[{}][{}] = {t}, expected finite >= 0", pair.0, pair.1),
                        );
                    }
                }
            }
        }
        for (k, bt) in self.bus_types.iter().enumerate() {
            let fields = [
                ("battery", bt.battery),
                ("capacity", bt.capacity as f64),
                ("capital", bt.capital),
                ("time_cost", bt.time_cost),
                ("consumption", bt.consumption),
                ("count", bt.count as f64),
            ];
            for (field, value) in fields {
                if !(value > 0.0) || !value.is_finite() {
                    push(None, field, format!("bus type {k}: {field} = {value}, expected > 0"));
                }
            }
        }
        let p = &self.params;
        let positive = [
            ("g", p.recharge_rate),
            ("speed", p.speed),
            ("max_ride_time", p.max_ride_time),
            ("battery_price", p.battery_price_per_kwh),
        ];
        for (field, value) in positive {
            if !(value > 0.0) {
                push(None, field, format!("{field} = {value}, expected > 0"));
            }
        }
        if !(p.enroute_charge_cost >= 0.0) || !(p.depot_charge_cost >= 0.0) {
            push(None, "c_r", String::from("charging prices must be >= 0"));
        }
        if !(p.bell_earliest <= p.bell_latest) {
            push(
                None,
                "bell_latest",
                format!("bell window [{}, {}] is empty", p.bell_earliest, p.bell_latest),
            );
        }
        if p.services_per_year < 1 {
            push(None, "services_per_year", String::from("services_per_year must be >= 1"));
        }
        if p.useful_life_years < 1 {
            push(None, "life", String::from("useful life must be >= 1 year"));
        }
        for (field, rate) in [
            ("bus_rate", p.bus_depreciation_rate),
            ("battery_rate", p.battery_depreciation_rate),
        ] {
            if !(rate > 0.0 && rate < 1.0) {
                push(None, field, format!("{field} = {rate}, expected in (0, 1)"));
            }
        }
        ValidationReport { issues }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    /// Node id the issue is attached to, when there is one.
    pub node: Option<u32>,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// The five bus types used throughout the experiments. Seat counts are not
/// part of the published table; 80 seats are assumed for every type since a
/// type I bus must carry a 75-student route.
pub fn default_bus_catalog() -> Vec<BusType> {
    let base = 300_000.0;
    let price = 700.0;
    let rows = [
        ("I", 75.0, 1.75, 1.00),
        ("II", 60.0, 1.50, 0.90),
        ("III", 90.0, 2.00, 1.15),
        ("IV", 100.0, 2.10, 1.25),
        ("V", 110.0, 2.15, 1.30),
    ];
    rows.iter()
        .map(|&(name, battery, time_cost, consumption)| BusType {
            name: String::from(name),
            battery,
            capacity: 80,
            capital: cost::fleet_capital_cost(base, battery, price),
            time_cost,
            consumption,
            count: 10,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Instance {
        let nodes = vec![
            Node::new(0, NodeKind::Depot, 0.0, 1200.0),
            Node::stop(1, 10, 45.0, 600.0, 1200.0),
            Node::new(2, NodeKind::School, 900.0, 1200.0),
        ];
        let dist = Matrix::from_fn(3, |i, j| if i == j { 0.0 } else { 10.0 });
        Instance::with_derived_times(
            nodes,
            dist,
            default_bus_catalog(),
            GlobalParams::default(),
            FleetMode::Homogeneous,
        )
        .unwrap()
    }

    #[test]
    fn valid_instance_has_empty_report() {
        assert!(tiny().validate().is_valid());
    }

    #[test]
    fn negative_demand_is_reported_with_node_and_field() {
        let mut inst = tiny();
        inst.nodes[1].demand = -3;
        let report = inst.validate();
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].node, Some(1));
        assert_eq!(report.issues[0].field, "demand");
    }

    #[test]
    fn inverted_window_is_reported() {
        let mut inst = tiny();
        inst.set_window(1, 900.0, 800.0);
        let report = inst.validate();
        assert!(report.issues.iter().any(|i| i.node == Some(1) && i.field == "latest"));
    }

    #[test]
    fn two_depots_rejected() {
        let nodes = vec![
            Node::new(0, NodeKind::Depot, 0.0, 1.0),
            Node::new(1, NodeKind::Depot, 0.0, 1.0),
            Node::new(2, NodeKind::School, 0.0, 1.0),
        ];
        let err = Instance::with_derived_times(
            nodes,
            Matrix::zeros(3),
            default_bus_catalog(),
            GlobalParams::default(),
            FleetMode::Homogeneous,
        )
        .unwrap_err();
        assert_eq!(err, InstanceError::DepotCount(2));
        assert!(alloc::string::ToString::to_string(&err).contains("exactly one Depot"));
    }

    #[test]
    fn unit_speed_time_equals_distance() {
        let inst = tiny();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(inst.time(i, j), inst.dist(i, j));
            }
        }
    }

    #[test]
    fn catalog_capital_matches_published_fleet_costs() {
        let caps: Vec<f64> = default_bus_catalog().iter().map(|b| b.capital).collect();
        assert_eq!(caps, vec![352_500.0, 342_000.0, 363_000.0, 370_000.0, 377_000.0]);
    }
}
