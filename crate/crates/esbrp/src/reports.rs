//! Sensitivity studies: battery size, maximum ride time and partial versus
//! full charging. Each row is an independent solve; rows run in parallel
//! and are returned sorted by the swept value.

use std::io::Write;

use esbrp_core::cost::fleet_capital_cost;
use esbrp_core::energy::Energy;
use esbrp_core::eval::{
    charge_time_flexibility, simulate_route, solution_costs, ChargePolicy, CostBreakdown, ObjectiveForm,
};
use esbrp_core::exact::SolveResult;
use esbrp_core::instance::{default_bus_catalog, BusType, FleetMode, Instance, NodeKind};
use rayon::prelude::*;

use crate::io::FileError;
use crate::solve::{run, RunError, Solver};

/// Vehicle body price used when a sweep builds a bus type for a battery size.
pub const BODY_PRICE: f64 = 300_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Optimal,
    /// Feasible but not proven optimal (heuristic or budget hit).
    Feasible,
    Infeasible,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Optimal => "optimal",
            RowStatus::Feasible => "feasible",
            RowStatus::Infeasible => "infeasible",
        }
    }
}

/// Summary of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: RowStatus,
    pub cost: CostBreakdown,
    pub fleet: usize,
    pub distance: f64,
    pub travel_time: f64,
    /// Charges above zero, in route order.
    pub charges: Vec<Energy>,
    /// Charge-time slack gained over topping up fully at each charge.
    pub flexibility: f64,
}

impl Outcome {
    fn infeasible() -> Outcome {
        Outcome {
            status: RowStatus::Infeasible,
            cost: CostBreakdown::default(),
            fleet: 0,
            distance: 0.0,
            travel_time: 0.0,
            charges: Vec::new(),
            flexibility: 0.0,
        }
    }

    fn from_result(inst: &Instance, res: &SolveResult, policy: ChargePolicy) -> Outcome {
        let (cost, per_route) = solution_costs(inst, &res.solution, ObjectiveForm::Linearized, policy)
            .expect("solver output simulates cleanly");
        let mut charges = Vec::new();
        let mut flexibility = 0.0;
        for route in &res.solution.routes {
            let trace = simulate_route(inst, route, policy).expect("solver output simulates cleanly");
            let battery = inst.bus_types[route.bus_type].battery_energy();
            for v in trace.visits.iter().filter(|v| inst.kind(v.node) == NodeKind::Charger) {
                let amount = v.soc_out - v.soc_in;
                if amount > Energy::ZERO {
                    charges.push(amount);
                    flexibility += charge_time_flexibility(inst.params.recharge_rate, battery, v.soc_in, amount);
                }
            }
        }
        Outcome {
            status: if res.proven_optimal {
                RowStatus::Optimal
            } else {
                RowStatus::Feasible
            },
            cost,
            fleet: res.solution.routes.len(),
            distance: per_route.iter().map(|c| c.distance).sum(),
            travel_time: per_route.iter().map(|c| c.travel_time).sum(),
            charges,
            flexibility,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != RowStatus::Infeasible
    }

    /// Charges as `a;b(B)` with the battery size in parentheses.
    fn charges_cell(&self, battery: f64) -> String {
        let list: Vec<String> = self.charges.iter().map(|e| format!("{:.2}", e.kwh())).collect();
        format!("{}({})", list.join(";"), fmt_num(battery))
    }
}

fn solve_row(inst: &Instance, policy: ChargePolicy, solver: &Solver) -> Result<Outcome, RunError> {
    match run(inst, policy, solver) {
        Ok(res) => Ok(Outcome::from_result(inst, &res, policy)),
        Err(e) if e.is_infeasible() => Ok(Outcome::infeasible()),
        Err(e) => Err(e),
    }
}

/// One row of a battery or ride-time sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Battery size of the bus type used (the first type for ride-time sweeps).
    pub battery: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Name of the swept parameter, used as the first CSV column.
    pub parameter: &'static str,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Row with the lowest total among feasible rows.
    pub fn argmin(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.outcome.is_feasible())
            .min_by(|a, b| a.outcome.cost.total.total_cmp(&b.outcome.cost.total))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FileError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            self.parameter,
            "status",
            "total",
            "fleet_cost",
            "travel_time_cost",
            "charging_cost",
            "depot_charge_cost",
            "fleet",
            "distance",
            "travel_time",
            "chargers_used",
            "partial_charges",
        ])?;
        for r in &self.rows {
            let o = &r.outcome;
            if o.is_feasible() {
                w.write_record([
                    fmt_num(r.value),
                    o.status.as_str().to_string(),
                    format!("{:.2}", o.cost.total),
                    format!("{:.2}", o.cost.fleet_cost),
                    format!("{:.2}", o.cost.travel_time_cost),
                    format!("{:.2}", o.cost.charging_cost),
                    format!("{:.2}", o.cost.depot_charge_cost),
                    o.fleet.to_string(),
                    format!("{:.2}", o.distance),
                    format!("{:.2}", o.travel_time),
                    o.charges.len().to_string(),
                    o.charges_cell(r.battery),
                ])?;
            } else {
                let mut rec = vec![fmt_num(r.value), o.status.as_str().to_string()];
                rec.extend(std::iter::repeat_n(String::new(), 10));
                w.write_record(rec)?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

/// Bus type for a battery size: the catalog row with that battery when
/// there is one, otherwise time cost and consumption interpolated linearly
/// between the neighboring rows (clamped at the ends). Capital is body plus
/// battery; capacity and count come from `template`.
pub fn bus_for_battery(size: f64, template: &BusType, price_per_kwh: f64) -> BusType {
    let mut rows = default_bus_catalog();
    rows.sort_by(|a, b| a.battery.total_cmp(&b.battery));
    let (time_cost, consumption, name) = match rows.iter().find(|b| b.battery == size) {
        Some(b) => (b.time_cost, b.consumption, b.name.clone()),
        None => {
            let hi = rows.iter().position(|b| b.battery > size).unwrap_or(rows.len() - 1);
            let lo = hi.saturating_sub(1);
            let (a, b) = (&rows[lo], &rows[hi]);
            let t = if b.battery == a.battery {
                0.0
            } else {
                ((size - a.battery) / (b.battery - a.battery)).clamp(0.0, 1.0)
            };
            (
                a.time_cost + t * (b.time_cost - a.time_cost),
                a.consumption + t * (b.consumption - a.consumption),
                format!("{}kWh", fmt_num(size)),
            )
        }
    };
    BusType {
        name,
        battery: size,
        capacity: template.capacity,
        capital: fleet_capital_cost(BODY_PRICE, size, price_per_kwh),
        time_cost,
        consumption,
        count: template.count,
    }
}

/// The instance with a single bus type of battery `size`.
pub fn with_battery(inst: &Instance, size: f64) -> Instance {
    let mut out = inst.clone();
    let template = &inst.bus_types[0];
    out.bus_types = vec![bus_for_battery(size, template, inst.params.battery_price_per_kwh)];
    out.fleet_mode = FleetMode::Homogeneous;
    out
}

/// One solve per battery size, homogeneous fleet.
pub fn sweep_battery(
    inst: &Instance,
    sizes: &[f64],
    policy: ChargePolicy,
    solver: &Solver,
) -> Result<SweepReport, RunError> {
    let mut rows = sizes
        .par_iter()
        .map(|&size| {
            let outcome = solve_row(&with_battery(inst, size), policy, solver)?;
            Ok(SweepRow {
                value: size,
                battery: size,
                outcome,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepReport {
        parameter: "battery_kwh",
        rows,
    })
}

/// One solve per maximum ride time (seconds; infinity disables the limit).
pub fn sweep_mrt(inst: &Instance, mrts: &[f64], policy: ChargePolicy, solver: &Solver) -> Result<SweepReport, RunError> {
    let mut rows = mrts
        .par_iter()
        .map(|&h| {
            let mut local = inst.clone();
            local.params.max_ride_time = h;
            let outcome = solve_row(&local, policy, solver)?;
            Ok(SweepRow {
                value: h,
                battery: inst.bus_types[0].battery,
                outcome,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepReport {
        parameter: "max_ride_time",
        rows,
    })
}

/// Partial and full charging solved side by side for one battery size.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingRow {
    pub battery: f64,
    pub partial: Outcome,
    pub full: Outcome,
}

impl ChargingRow {
    /// Full minus partial objective, when both are feasible.
    pub fn savings(&self) -> Option<f64> {
        (self.partial.is_feasible() && self.full.is_feasible()).then_some(self.full.cost.total - self.partial.cost.total)
    }

    /// Savings once the overnight top-up at the depot is counted too.
    pub fn net_savings(&self) -> Option<f64> {
        self.savings()
            .map(|s| s + self.full.cost.depot_charge_cost - self.partial.cost.depot_charge_cost)
    }

    pub fn remark(&self) -> &'static str {
        match (self.partial.is_feasible(), self.full.is_feasible()) {
            (true, false) => "full charging infeasible, partial feasible",
            (false, false) => "infeasible",
            (false, true) => "partial infeasible",
            (true, true) => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingReport {
    pub rows: Vec<ChargingRow>,
}

impl ChargingReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FileError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "battery_kwh",
            "partial_status",
            "partial_total",
            "full_status",
            "full_total",
            "savings",
            "partial_charges",
            "full_charges",
            "charge_time_flexibility",
            "partial_depot_charge_cost",
            "full_depot_charge_cost",
            "net_savings",
            "remarks",
        ])?;
        let total = |o: &Outcome| {
            if o.is_feasible() {
                format!("{:.2}", o.cost.total)
            } else {
                String::new()
            }
        };
        let depot = |o: &Outcome| {
            if o.is_feasible() {
                format!("{:.2}", o.cost.depot_charge_cost)
            } else {
                String::new()
            }
        };
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_default();
        let cell = |o: &Outcome, b: f64| if o.is_feasible() { o.charges_cell(b) } else { String::new() };
        for r in &self.rows {
            w.write_record([
                fmt_num(r.battery),
                r.partial.status.as_str().to_string(),
                total(&r.partial),
                r.full.status.as_str().to_string(),
                total(&r.full),
                opt(r.savings()),
                cell(&r.partial, r.battery),
                cell(&r.full, r.battery),
                if r.partial.is_feasible() {
                    format!("{:.2}", r.partial.flexibility)
                } else {
                    String::new()
                },
                depot(&r.partial),
                depot(&r.full),
                opt(r.net_savings()),
                r.remark().to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Paired partial and full solves per battery size. With no sizes the
/// instance's own first bus type is used.
pub fn compare_charging(inst: &Instance, sizes: &[f64], solver: &Solver) -> Result<ChargingReport, RunError> {
    let variants: Vec<(f64, Instance)> = if sizes.is_empty() {
        vec![(inst.bus_types[0].battery, inst.clone())]
    } else {
        sizes.iter().map(|&s| (s, with_battery(inst, s))).collect()
    };
    let mut rows = variants
        .par_iter()
        .map(|(battery, local)| {
            Ok(ChargingRow {
                battery: *battery,
                partial: solve_row(local, ChargePolicy::Partial, solver)?,
                full: solve_row(local, ChargePolicy::Full, solver)?,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    rows.sort_by(|a, b| a.battery.total_cmp(&b.battery));
    Ok(ChargingReport { rows })
}
