use esbrp::fixtures;
use esbrp::reports::{bus_for_battery, compare_charging, sweep_battery, sweep_mrt, with_battery, RowStatus, BODY_PRICE};
use esbrp::solve::{run, Solver};
use esbrp_core::eval::ChargePolicy;
use esbrp_core::generate::{gen_instance, GenSpec};
use esbrp_core::instance::{default_bus_catalog, BusType};

const EXACT: Solver = Solver::Exact { time_limit: None };

fn csv_of(write: impl FnOnce(&mut Vec<u8>)) -> String {
    let mut buf = Vec::new();
    write(&mut buf);
    String::from_utf8(buf).unwrap()
}

fn by_battery(size: f64) -> BusType {
    default_bus_catalog().into_iter().find(|b| b.battery == size).unwrap()
}

#[test]
fn catalog_sizes_come_back_unchanged() {
    let catalog = default_bus_catalog();
    for bus in &catalog {
        let got = bus_for_battery(bus.battery, &catalog[0], 700.0);
        assert_eq!(got.capital, bus.capital);
        assert_eq!(got.time_cost, bus.time_cost);
        assert_eq!(got.consumption, bus.consumption);
        assert_eq!(got.capacity, catalog[0].capacity);
    }
}

#[test]
fn off_catalog_sizes_interpolate_between_neighbours() {
    let (a, b) = (by_battery(75.0), by_battery(90.0));
    let got = bus_for_battery(80.0, &a, 700.0);
    let t = 5.0 / 15.0;
    assert!((got.time_cost - (a.time_cost + t * (b.time_cost - a.time_cost))).abs() < 1e-12);
    assert!((got.consumption - (a.consumption + t * (b.consumption - a.consumption))).abs() < 1e-12);
    assert_eq!(got.capital, BODY_PRICE + 700.0 * 80.0);
    let below = bus_for_battery(40.0, &a, 700.0);
    assert_eq!(below.consumption, by_battery(60.0).consumption);
    let above = bus_for_battery(150.0, &a, 700.0);
    assert_eq!(above.time_cost, by_battery(110.0).time_cost);
}

#[test]
fn single_size_sweep_matches_a_plain_solve() {
    let inst = fixtures::fourteen_node();
    let report = sweep_battery(&inst, &[75.0], ChargePolicy::Partial, &EXACT).unwrap();
    let direct = run(&with_battery(&inst, 75.0), ChargePolicy::Partial, &EXACT).unwrap();
    assert_eq!(report.rows.len(), 1);
    let row = &report.rows[0];
    assert_eq!(row.outcome.status, RowStatus::Optimal);
    assert!((row.outcome.cost.total - direct.objective.total).abs() < 1e-9);
    assert_eq!(row.outcome.fleet, direct.solution.routes.len());
}

#[test]
fn unlimited_ride_time_matches_an_unconstrained_solve() {
    let inst = fixtures::fourteen_node();
    let report = sweep_mrt(&inst, &[f64::INFINITY], ChargePolicy::Partial, &EXACT).unwrap();
    let mut open = inst.clone();
    open.params.max_ride_time = f64::INFINITY;
    let direct = run(&open, ChargePolicy::Partial, &EXACT).unwrap();
    assert!((report.rows[0].outcome.cost.total - direct.objective.total).abs() < 1e-9);
}

#[test]
fn tiny_ride_time_makes_every_row_infeasible() {
    let inst = fixtures::fourteen_node();
    let report = sweep_mrt(&inst, &[1.0, 5.0], ChargePolicy::Partial, &EXACT).unwrap();
    assert!(report.rows.iter().all(|r| r.outcome.status == RowStatus::Infeasible));
    assert!(report.argmin().is_none());
    let text = csv_of(|b| report.write_csv(b).unwrap());
    assert_eq!(text.matches("infeasible").count(), 2);
}

#[test]
fn ride_time_sweep_never_needs_more_buses_as_the_limit_grows() {
    let inst = fixtures::fourteen_node();
    let mrts = [380.0, 420.0, 500.0, 800.0, f64::INFINITY];
    let report = sweep_mrt(&inst, &mrts, ChargePolicy::Partial, &EXACT).unwrap();
    for pair in report.rows.windows(2) {
        assert!(pair[1].outcome.fleet <= pair[0].outcome.fleet);
        assert!(pair[1].outcome.cost.total <= pair[0].outcome.cost.total + 1e-6);
    }
}

#[test]
fn sweep_csv_is_byte_reproducible() {
    let inst = fixtures::fourteen_node();
    let sizes = [90.0, 60.0, 75.0];
    let a = sweep_battery(&inst, &sizes, ChargePolicy::Partial, &EXACT).unwrap();
    let b = sweep_battery(&inst, &sizes, ChargePolicy::Partial, &EXACT).unwrap();
    let (ta, tb) = (csv_of(|w| a.write_csv(w).unwrap()), csv_of(|w| b.write_csv(w).unwrap()));
    assert_eq!(ta, tb);
    let values: Vec<f64> = a.rows.iter().map(|r| r.value).collect();
    assert_eq!(values, [60.0, 75.0, 90.0]);
}

#[test]
fn partial_charging_never_costs_more_when_both_are_optimal() {
    for seed in 0..6 {
        let spec = GenSpec {
            stops: 4,
            stations: 1,
            ..GenSpec::default()
        };
        let inst = gen_instance(&spec, seed);
        let report = compare_charging(&inst, &[], &EXACT).unwrap();
        for row in &report.rows {
            let proven = row.partial.status == RowStatus::Optimal && row.full.status == RowStatus::Optimal;
            if let (true, Some(s)) = (proven, row.savings()) {
                assert!(s >= -1e-6, "seed {seed}: savings {s}");
            }
        }
    }
}

#[test]
fn full_infeasible_fixture_is_flagged() {
    let inst = fixtures::load("full-infeasible").unwrap();
    let report = compare_charging(&inst, &[], &EXACT).unwrap();
    let row = &report.rows[0];
    assert!(row.partial.is_feasible());
    assert!(!row.full.is_feasible());
    assert_eq!(row.savings(), None);
    let text = csv_of(|w| report.write_csv(w).unwrap());
    assert!(text.contains("full charging infeasible, partial feasible"), "{text}");
}
