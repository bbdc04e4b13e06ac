//! Random small instances for unit and property tests.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::fleet_capital_cost;
use crate::instance::{BusType, FleetMode, GlobalParams, Instance, Node, NodeKind};

pub struct SmallSpec {
    pub max_stops: usize,
    pub max_chargers: usize,
    pub max_types: usize,
    pub finite_ride_time: bool,
}

impl Default for SmallSpec {
    fn default() -> Self {
        SmallSpec {
            max_stops: 5,
            max_chargers: 2,
            max_types: 2,
            finite_ride_time: true,
        }
    }
}

pub fn random_small(seed: u64, spec: &SmallSpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_stops = rng.gen_range(1..=spec.max_stops);
    let n_chargers = rng.gen_range(0..=spec.max_chargers);
    let pt = |rng: &mut ChaCha8Rng| (rng.gen_range(0.0..40.0), rng.gen_range(0.0..40.0));
    let mut nodes = Vec::new();
    let d = pt(&mut rng);
    nodes.push(Node::new(0, NodeKind::Depot, 0.0, 1200.0).at(d.0, d.1));
    for s in 0..n_stops {
        let p = pt(&mut rng);
        let demand = rng.gen_range(5..=25);
        let service = rng.gen_range(30.0..60.0);
        let earliest = rng.gen_range(0.0..800.0);
        nodes.push(Node::stop(s as u32 + 1, demand, service, earliest, 1200.0).at(p.0, p.1));
    }
    let station = pt(&mut rng);
    for c in 0..n_chargers {
        // Either a second copy of the same station or a new one.
        let p = if c == 0 || rng.gen_bool(0.5) { station } else { pt(&mut rng) };
        nodes.push(Node::new(100 + c as u32, NodeKind::Charger, 0.0, 1200.0).at(p.0, p.1));
    }
    let e = pt(&mut rng);
    nodes.push(Node::new(999, NodeKind::School, 900.0, 1200.0).at(e.0, e.1));

    let mut params = GlobalParams::default();
    if spec.finite_ride_time && rng.gen_bool(0.5) {
        params.max_ride_time = rng.gen_range(150.0..400.0);
    }
    let n_types = rng.gen_range(1..=spec.max_types);
    let bus_types = (0..n_types)
        .map(|k| {
            let battery = libm::round(rng.gen_range(40.0..120.0));
            BusType {
                name: format!("T{k}"),
                battery,
                capacity: rng.gen_range(30..=60),
                capital: fleet_capital_cost(300_000.0, battery, 700.0),
                time_cost: rng.gen_range(1.0..2.2),
                consumption: rng.gen_range(0.8..1.3),
                count: rng.gen_range(1..=3),
            }
        })
        .collect();
    let mode = if n_types > 1 && rng.gen_bool(0.7) {
        FleetMode::Heterogeneous
    } else {
        FleetMode::Homogeneous
    };
    let inst = Instance::euclidean(nodes, bus_types, params, mode).expect("valid shape");
    debug_assert!(inst.validate().is_valid(), "{:?}", inst.validate());
    inst
}
