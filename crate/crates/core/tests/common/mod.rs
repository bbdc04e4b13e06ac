#![allow(dead_code)]

use std::collections::BTreeMap;

use esbrp_core::budget::Unlimited;
use esbrp_core::energy::Energy;
use esbrp_core::eval::{min_charge_amounts, simulate_route, ChargePolicy, Route, Solution};
use esbrp_core::generate::{gen_instance, GenSpec};
use esbrp_core::instance::{GlobalParams, Instance};
use esbrp_core::lns::{solve_lns_with, Acceptance, LnsConfig};
use esbrp_core::preprocess::ArcMask;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A generated instance with at most five stops and two charger copies.
/// The shape itself (types, ride limit, area) is drawn from the seed.
pub fn small(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut params = GlobalParams::default();
    if rng.gen_bool(0.4) {
        params.max_ride_time = rng.gen_range(150.0..500.0);
    }
    let bus_types = if rng.gen_bool(0.5) {
        vec![rng.gen_range(0..5)]
    } else {
        let mut rows: Vec<usize> = (0..5).collect();
        rows.shuffle(&mut rng);
        rows.truncate(2);
        rows
    };
    let stations = rng.gen_range(0..=1);
    let spec = GenSpec {
        stops: rng.gen_range(1..=5),
        stations,
        copies: rng.gen_range(1..=2),
        side: rng.gen_range(20.0..60.0),
        demand: (5, 40),
        buses_per_type: Some(rng.gen_range(1..=3)),
        bus_types,
        params,
        ..GenSpec::default()
    };
    gen_instance(&spec, seed)
}

/// Distinct feasible solutions met along a short LNS run.
pub fn feasible_solutions(inst: &Instance, mask: &ArcMask, policy: ChargePolicy, seed: u64) -> Vec<Solution> {
    let cfg = LnsConfig {
        seed,
        iterations: 40,
        accept: Acceptance::Annealing {
            initial_temperature: 0.5,
            cooling: 0.99,
        },
        policy,
        ..LnsConfig::default()
    };
    let mut seen: Vec<Solution> = Vec::new();
    let mut keep = |s: &Solution| {
        let s = s.canonical();
        if !seen.contains(&s) {
            seen.push(s);
        }
    };
    let _ = solve_lns_with(inst, mask, &cfg, &Unlimited, Some(&mut keep));
    seen
}

/// Any solution-shaped object: stops split into routes in random order, a
/// charger copy sprinkled in here and there, and charges that are minimal,
/// full, missing or arbitrary. Many of these are infeasible.
pub fn random_candidate(inst: &Instance, rng: &mut ChaCha8Rng) -> Solution {
    let mut stops = inst.stops().to_vec();
    stops.shuffle(rng);
    let n_routes = rng.gen_range(1..=stops.len().min(3));
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_routes];
    for (i, s) in stops.into_iter().enumerate() {
        let g = if i < n_routes { i } else { rng.gen_range(0..n_routes) };
        groups[g].push(s);
    }
    let mut chargers = inst.chargers().to_vec();
    chargers.shuffle(rng);
    let types: Vec<usize> = inst.active_types().collect();
    let routes = groups
        .into_iter()
        .map(|mut g| {
            if !chargers.is_empty() && rng.gen_bool(0.5) {
                let at = rng.gen_range(0..=g.len());
                g.insert(at, chargers.pop().unwrap());
            }
            let mut visits = vec![inst.depot()];
            visits.extend(g);
            visits.push(inst.school());
            let mut route = Route::new(*types.choose(rng).unwrap(), visits);
            route.charges = match rng.gen_range(0..4) {
                0 => min_charge_amounts(inst, &route).unwrap_or_default(),
                1 => simulate_route(inst, &route, ChargePolicy::Full)
                    .map(|t| t.charges(inst).collect())
                    .unwrap_or_default(),
                2 => BTreeMap::new(),
                _ => route
                    .chargers(inst)
                    .map(|c| (c, Energy::from_kwh(rng.gen_range(0.0..60.0))))
                    .collect(),
            };
            route
        })
        .collect();
    Solution::new(routes)
}
