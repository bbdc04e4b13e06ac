//! Reproducible random instances.
//!
//! Stops are uniform in a square, the depot and school too. Each stop's
//! window is laid out backward from the bell: the latest start leaves time
//! to serve the stop and drive straight to the school, so a bus serving the
//! stop alone is always on time. Charging stations sit at the centroids of
//! a few Lloyd iterations over the stop positions, each with its copies.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{default_bus_catalog, FleetMode, GlobalParams, Instance, Node, NodeKind};

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub stops: usize,
    /// Physical charging stations.
    pub stations: usize,
    /// Copies per station, one per permitted visit.
    pub copies: usize,
    /// Side of the square holding every node, in distance units.
    pub side: f64,
    /// Inclusive demand range.
    pub demand: (i64, i64),
    /// Service time range in seconds.
    pub service: (f64, f64),
    /// Window width range in seconds.
    pub window: (f64, f64),
    /// Extra slack range subtracted from each stop's latest start.
    pub slack: (f64, f64),
    /// Catalog rows offered; more than one makes the fleet heterogeneous.
    pub bus_types: Vec<usize>,
    /// Buses per type; one per stop when unset.
    pub buses_per_type: Option<u32>,
    pub params: GlobalParams,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            stops: 10,
            stations: 1,
            copies: 2,
            side: 40.0,
            demand: (5, 20),
            service: (30.0, 60.0),
            window: (150.0, 400.0),
            slack: (0.0, 200.0),
            bus_types: alloc::vec![0],
            buses_per_type: None,
            params: GlobalParams::default(),
        }
    }
}

pub fn gen_instance(spec: &GenSpec, seed: u64) -> Instance {
    assert!(spec.stops >= 1, "an instance needs at least one stop");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = spec.side;
    let point = |rng: &mut ChaCha8Rng| (rng.gen_range(0.0..=side), rng.gen_range(0.0..=side));
    let depot = point(&mut rng);
    let school = point(&mut rng);
    let stops: Vec<(f64, f64)> = (0..spec.stops).map(|_| point(&mut rng)).collect();
    let mut stations = centroids(&stops, spec.stations.min(spec.stops));
    // A cluster of one stop puts the station on top of it.
    let nudge = (side * 1e-3).max(1e-3);
    for c in &mut stations {
        while stops.iter().chain([&depot, &school]).any(|p| libm::hypot(p.0 - c.0, p.1 - c.1) < nudge / 2.0) {
            c.0 += nudge;
        }
    }

    let p = &spec.params;
    let mut nodes = Vec::with_capacity(spec.stops + stations.len() * spec.copies + 2);
    nodes.push(Node::new(0, NodeKind::Depot, 0.0, p.bell_latest).at(depot.0, depot.1));
    for (s, &(x, y)) in stops.iter().enumerate() {
        let demand = rng.gen_range(spec.demand.0..=spec.demand.1);
        let service = uniform(&mut rng, spec.service);
        let to_school = libm::hypot(x - school.0, y - school.1) / p.speed;
        let latest = (p.bell_latest - service - to_school - uniform(&mut rng, spec.slack)).max(0.0);
        let earliest = (latest - uniform(&mut rng, spec.window)).max(0.0);
        nodes.push(Node::stop(s as u32 + 1, demand, service, earliest, latest).at(x, y));
    }
    let mut id = 100;
    for &(x, y) in &stations {
        for _ in 0..spec.copies {
            nodes.push(Node::new(id, NodeKind::Charger, 0.0, p.bell_latest).at(x, y));
            id += 1;
        }
    }
    nodes.push(Node::new(999, NodeKind::School, p.bell_earliest, p.bell_latest).at(school.0, school.1));

    let catalog = default_bus_catalog();
    let bus_types = spec
        .bus_types
        .iter()
        .map(|&row| {
            let mut bus = catalog[row].clone();
            bus.count = spec.buses_per_type.unwrap_or(spec.stops as u32);
            bus
        })
        .collect::<Vec<_>>();
    let fleet = if bus_types.len() > 1 {
        FleetMode::Heterogeneous
    } else {
        FleetMode::Homogeneous
    };
    Instance::euclidean(nodes, bus_types, spec.params.clone(), fleet)
        .unwrap_or_else(|e| panic!("{}", format!("generated instance is malformed: {e}")))
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Lloyd iterations seeded with evenly spaced stops.
fn centroids(points: &[(f64, f64)], k: usize) -> Vec<(f64, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let mut centers: Vec<(f64, f64)> = (0..k).map(|c| points[c * points.len() / k]).collect();
    for _ in 0..10 {
        let mut sums = alloc::vec![(0.0, 0.0, 0usize); k];
        for &(x, y) in points {
            let nearest = (0..k)
                .min_by(|&a, &b| {
                    let da = libm::hypot(x - centers[a].0, y - centers[a].1);
                    let db = libm::hypot(x - centers[b].0, y - centers[b].1);
                    da.total_cmp(&db)
                })
                .expect("k > 0");
            let s = &mut sums[nearest];
            s.0 += x;
            s.1 += y;
            s.2 += 1;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let spec = GenSpec {
            stops: 5,
            ..GenSpec::default()
        };
        assert_eq!(gen_instance(&spec, 7), gen_instance(&spec, 7));
        assert_ne!(gen_instance(&spec, 7), gen_instance(&spec, 8));
        for seed in 0..50 {
            let report = gen_instance(&spec, seed).validate();
            assert!(report.is_valid(), "seed {seed}: {:?}", report.issues);
        }
        let lone = GenSpec {
            stops: 1,
            stations: 1,
            ..GenSpec::default()
        };
        assert!(gen_instance(&lone, 0).validate().is_valid());
    }

    #[test]
    fn every_stop_can_be_served_alone_on_time() {
        let inst = gen_instance(&GenSpec::default(), 3);
        let (d, e) = (inst.depot(), inst.school());
        for &s in inst.stops() {
            let node = inst.node(s);
            let arrive = (inst.node(d).earliest + inst.time(d, s)).max(node.earliest);
            assert!(arrive <= node.latest + 1e-9);
            assert!(arrive + node.service_time + inst.time(s, e) <= inst.params.bell_latest + 1e-9);
        }
    }

    #[test]
    fn stations_have_colocated_copies() {
        let spec = GenSpec {
            stations: 2,
            copies: 3,
            ..GenSpec::default()
        };
        let inst = gen_instance(&spec, 1);
        let c = inst.chargers();
        assert_eq!(c.len(), 6);
        assert_eq!(inst.dist(c[0], c[2]), 0.0);
        assert_eq!(inst.dist(c[3], c[5]), 0.0);
        assert_eq!(inst.fleet_mode, FleetMode::Homogeneous);
    }
}
