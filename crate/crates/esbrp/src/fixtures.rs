//! Bundled instances.

use esbrp_core::eval::Route;
use esbrp_core::instance::Instance;

use crate::io::load_instance;

pub const FOURTEEN_NODE: &str = include_str!("../fixtures/fourteen_node.toml");
pub const ONE_STOP: &str = include_str!("../fixtures/one_stop.toml");
pub const FULL_INFEASIBLE: &str = include_str!("../fixtures/full_infeasible.toml");
pub const SALT_LAKE_CITY: &str = include_str!("../fixtures/salt_lake_city.toml");

/// Every bundled instance by name, in a fixed order.
pub const ALL: [(&str, &str); 4] = [
    ("fourteen-node", FOURTEEN_NODE),
    ("one-stop", ONE_STOP),
    ("full-infeasible", FULL_INFEASIBLE),
    ("salt-lake-city", SALT_LAKE_CITY),
];

pub fn load(name: &str) -> Option<Instance> {
    ALL.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| load_instance(text).expect("bundled fixtures are valid"))
}

pub fn fourteen_node() -> Instance {
    load_instance(FOURTEEN_NODE).expect("bundled fixtures are valid")
}

/// The three reference routes of the fourteen-node network as node-id
/// sequences, type I bus, no charges set.
pub const FOURTEEN_NODE_ROUTES: [&[u32]; 3] = [&[0, 7, 9, 4, 12, 3, 13], &[0, 6, 5, 8, 13], &[0, 1, 2, 10, 13]];

/// State of charge on arrival at each visit of the reference routes, kWh.
pub const FOURTEEN_NODE_SOC: [&[f64]; 3] = [
    &[75.0, 58.0, 28.0, 23.0, 2.0, 46.0, 0.0],
    &[75.0, 60.0, 30.0, 20.0, 0.0],
    &[75.0, 64.0, 53.0, 41.0, 41.0],
];

/// The reference routes translated to node indices of `inst`.
pub fn fourteen_node_routes(inst: &Instance) -> Vec<Route> {
    FOURTEEN_NODE_ROUTES
        .iter()
        .map(|ids| {
            Route::new(
                0,
                ids.iter()
                    .map(|&id| inst.index_of(id).expect("reference node exists"))
                    .collect(),
            )
        })
        .collect()
}
