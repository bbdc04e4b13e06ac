use esbrp::fixtures::{self, FOURTEEN_NODE_SOC};
use esbrp::solve::{run, Solver};
use esbrp_core::energy::Energy;
use esbrp_core::eval::{check_solution, min_charge_amounts, simulate_route, ChargePolicy, Solution};
use esbrp_core::instance::NodeKind;

#[test]
fn every_fixture_loads_and_validates() {
    for (name, _) in fixtures::ALL {
        let inst = fixtures::load(name).unwrap();
        assert!(inst.validate().is_valid(), "{name}");
        assert!(inst.is_metric(), "{name}");
    }
    assert!(fixtures::load("nope").is_none());
}

/// Floyd-Warshall over the documented road links.
#[test]
fn fourteen_node_matrix_is_the_closure_of_its_links() {
    let links: [(u32, u32, f64); 18] = [
        (0, 7, 17.0),
        (7, 9, 30.0),
        (9, 4, 5.0),
        (4, 12, 21.0),
        (12, 3, 12.0),
        (3, 13, 46.0),
        (0, 6, 15.0),
        (6, 5, 30.0),
        (5, 8, 10.0),
        (8, 13, 20.0),
        (0, 1, 11.0),
        (1, 2, 11.0),
        (2, 10, 12.0),
        (10, 13, 0.5),
        (9, 11, 10.0),
        (11, 4, 10.0),
        (5, 13, 20.0),
        (0, 8, 40.0),
    ];
    let n = 14;
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (a, b, w) in links {
        d[a as usize][b as usize] = w;
        d[b as usize][a as usize] = w;
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    let inst = fixtures::fourteen_node();
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            let (i, j) = (inst.index_of(a).unwrap(), inst.index_of(b).unwrap());
            assert_eq!(inst.dist(i, j), d[a as usize][b as usize], "d({a},{b})");
            assert_eq!(inst.time(i, j), inst.dist(i, j));
        }
    }
    // reference arcs survive the closure unchanged
    for (a, b, w) in &links[..14] {
        assert_eq!(inst.dist(inst.index_of(*a).unwrap(), inst.index_of(*b).unwrap()), *w);
    }
}

#[test]
fn reference_routes_follow_the_source_trace() {
    let inst = fixtures::fourteen_node();
    let mut routes = fixtures::fourteen_node_routes(&inst);
    let charges = min_charge_amounts(&inst, &routes[0]).unwrap();
    let ch2 = inst.index_of(12).unwrap();
    assert_eq!(charges.get(&ch2), Some(&Energy::from_kwh(56.0)));
    routes[0].charges = charges;
    for (route, soc) in routes.iter().zip(FOURTEEN_NODE_SOC) {
        let trace = simulate_route(&inst, route, ChargePolicy::Partial).unwrap();
        for (v, want) in trace.visits.iter().zip(soc) {
            assert!((v.soc_in.kwh() - want).abs() <= 1.0, "{} vs {want}", v.soc_in.kwh());
            let node = inst.node(v.node);
            assert!(v.arrival >= node.earliest - 1e-9 && v.arrival <= node.latest + 1e-9);
        }
    }
    let sol = Solution::new(routes);
    assert!(check_solution(&inst, &sol, ChargePolicy::Partial).is_empty());
    assert_eq!(sol.routes.iter().flat_map(|r| r.stops(&inst)).map(|s| inst.node(s).demand).sum::<i64>(), 155);
}

#[test]
fn reference_routes_are_optimal_for_type_one() {
    let inst = fixtures::fourteen_node();
    let res = run(&inst, ChargePolicy::Partial, &Solver::Exact { time_limit: None }).unwrap();
    assert!(res.proven_optimal);
    let mut got: Vec<Vec<u32>> = res
        .solution
        .routes
        .iter()
        .map(|r| r.visits.iter().map(|&i| inst.node(i).id).collect())
        .collect();
    got.sort();
    let mut want: Vec<Vec<u32>> = fixtures::FOURTEEN_NODE_ROUTES.iter().map(|r| r.to_vec()).collect();
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn full_charging_fixture_needs_partial_charging() {
    let inst = fixtures::load("full-infeasible").unwrap();
    let solver = Solver::Exact { time_limit: None };
    let partial = run(&inst, ChargePolicy::Partial, &solver).unwrap();
    assert_eq!(partial.solution.routes.len(), 1);
    assert!(partial.solution.routes[0].visits.iter().any(|&v| inst.kind(v) == NodeKind::Charger));
    let full = run(&inst, ChargePolicy::Full, &solver).unwrap_err();
    assert!(full.is_infeasible(), "{full}");
}
