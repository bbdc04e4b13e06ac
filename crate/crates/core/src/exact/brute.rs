//! Exhaustive reference solver for tiny instances.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{SolveError, SolveResult};
use crate::eval::{
    check_arcs, check_solution, min_charge_amounts, objective, simulate_route, ChargePolicy, ObjectiveForm, Route,
    Solution,
};
use crate::instance::Instance;
use crate::preprocess::ArcMask;

pub const BRUTE_FORCE_MAX_STOPS: usize = 5;
pub const BRUTE_FORCE_MAX_CHARGERS: usize = 2;

#[derive(Clone)]
struct Candidate {
    route: Route,
    cost: f64,
    chargers: Vec<usize>,
}

/// Enumerates every partition of the stops into routes, every visiting
/// order, bus type and charger insertion, evaluates each complete solution
/// with the evaluator and returns the cheapest (ties broken by the smaller
/// canonical solution).
pub fn brute_force(inst: &Instance, mask: &ArcMask, policy: ChargePolicy) -> Result<SolveResult, SolveError> {
    let stops = inst.stops().to_vec();
    let chargers = inst.chargers().to_vec();
    if stops.len() > BRUTE_FORCE_MAX_STOPS || chargers.len() > BRUTE_FORCE_MAX_CHARGERS {
        return Err(SolveError::TooLarge(format!(
            "brute force takes at most {BRUTE_FORCE_MAX_STOPS} stops and {BRUTE_FORCE_MAX_CHARGERS} charger copies, got {} and {}",
            stops.len(),
            chargers.len()
        )));
    }
    let mut route_cache: BTreeMap<(usize, Vec<usize>), Option<(Route, f64)>> = BTreeMap::new();
    let mut evaluated = 0u64;
    let mut best: Option<(f64, Solution)> = None;

    for blocks in set_partitions(&stops) {
        // Per block: the cheapest route for each (type, charger set).
        let mut options: Vec<Vec<Candidate>> = Vec::new();
        for block in &blocks {
            let mut by_key: BTreeMap<(usize, Vec<usize>), Candidate> = BTreeMap::new();
            for subset in subsets(&chargers) {
                let mut items = block.clone();
                items.extend(subset.iter().copied());
                for perm in permutations(&items) {
                    for k in inst.active_types() {
                        let mut visits = vec![inst.depot()];
                        visits.extend(perm.iter().copied());
                        visits.push(inst.school());
                        evaluated += 1;
                        let entry = route_cache
                            .entry((k, visits.clone()))
                            .or_insert_with(|| evaluate(inst, mask, policy, k, visits));
                        let Some((route, cost)) = entry.clone() else { continue };
                        let mut used = subset.clone();
                        used.sort_unstable();
                        let key = (k, used.clone());
                        let better = match by_key.get(&key) {
                            None => true,
                            Some(c) => cost < c.cost || (cost == c.cost && route < c.route),
                        };
                        if better {
                            by_key.insert(
                                key,
                                Candidate {
                                    route,
                                    cost,
                                    chargers: used,
                                },
                            );
                        }
                    }
                }
            }
            options.push(by_key.into_values().collect());
        }
        let mut picked = Vec::new();
        combine(inst, mask, policy, &options, 0, 0.0, &mut picked, &mut best);
    }
    let (_, solution) = best.ok_or(SolveError::Infeasible {
        stop: None,
        reason: alloc::string::String::from("no partition of the stops into feasible routes"),
    })?;
    let cost = objective(inst, &solution, ObjectiveForm::Linearized, policy).expect("feasible");
    Ok(SolveResult {
        solution,
        objective: cost,
        proven_optimal: true,
        nodes_explored: evaluated,
        lower_bound: cost.total,
        wall_time: 0.0,
        incumbent_trace: Vec::new(),
    })
}

fn evaluate(inst: &Instance, mask: &ArcMask, policy: ChargePolicy, k: usize, visits: Vec<usize>) -> Option<(Route, f64)> {
    if visits.windows(2).any(|w| !mask.allowed(k, w[0], w[1])) {
        return None;
    }
    let mut route = Route::new(k, visits);
    match policy {
        ChargePolicy::Partial => route.charges = min_charge_amounts(inst, &route).ok()?,
        ChargePolicy::Full => {
            let trace = simulate_route(inst, &route, ChargePolicy::Full).ok()?;
            route.charges = trace.charges(inst).collect();
        }
    }
    let sol = Solution::new(vec![route.clone()]);
    let cost = objective(inst, &sol, ObjectiveForm::Linearized, policy).ok()?;
    Some((route, cost.total))
}

#[allow(clippy::too_many_arguments)]
fn combine(
    inst: &Instance,
    mask: &ArcMask,
    policy: ChargePolicy,
    options: &[Vec<Candidate>],
    at: usize,
    cost: f64,
    picked: &mut Vec<Candidate>,
    best: &mut Option<(f64, Solution)>,
) {
    if let Some((b, _)) = best {
        if cost > *b + 1e-9 {
            return;
        }
    }
    if at == options.len() {
        let sol = Solution::new(picked.iter().map(|c| c.route.clone()).collect()).canonical();
        if !check_solution(inst, &sol, policy).is_empty() || !check_arcs(inst, &sol, mask).is_empty() {
            return;
        }
        let total = objective(inst, &sol, ObjectiveForm::Linearized, policy)
            .expect("checked")
            .total;
        let replace = match best {
            None => true,
            Some((b, s)) => total < *b - 1e-9 || (total <= *b + 1e-9 && sol < *s),
        };
        if replace {
            *best = Some((total, sol));
        }
        return;
    }
    for cand in &options[at] {
        if picked.iter().any(|p| p.chargers.iter().any(|c| cand.chargers.contains(c))) {
            continue;
        }
        let same_type = picked.iter().filter(|p| p.route.bus_type == cand.route.bus_type).count();
        if same_type as u32 >= inst.bus_types[cand.route.bus_type].count {
            continue;
        }
        picked.push(cand.clone());
        combine(inst, mask, policy, options, at + 1, cost + cand.cost, picked, best);
        picked.pop();
    }
}

/// All partitions of `items` into nonempty blocks, via restricted growth
/// strings.
fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let n = items.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut labels = vec![0usize; n];
    loop {
        let blocks = labels.iter().copied().max().unwrap_or(0) + 1;
        let mut parts = vec![Vec::new(); blocks];
        for (i, &l) in labels.iter().enumerate() {
            parts[l].push(items[i]);
        }
        out.push(parts);
        // Next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let prefix_max = labels[..i].iter().copied().max().unwrap_or(0);
            if labels[i] <= prefix_max {
                labels[i] += 1;
                for l in labels.iter_mut().skip(i + 1) {
                    *l = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << items.len())
        .map(|m| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| m & (1 << i) != 0)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect()
}

/// Heap's algorithm.
fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut a = items.to_vec();
    let n = a.len();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..=5)
            .map(|n| set_partitions(&(0..n).collect::<Vec<_>>()).len())
            .collect();
        assert_eq!(counts, [1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(&[]).len(), 1);
        assert_eq!(permutations(&[1, 2, 3, 4]).len(), 24);
        let mut p = permutations(&[1, 2, 3]);
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 6);
    }
}
