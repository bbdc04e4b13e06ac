//! Static arc elimination.
//!
//! The base arc set is every `(i, j)` with `i` the depot, a stop or a charger,
//! `j` a stop, a charger or the school, and `i != j`. Six rules then remove
//! arcs per bus type:
//!
//! 1. `r^k d_ij > B^k`: the arc alone drains more than a full battery.
//! 2. `T^e_i + s_i + t_ij > T^l_j`: leaving `i` at its earliest still misses `j`.
//! 3. depot to charger: buses leave the depot full.
//! 4. charger to school: a charge is only useful ahead of further stops.
//! 5. charger to charger.
//! 6. depot to school (plus the structural bans on self loops, arcs out of
//!    the school and arcs into the depot, which the base set already omits).

use alloc::vec;
use alloc::vec::Vec;

use crate::instance::{Instance, NodeKind};

pub const RULE_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    BatteryRange,
    TimeWindow,
    DepotToCharger,
    ChargerToSchool,
    ChargerToCharger,
    DepotToSchool,
}

impl Rule {
    pub const ALL: [Rule; RULE_COUNT] = [
        Rule::BatteryRange,
        Rule::TimeWindow,
        Rule::DepotToCharger,
        Rule::ChargerToSchool,
        Rule::ChargerToCharger,
        Rule::DepotToSchool,
    ];

    /// 1-based rule number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    fn removes(self, inst: &Instance, k: usize, i: usize, j: usize) -> bool {
        let (ki, kj) = (inst.kind(i), inst.kind(j));
        match self {
            Rule::BatteryRange => {
                let bus = &inst.bus_types[k];
                bus.energy_for(inst.dist(i, j)) > bus.battery_energy()
            }
            Rule::TimeWindow => {
                let from = inst.node(i);
                from.earliest + from.service_time + inst.time(i, j) > inst.node(j).latest
            }
            Rule::DepotToCharger => ki == NodeKind::Depot && kj == NodeKind::Charger,
            Rule::ChargerToSchool => ki == NodeKind::Charger && kj == NodeKind::School,
            Rule::ChargerToCharger => ki == NodeKind::Charger && kj == NodeKind::Charger,
            Rule::DepotToSchool => ki == NodeKind::Depot && kj == NodeKind::School,
        }
    }
}

/// Per bus type allowed-arc matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcMask {
    n: usize,
    types: usize,
    allowed: Vec<bool>,
    removed: Vec<[usize; RULE_COUNT]>,
}

impl ArcMask {
    /// The base arc set for every bus type, with nothing eliminated.
    pub fn unrestricted(inst: &Instance) -> ArcMask {
        let n = inst.len();
        let types = inst.bus_types.len();
        let mut allowed = vec![false; types * n * n];
        for k in 0..types {
            for i in 0..n {
                for j in 0..n {
                    allowed[(k * n + i) * n + j] = in_base(inst, i, j);
                }
            }
        }
        ArcMask {
            n,
            types,
            allowed,
            removed: vec![[0; RULE_COUNT]; types],
        }
    }

    #[inline]
    pub fn allowed(&self, k: usize, i: usize, j: usize) -> bool {
        self.allowed[(k * self.n + i) * self.n + j]
    }

    /// Removes one arc; used to build test masks.
    pub fn forbid(&mut self, k: usize, i: usize, j: usize) {
        self.allowed[(k * self.n + i) * self.n + j] = false;
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn type_count(&self) -> usize {
        self.types
    }

    pub fn allowed_count(&self, k: usize) -> usize {
        let start = k * self.n * self.n;
        self.allowed[start..start + self.n * self.n]
            .iter()
            .filter(|&&a| a)
            .count()
    }

    /// Arcs removed by each rule for type `k`, indexed by `Rule as usize`.
    /// An arc is attributed to the first rule that removes it.
    pub fn removed_by_rule(&self, k: usize) -> [usize; RULE_COUNT] {
        self.removed[k]
    }

    pub fn successors(&self, k: usize, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.allowed(k, i, j))
    }

    pub fn predecessors(&self, k: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.allowed(k, i, j))
    }
}

fn in_base(inst: &Instance, i: usize, j: usize) -> bool {
    i != j && inst.kind(i) != NodeKind::School && inst.kind(j) != NodeKind::Depot
}

/// Applies all six rules to the base arc set.
pub fn eliminate_arcs(inst: &Instance) -> ArcMask {
    refine(inst, &ArcMask::unrestricted(inst))
}

/// Applies only the listed rules to the base arc set.
pub fn eliminate_with(inst: &Instance, rules: &[Rule]) -> ArcMask {
    refine_with(inst, &ArcMask::unrestricted(inst), rules)
}

/// Applies all six rules on top of an existing mask. Rules only remove arcs.
pub fn refine(inst: &Instance, mask: &ArcMask) -> ArcMask {
    refine_with(inst, mask, &Rule::ALL)
}

fn refine_with(inst: &Instance, mask: &ArcMask, rules: &[Rule]) -> ArcMask {
    let mut out = mask.clone();
    let n = out.n;
    for k in 0..out.types {
        let mut counts = [0usize; RULE_COUNT];
        for i in 0..n {
            for j in 0..n {
                let idx = (k * n + i) * n + j;
                if !out.allowed[idx] {
                    continue;
                }
                if let Some(rule) = Rule::ALL
                    .iter()
                    .find(|r| rules.contains(r) && r.removes(inst, k, i, j))
                {
                    out.allowed[idx] = false;
                    counts[*rule as usize] += 1;
                }
            }
        }
        out.removed[k] = counts;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeConnectivity {
    pub bus_type: usize,
    /// Stops not on any allowed depot-to-school path, as node indices.
    pub stranded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub per_type: Vec<TypeConnectivity>,
}

impl ConnectivityReport {
    pub fn is_clean(&self) -> bool {
        self.per_type.iter().all(|t| t.stranded.is_empty())
    }

    /// Stops that no type in `types` can serve.
    pub fn stranded_for_all(&self, types: core::ops::Range<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        let mut first = true;
        for t in self.per_type.iter().filter(|t| types.contains(&t.bus_type)) {
            if first {
                out = t.stranded.clone();
                first = false;
            } else {
                out.retain(|s| t.stranded.contains(s));
            }
        }
        out
    }
}

/// For every bus type, lists stops that cannot be reached from the depot or
/// cannot reach the school through allowed arcs.
pub fn connectivity_report(inst: &Instance, mask: &ArcMask) -> ConnectivityReport {
    let per_type = (0..mask.types)
        .map(|k| {
            let forward = reach(mask, inst.depot(), |m, u| m.successors(k, u).collect());
            let backward = reach(mask, inst.school(), |m, u| m.predecessors(k, u).collect());
            let stranded = inst
                .stops()
                .iter()
                .copied()
                .filter(|&s| !(forward[s] && backward[s]))
                .collect();
            TypeConnectivity {
                bus_type: k,
                stranded,
            }
        })
        .collect();
    ConnectivityReport { per_type }
}

fn reach(mask: &ArcMask, start: usize, next: impl Fn(&ArcMask, usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; mask.n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in next(mask, u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}
