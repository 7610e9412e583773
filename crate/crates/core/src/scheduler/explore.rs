//! Exhaustive exploration of tiny instances over all schedules.
//!
//! From every reachable configuration we branch on each singleton activation
//! and on the all-live activation. The search is breadth-first, so the first
//! path found to any state is a shortest one. Configurations are identified
//! by their protocol state only, which makes the reachable graph finite for
//! the deterministic models.
//!
//! A run can fail in two ways: it terminates in a configuration that breaks
//! the gathering predicate, or it runs forever under a fair schedule. The
//! latter shows up as a strongly connected component in which every live
//! agent has at least one step that stays inside the component.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::rngs::mock::StepRng;
use serde::Serialize;
use thiserror::Error;

use crate::algo_distinct::MarkingRule;
use crate::ring_model::{
    apply_atomic_step, build_initial_config, Configuration, InstanceSpec, InvalidInstance, Model, ProtocolKey,
    StepContext,
};
use crate::verifier::{check_partial_gathering, VerdictKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExploreError {
    #[error(transparent)]
    Instance(#[from] InvalidInstance),
    #[error("exhaustive exploration needs a deterministic model; the random model is not supported")]
    Unsupported,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapExceeded {
    /// Some configuration deeper than the decision cap was left unexpanded.
    Depth,
    /// The visited-state cap was hit.
    States,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreCaps {
    /// Longest schedule prefix, in decisions.
    pub branch_cap: usize,
    pub state_cap: usize,
}

impl Default for ExploreCaps {
    fn default() -> Self {
        ExploreCaps { branch_cap: 10_000, state_cap: 2_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    /// Terminal configuration that breaks the gathering predicate.
    BadOutcome,
    /// A step broke a model rule.
    ModelViolation,
    /// A fair schedule can cycle forever without terminating.
    Livelock,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub kind: FindingKind,
    pub description: String,
    /// Activation sets from the initial configuration, shortest first found.
    pub schedule: Vec<Vec<usize>>,
    /// For livelocks, the number of configurations in the cycling component.
    pub component_size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExploreReport {
    pub states: usize,
    pub edges: usize,
    /// Distinct terminal outcomes as (verdict, configuration digest).
    pub outcomes: BTreeSet<(VerdictKind, String)>,
    pub violations: Vec<Counterexample>,
    pub livelocks: Vec<Counterexample>,
    pub cap_exceeded: Option<CapExceeded>,
}

impl ExploreReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.livelocks.is_empty()
    }
}

struct Node {
    config: Configuration,
    parent: Option<(usize, Vec<usize>)>,
    depth: usize,
    /// (target, agents activated); `None` until expanded.
    edges: Option<Vec<(usize, Vec<usize>)>>,
}

fn path_to(nodes: &[Node], mut i: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    while let Some((p, set)) = &nodes[i].parent {
        out.push(set.clone());
        i = *p;
    }
    out.reverse();
    out
}

/// Explores every schedule built from singleton and all-live activations.
pub fn explore_bounded(
    spec: &InstanceSpec,
    caps: ExploreCaps,
    marking: MarkingRule,
) -> Result<ExploreReport, ExploreError> {
    if spec.model == Model::Random {
        return Err(ExploreError::Unsupported);
    }
    let init = build_initial_config(spec)?;
    let ctx = StepContext::new(spec, marking);
    let mut rng = StepRng::new(0, 0);
    let mut report = ExploreReport::default();
    let mut index: HashMap<ProtocolKey, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut queue = VecDeque::new();

    index.insert(init.protocol_key(), 0);
    nodes.push(Node { config: init, parent: None, depth: 0, edges: None });
    queue.push_back(0usize);

    while let Some(i) = queue.pop_front() {
        let config = &nodes[i].config;
        let live = config.live_agents();
        if live.is_empty() {
            let v = check_partial_gathering(config, spec.g);
            report.outcomes.insert((v.kind, config.digest()));
            if !matches!(v.kind, VerdictKind::Gathered | VerdictKind::Unsolvable) {
                report.violations.push(Counterexample {
                    kind: FindingKind::BadOutcome,
                    description: v.details.join("; "),
                    schedule: path_to(&nodes, i),
                    component_size: 0,
                });
            }
            nodes[i].edges = Some(Vec::new());
            continue;
        }
        if nodes[i].depth >= caps.branch_cap {
            report.cap_exceeded.get_or_insert(CapExceeded::Depth);
            continue;
        }
        let mut sets: Vec<Vec<usize>> = live.iter().map(|&a| vec![a]).collect();
        if live.len() > 1 {
            sets.push(live.clone());
        }
        let depth = nodes[i].depth;
        let mut edges = Vec::with_capacity(sets.len());
        for set in sets {
            let mut next = nodes[i].config.clone();
            let mut broken = None;
            for &a in &set {
                if let Err(v) = apply_atomic_step(&mut next, a, &ctx, &mut rng, None) {
                    broken = Some(v);
                    break;
                }
            }
            if let Some(v) = broken {
                let mut schedule = path_to(&nodes, i);
                schedule.push(set);
                report.violations.push(Counterexample {
                    kind: FindingKind::ModelViolation,
                    description: v.to_string(),
                    schedule,
                    component_size: 0,
                });
                continue;
            }
            let key = next.protocol_key();
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= caps.state_cap {
                        report.cap_exceeded = Some(CapExceeded::States);
                        continue;
                    }
                    let j = nodes.len();
                    index.insert(key, j);
                    nodes.push(Node { config: next, parent: Some((i, set.clone())), depth: depth + 1, edges: None });
                    queue.push_back(j);
                    j
                }
            };
            edges.push((j, set));
        }
        report.edges += edges.len();
        nodes[i].edges = Some(edges);
    }
    report.states = nodes.len();
    find_livelocks(&nodes, &mut report);
    Ok(report)
}

/// Tarjan's algorithm, iterative; reports fair non-terminating components.
fn find_livelocks(nodes: &[Node], report: &mut ExploreReport) {
    let n = nodes.len();
    let succ = |v: usize| -> &[(usize, Vec<usize>)] { nodes[v].edges.as_deref().unwrap_or(&[]) };
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if idx[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        idx[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut e)) = call.last_mut() {
            if let Some((w, _)) = succ(v).get(*e) {
                let w = *w;
                *e += 1;
                if idx[w] == usize::MAX {
                    idx[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == idx[v] {
                    let mut members = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = comps.len();
                        members.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(members);
                }
            }
        }
    }

    for (c, members) in comps.iter().enumerate() {
        let first = members[0];
        let live = nodes[first].config.live_agents();
        // Unexpanded states have no edges; they never form a cycle on their own.
        if live.is_empty() || members.iter().any(|&v| nodes[v].edges.is_none()) {
            continue;
        }
        let mut covered = vec![false; nodes[first].config.k()];
        let mut has_cycle = false;
        for &v in members {
            for (w, set) in succ(v) {
                if comp[*w] == c {
                    has_cycle = true;
                    for &a in set {
                        covered[a] = true;
                    }
                }
            }
        }
        if has_cycle && live.iter().all(|&a| covered[a]) {
            let entry = *members.iter().min().expect("non-empty component");
            report.livelocks.push(Counterexample {
                kind: FindingKind::Livelock,
                description: format!("agents {live:?} can cycle forever through {} configurations", members.len()),
                schedule: path_to(nodes, entry),
                component_size: members.len(),
            });
        }
    }
}
