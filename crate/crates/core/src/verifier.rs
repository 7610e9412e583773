//! Success predicates and move-bound checks over finished runs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ring_model::{forward_distance, Configuration, Exit, Model, Role};
use crate::scheduler::{ExecutionTrace, RunOutcome, RunResult, TraceError};
use crate::workload::ceil_log2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictKind {
    Gathered,
    Unsolvable,
    Violation,
    Timeout,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Gathered => "Gathered",
            VerdictKind::Unsolvable => "Unsolvable",
            VerdictKind::Violation => "Violation",
            VerdictKind::Timeout => "Timeout",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub details: Vec<String>,
    /// Final-agent counts per occupied node, largest first.
    pub group_sizes: Vec<usize>,
}

fn group_sizes(config: &Configuration) -> Vec<usize> {
    let mut per_node = vec![0usize; config.n()];
    for a in config.agents.iter().filter(|a| a.role == Role::Final) {
        per_node[a.position] += 1;
    }
    let mut sizes: Vec<usize> = per_node.into_iter().filter(|&c| c > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Every agent final and every occupied node holding at least `g` of them.
pub fn check_partial_gathering(config: &Configuration, g: usize) -> Verdict {
    let group_sizes = group_sizes(config);
    let mut details = Vec::new();
    for (i, a) in config.agents.iter().enumerate() {
        if a.role != Role::Final {
            details.push(format!("agent {i} is {} at node {}", a.role, a.position));
        }
    }
    if !details.is_empty() {
        return Verdict { kind: VerdictKind::Violation, details, group_sizes };
    }
    if config.spec.model == Model::Anon && config.agents.iter().all(|a| a.regs.exit() == Some(Exit::Unsolvable)) {
        details.push("placement period is below g".into());
        return Verdict { kind: VerdictKind::Unsolvable, details, group_sizes };
    }
    let small: Vec<_> = group_sizes.iter().filter(|&&s| s < g).collect();
    if small.is_empty() {
        Verdict { kind: VerdictKind::Gathered, details, group_sizes }
    } else {
        details.push(format!("groups smaller than g={g}: {small:?}"));
        Verdict { kind: VerdictKind::Violation, details, group_sizes }
    }
}

/// Verdict of a run; an exhausted step budget becomes `Timeout`.
pub fn run_verdict(result: &RunResult) -> Verdict {
    match result.outcome {
        RunOutcome::Terminated => check_partial_gathering(&result.final_config, result.final_config.spec.g),
        RunOutcome::StepLimit => Verdict {
            kind: VerdictKind::Timeout,
            details: vec![format!("step limit reached after {} steps", result.steps())],
            group_sizes: group_sizes(&result.final_config),
        },
        RunOutcome::Violation => Verdict {
            kind: VerdictKind::Violation,
            details: result.violation.iter().map(|v| v.to_string()).collect(),
            group_sizes: group_sizes(&result.final_config),
        },
    }
}

/// At the end of the election: at least one leader, and at least `g - 1`
/// inactive agents between each leader and the next one going forward.
/// Agents are located where they left the election.
pub fn check_leader_invariant(snapshot: &Configuration, g: usize) -> bool {
    let n = snapshot.n();
    let outcomes: Vec<_> = snapshot.agents.iter().filter_map(|a| a.election).collect();
    let mut leaders: Vec<usize> = outcomes.iter().filter(|e| e.role == Role::Leader).map(|e| e.node).collect();
    let inactive: Vec<usize> = outcomes.iter().filter(|e| e.role == Role::Inactive).map(|e| e.node).collect();
    if leaders.is_empty() {
        return false;
    }
    leaders.sort_unstable();
    (0..leaders.len()).all(|i| {
        let from = leaders[i];
        let span = if leaders.len() == 1 { n } else { forward_distance(n, from, leaders[(i + 1) % leaders.len()]) };
        let between = inactive
            .iter()
            .filter(|&&v| {
                let d = forward_distance(n, from, v);
                d > 0 && d < span
            })
            .count();
        between + 1 >= g
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveBreakdown {
    pub active: u64,
    pub leader: u64,
    pub inactive: u64,
    pub moving: u64,
    pub semi_leader: u64,
    pub anon: u64,
    /// Active moves per election phase; index 0 is phase 1.
    pub active_by_phase: Vec<u64>,
    pub total: u64,
}

impl MoveBreakdown {
    /// Counts one move made in `role` (during `phase`, if active).
    pub fn record(&mut self, model: Model, role: Role, phase: Option<u32>) {
        self.total += 1;
        match (model, role) {
            (Model::Anon, _) => self.anon += 1,
            (_, Role::Active) => {
                self.active += 1;
                if let Some(p) = phase {
                    let idx = p.saturating_sub(1) as usize;
                    if self.active_by_phase.len() <= idx {
                        self.active_by_phase.resize(idx + 1, 0);
                    }
                    self.active_by_phase[idx] += 1;
                }
            }
            (_, Role::Leader) => self.leader += 1,
            (_, Role::Inactive) => self.inactive += 1,
            (_, Role::Moving) => self.moving += 1,
            (_, Role::SemiLeader) => self.semi_leader += 1,
            (_, Role::Final) => {}
        }
    }

    /// Totals from the per-agent counters of a configuration.
    pub fn from_config(config: &Configuration) -> Self {
        let mut b = MoveBreakdown::default();
        for a in &config.agents {
            let c = &a.moves_by_role;
            b.total += a.moves_made;
            if config.spec.model == Model::Anon {
                b.anon += c.total();
                continue;
            }
            b.active += c.get(Role::Active);
            b.leader += c.get(Role::Leader);
            b.inactive += c.get(Role::Inactive);
            b.moving += c.get(Role::Moving);
            b.semi_leader += c.get(Role::SemiLeader);
            if b.active_by_phase.len() < a.active_moves_by_phase.len() {
                b.active_by_phase.resize(a.active_moves_by_phase.len(), 0);
            }
            for (i, m) in a.active_moves_by_phase.iter().enumerate() {
                b.active_by_phase[i] += m;
            }
        }
        b
    }

    pub fn parts_sum(&self) -> u64 {
        self.active + self.leader + self.inactive + self.moving + self.semi_leader + self.anon
    }
}

/// Attributes each move event of a complete trace to the mover's role.
pub fn account_moves(trace: &ExecutionTrace) -> Result<MoveBreakdown, TraceError> {
    trace.replay().map(|s| s.breakdown)
}

/// Move-bound failures of a terminated run, empty when all bounds hold.
/// `circulations` is `Some` exactly when the run produced a semi-leader.
pub fn bound_failures(
    b: &MoveBreakdown,
    model: Model,
    n: usize,
    k: usize,
    g: usize,
    circulations: Option<u64>,
) -> Vec<String> {
    let (n, k, g) = (n as u64, k as u64, g as u64);
    let log_g = ceil_log2(g) as u64;
    let mut out = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            out.push(what);
        }
    };
    match (model, circulations) {
        (Model::Anon, _) => {
            let cap = k * (2 * n - 1);
            check(b.total <= cap, format!("total {} > k(2n-1) = {cap}", b.total));
        }
        (Model::Random, Some(c)) => {
            let cap = 2 * n * log_g + (2 * g + 1) * n + c * n;
            check(b.total <= cap, format!("total {} > 2n*log g + (2g+1)n + {c}n = {cap}", b.total));
        }
        _ => {
            check(b.active <= 2 * n * log_g, format!("active {} > 2n*log g = {}", b.active, 2 * n * log_g));
            check(b.leader == n, format!("leader {} != n = {n}", b.leader));
            check(b.moving <= 2 * g * n, format!("moving {} > 2gn = {}", b.moving, 2 * g * n));
        }
    }
    out
}

pub fn check_bounds(b: &MoveBreakdown, model: Model, n: usize, k: usize, g: usize, circulations: Option<u64>) -> bool {
    bound_failures(b, model, n, k, g, circulations).is_empty()
}

/// Bound failures for a run, taking the semi-leader shape from the run itself.
pub fn run_bound_failures(result: &RunResult) -> Vec<String> {
    let spec = &result.final_config.spec;
    let circ = (spec.model == Model::Random && result.semi_leaders() > 0).then(|| result.circulations());
    bound_failures(&result.breakdown(), spec.model, spec.n, spec.k(), spec.g, circ)
}

/// `ceil(n (g - 1) / 2)`: total moves any algorithm needs on some placement.
pub fn lower_bound_floor(n: usize, g: usize) -> u64 {
    ((n as u64) * (g.saturating_sub(1) as u64)).div_ceil(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_model::{build_initial_config, AgentSpec, ElectionOutcome, InstanceSpec};
    use crate::scheduler::StrategyKind;

    fn finished(n: usize, nodes: &[usize], g: usize) -> Configuration {
        let spec = InstanceSpec {
            n,
            model: Model::Distinct,
            agents: (0..nodes.len()).map(|i| AgentSpec { position: i, id: Some(i as u64 + 1) }).collect(),
            g,
            id_bits_override: None,
            seed: 0,
            scheduler: StrategyKind::Synchronous,
            step_limit: None,
        };
        let mut c = build_initial_config(&spec).unwrap();
        for (a, &v) in c.agents.iter_mut().zip(nodes) {
            a.position = v;
            a.role = Role::Final;
        }
        c
    }

    #[test]
    fn gathering_verdicts() {
        let c = finished(8, &[2, 2, 2, 2, 6, 6, 6, 6], 3);
        let v = check_partial_gathering(&c, 3);
        assert_eq!((v.kind, v.group_sizes.clone()), (VerdictKind::Gathered, vec![4, 4]));
        let c = finished(8, &[1, 1, 1, 1, 1, 5, 5, 5], 4);
        assert_eq!(check_partial_gathering(&c, 4).kind, VerdictKind::Violation);
        let mut c = finished(8, &[2, 2, 2, 2, 6, 6, 6, 6], 3);
        c.agents[3].role = Role::Moving;
        assert_eq!(check_partial_gathering(&c, 3).kind, VerdictKind::Violation);
    }

    fn elected(n: usize, leaders: &[usize], inactive: &[usize]) -> Configuration {
        let k = leaders.len() + inactive.len();
        let mut c = finished(n, &vec![0; k], 2);
        let all = leaders.iter().map(|&v| (Role::Leader, v)).chain(inactive.iter().map(|&v| (Role::Inactive, v)));
        for (a, (role, node)) in c.agents.iter_mut().zip(all) {
            a.election = Some(ElectionOutcome { role, node, via_semi: false });
        }
        c
    }

    #[test]
    fn leader_spacing() {
        assert!(check_leader_invariant(&elected(8, &[0, 4], &[1, 2, 3, 5, 6, 7]), 3));
        assert!(check_leader_invariant(&elected(8, &[3], &[0, 1, 2, 4, 5, 6, 7]), 3));
        assert!(!check_leader_invariant(&elected(8, &[0, 2], &[1, 3, 4, 5, 6, 7]), 3));
        assert!(!check_leader_invariant(&elected(8, &[], &[1, 3]), 2));
    }

    #[test]
    fn floor_values() {
        assert_eq!(lower_bound_floor(8, 3), 8);
        assert_eq!(lower_bound_floor(10, 2), 5);
        assert_eq!(lower_bound_floor(7, 2), 4);
        assert_eq!(lower_bound_floor(9, 1), 0);
    }

    #[test]
    fn bound_checks() {
        let (n, g) = (16u64, 4usize);
        let ok = MoveBreakdown { active: 2 * n * 2, leader: n, moving: 2 * 4 * n, total: 0, ..Default::default() };
        assert!(check_bounds(&ok, Model::Distinct, 16, 8, g, None));
        let bad = MoveBreakdown { active: 3 * n * 2, ..ok.clone() };
        assert!(!check_bounds(&bad, Model::Distinct, 16, 8, g, None));
        let anon = MoveBreakdown { anon: 4 * 8, total: 4 * 8, ..Default::default() };
        assert!(check_bounds(&anon, Model::Anon, 8, 4, 2, None));
        let anon = MoveBreakdown { anon: 61, total: 61, ..Default::default() };
        assert!(!check_bounds(&anon, Model::Anon, 8, 4, 2, None));
    }

    #[test]
    fn record_attributes_by_role() {
        let mut b = MoveBreakdown::default();
        b.record(Model::Distinct, Role::Active, Some(2));
        b.record(Model::Distinct, Role::Moving, None);
        b.record(Model::Anon, Role::Active, None);
        assert_eq!((b.active, b.moving, b.anon, b.total), (1, 1, 1, 3));
        assert_eq!(b.active_by_phase, [0, 1]);
        assert_eq!(b.parts_sum(), b.total);
    }
}
