//! Fair asynchronous schedulers and the run loop.
//!
//! A schedule is a sequence of decisions; each decision is a non-empty set
//! of live agents that then take one atomic step each, in ascending index
//! order. Every strategy is wrapped by a starvation guard: an agent left out
//! of `B - 1` consecutive decisions is forced into the next one, so no live
//! agent is ever skipped for `B` decisions in a row.

pub mod explore;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algo_distinct::MarkingRule;
use crate::ring_model::{
    apply_atomic_step, build_initial_config, Configuration, InstanceSpec, InvalidInstance, Model, ModelViolation,
    Registers, Role, StepContext,
};
use crate::verifier::MoveBreakdown;
pub use trace::{ExecutionTrace, ObservedState, TraceError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Every live agent, every decision.
    #[default]
    Synchronous,
    /// One agent at a time, cycling through live agents.
    RoundRobin,
    /// A uniformly random non-empty subset of live agents.
    RandomSubset,
    /// Round-robin over everyone but one target, which only runs when the
    /// fairness bound forces it.
    Lagger,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::Synchronous, StrategyKind::RoundRobin, StrategyKind::RandomSubset, StrategyKind::Lagger];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Synchronous => "synchronous",
            StrategyKind::RoundRobin => "round_robin",
            StrategyKind::RandomSubset => "random_subset",
            StrategyKind::Lagger => "lagger",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            format!("unknown scheduler `{s}` (expected synchronous, round_robin, random_subset or lagger)")
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStrategy {
    pub kind: StrategyKind,
    /// B: maximum run of consecutive decisions a live agent may miss, minus one.
    pub fairness_bound: usize,
    pub lagger_target: usize,
}

impl ScheduleStrategy {
    /// Default fairness bound `4k`, lagger target agent 0.
    pub fn new(kind: StrategyKind, k: usize) -> Self {
        ScheduleStrategy { kind, fairness_bound: 4 * k.max(1), lagger_target: 0 }
    }
}

pub struct Scheduler {
    strategy: ScheduleStrategy,
    rng: ChaCha8Rng,
    starved: Vec<usize>,
    cursor: usize,
}

impl Scheduler {
    pub fn new(strategy: ScheduleStrategy, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Scheduler { strategy, rng, starved: vec![0; k], cursor: 0 }
    }

    /// Next live agent at or after the cursor, cyclically, skipping `except`.
    fn round_robin(&mut self, live: &[bool], except: Option<usize>) -> Option<usize> {
        let k = live.len();
        let pick = (0..k).map(|d| (self.cursor + d) % k).find(|&a| live[a] && Some(a) != except)?;
        self.cursor = (pick + 1) % k;
        Some(pick)
    }

    /// Chooses the next activation set, ascending. Empty only if nobody is live.
    pub fn next_activation_set(&mut self, live: &[bool]) -> Vec<usize> {
        let k = live.len();
        let bound = self.strategy.fairness_bound.max(1);
        let mut chosen = vec![false; k];
        match self.strategy.kind {
            StrategyKind::Synchronous => chosen.copy_from_slice(live),
            StrategyKind::RoundRobin => {
                if let Some(a) = self.round_robin(live, None) {
                    chosen[a] = true;
                }
            }
            StrategyKind::RandomSubset => {
                if live.iter().any(|&l| l) {
                    loop {
                        for a in 0..k {
                            chosen[a] = live[a] && self.rng.gen_bool(0.5);
                        }
                        if chosen.iter().any(|&c| c) {
                            break;
                        }
                    }
                }
            }
            StrategyKind::Lagger => {
                let t = self.strategy.lagger_target;
                let target_live = t < k && live[t];
                if target_live && self.starved[t] + 1 >= bound {
                    chosen[t] = true;
                } else if let Some(a) = self.round_robin(live, target_live.then_some(t)) {
                    chosen[a] = true;
                } else if target_live {
                    chosen[t] = true;
                }
            }
        }
        for a in 0..k {
            if live[a] && self.starved[a] + 1 >= bound {
                chosen[a] = true;
            }
        }
        for a in 0..k {
            if chosen[a] {
                self.starved[a] = 0;
            } else if live[a] {
                self.starved[a] += 1;
            }
        }
        (0..k).filter(|&a| chosen[a]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub strategy: ScheduleStrategy,
    pub step_limit: u64,
    pub record_trace: bool,
    pub marking: MarkingRule,
}

impl RunOptions {
    /// Options taken from the instance: its scheduler, its step limit or the
    /// default one, trace recording on, fixed marking.
    pub fn for_spec(spec: &InstanceSpec) -> Self {
        RunOptions {
            strategy: ScheduleStrategy::new(spec.scheduler, spec.k()),
            step_limit: spec.effective_step_limit(),
            record_trace: true,
            marking: MarkingRule::Fixed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    /// Every agent reached the final role.
    Terminated,
    /// The step budget ran out first.
    StepLimit,
    /// A transition broke a model rule.
    Violation,
}

impl RunOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            RunOutcome::Terminated => "terminated",
            RunOutcome::StepLimit => "step_limit",
            RunOutcome::Violation => "violation",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub violation: Option<ModelViolation>,
    pub final_config: Configuration,
    pub trace: Option<ExecutionTrace>,
    /// First configuration with no active or semi-leader agent.
    pub election_snapshot: Option<Configuration>,
    pub decisions: u64,
}

impl RunResult {
    pub fn steps(&self) -> u64 {
        self.final_config.step_count
    }

    pub fn breakdown(&self) -> MoveBreakdown {
        MoveBreakdown::from_config(&self.final_config)
    }

    /// Agents that ever held the leader role.
    pub fn leaders(&self) -> usize {
        self.final_config.agents.iter().filter(|a| a.election.is_some_and(|e| e.role == Role::Leader)).count()
    }

    pub fn semi_leaders(&self) -> usize {
        self.final_config.agents.iter().filter(|a| a.was_semi_leader()).count()
    }

    /// Full or partial semi-leader tours started, summed over agents.
    pub fn circulations(&self) -> u64 {
        self.final_config
            .agents
            .iter()
            .map(|a| match &a.regs {
                Registers::Random(r) => r.semi_phase as u64,
                _ => 0,
            })
            .sum()
    }
}

/// Runs `config` under `opts` until every agent is final, the budget is
/// spent, or a model rule is broken.
pub fn run(mut config: Configuration, opts: &RunOptions) -> RunResult {
    let ctx = StepContext::new(&config.spec, opts.marking);
    let seed = config.spec.seed;
    let k = config.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sched = Scheduler::new(opts.strategy, k, seed);
    let mut events = opts.record_trace.then(Vec::new);
    let mut contenders = if config.spec.model == Model::Anon {
        0
    } else {
        config.agents.iter().filter(|a| a.role.is_contender()).count()
    };
    let mut snapshot = None;
    let mut decisions = 0u64;
    let mut violation = None;
    let mut live = vec![false; k];

    let outcome = 'outer: loop {
        if config.all_final() {
            break RunOutcome::Terminated;
        }
        if config.step_count >= opts.step_limit {
            break RunOutcome::StepLimit;
        }
        for (l, a) in live.iter_mut().zip(&config.agents) {
            *l = a.role != Role::Final;
        }
        let set = sched.next_activation_set(&live);
        decisions += 1;
        for a in set {
            if config.step_count >= opts.step_limit {
                break;
            }
            match apply_atomic_step(&mut config, a, &ctx, &mut rng, events.as_mut()) {
                Ok(rep) => {
                    if contenders > 0 && rep.role_before.is_contender() && !rep.role_after.is_contender() {
                        contenders -= 1;
                        if contenders == 0 && snapshot.is_none() {
                            snapshot = Some(config.clone());
                        }
                    }
                }
                Err(v) => {
                    violation = Some(v);
                    break 'outer RunOutcome::Violation;
                }
            }
        }
    };

    let trace = events.map(|events| ExecutionTrace { spec: config.spec.clone(), events });
    RunResult { outcome, violation, final_config: config, trace, election_snapshot: snapshot, decisions }
}

/// Builds the initial configuration of `spec` and runs it.
pub fn run_spec(spec: &InstanceSpec, opts: &RunOptions) -> Result<RunResult, InvalidInstance> {
    Ok(run(build_initial_config(spec)?, opts))
}
