//! Ring, whiteboards, agent automata and the atomic-step engine.
//!
//! Every protocol in this crate is compiled into a per-activation transition
//! function. One activation is one atomic step: the agent reads the whiteboard
//! of the node it stands on, computes locally, optionally writes that same
//! whiteboard, and then either stays or moves exactly one node forward. The
//! transition functions only ever see the current node's whiteboard, so an
//! agent cannot sense other agents sharing its node.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algo_anon::{self, AnonRegisters};
use crate::algo_distinct::{self, DistinctRegisters, MarkingRule};
use crate::algo_random::{self, RandomRegisters};
use crate::scheduler::StrategyKind;
use crate::workload::ceil_log2;

/// Which of the three agent models an instance runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Deterministic agents with distinct identifiers.
    Distinct,
    /// Anonymous randomized agents that know `k`.
    Random,
    /// Anonymous deterministic agents that know `k`.
    Anon,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Distinct, Model::Random, Model::Anon];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Distinct => "distinct",
            Model::Random => "random",
            Model::Anon => "anon",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distinct" => Ok(Model::Distinct),
            "random" => Ok(Model::Random),
            "anon" => Ok(Model::Anon),
            other => Err(format!("unknown model `{other}` (expected distinct, random or anon)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentSpec {
    pub position: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
}

/// A problem instance. Mirrors the instance-file JSON key for key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub model: Model,
    pub agents: Vec<AgentSpec>,
    pub g: usize,
    #[serde(default)]
    pub id_bits_override: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheduler: StrategyKind,
    #[serde(default)]
    pub step_limit: Option<u64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvalidInstance {
    #[error("ring must have at least one node")]
    EmptyRing,
    #[error("instance has no agents")]
    NoAgents,
    #[error("{k} agents do not fit on a ring of {n} nodes")]
    TooManyAgents { k: usize, n: usize },
    #[error("agent {agent} starts at node {position}, outside the ring of {n} nodes")]
    PositionOutOfRange { agent: usize, position: usize, n: usize },
    #[error("two agents start at node {0}")]
    DuplicatePosition(usize),
    #[error("g = {g} must lie in [2, {k}]")]
    ThresholdOutOfRange { g: usize, k: usize },
    #[error("agent {0} has no id but the distinct model requires one")]
    MissingId(usize),
    #[error("id {0} is carried by more than one agent")]
    DuplicateId(u64),
    #[error("agent {agent} carries an id but the {model} model is anonymous")]
    UnexpectedId { agent: usize, model: Model },
    #[error("id_bits_override = {0} must lie in [1, 64]")]
    IdBitsOutOfRange(u32),
    #[error("id_bits_override only applies to the random model")]
    IdBitsNotApplicable,
    #[error("step_limit must be positive")]
    ZeroStepLimit,
}

impl InstanceSpec {
    pub fn k(&self) -> usize {
        self.agents.len()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.position).collect()
    }

    pub fn validate(&self) -> Result<(), InvalidInstance> {
        let (n, k) = (self.n, self.k());
        if n == 0 {
            return Err(InvalidInstance::EmptyRing);
        }
        if k == 0 {
            return Err(InvalidInstance::NoAgents);
        }
        if k > n {
            return Err(InvalidInstance::TooManyAgents { k, n });
        }
        let mut seen = vec![false; n];
        for (agent, a) in self.agents.iter().enumerate() {
            if a.position >= n {
                return Err(InvalidInstance::PositionOutOfRange { agent, position: a.position, n });
            }
            if std::mem::replace(&mut seen[a.position], true) {
                return Err(InvalidInstance::DuplicatePosition(a.position));
            }
        }
        if self.g < 2 || self.g > k {
            return Err(InvalidInstance::ThresholdOutOfRange { g: self.g, k });
        }
        match self.model {
            Model::Distinct => {
                let mut ids = Vec::with_capacity(k);
                for (agent, a) in self.agents.iter().enumerate() {
                    ids.push(a.id.ok_or(InvalidInstance::MissingId(agent))?);
                }
                ids.sort_unstable();
                if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
                    return Err(InvalidInstance::DuplicateId(w[0]));
                }
            }
            Model::Random | Model::Anon => {
                if let Some(agent) = self.agents.iter().position(|a| a.id.is_some()) {
                    return Err(InvalidInstance::UnexpectedId { agent, model: self.model });
                }
            }
        }
        if let Some(bits) = self.id_bits_override {
            if self.model != Model::Random {
                return Err(InvalidInstance::IdBitsNotApplicable);
            }
            if !(1..=64).contains(&bits) {
                return Err(InvalidInstance::IdBitsOutOfRange(bits));
            }
        }
        if self.step_limit == Some(0) {
            return Err(InvalidInstance::ZeroStepLimit);
        }
        Ok(())
    }

    /// Number of election phases, `ceil(log2 g)`.
    pub fn phases(&self) -> u32 {
        ceil_log2(self.g as u64)
    }

    /// Random-ID length in bits: the override if present, else `3 * ceil(log2 k)`.
    pub fn id_bits(&self) -> u32 {
        self.id_bits_override.unwrap_or_else(|| 3 * ceil_log2(self.k() as u64)).clamp(1, 64)
    }

    pub fn effective_step_limit(&self) -> u64 {
        self.step_limit.unwrap_or_else(|| crate::workload::default_step_limit(self.n, self.k(), self.g))
    }
}

/// Number of edges walked going forward from node `i` to node `j`.
pub fn forward_distance(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < n && j < n);
    (j + n - i) % n
}

/// The `isGather` whiteboard value: unset, or one of the two leader marks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mark {
    #[default]
    Unset,
    Zero,
    One,
}

impl Serialize for Mark {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Mark::Unset => s.serialize_none(),
            Mark::Zero => s.serialize_u8(0),
            Mark::One => s.serialize_u8(1),
        }
    }
}

impl<'de> Deserialize<'de> for Mark {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Option::<u8>::deserialize(d)? {
            None => Ok(Mark::Unset),
            Some(0) => Ok(Mark::Zero),
            Some(1) => Ok(Mark::One),
            Some(v) => Err(serde::de::Error::custom(format!("isGather must be null, 0 or 1, got {v}"))),
        }
    }
}

/// Per-node shared record. One layout serves all three models; fields a
/// model does not use keep their defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Whiteboard {
    pub initial: bool,
    pub inactive: bool,
    pub phase: u32,
    pub id: u64,
    pub is_gather: Mark,
    pub tour_flag: bool,
    pub leader_flag: bool,
    pub semi_leader_flag: bool,
    pub semi_phase: u32,
}

/// The fields an atomic step changed on a whiteboard.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WbWrites {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inactive: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_gather: Option<Mark>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tour_flag: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader_flag: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_leader_flag: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_phase: Option<u32>,
}

fn changed<T: PartialEq + Copy>(before: T, after: T) -> Option<T> {
    (before != after).then_some(after)
}

impl WbWrites {
    pub fn diff(before: &Whiteboard, after: &Whiteboard) -> Self {
        WbWrites {
            initial: changed(before.initial, after.initial),
            inactive: changed(before.inactive, after.inactive),
            phase: changed(before.phase, after.phase),
            id: changed(before.id, after.id),
            is_gather: changed(before.is_gather, after.is_gather),
            tour_flag: changed(before.tour_flag, after.tour_flag),
            leader_flag: changed(before.leader_flag, after.leader_flag),
            semi_leader_flag: changed(before.semi_leader_flag, after.semi_leader_flag),
            semi_phase: changed(before.semi_phase, after.semi_phase),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == WbWrites::default()
    }

    pub fn apply(&self, wb: &mut Whiteboard) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { wb.$f = v; } )* };
        }
        set!(initial, inactive, phase, id, is_gather, tour_flag, leader_flag, semi_leader_flag, semi_phase);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Active,
    Inactive,
    Leader,
    Moving,
    SemiLeader,
    Final,
}

impl Role {
    pub const ALL: [Role; 6] =
        [Role::Active, Role::Inactive, Role::Leader, Role::Moving, Role::SemiLeader, Role::Final];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Active => "active",
            Role::Inactive => "inactive",
            Role::Leader => "leader",
            Role::Moving => "moving",
            Role::SemiLeader => "semi_leader",
            Role::Final => "final",
        }
    }

    /// Roles that are still competing in the election.
    pub fn is_contender(self) -> bool {
        matches!(self, Role::Active | Role::SemiLeader)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Move counters indexed by [`Role`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoleCounts(pub [u64; 6]);

impl RoleCounts {
    pub fn get(&self, role: Role) -> u64 {
        self.0[role.index()]
    }

    pub fn bump(&mut self, role: Role) {
        self.0[role.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// How an anonymous-model agent finished.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    /// Relocated to its gathering node.
    Relocated,
    /// Detected `period < g` and halted at its start node.
    Unsolvable,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Registers {
    Distinct(DistinctRegisters),
    Random(RandomRegisters),
    Anon(AnonRegisters),
}

impl Registers {
    pub fn initial(spec: &InstanceSpec, agent: usize) -> Self {
        match spec.model {
            Model::Distinct => {
                Registers::Distinct(DistinctRegisters::new(spec.agents[agent].id.expect("validated distinct instance")))
            }
            Model::Random => Registers::Random(RandomRegisters::default()),
            Model::Anon => Registers::Anon(AnonRegisters::default()),
        }
    }

    /// Election phase of an active agent, when the model has phases.
    pub fn active_phase(&self) -> Option<u32> {
        match self {
            Registers::Distinct(r) => Some(r.phase),
            Registers::Random(r) => Some(r.phase),
            Registers::Anon(_) => None,
        }
    }

    pub fn exit(&self) -> Option<Exit> {
        match self {
            Registers::Anon(r) => r.exit,
            _ => None,
        }
    }
}

/// Role and node an agent held when it left the election.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElectionOutcome {
    pub role: Role,
    pub node: usize,
    pub via_semi: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub role: Role,
    pub position: usize,
    pub regs: Registers,
    pub moves_made: u64,
    pub moves_by_role: RoleCounts,
    /// Active-role moves split by election phase (index 0 is phase 1).
    pub active_moves_by_phase: Vec<u64>,
    pub election: Option<ElectionOutcome>,
}

impl AgentState {
    /// Whether this agent ever held the semi-leader role.
    pub fn was_semi_leader(&self) -> bool {
        self.role == Role::SemiLeader || self.election.is_some_and(|e| e.via_semi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub spec: InstanceSpec,
    pub whiteboards: Vec<Whiteboard>,
    pub agents: Vec<AgentState>,
    pub step_count: u64,
}

/// The protocol-relevant part of a configuration: whiteboards plus each
/// agent's role, node and registers. Counters are excluded so that states
/// reached along different schedules compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ProtocolKey {
    pub whiteboards: Vec<Whiteboard>,
    pub agents: Vec<(Role, usize, Registers)>,
}

pub fn build_initial_config(spec: &InstanceSpec) -> Result<Configuration, InvalidInstance> {
    spec.validate()?;
    let mut whiteboards = vec![Whiteboard::default(); spec.n];
    for a in &spec.agents {
        whiteboards[a.position].initial = true;
    }
    let agents = (0..spec.k())
        .map(|i| AgentState {
            role: Role::Active,
            position: spec.agents[i].position,
            regs: Registers::initial(spec, i),
            moves_made: 0,
            moves_by_role: RoleCounts::default(),
            active_moves_by_phase: Vec::new(),
            election: None,
        })
        .collect();
    Ok(Configuration { spec: spec.clone(), whiteboards, agents, step_count: 0 })
}

impl Configuration {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn k(&self) -> usize {
        self.agents.len()
    }

    pub fn all_final(&self) -> bool {
        self.agents.iter().all(|a| a.role == Role::Final)
    }

    pub fn live_agents(&self) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.agents[i].role != Role::Final).collect()
    }

    pub fn protocol_key(&self) -> ProtocolKey {
        ProtocolKey {
            whiteboards: self.whiteboards.clone(),
            agents: self.agents.iter().map(|a| (a.role, a.position, a.regs.clone())).collect(),
        }
    }

    /// Hex SHA-256 of the protocol-relevant state.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(&self.protocol_key()).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Per-step knowledge shared by every agent of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepContext {
    pub model: Model,
    pub g: usize,
    /// Agent count; only the random and anonymous models may consult it.
    pub k: usize,
    pub phases: u32,
    pub id_bits: u32,
    pub marking: MarkingRule,
}

impl StepContext {
    pub fn new(spec: &InstanceSpec, marking: MarkingRule) -> Self {
        StepContext {
            model: spec.model,
            g: spec.g,
            k: spec.k(),
            phases: spec.phases(),
            id_bits: spec.id_bits(),
            marking,
        }
    }
}

/// Move flag of one atomic step. Only forward single-hop moves exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Motion {
    Stay,
    Forward,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelViolation {
    #[error("agent {agent} rewrote the initial flag at node {node}")]
    InitialFlagWritten { agent: usize, node: usize },
    #[error("agent {agent} overwrote an already written isGather at node {node}")]
    MarkOverwritten { agent: usize, node: usize },
    #[error("agent {agent} left the final state")]
    LeftFinalState { agent: usize },
    #[error("agent {agent} holds registers of the wrong model")]
    RegisterMismatch { agent: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Stay,
    Move,
    Write,
    RoleChange,
    Terminate,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub writes: Option<WbWrites>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<Exit>,
}

/// One trace record. An activation emits, in order: at most one `write`, at
/// most one `role_change`/`terminate`, and exactly one `move` or `stay`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub agent: usize,
    pub node: usize,
    pub role: Role,
    pub action: Action,
    pub detail: Detail,
}

/// Summary of one applied atomic step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub role_before: Role,
    pub role_after: Role,
    pub moved: bool,
}

fn transition(
    ctx: &StepContext,
    role: &mut Role,
    regs: &mut Registers,
    wb: &mut Whiteboard,
    rng: &mut dyn RngCore,
) -> Option<Motion> {
    Some(match (ctx.model, regs) {
        (Model::Distinct, Registers::Distinct(r)) => algo_distinct::step(ctx, role, r, wb),
        (Model::Random, Registers::Random(r)) => algo_random::step(ctx, role, r, wb, rng),
        (Model::Anon, Registers::Anon(r)) => algo_anon::step(ctx, role, r, wb),
        _ => return None,
    })
}

/// Executes one atomic step of `agent`, mutating `config` in place and
/// appending the step's events to `events` when a sink is given.
pub fn apply_atomic_step(
    config: &mut Configuration,
    agent: usize,
    ctx: &StepContext,
    rng: &mut dyn RngCore,
    events: Option<&mut Vec<Event>>,
) -> Result<StepReport, ModelViolation> {
    let t = config.step_count;
    config.step_count += 1;
    let n = config.spec.n;
    let state = &mut config.agents[agent];
    let node = state.position;
    let role_before = state.role;

    if role_before == Role::Final {
        if let Some(events) = events {
            events.push(Event { t, agent, node, role: Role::Final, action: Action::Stay, detail: Detail::default() });
        }
        return Ok(StepReport { role_before, role_after: Role::Final, moved: false });
    }

    let before = config.whiteboards[node];
    let mut wb = before;
    let mut role = role_before;
    let motion =
        transition(ctx, &mut role, &mut state.regs, &mut wb, rng).ok_or(ModelViolation::RegisterMismatch { agent })?;

    if wb.initial != before.initial {
        return Err(ModelViolation::InitialFlagWritten { agent, node });
    }
    if before.is_gather != Mark::Unset && wb.is_gather != before.is_gather {
        return Err(ModelViolation::MarkOverwritten { agent, node });
    }
    config.whiteboards[node] = wb;

    if role != role_before {
        state.role = role;
        if ctx.model != Model::Anon
            && role_before.is_contender()
            && matches!(role, Role::Inactive | Role::Leader)
            && state.election.is_none()
        {
            state.election = Some(ElectionOutcome { role, node, via_semi: role_before == Role::SemiLeader });
        }
    }

    let moved = motion == Motion::Forward;
    let mut phase = None;
    if moved {
        state.position = (node + 1) % n;
        state.moves_made += 1;
        state.moves_by_role.bump(role);
        if role == Role::Active {
            if let Some(p) = state.regs.active_phase() {
                let idx = p.saturating_sub(1) as usize;
                if state.active_moves_by_phase.len() <= idx {
                    state.active_moves_by_phase.resize(idx + 1, 0);
                }
                state.active_moves_by_phase[idx] += 1;
                phase = Some(p);
            }
        }
    }

    if let Some(events) = events {
        let writes = WbWrites::diff(&before, &wb);
        if !writes.is_empty() {
            events.push(Event {
                t,
                agent,
                node,
                role: role_before,
                action: Action::Write,
                detail: Detail { writes: Some(writes), ..Detail::default() },
            });
        }
        if role != role_before {
            let action = if role == Role::Final { Action::Terminate } else { Action::RoleChange };
            let exit = if role == Role::Final { state.regs.exit() } else { None };
            events.push(Event {
                t,
                agent,
                node,
                role,
                action,
                detail: Detail { role: Some(role), exit, ..Detail::default() },
            });
        }
        let (action, detail) = if moved {
            (Action::Move, Detail { to: Some(state.position), phase, ..Detail::default() })
        } else {
            (Action::Stay, Detail::default())
        };
        events.push(Event { t, agent, node, role, action, detail });
    }

    Ok(StepReport { role_before, role_after: role, moved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(model: Model, n: usize, positions: &[usize], ids: Option<&[u64]>, g: usize) -> InstanceSpec {
        InstanceSpec {
            n,
            model,
            agents: positions
                .iter()
                .enumerate()
                .map(|(i, &position)| AgentSpec { position, id: ids.map(|ids| ids[i]) })
                .collect(),
            g,
            id_bits_override: None,
            seed: 0,
            scheduler: StrategyKind::Synchronous,
            step_limit: None,
        }
    }

    #[test]
    fn forward_distance_examples() {
        assert_eq!(forward_distance(8, 2, 5), 3);
        assert_eq!(forward_distance(8, 5, 2), 5);
        assert_eq!(forward_distance(8, 4, 4), 0);
    }

    #[test]
    fn eight_agent_instance_is_valid() {
        let s = spec(Model::Distinct, 8, &[0, 1, 2, 3, 4, 5, 6, 7], Some(&[7, 1, 8, 3, 4, 2, 6, 5]), 3);
        let c = build_initial_config(&s).unwrap();
        assert_eq!(c.whiteboards.iter().filter(|w| w.initial).count(), 8);
        assert!(c.agents.iter().all(|a| a.role == Role::Active && a.moves_made == 0));
    }

    #[test]
    fn symmetric_anon_placement_flags_even_nodes() {
        let s = spec(Model::Anon, 8, &[0, 2, 4, 6], None, 2);
        let c = build_initial_config(&s).unwrap();
        for (i, w) in c.whiteboards.iter().enumerate() {
            assert_eq!(w.initial, i % 2 == 0);
            assert_eq!(Whiteboard { initial: false, ..*w }, Whiteboard::default());
        }
    }

    #[test]
    fn rejects_bad_instances() {
        for model in Model::ALL {
            let ids = [1u64, 2];
            let ids = (model == Model::Distinct).then_some(&ids[..]);
            assert_eq!(
                build_initial_config(&spec(model, 4, &[1, 1], ids, 2)).unwrap_err(),
                InvalidInstance::DuplicatePosition(1)
            );
        }
        assert!(matches!(
            spec(Model::Anon, 4, &[0, 2], None, 1).validate(),
            Err(InvalidInstance::ThresholdOutOfRange { g: 1, k: 2 })
        ));
        assert!(matches!(
            spec(Model::Anon, 4, &[0, 2], None, 3).validate(),
            Err(InvalidInstance::ThresholdOutOfRange { g: 3, k: 2 })
        ));
        assert_eq!(
            spec(Model::Distinct, 4, &[0, 2], Some(&[5, 5]), 2).validate(),
            Err(InvalidInstance::DuplicateId(5))
        );
        let mut s = spec(Model::Distinct, 4, &[0, 2], Some(&[5, 6]), 2);
        s.agents[1].id = None;
        assert_eq!(s.validate(), Err(InvalidInstance::MissingId(1)));
        assert!(matches!(
            spec(Model::Random, 4, &[0, 2], Some(&[5, 6]), 2).validate(),
            Err(InvalidInstance::UnexpectedId { agent: 0, .. })
        ));
        assert!(matches!(
            spec(Model::Anon, 4, &[0, 5], None, 2).validate(),
            Err(InvalidInstance::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn instance_json_uses_exact_keys() {
        let s = spec(Model::Anon, 8, &[0, 2], None, 2);
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["agents", "g", "id_bits_override", "model", "n", "scheduler", "seed", "step_limit"]);
        let back: InstanceSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        let minimal: InstanceSpec = serde_json::from_str(
            r#"{"n":4,"model":"distinct","agents":[{"position":0,"id":3},{"position":2,"id":1}],"g":2}"#,
        )
        .unwrap();
        assert_eq!(minimal.scheduler, StrategyKind::Synchronous);
        minimal.validate().unwrap();
    }

    fn one_step(c: &mut Configuration, agent: usize) -> (StepReport, Vec<Event>) {
        let ctx = StepContext::new(&c.spec, MarkingRule::Fixed);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        let r = apply_atomic_step(c, agent, &ctx, &mut rng, Some(&mut ev)).unwrap();
        (r, ev)
    }

    #[test]
    fn blocked_agent_stays_without_writes() {
        // Agent 0 moves to agent 1's node before agent 1 has written phase 1:
        // the node's phase (0) is behind, so agent 0 must wait there.
        let s = spec(Model::Distinct, 4, &[0, 1], Some(&[1, 2]), 2);
        let mut c = build_initial_config(&s).unwrap();
        let (r, _) = one_step(&mut c, 0);
        assert!(r.moved);
        assert_eq!(c.agents[0].position, 1);
        let wb = c.whiteboards.clone();
        let (r, ev) = one_step(&mut c, 0);
        assert!(!r.moved);
        assert_eq!(c.agents[0].position, 1);
        assert_eq!(c.whiteboards, wb);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].action, Action::Stay);
    }

    #[test]
    fn moving_step_advances_one_node() {
        let s = spec(Model::Anon, 5, &[4, 1], None, 2);
        let mut c = build_initial_config(&s).unwrap();
        let (r, ev) = one_step(&mut c, 0);
        assert!(r.moved);
        assert_eq!(c.agents[0].position, 0);
        assert_eq!(c.agents[0].moves_made, 1);
        assert_eq!(ev.last().unwrap().detail.to, Some(0));
    }

    #[test]
    fn final_agent_is_a_no_op() {
        let s = spec(Model::Anon, 4, &[0, 2], None, 2);
        let mut c = build_initial_config(&s).unwrap();
        c.agents[1].role = Role::Final;
        let before = c.clone();
        let (r, ev) = one_step(&mut c, 1);
        assert!(!r.moved);
        assert_eq!(c.step_count, before.step_count + 1);
        c.step_count = before.step_count;
        assert_eq!(c, before);
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].action, ev[0].role), (Action::Stay, Role::Final));
    }

    #[test]
    fn write_events_precede_the_move() {
        let s = spec(Model::Distinct, 4, &[0, 2], Some(&[4, 9]), 2);
        let mut c = build_initial_config(&s).unwrap();
        let (_, ev) = one_step(&mut c, 0);
        let actions: Vec<_> = ev.iter().map(|e| e.action).collect();
        assert_eq!(actions, [Action::Write, Action::Move]);
        let w = ev[0].detail.writes.as_ref().unwrap();
        assert_eq!((w.phase, w.id), (Some(1), Some(4)));
    }

    #[test]
    fn mark_serializes_as_null_or_bit() {
        assert_eq!(serde_json::to_string(&Mark::Unset).unwrap(), "null");
        assert_eq!(serde_json::to_string(&Mark::One).unwrap(), "1");
        assert_eq!(serde_json::from_str::<Mark>("0").unwrap(), Mark::Zero);
        assert!(serde_json::from_str::<Mark>("2").is_err());
    }
}
