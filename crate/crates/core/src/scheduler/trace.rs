//! Execution traces: JSON-lines I/O and replay of the observable state.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ring_model::{
    build_initial_config, Action, Configuration, Event, InstanceSpec, InvalidInstance, Role, Whiteboard,
};
use crate::verifier::MoveBreakdown;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Instance(#[from] InvalidInstance),
    #[error("event at t={t} names agent {agent}, which does not exist")]
    UnknownAgent { t: u64, agent: usize },
    #[error("event at t={t} places agent {agent} at node {found}, but it stands at {expected}")]
    NodeMismatch { t: u64, agent: usize, expected: usize, found: usize },
    #[error("event at t={t} moves agent {agent} somewhere other than the next node")]
    BadMove { t: u64, agent: usize },
    #[error("event at t={t} is out of order")]
    OutOfOrder { t: u64 },
    #[error("agent {agent} acts at t={t} after terminating")]
    ActedAfterFinal { t: u64, agent: usize },
    #[error("event at t={t} lacks its {field} detail")]
    MissingDetail { t: u64, field: &'static str },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub spec: InstanceSpec,
    pub events: Vec<Event>,
}

/// What an outside observer of a run can see: whiteboards, agent nodes,
/// roles and move counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObservedState {
    pub whiteboards: Vec<Whiteboard>,
    pub positions: Vec<usize>,
    pub roles: Vec<Role>,
    pub moves_made: Vec<u64>,
    pub breakdown: MoveBreakdown,
}

impl ObservedState {
    pub fn of(config: &Configuration) -> Self {
        ObservedState {
            whiteboards: config.whiteboards.clone(),
            positions: config.agents.iter().map(|a| a.position).collect(),
            roles: config.agents.iter().map(|a| a.role).collect(),
            moves_made: config.agents.iter().map(|a| a.moves_made).collect(),
            breakdown: MoveBreakdown::from_config(config),
        }
    }
}

impl ExecutionTrace {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads events for `spec`; blank lines are ignored.
    pub fn read_jsonl<R: BufRead>(spec: InstanceSpec, r: R) -> Result<Self, TraceError> {
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| TraceError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(&line).map_err(|e| TraceError::Parse { line: i + 1, msg: e.to_string() })?;
            events.push(e);
        }
        Ok(ExecutionTrace { spec, events })
    }

    /// Re-applies every event to the initial configuration, checking that
    /// each one is consistent with the state reached so far.
    pub fn replay(&self) -> Result<ObservedState, TraceError> {
        let init = build_initial_config(&self.spec)?;
        let n = self.spec.n;
        let mut st = ObservedState::of(&init);
        let mut last_t = None;
        for e in &self.events {
            if e.agent >= st.positions.len() {
                return Err(TraceError::UnknownAgent { t: e.t, agent: e.agent });
            }
            if last_t.is_some_and(|t| e.t < t) {
                return Err(TraceError::OutOfOrder { t: e.t });
            }
            last_t = Some(e.t);
            let here = st.positions[e.agent];
            if e.node != here {
                return Err(TraceError::NodeMismatch { t: e.t, agent: e.agent, expected: here, found: e.node });
            }
            if st.roles[e.agent] == Role::Final && e.action != Action::Stay {
                return Err(TraceError::ActedAfterFinal { t: e.t, agent: e.agent });
            }
            match e.action {
                Action::Stay => {}
                Action::Write => {
                    let w = e.detail.writes.as_ref().ok_or(TraceError::MissingDetail { t: e.t, field: "writes" })?;
                    w.apply(&mut st.whiteboards[here]);
                }
                Action::RoleChange | Action::Terminate => {
                    let role = e.detail.role.unwrap_or(e.role);
                    if (e.action == Action::Terminate) != (role == Role::Final) {
                        return Err(TraceError::MissingDetail { t: e.t, field: "role" });
                    }
                    st.roles[e.agent] = role;
                }
                Action::Move => {
                    let to = e.detail.to.ok_or(TraceError::MissingDetail { t: e.t, field: "to" })?;
                    if to != (here + 1) % n {
                        return Err(TraceError::BadMove { t: e.t, agent: e.agent });
                    }
                    st.positions[e.agent] = to;
                    st.moves_made[e.agent] += 1;
                    st.breakdown.record(self.spec.model, st.roles[e.agent], e.detail.phase);
                }
            }
        }
        Ok(st)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{run_spec, RunOptions, StrategyKind};
    use crate::workload;

    #[test]
    fn jsonl_round_trip_and_replay() {
        let mut spec = workload::eight_agent_instance();
        spec.scheduler = StrategyKind::RandomSubset;
        let r = run_spec(&spec, &RunOptions::for_spec(&spec)).unwrap();
        let t = r.trace.unwrap();
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), t.events.len());
        let back = ExecutionTrace::read_jsonl(spec, text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.replay().unwrap(), ObservedState::of(&r.final_config));
    }

    #[test]
    fn event_keys_are_fixed() {
        let spec = workload::eight_agent_instance();
        let r = run_spec(&spec, &RunOptions::for_spec(&spec)).unwrap();
        let first = r.trace.unwrap().to_jsonl().lines().next().unwrap().to_string();
        let v: serde_json::Value = serde_json::from_str(&first).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["action", "agent", "detail", "node", "role", "t"]);
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let spec = workload::eight_agent_instance();
        let r = run_spec(&spec, &RunOptions::for_spec(&spec)).unwrap();
        let mut t = r.trace.unwrap();
        let i = t.events.iter().position(|e| e.action == Action::Move).unwrap();
        t.events[i].detail.to = Some((t.events[i].node + 2) % spec.n);
        assert!(matches!(t.replay(), Err(TraceError::BadMove { .. })));
        assert!(matches!(
            ExecutionTrace::read_jsonl(spec, "{not json}\n".as_bytes()),
            Err(TraceError::Parse { line: 1, .. })
        ));
    }
}
