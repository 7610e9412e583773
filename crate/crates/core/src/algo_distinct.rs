//! Deterministic election for agents with distinct identifiers, followed by
//! leader-driven marking and the final walk to the marked nodes.
//!
//! Election runs `ceil(log2 g)` phases. In each phase an active agent posts
//! its campaign id and walks forward collecting the ids of the next two
//! active agents of the same phase. It survives only if the middle id is the
//! strict local minimum. Survivors at the last phase become leaders; between
//! two consecutive leaders there are at least `g - 1` inactive agents.
//!
//! The second part is shared with the randomized model.

use serde::{Deserialize, Serialize};

use crate::ring_model::{Mark, Motion, Role, StepContext, Whiteboard};

/// How a leader decides which inactive nodes receive `isGather = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkingRule {
    /// Increment the counter, then mark 1 when it wraps to zero. The first
    /// 1 lands on the `(g-1)`-th inactive node, so every segment gets one.
    #[default]
    Fixed,
    /// Test the counter first and increment afterwards. The first 1 lands
    /// one node later, and a segment of exactly `g-1` inactive nodes gets
    /// none; with no mark anywhere, moving agents wait forever.
    CheckFirst,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistinctPc {
    #[default]
    Post,
    SeekFirst,
    SeekSecond,
    Done,
}

/// Leader counter for the marking walk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Marker {
    pub count: u32,
    pub started: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistinctRegisters {
    pub id: u64,
    pub phase: u32,
    pub id1: u64,
    pub id2: u64,
    pub id3: u64,
    /// Stopped at a node already advanced past our phase.
    pub overtaken: bool,
    pub pc: DistinctPc,
    pub marker: Marker,
}

impl DistinctRegisters {
    pub fn new(id: u64) -> Self {
        DistinctRegisters {
            id,
            phase: 1,
            id1: id,
            id2: 0,
            id3: 0,
            overtaken: false,
            pc: DistinctPc::Post,
            marker: Marker::default(),
        }
    }
}

/// Outcome of looking at one node while searching for the next campaign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Probe {
    /// Not a campaign node of this phase: keep walking.
    Skip,
    /// The node's owner has not posted this phase yet.
    Wait,
    /// A campaign id of this phase (or later) is readable here.
    Stop,
}

/// The skip/wait/stop rule applied at every node during a search.
///
/// Parked nodes (inactive, or hosting a semi-leader) from an earlier phase
/// are skipped. A parked node of the searcher's phase or later is a stop:
/// a later phase there means a faster agent already settled this node's
/// comparison, and it must not be mistaken for the next campaign.
pub(crate) fn probe(phase: u32, wb: &Whiteboard) -> Probe {
    let parked = wb.inactive || wb.semi_leader_flag;
    if !wb.initial || (parked && wb.phase < phase) {
        Probe::Skip
    } else if !parked && phase > wb.phase {
        Probe::Wait
    } else {
        Probe::Stop
    }
}

fn post(r: &DistinctRegisters, wb: &mut Whiteboard) {
    wb.phase = r.phase;
    wb.id = r.id1;
}

pub fn step(ctx: &StepContext, role: &mut Role, r: &mut DistinctRegisters, wb: &mut Whiteboard) -> Motion {
    match *role {
        Role::Active => active_step(ctx, role, r, wb),
        Role::Leader => leader_step(ctx, role, &mut r.marker, wb),
        Role::Inactive => inactive_step(role, wb),
        Role::Moving => moving_step(role, wb),
        Role::SemiLeader | Role::Final => Motion::Stay,
    }
}

fn active_step(ctx: &StepContext, role: &mut Role, r: &mut DistinctRegisters, wb: &mut Whiteboard) -> Motion {
    match r.pc {
        DistinctPc::Post => {
            post(r, wb);
            r.pc = DistinctPc::SeekFirst;
            Motion::Forward
        }
        DistinctPc::SeekFirst => match probe(r.phase, wb) {
            Probe::Skip => Motion::Forward,
            Probe::Wait => Motion::Stay,
            Probe::Stop => {
                if wb.phase == r.phase && wb.id == r.id1 {
                    // Walked the whole ring back to our own post: sole survivor.
                    *role = Role::Leader;
                    r.pc = DistinctPc::Done;
                    return Motion::Stay;
                }
                r.overtaken |= wb.phase > r.phase;
                r.id2 = wb.id;
                r.pc = DistinctPc::SeekSecond;
                Motion::Forward
            }
        },
        DistinctPc::SeekSecond => match probe(r.phase, wb) {
            Probe::Skip => Motion::Forward,
            Probe::Wait => Motion::Stay,
            Probe::Stop => {
                r.overtaken |= wb.phase > r.phase;
                r.id3 = wb.id;
                if r.overtaken || r.id2 >= r.id1.min(r.id3) {
                    wb.inactive = true;
                    *role = Role::Inactive;
                    r.pc = DistinctPc::Done;
                    Motion::Stay
                } else if r.phase >= ctx.phases {
                    *role = Role::Leader;
                    r.pc = DistinctPc::Done;
                    Motion::Stay
                } else {
                    r.phase += 1;
                    r.id1 = r.id2;
                    r.overtaken = false;
                    post(r, wb);
                    r.pc = DistinctPc::SeekFirst;
                    Motion::Forward
                }
            }
        },
        DistinctPc::Done => Motion::Stay,
    }
}

/// Leader walk: mark its own node 0, then give every `g`-th inactive node of
/// its segment a 1 and the rest a 0, stopping at the next leader's mark.
pub fn leader_step(ctx: &StepContext, role: &mut Role, m: &mut Marker, wb: &mut Whiteboard) -> Motion {
    if !m.started {
        m.started = true;
        m.count = 1;
        wb.is_gather = Mark::Zero;
        return Motion::Forward;
    }
    if wb.is_gather != Mark::Unset {
        *role = Role::Moving;
        return Motion::Stay;
    }
    if !wb.initial {
        return Motion::Forward;
    }
    if !wb.inactive {
        // An agent still deciding; it will become inactive or a leader.
        return Motion::Stay;
    }
    let g = ctx.g as u32;
    let bit = match ctx.marking {
        MarkingRule::Fixed => {
            m.count = (m.count + 1) % g;
            m.count == 0
        }
        MarkingRule::CheckFirst => {
            let hit = m.count == 0;
            m.count = (m.count + 1) % g;
            hit
        }
    };
    wb.is_gather = if bit { Mark::One } else { Mark::Zero };
    Motion::Forward
}

pub fn inactive_step(role: &mut Role, wb: &Whiteboard) -> Motion {
    if wb.is_gather != Mark::Unset {
        *role = Role::Moving;
    }
    Motion::Stay
}

/// Walk forward until a node marked 1; wait at unmarked initial nodes.
pub fn moving_step(role: &mut Role, wb: &Whiteboard) -> Motion {
    match wb.is_gather {
        Mark::One => {
            *role = Role::Final;
            Motion::Stay
        }
        Mark::Unset if wb.initial => Motion::Stay,
        _ => Motion::Forward,
    }
}
