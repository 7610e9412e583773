//! Randomized election for anonymous agents that know `k`.
//!
//! Active agents run the same three-id comparison as the distinct model but
//! draw a fresh random campaign id every phase. A tie among the three ids
//! turns the agent into a semi-leader. Semi-leaders post a random id, tour
//! the ring leaving tour flags on the nodes of ordinary agents, and keep the
//! minimum: a unique minimum becomes the leader, a shared minimum starts
//! another round with fresh ids. Anyone who sees a tour flag retires, so at
//! most one of the two ways to leadership ever succeeds.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::algo_distinct::{self, probe, Marker, Probe};
use crate::ring_model::{Motion, Role, StepContext, Whiteboard};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomPc {
    #[default]
    Post,
    SeekFirst,
    SeekSecond,
    SemiEntry,
    Circulate,
    Compare,
    Done,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomRegisters {
    pub phase: u32,
    pub id1: u64,
    pub id2: u64,
    pub id3: u64,
    pub semi_observe: bool,
    /// Stopped at a node already advanced past our phase.
    pub overtaken: bool,
    /// Initial nodes skipped since our last post.
    pub passed: usize,
    pub semi_phase: u32,
    pub semi_id: u64,
    pub agent_count: usize,
    pub is_min: bool,
    pub is_unique: bool,
    pub leader_observe: bool,
    pub pc: RandomPc,
    pub marker: Marker,
}

/// Uniform id of `bits` bits taken from the top of one 64-bit draw.
pub fn draw_random_id(bits: u32, rng: &mut dyn RngCore) -> u64 {
    let bits = bits.clamp(1, 64);
    rng.next_u64() >> (64 - bits)
}

pub fn step(
    ctx: &StepContext,
    role: &mut Role,
    r: &mut RandomRegisters,
    wb: &mut Whiteboard,
    rng: &mut dyn RngCore,
) -> Motion {
    match *role {
        Role::Active => active_step(ctx, role, r, wb, rng),
        Role::SemiLeader => semi_step(ctx, role, r, wb, rng),
        Role::Leader => algo_distinct::leader_step(ctx, role, &mut r.marker, wb),
        Role::Inactive => algo_distinct::inactive_step(role, wb),
        Role::Moving => algo_distinct::moving_step(role, wb),
        Role::Final => Motion::Stay,
    }
}

fn post(ctx: &StepContext, r: &mut RandomRegisters, wb: &mut Whiteboard, rng: &mut dyn RngCore) {
    r.id1 = draw_random_id(ctx.id_bits, rng);
    r.passed = 0;
    wb.phase = r.phase;
    wb.id = r.id1;
}

fn observe(r: &mut RandomRegisters, wb: &Whiteboard) {
    if wb.tour_flag || wb.semi_leader_flag {
        r.semi_observe = true;
    }
    if wb.phase > r.phase {
        r.overtaken = true;
    }
}

fn retire(role: &mut Role, r: &mut RandomRegisters, wb: &mut Whiteboard) -> Motion {
    wb.inactive = true;
    *role = Role::Inactive;
    r.pc = RandomPc::Done;
    Motion::Stay
}

fn crown(role: &mut Role, r: &mut RandomRegisters, wb: &mut Whiteboard) -> Motion {
    wb.leader_flag = true;
    *role = Role::Leader;
    r.pc = RandomPc::Done;
    Motion::Stay
}

fn active_step(
    ctx: &StepContext,
    role: &mut Role,
    r: &mut RandomRegisters,
    wb: &mut Whiteboard,
    rng: &mut dyn RngCore,
) -> Motion {
    match r.pc {
        RandomPc::Post => {
            r.phase = r.phase.max(1);
            post(ctx, r, wb, rng);
            r.pc = RandomPc::SeekFirst;
            Motion::Forward
        }
        RandomPc::SeekFirst => match probe(r.phase, wb) {
            Probe::Skip => {
                if wb.initial {
                    r.passed += 1;
                }
                Motion::Forward
            }
            Probe::Wait => Motion::Stay,
            Probe::Stop => {
                observe(r, wb);
                if r.passed + 1 == ctx.k {
                    // Every other start node was skipped: back at our own post.
                    return if r.semi_observe || r.overtaken { retire(role, r, wb) } else { crown(role, r, wb) };
                }
                r.id2 = wb.id;
                r.pc = RandomPc::SeekSecond;
                Motion::Forward
            }
        },
        RandomPc::SeekSecond => match probe(r.phase, wb) {
            Probe::Skip => Motion::Forward,
            Probe::Wait => Motion::Stay,
            Probe::Stop => {
                observe(r, wb);
                r.id3 = wb.id;
                if r.semi_observe || r.overtaken {
                    retire(role, r, wb)
                } else if r.phase == wb.phase && (r.id1 == r.id2 || r.id2 == r.id3) {
                    *role = Role::SemiLeader;
                    r.pc = RandomPc::SemiEntry;
                    Motion::Stay
                } else if r.id2 >= r.id1.min(r.id3) {
                    retire(role, r, wb)
                } else if r.phase >= ctx.phases {
                    crown(role, r, wb)
                } else {
                    r.phase += 1;
                    post(ctx, r, wb, rng);
                    r.pc = RandomPc::SeekFirst;
                    Motion::Forward
                }
            }
        },
        _ => Motion::Stay,
    }
}

fn start_round(ctx: &StepContext, r: &mut RandomRegisters, wb: &mut Whiteboard, rng: &mut dyn RngCore) -> Motion {
    wb.semi_phase = r.semi_phase;
    r.semi_id = draw_random_id(ctx.id_bits, rng);
    wb.id = r.semi_id;
    r.agent_count = 0;
    r.is_min = true;
    r.is_unique = true;
    r.leader_observe = false;
    r.pc = RandomPc::Circulate;
    Motion::Forward
}

fn semi_step(
    ctx: &StepContext,
    role: &mut Role,
    r: &mut RandomRegisters,
    wb: &mut Whiteboard,
    rng: &mut dyn RngCore,
) -> Motion {
    match r.pc {
        RandomPc::SemiEntry => {
            if wb.tour_flag {
                return retire(role, r, wb);
            }
            wb.semi_leader_flag = true;
            r.semi_phase = 1;
            start_round(ctx, r, wb, rng)
        }
        RandomPc::Circulate => {
            if !wb.initial {
                return Motion::Forward;
            }
            r.agent_count += 1;
            if wb.leader_flag {
                r.leader_observe = true;
            }
            if r.agent_count >= ctx.k {
                judge(ctx, role, r, wb, rng)
            } else if wb.semi_leader_flag {
                compare(r, wb)
            } else {
                wb.tour_flag = true;
                Motion::Forward
            }
        }
        RandomPc::Compare => compare(r, wb),
        _ => Motion::Stay,
    }
}

/// Compare against another semi-leader's post, waiting while it lags a round.
fn compare(r: &mut RandomRegisters, wb: &Whiteboard) -> Motion {
    if !wb.semi_leader_flag {
        // It retired while we waited.
        r.pc = RandomPc::Circulate;
        return Motion::Forward;
    }
    if wb.semi_phase < r.semi_phase {
        r.pc = RandomPc::Compare;
        return Motion::Stay;
    }
    if wb.semi_phase > r.semi_phase {
        // It already saw a tie we were part of; do not claim uniqueness.
        r.is_unique = false;
    } else {
        if wb.id < r.semi_id {
            r.is_min = false;
        }
        if wb.id == r.semi_id {
            r.is_unique = false;
        }
    }
    r.pc = RandomPc::Circulate;
    Motion::Forward
}

fn judge(
    ctx: &StepContext,
    role: &mut Role,
    r: &mut RandomRegisters,
    wb: &mut Whiteboard,
    rng: &mut dyn RngCore,
) -> Motion {
    if r.leader_observe {
        retire(role, r, wb)
    } else if !r.is_min {
        wb.semi_leader_flag = false;
        retire(role, r, wb)
    } else if r.is_unique {
        crown(role, r, wb)
    } else {
        r.semi_phase += 1;
        start_round(ctx, r, wb, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo_distinct::MarkingRule;
    use crate::ring_model::Model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(k: usize, g: usize) -> StepContext {
        StepContext {
            model: Model::Random,
            g,
            k,
            phases: crate::workload::ceil_log2(g as u64),
            id_bits: 3 * crate::workload::ceil_log2(k as u64),
            marking: MarkingRule::Fixed,
        }
    }

    fn initial() -> Whiteboard {
        Whiteboard { initial: true, ..Whiteboard::default() }
    }

    #[test]
    fn ids_fit_in_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for bits in [1, 3, 9, 63, 64] {
            for _ in 0..200 {
                let id = draw_random_id(bits, &mut rng);
                assert!(bits == 64 || id < (1u64 << bits));
            }
        }
    }

    #[test]
    fn id_draws_are_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hist = [0u32; 8];
        for _ in 0..80_000 {
            hist[draw_random_id(3, &mut rng) as usize] += 1;
        }
        assert!(hist.iter().all(|&c| (9_000..11_000).contains(&c)), "{hist:?}");
    }

    #[test]
    fn tie_makes_semi_leader() {
        let c = ctx(8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut r = RandomRegisters { phase: 1, id1: 4, id2: 4, pc: RandomPc::SeekSecond, ..Default::default() };
        let mut role = Role::Active;
        let mut wb = Whiteboard { phase: 1, id: 9, ..initial() };
        assert_eq!(step(&c, &mut role, &mut r, &mut wb, &mut rng), Motion::Stay);
        assert_eq!(role, Role::SemiLeader);
        step(&c, &mut role, &mut r, &mut wb, &mut rng);
        assert!(wb.semi_leader_flag);
        assert_eq!((wb.semi_phase, wb.id), (1, r.semi_id));
    }

    #[test]
    fn tour_flag_retires_active_agent() {
        let c = ctx(8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut r = RandomRegisters { phase: 1, id1: 4, pc: RandomPc::SeekFirst, ..Default::default() };
        let mut role = Role::Active;
        let mut wb = Whiteboard { phase: 1, id: 2, tour_flag: true, ..initial() };
        step(&c, &mut role, &mut r, &mut wb, &mut rng);
        let mut wb = Whiteboard { phase: 1, id: 9, ..initial() };
        step(&c, &mut role, &mut r, &mut wb, &mut rng);
        assert_eq!(role, Role::Inactive);
        assert!(wb.inactive);
    }

    #[test]
    fn last_phase_winner_sets_leader_flag() {
        let c = ctx(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut r = RandomRegisters { phase: 1, id1: 5, id2: 1, pc: RandomPc::SeekSecond, ..Default::default() };
        let mut role = Role::Active;
        let mut wb = Whiteboard { phase: 1, id: 7, ..initial() };
        step(&c, &mut role, &mut r, &mut wb, &mut rng);
        assert_eq!(role, Role::Leader);
        assert!(wb.leader_flag);
    }

    #[test]
    fn sole_survivor_leads_without_touring() {
        let c = ctx(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut r = RandomRegisters::default();
        let mut role = Role::Active;
        let mut own = initial();
        step(&c, &mut role, &mut r, &mut own, &mut rng);
        for _ in 0..3 {
            let mut parked = Whiteboard { inactive: true, phase: 0, ..initial() };
            assert_eq!(step(&c, &mut role, &mut r, &mut parked, &mut rng), Motion::Forward);
        }
        assert_eq!(step(&c, &mut role, &mut r, &mut own, &mut rng), Motion::Stay);
        assert_eq!(role, Role::Leader);
        assert!(own.leader_flag);
    }

    #[test]
    fn sole_survivor_yields_to_a_touring_semi_leader() {
        let c = ctx(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut r = RandomRegisters::default();
        let mut role = Role::Active;
        let mut own = initial();
        step(&c, &mut role, &mut r, &mut own, &mut rng);
        let mut parked = Whiteboard { inactive: true, phase: 0, ..initial() };
        step(&c, &mut role, &mut r, &mut parked, &mut rng);
        own.tour_flag = true;
        step(&c, &mut role, &mut r, &mut own, &mut rng);
        assert_eq!(role, Role::Inactive);
    }

    #[test]
    fn semi_leader_compares_and_judges() {
        let c = ctx(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut role = Role::SemiLeader;
        let mut r = RandomRegisters { pc: RandomPc::SemiEntry, ..Default::default() };
        let mut own = initial();
        assert_eq!(step(&c, &mut role, &mut r, &mut own, &mut rng), Motion::Forward);
        // An ordinary agent's node gets a tour flag.
        let mut plain = initial();
        step(&c, &mut role, &mut r, &mut plain, &mut rng);
        assert!(plain.tour_flag);
        // Another semi-leader with a larger id, lagging one round: wait.
        r.semi_phase = 2;
        let mut other = Whiteboard { semi_leader_flag: true, semi_phase: 1, id: r.semi_id + 1, ..initial() };
        assert_eq!(step(&c, &mut role, &mut r, &mut other, &mut rng), Motion::Stay);
        other.semi_phase = 2;
        assert_eq!(step(&c, &mut role, &mut r, &mut other, &mut rng), Motion::Forward);
        assert!(r.is_min && r.is_unique);
        // Back home after k initial nodes: unique minimum wins.
        step(&c, &mut role, &mut r, &mut own, &mut rng);
        assert_eq!(role, Role::Leader);
        assert!(own.leader_flag);
    }
}
