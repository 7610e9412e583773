//! Deterministic gathering for anonymous agents that know `k`.
//!
//! Each agent walks once around the ring recording the gaps between
//! consecutive initial nodes. From its own gap sequence it computes the
//! lexicographically least rotation and that rotation's period. If the period
//! is below `g` the instance is unsolvable (the placement's symmetry can never
//! be broken) and the agent halts where it started. Otherwise every agent
//! walks to the nearest start node whose sequence equals the least rotation;
//! exactly `period` agents arrive at each such node.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ring_model::{Exit, Motion, Role, StepContext, Whiteboard};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("a distance sequence needs at least one gap")]
    Empty,
    #[error("gap {index} is zero; gaps between distinct nodes are at least 1")]
    ZeroGap { index: usize },
    #[error("shift offset {x} is not below the sequence length {k}")]
    OffsetOutOfRange { x: usize, k: usize },
}

/// Gaps between consecutive agents going forward; entries are ≥ 1 and sum to `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DistanceSequence(Vec<usize>);

impl DistanceSequence {
    pub fn new(gaps: Vec<usize>) -> Result<Self, SequenceError> {
        if gaps.is_empty() {
            return Err(SequenceError::Empty);
        }
        if let Some(index) = gaps.iter().position(|&d| d == 0) {
            return Err(SequenceError::ZeroGap { index });
        }
        Ok(DistanceSequence(gaps))
    }

    /// Gaps of a placement read forward starting from the lowest occupied node.
    pub fn from_positions(n: usize, positions: &[usize]) -> Result<Self, SequenceError> {
        let mut p = positions.to_vec();
        p.sort_unstable();
        let gaps = (0..p.len()).map(|i| (p[(i + 1) % p.len()] + n - p[i]) % n).collect::<Vec<_>>();
        let gaps = if p.len() == 1 { vec![n] } else { gaps };
        DistanceSequence::new(gaps)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ring size implied by the gaps.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Node offsets of the agents relative to the first one.
    pub fn offsets(&self) -> Vec<usize> {
        self.0
            .iter()
            .scan(0, |acc, &d| {
                let here = *acc;
                *acc += d;
                Some(here)
            })
            .collect()
    }
}

impl fmt::Display for DistanceSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `(d_x, …, d_{k-1}, d_0, …, d_{x-1})`.
pub fn shift(d: &DistanceSequence, x: usize) -> Result<DistanceSequence, SequenceError> {
    let k = d.len();
    if x >= k {
        return Err(SequenceError::OffsetOutOfRange { x, k });
    }
    let mut v = d.0.clone();
    v.rotate_left(x);
    Ok(DistanceSequence(v))
}

/// Least `p > 0` with `shift(D, p) = D`; `k` when `D` is aperiodic.
pub fn period(d: &DistanceSequence) -> usize {
    // Smallest period of a cyclic word is its smallest border-derived period
    // when that period divides the length.
    let s = &d.0;
    let k = s.len();
    let mut fail = vec![0usize; k];
    let mut j = 0;
    for i in 1..k {
        while j > 0 && s[i] != s[j] {
            j = fail[j - 1];
        }
        if s[i] == s[j] {
            j += 1;
        }
        fail[i] = j;
    }
    let p = k - fail[k - 1];
    if k.is_multiple_of(p) {
        p
    } else {
        k
    }
}

/// Lexicographically least rotation and the least offset producing it.
pub fn lex_min_rotation(d: &DistanceSequence) -> (DistanceSequence, usize) {
    let s = &d.0;
    let k = s.len();
    // Two-candidate scan over the doubled word.
    let (mut i, mut j, mut l) = (0usize, 1usize, 0usize);
    while i < k && j < k && l < k {
        let (a, b) = (s[(i + l) % k], s[(j + l) % k]);
        if a == b {
            l += 1;
            continue;
        }
        if a > b {
            i += l + 1;
        } else {
            j += l + 1;
        }
        if i == j {
            j += 1;
        }
        l = 0;
    }
    let x = i.min(j);
    // A periodic word is minimal at several offsets; the least is x mod period.
    let x = x % period(d);
    (shift(d, x).expect("offset below length"), x)
}

/// Solvability of the placement whose gaps are `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub d_min: DistanceSequence,
    pub period: usize,
    pub solvable: bool,
    /// `k / period` when solvable.
    pub expected_groups: Option<usize>,
}

pub fn is_solvable(d: &DistanceSequence, g: usize) -> SolvabilityReport {
    let (d_min, _) = lex_min_rotation(d);
    let p = period(&d_min);
    let solvable = p >= g;
    SolvabilityReport { d_min, period: p, solvable, expected_groups: solvable.then(|| d.len() / p) }
}

/// Edges from the agent owning `d` to the agent `x` positions ahead.
pub fn relocation_offset(d: &DistanceSequence, x: usize) -> usize {
    d.0[..x].iter().sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnonPc {
    #[default]
    Circulate,
    Relocate,
    Done,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnonRegisters {
    pub total: usize,
    pub dis: usize,
    pub gaps: Vec<usize>,
    pub x: usize,
    pub remaining_moves: usize,
    pub pc: AnonPc,
    pub exit: Option<Exit>,
}

pub fn step(ctx: &StepContext, role: &mut Role, r: &mut AnonRegisters, wb: &mut Whiteboard) -> Motion {
    if *role != Role::Active {
        return Motion::Stay;
    }
    match r.pc {
        AnonPc::Circulate => {
            if r.dis > 0 && wb.initial {
                r.gaps.push(r.dis);
                r.total += 1;
                r.dis = 0;
                if r.total == ctx.k {
                    return analyze(ctx, role, r);
                }
            }
            r.dis += 1;
            Motion::Forward
        }
        AnonPc::Relocate => relocate(role, r),
        AnonPc::Done => Motion::Stay,
    }
}

fn analyze(ctx: &StepContext, role: &mut Role, r: &mut AnonRegisters) -> Motion {
    let d = DistanceSequence::new(r.gaps.clone()).expect("circulation records positive gaps");
    let report = is_solvable(&d, ctx.g);
    if !report.solvable {
        r.exit = Some(Exit::Unsolvable);
        r.pc = AnonPc::Done;
        *role = Role::Final;
        return Motion::Stay;
    }
    let (_, x) = lex_min_rotation(&d);
    r.x = x;
    r.remaining_moves = relocation_offset(&d, x);
    r.pc = AnonPc::Relocate;
    relocate(role, r)
}

fn relocate(role: &mut Role, r: &mut AnonRegisters) -> Motion {
    if r.remaining_moves == 0 {
        r.exit = Some(Exit::Relocated);
        r.pc = AnonPc::Done;
        *role = Role::Final;
        Motion::Stay
    } else {
        r.remaining_moves -= 1;
        Motion::Forward
    }
}
