//! Summary CSV rows and the verdict-to-exit-code mapping.

use std::io::Write;

use anyhow::Result;
use ring_gather::verifier::MoveBreakdown;
use ring_gather::{InstanceSpec, Model, RunOutcome, RunResult, StrategyKind, VerdictKind};

pub const SCHEMA_LINE: &str = "# ring-gather-csv v1";

pub const HEADER: [&str; 15] = [
    "model",
    "n",
    "k",
    "g",
    "seed",
    "scheduler",
    "outcome",
    "steps",
    "total_moves",
    "active_moves",
    "leader_moves",
    "moving_moves",
    "semi_moves",
    "anon_moves",
    "verdict",
];

pub fn exit_code(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::Gathered => 0,
        VerdictKind::Unsolvable => 2,
        VerdictKind::Violation => 3,
        VerdictKind::Timeout => 4,
    }
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub model: Model,
    pub n: usize,
    pub k: usize,
    pub g: usize,
    pub seed: u64,
    pub scheduler: StrategyKind,
    pub outcome: RunOutcome,
    pub steps: u64,
    pub breakdown: MoveBreakdown,
    pub verdict: VerdictKind,
}

impl SummaryRow {
    pub fn new(spec: &InstanceSpec, result: &RunResult, verdict: VerdictKind) -> Self {
        SummaryRow {
            model: spec.model,
            n: spec.n,
            k: spec.k(),
            g: spec.g,
            seed: spec.seed,
            scheduler: spec.scheduler,
            outcome: result.outcome,
            steps: result.steps(),
            breakdown: result.breakdown(),
            verdict,
        }
    }

    pub fn label(&self) -> String {
        format!("{} n={} k={} g={} {} seed={}", self.model, self.n, self.k, self.g, self.scheduler, self.seed)
    }

    fn record(&self) -> [String; 15] {
        let b = &self.breakdown;
        [
            self.model.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.g.to_string(),
            self.seed.to_string(),
            self.scheduler.to_string(),
            self.outcome.as_str().to_string(),
            self.steps.to_string(),
            b.total.to_string(),
            b.active.to_string(),
            b.leader.to_string(),
            b.moving.to_string(),
            b.semi_leader.to_string(),
            b.anon.to_string(),
            self.verdict.to_string(),
        ]
    }
}

pub fn write_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(HEADER)?;
    for r in rows {
        csv.write_record(r.record())?;
    }
    csv.flush()?;
    Ok(())
}
