//! Instance assembly from an optional JSON file plus inline flags.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ring_gather::algo_anon::DistanceSequence;
use ring_gather::ring_model::AgentSpec;
use ring_gather::workload::random_instance;
use ring_gather::{InstanceSpec, MarkingRule, Model, StrategyKind};

#[derive(Args, Debug, Clone, Default)]
pub struct InstanceArgs {
    /// Instance JSON file; inline flags override its fields.
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<Model>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of agents, placed at random (seeded) when no positions or gaps are given.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub g: Option<usize>,
    /// Comma-separated agent ids, one per agent.
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<u64>>,
    /// Comma-separated gaps between consecutive agents; first agent sits at node 0.
    #[arg(long, value_delimiter = ',', conflicts_with = "positions")]
    pub gaps: Option<Vec<usize>>,
    /// Comma-separated starting nodes.
    #[arg(long, value_delimiter = ',')]
    pub positions: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scheduler: Option<StrategyKind>,
    #[arg(long)]
    pub step_limit: Option<u64>,
    /// Random-id length for the random model.
    #[arg(long)]
    pub id_bits: Option<u32>,
    /// Use the marking rule exactly as originally printed (livelocks for some inputs).
    #[arg(long)]
    pub paper_literal_marking: bool,
}

impl InstanceArgs {
    pub fn marking(&self) -> MarkingRule {
        if self.paper_literal_marking {
            MarkingRule::CheckFirst
        } else {
            MarkingRule::Fixed
        }
    }

    pub fn resolve(&self) -> Result<InstanceSpec> {
        let mut spec = match &self.instance {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<InstanceSpec>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let Some(model) = self.model else { bail!("either an instance file or --model is required") };
                let Some(g) = self.g else { bail!("either an instance file or --g is required") };
                InstanceSpec {
                    n: 0,
                    model,
                    agents: Vec::new(),
                    g,
                    id_bits_override: None,
                    seed: 0,
                    scheduler: StrategyKind::default(),
                    step_limit: None,
                }
            }
        };

        if let Some(m) = self.model {
            spec.model = m;
        }
        if let Some(n) = self.n {
            spec.n = n;
        }
        if let Some(g) = self.g {
            spec.g = g;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(s) = self.scheduler {
            spec.scheduler = s;
        }
        if self.step_limit.is_some() {
            spec.step_limit = self.step_limit;
        }
        if self.id_bits.is_some() {
            spec.id_bits_override = self.id_bits;
        }

        if let Some(gaps) = &self.gaps {
            let d = DistanceSequence::new(gaps.clone()).map_err(|e| anyhow::anyhow!("bad --gaps: {e}"))?;
            spec.n = d.total();
            spec.agents = d.offsets().into_iter().map(|position| AgentSpec { position, id: None }).collect();
        } else if let Some(pos) = &self.positions {
            spec.agents = pos.iter().map(|&position| AgentSpec { position, id: None }).collect();
        } else if let Some(k) = self.k {
            if spec.n == 0 {
                bail!("--k needs --n to place agents");
            }
            if k == 0 || k > spec.n {
                bail!("--k must lie in [1, n]");
            }
            let g = spec.g.clamp(2, k.max(2));
            let placed = random_instance(spec.model, spec.n, k, g, spec.seed, spec.scheduler);
            spec.agents = placed.agents;
        }

        if let Some(ids) = &self.ids {
            if ids.len() != spec.agents.len() {
                bail!("--ids lists {} ids for {} agents", ids.len(), spec.agents.len());
            }
            for (a, &id) in spec.agents.iter_mut().zip(ids) {
                a.id = Some(id);
            }
        }
        match spec.model {
            Model::Distinct => {
                if spec.agents.iter().all(|a| a.id.is_none()) {
                    for (i, a) in spec.agents.iter_mut().enumerate() {
                        a.id = Some(i as u64 + 1);
                    }
                }
            }
            Model::Random | Model::Anon => {
                if self.ids.is_some() {
                    bail!("--ids only applies to the distinct model");
                }
                for a in &mut spec.agents {
                    a.id = None;
                }
            }
        }
        spec.validate().context("invalid instance")?;
        Ok(spec)
    }
}
