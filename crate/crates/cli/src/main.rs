mod instance;
mod summary;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use ring_gather::algo_anon::{is_solvable, DistanceSequence};
use ring_gather::scheduler::explore::{explore_bounded, ExploreCaps};
use ring_gather::scheduler::{ExecutionTrace, ObservedState};
use ring_gather::verifier::run_bound_failures;
use ring_gather::workload::random_instance;
use ring_gather::{run_spec, run_verdict, MarkingRule, Model, RunOptions, StrategyKind, VerdictKind};

use instance::InstanceArgs;
use summary::{exit_code, SummaryRow};

#[derive(Parser, Debug)]
#[command(name = "ring-gather", version, about = "Partial gathering of mobile agents on a ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one instance.
    Run {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Write the JSONL event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write a one-row CSV summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run every combination of a parameter grid on random placements.
    Sweep(SweepArgs),
    /// Report the minimal rotation, period and solvability of a gap sequence.
    Analyze {
        #[arg(long, value_delimiter = ',', required = true)]
        gaps: Vec<usize>,
        #[arg(long)]
        g: usize,
    },
    /// Enumerate every fair interleaving of a small deterministic instance.
    Explore {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Longest schedule explored, in scheduling decisions.
        #[arg(long, default_value_t = ExploreCaps::default().branch_cap)]
        max_depth: usize,
        #[arg(long, default_value_t = ExploreCaps::default().state_cap)]
        max_states: usize,
        /// Write the full report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a recorded trace and check it against a fresh run of the instance.
    Verify {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "distinct")]
    models: Vec<Model>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Thresholds; values above k are skipped for that k.
    #[arg(long, value_delimiter = ',', required = true)]
    g: Vec<usize>,
    /// Seeds per cell.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "synchronous,round_robin,random_subset,lagger")]
    schedulers: Vec<StrategyKind>,
    /// Random-id length, applied to random-model rows.
    #[arg(long)]
    id_bits: Option<u32>,
    #[arg(long)]
    step_limit: Option<u64>,
    #[arg(long)]
    paper_literal_marking: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let res = match cli.command {
        Command::Run { inst, trace, summary } => cmd_run(&inst, trace, summary),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Analyze { gaps, g } => cmd_analyze(gaps, g),
        Command::Explore { inst, max_depth, max_states, report } => cmd_explore(&inst, max_depth, max_states, report),
        Command::Verify { inst, trace } => cmd_verify(&inst, trace),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_run(inst: &InstanceArgs, trace: Option<PathBuf>, summary: Option<PathBuf>) -> Result<u8> {
    let spec = inst.resolve()?;
    let mut opts = RunOptions::for_spec(&spec);
    opts.marking = inst.marking();
    opts.record_trace = trace.is_some();
    let result = run_spec(&spec, &opts)?;
    let verdict = run_verdict(&result);

    if let (Some(path), Some(t)) = (&trace, &result.trace) {
        let mut w = create(path)?;
        t.write_jsonl(&mut w)?;
        w.flush()?;
    }
    let row = SummaryRow::new(&spec, &result, verdict.kind);
    if let Some(path) = &summary {
        let mut w = create(path)?;
        summary::write_csv(&mut w, std::slice::from_ref(&row))?;
        w.flush()?;
    }

    println!(
        "{} after {} steps, {} moves; groups {:?}",
        verdict.kind,
        result.steps(),
        row.breakdown.total,
        verdict.group_sizes
    );
    for d in &verdict.details {
        println!("  {d}");
    }
    if verdict.kind == VerdictKind::Gathered {
        for f in run_bound_failures(&result) {
            eprintln!("bound exceeded: {f}");
        }
    }
    Ok(exit_code(verdict.kind))
}

struct Cell {
    model: Model,
    n: usize,
    k: usize,
    g: usize,
    scheduler: StrategyKind,
    seed: u64,
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let mut cells = Vec::new();
    for &model in &args.models {
        for &n in &args.n {
            for &k in args.k.iter().filter(|&&k| k <= n) {
                for &g in args.g.iter().filter(|&&g| (2..=k).contains(&g)) {
                    for &scheduler in &args.schedulers {
                        for seed in args.first_seed..args.first_seed + args.seeds {
                            cells.push(Cell { model, n, k, g, scheduler, seed });
                        }
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        bail!("the grid is empty");
    }
    let marking = if args.paper_literal_marking { MarkingRule::CheckFirst } else { MarkingRule::Fixed };

    let rows: Vec<(SummaryRow, Vec<String>)> = cells
        .par_iter()
        .map(|c| {
            let mut spec = random_instance(c.model, c.n, c.k, c.g, c.seed, c.scheduler);
            spec.step_limit = args.step_limit;
            if c.model == Model::Random {
                spec.id_bits_override = args.id_bits;
            }
            let mut opts = RunOptions::for_spec(&spec);
            opts.record_trace = false;
            opts.marking = marking;
            let result = run_spec(&spec, &opts)?;
            let verdict = run_verdict(&result);
            let mut problems = Vec::new();
            let expected = match c.model {
                Model::Anon => {
                    let d = DistanceSequence::from_positions(spec.n, &spec.positions())
                        .map_err(|e| anyhow::anyhow!("{e}"))?;
                    if is_solvable(&d, spec.g).solvable {
                        VerdictKind::Gathered
                    } else {
                        VerdictKind::Unsolvable
                    }
                }
                _ => VerdictKind::Gathered,
            };
            if verdict.kind != expected {
                problems.push(format!("verdict {} (expected {expected})", verdict.kind));
            } else if verdict.kind == VerdictKind::Gathered {
                problems.extend(run_bound_failures(&result));
            }
            Ok((SummaryRow::new(&spec, &result, verdict.kind), problems))
        })
        .collect::<Result<_>>()?;

    let only_rows: Vec<SummaryRow> = rows.iter().map(|(r, _)| r.clone()).collect();
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            summary::write_csv(&mut w, &only_rows)?;
            w.flush()?;
        }
        None => summary::write_csv(std::io::stdout().lock(), &only_rows)?,
    }

    let failing: Vec<_> = rows.iter().filter(|(_, p)| !p.is_empty()).collect();
    eprintln!("{} runs, {} failing", rows.len(), failing.len());
    for (row, problems) in &failing {
        eprintln!("FAIL {}: {}", row.label(), problems.join("; "));
    }
    Ok(if failing.is_empty() { 0 } else { 3 })
}

fn cmd_analyze(gaps: Vec<usize>, g: usize) -> Result<u8> {
    let d = DistanceSequence::new(gaps).map_err(|e| anyhow::anyhow!("bad gaps: {e}"))?;
    let r = is_solvable(&d, g);
    println!("n: {}", d.total());
    println!("k: {}", d.len());
    println!("D_min: {}", r.d_min);
    println!("period: {}", r.period);
    println!("solvable: {}", r.solvable);
    if let Some(groups) = r.expected_groups {
        println!("expected_groups: {groups}");
    }
    Ok(if r.solvable { 0 } else { 2 })
}

fn cmd_explore(inst: &InstanceArgs, max_depth: usize, max_states: usize, report: Option<PathBuf>) -> Result<u8> {
    let spec = inst.resolve()?;
    let caps = ExploreCaps { branch_cap: max_depth, state_cap: max_states };
    let r = explore_bounded(&spec, caps, inst.marking())?;
    println!("states: {}", r.states);
    println!("edges: {}", r.edges);
    for (kind, digest) in &r.outcomes {
        println!("outcome: {kind} {}", &digest[..digest.len().min(16)]);
    }
    for c in r.violations.iter().chain(&r.livelocks) {
        println!("{:?}: {} (schedule length {})", c.kind, c.description, c.schedule.len());
    }
    if let Some(cap) = r.cap_exceeded {
        println!("incomplete: {cap:?} cap reached");
    }
    if let Some(path) = &report {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &r)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(if !r.is_clean() {
        3
    } else if r.cap_exceeded.is_some() {
        4
    } else {
        0
    })
}

fn cmd_verify(inst: &InstanceArgs, trace: PathBuf) -> Result<u8> {
    let spec = inst.resolve()?;
    let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
    let recorded = ExecutionTrace::read_jsonl(spec.clone(), BufReader::new(file))?;
    let observed = match recorded.replay() {
        Ok(o) => o,
        Err(e) => {
            println!("trace inconsistent: {e}");
            return Ok(3);
        }
    };
    let mut opts = RunOptions::for_spec(&spec);
    opts.marking = inst.marking();
    let fresh = run_spec(&spec, &opts)?;
    if observed != ObservedState::of(&fresh.final_config) {
        println!("trace replays cleanly but does not match a fresh run of the instance");
        return Ok(3);
    }
    let verdict = run_verdict(&fresh);
    println!(
        "trace of {} events replays to the fresh run's final state; verdict {}",
        recorded.events.len(),
        verdict.kind
    );
    Ok(exit_code(verdict.kind))
}
