use proptest::prelude::*;
use ring_gather::ring_model::Model;
use ring_gather::scheduler::explore::{explore_bounded, ExploreCaps};
use ring_gather::scheduler::{ExecutionTrace, ObservedState};
use ring_gather::verifier::{account_moves, check_leader_invariant, run_bound_failures};
use ring_gather::workload::{from_gaps, instance, random_instance, unsolvable_anon_instance};
use ring_gather::{run_spec, run_verdict, MarkingRule, RunOptions, RunOutcome, StrategyKind, VerdictKind};

fn run_default(spec: &ring_gather::InstanceSpec) -> ring_gather::RunResult {
    run_spec(spec, &RunOptions::for_spec(spec)).unwrap()
}

#[test]
fn replay_reaches_the_recorded_final_state() {
    for model in Model::ALL {
        for scheduler in StrategyKind::ALL {
            let spec = random_instance(model, 20, 6, 3, 11, scheduler);
            let r = run_default(&spec);
            let trace = r.trace.as_ref().unwrap();
            let reread = ExecutionTrace::read_jsonl(spec.clone(), trace.to_jsonl().as_bytes()).unwrap();
            assert_eq!(&reread, trace);
            assert_eq!(reread.replay().unwrap(), ObservedState::of(&r.final_config), "{model} {scheduler}");
        }
    }
}

#[test]
fn identical_inputs_give_identical_traces() {
    for model in Model::ALL {
        let spec = random_instance(model, 24, 8, 4, 3, StrategyKind::RandomSubset);
        let a = run_default(&spec).trace.unwrap().to_jsonl();
        let b = run_default(&spec).trace.unwrap().to_jsonl();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.seed = 4;
        assert_ne!(a, run_default(&other).trace.unwrap().to_jsonl());
    }
}

#[test]
fn two_agents_gather_at_one_node() {
    let spec = instance(Model::Distinct, 2, &[0, 1], Some(&[1, 2]), 2);
    let r = run_default(&spec);
    let v = run_verdict(&r);
    assert_eq!(v.kind, VerdictKind::Gathered);
    assert_eq!(v.group_sizes, vec![2]);
    assert_eq!(r.leaders(), 1);
}

#[test]
fn a_one_step_budget_times_out() {
    let mut spec = from_gaps(Model::Distinct, &[2, 3, 1], 2);
    spec.step_limit = Some(1);
    let r = run_default(&spec);
    assert_eq!(r.outcome, RunOutcome::StepLimit);
    assert_eq!(r.steps(), 1);
    assert_eq!(run_verdict(&r).kind, VerdictKind::Timeout);
}

#[test]
fn unsolvable_anonymous_agents_tour_once_and_stay_home() {
    for seed in 0..5 {
        let spec = unsolvable_anon_instance(seed);
        let r = run_default(&spec);
        assert_eq!(run_verdict(&r).kind, VerdictKind::Unsolvable);
        let b = account_moves(r.trace.as_ref().unwrap()).unwrap();
        assert_eq!(b.anon, (spec.k() * spec.n) as u64);
        assert_eq!(b.total, b.anon);
        for (a, s) in r.final_config.agents.iter().zip(&spec.agents) {
            assert_eq!(a.position, s.position);
        }
    }
}

#[test]
fn trace_accounting_matches_agent_counters() {
    for model in [Model::Distinct, Model::Random] {
        let spec = random_instance(model, 40, 10, 5, 8, StrategyKind::Lagger);
        let r = run_default(&spec);
        let b = account_moves(r.trace.as_ref().unwrap()).unwrap();
        assert_eq!(b, r.breakdown());
        assert_eq!(b.parts_sum(), b.total);
    }
}

#[test]
fn three_agent_anonymous_instances_explore_cleanly() {
    for gaps in [[1, 1, 2], [1, 2, 3], [2, 2, 2]] {
        let g = if gaps == [2, 2, 2] { 2 } else { 3 };
        let spec = from_gaps(Model::Anon, &gaps, g);
        let r = explore_bounded(&spec, ExploreCaps::default(), MarkingRule::Fixed).unwrap();
        assert!(r.is_clean() && r.cap_exceeded.is_none(), "{gaps:?}: {r:?}");
        let expected = if gaps == [2, 2, 2] { VerdictKind::Unsolvable } else { VerdictKind::Gathered };
        assert!(r.outcomes.iter().all(|(v, _)| *v == expected), "{gaps:?}: {:?}", r.outcomes);
    }
}

#[test]
fn three_agent_distinct_instance_explores_cleanly() {
    let spec = instance(Model::Distinct, 5, &[0, 1, 3], Some(&[2, 3, 1]), 2);
    let r = explore_bounded(&spec, ExploreCaps::default(), MarkingRule::Fixed).unwrap();
    assert!(r.is_clean() && r.cap_exceeded.is_none(), "{r:?}");
    assert!(r.outcomes.iter().all(|(v, _)| *v == VerdictKind::Gathered));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_schedule_gathers_within_bounds(
        model_ix in 0usize..2,
        n in 2usize..=20,
        k_frac in 0.0f64..1.0,
        g_frac in 0.0f64..1.0,
        sched_ix in 0usize..4,
        bound in 1usize..=32,
        target in 0usize..16,
        seed in any::<u64>(),
    ) {
        let model = [Model::Distinct, Model::Random][model_ix];
        let k = 2 + ((n.min(10) - 2) as f64 * k_frac).round() as usize;
        let g = 2 + ((k - 2) as f64 * g_frac).round() as usize;
        let spec = random_instance(model, n, k, g, seed, StrategyKind::ALL[sched_ix]);
        let mut opts = RunOptions::for_spec(&spec);
        opts.record_trace = false;
        opts.strategy.fairness_bound = bound;
        opts.strategy.lagger_target = target % k;
        opts.step_limit *= 4;
        let r = run_spec(&spec, &opts).unwrap();
        let v = run_verdict(&r);
        prop_assert_eq!(v.kind, VerdictKind::Gathered, "{:?}", v.details);
        prop_assert_eq!(run_bound_failures(&r), Vec::<String>::new());
        prop_assert!(check_leader_invariant(r.election_snapshot.as_ref().unwrap(), g));
    }
}
