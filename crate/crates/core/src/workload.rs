//! Seeded instance generators and default parameters.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algo_anon::{period, DistanceSequence};
use crate::ring_model::{AgentSpec, InstanceSpec, Model};
use crate::scheduler::StrategyKind;

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// `50 · n · k · (ceil(log2 g) + g)` atomic steps.
pub fn default_step_limit(n: usize, k: usize, g: usize) -> u64 {
    50 * n as u64 * k as u64 * (ceil_log2(g as u64) as u64 + g as u64)
}

/// Thresholds `{2, 3, k/2, k}` that are valid for `k` agents, ascending.
pub fn grid_thresholds(k: usize) -> Vec<usize> {
    let mut g: Vec<usize> = [2, 3, k / 2, k].into_iter().filter(|&g| g >= 2 && g <= k).collect();
    g.sort_unstable();
    g.dedup();
    g
}

fn generator(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

pub fn instance(model: Model, n: usize, positions: &[usize], ids: Option<&[u64]>, g: usize) -> InstanceSpec {
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

/// Eight agents on eight nodes with ids 7,1,8,3,4,2,6,5 and `g = 3`.
pub fn eight_agent_instance() -> InstanceSpec {
    instance(Model::Distinct, 8, &[0, 1, 2, 3, 4, 5, 6, 7], Some(&[7, 1, 8, 3, 4, 2, 6, 5]), 3)
}

/// Uniform distinct positions and, for the distinct model, uniform distinct ids.
pub fn random_instance(model: Model, n: usize, k: usize, g: usize, seed: u64, scheduler: StrategyKind) -> InstanceSpec {
    let mut rng = generator(seed);
    let mut positions = sample(&mut rng, n, k).into_vec();
    positions.sort_unstable();
    let ids: Option<Vec<u64>> = (model == Model::Distinct).then(|| {
        let space = (4 * k * k).max(1000);
        sample(&mut rng, space, k).into_iter().map(|i| i as u64 + 1).collect()
    });
    InstanceSpec { seed, scheduler, ..instance(model, n, &positions, ids.as_deref(), g) }
}

/// Agents at the offsets described by `gaps`, starting at node 0.
/// Distinct-model agents get ids `1..=k`.
pub fn from_gaps(model: Model, gaps: &[usize], g: usize) -> InstanceSpec {
    let d = DistanceSequence::new(gaps.to_vec()).expect("positive gaps");
    let positions = d.offsets();
    let ids: Option<Vec<u64>> = (model == Model::Distinct).then(|| (1..=gaps.len() as u64).collect());
    instance(model, d.total(), &positions, ids.as_deref(), g)
}

/// `k` agents spaced `n / k` apart; `n` must be a multiple of `k`.
pub fn evenly_spaced(model: Model, n: usize, k: usize, g: usize) -> InstanceSpec {
    assert!(k > 0 && n.is_multiple_of(k), "n must be a multiple of k");
    from_gaps(model, &vec![n / k; k], g)
}

fn divisors(k: usize) -> Vec<usize> {
    (1..=k).filter(|p| k.is_multiple_of(*p)).collect()
}

/// A block of `p` gaps in `1..=max_gap` whose own period is `p`.
fn aperiodic_block(rng: &mut ChaCha8Rng, p: usize, max_gap: usize) -> Vec<usize> {
    loop {
        let block: Vec<usize> = (0..p).map(|_| rng.gen_range(1..=max_gap)).collect();
        if period(&DistanceSequence::new(block.clone()).expect("positive")) == p {
            return block;
        }
    }
}

fn periodic_anon(rng: &mut ChaCha8Rng, k: usize, p: usize, g: usize, n_max: usize) -> InstanceSpec {
    let max_gap = (n_max / k).max(2);
    let block = aperiodic_block(rng, p, max_gap);
    let gaps: Vec<usize> = block.iter().copied().cycle().take(k).collect();
    from_gaps(Model::Anon, &gaps, g)
}

/// Anonymous instance with `n ≤ 256`, `k ≤ 32` and period ≥ g.
pub fn solvable_anon_instance(seed: u64) -> InstanceSpec {
    let mut rng = generator(seed);
    let k = rng.gen_range(2..=32);
    let ps: Vec<usize> = divisors(k).into_iter().filter(|&p| p >= 2).collect();
    let p = ps[rng.gen_range(0..ps.len())];
    let g = rng.gen_range(2..=p);
    InstanceSpec { seed, ..periodic_anon(&mut rng, k, p, g, 256) }
}

/// Anonymous instance with `n ≤ 256`, `k ≤ 32` and period < g.
pub fn unsolvable_anon_instance(seed: u64) -> InstanceSpec {
    let mut rng = generator(seed);
    let k = rng.gen_range(2..=32);
    let ps: Vec<usize> = divisors(k).into_iter().filter(|&p| p < k).collect();
    let p = ps[rng.gen_range(0..ps.len())];
    let g = rng.gen_range(p + 1..=k);
    InstanceSpec { seed, ..periodic_anon(&mut rng, k, p, g, 256) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo_anon::is_solvable;

    #[test]
    fn log2_values() {
        let got: Vec<_> = [1u64, 2, 3, 4, 5, 8, 9, 16, 17].iter().map(|&x| ceil_log2(x)).collect();
        assert_eq!(got, [0, 1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn thresholds() {
        assert_eq!(grid_thresholds(2), [2]);
        assert_eq!(grid_thresholds(4), [2, 3, 4]);
        assert_eq!(grid_thresholds(8), [2, 3, 4, 8]);
        assert_eq!(grid_thresholds(16), [2, 3, 8, 16]);
    }

    #[test]
    fn random_instances_are_valid_and_seeded() {
        for seed in 0..50 {
            for model in Model::ALL {
                let s = random_instance(model, 16, 8, 3, seed, StrategyKind::Lagger);
                s.validate().unwrap();
                assert_eq!(s, random_instance(model, 16, 8, 3, seed, StrategyKind::Lagger));
            }
        }
    }

    #[test]
    fn anon_generators_hit_their_class() {
        for seed in 0..200 {
            let s = solvable_anon_instance(seed);
            s.validate().unwrap();
            assert!(s.n <= 256 && s.k() <= 32);
            let d = DistanceSequence::from_positions(s.n, &s.positions()).unwrap();
            assert!(is_solvable(&d, s.g).solvable);
            let s = unsolvable_anon_instance(seed);
            s.validate().unwrap();
            let d = DistanceSequence::from_positions(s.n, &s.positions()).unwrap();
            assert!(!is_solvable(&d, s.g).solvable);
        }
    }

    #[test]
    fn evenly_spaced_gaps() {
        let s = evenly_spaced(Model::Anon, 12, 4, 2);
        assert_eq!(s.positions(), [0, 3, 6, 9]);
    }
}
