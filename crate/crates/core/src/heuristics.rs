//! Myopic sequence heuristics and the explore-then-exploit benchmark on G(k).

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generators::make_gk;
use crate::network::{sequence_time, DiffusionInstance, SolveResult};

/// How to choose among equally scored candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    SmallestId,
    /// Uniformly random among the tied candidates, reproducible per seed.
    Seeded(u64),
}

/// Repeatedly activates the inactive node with the highest activation
/// probability. Nodes with probability 0 are never chosen; running out of
/// candidates before `z` nodes yields an infeasible result.
pub fn greedy_sequence(instance: &DiffusionInstance) -> SolveResult {
    greedy_sequence_with(instance, TieBreak::SmallestId)
}

pub fn greedy_sequence_with(instance: &DiffusionInstance, tie: TieBreak) -> SolveResult {
    run(instance, tie, |inst, active, v| inst.probability(active, v))
}

/// Repeatedly activates the inactive node with the most active neighbours
/// (an unweighted count), among nodes with positive probability.
pub fn majority_sequence(instance: &DiffusionInstance) -> SolveResult {
    majority_sequence_with(instance, TieBreak::SmallestId)
}

pub fn majority_sequence_with(instance: &DiffusionInstance, tie: TieBreak) -> SolveResult {
    run(instance, tie, |inst, active, v| {
        inst.network.neighbor_ids(v).filter(|&u| active[u]).count() as f64
    })
}

fn run<F>(instance: &DiffusionInstance, tie: TieBreak, score: F) -> SolveResult
where
    F: Fn(&DiffusionInstance, &[bool], usize) -> f64,
{
    let n = instance.n();
    let mut rng = match tie {
        TieBreak::SmallestId => None,
        TieBreak::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
    };
    let mut active = vec![false; n];
    active[instance.seed] = true;
    let mut seq = vec![instance.seed];
    let mut steps = vec![0.0];
    let mut tied = Vec::new();
    while seq.len() < instance.z {
        let mut best = f64::NEG_INFINITY;
        tied.clear();
        for v in (0..n).filter(|&v| !active[v] && instance.probability(active.as_slice(), v) > 0.0) {
            let s = score(instance, &active, v);
            if s > best {
                best = s;
                tied.clear();
            }
            if s == best {
                tied.push(v);
            }
        }
        let pick = match (&mut rng, tied.as_slice()) {
            (_, []) => return SolveResult::infeasible(seq, steps),
            (None, [first, ..]) => *first,
            (Some(r), all) => *all.choose(r).expect("nonempty"),
        };
        steps.push(instance.step_time(active.as_slice(), pick));
        active[pick] = true;
        seq.push(pick);
    }
    SolveResult::from_steps(seq, steps)
}

/// Strategy A on G(k): the `k` first spokes, then every `b`, then the rest.
/// Its total is `3k² − 2k`.
pub fn strategy_a_gk(k: usize) -> Result<SolveResult> {
    strategy_a(&make_gk(k)?)
}

/// Strategy A for an instance that must be exactly G(k) for some `k`.
pub fn strategy_a(instance: &DiffusionInstance) -> Result<SolveResult> {
    let n = instance.n();
    let k = (1..=n).find(|k| k * k + k >= n).unwrap_or(1);
    let reference = make_gk(k)?;
    if k * k + k != n || *instance != reference {
        return Err(Error::InvalidInstance("strategy A is only defined on G(k) instances".into()));
    }
    let kk = k * k;
    let seq: Vec<usize> = std::iter::once(0)
        .chain(1..=k)
        .chain(kk + 1..kk + k)
        .chain(k + 1..=kk)
        .collect();
    sequence_time(instance, &seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::InfluenceNetwork;

    #[test]
    fn strategy_a_values() {
        for (k, want) in [(1, 1.0), (2, 8.0), (3, 21.0), (5, 65.0)] {
            assert_eq!(strategy_a_gk(k).unwrap().total_time, want, "k={k}");
        }
    }

    #[test]
    fn strategy_a_rejects_other_networks() {
        let inst = DiffusionInstance::full(InfluenceNetwork::unit(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap(), 0)
            .unwrap();
        assert!(strategy_a(&inst).is_err());
    }

    #[test]
    fn g2_heuristics() {
        let g2 = make_gk(2).unwrap();
        let greedy = greedy_sequence(&g2);
        // after a1..a3 the b node sees 3/4 of its influence, more than any a
        assert_eq!(greedy.nodes(), &[0, 1, 2, 3, 5, 4]);
        assert!((greedy.total_time - 25.0 / 3.0).abs() < 1e-12);
        let majority = majority_sequence(&g2);
        assert_eq!(majority.nodes(), &[0, 1, 2, 5, 3, 4]);
        assert_eq!(majority.total_time, 8.0);
    }

    #[test]
    fn path_and_star() {
        let path = DiffusionInstance::full(InfluenceNetwork::unit(3, &[(0, 1), (1, 2)]).unwrap(), 0).unwrap();
        let g = greedy_sequence(&path);
        assert_eq!((g.nodes(), g.total_time), (&[0, 1, 2][..], 3.0));
        let star = DiffusionInstance::full(InfluenceNetwork::unit(4, &[(0, 1), (0, 2), (0, 3)]).unwrap(), 0).unwrap();
        assert_eq!(majority_sequence(&star).total_time, 3.0);
    }

    #[test]
    fn stuck_heuristic_is_infeasible() {
        let net = InfluenceNetwork::unit(4, &[(0, 1), (2, 3)]).unwrap();
        let inst = DiffusionInstance::full(net, 0).unwrap();
        let r = greedy_sequence(&inst);
        assert!(r.infeasible);
        assert_eq!(r.nodes(), &[0, 1]);
        assert!(majority_sequence(&inst).infeasible);
    }

    #[test]
    fn seeded_ties_are_reproducible() {
        let g3 = make_gk(3).unwrap();
        let a = greedy_sequence_with(&g3, TieBreak::Seeded(11));
        let b = greedy_sequence_with(&g3, TieBreak::Seeded(11));
        assert_eq!(a, b);
        let c = majority_sequence_with(&g3, TieBreak::Seeded(11));
        assert_eq!(c, majority_sequence_with(&g3, TieBreak::Seeded(11)));
    }
}
