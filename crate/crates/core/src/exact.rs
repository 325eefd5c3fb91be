//! Exact solvers: exhaustive search and the dynamic program over active sets.
//!
//! The dynamic program relies on the activation probability depending only
//! on the *set* of active nodes. With `T(C)` the least expected time to
//! activate exactly the set `C` (seed included),
//!
//! ```text
//! T({seed}) = 0
//! T(C)      = min_{i in C} T(C \ {i}) + time(i | C \ {i})
//! ```
//!
//! Layers of equal `|C|` are filled in increasing size. Only the finite
//! entries of the current and next layer are kept with their times; each
//! layer additionally keeps the last-activated node of every set so that the
//! optimal sequence can be rebuilt without storing whole sequences.

use rustc_hash::FxHashMap;

use crate::error::Result;
use crate::network::{sequence_time, DiffusionInstance, SolveResult};
use crate::nodeset::{NodeSet, SubsetKey};
use crate::Limits;

/// One entry of the dynamic-programming table.
#[derive(Debug, Clone, PartialEq)]
pub struct DpState<K> {
    pub active_set: K,
    pub best_time: f64,
    /// Node activated last on the best known route to `active_set`.
    pub predecessor: usize,
}

/// Exhaustive search over every repetition-free sequence of length `z`
/// starting at the seed. Ties go to the lexicographically smallest sequence.
///
/// Prefixes with an infinite step are not extended further; every completion
/// of such a prefix is infinite too.
pub fn brute_force_optimal(instance: &DiffusionInstance, limits: &Limits) -> Result<SolveResult> {
    let n = instance.n();
    limits.check("network for exhaustive search", n, limits.max_brute_nodes)?;

    struct Search<'a> {
        inst: &'a DiffusionInstance,
        active: Vec<bool>,
        seq: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn go(&mut self, elapsed: f64) {
            if self.seq.len() == self.inst.z {
                if self.best.as_ref().is_none_or(|(t, _)| elapsed < *t) {
                    self.best = Some((elapsed, self.seq.clone()));
                }
                return;
            }
            for v in 0..self.inst.n() {
                if self.active[v] {
                    continue;
                }
                let step = self.inst.step_time(&self.active, v);
                if step.is_infinite() {
                    continue;
                }
                self.active[v] = true;
                self.seq.push(v);
                self.go(elapsed + step);
                self.seq.pop();
                self.active[v] = false;
            }
        }
    }

    let mut search = Search {
        inst: instance,
        active: vec![false; n],
        seq: vec![instance.seed],
        best: None,
    };
    search.active[instance.seed] = true;
    search.go(0.0);
    match search.best {
        Some((_, seq)) => sequence_time(instance, &seq),
        None => Ok(SolveResult::infeasible(vec![instance.seed], vec![0.0])),
    }
}

/// Optimal sequence via the subset dynamic program.
///
/// Among optimal final sets the smallest encoding wins; when two routes reach
/// the same set in exactly equal time the lexicographically smaller sequence
/// is kept. Returns an infeasible result (`+inf`, sequence `⟨seed⟩`) when no
/// set of size `z` is reachable.
pub fn dp_optimal(instance: &DiffusionInstance, limits: &Limits) -> Result<SolveResult> {
    limits.check("network for the subset dynamic program", instance.n(), limits.max_dp_nodes)?;
    let outcome = if instance.n() <= 64 {
        SubsetDp::<u64>::run(instance, instance.z).best_sequence(instance.z)
    } else {
        SubsetDp::<NodeSet>::run(instance, instance.z).best_sequence(instance.z)
    };
    match outcome {
        Some(seq) => sequence_time(instance, &seq),
        None => Ok(SolveResult::infeasible(vec![instance.seed], vec![0.0])),
    }
}

/// Optimal total time for every target size `1..=z` from one pass of the
/// dynamic program (`+inf` where no such set is reachable).
pub fn dp_optima_by_size(instance: &DiffusionInstance, limits: &Limits) -> Result<Vec<f64>> {
    limits.check("network for the subset dynamic program", instance.n(), limits.max_dp_nodes)?;
    Ok(if instance.n() <= 64 {
        SubsetDp::<u64>::run(instance, instance.z).layer_best
    } else {
        SubsetDp::<NodeSet>::run(instance, instance.z).layer_best
    })
}

struct SubsetDp<K> {
    /// `preds[s]` maps each reachable set of size `s + 1` to its last node.
    preds: Vec<FxHashMap<K, usize>>,
    /// Times of the largest layer that was filled.
    last_layer: FxHashMap<K, f64>,
    layer_best: Vec<f64>,
}

impl<K: SubsetKey> SubsetDp<K> {
    fn run(inst: &DiffusionInstance, z: usize) -> Self {
        let n = inst.n();
        let start = K::empty().with(inst.seed);
        let mut preds = vec![FxHashMap::from_iter([(start.clone(), inst.seed)])];
        let mut current = FxHashMap::from_iter([(start, 0.0)]);
        let mut layer_best = vec![0.0];

        for size in 1..z {
            let mut next: FxHashMap<K, f64> = FxHashMap::default();
            let mut next_pred: FxHashMap<K, usize> = FxHashMap::default();
            let mut sets: Vec<&K> = current.keys().collect();
            sets.sort_unstable();
            for set in sets {
                let elapsed = current[set];
                for v in (0..n).filter(|&v| !set.contains(v)) {
                    let step = inst.step_time(set, v);
                    if step.is_infinite() {
                        continue;
                    }
                    let candidate = elapsed + step;
                    let target = set.with(v);
                    let replace = match next.get(&target) {
                        None => true,
                        Some(&old) if candidate < old => true,
                        Some(&old) if candidate == old => {
                            let old_last = next_pred[&target];
                            let mine = rebuild(&preds, size - 1, set, Some(v));
                            let theirs = rebuild(&preds, size - 1, &target.without(old_last), Some(old_last));
                            mine < theirs
                        }
                        Some(_) => false,
                    };
                    if replace {
                        next.insert(target.clone(), candidate);
                        next_pred.insert(target, v);
                    }
                }
            }
            if next.is_empty() {
                layer_best.extend(std::iter::repeat_n(f64::INFINITY, z - size));
                current.clear();
                break;
            }
            layer_best.push(next.values().copied().fold(f64::INFINITY, f64::min));
            preds.push(next_pred);
            current = next;
        }
        SubsetDp { preds, last_layer: current, layer_best }
    }

    fn best_state(&self, z: usize) -> Option<DpState<K>> {
        if self.preds.len() != z {
            return None;
        }
        let (set, &time) = self
            .last_layer
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1).then_with(|| a.0.cmp(b.0)))?;
        Some(DpState {
            active_set: set.clone(),
            best_time: time,
            predecessor: self.preds[z - 1][set],
        })
    }

    fn best_sequence(&self, z: usize) -> Option<Vec<usize>> {
        let state = self.best_state(z)?;
        Some(rebuild(&self.preds, z - 1, &state.active_set, None))
    }
}

/// Sequence stored for `set` (which lives in layer `layer`), optionally
/// followed by `then`.
fn rebuild<K: SubsetKey>(preds: &[FxHashMap<K, usize>], layer: usize, set: &K, then: Option<usize>) -> Vec<usize> {
    let mut seq = Vec::with_capacity(layer + 2);
    seq.extend(then);
    let mut s = set.clone();
    for l in (0..=layer).rev() {
        let last = preds[l][&s];
        seq.push(last);
        s = s.without(last);
    }
    seq.reverse();
    seq
}
