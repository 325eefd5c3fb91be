//! Fixed-parameter solvers over a rooted tree decomposition.
//!
//! Every bag `t` is widened to its closed bag `X_t = t ∪ N(t)`, so the step
//! time of each node of `t` is determined by an ordering of `X_t` alone. The
//! solvers enumerate the admissible orderings of each closed bag bottom-up
//! and combine them with the best compatible orderings of the children.
//!
//! Two orderings are compatible when they agree on the nodes both closed
//! bags contain: the same nodes activated, in the same relative order.

mod decomposition;
mod dp;

pub use decomposition::{min_fill_decomposition, validate_decomposition, TdReport, TdViolation, TreeDecomposition};
pub use dp::{enumerate_admissible, tw_full_optimal, tw_partial_optimal, BagRecord, TwTables};

use rustc_hash::FxHashSet;

/// Full diffusion (every node of the closed bag ordered) or partial
/// diffusion (an ordered subset of it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Partial,
}

/// An ordering together with the ground set it was drawn from. In full mode
/// `order` is a permutation of `ground`; in partial mode it may omit nodes,
/// which then stay inactive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagOrdering {
    pub order: Vec<usize>,
    pub ground: Vec<usize>,
}

impl BagOrdering {
    pub fn new(order: Vec<usize>, ground: impl IntoIterator<Item = usize>) -> Self {
        let mut ground: Vec<usize> = ground.into_iter().collect();
        ground.sort_unstable();
        ground.dedup();
        BagOrdering { order, ground }
    }

    /// Ground set equal to the ordered nodes.
    pub fn full(order: Vec<usize>) -> Self {
        let ground = order.clone();
        BagOrdering::new(order, ground)
    }
}

/// Whether two orderings can be parts of one global activation order.
///
/// Full mode: the orders restricted to each other's nodes coincide. Partial
/// mode additionally forbids one ordering from activating a node that the
/// other's ground set contains but leaves out.
pub fn compatible(a: &BagOrdering, b: &BagOrdering, mode: Mode) -> bool {
    let in_a: FxHashSet<usize> = a.order.iter().copied().collect();
    let in_b: FxHashSet<usize> = b.order.iter().copied().collect();
    let a_on_b = a.order.iter().filter(|x| in_b.contains(x));
    let b_on_a = b.order.iter().filter(|x| in_a.contains(x));
    if !a_on_b.eq(b_on_a) {
        return false;
    }
    match mode {
        Mode::Full => true,
        Mode::Partial => {
            let omits = |o: &BagOrdering, set: &FxHashSet<usize>, x: &usize| {
                o.ground.binary_search(x).is_ok() && !set.contains(x)
            };
            !a.order.iter().any(|x| omits(b, &in_b, x)) && !b.order.iter().any(|x| omits(a, &in_a, x))
        }
    }
}
