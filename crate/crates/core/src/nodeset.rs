//! Node-set representations.
//!
//! Solvers key tables by subsets of nodes, so a set must hash cheaply and
//! order deterministically. Networks with at most 64 nodes use a plain `u64`
//! bitmask; [`NodeSet`] is the growable fallback.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;

/// Read-only membership test shared by every set-like type the model accepts.
pub trait Membership {
    fn contains(&self, node: usize) -> bool;
}

impl Membership for u64 {
    #[inline]
    fn contains(&self, node: usize) -> bool {
        node < 64 && self & (1u64 << node) != 0
    }
}

impl Membership for [bool] {
    #[inline]
    fn contains(&self, node: usize) -> bool {
        self.get(node).copied().unwrap_or(false)
    }
}

impl Membership for Vec<bool> {
    #[inline]
    fn contains(&self, node: usize) -> bool {
        Membership::contains(self.as_slice(), node)
    }
}

impl<M: Membership + ?Sized> Membership for &M {
    #[inline]
    fn contains(&self, node: usize) -> bool {
        (**self).contains(node)
    }
}

/// Bitset over node ids of any size.
///
/// Trailing zero words are never stored, so equal sets compare equal
/// regardless of the capacity they were built with. Ordering treats the set
/// as a big unsigned integer (bit `i` has weight `2^i`), matching the
/// ordering of `u64` masks.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct NodeSet {
    words: Vec<u64>,
}

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(node: usize) -> Self {
        let mut s = Self::new();
        s.insert(node);
        s
    }

    pub fn insert(&mut self, node: usize) -> bool {
        let (w, b) = (node / 64, node % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] |= 1 << b;
        !had
    }

    pub fn remove(&mut self, node: usize) -> bool {
        let (w, b) = (node / 64, node % 64);
        let Some(word) = self.words.get_mut(w) else {
            return false;
        };
        let had = *word & (1 << b) != 0;
        *word &= !(1 << b);
        self.trim();
        had
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, &w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        let mut words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        while words.last() == Some(&0) {
            words.pop();
        }
        NodeSet { words }
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }
}

impl Membership for NodeSet {
    #[inline]
    fn contains(&self, node: usize) -> bool {
        self.words
            .get(node / 64)
            .is_some_and(|w| w & (1 << (node % 64)) != 0)
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::new();
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl Ord for NodeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .len()
            .cmp(&other.words.len())
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for NodeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A subset encoding usable as a dynamic-programming table key.
pub trait SubsetKey: Membership + Clone + Eq + Hash + Ord + fmt::Debug {
    fn empty() -> Self;
    fn with(&self, node: usize) -> Self;
    fn without(&self, node: usize) -> Self;
}

impl SubsetKey for u64 {
    #[inline]
    fn empty() -> Self {
        0
    }
    #[inline]
    fn with(&self, node: usize) -> Self {
        self | (1u64 << node)
    }
    #[inline]
    fn without(&self, node: usize) -> Self {
        self & !(1u64 << node)
    }
}

impl SubsetKey for NodeSet {
    fn empty() -> Self {
        NodeSet::new()
    }
    fn with(&self, node: usize) -> Self {
        let mut s = self.clone();
        s.insert(node);
        s
    }
    fn without(&self, node: usize) -> Self {
        let mut s = self.clone();
        s.remove(node);
        s
    }
}
