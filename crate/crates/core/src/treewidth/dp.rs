//! Bottom-up tables and top-down reconstruction.
//!
//! For bag `t` and admissible ordering `γ` of `X_t`:
//!
//! ```text
//! full:    T[t,γ]   = cost_t(γ) + Σ_c min_{γ' ~ γ} ( T[c,γ'] − cost_{t∩c}(γ') )
//! partial: T[t,γ,k] = cost_t(γ) + min over splits k = cnt_t(γ) + Σ_c m_c of
//!                     Σ_c min_{γ' ~ γ} ( T[c,γ', m_c + cnt_{t∩c}(γ')] − cost_{t∩c}(γ') )
//! ```
//!
//! `cost_S(γ)` sums the step times of the nodes of `S` under `γ` and
//! `cnt_S(γ)` counts the activated ones. Compatibility `γ' ~ γ` only depends
//! on the projection of `γ'` onto `X_t ∩ X_c`, so each child hands its parent
//! a table keyed by that projection. A projection is packed into a `u64`:
//! 4-bit indices into the sorted shared set, length in the top nibble.
//!
//! Bag-node costs of `γ` and `γ'` agree on `t ∩ c` (all neighbours of such a
//! node lie in both closed bags), so the subtraction is computed on the
//! child's side. The sets of bags whose closed bag contains a given node form
//! subtrees, which is what makes parent-child agreement globally consistent.

use rustc_hash::{FxHashMap, FxHashSet};

use super::decomposition::{validate_decomposition, Rooted, TreeDecomposition};
use super::{BagOrdering, Mode};
use crate::error::{Error, Result};
use crate::network::{sequence_time, DiffusionInstance, SolveResult};
use crate::nodeset::NodeSet;
use crate::Limits;

const MAX_SHARED: usize = 15;
const LEN_SHIFT: u32 = 60;
const BODY: u64 = (1 << LEN_SHIFT) - 1;

#[inline]
fn key_push(key: u64, idx: u8) -> u64 {
    let len = key >> LEN_SHIFT;
    (key & BODY) | (u64::from(idx) << (4 * len)) | ((len + 1) << LEN_SHIFT)
}

#[inline]
fn key_prefix(key: u64, len: u64) -> u64 {
    (key & ((1u64 << (4 * len)) - 1)) | (len << LEN_SHIFT)
}

fn key_of(order: &[usize], shared: &[usize]) -> u64 {
    order.iter().fold(0, |k, v| match shared.binary_search(v) {
        Ok(i) => key_push(k, i as u8),
        Err(_) => k,
    })
}

fn prefixes_of<'a>(keys: impl Iterator<Item = &'a u64>) -> FxHashSet<u64> {
    let mut out = FxHashSet::default();
    for &k in keys {
        for len in 0..=(k >> LEN_SHIFT) {
            out.insert(key_prefix(k, len));
        }
    }
    out
}

fn min_plus(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate().filter(|(_, x)| x.is_finite()) {
        for (j, &y) in b.iter().enumerate() {
            let s = x + y;
            if s < out[i + j] {
                out[i + j] = s;
            }
        }
    }
    out
}

/// Best completion below a bag for each projection onto the parent's closed bag.
#[derive(Debug, Default)]
struct UpTable {
    shared: Vec<usize>,
    /// Full: (value, argmin ordering index).
    full: FxHashMap<u64, (f64, u32)>,
    /// Partial: per new-node count `m`, (value, argmin ordering index).
    partial: FxHashMap<u64, (Vec<f64>, Vec<u32>)>,
    keys: FxHashSet<u64>,
    prefixes: FxHashSet<u64>,
}

#[derive(Debug)]
struct BagTable {
    ground: Vec<usize>,
    in_bag: Vec<bool>,
    orders: Vec<Box<[u8]>>,
    /// Step times of the bag nodes of each ordering, in ordering position.
    costs: Vec<Box<[f64]>>,
    best_full: Vec<f64>,
    best_partial: Vec<Box<[f64]>>,
    up: Option<UpTable>,
}

/// One child as seen from the parent's enumeration.
struct ChildView<'a> {
    /// Local ground index of the parent to position in the shared set.
    slot: Vec<Option<u8>>,
    keys: &'a FxHashSet<u64>,
    prefixes: &'a FxHashSet<u64>,
}

/// Depth-first enumeration of admissible orderings in lexicographic order.
struct Walker<'a> {
    inst: &'a DiffusionInstance,
    ground: &'a [usize],
    in_bag: &'a [bool],
    seed_in_bag: Option<u8>,
    mode: Mode,
    children: Vec<ChildView<'a>>,
    active: Vec<bool>,
    order: Vec<u8>,
    costs: Vec<f64>,
    keys: Vec<u64>,
    used: u64,
}

impl<'a> Walker<'a> {
    fn new(inst: &'a DiffusionInstance, ground: &'a [usize], in_bag: &'a [bool], mode: Mode, children: Vec<ChildView<'a>>) -> Self {
        let seed_in_bag = ground
            .iter()
            .position(|&v| v == inst.seed)
            .filter(|&l| in_bag[l])
            .map(|l| l as u8);
        let keys = vec![0; children.len()];
        Walker {
            inst,
            ground,
            in_bag,
            seed_in_bag,
            mode,
            children,
            active: vec![false; inst.n()],
            order: Vec::with_capacity(ground.len()),
            costs: Vec::with_capacity(ground.len()),
            keys,
            used: 0,
        }
    }

    fn keys_complete(&self) -> bool {
        self.children.iter().zip(&self.keys).all(|(c, k)| c.keys.contains(k))
    }

    fn walk(&mut self, emit: &mut dyn FnMut(&Walker)) {
        let l = self.ground.len();
        let may_stop = match self.mode {
            Mode::Full => self.order.len() == l,
            Mode::Partial => self.seed_in_bag.is_none() || !self.order.is_empty(),
        };
        if may_stop && self.keys_complete() {
            emit(self);
        }
        if self.order.len() == l {
            return;
        }
        for v in 0..l as u8 {
            if self.used >> v & 1 == 1 {
                continue;
            }
            if self.order.is_empty() && self.seed_in_bag.is_some_and(|s| s != v) {
                continue;
            }
            let g = self.ground[v as usize];
            let cost = if self.in_bag[v as usize] && self.seed_in_bag != Some(v) {
                let t = self.inst.step_time(&self.active, g);
                if t.is_infinite() {
                    continue;
                }
                t
            } else {
                0.0
            };
            let mut ok = true;
            let mut touched = 0;
            for (i, c) in self.children.iter().enumerate() {
                if let Some(p) = c.slot[v as usize] {
                    let next = key_push(self.keys[i], p);
                    if !c.prefixes.contains(&next) {
                        ok = false;
                        break;
                    }
                    self.keys[i] = next;
                    touched = i + 1;
                }
            }
            if ok {
                self.used |= 1 << v;
                self.active[g] = true;
                self.order.push(v);
                self.costs.push(cost);
                self.walk(emit);
                self.costs.pop();
                self.order.pop();
                self.active[g] = false;
                self.used &= !(1 << v);
            }
            for (i, c) in self.children.iter().enumerate().take(touched) {
                if c.slot[v as usize].is_some() {
                    let len = (self.keys[i] >> LEN_SHIFT) - 1;
                    self.keys[i] = key_prefix(self.keys[i], len);
                }
            }
        }
    }
}

/// A bag's enumerated orderings and best values, in global node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct BagRecord {
    pub bag: Vec<usize>,
    pub closed_bag: Vec<usize>,
    /// Admissible orderings, lexicographically sorted.
    pub orderings: Vec<Vec<usize>>,
    /// Per ordering and position: the step time of a bag node, `None` for
    /// the other closed-bag nodes.
    pub step_times: Vec<Vec<Option<f64>>>,
    /// Full mode: best subtree time per ordering (empty in partial mode).
    pub best_full: Vec<f64>,
    /// Partial mode: best subtree time per ordering and subtree activation
    /// count (empty in full mode).
    pub best_partial: Vec<Vec<f64>>,
}

/// Tables of every bag after the bottom-up pass.
#[derive(Debug)]
pub struct TwTables {
    instance: DiffusionInstance,
    mode: Mode,
    bags: Vec<Vec<usize>>,
    rooted: Rooted,
    root: usize,
    tables: Vec<BagTable>,
}

fn closed_bag(inst: &DiffusionInstance, bag: &[usize]) -> Vec<usize> {
    let mut x: Vec<usize> = bag
        .iter()
        .flat_map(|&v| std::iter::once(v).chain(inst.network.neighbor_ids(v)))
        .collect();
    x.sort_unstable();
    x.dedup();
    x
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

impl TwTables {
    /// Validates `td` against the network and fills every bag's table.
    /// Partial tables cover every activation count, so one build answers
    /// every `z`.
    pub fn build(instance: &DiffusionInstance, td: &TreeDecomposition, mode: Mode, limits: &Limits) -> Result<Self> {
        let report = validate_decomposition(&instance.network, td);
        if !report.is_valid() {
            return Err(Error::InvalidDecomposition(report.violations.iter().map(ToString::to_string).collect()));
        }
        let rooted = td.rooted().expect("validated decomposition is a tree");
        let nb = td.bags.len();
        let grounds: Vec<Vec<usize>> = td.bags.iter().map(|b| closed_bag(instance, b)).collect();
        for g in &grounds {
            limits.check("closed bag", g.len(), limits.max_closed_bag)?;
            if g.len() > 64 {
                return Err(Error::Unsupported(format!("closed bag of {} nodes", g.len())));
            }
        }

        // nodes under each bag; siblings may only share nodes of their parent
        let mut below: Vec<NodeSet> = td.bags.iter().map(|b| b.iter().copied().collect()).collect();
        for &t in rooted.order.iter().rev() {
            let kids = &rooted.children[t];
            for (i, &a) in kids.iter().enumerate() {
                for &b in &kids[i + 1..] {
                    let overlap = below[a].intersection(&below[b]);
                    assert!(
                        overlap.iter().all(|v| td.bags[t].binary_search(&v).is_ok()),
                        "sibling subtrees of bag {t} overlap outside it"
                    );
                }
            }
            for &c in kids {
                let sub = below[c].clone();
                below[t].union_with(&sub);
            }
        }

        let mut tables: Vec<Option<BagTable>> = (0..nb).map(|_| None).collect();
        for &t in rooted.order.iter().rev() {
            let ground = &grounds[t];
            let bag = &td.bags[t];
            let in_bag: Vec<bool> = ground.iter().map(|v| bag.binary_search(v).is_ok()).collect();
            let kids = &rooted.children[t];
            let views: Vec<ChildView> = kids
                .iter()
                .map(|&c| {
                    let up = tables[c].as_ref().and_then(|tb| tb.up.as_ref()).expect("children are built first");
                    ChildView {
                        slot: ground.iter().map(|v| up.shared.binary_search(v).ok().map(|i| i as u8)).collect(),
                        keys: &up.keys,
                        prefixes: &up.prefixes,
                    }
                })
                .collect();
            let child_ups: Vec<&UpTable> = kids
                .iter()
                .map(|&c| tables[c].as_ref().and_then(|tb| tb.up.as_ref()).expect("built"))
                .collect();

            // what this bag hands to its parent
            let parent = rooted.parent[t];
            let mut up = parent.map(|p| UpTable {
                shared: intersect(ground, &grounds[p]),
                ..UpTable::default()
            });
            if let Some(u) = &up {
                if u.shared.len() > MAX_SHARED {
                    return Err(Error::Unsupported(format!(
                        "closed bags {t} and its parent share {} nodes; at most {MAX_SHARED} are supported",
                        u.shared.len()
                    )));
                }
            }
            let up_slot: Vec<Option<u8>> = match &up {
                Some(u) => ground.iter().map(|v| u.shared.binary_search(v).ok().map(|i| i as u8)).collect(),
                None => vec![None; ground.len()],
            };
            let in_parent_bag: Vec<bool> = match parent {
                Some(p) => ground
                    .iter()
                    .zip(&in_bag)
                    .map(|(v, &b)| b && td.bags[p].binary_search(v).is_ok())
                    .collect(),
                None => vec![false; ground.len()],
            };
            let size_below = below[t].len();
            let new_below = size_below - in_parent_bag.iter().filter(|&&b| b).count();

            let mut table = BagTable {
                ground: ground.clone(),
                in_bag: in_bag.clone(),
                orders: Vec::new(),
                costs: Vec::new(),
                best_full: Vec::new(),
                best_partial: Vec::new(),
                up: None,
            };

            let mut emit = |w: &Walker| {
                let bag_cost: f64 = w.costs.iter().sum();
                let cnt = w.order.iter().filter(|&&l| in_bag[l as usize]).count();
                let mut sub = 0.0;
                let mut sub_cnt = 0;
                let mut key = 0;
                for (&l, &c) in w.order.iter().zip(&w.costs) {
                    if in_parent_bag[l as usize] {
                        sub += c;
                        sub_cnt += 1;
                    }
                    if let Some(p) = up_slot[l as usize] {
                        key = key_push(key, p);
                    }
                }
                let idx = table.orders.len() as u32;
                match mode {
                    Mode::Full => {
                        let total = bag_cost
                            + child_ups
                                .iter()
                                .zip(&w.keys)
                                .map(|(u, k)| u.full[k].0)
                                .sum::<f64>();
                        if let Some(u) = up.as_mut() {
                            let value = total - sub;
                            let e = u.full.entry(key).or_insert((f64::INFINITY, u32::MAX));
                            if value < e.0 {
                                *e = (value, idx);
                            }
                        }
                        table.best_full.push(total);
                    }
                    Mode::Partial => {
                        let mut conv = vec![0.0];
                        for (u, k) in child_ups.iter().zip(&w.keys) {
                            conv = min_plus(&conv, &u.partial[k].0);
                        }
                        let mut tau = vec![f64::INFINITY; size_below + 1];
                        for (i, &x) in conv.iter().enumerate() {
                            tau[i + cnt] = bag_cost + x;
                        }
                        if tau.iter().all(|x| x.is_infinite()) {
                            return;
                        }
                        if let Some(u) = up.as_mut() {
                            let e = u
                                .partial
                                .entry(key)
                                .or_insert_with(|| (vec![f64::INFINITY; new_below + 1], vec![u32::MAX; new_below + 1]));
                            for m in 0..=new_below {
                                let value = tau[m + sub_cnt] - sub;
                                if value < e.0[m] {
                                    e.0[m] = value;
                                    e.1[m] = idx;
                                }
                            }
                        }
                        table.best_partial.push(tau.into_boxed_slice());
                    }
                }
                table.orders.push(w.order.clone().into_boxed_slice());
                let bag_costs: Vec<f64> = w
                    .order
                    .iter()
                    .zip(&w.costs)
                    .filter(|(&l, _)| in_bag[l as usize])
                    .map(|(_, &c)| c)
                    .collect();
                table.costs.push(bag_costs.into_boxed_slice());
            };
            Walker::new(instance, ground, &in_bag, mode, views).walk(&mut emit);

            if let Some(u) = up.as_mut() {
                u.keys = match mode {
                    Mode::Full => u.full.keys().copied().collect(),
                    Mode::Partial => u.partial.keys().copied().collect(),
                };
                u.prefixes = prefixes_of(u.keys.iter());
            }
            table.up = up;
            tables[t] = Some(table);
        }

        Ok(TwTables {
            instance: instance.clone(),
            mode,
            bags: td.bags.clone(),
            root: td.root,
            rooted,
            tables: tables.into_iter().map(|t| t.expect("every bag built")).collect(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn root_choice(&self, z: usize) -> Option<(usize, f64)> {
        let root = &self.tables[self.root];
        let values: Box<dyn Iterator<Item = f64>> = match self.mode {
            Mode::Full if z == self.instance.n() => Box::new(root.best_full.iter().copied()),
            Mode::Full => return None,
            Mode::Partial => Box::new(root.best_partial.iter().map(|v| v.get(z).copied().unwrap_or(f64::INFINITY))),
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in values.enumerate() {
            if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        best
    }

    /// Optimal total time straight from the tables (`+inf` when no
    /// admissible ordering reaches `z` nodes).
    pub fn optimum(&self, z: usize) -> f64 {
        self.root_choice(z).map_or(f64::INFINITY, |(_, v)| v)
    }

    /// Rebuilds an optimal sequence for `z` nodes by choosing, top-down, each
    /// child's stored best ordering compatible with its parent's choice and
    /// splicing it into the sequence built so far.
    pub fn reconstruct(&self, z: usize) -> Option<Vec<usize>> {
        let (root_idx, _) = self.root_choice(z)?;
        let nb = self.tables.len();
        let mut chosen = vec![u32::MAX; nb];
        let mut target = vec![0usize; nb];
        chosen[self.root] = root_idx as u32;
        target[self.root] = z;
        let mut seq: Vec<usize> = Vec::with_capacity(z);
        let mut placed = vec![false; self.instance.n()];

        for &t in &self.rooted.order {
            let table = &self.tables[t];
            let order: Vec<usize> = table.orders[chosen[t] as usize]
                .iter()
                .map(|&l| table.ground[l as usize])
                .collect();
            splice(&mut seq, &mut placed, &order);
            let kids = &self.rooted.children[t];
            let keys: Vec<u64> = kids
                .iter()
                .map(|&c| key_of(&order, &self.up(c).shared))
                .collect();
            match self.mode {
                Mode::Full => {
                    for (&c, k) in kids.iter().zip(&keys) {
                        chosen[c] = self.up(c).full[k].1;
                    }
                }
                Mode::Partial => {
                    let cnt = order.iter().filter(|v| self.bags[t].binary_search(v).is_ok()).count();
                    let parts: Vec<&(Vec<f64>, Vec<u32>)> =
                        kids.iter().zip(&keys).map(|(&c, k)| &self.up(c).partial[k]).collect();
                    let mut prefix = vec![vec![0.0]];
                    for p in &parts {
                        let next = min_plus(prefix.last().expect("nonempty"), &p.0);
                        prefix.push(next);
                    }
                    let mut m = target[t] - cnt;
                    for j in (0..kids.len()).rev() {
                        let before = &prefix[j];
                        let here = &parts[j].0;
                        let mut best: Option<(usize, f64)> = None;
                        for m1 in 0..here.len().min(m + 1) {
                            let Some(&a) = before.get(m - m1) else { continue };
                            let v = a + here[m1];
                            if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                                best = Some((m1, v));
                            }
                        }
                        let (m1, _) = best.expect("stored optimum splits across children");
                        let c = kids[j];
                        chosen[c] = parts[j].1[m1];
                        let shared_cnt = order
                            .iter()
                            .filter(|v| self.bags[t].binary_search(v).is_ok() && self.bags[c].binary_search(v).is_ok())
                            .count();
                        target[c] = m1 + shared_cnt;
                        m -= m1;
                    }
                }
            }
        }
        Some(seq)
    }

    fn up(&self, c: usize) -> &UpTable {
        self.tables[c].up.as_ref().expect("non-root bags have an up table")
    }

    /// Evaluates the reconstructed sequence; infeasible when nothing is
    /// admissible.
    pub fn solve(&self, z: usize) -> Result<SolveResult> {
        let inst = &self.instance;
        match self.reconstruct(z) {
            None => Ok(SolveResult::infeasible(vec![inst.seed], vec![0.0])),
            Some(seq) => {
                assert_eq!(seq.len(), z, "reconstruction activates exactly z nodes");
                sequence_time(&inst.with_z(z)?, &seq)
            }
        }
    }

    pub fn bag_count(&self) -> usize {
        self.tables.len()
    }

    pub fn record(&self, t: usize) -> BagRecord {
        let table = &self.tables[t];
        let orderings: Vec<Vec<usize>> = table
            .orders
            .iter()
            .map(|o| o.iter().map(|&l| table.ground[l as usize]).collect())
            .collect();
        let step_times = table
            .orders
            .iter()
            .zip(&table.costs)
            .map(|(o, c)| {
                let mut costs = c.iter();
                o.iter()
                    .map(|&l| table.in_bag[l as usize].then(|| *costs.next().expect("one cost per bag node")))
                    .collect()
            })
            .collect();
        BagRecord {
            bag: self.bags[t].clone(),
            closed_bag: table.ground.clone(),
            orderings,
            step_times,
            best_full: table.best_full.clone(),
            best_partial: table.best_partial.iter().map(|v| v.to_vec()).collect(),
        }
    }
}

/// Inserts the nodes of `add` not yet in `seq` just before the next node of
/// `add` that is already placed, or at the end.
fn splice(seq: &mut Vec<usize>, placed: &mut [bool], add: &[usize]) {
    let mut pending = Vec::new();
    for &x in add {
        if !placed[x] {
            pending.push(x);
            continue;
        }
        if !pending.is_empty() {
            let pos = seq.iter().position(|&y| y == x).expect("placed nodes are in the sequence");
            for &p in &pending {
                placed[p] = true;
            }
            seq.splice(pos..pos, pending.drain(..));
        }
    }
    for &p in &pending {
        placed[p] = true;
    }
    seq.extend(pending);
}

/// Full diffusion over a tree decomposition.
pub fn tw_full_optimal(instance: &DiffusionInstance, td: &TreeDecomposition, limits: &Limits) -> Result<SolveResult> {
    if !instance.is_full() {
        return Err(Error::Unsupported(format!(
            "the full-diffusion solver needs z = n, got z = {} for n = {}",
            instance.z,
            instance.n()
        )));
    }
    TwTables::build(instance, td, Mode::Full, limits)?.solve(instance.z)
}

/// Partial diffusion of `instance.z` nodes over a tree decomposition.
pub fn tw_partial_optimal(instance: &DiffusionInstance, td: &TreeDecomposition, limits: &Limits) -> Result<SolveResult> {
    TwTables::build(instance, td, Mode::Partial, limits)?.solve(instance.z)
}

/// Admissible orderings of the closed bag of `bag`: the seed first when it
/// belongs to `bag`, every other bag node preceded by enough influence to be
/// activatable, and for every child group at least one compatible ordering.
pub fn enumerate_admissible(
    instance: &DiffusionInstance,
    bag: &[usize],
    mode: Mode,
    children: &[Vec<BagOrdering>],
    limits: &Limits,
) -> Result<Vec<Vec<usize>>> {
    let mut bag = bag.to_vec();
    bag.sort_unstable();
    bag.dedup();
    let ground = closed_bag(instance, &bag);
    limits.check("closed bag", ground.len(), limits.max_closed_bag)?;
    if ground.len() > 64 {
        return Err(Error::Unsupported(format!("closed bag of {} nodes", ground.len())));
    }
    let in_bag: Vec<bool> = ground.iter().map(|v| bag.binary_search(v).is_ok()).collect();

    let mut sets = Vec::with_capacity(children.len());
    let mut shared_sets = Vec::with_capacity(children.len());
    for group in children {
        let child_ground = group.first().map(|o| o.ground.clone()).unwrap_or_default();
        let shared = intersect(&ground, &child_ground);
        if shared.len() > MAX_SHARED {
            return Err(Error::Unsupported(format!("{} shared nodes exceed {MAX_SHARED}", shared.len())));
        }
        let keys: FxHashSet<u64> = group.iter().map(|o| key_of(&o.order, &shared)).collect();
        let prefixes = prefixes_of(keys.iter());
        sets.push((keys, prefixes));
        shared_sets.push(shared);
    }
    let views = sets
        .iter()
        .zip(&shared_sets)
        .map(|((keys, prefixes), shared)| ChildView {
            slot: ground.iter().map(|v| shared.binary_search(v).ok().map(|i| i as u8)).collect(),
            keys,
            prefixes,
        })
        .collect();
    let mut out = Vec::new();
    Walker::new(instance, &ground, &in_bag, mode, views)
        .walk(&mut |w: &Walker| out.push(w.order.iter().map(|&l| ground[l as usize]).collect()));
    Ok(out)
}
