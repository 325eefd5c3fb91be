//! Instance families: G(k), the two set-cover gadgets, the integer-to-unit
//! weight transform, and seeded random networks.
//!
//! Gadget node layout (fixed, so tie-breaks are reproducible):
//! seed `0`; set nodes `1..=s`; then the `q` block, the `q'` block, and the
//! element block, where element `e` owns `copies` consecutive ids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{sequence_time, DiffusionInstance, Edge, InfluenceNetwork, Model};

/// Universe `0..universe` and a family of subsets, with an optional bound on
/// the cover size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCoverInstance {
    pub universe: usize,
    pub sets: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl SetCoverInstance {
    /// Sorts and deduplicates each set; rejects empty sets and elements
    /// outside the universe.
    pub fn new(universe: usize, sets: Vec<Vec<usize>>, k: Option<usize>) -> Result<Self> {
        let mut clean = Vec::with_capacity(sets.len());
        for (i, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::InvalidInstance(format!("set {i} is empty")));
            }
            if let Some(&e) = s.iter().find(|&&e| e >= universe) {
                return Err(Error::InvalidInstance(format!("set {i} holds {e}, outside a universe of {universe}")));
            }
            clean.push(s);
        }
        Ok(SetCoverInstance { universe, sets: clean, k })
    }

    pub fn covers(&self, chosen: &[usize]) -> bool {
        let mut hit = vec![false; self.universe];
        for &i in chosen {
            for &e in &self.sets[i] {
                hit[e] = true;
            }
        }
        hit.iter().all(|&h| h)
    }
}

/// Size of a smallest cover by enumeration over subfamilies, `None` when
/// the family does not cover the universe.
pub fn brute_force_set_cover(sc: &SetCoverInstance) -> Result<Option<usize>> {
    const MAX_SETS: usize = 20;
    let s = sc.sets.len();
    if s > MAX_SETS {
        return Err(Error::SizeLimit { what: "set family", size: s, limit: MAX_SETS });
    }
    let masks: Vec<u64> = sc
        .sets
        .iter()
        .map(|set| set.iter().fold(0u64, |m, &e| m | 1 << e))
        .collect();
    let full = if sc.universe == 64 { u64::MAX } else { (1u64 << sc.universe) - 1 };
    let mut best: Option<usize> = None;
    for pick in 0u32..1 << s {
        let size = pick.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let covered = (0..s).filter(|&i| pick >> i & 1 == 1).fold(0u64, |m, i| m | masks[i]);
        if covered & full == full {
            best = Some(size);
        }
    }
    Ok(best)
}

/// Id layout shared by both set-cover gadgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetLayout {
    pub sets: usize,
    pub universe: usize,
    /// Nodes per universe element.
    pub copies: usize,
}

impl GadgetLayout {
    pub const SEED: usize = 0;

    pub fn set_node(&self, i: usize) -> usize {
        1 + i
    }

    pub fn q(&self, i: usize) -> usize {
        1 + self.sets + i
    }

    pub fn q_prime(&self, i: usize) -> usize {
        1 + 2 * self.sets + i
    }

    pub fn element(&self, e: usize, copy: usize) -> usize {
        1 + 3 * self.sets + e * self.copies + copy
    }

    pub fn node_count(&self) -> usize {
        1 + 3 * self.sets + self.universe * self.copies
    }

    /// Index of the set whose node is `v`, if any.
    pub fn set_of_node(&self, v: usize) -> Option<usize> {
        (1..=self.sets).contains(&v).then(|| v - 1)
    }
}

fn gadget_edges(sc: &SetCoverInstance, layout: &GadgetLayout, q_weight: f64) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..layout.sets {
        edges.push(Edge::unit(layout.set_node(i), GadgetLayout::SEED));
        // q_i influences S_i heavily, S_i never influences q_i
        edges.push(Edge::new(layout.q(i), layout.set_node(i), q_weight, 0.0));
        edges.push(Edge::unit(layout.q(i), layout.q_prime(i)));
    }
    for e in 0..layout.universe {
        for c in 0..layout.copies {
            for (j, set) in sc.sets.iter().enumerate() {
                if set.binary_search(&e).is_ok() {
                    edges.push(Edge::new(layout.element(e, c), layout.set_node(j), 0.0, 1.0));
                }
            }
        }
    }
    edges
}

/// The hardness gadget with its threshold: a sequence of total time at most
/// `threshold` exists iff a cover of at most `k` sets exists.
#[derive(Debug, Clone, PartialEq)]
pub struct HardnessGadget {
    pub instance: DiffusionInstance,
    pub threshold: f64,
    pub layout: GadgetLayout,
}

/// Builds the hardness gadget for `sc` and cover bound `k`. With `binary`,
/// every heavy `q → S` influence is replaced by unit two-paths whose middle
/// nodes can never be activated, leaving only 0/1 weights.
pub fn make_np_hardness(sc: &SetCoverInstance, k: usize, binary: bool) -> Result<HardnessGadget> {
    let s = sc.sets.len();
    let u = sc.universe;
    if k > s {
        return Err(Error::InvalidInstance(format!("k = {k} exceeds the {s} available sets")));
    }
    let layout = GadgetLayout { sets: s, universe: u, copies: 1 };
    let heavy = (u * s) as f64;
    let mut net = InfluenceNetwork::from_edges(layout.node_count(), gadget_edges(sc, &layout, heavy), None)?;
    if binary {
        let is_q = |a: usize| (layout.q(0)..layout.q(0) + s).contains(&a);
        net = expand_directions(&net, |from, to| is_q(from) && layout.set_of_node(to).is_some())?.0;
    }
    let z = k + u + 1;
    let instance = DiffusionInstance::new(net, GadgetLayout::SEED, z)?;
    let threshold = (k * (u * s + 1) + u * s) as f64;
    Ok(HardnessGadget { instance, threshold, layout })
}

/// The inapproximability gadget: `|S| + 1` copies per element, heavy weight
/// `scale − 1` on `q → S` with `scale = z·|S|^(λ+1)`, so every set node costs
/// exactly `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct InapproxGadget {
    pub instance: DiffusionInstance,
    pub scale: f64,
    pub lambda: f64,
    pub layout: GadgetLayout,
}

pub fn make_inapprox(sc: &SetCoverInstance, lambda: f64) -> Result<InapproxGadget> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInstance(format!("lambda = {lambda} must be positive")));
    }
    let s = sc.sets.len();
    let layout = GadgetLayout { sets: s, universe: sc.universe, copies: s + 1 };
    let z = sc.universe * (s + 1) + 1;
    let scale = z as f64 * (s as f64).powf(lambda + 1.0);
    let net = InfluenceNetwork::from_edges(layout.node_count(), gadget_edges(sc, &layout, scale - 1.0), None)?;
    let instance = DiffusionInstance::with_model(net, GadgetLayout::SEED, z, Model::default())?;
    Ok(InapproxGadget { instance, scale, lambda, layout })
}

/// Indices of the sets whose nodes appear in `seq`, which must be a feasible
/// full-length solution of the gadget.
pub fn extract_cover(gadget: &InapproxGadget, seq: &[usize]) -> Result<Vec<usize>> {
    let eval = sequence_time(&gadget.instance, seq)?;
    if !eval.is_feasible() || seq.len() != gadget.instance.z {
        return Err(Error::InvalidSequence(format!(
            "not a feasible solution: {} of {} nodes, time {}",
            seq.len(),
            gadget.instance.z,
            eval.total_time
        )));
    }
    let mut cover: Vec<usize> = seq.iter().filter_map(|&v| gadget.layout.set_of_node(v)).collect();
    cover.sort_unstable();
    Ok(cover)
}

/// G(k): seed `0`, spokes `a_i = i` for `i in 1..=k²`, hubs `b_j = k² + j`
/// for `j in 1..k`; every `a` touches the seed and every `b`; unit weights;
/// full diffusion.
pub fn make_gk(k: usize) -> Result<DiffusionInstance> {
    if k == 0 {
        return Err(Error::InvalidInstance("G(k) needs k >= 1".into()));
    }
    let kk = k * k;
    let mut pairs = Vec::with_capacity(kk * k);
    for a in 1..=kk {
        pairs.push((0, a));
    }
    for a in 1..=kk {
        for j in 1..k {
            pairs.push((a, kk + j));
        }
    }
    DiffusionInstance::full(InfluenceNetwork::unit(kk + k, &pairs)?, 0)
}

/// Replaces every integer directional weight `w_uv > 0` by `w_uv` new middle
/// nodes `x` with `w_ux = w_xv = 1` and zero reverse weights. Middle nodes
/// are appended edge by edge, direction `u → v` before `v → u`. External
/// influence is kept. Returns the new network and the full-diffusion time
/// overhead `Σ (w_uv + w_vu)`.
pub fn binarize_weights(net: &InfluenceNetwork) -> Result<(InfluenceNetwork, f64)> {
    expand_directions(net, |_, _| true)
}

fn expand_directions<F>(net: &InfluenceNetwork, pick: F) -> Result<(InfluenceNetwork, f64)>
where
    F: Fn(usize, usize) -> bool,
{
    let mut next = net.node_count();
    let mut edges = Vec::new();
    let mut offset = 0.0;
    for e in net.edges() {
        let mut keep = (e.w_uv, e.w_vu);
        for (from, to, w, slot) in [(e.u, e.v, e.w_uv, &mut keep.0), (e.v, e.u, e.w_vu, &mut keep.1)] {
            if !pick(from, to) {
                continue;
            }
            if !(w >= 0.0 && w.fract() == 0.0 && w.is_finite()) {
                return Err(Error::NonIntegerWeight { from, to, weight: w });
            }
            for _ in 0..w as usize {
                edges.push(Edge::new(from, next, 1.0, 0.0));
                edges.push(Edge::new(next, to, 1.0, 0.0));
                next += 1;
            }
            offset += w;
            *slot = 0.0;
        }
        if keep.0 != 0.0 || keep.1 != 0.0 {
            edges.push(Edge::new(e.u, e.v, keep.0, keep.1));
        }
    }
    let mut external = net.external().to_vec();
    external.resize(next, 0.0);
    Ok((InfluenceNetwork::from_edges(next, edges, Some(external))?, offset))
}

/// Distribution of each directional weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weights {
    Unit,
    /// Uniform real in `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform integer in `lo..=hi`.
    Integer { lo: u32, hi: u32 },
}

impl Weights {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Weights::Unit => 1.0,
            Weights::Uniform { lo, hi } => {
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            }
            Weights::Integer { lo, hi } => f64::from(rng.random_range(lo..=hi.max(lo))),
        }
    }
}

/// Connected network: a random spanning tree (each node attached to an
/// earlier one) plus every other pair independently with `edge_prob`.
pub fn random_connected(n: usize, edge_prob: f64, weights: Weights, rng_seed: u64) -> Result<InfluenceNetwork> {
    if n == 0 {
        return Err(Error::InvalidInstance("network must have at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut adjacent = vec![vec![false; n]; n];
    let mut pairs = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        adjacent[u][v] = true;
        pairs.push((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !adjacent[u][v] && rng.random_bool(edge_prob.clamp(0.0, 1.0)) {
                pairs.push((u, v));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let a = weights.draw(&mut rng);
            let b = weights.draw(&mut rng);
            Edge::new(u, v, a, b)
        })
        .collect();
    InfluenceNetwork::from_edges(n, edges, None)
}

/// Random tree with every degree at most `max_degree` (at least 2).
pub fn random_tree(n: usize, max_degree: usize, weights: Weights, rng_seed: u64) -> Result<InfluenceNetwork> {
    if n == 0 || max_degree < 2 && n > 2 {
        return Err(Error::InvalidInstance(format!("no tree on {n} nodes with degree <= {max_degree}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for v in 1..n {
        let open: Vec<usize> = (0..v).filter(|&u| degree[u] < max_degree).collect();
        let u = open[rng.random_range(0..open.len())];
        degree[u] += 1;
        degree[v] += 1;
        let a = weights.draw(&mut rng);
        let b = weights.draw(&mut rng);
        edges.push(Edge::new(u, v, a, b));
    }
    InfluenceNetwork::from_edges(n, edges, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{brute_force_optimal, dp_optimal};
    use crate::Limits;

    fn sc(universe: usize, sets: &[&[usize]]) -> SetCoverInstance {
        SetCoverInstance::new(universe, sets.iter().map(|s| s.to_vec()).collect(), None).unwrap()
    }

    #[test]
    fn gk_shape() {
        for (k, n, m) in [(1, 2, 1), (2, 6, 8), (3, 12, 27)] {
            let g = make_gk(k).unwrap();
            assert_eq!((g.n(), g.network.edge_count(), g.z), (n, m, n));
            let kk = k * k;
            assert_eq!(g.network.degree(0), kk);
            for a in 1..=kk {
                assert_eq!(g.network.degree(a), k);
            }
            for b in kk + 1..n {
                assert_eq!(g.network.degree(b), kk);
            }
        }
    }

    #[test]
    fn hardness_gadget_examples() {
        let yes = make_np_hardness(&sc(2, &[&[0, 1]]), 1, false).unwrap();
        assert_eq!(yes.instance.z, 4);
        assert_eq!(yes.threshold, 5.0);
        let lim = Limits::default();
        assert_eq!(dp_optimal(&yes.instance, &lim).unwrap().total_time, 5.0);
        assert_eq!(brute_force_optimal(&yes.instance, &lim).unwrap().total_time, 5.0);

        let no = make_np_hardness(&sc(2, &[&[0]]), 1, false).unwrap();
        assert!(dp_optimal(&no.instance, &lim).unwrap().total_time.is_infinite());
    }

    #[test]
    fn q_nodes_stay_inactive() {
        let g = make_np_hardness(&sc(3, &[&[0, 1], &[1, 2]]), 2, false).unwrap();
        let everything_else: Vec<bool> = (0..g.instance.n())
            .map(|v| !(g.layout.q(0)..g.layout.q_prime(0) + 2).contains(&v))
            .collect();
        for i in 0..2 {
            assert_eq!(g.instance.probability(everything_else.as_slice(), g.layout.q(i)), 0.0);
        }
    }

    #[test]
    fn binary_gadget_keeps_threshold() {
        let set = sc(2, &[&[0, 1]]);
        let plain = make_np_hardness(&set, 1, false).unwrap();
        let bin = make_np_hardness(&set, 1, true).unwrap();
        assert!(bin.instance.network.edges().iter().all(|e| [0.0, 1.0].contains(&e.w_uv) && [0.0, 1.0].contains(&e.w_vu)));
        assert_eq!(bin.instance.n(), plain.instance.n() + 2);
        let lim = Limits::default();
        assert_eq!(dp_optimal(&bin.instance, &lim).unwrap().total_time, 5.0);
    }

    #[test]
    fn inapprox_parameters() {
        let g = make_inapprox(&sc(2, &[&[0], &[1]]), 1.0).unwrap();
        assert_eq!(g.instance.z, 7);
        assert_eq!(g.scale, 28.0);
        let s0 = g.layout.set_node(0);
        assert_eq!(g.instance.network.influence(g.layout.q(0), s0), 27.0);
        assert_eq!(g.instance.step_time(&1u64, s0), 28.0);
    }

    #[test]
    fn extract_cover_from_a_constructed_run() {
        let set = sc(2, &[&[0, 1]]);
        let g = make_inapprox(&set, 1.0).unwrap();
        let mut seq = vec![0, g.layout.set_node(0)];
        for e in 0..2 {
            for c in 0..2 {
                seq.push(g.layout.element(e, c));
            }
        }
        // one copy may stay inactive per activated set node
        seq.pop();
        assert_eq!(seq.len(), g.instance.z);
        let cover = extract_cover(&g, &seq).unwrap();
        assert_eq!(cover, vec![0]);
        assert!(set.covers(&cover));
        assert!(extract_cover(&g, &seq[..3]).is_err());
    }

    #[test]
    fn set_cover_oracle() {
        assert_eq!(brute_force_set_cover(&sc(2, &[&[0], &[1]])).unwrap(), Some(2));
        assert_eq!(brute_force_set_cover(&sc(2, &[&[0, 1]])).unwrap(), Some(1));
        assert_eq!(brute_force_set_cover(&sc(3, &[&[0, 1], &[1, 2], &[2]])).unwrap(), Some(2));
        assert_eq!(brute_force_set_cover(&sc(2, &[&[0]])).unwrap(), None);
        assert!(SetCoverInstance::new(2, vec![vec![]], None).is_err());
        assert!(SetCoverInstance::new(2, vec![vec![2]], None).is_err());
    }

    #[test]
    fn binarize_counts() {
        let net = InfluenceNetwork::from_edges(2, vec![Edge::new(0, 1, 2.0, 1.0)], None).unwrap();
        let (b, offset) = binarize_weights(&net).unwrap();
        assert_eq!(b.node_count(), 5);
        assert_eq!(offset, 3.0);
        assert_eq!(b.total_influence(1), 2.0);
        assert_eq!(b.total_influence(0), 1.0);

        let zero = InfluenceNetwork::from_edges(2, vec![Edge::new(0, 1, 1.0, 0.0)], None).unwrap();
        assert_eq!(binarize_weights(&zero).unwrap().0.node_count(), 3);

        let frac = InfluenceNetwork::from_edges(2, vec![Edge::new(0, 1, 1.5, 1.0)], None).unwrap();
        assert!(matches!(binarize_weights(&frac), Err(Error::NonIntegerWeight { .. })));
    }

    #[test]
    fn binarized_unit_path_adds_offset() {
        let net = InfluenceNetwork::unit(3, &[(0, 1), (1, 2)]).unwrap();
        let (b, offset) = binarize_weights(&net).unwrap();
        let lim = Limits::default();
        let before = dp_optimal(&DiffusionInstance::full(net, 0).unwrap(), &lim).unwrap();
        let after = dp_optimal(&DiffusionInstance::full(b, 0).unwrap(), &lim).unwrap();
        assert!((after.total_time - before.total_time - offset).abs() < 1e-9);
    }

    #[test]
    fn random_networks() {
        let one = random_connected(1, 0.5, Weights::Unit, 3).unwrap();
        assert_eq!((one.node_count(), one.edge_count()), (1, 0));
        let a = random_connected(8, 0.4, Weights::Uniform { lo: 0.5, hi: 2.0 }, 7).unwrap();
        assert_eq!(a, random_connected(8, 0.4, Weights::Uniform { lo: 0.5, hi: 2.0 }, 7).unwrap());
        assert!(a.is_connected());
        assert!(a.validate().is_empty());
        let t = random_tree(12, 3, Weights::Unit, 5).unwrap();
        assert_eq!(t.edge_count(), 11);
        assert!(t.is_connected() && t.max_degree() <= 3);
    }
}
