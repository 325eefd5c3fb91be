//! Influence networks, diffusion instances and the activation model.
//!
//! A node `i` with active set `A` is activated in one attempt with
//! probability `beta * (sum_{j in N(i) ∩ A} w_ji / w_i)^alpha`; its expected
//! activation time is the reciprocal. A node with no active incoming
//! influence has probability 0 and time `+inf`, also when `alpha = 0`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::Membership;

/// One undirected edge with its two directional influences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// Influence of `u` on `v`.
    #[serde(rename = "wuv")]
    pub w_uv: f64,
    /// Influence of `v` on `u`.
    #[serde(rename = "wvu")]
    pub w_vu: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, w_uv: f64, w_vu: f64) -> Self {
        Edge { u, v, w_uv, w_vu }
    }

    pub fn unit(u: usize, v: usize) -> Self {
        Edge::new(u, v, 1.0, 1.0)
    }
}

/// Adjacency entry of node `i`: `incoming` is `w_{node,i}`, `outgoing` is `w_{i,node}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub node: usize,
    pub incoming: f64,
    pub outgoing: f64,
}

/// Undirected topology with asymmetric per-direction influence weights.
///
/// Immutable once built. `external` holds the additive per-node influence
/// `delta_i` that stands in for stub neighbours which are never activated.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceNetwork {
    n: usize,
    edges: Vec<Edge>,
    external: Vec<f64>,
    total: Vec<f64>,
    adj: Vec<Vec<Neighbor>>,
}

/// A broken network invariant, with enough context to locate it.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfLoop { edge: usize, node: usize },
    NegativeWeight { edge: usize, from: usize, to: usize, weight: f64 },
    NonFiniteWeight { edge: usize, from: usize, to: usize, weight: f64 },
    BadExternal { node: usize, value: f64 },
    TotalMismatch { node: usize, cached: f64, recomputed: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::SelfLoop { edge, node } => write!(f, "edge {edge}: self-loop on node {node}"),
            Violation::NegativeWeight { edge, from, to, weight } => {
                write!(f, "edge {edge} ({from}->{to}): negative weight {weight}")
            }
            Violation::NonFiniteWeight { edge, from, to, weight } => {
                write!(f, "edge {edge} ({from}->{to}): non-finite weight {weight}")
            }
            Violation::BadExternal { node, value } => {
                write!(f, "node {node}: external influence {value} is negative or non-finite")
            }
            Violation::TotalMismatch { node, cached, recomputed } => write!(
                f,
                "node {node}: cached total influence {cached} differs from recomputed {recomputed}"
            ),
        }
    }
}

impl InfluenceNetwork {
    /// Builds a network from an edge list. Endpoints out of range and repeated
    /// node pairs are rejected here; weight problems and self-loops are left
    /// for [`InfluenceNetwork::validate`] to report.
    pub fn from_edges(n: usize, edges: Vec<Edge>, external: Option<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("network must have at least one node".into()));
        }
        let external = external.unwrap_or_else(|| vec![0.0; n]);
        if external.len() != n {
            return Err(Error::InvalidInstance(format!(
                "external influence has {} entries, expected {n}",
                external.len()
            )));
        }
        let mut adj: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        let mut seen = rustc_hash::FxHashSet::default();
        for (idx, e) in edges.iter().enumerate() {
            for node in [e.u, e.v] {
                if node >= n {
                    return Err(Error::parse_field(
                        format!("edges[{idx}]"),
                        format!("node {node} out of range for n = {n}"),
                    ));
                }
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                return Err(Error::parse_field(
                    format!("edges[{idx}]"),
                    format!("duplicate edge {{{}, {}}}", key.0, key.1),
                ));
            }
            if e.u == e.v {
                continue;
            }
            adj[e.u].push(Neighbor { node: e.v, incoming: e.w_vu, outgoing: e.w_uv });
            adj[e.v].push(Neighbor { node: e.u, incoming: e.w_uv, outgoing: e.w_vu });
        }
        for list in &mut adj {
            list.sort_by_key(|nb| nb.node);
        }
        let total = (0..n)
            .map(|i| external[i] + adj[i].iter().map(|nb| nb.incoming).sum::<f64>())
            .collect();
        Ok(InfluenceNetwork { n, edges, external, total, adj })
    }

    /// Unit weights in both directions on every listed pair.
    pub fn unit(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::from_edges(n, pairs.iter().map(|&(u, v)| Edge::unit(u, v)).collect(), None)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn external(&self) -> &[f64] {
        &self.external
    }

    pub fn has_external(&self) -> bool {
        self.external.iter().any(|&d| d != 0.0)
    }

    /// Cached `w_i`: external influence plus all incoming edge influence.
    pub fn total_influence(&self, i: usize) -> f64 {
        self.total[i]
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.adj[i]
    }

    pub fn neighbor_ids(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[i].iter().map(|nb| nb.node)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search_by_key(&j, |nb| nb.node).is_ok()
    }

    /// `w_ij`, the influence of `i` on `j` (0 for non-adjacent pairs).
    pub fn influence(&self, i: usize, j: usize) -> f64 {
        match self.adj[j].binary_search_by_key(&i, |nb| nb.node) {
            Ok(pos) => self.adj[j][pos].incoming,
            Err(_) => 0.0,
        }
    }

    /// Sum of `w_ji` over active neighbours `j` of `i`, in adjacency order.
    #[inline]
    pub fn active_influence<M: Membership + ?Sized>(&self, active: &M, i: usize) -> f64 {
        self.adj[i]
            .iter()
            .filter(|nb| active.contains(nb.node))
            .map(|nb| nb.incoming)
            .sum()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (idx, e) in self.edges.iter().enumerate() {
            if e.u == e.v {
                out.push(Violation::SelfLoop { edge: idx, node: e.u });
            }
            for (from, to, weight) in [(e.u, e.v, e.w_uv), (e.v, e.u, e.w_vu)] {
                if !weight.is_finite() {
                    out.push(Violation::NonFiniteWeight { edge: idx, from, to, weight });
                } else if weight < 0.0 {
                    out.push(Violation::NegativeWeight { edge: idx, from, to, weight });
                }
            }
        }
        for (node, &value) in self.external.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                out.push(Violation::BadExternal { node, value });
            }
        }
        // Recompute from the edge list rather than the adjacency cache.
        let mut recomputed = self.external.clone();
        for e in self.edges.iter().filter(|e| e.u != e.v) {
            recomputed[e.v] += e.w_uv;
            recomputed[e.u] += e.w_vu;
        }
        for (node, (&cached, &r)) in self.total.iter().zip(&recomputed).enumerate() {
            let ok = (cached - r).abs() <= 1e-9 * cached.abs().max(1.0)
                || (cached.is_nan() && r.is_nan())
                || cached == r;
            if !ok {
                out.push(Violation::TotalMismatch { node, cached, recomputed: r });
            }
        }
        out
    }

    /// Nodes reachable from `start` along edges, as a boolean mask.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbor_ids(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from(0).iter().all(|&r| r)
    }

    /// Subnetwork induced by `nodes` (local id `k` is `nodes[k]`). Each kept
    /// node receives, on top of its own external influence, `extra[k]`.
    pub fn induced(&self, nodes: &[usize], extra: &[f64]) -> Result<InfluenceNetwork> {
        let mut local = vec![usize::MAX; self.n];
        for (k, &g) in nodes.iter().enumerate() {
            local[g] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| local[e.u] != usize::MAX && local[e.v] != usize::MAX)
            .map(|e| Edge::new(local[e.u], local[e.v], e.w_uv, e.w_vu))
            .collect();
        let external = nodes
            .iter()
            .zip(extra)
            .map(|(&g, &x)| self.external[g] + x)
            .collect();
        InfluenceNetwork::from_edges(nodes.len(), edges, Some(external))
    }
}

/// The `(alpha, beta)` exponents of the activation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Model {
    fn default() -> Self {
        Model { alpha: 1.0, beta: 1.0 }
    }
}

impl Model {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidInstance(format!("alpha = {alpha} outside [0, 1]")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidInstance(format!("beta = {beta} outside (0, 1]")));
        }
        Ok(Model { alpha, beta })
    }

    /// Activation probability from the active incoming influence and `w_i`.
    #[inline]
    pub fn probability(&self, active: f64, total: f64) -> f64 {
        if active <= 0.0 || total <= 0.0 {
            return 0.0;
        }
        let frac = active / total;
        if self.alpha == 1.0 {
            self.beta * frac
        } else {
            self.beta * frac.powf(self.alpha)
        }
    }

    /// Expected number of attempts, `+inf` when the probability is zero.
    ///
    /// For `alpha = 1` this is evaluated as `w_i / (beta * active)` so integral
    /// ratios come out exact.
    #[inline]
    pub fn step_time(&self, active: f64, total: f64) -> f64 {
        if active <= 0.0 || total <= 0.0 {
            return f64::INFINITY;
        }
        if self.alpha == 1.0 {
            total / (self.beta * active)
        } else {
            1.0 / self.probability(active, total)
        }
    }
}

fn check_activation<M: Membership + ?Sized>(net: &InfluenceNetwork, active: &M, i: usize) -> Result<()> {
    if i >= net.node_count() {
        return Err(Error::NodeOutOfRange { node: i, n: net.node_count() });
    }
    if active.contains(i) {
        return Err(Error::AlreadyActive { node: i });
    }
    if net.total_influence(i) <= 0.0 {
        return Err(Error::ZeroInfluence { node: i });
    }
    Ok(())
}

/// Probability that one attempt on inactive node `i` succeeds.
pub fn activation_probability<M: Membership + ?Sized>(
    net: &InfluenceNetwork,
    active: &M,
    i: usize,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    check_activation(net, active, i)?;
    Ok(Model { alpha, beta }.probability(net.active_influence(active, i), net.total_influence(i)))
}

/// Expected activation time of inactive node `i`; `+inf` without active influence.
pub fn expected_step_time<M: Membership + ?Sized>(
    net: &InfluenceNetwork,
    active: &M,
    i: usize,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    check_activation(net, active, i)?;
    Ok(Model { alpha, beta }.step_time(net.active_influence(active, i), net.total_influence(i)))
}

/// Network, seed node, target count and model exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionInstance {
    pub network: InfluenceNetwork,
    pub seed: usize,
    pub z: usize,
    pub model: Model,
}

impl DiffusionInstance {
    /// Instance with `alpha = beta = 1`.
    pub fn new(network: InfluenceNetwork, seed: usize, z: usize) -> Result<Self> {
        Self::with_model(network, seed, z, Model::default())
    }

    pub fn with_model(network: InfluenceNetwork, seed: usize, z: usize, model: Model) -> Result<Self> {
        let violations = network.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations.iter().map(ToString::to_string).collect()));
        }
        let n = network.node_count();
        if seed >= n {
            return Err(Error::NodeOutOfRange { node: seed, n });
        }
        if z == 0 || z > n {
            return Err(Error::InvalidInstance(format!("z = {z} must lie in 1..={n}")));
        }
        let model = Model::new(model.alpha, model.beta)?;
        Ok(DiffusionInstance { network, seed, z, model })
    }

    /// Full diffusion: `z = n`.
    pub fn full(network: InfluenceNetwork, seed: usize) -> Result<Self> {
        let n = network.node_count();
        Self::new(network, seed, n)
    }

    pub fn with_z(&self, z: usize) -> Result<Self> {
        Self::with_model(self.network.clone(), self.seed, z, self.model)
    }

    pub fn n(&self) -> usize {
        self.network.node_count()
    }

    pub fn is_full(&self) -> bool {
        self.z == self.n()
    }

    /// Expected time of `i` given the active set, `+inf` when unreachable.
    #[inline]
    pub fn step_time<M: Membership + ?Sized>(&self, active: &M, i: usize) -> f64 {
        self.model
            .step_time(self.network.active_influence(active, i), self.network.total_influence(i))
    }

    #[inline]
    pub fn probability<M: Membership + ?Sized>(&self, active: &M, i: usize) -> f64 {
        self.model
            .probability(self.network.active_influence(active, i), self.network.total_influence(i))
    }
}

/// Ordered, repetition-free list of node ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivationSequence(Vec<usize>);

impl ActivationSequence {
    pub fn new(nodes: Vec<usize>) -> Result<Self> {
        let mut seen = rustc_hash::FxHashSet::default();
        for &v in &nodes {
            if !seen.insert(v) {
                return Err(Error::InvalidSequence(format!("node {v} appears more than once")));
            }
        }
        Ok(ActivationSequence(nodes))
    }

    pub(crate) fn from_vec_unchecked(nodes: Vec<usize>) -> Self {
        ActivationSequence(nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Checks that this is a well-formed solution to `instance`: starts at the
    /// seed, stays in range and has exactly `z` nodes.
    pub fn check_solution(&self, instance: &DiffusionInstance) -> Result<()> {
        check_shape(instance, &self.0)?;
        if self.0.len() != instance.z {
            return Err(Error::InvalidSequence(format!(
                "length {} differs from z = {}",
                self.0.len(),
                instance.z
            )));
        }
        Ok(())
    }
}

impl From<ActivationSequence> for Vec<usize> {
    fn from(s: ActivationSequence) -> Self {
        s.0
    }
}

fn check_shape(instance: &DiffusionInstance, nodes: &[usize]) -> Result<()> {
    match nodes.first() {
        None => return Err(Error::InvalidSequence("empty sequence".into())),
        Some(&h) if h != instance.seed => {
            return Err(Error::InvalidSequence(format!(
                "sequence starts at {h}, not at the seed {}",
                instance.seed
            )))
        }
        _ => {}
    }
    let n = instance.n();
    if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
        return Err(Error::NodeOutOfRange { node: bad, n });
    }
    Ok(())
}

/// Outcome of a solver or of evaluating a fixed sequence.
///
/// For feasible results `total_time` is the exact sum of `step_times`. A
/// result flagged `infeasible` carries the reachable prefix that was built,
/// its step times, and `total_time = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub sequence: ActivationSequence,
    #[serde(with = "crate::timefmt")]
    pub total_time: f64,
    #[serde(with = "crate::timefmt::vec")]
    pub step_times: Vec<f64>,
    #[serde(default)]
    pub infeasible: bool,
}

impl SolveResult {
    pub(crate) fn from_steps(sequence: Vec<usize>, step_times: Vec<f64>) -> Self {
        let total_time = step_times.iter().sum::<f64>();
        SolveResult {
            sequence: ActivationSequence::from_vec_unchecked(sequence),
            infeasible: total_time.is_infinite(),
            total_time,
            step_times,
        }
    }

    pub(crate) fn infeasible(prefix: Vec<usize>, step_times: Vec<f64>) -> Self {
        SolveResult {
            sequence: ActivationSequence::from_vec_unchecked(prefix),
            total_time: f64::INFINITY,
            step_times,
            infeasible: true,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !self.infeasible && self.total_time.is_finite()
    }

    pub fn nodes(&self) -> &[usize] {
        self.sequence.nodes()
    }
}

/// Evaluates a sequence: each node's time is taken with the active set equal
/// to the prefix before it; the seed costs 0.
pub fn sequence_time(instance: &DiffusionInstance, seq: &[usize]) -> Result<SolveResult> {
    check_shape(instance, seq)?;
    let n = instance.n();
    let mut active = vec![false; n];
    let mut steps = Vec::with_capacity(seq.len());
    for (pos, &v) in seq.iter().enumerate() {
        if active[v] {
            return Err(Error::InvalidSequence(format!("node {v} appears more than once")));
        }
        steps.push(if pos == 0 { 0.0 } else { instance.step_time(&active, v) });
        active[v] = true;
    }
    Ok(SolveResult::from_steps(seq.to_vec(), steps))
}
