//! Instance supplies shared by the integration and acceptance suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratdiff::decompose::biconnected_components;
use stratdiff::generators::{random_connected, random_tree, SetCoverInstance, Weights};
use stratdiff::treewidth::{min_fill_decomposition, TreeDecomposition};
use stratdiff::{DiffusionInstance, Edge, InfluenceNetwork, Model};

pub const TOL: f64 = 1e-9;

pub fn close(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite() && a.signum() == b.signum()) || (a - b).abs() <= TOL
}

/// Every connected graph on `0..n` with unit weights (labelled, so each
/// unlabelled shape appears with every choice of node 0).
pub fn all_connected_unit_graphs(n: usize) -> Vec<InfluenceNetwork> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let chosen: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let net = InfluenceNetwork::unit(n, &chosen).unwrap();
        if net.is_connected() {
            out.push(net);
        }
    }
    out
}

/// Random connected network with real weights, random seed, z and model.
pub fn random_weighted_instance(seed: u64, max_n: usize) -> DiffusionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(0.0..0.6);
    let net = random_connected(n, p, Weights::Uniform { lo: 0.0, hi: 3.0 }, seed).unwrap();
    let model = if rng.random_bool(0.5) {
        Model::default()
    } else {
        Model::new(rng.random_range(0.0..=1.0), rng.random_range(0.05..=1.0)).unwrap()
    };
    let s = rng.random_range(0..n);
    let z = rng.random_range(1..=n);
    DiffusionInstance::with_model(net, s, z, model).unwrap()
}

/// Random tree with degree at most 3 and either unit or real weights.
pub fn random_tree_instance(seed: u64, max_n: usize) -> DiffusionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ae5);
    let n = rng.random_range(1..=max_n);
    let weights = if seed.is_multiple_of(2) { Weights::Unit } else { Weights::Uniform { lo: 0.2, hi: 2.0 } };
    let net = random_tree(n, 3, weights, seed).unwrap();
    let s = rng.random_range(0..n);
    DiffusionInstance::full(net, s).unwrap()
}

/// Connected graph with treewidth at most 2 (certified by the returned
/// decomposition) and maximum degree at most 3: a random tree plus chords
/// closing triangles, kept when min-fill certifies width 2.
pub fn low_width_instance(seed: u64, max_n: usize) -> (DiffusionInstance, TreeDecomposition) {
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(attempt));
        attempt += 1;
        let n = rng.random_range(3..=max_n);
        let tree = random_tree(n, 3, Weights::Unit, rng.random()).unwrap();
        let mut pairs: Vec<(usize, usize)> = tree.edges().iter().map(|e| (e.u, e.v)).collect();
        let mut degree: Vec<usize> = (0..n).map(|v| tree.degree(v)).collect();
        let chords = rng.random_range(1..=n / 2);
        for _ in 0..chords {
            let mid = rng.random_range(0..n);
            let nbrs: Vec<usize> = pairs
                .iter()
                .filter_map(|&(a, b)| if a == mid { Some(b) } else if b == mid { Some(a) } else { None })
                .collect();
            if nbrs.len() < 2 {
                continue;
            }
            let a = nbrs[rng.random_range(0..nbrs.len())];
            let b = nbrs[rng.random_range(0..nbrs.len())];
            let key = (a.min(b), a.max(b));
            if a == b || degree[a] >= 3 || degree[b] >= 3 || pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
                continue;
            }
            pairs.push(key);
            degree[a] += 1;
            degree[b] += 1;
        }
        let weighted = rng.random_bool(0.5);
        let edges = pairs
            .iter()
            .map(|&(u, v)| {
                if weighted {
                    Edge::new(u, v, rng.random_range(0.2..2.0), rng.random_range(0.2..2.0))
                } else {
                    Edge::unit(u, v)
                }
            })
            .collect();
        let net = InfluenceNetwork::from_edges(n, edges, None).unwrap();
        let td = min_fill_decomposition(&net);
        if td.width() > 2 || net.max_degree() > 3 || net.edge_count() < n {
            continue;
        }
        let s = rng.random_range(0..n);
        return (DiffusionInstance::full(net, s).unwrap(), td);
    }
}

/// Connected network with at least two blocks.
pub fn multi_block_instance(seed: u64, max_n: usize) -> DiffusionInstance {
    let mut attempt = 0u64;
    loop {
        let s = seed.wrapping_mul(7919).wrapping_add(attempt);
        attempt += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let n = rng.random_range(3..=max_n);
        let weights = if rng.random_bool(0.5) { Weights::Unit } else { Weights::Uniform { lo: 0.1, hi: 2.5 } };
        let net = random_connected(n, rng.random_range(0.1..0.5), weights, s).unwrap();
        if biconnected_components(&net).unwrap().components.len() < 2 {
            continue;
        }
        let seed_node = rng.random_range(0..n);
        return DiffusionInstance::full(net, seed_node).unwrap();
    }
}

/// Integer-weight connected network whose unit-weight expansion stays small.
pub fn integer_weight_network(seed: u64, max_n: usize, max_expanded: usize) -> InfluenceNetwork {
    let mut attempt = 0u64;
    loop {
        let s = seed.wrapping_mul(104_729).wrapping_add(attempt);
        attempt += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let n = rng.random_range(2..=max_n);
        let net = random_connected(n, 0.3, Weights::Integer { lo: 0, hi: 2 }, s).unwrap();
        let total: f64 = net.edges().iter().map(|e| e.w_uv + e.w_vu).sum();
        if n + total as usize <= max_expanded {
            return net;
        }
    }
}

/// Every family of `sets` nonempty subsets of `0..universe`, as ordered lists.
pub fn set_families(universe: usize, sets: usize) -> Vec<SetCoverInstance> {
    let subsets: Vec<Vec<usize>> = (1u32..1 << universe)
        .map(|m| (0..universe).filter(|&e| m >> e & 1 == 1).collect())
        .collect();
    let mut out = Vec::new();
    let total = subsets.len().pow(sets as u32);
    for code in 0..total {
        let mut c = code;
        let mut family = Vec::with_capacity(sets);
        for _ in 0..sets {
            family.push(subsets[c % subsets.len()].clone());
            c /= subsets.len();
        }
        out.push(SetCoverInstance::new(universe, family, None).unwrap());
    }
    out
}
