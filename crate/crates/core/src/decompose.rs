//! Block decomposition of full-diffusion instances.
//!
//! Once a cut node is active, the blocks hanging off it can be activated
//! independently of each other. Every block therefore has a single entry
//! point (the seed or the cut node nearest to it) and can be solved on its
//! own, provided each of its nodes keeps its global total influence: the
//! influence arriving from outside the block is added as external influence.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{DiffusionInstance, InfluenceNetwork, SolveResult};

/// Blocks (maximal biconnected subgraphs) and articulation points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Biconnected {
    /// Node sets, each sorted; a cut node appears in every block it touches.
    pub components: Vec<Vec<usize>>,
    /// Sorted articulation points.
    pub cut_nodes: Vec<usize>,
}

/// Tarjan's biconnected components, iterative. Isolated single-node
/// networks form one trivial block.
pub fn biconnected_components(net: &InfluenceNetwork) -> Result<Biconnected> {
    let n = net.node_count();
    if !net.is_connected() {
        return Err(Error::Disconnected);
    }
    if n == 1 {
        return Ok(Biconnected { components: vec![vec![0]], cut_nodes: vec![] });
    }

    const UNSEEN: usize = usize::MAX;
    let mut disc = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut clock = 0;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut components = Vec::new();
    // (node, parent, next neighbour index)
    let mut frames: Vec<(usize, usize, usize)> = vec![(0, UNSEEN, 0)];
    disc[0] = 0;
    low[0] = 0;
    clock += 1;

    while let Some(&mut (u, parent, ref mut next)) = frames.last_mut() {
        if let Some(nb) = net.neighbors(u).get(*next) {
            *next += 1;
            let v = nb.node;
            if disc[v] == UNSEEN {
                disc[v] = clock;
                low[v] = clock;
                clock += 1;
                edge_stack.push((u, v));
                frames.push((v, u, 0));
            } else if v != parent && disc[v] < disc[u] {
                edge_stack.push((u, v));
                low[u] = low[u].min(disc[v]);
            }
            continue;
        }
        frames.pop();
        if parent == UNSEEN {
            continue;
        }
        low[parent] = low[parent].min(low[u]);
        if low[u] >= disc[parent] {
            let mut block = Vec::new();
            while let Some((a, b)) = edge_stack.pop() {
                block.push(a);
                block.push(b);
                if (a, b) == (parent, u) {
                    break;
                }
            }
            block.sort_unstable();
            block.dedup();
            components.push(block);
        }
    }

    let mut count = vec![0usize; n];
    for block in &components {
        for &v in block {
            count[v] += 1;
        }
    }
    components.sort();
    let cut_nodes = (0..n).filter(|&v| count[v] > 1).collect();
    Ok(Biconnected { components, cut_nodes })
}

/// One block as a standalone full-diffusion instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInstance {
    /// Local network with offsets; its seed is the local id of `entry`.
    pub instance: DiffusionInstance,
    /// `nodes[local] = global`, sorted.
    pub nodes: Vec<usize>,
    /// Global id of the entry point.
    pub entry: usize,
}

impl ComponentInstance {
    pub fn to_global(&self, local: usize) -> usize {
        self.nodes[local]
    }
}

/// Splits a full-diffusion instance into one instance per block, in
/// breadth-first order of the block-cut tree rooted at the seed.
pub fn component_instances(instance: &DiffusionInstance) -> Result<Vec<ComponentInstance>> {
    if !instance.is_full() {
        return Err(Error::Unsupported(format!(
            "block decomposition needs full diffusion (z = {} < n = {})",
            instance.z,
            instance.n()
        )));
    }
    let net = &instance.network;
    let n = net.node_count();
    let bc = biconnected_components(net)?;

    let mut blocks_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, block) in bc.components.iter().enumerate() {
        for &v in block {
            blocks_of[v].push(b);
        }
    }

    let mut visited = vec![false; bc.components.len()];
    let mut queue = VecDeque::new();
    for &b in &blocks_of[instance.seed] {
        visited[b] = true;
        queue.push_back((b, instance.seed));
    }
    let mut out = Vec::with_capacity(bc.components.len());
    let mut in_block = vec![false; n];
    while let Some((b, entry)) = queue.pop_front() {
        let nodes = &bc.components[b];
        for &v in nodes {
            in_block[v] = true;
        }
        let extra: Vec<f64> = nodes
            .iter()
            .map(|&v| {
                net.neighbors(v)
                    .iter()
                    .filter(|nb| !in_block[nb.node])
                    .map(|nb| nb.incoming)
                    .sum()
            })
            .collect();
        let local = net.induced(nodes, &extra)?;
        let seed = nodes.binary_search(&entry).expect("entry lies in its block");
        out.push(ComponentInstance {
            instance: DiffusionInstance::with_model(local, seed, nodes.len(), instance.model)?,
            nodes: nodes.clone(),
            entry,
        });
        for &v in nodes {
            in_block[v] = false;
            if v == entry {
                continue;
            }
            for &next in &blocks_of[v] {
                if !visited[next] {
                    visited[next] = true;
                    queue.push_back((next, v));
                }
            }
        }
    }
    Ok(out)
}

/// Solves every block with `inner` and concatenates the block sequences in
/// breadth-first order, dropping each block's entry (already active).
///
/// Each node's step time is the one its own block reported; it equals the
/// global step time because neighbours outside the block are activated later.
pub fn solve_full_via_decomposition<F>(instance: &DiffusionInstance, inner: F) -> Result<SolveResult>
where
    F: Fn(&DiffusionInstance) -> Result<SolveResult> + Sync,
{
    let parts = component_instances(instance)?;
    let results: Vec<SolveResult> = parts
        .par_iter()
        .map(|c| inner(&c.instance))
        .collect::<Result<_>>()?;

    let mut seq = vec![instance.seed];
    let mut steps = vec![0.0];
    for (part, res) in parts.iter().zip(&results) {
        for (&local, &t) in res.nodes().iter().zip(&res.step_times).skip(1) {
            seq.push(part.to_global(local));
            steps.push(t);
        }
        if !res.is_feasible() {
            return Ok(SolveResult::infeasible(seq, steps));
        }
    }
    Ok(SolveResult::from_steps(seq, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> InfluenceNetwork {
        // triangle {0,1,2} and triangle {2,3,4} sharing node 2
        InfluenceNetwork::unit(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap()
    }

    #[test]
    fn small_shapes() {
        let path = InfluenceNetwork::unit(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let bc = biconnected_components(&path).unwrap();
        assert_eq!(bc.components, vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        assert_eq!(bc.cut_nodes, vec![1, 2]);

        let tri = InfluenceNetwork::unit(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let bc = biconnected_components(&tri).unwrap();
        assert_eq!(bc.components, vec![vec![0, 1, 2]]);
        assert!(bc.cut_nodes.is_empty());

        let bc = biconnected_components(&two_triangles()).unwrap();
        assert_eq!(bc.components, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        assert_eq!(bc.cut_nodes, vec![2]);
    }

    #[test]
    fn disconnected_is_rejected() {
        let net = InfluenceNetwork::unit(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(biconnected_components(&net), Err(Error::Disconnected)));
    }

    #[test]
    fn offsets_for_two_triangles() {
        let inst = DiffusionInstance::full(two_triangles(), 0).unwrap();
        let parts = component_instances(&inst).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].nodes, vec![0, 1, 2]);
        assert_eq!(parts[0].instance.network.external(), &[0.0, 0.0, 2.0]);
        assert_eq!(parts[1].entry, 2);
        assert_eq!(parts[1].instance.seed, 0);
        assert_eq!(parts[1].instance.network.external(), &[2.0, 0.0, 0.0]);
        for p in &parts {
            for (l, &g) in p.nodes.iter().enumerate() {
                assert_eq!(p.instance.network.total_influence(l), inst.network.total_influence(g));
            }
        }
    }

    #[test]
    fn star_splits_into_edges() {
        let star = InfluenceNetwork::unit(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let parts = component_instances(&DiffusionInstance::full(star, 0).unwrap()).unwrap();
        assert_eq!(parts.len(), 3);
        assert!(parts.iter().all(|p| p.nodes.len() == 2 && p.entry == 0));
    }

    #[test]
    fn partial_diffusion_is_unsupported() {
        let inst = DiffusionInstance::new(two_triangles(), 0, 3).unwrap();
        assert!(matches!(component_instances(&inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn merged_path_sequence() {
        let inst = DiffusionInstance::full(InfluenceNetwork::unit(3, &[(0, 1), (1, 2)]).unwrap(), 0).unwrap();
        let r = solve_full_via_decomposition(&inst, |i| crate::exact::dp_optimal(i, &crate::Limits::default()))
            .unwrap();
        assert_eq!(r.nodes(), &[0, 1, 2]);
        assert_eq!(r.step_times, vec![0.0, 2.0, 1.0]);
        assert_eq!(r.total_time, 3.0);
    }
}
