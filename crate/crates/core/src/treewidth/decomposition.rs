//! Rooted tree decompositions: files, validation and the min-fill heuristic.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::InfluenceNetwork;

/// Tree of bags rooted at `root`. The children of a bag are its tree
/// neighbours other than its parent, in the order the edges are listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDecomposition {
    pub root: usize,
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<[usize; 2]>,
}

/// Parent/children view of a decomposition that forms a tree.
#[derive(Debug, Clone)]
pub(crate) struct Rooted {
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Breadth-first order from the root.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TdViolation {
    RootOutOfRange { root: usize, bags: usize },
    EdgeOutOfRange { edge: usize },
    BagNodeOutOfRange { bag: usize, node: usize },
    /// Wrong edge count, a cycle, or bags unreachable from the root.
    NotATree(String),
    NodeUncovered { node: usize },
    EdgeUncovered { u: usize, v: usize },
    /// Bags holding `node` do not form a connected subtree.
    SplitNode { node: usize, pieces: usize },
}

impl fmt::Display for TdViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TdViolation::RootOutOfRange { root, bags } => write!(f, "root {root} out of range for {bags} bags"),
            TdViolation::EdgeOutOfRange { edge } => write!(f, "tree edge {edge} refers to a missing bag"),
            TdViolation::BagNodeOutOfRange { bag, node } => write!(f, "bag {bag} holds unknown node {node}"),
            TdViolation::NotATree(why) => write!(f, "bags do not form a tree: {why}"),
            TdViolation::NodeUncovered { node } => write!(f, "node {node} is in no bag"),
            TdViolation::EdgeUncovered { u, v } => write!(f, "edge {{{u}, {v}}} is in no bag"),
            TdViolation::SplitNode { node, pieces } => {
                write!(f, "bags containing node {node} form {pieces} disconnected pieces")
            }
        }
    }
}

/// Violations found and the width (largest bag minus one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdReport {
    pub violations: Vec<TdViolation>,
    pub treewidth: usize,
}

impl TdReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl TreeDecomposition {
    /// Bags are sorted and deduplicated.
    pub fn new(root: usize, bags: Vec<Vec<usize>>, edges: Vec<[usize; 2]>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        TreeDecomposition { root, bags, edges }
    }

    /// One bag holding every node.
    pub fn single_bag(n: usize) -> Self {
        TreeDecomposition::new(0, vec![(0..n).collect()], vec![])
    }

    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1)
    }

    pub(crate) fn rooted(&self) -> std::result::Result<Rooted, Vec<TdViolation>> {
        let b = self.bags.len();
        let mut errs = Vec::new();
        if self.root >= b {
            errs.push(TdViolation::RootOutOfRange { root: self.root, bags: b });
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e[0] >= b || e[1] >= b {
                errs.push(TdViolation::EdgeOutOfRange { edge: i });
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        if self.edges.len() + 1 != b {
            return Err(vec![TdViolation::NotATree(format!("{} bags but {} edges", b, self.edges.len()))]);
        }
        let mut adj = vec![Vec::new(); b];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        let mut parent = vec![None; b];
        let mut seen = vec![false; b];
        let mut children = vec![Vec::new(); b];
        let mut order = Vec::with_capacity(b);
        let mut queue = VecDeque::from([self.root]);
        seen[self.root] = true;
        while let Some(t) = queue.pop_front() {
            order.push(t);
            for &c in &adj[t] {
                if !seen[c] {
                    seen[c] = true;
                    parent[c] = Some(t);
                    children[t].push(c);
                    queue.push_back(c);
                }
            }
        }
        if order.len() != b {
            return Err(vec![TdViolation::NotATree(format!(
                "{} of {} bags unreachable from the root",
                b - order.len(),
                b
            ))]);
        }
        Ok(Rooted { parent, children, order })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let td: TreeDecomposition = serde_json::from_str(text)?;
        Ok(TreeDecomposition::new(td.root, td.bags, td.edges))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decomposition serializes")
    }

    /// PACE `.td` text: `s td <bags> <max bag size> <nodes>`, then
    /// `b <id> <nodes...>` lines and `<id> <id>` edge lines, all 1-based.
    /// The first bag becomes the root.
    pub fn from_pace(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            match toks.first() {
                None | Some(&"c") => continue,
                Some(&"s") => {
                    if toks.len() != 5 || toks[1] != "td" {
                        return Err(Error::parse_line(line, "solution line must be `s td <bags> <width+1> <n>`"));
                    }
                    let count = pace_num(toks[2], line)?;
                    declared = Some(count);
                    bags = vec![None; count];
                }
                Some(&"b") => {
                    let count = declared.ok_or_else(|| Error::parse_line(line, "bag before the `s` line"))?;
                    let id = pace_num(toks.get(1).ok_or_else(|| Error::parse_line(line, "missing bag id"))?, line)?;
                    if id == 0 || id > count {
                        return Err(Error::parse_line(line, format!("bag id {id} outside 1..={count}")));
                    }
                    let nodes = toks[2..]
                        .iter()
                        .map(|t| pace_num(t, line).and_then(|v| one_based(v, line)))
                        .collect::<Result<Vec<_>>>()?;
                    bags[id - 1] = Some(nodes);
                }
                Some(_) => {
                    if toks.len() != 2 {
                        return Err(Error::parse_line(line, "edge line must be `<bag> <bag>`"));
                    }
                    let a = one_based(pace_num(toks[0], line)?, line)?;
                    let b = one_based(pace_num(toks[1], line)?, line)?;
                    edges.push([a, b]);
                }
            }
        }
        if declared.is_none() {
            return Err(Error::parse_line(1, "missing `s td` line"));
        }
        let bags = bags
            .into_iter()
            .enumerate()
            .map(|(i, b)| b.ok_or_else(|| Error::parse_field(format!("bag {}", i + 1), "declared but not listed")))
            .collect::<Result<Vec<_>>>()?;
        Ok(TreeDecomposition::new(0, bags, edges))
    }

    /// PACE text with the root renumbered to bag 1.
    pub fn to_pace(&self, n: usize) -> String {
        let b = self.bags.len();
        // swap the root with bag 0 so it is listed first
        let relabel = |t: usize| {
            if t == self.root {
                0
            } else if t == 0 {
                self.root
            } else {
                t
            }
        };
        let mut out = format!("s td {} {} {}\n", b, self.width() + 1, n);
        for t in 0..b {
            let bag = &self.bags[relabel(t)];
            out.push_str(&format!("b {}", t + 1));
            for v in bag {
                out.push_str(&format!(" {}", v + 1));
            }
            out.push('\n');
        }
        for e in &self.edges {
            out.push_str(&format!("{} {}\n", relabel(e[0]) + 1, relabel(e[1]) + 1));
        }
        out
    }

    /// `.td` files are read as PACE text, anything else as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        if path.extension().and_then(|e| e.to_str()) == Some("td") {
            Self::from_pace(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, n: usize) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().and_then(|e| e.to_str()) == Some("td") {
            self.to_pace(n)
        } else {
            self.to_json()
        };
        fs::write(path, text)?;
        Ok(())
    }
}

fn pace_num(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse_line(line, format!("cannot parse {tok:?} as a positive integer")))
}

fn one_based(v: usize, line: usize) -> Result<usize> {
    v.checked_sub(1).ok_or_else(|| Error::parse_line(line, "ids are 1-based"))
}

/// Checks coverage of nodes and edges, connectedness of every node's bags,
/// and that the bags form a tree reachable from the root.
pub fn validate_decomposition(net: &InfluenceNetwork, td: &TreeDecomposition) -> TdReport {
    let n = net.node_count();
    let mut violations = Vec::new();
    for (bag, nodes) in td.bags.iter().enumerate() {
        for &node in nodes.iter().filter(|&&v| v >= n) {
            violations.push(TdViolation::BagNodeOutOfRange { bag, node });
        }
    }
    let tree_ok = match td.rooted() {
        Ok(_) => true,
        Err(errs) => {
            violations.extend(errs);
            false
        }
    };

    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, bag) in td.bags.iter().enumerate() {
        for &v in bag.iter().filter(|&&v| v < n) {
            holders[v].push(t);
        }
    }
    for (node, h) in holders.iter().enumerate() {
        if h.is_empty() {
            violations.push(TdViolation::NodeUncovered { node });
        }
    }
    for e in net.edges().iter().filter(|e| e.u != e.v) {
        let covered = holders[e.u].iter().any(|&t| td.bags[t].binary_search(&e.v).is_ok());
        if !covered {
            violations.push(TdViolation::EdgeUncovered { u: e.u.min(e.v), v: e.u.max(e.v) });
        }
    }
    if tree_ok {
        // in a tree, a vertex set with c inner edges spans |set| - c pieces
        for (node, h) in holders.iter().enumerate().filter(|(_, h)| !h.is_empty()) {
            let inner = td
                .edges
                .iter()
                .filter(|e| td.bags[e[0]].binary_search(&node).is_ok() && td.bags[e[1]].binary_search(&node).is_ok())
                .count();
            let pieces = h.len() - inner;
            if pieces != 1 {
                violations.push(TdViolation::SplitNode { node, pieces });
            }
        }
    }
    TdReport { violations, treewidth: td.width() }
}

/// Min-fill elimination: repeatedly eliminate the node whose neighbourhood
/// needs the fewest fill edges (ties: smaller degree, then smaller id).
///
/// Bag of `v` is `v` plus its neighbours at elimination time, attached to the
/// bag of the earliest-eliminated of those neighbours. Bags contained in an
/// adjacent bag are contracted away. Disconnected networks get their pieces
/// chained under the last root.
pub fn min_fill_decomposition(net: &InfluenceNetwork) -> TreeDecomposition {
    let n = net.node_count();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| net.neighbor_ids(v).filter(|&u| u != v).collect()).collect();
    let mut eliminated = vec![false; n];
    let mut position = vec![usize::MAX; n];
    let mut bags: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut owner: Vec<usize> = Vec::with_capacity(n);

    for step in 0..n {
        let v = (0..n)
            .filter(|&v| !eliminated[v])
            .min_by_key(|&v| (fill_in(&adj, v), adj[v].len(), v))
            .expect("a node remains");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
            adj[a].remove(&v);
        }
        adj[v].clear();
        eliminated[v] = true;
        position[v] = step;
        let mut bag = nbrs;
        bag.push(v);
        bag.sort_unstable();
        bags.push(bag);
        owner.push(v);
    }

    // parent of bag(v): bag of the earliest-eliminated later neighbour
    let mut parent: Vec<Option<usize>> = bags
        .iter()
        .zip(&owner)
        .map(|(bag, &v)| {
            bag.iter()
                .filter(|&&u| u != v)
                .map(|&u| position[u])
                .min()
        })
        .collect();
    let last = n - 1;
    for (t, p) in parent.iter_mut().enumerate() {
        if p.is_none() && t != last {
            *p = Some(last);
        }
    }

    // contract bags that are subsets of their parent or child
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for t in 0..n {
            if !alive[t] {
                continue;
            }
            let Some(p) = parent[t] else { continue };
            if is_subset(&bags[t], &bags[p]) {
                alive[t] = false;
                for q in parent.iter_mut().filter(|q| **q == Some(t)) {
                    *q = Some(p);
                }
                changed = true;
            } else if is_subset(&bags[p], &bags[t]) {
                // contract the edge, keeping the larger bag in p's place
                bags[p] = std::mem::take(&mut bags[t]);
                alive[t] = false;
                for q in parent.iter_mut().filter(|q| **q == Some(t)) {
                    *q = Some(p);
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let live: Vec<usize> = (0..n).filter(|&t| alive[t]).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &t) in live.iter().enumerate() {
        index[t] = i;
    }
    let root = live.iter().position(|&t| parent[t].is_none()).expect("one root remains");
    let edges = live
        .iter()
        .filter_map(|&t| parent[t].map(|p| [index[p], index[t]]))
        .collect();
    TreeDecomposition::new(root, live.iter().map(|&t| bags[t].clone()).collect(), edges)
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        missing += nbrs[i + 1..].iter().filter(|b| !adj[a].contains(b)).count();
    }
    missing
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}
