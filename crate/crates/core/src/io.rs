//! Network and instance files.
//!
//! JSON network: `{"n": 3, "external": [...], "edges": [{"u":0,"v":1,"wuv":1.0,"wvu":1.0}]}`,
//! with `external` optional. An instance file is the same object plus
//! `seed`, `z`, and optionally `alpha` and `beta` (default 1).
//!
//! Text network: a first line `n m` followed by `m` lines `u v wuv wvu`.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DiffusionInstance, Edge, InfluenceNetwork, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl Format {
    /// `.json` selects JSON; other extensions sniff the first non-blank byte.
    pub fn detect(path: &Path, contents: &str) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ if contents.trim_start().starts_with('{') => Format::Json,
            _ => Format::Text,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    external: Option<Vec<f64>>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    external: Option<Vec<f64>>,
    edges: Vec<Edge>,
    seed: usize,
    z: usize,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default = "one")]
    beta: f64,
}

fn one() -> f64 {
    1.0
}

impl From<&InfluenceNetwork> for NetworkFile {
    fn from(net: &InfluenceNetwork) -> Self {
        NetworkFile {
            n: net.node_count(),
            external: net.has_external().then(|| net.external().to_vec()),
            edges: net.edges().to_vec(),
        }
    }
}

pub fn network_to_json(net: &InfluenceNetwork) -> String {
    serde_json::to_string_pretty(&NetworkFile::from(net)).expect("network serializes")
}

pub fn network_from_json(text: &str) -> Result<InfluenceNetwork> {
    let file: NetworkFile = serde_json::from_str(text)?;
    InfluenceNetwork::from_edges(file.n, file.edges, file.external)
}

pub fn network_to_text(net: &InfluenceNetwork) -> Result<String> {
    if net.has_external() {
        return Err(Error::Unsupported(
            "the text format cannot store external influence; use JSON".into(),
        ));
    }
    let mut out = format!("{} {}\n", net.node_count(), net.edge_count());
    for e in net.edges() {
        out.push_str(&format!("{} {} {} {}\n", e.u, e.v, e.w_uv, e.w_vu));
    }
    Ok(out)
}

pub fn network_from_text(text: &str) -> Result<InfluenceNetwork> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse_line(1, "missing header line `n m`"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(Error::parse_line(hline, "header must be `n m`"));
    }
    let n: usize = parse_tok(head[0], hline, "n")?;
    let m: usize = parse_tok(head[1], hline, "m")?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines.by_ref().take(m) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse_line(line, "edge line must be `u v wuv wvu`"));
        }
        edges.push(Edge::new(
            parse_tok(toks[0], line, "u")?,
            parse_tok(toks[1], line, "v")?,
            parse_tok(toks[2], line, "wuv")?,
            parse_tok(toks[3], line, "wvu")?,
        ));
    }
    if edges.len() != m {
        return Err(Error::parse_line(hline, format!("header announces {m} edges, found {}", edges.len())));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse_line(line, "unexpected content after the edge list"));
    }
    InfluenceNetwork::from_edges(n, edges, None).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse_line(hline, message),
        other => other,
    })
}

fn parse_tok<T: std::str::FromStr>(tok: &str, line: usize, field: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse_line(line, format!("field `{field}`: cannot parse {tok:?}")))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<InfluenceNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    match Format::detect(path, &text) {
        Format::Json => network_from_json(&text),
        Format::Text => network_from_text(&text),
    }
}

pub fn save_network(net: &InfluenceNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | None => network_to_json(net),
        _ => network_to_text(net)?,
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn instance_to_json(inst: &DiffusionInstance) -> String {
    let net = &inst.network;
    let file = InstanceFile {
        n: net.node_count(),
        external: net.has_external().then(|| net.external().to_vec()),
        edges: net.edges().to_vec(),
        seed: inst.seed,
        z: inst.z,
        alpha: inst.model.alpha,
        beta: inst.model.beta,
    };
    serde_json::to_string_pretty(&file).expect("instance serializes")
}

pub fn instance_from_json(text: &str) -> Result<DiffusionInstance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let net = InfluenceNetwork::from_edges(file.n, file.edges, file.external)?;
    DiffusionInstance::with_model(net, file.seed, file.z, Model { alpha: file.alpha, beta: file.beta })
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<DiffusionInstance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn save_instance(inst: &DiffusionInstance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, instance_to_json(inst))?;
    Ok(())
}
