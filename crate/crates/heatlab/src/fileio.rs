//! Graph file formats.
//!
//! The edge-list format is line-oriented text: a header `vertices N`,
//! then one `u v w` triple per line. Blank lines and `#` comments are
//! ignored. Vertex metadata (labels, anchors, truncation marks) travels
//! in a JSON sidecar stored next to the edge file as `<name>.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Sidecar {
    #[serde(default)]
    labels: Vec<String>,
    #[serde(default)]
    anchors: BTreeMap<String, Vertex>,
    #[serde(default)]
    truncation: Vec<Vertex>,
    /// Distance of each vertex to the truncation locus. Informational:
    /// the loader recomputes it from `truncation`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    depth: Vec<u32>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

/// Serializes the edge list (header plus `u v w` lines).
pub fn edge_list_text(g: &WeightedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vertices {}", g.vertex_count());
    for (u, v, w) in g.edges() {
        let _ = writeln!(out, "{u} {v} {w:.17e}");
    }
    out
}

/// Writes `<path>` and the `<path>.json` sidecar.
pub fn save_graph(g: &WeightedGraph, path: &Path) -> Result<()> {
    std::fs::write(path, edge_list_text(g))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    let sidecar = Sidecar {
        labels: g.labels().to_vec(),
        anchors: g.anchors().clone(),
        truncation: g.truncation().to_vec(),
        depth: (0..g.vertex_count()).map(|v| g.depth(v)).collect(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::parse("sidecar", e.to_string()))?;
    let side = sidecar_path(path);
    std::fs::write(&side, json)
        .map_err(|e| Error::io(format!("writing {}", side.display()), e))?;
    Ok(())
}

/// Parses edge-list text. The declared vertex count must match the ids used.
pub fn parse_edge_list(text: &str, context: &str) -> Result<(usize, Vec<(Vertex, Vertex, f64)>)> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let first = fields.next().unwrap();
        if first == "vertices" {
            let n: usize = fields
                .next()
                .ok_or_else(|| Error::parse(context, format!("line {}: missing count", lineno + 1)))?
                .parse()
                .map_err(|_| Error::parse(context, format!("line {}: bad vertex count", lineno + 1)))?;
            declared = Some(n);
            continue;
        }
        let parse_err =
            || Error::parse(context, format!("line {}: expected 'u v w'", lineno + 1));
        let u: Vertex = first.parse().map_err(|_| parse_err())?;
        let v: Vertex = fields.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        let w: f64 = fields.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        if fields.next().is_some() {
            return Err(parse_err());
        }
        edges.push((u, v, w));
    }
    let n = declared
        .ok_or_else(|| Error::parse(context, "missing 'vertices N' header".to_string()))?;
    let used = edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
    if used != n {
        return Err(Error::parse(
            context,
            format!("header declares {n} vertices but edges span {used}"),
        ));
    }
    Ok((n, edges))
}

/// Loads an edge-list file, picking up the JSON sidecar when present.
pub fn load_graph(path: &Path) -> Result<WeightedGraph> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let (_, edges) = parse_edge_list(&text, &path.display().to_string())?;
    let side = sidecar_path(path);
    let sidecar = if side.exists() {
        let json = std::fs::read_to_string(&side)
            .map_err(|e| Error::io(format!("reading {}", side.display()), e))?;
        serde_json::from_str(&json)
            .map_err(|e| Error::parse(side.display().to_string(), e.to_string()))?
    } else {
        Sidecar::default()
    };
    WeightedGraph::from_parts(&edges, sidecar.labels, sidecar.anchors, sidecar.truncation)
}
