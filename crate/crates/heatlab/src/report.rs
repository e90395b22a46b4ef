//! Run reports.
//!
//! A report is a canonical JSON document: object keys sorted, every
//! float rendered as `{:.16e}`, no insignificant whitespace. Two runs
//! that measure the same numbers produce byte-identical files, so
//! reports diff cleanly and rerun drift is detectable with `cmp`.
//! Volatile facts (timestamps, thread counts, paths) live in a separate
//! manifest file that makes no canonicality promise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::verify::{coherence_matrix, CoherenceRow, ConditionReport, Verdict, VerifierConfig};

pub const REPORT_SCHEMA: &str = "heatlab-report/1";

/// Structural facts about the measured graph, enough to confirm a
/// report and a graph file belong together.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub edges: usize,
    pub total_measure: f64,
    pub truncation_marks: usize,
    pub anchors: BTreeMap<String, usize>,
}

impl GraphSummary {
    pub fn of(g: &WeightedGraph) -> GraphSummary {
        GraphSummary {
            vertices: g.vertex_count(),
            edges: g.edge_count(),
            total_measure: (0..g.vertex_count()).map(|v| g.measure(v)).sum(),
            truncation_marks: g.truncation().len(),
            anchors: g.anchors().clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub graph: GraphSummary,
    /// Digest of the canonical config JSON; ties the numbers to the
    /// exact knob settings without embedding the whole config.
    pub config_digest: String,
    pub conditions: Vec<ConditionReport>,
    pub coherence: Vec<CoherenceRow>,
}

impl RunReport {
    pub fn new(
        g: &WeightedGraph,
        cfg: &VerifierConfig,
        conditions: Vec<ConditionReport>,
    ) -> Result<RunReport> {
        Ok(RunReport {
            schema: REPORT_SCHEMA.into(),
            graph: GraphSummary::of(g),
            config_digest: config_digest(cfg)?,
            coherence: coherence_matrix(&conditions),
            conditions,
        })
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)
            .map_err(|e| Error::parse("report", e.to_string()))?;
        Ok(canonical_json(&value))
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        let report: RunReport =
            serde_json::from_str(text).map_err(|e| Error::parse("report", e.to_string()))?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::parse(
                "report",
                format!("schema {:?}, expected {REPORT_SCHEMA:?}", report.schema),
            ));
        }
        Ok(report)
    }

    /// The most severe verdict in the report; drives `--strict`.
    pub fn worst_verdict(&self) -> Verdict {
        let mut worst = Verdict::HoldsStably;
        for c in &self.conditions {
            worst = match (worst, c.verdict) {
                (_, Verdict::Fails) | (Verdict::Fails, _) => Verdict::Fails,
                (_, Verdict::Drifts) | (Verdict::Drifts, _) => Verdict::Drifts,
                _ => Verdict::HoldsStably,
            };
        }
        worst
    }
}

/// Hex sha256 of the canonical config rendering.
pub fn config_digest(cfg: &VerifierConfig) -> Result<String> {
    let value =
        serde_json::to_value(cfg).map_err(|e| Error::parse("config", e.to_string()))?;
    let canon = canonical_json(&value);
    let mut hasher = Sha256::new();
    hasher.update(canon.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    Ok(hex)
}

/// Canonical rendering of a JSON value: keys sorted, floats as
/// `{:.16e}` (17 significant digits, enough to round-trip any f64),
/// integers plain, compact separators.
pub fn canonical_json(value: &serde_json::Value) -> String {
    let mut out = String::new();
    write_canonical(&mut out, value);
    out
}

fn write_canonical(out: &mut String, value: &serde_json::Value) {
    use serde_json::Value;
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().expect("numeric json value"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string serialization"));
                out.push(':');
                write_canonical(out, &map[*key]);
            }
            out.push('}');
        }
    }
}

/// Volatile run facts; written next to the report, never canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub created_unix: u64,
    pub threads: usize,
    pub tool_version: String,
    pub graph_path: Option<String>,
    pub conditions: Vec<String>,
}

impl RunManifest {
    pub fn capture(graph_path: Option<&Path>, conditions: &[String]) -> RunManifest {
        RunManifest {
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            threads: rayon::current_num_threads(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            graph_path: graph_path.map(|p| p.display().to_string()),
            conditions: conditions.to_vec(),
        }
    }
}

/// `report.json` -> `report.manifest.json`.
pub fn manifest_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().unwrap_or_default().to_os_string();
    let mut name = stem;
    name.push(".manifest.json");
    report.with_file_name(name)
}

fn fmt_value(v: f64) -> String {
    match crate::verify::total_f64::tag(v) {
        Some(t) => t.to_string(),
        None => format!("{v:.16e}"),
    }
}

/// One CSV per condition curve (`<name>_curve.csv`, header
/// `scale,value`) plus `summary.csv` over all conditions.
pub fn write_curves_csv(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut summary = String::from("condition,constant,verdict\n");
    for c in &report.conditions {
        let mut text = String::from("scale,value\n");
        for p in &c.curve {
            let _ = writeln!(text, "{},{}", p.scale, fmt_value(p.value));
        }
        let path = dir.join(format!("{}_curve.csv", c.name));
        std::fs::write(&path, text)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        let _ = writeln!(
            summary,
            "{},{},{}",
            c.name,
            fmt_value(c.constant),
            verdict_str(c.verdict)
        );
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, summary)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::HoldsStably => "holds-stably",
        Verdict::Drifts => "drifts",
        Verdict::Fails => "fails",
    }
}

/// Human-readable rendering of a report.
pub fn render_markdown(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# heatlab report\n");
    let g = &report.graph;
    let _ = writeln!(
        out,
        "Graph: {} vertices, {} edges, total measure {:.6}, {} truncation marks.",
        g.vertices, g.edges, g.total_measure, g.truncation_marks
    );
    let _ = writeln!(out, "Config digest: `{}`\n", report.config_digest);

    let _ = writeln!(out, "## Conditions\n");
    let _ = writeln!(out, "| condition | constant | verdict | scales |");
    let _ = writeln!(out, "|---|---|---|---|");
    for c in &report.conditions {
        let scales: Vec<String> = c.curve.iter().map(|p| p.scale.to_string()).collect();
        let _ = writeln!(
            out,
            "| {} | {:.6} | {} | {} |",
            c.name,
            c.constant,
            verdict_str(c.verdict),
            scales.join(" ")
        );
    }

    if !report.coherence.is_empty() {
        let _ = writeln!(out, "\n## Coherence\n");
        let _ = writeln!(out, "| group | members | verdicts | agree |");
        let _ = writeln!(out, "|---|---|---|---|");
        for row in &report.coherence {
            let verdicts: Vec<&str> =
                row.verdicts.iter().map(|&v| verdict_str(v)).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                row.group,
                row.members.join(", "),
                verdicts.join(", "),
                if row.agree { "yes" } else { "NO" }
            );
        }
    }

    for c in &report.conditions {
        if c.witnesses.is_empty() && c.notes.is_empty() && c.extras.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n### {}\n", c.name);
        for (k, v) in &c.extras {
            let _ = writeln!(out, "- {k}: {v:.6}");
        }
        for w in &c.witnesses {
            let time = w.time.map(|t| format!(", time {t}")).unwrap_or_default();
            let partner =
                w.partner.map(|p| format!(", partner {p}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "- witness [{}]: center {}, radius {}{time}{partner}, value {:.6}",
                w.role, w.center, w.radius, w.value
            );
        }
        for note in &c.notes {
            let _ = writeln!(out, "- note: {note}");
        }
    }
    out
}
