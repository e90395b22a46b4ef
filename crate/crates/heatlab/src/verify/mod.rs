//! Condition verifiers.
//!
//! Each verifier measures one named regularity condition over a grid of
//! interior centers and dyadic radii, reports the worst constant per
//! scale, and classifies the constant's stability. Verdicts never claim
//! an asymptotic fact: `HoldsStably` means the constant stayed inside
//! the configured stability window on this finite graph, nothing more.
//!
//! Conditions that quantify over a function class (harmonic functions,
//! caloric fields) are scanned over the extremal rays of that class:
//! harmonic-measure columns for elliptic conditions, killed point-mass
//! evolutions for parabolic ones. For solution classes the scan is
//! exact; where a condition formally quantifies over sub- or
//! supersolutions the scan checks the necessary direction and the
//! report says so in its notes.

mod elliptic;
mod geometry;
mod kernels;
mod meanvalue;
mod parabolic;
pub(crate) mod support;

pub use parabolic::{constrained_pair_ratio, harnack_window_ratio};
pub use support::interior_centers;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};

/// Window fractions for cylinder mean-value conditions: the averaging
/// window is `[c1 F, c2 F]`, the evaluation window `[c3 F, c4 F]`, the
/// cylinder runs to `c5 F`, and the windows live on `B(x, delta R)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindowConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub delta: f64,
}

impl WindowConstants {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = 0.0 < self.c1
            && self.c1 < self.c2
            && self.c2 < self.c3
            && self.c3 < self.c4
            && self.c4 <= self.c5
            && 0.0 < self.delta
            && self.delta <= 1.0;
        if !ok {
            return Err(Error::ConfigOrderViolation {
                what: format!("{what} windows need 0 < c1 < c2 < c3 < c4 <= c5 and 0 < delta <= 1"),
            });
        }
        Ok(())
    }
}

/// Tunable knobs shared by all verifiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierConfig {
    /// Measurement radii, strictly increasing.
    pub radii: Vec<u32>,
    /// Cap on interior centers examined per radius.
    pub centers_per_graph: usize,
    /// Size of the in-ball witness subsample for comparison conditions.
    pub comparison_witnesses: usize,
    /// `q` for upper subdivision scans.
    pub subdivision_q: f64,
    /// Leg constant for lower subdivision scans.
    pub subdivision_c: f64,
    /// `q` used by the off-diagonal kernel probes, where the small
    /// paper-grade `q` would push the scan outside any feasible graph.
    pub probe_q: f64,
    /// Times for kernel batteries, strictly increasing.
    pub kernel_times: Vec<u64>,
    /// Kernel centers must satisfy `depth >= margin * f(x, n_max)`:
    /// free-walk kernels feel reflections well beyond one ball radius.
    pub kernel_margin: f64,
    /// Near-diagonal windows use `B(x, fraction * f(x,n))`.
    pub near_diagonal_fraction: f64,
    /// Windows for the cylinder mean-value condition.
    pub mean_value: WindowConstants,
    /// Windows for the strong (two-sided) cylinder condition.
    pub strong_mean_value: WindowConstants,
    /// The strong condition requires `c4 - c1 <` this separation.
    pub window_separation: f64,
    /// A constant curve is stable while `max/min <=` this factor.
    pub stability_factor: f64,
    /// Use compensated accumulation in long kernel evolutions.
    pub compensated_sums: bool,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            radii: vec![4, 8, 16],
            centers_per_graph: 5,
            comparison_witnesses: 8,
            subdivision_q: 1.0 / 16.0,
            subdivision_c: 1.0,
            probe_q: 1.0,
            kernel_times: vec![16, 32, 64, 128, 256],
            kernel_margin: 3.0,
            near_diagonal_fraction: 0.5,
            mean_value: WindowConstants {
                c1: 0.125,
                c2: 0.25,
                c3: 0.5,
                c4: 0.75,
                c5: 1.0,
                delta: 1.0,
            },
            strong_mean_value: WindowConstants {
                c1: 0.125,
                c2: 0.1875,
                c3: 0.25,
                c4: 0.3125,
                c5: 1.0,
                delta: 0.5,
            },
            window_separation: 0.25,
            stability_factor: 2.0,
            compensated_sums: false,
        }
    }
}

impl VerifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || !self.radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::ConfigOrderViolation {
                what: "radii must be nonempty and strictly increasing".into(),
            });
        }
        if self.radii[0] < 2 {
            return Err(Error::ConfigOrderViolation { what: "radii must start at 2 or more".into() });
        }
        if self.kernel_times.is_empty() || !self.kernel_times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::ConfigOrderViolation {
                what: "kernel times must be nonempty and strictly increasing".into(),
            });
        }
        if self.centers_per_graph == 0 || self.comparison_witnesses == 0 {
            return Err(Error::ConfigOrderViolation {
                what: "center and witness counts must be positive".into(),
            });
        }
        for (name, v) in [
            ("subdivision_q", self.subdivision_q),
            ("subdivision_c", self.subdivision_c),
            ("probe_q", self.probe_q),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigOrderViolation {
                    what: format!("{name} must be positive"),
                });
            }
        }
        if !(self.kernel_margin >= 1.0) {
            return Err(Error::ConfigOrderViolation {
                what: "kernel_margin must be at least 1".into(),
            });
        }
        if !(self.near_diagonal_fraction > 0.0 && self.near_diagonal_fraction <= 1.0) {
            return Err(Error::ConfigOrderViolation {
                what: "near_diagonal_fraction must lie in (0, 1]".into(),
            });
        }
        self.mean_value.validate("mean_value")?;
        self.strong_mean_value.validate("strong_mean_value")?;
        if self.strong_mean_value.c4 - self.strong_mean_value.c1 >= self.window_separation {
            return Err(Error::ConfigOrderViolation {
                what: "strong windows must satisfy c4 - c1 < window_separation".into(),
            });
        }
        if !(self.stability_factor > 1.0) {
            return Err(Error::ConfigOrderViolation {
                what: "stability_factor must exceed 1".into(),
            });
        }
        Ok(())
    }
}

/// Constants on failing graphs are legitimately infinite; JSON has no
/// non-finite numbers, so those serialize as tagged strings and parse
/// back losslessly.
pub(crate) mod total_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn tag(v: f64) -> Option<&'static str> {
        if v.is_finite() {
            None
        } else if v.is_nan() {
            Some("nan")
        } else if v > 0.0 {
            Some("inf")
        } else {
            Some("-inf")
        }
    }

    pub fn untag(t: &str) -> Option<f64> {
        match t {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match tag(*v) {
            None => s.serialize_f64(*v),
            Some(t) => s.serialize_str(t),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub enum Raw {
        Num(f64),
        Tag(String),
    }

    impl Raw {
        pub fn get<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                Raw::Num(v) => Ok(v),
                Raw::Tag(t) => {
                    untag(&t).ok_or_else(|| E::custom(format!("bad float tag {t:?}")))
                }
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Raw::deserialize(d)?.get()
    }
}

/// Same contract as [`total_f64`] for string-keyed maps of constants.
pub(crate) mod total_f64_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<String, f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            match super::total_f64::tag(*v) {
                None => map.serialize_entry(k, v)?,
                Some(t) => map.serialize_entry(k, t)?,
            }
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw: BTreeMap<String, super::total_f64::Raw> = BTreeMap::deserialize(d)?;
        raw.into_iter().map(|(k, v)| Ok((k, v.get()?))).collect()
    }
}

/// Stability classification of a constant curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Constants stay within the stability factor across scales.
    HoldsStably,
    /// Finite constants whose spread exceeds the stability factor.
    Drifts,
    /// A degenerate or non-finite constant somewhere in the scan.
    Fails,
}

/// One point of a constant curve; `scale` is a radius or a time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub scale: u64,
    #[serde(with = "total_f64")]
    pub value: f64,
}

/// The cell achieving an extremal constant, with enough coordinates to
/// recompute the quantity independently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub role: String,
    pub center: Vertex,
    pub radius: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<Vertex>,
    #[serde(with = "total_f64")]
    pub value: f64,
}

/// Outcome of one condition verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    /// The headline constant: the worst cell over the whole scan.
    #[serde(with = "total_f64")]
    pub constant: f64,
    /// Secondary constants, keyed by short stable names.
    #[serde(with = "total_f64_map")]
    pub extras: BTreeMap<String, f64>,
    /// Worst constant per scale.
    pub curve: Vec<CurvePoint>,
    pub witnesses: Vec<Witness>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Classifies a curve: stable while `max/min` stays inside the factor,
/// failing on non-finite or non-positive values.
pub(crate) fn verdict_for_curve(curve: &[CurvePoint], stability_factor: f64) -> Verdict {
    if curve.is_empty() {
        return Verdict::Fails;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in curve {
        if !p.value.is_finite() || p.value <= 0.0 {
            return Verdict::Fails;
        }
        lo = lo.min(p.value);
        hi = hi.max(p.value);
    }
    if hi / lo <= stability_factor {
        Verdict::HoldsStably
    } else {
        Verdict::Drifts
    }
}

/// All condition names the dispatcher understands, in report order.
pub const CONDITION_NAMES: &[&str] = &[
    "vd", "tc", "er", "lambda", "h", "mv", "gf", "due", "ndle", "ple", "le", "pmv", "psmv", "ph",
];

/// Runs one named condition.
pub fn verify_condition(
    g: &WeightedGraph,
    name: &str,
    cfg: &VerifierConfig,
) -> Result<ConditionReport> {
    cfg.validate()?;
    match name {
        "vd" => geometry::volume_doubling(g, cfg),
        "tc" => geometry::time_comparison(g, cfg),
        "er" => geometry::einstein_relation(g, cfg),
        "lambda" => geometry::eigenvalue_floor(g, cfg),
        "h" => elliptic::harnack(g, cfg),
        "mv" => elliptic::mean_value(g, cfg),
        "gf" => elliptic::green_two_sided(g, cfg),
        "due" => kernels::diagonal_upper(g, cfg),
        "ndle" => kernels::near_diagonal_lower(g, cfg),
        "ple" => kernels::parabolic_lower(g, cfg),
        "le" => kernels::lower_profile(g, cfg),
        "pmv" => meanvalue::mean_value_cylinder(g, cfg, false),
        "psmv" => meanvalue::mean_value_cylinder(g, cfg, true),
        "ph" => parabolic::parabolic_harnack(g, cfg),
        other => Err(Error::UnknownCondition { name: other.to_string() }),
    }
}

/// Runs a list of conditions in order.
pub fn verify_many(
    g: &WeightedGraph,
    names: &[&str],
    cfg: &VerifierConfig,
) -> Result<Vec<ConditionReport>> {
    names.iter().map(|n| verify_condition(g, n, cfg)).collect()
}

/// One row of the equivalence dashboard: conditions that the scaling
/// theory makes interchangeable should earn the same verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceRow {
    pub group: String,
    pub members: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub agree: bool,
}

/// Groups whose members are mutually implied under regular volume and
/// resistance growth; disagreement inside a group flags either a
/// numerical artifact or a genuinely irregular graph.
pub fn coherence_matrix(reports: &[ConditionReport]) -> Vec<CoherenceRow> {
    let groups: &[(&str, &[&str])] = &[
        ("green-profile", &["gf"]),
        ("comparison-harnack", &["tc", "h"]),
        ("kernel-bounds", &["due", "ndle", "ple"]),
        ("cylinder-mean-value", &["pmv", "psmv"]),
    ];
    groups
        .iter()
        .filter_map(|(group, members)| {
            let found: Vec<(&str, Verdict)> = members
                .iter()
                .filter_map(|m| {
                    reports.iter().find(|r| r.name == *m).map(|r| (*m, r.verdict))
                })
                .collect();
            if found.is_empty() {
                return None;
            }
            let verdicts: Vec<Verdict> = found.iter().map(|&(_, v)| v).collect();
            let agree = verdicts.windows(2).all(|w| w[0] == w[1]);
            Some(CoherenceRow {
                group: group.to_string(),
                members: found.iter().map(|&(m, _)| m.to_string()).collect(),
                verdicts,
                agree,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        VerifierConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejects_misordered_windows() {
        let mut cfg = VerifierConfig::default();
        cfg.mean_value.c3 = cfg.mean_value.c2;
        assert!(matches!(cfg.validate(), Err(Error::ConfigOrderViolation { .. })));
        let mut cfg = VerifierConfig::default();
        cfg.strong_mean_value.c4 = cfg.strong_mean_value.c1 + cfg.window_separation;
        assert!(matches!(cfg.validate(), Err(Error::ConfigOrderViolation { .. })));
        let mut cfg = VerifierConfig::default();
        cfg.radii = vec![8, 4];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip_applies_defaults() {
        let cfg: VerifierConfig = serde_json::from_str("{\"radii\": [2, 4]}").unwrap();
        assert_eq!(cfg.radii, vec![2, 4]);
        assert_eq!(cfg.centers_per_graph, VerifierConfig::default().centers_per_graph);
        assert!(serde_json::from_str::<VerifierConfig>("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn verdict_rules() {
        let curve = |vals: &[f64]| -> Vec<CurvePoint> {
            vals.iter().enumerate().map(|(i, &v)| CurvePoint { scale: i as u64 + 1, value: v }).collect()
        };
        assert_eq!(verdict_for_curve(&curve(&[1.0, 1.5, 1.9]), 2.0), Verdict::HoldsStably);
        assert_eq!(verdict_for_curve(&curve(&[1.0, 1.5, 2.5]), 2.0), Verdict::Drifts);
        assert_eq!(verdict_for_curve(&curve(&[1.0, f64::INFINITY]), 2.0), Verdict::Fails);
        assert_eq!(verdict_for_curve(&curve(&[1.0, 0.0]), 2.0), Verdict::Fails);
        assert_eq!(verdict_for_curve(&[], 2.0), Verdict::Fails);
    }

    #[test]
    fn unknown_condition_is_an_error() {
        let g = WeightedGraph::from_edges(&[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            verify_condition(&g, "zz", &VerifierConfig::default()),
            Err(Error::UnknownCondition { .. })
        ));
    }

    #[test]
    fn coherence_matrix_groups_known_reports() {
        let mk = |name: &str, verdict: Verdict| ConditionReport {
            name: name.into(),
            constant: 1.0,
            extras: BTreeMap::new(),
            curve: vec![],
            witnesses: vec![],
            verdict,
            notes: vec![],
        };
        let reports = vec![
            mk("tc", Verdict::HoldsStably),
            mk("h", Verdict::HoldsStably),
            mk("pmv", Verdict::HoldsStably),
            mk("psmv", Verdict::Drifts),
        ];
        let rows = coherence_matrix(&reports);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].agree);
        assert_eq!(rows[0].group, "comparison-harnack");
        assert!(!rows[1].agree);
    }
}
