//! Uniform CSV reporting for the extension operators.

use super::componentwise::ComponentwiseReport;
use super::degenerate::DegenerateReport;
use super::hp::HpReport;

/// One extension outcome in the shared report schema.
#[derive(Debug, Clone)]
pub struct ExtensionRecord {
    /// Free-form label (operator name, square id, ...).
    pub label: String,
    /// Operator-specific quality ratio (realized bound over its yardstick).
    pub ratio: f64,
    /// Signed distance to the acceptance threshold; non-positive is good.
    pub slack: f64,
    pub triangles: usize,
    pub rounds: usize,
}

impl ExtensionRecord {
    pub fn from_hp(label: impl Into<String>, r: &HpReport) -> Self {
        ExtensionRecord {
            label: label.into(),
            ratio: r.ratio,
            slack: r.ratio - 1000.0,
            triangles: r.triangles,
            rounds: r.rounds,
        }
    }

    pub fn from_degenerate(label: impl Into<String>, r: &DegenerateReport) -> Self {
        ExtensionRecord {
            label: label.into(),
            ratio: r.ratio,
            slack: r.l1_deviation - r.budget,
            triangles: r.triangles,
            rounds: r.rounds,
        }
    }

    pub fn from_componentwise(label: impl Into<String>, r: &ComponentwiseReport) -> Self {
        ExtensionRecord {
            label: label.into(),
            ratio: (r.along / (r.width_along + r.epsilon))
                .max(r.across / (r.width_across + r.epsilon)),
            slack: r.slack(),
            triangles: r.triangles,
            rounds: r.rounds,
        }
    }
}

/// Renders records as CSV with a fixed header; numeric formatting is
/// deterministic (`{:.12e}`) so reports are byte-stable across runs.
pub fn extension_csv(records: &[ExtensionRecord]) -> String {
    let mut out = String::from("label,ratio,slack,triangles,rounds\n");
    for r in records {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{},{}\n",
            r.label, r.ratio, r.slack, r.triangles, r.rounds
        ));
    }
    out
}
