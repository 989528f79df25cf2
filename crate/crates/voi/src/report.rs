//! Report assembly: one JSON document per analysis plus an aligned
//! plain-text rendering. The headline table shows clipped index values;
//! raw estimates stay available under `diagnostics`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorEntry {
    pub name: String,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "V_se")]
    pub v_se: f64,
    #[serde(rename = "relative_V")]
    pub relative_v: Option<f64>,
    #[serde(rename = "DC")]
    pub dc: Option<f64>,
    pub sobol_first: Option<f64>,
    pub diagnostics: FactorDiagnostics,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    /// Estimate before the nonnegativity clip and noise floor.
    pub raw: f64,
    /// Plug-in estimate, when the re-optimization variant is the headline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plugin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobol_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleInfoEntry {
    pub factor: String,
    pub n_s: usize,
    #[serde(rename = "V_Z")]
    pub v_z: f64,
    #[serde(rename = "V_Z_se")]
    pub v_z_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoiReport {
    pub factors: Vec<FactorEntry>,
    /// 1-based alternative index for discrete problems, decision value for
    /// continuous ones.
    pub a_opt: Value,
    pub evpi: Option<f64>,
    pub evpm: Option<f64>,
    pub expected_utilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_information: Vec<SampleInfoEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub config_echo: Value,
}

impl VoiReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned plain-text table: per factor the clipped value, its standard
    /// error, the relative value, the decision-change probability, and the
    /// first-order Sobol' index.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("a_opt:               {}\n", self.a_opt));
        out.push_str(&format!(
            "expected utilities:  [{}]\n",
            self.expected_utilities
                .iter()
                .map(|v| format!("{v:.4e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        if let Some(evpi) = self.evpi {
            out.push_str(&format!("EVPI:                {evpi:.4e}\n"));
        }
        if let Some(evpm) = self.evpm {
            out.push_str(&format!("EVPM:                {evpm:.4e}\n"));
        }
        out.push('\n');

        let mut rows: Vec<[String; 6]> = vec![[
            "factor".into(),
            "V".into(),
            "SE(V)".into(),
            "V/norm".into(),
            "DC".into(),
            "S1".into(),
        ]];
        for f in &self.factors {
            rows.push([
                f.name.clone(),
                format!("{:.4e}", f.v),
                format!("{:.1e}", f.v_se),
                f.relative_v.map_or("-".into(), |v| format!("{v:.3}")),
                f.dc.map_or("-".into(), |v| format!("{v:.3}")),
                f.sobol_first.map_or("-".into(), |v| format!("{v:.3}")),
            ]);
        }
        let mut width = [0usize; 6];
        for row in &rows {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&width)
                .map(|(cell, w)| format!("{cell:>w$}", w = w))
                .collect();
            out.push_str(&line.join("  "));
            out.push('\n');
        }

        if !self.sample_information.is_empty() {
            out.push_str("\nsample information value:\n");
            for e in &self.sample_information {
                out.push_str(&format!(
                    "  {}  n_s={:>4}  V_Z={:.4e}  SE={:.1e}\n",
                    e.factor, e.n_s, e.v_z, e.v_z_se
                ));
            }
        }
        if !self.warnings.is_empty() {
            out.push_str("\nwarnings:\n");
            for w in &self.warnings {
                out.push_str(&format!("  - {w}\n"));
            }
        }
        out.push_str("\nraw (unclipped) estimates:\n");
        for f in &self.factors {
            out.push_str(&format!("  {}: {:.4e}\n", f.name, f.diagnostics.raw));
        }
        out
    }
}
