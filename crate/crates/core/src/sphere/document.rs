use serde::{Deserialize, Serialize};

use super::field::{FieldKind, ScalarField};
use super::grid::{Chart, SphereGrid};
use crate::error::GridError;

pub const FIELD_SCHEMA: &str = "conic-ma-lab.field/1";

/// JSON container for a field: one block per chart, entries `[radial, angular, value]`.
///
/// Nodes in the overlap annulus appear in both blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDocument {
    pub schema: String,
    pub n_phi: usize,
    pub n_u: usize,
    pub depth: f64,
    pub r_overlap: f64,
    pub kind: FieldKind,
    pub charts: Vec<ChartBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartBlock {
    pub chart: Chart,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SphereGrid {
    pub fn to_document(&self, f: &ScalarField) -> Result<FieldDocument, GridError> {
        self.check(f)?;
        let charts = [Chart::Z, Chart::W]
            .into_iter()
            .map(|chart| {
                let mut entries = Vec::new();
                for j in self.chart_rows(chart) {
                    for k in 0..self.n_phi() {
                        let idx = self.index(j, k);
                        let (r, a) = self.polar_index(chart, idx);
                        entries.push((r, a, f.values[idx]));
                    }
                }
                entries.sort_by_key(|e| (e.0, e.1));
                ChartBlock { chart, entries }
            })
            .collect();
        Ok(FieldDocument {
            schema: FIELD_SCHEMA.to_string(),
            n_phi: self.n_phi(),
            n_u: self.n_u(),
            depth: self.depth(),
            r_overlap: self.r_overlap(),
            kind: f.kind,
            charts,
        })
    }

    pub fn from_document(&self, doc: &FieldDocument) -> Result<ScalarField, GridError> {
        if doc.schema != FIELD_SCHEMA {
            return Err(GridError::Document(format!(
                "unknown schema {}",
                doc.schema
            )));
        }
        if doc.n_phi != self.n_phi() || doc.n_u != self.n_u() {
            return Err(GridError::Document("grid shape differs".into()));
        }
        let mut values = vec![f64::NAN; self.len()];
        for block in &doc.charts {
            for &(r, a, v) in &block.entries {
                let idx = self
                    .node_from_polar(block.chart, r, a)
                    .ok_or_else(|| GridError::Document(format!("index ({r}, {a}) out of range")))?;
                if values[idx].is_nan() {
                    values[idx] = v;
                } else if values[idx].to_bits() != v.to_bits() {
                    return Err(GridError::Document(format!(
                        "charts disagree at node {idx}"
                    )));
                }
            }
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(GridError::Document("charts do not cover the grid".into()));
        }
        Ok(ScalarField {
            values,
            kind: doc.kind,
        })
    }
}
