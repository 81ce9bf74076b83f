//! Patch definition documents.
//!
//! ```json
//! { "patches": [ { "degrees": [1, 1],
//!                  "knots": [[0,0,1,1], [0,0,1,1]],
//!                  "control_points": [[0,0], [1,0], [0,1], [1,1]],
//!                  "weights": [1, 1, 1, 1] } ] }
//! ```
//! Control points list the first parametric direction fastest. `weights`
//! may be omitted for polynomial patches.

use serde::{Deserialize, Serialize};

use super::{GeometryError, KnotVector, NurbsPatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub degrees: Vec<usize>,
    pub knots: Vec<Vec<f64>>,
    pub control_points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchDocument {
    pub patches: Vec<PatchSpec>,
}

impl PatchSpec {
    pub fn build(&self) -> Result<NurbsPatch<f64>, GeometryError> {
        if self.degrees.len() != self.knots.len() {
            return Err(GeometryError::PatchFile("one degree per knot vector required".into()));
        }
        let d = self.degrees.len();
        let kvs = self
            .knots
            .iter()
            .zip(&self.degrees)
            .map(|(k, &p)| KnotVector::new(k.clone(), p))
            .collect::<Result<Vec<_>, _>>()?;
        let mut pts = Vec::with_capacity(self.control_points.len());
        for p in &self.control_points {
            if p.len() != d {
                return Err(GeometryError::PatchFile(format!("control point {p:?} is not {d}-dimensional")));
            }
            let mut q = [0.0; 3];
            q[..d].copy_from_slice(p);
            pts.push(q);
        }
        let weights = self.weights.clone().unwrap_or_else(|| vec![1.0; pts.len()]);
        NurbsPatch::new(kvs, pts, weights)
    }

    pub fn from_patch(p: &NurbsPatch<f64>) -> Self {
        let d = p.dim();
        PatchSpec {
            degrees: p.knot_vectors().iter().map(KnotVector::degree).collect(),
            knots: p.knot_vectors().iter().map(|k| k.knots().to_vec()).collect(),
            control_points: p.control_points().iter().map(|c| c[..d].to_vec()).collect(),
            weights: Some(p.weights().to_vec()),
        }
    }
}

impl PatchDocument {
    pub fn parse(text: &str) -> Result<Vec<NurbsPatch<f64>>, GeometryError> {
        let doc: PatchDocument = serde_json::from_str(text).map_err(|e| GeometryError::PatchFile(e.to_string()))?;
        doc.patches.iter().map(PatchSpec::build).collect()
    }

    pub fn render(patches: &[NurbsPatch<f64>]) -> String {
        let doc = PatchDocument { patches: patches.iter().map(PatchSpec::from_patch).collect() };
        serde_json::to_string_pretty(&doc).expect("patch document serializes")
    }
}
