//! Contact-patch extraction: inward normal pressures, the adaptive
//! threshold rule, and mask IoU scoring.

use crate::mesh::VertexGeometry;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("mask sizes differ: {a} vs {b} vertices")]
    MeshMismatch { a: usize, b: usize },
}

/// Threshold constants for the contact rule
/// `thresh = max(k_const, k_linear * mean_pressure)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContactParams {
    /// Noise floor, Pa.
    pub k_const: f64,
    /// Multiple of the area-weighted mean pressure.
    pub k_linear: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            k_const: 2000.0,
            k_linear: 2.0,
        }
    }
}

/// Per-vertex contact flags plus the threshold that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMask {
    pub flags: Vec<bool>,
    pub threshold: f64,
}

impl ContactMask {
    pub fn contact_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn is_empty(&self) -> bool {
        self.contact_count() == 0
    }
}

/// Inward normal contact pressure `p_i = -n_i . (P_contact)_i`; positive
/// when contact pushes into the membrane.
pub fn inward_normal_pressure(
    pressures: &[Vector3<f64>],
    geometry: &VertexGeometry,
) -> Vec<f64> {
    assert_eq!(pressures.len(), geometry.vertex_count());
    pressures
        .iter()
        .zip(geometry.normals())
        .map(|(p, n)| -n.dot(p))
        .collect()
}

/// Adaptive threshold over the inward normal pressures: a vertex is in
/// contact when its pressure exceeds
/// `max(k_const, k_linear * (a^T p) / ||a||_1)`.
pub fn contact_mask(
    pressures: &[f64],
    geometry: &VertexGeometry,
    params: &ContactParams,
) -> ContactMask {
    assert_eq!(pressures.len(), geometry.vertex_count());
    let areas = geometry.lumped_areas();
    let weighted: f64 = pressures.iter().zip(areas).map(|(p, a)| p * a).sum();
    let total: f64 = areas.iter().sum();
    let mean = weighted / total;
    let threshold = params.k_const.max(params.k_linear * mean);
    ContactMask {
        flags: pressures.iter().map(|&p| p > threshold).collect(),
        threshold,
    }
}

/// Intersection over union of the contact vertex sets; 1.0 when both masks
/// are empty (perfect agreement on "no contact").
pub fn mask_iou(predicted: &ContactMask, truth: &ContactMask) -> Result<f64, ContactError> {
    if predicted.flags.len() != truth.flags.len() {
        return Err(ContactError::MeshMismatch {
            a: predicted.flags.len(),
            b: truth.flags.len(),
        });
    }
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (&p, &t) in predicted.flags.iter().zip(&truth.flags) {
        if p && t {
            intersection += 1;
        }
        if p || t {
            union += 1;
        }
    }
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(intersection as f64 / union as f64)
    }
}
