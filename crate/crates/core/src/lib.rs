//! Dense 3D contact-force and contact-patch reconstruction for air-inflated
//! membrane tactile sensors.
//!
//! An inflated elastic membrane observed by an internal depth camera and a
//! pressure sensor deforms globally under local contact. This crate recovers
//! the per-vertex external contact forces from the observed deformation and
//! the pressure change using a linear plane-stress membrane finite-element
//! model, then regularizes the ill-posed inversion with a group-lasso
//! problem that promotes vertex-sparse force fields without biasing force
//! directions.
//!
//! The main pieces:
//!
//! - [`mesh`]: triangulated membrane surface, lumped vertex areas and
//!   area-weighted normals, OFF I/O, spherical-cap generator.
//! - [`observation`]: pinhole camera, interpolated depth maps, pluggable
//!   optical-flow fields, and the deformation estimator mapping a sensor
//!   frame to per-vertex 3D displacements.
//! - [`fem`]: constant-strain-triangle plane-stress elements in per-face
//!   local frames, sparse stiffness assembly, pressure lumping, and the
//!   displacement/pressure to external-force map.
//! - [`estimator`]: the group-lasso corrected force estimate, solved with
//!   ADMM (block soft-thresholding prox, cached sparse Cholesky).
//! - [`contact`]: adaptive-threshold contact masks and IoU scoring.
//! - [`calibration`]: Nelder-Mead fit of the three free model scalars
//!   against force/contact ground truth.
//! - [`synthetic`]: forward quasi-static solver and frame renderer used as
//!   the independent oracle for the inverse pipeline.
//! - [`pipeline`], [`formats`], [`cli`]: end-to-end frame processing, file
//!   formats, and the command-line tool.

pub mod calibration;
pub mod cli;
pub mod contact;
pub mod estimator;
pub mod fem;
pub mod formats;
pub mod mesh;
pub mod observation;
pub mod pipeline;
pub mod sparse;
pub mod synthetic;

pub use contact::{contact_mask, inward_normal_pressure, mask_iou, ContactMask, ContactParams};
pub use estimator::{EstimationResult, EstimatorWeights, SolverConfig};
pub use fem::{MaterialParams, StiffnessMatrix};
pub use mesh::{SurfaceMesh, VertexGeometry};
pub use observation::{CameraModel, DisplacementField, ObservationFrame, ReferenceConfiguration};
