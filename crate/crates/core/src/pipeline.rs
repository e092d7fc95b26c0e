//! End-to-end per-frame processing shared by the CLI, the calibration
//! loop, and the C bindings: deformation estimation, the group-lasso
//! solve, contact extraction, and stage timing.

use crate::contact::{contact_mask, inward_normal_pressure, ContactMask, ContactParams};
use crate::estimator::{AdmmSolver, EstimationResult, EstimatorWeights, SolveError, SolverConfig};
use crate::fem::{self, FemError, MaterialParams};
use crate::mesh::{MeshError, SurfaceMesh, VertexGeometry};
use crate::observation::{
    estimate_deformation, CameraModel, DisplacementField, ObservationError, ObservationFrame,
    ReferenceConfiguration,
};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Observation(#[from] ObservationError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// All tunables of the estimation pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub material: MaterialParams,
    pub weights: EstimatorWeights,
    pub contact: ContactParams,
    pub solver: SolverConfig,
    /// Seed each solve from the previous frame's correction (streaming
    /// use). Off by default so every frame is independent.
    pub warm_start: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            material: MaterialParams::sensor_default(),
            weights: EstimatorWeights::default(),
            contact: ContactParams::default(),
            solver: SolverConfig::default(),
            warm_start: false,
        }
    }
}

/// Wall-clock stage breakdown, seconds.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StageTiming {
    /// Deformation estimation (projection, flow, depth interpolation).
    pub deformation_s: f64,
    /// Stiffness assembly; zero on frames that reuse the assembled matrix.
    pub assembly_s: f64,
    /// Group-lasso solve.
    pub solve_s: f64,
    pub total_s: f64,
}

/// One frame's full output.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub displacements: DisplacementField,
    pub delta_p: f64,
    pub estimation: EstimationResult,
    /// Inward normal contact pressure per vertex, Pa.
    pub inward_pressure: Vec<f64>,
    pub mask: ContactMask,
    pub timing: StageTiming,
}

/// Reusable per-mesh estimator: assembles the stiffness and the solver
/// state once, then processes frames.
pub struct FrameEstimator {
    reference: ReferenceConfiguration,
    camera: CameraModel,
    geometry: VertexGeometry,
    stiffness: fem::StiffnessMatrix,
    solver: AdmmSolver,
    config: PipelineConfig,
    warm: Option<DisplacementField>,
    assembly_s: f64,
}

impl FrameEstimator {
    pub fn new(
        reference: ReferenceConfiguration,
        camera: CameraModel,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        let assembly_start = Instant::now();
        let geometry = VertexGeometry::compute(&reference.mesh);
        let stiffness = fem::assemble_stiffness(&reference.mesh, &config.material)?;
        let solver = AdmmSolver::new(&reference.mesh, &stiffness, &config.weights)?;
        let assembly_s = assembly_start.elapsed().as_secs_f64();
        Ok(Self {
            reference,
            camera,
            geometry,
            stiffness,
            solver,
            config,
            warm: None,
            assembly_s,
        })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.reference.mesh
    }

    pub fn geometry(&self) -> &VertexGeometry {
        &self.geometry
    }

    pub fn stiffness(&self) -> &fem::StiffnessMatrix {
        &self.stiffness
    }

    pub fn reference(&self) -> &ReferenceConfiguration {
        &self.reference
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Stiffness assembly time paid at construction, reported once.
    pub fn take_assembly_time(&mut self) -> f64 {
        std::mem::take(&mut self.assembly_s)
    }

    pub fn reset_warm_start(&mut self) {
        self.warm = None;
    }

    /// Full pipeline on one observation frame.
    pub fn estimate_frame(&mut self, frame: &ObservationFrame) -> Result<FrameResult, PipelineError> {
        let start = Instant::now();
        let displacements = estimate_deformation(&self.reference, frame, &self.camera)?;
        let deformation_s = start.elapsed().as_secs_f64();
        let delta_p = frame.delta_p(&self.reference);
        let mut result = self.estimate_displacements(displacements, delta_p)?;
        result.timing.deformation_s = deformation_s;
        result.timing.total_s += deformation_s;
        Ok(result)
    }

    /// Pipeline tail for an already-estimated displacement field.
    pub fn estimate_displacements(
        &mut self,
        displacements: DisplacementField,
        delta_p: f64,
    ) -> Result<FrameResult, PipelineError> {
        let assembly_s = self.take_assembly_time();
        let solve_start = Instant::now();
        let warm = if self.config.warm_start {
            self.warm.as_ref()
        } else {
            None
        };
        let estimation = self.solver.solve(
            &self.geometry,
            &displacements,
            delta_p,
            &self.config.solver,
            warm,
        )?;
        let solve_s = solve_start.elapsed().as_secs_f64();
        if self.config.warm_start {
            self.warm = Some(estimation.delta_u.clone());
        }
        let inward_pressure = inward_normal_pressure(&estimation.pressures, &self.geometry);
        let mask = contact_mask(&inward_pressure, &self.geometry, &self.config.contact);
        Ok(FrameResult {
            displacements,
            delta_p,
            estimation,
            inward_pressure,
            mask,
            timing: StageTiming {
                deformation_s: 0.0,
                assembly_s,
                solve_s,
                total_s: assembly_s + solve_s,
            },
        })
    }
}
