//! Fitting the three free model scalars (k_f, k_u, E) against force and
//! contact ground truth.
//!
//! The loss per observation combines the net-force error with a soft
//! contact-agreement term built from sigmoid-squashed threshold margins.
//! The summed loss over the dataset is minimized by Nelder-Mead over
//! log10-transformed parameters (the landscape is smooth in decades, not
//! in raw values) with bound clamping and optional restarts. Deformation
//! estimation is independent of the parameters, so each sample's
//! displacement field is computed once up front; solves are warm-started
//! from the same sample's previous correction across evaluations.

mod nelder_mead;

pub use nelder_mead::{minimize, MinimizeResult};

use crate::contact::{contact_mask, inward_normal_pressure, ContactParams};
use crate::estimator::{AdmmSolver, EstimatorWeights, SolverConfig};
use crate::fem::{self, MaterialParams};
use crate::mesh::VertexGeometry;
use crate::observation::{
    estimate_deformation, CameraModel, DisplacementField, ObservationFrame,
    ReferenceConfiguration,
};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration dataset is empty")]
    EmptyDataset,
    #[error("every sample in the dataset failed the observation pipeline")]
    AllSamplesFailed,
    #[error(transparent)]
    Fem(#[from] fem::FemError),
    #[error(transparent)]
    Solve(#[from] crate::estimator::SolveError),
}

/// The three calibrated scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Force penalty, 1/N.
    pub k_f: f64,
    /// Displacement penalty, 1/m^2.
    pub k_u: f64,
    /// Young's modulus, Pa.
    pub youngs_modulus: f64,
}

impl Default for CalibrationParams {
    /// Reference fit on the physical sensor: k_f = 0.3322 1/N,
    /// k_u = 537592 1/m^2, E = 1.317 MPa.
    fn default() -> Self {
        Self {
            k_f: 0.3322,
            k_u: 537_592.0,
            youngs_modulus: 1.317e6,
        }
    }
}

impl CalibrationParams {
    pub fn weights(&self) -> EstimatorWeights {
        EstimatorWeights {
            k_f: self.k_f,
            k_u: self.k_u,
        }
    }

    fn to_log(self) -> [f64; 3] {
        [
            self.k_f.log10(),
            self.k_u.log10(),
            self.youngs_modulus.log10(),
        ]
    }

    fn from_log(log: &[f64]) -> Self {
        Self {
            k_f: 10f64.powf(log[0]),
            k_u: 10f64.powf(log[1]),
            youngs_modulus: 10f64.powf(log[2]),
        }
    }
}

/// Inclusive parameter bounds, physical units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamBounds {
    pub k_f: (f64, f64),
    pub k_u: (f64, f64),
    pub youngs_modulus: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            k_f: (1e-3, 1e2),
            k_u: (1e2, 1e8),
            youngs_modulus: (0.1e6, 10e6),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Net-force loss weight, 1/N.
    pub lambda1: f64,
    /// Contact loss weight, dimensionless.
    pub lambda2: f64,
    /// Soft-contact sharpness.
    pub k_opt: f64,
    pub bounds: ParamBounds,
    /// Function evaluations per restart.
    pub budget: usize,
    pub restarts: usize,
    pub initial: CalibrationParams,
    /// Initial simplex step, log10 units.
    pub initial_step: f64,
    /// Fixed material constants; the modulus comes from the parameters.
    pub poisson_ratio: f64,
    pub thickness: f64,
    pub contact: ContactParams,
    pub solver: SolverConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 10.0,
            k_opt: 2.0,
            bounds: ParamBounds::default(),
            budget: 200,
            restarts: 3,
            initial: CalibrationParams::default(),
            initial_step: 0.3,
            poisson_ratio: 0.5,
            thickness: 0.65e-3,
            contact: ContactParams::default(),
            solver: SolverConfig::calibration_default(),
        }
    }
}

/// One labeled observation.
pub struct CalibrationSample {
    pub frame: ObservationFrame,
    /// Measured net contact force, N.
    pub f_gt: Vector3<f64>,
    /// Ground-truth per-vertex contact flags.
    pub c_gt: Vec<bool>,
}

/// Fixed context the dataset was recorded against.
pub struct CalibrationContext {
    pub reference: ReferenceConfiguration,
    pub camera: CameraModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub params: CalibrationParams,
    /// Best loss within the first evaluations covering the initial simplex.
    pub initial_simplex_loss: f64,
    pub final_loss: f64,
    pub evaluations: usize,
    /// Best summed loss after each evaluation.
    pub history: Vec<f64>,
    /// Per-sample losses at the fitted parameters (penalty entries for
    /// failed samples).
    pub per_sample_losses: Vec<f64>,
    /// Parameters the loss is numerically insensitive to (finite-difference
    /// sensitivity below 1e-6 of the loss scale).
    pub insensitive: Vec<String>,
    pub failed_samples: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loss contribution of already-computed pipeline outputs.
fn loss_terms(
    net_force: &Vector3<f64>,
    inward_pressure: &[f64],
    threshold: f64,
    f_gt: &Vector3<f64>,
    c_gt: &[bool],
    config: &CalibrationConfig,
) -> f64 {
    let force_term = config.lambda1 * (net_force - f_gt).norm();
    let contact_term = if inward_pressure.is_empty() {
        0.0
    } else {
        inward_pressure
            .iter()
            .zip(c_gt)
            .map(|(&p, &truth)| {
                let score = sigmoid(config.k_opt * (p - threshold) / threshold);
                (score - if truth { 1.0 } else { 0.0 }).abs()
            })
            .sum::<f64>()
            / inward_pressure.len() as f64
    };
    force_term + config.lambda2 * contact_term
}

/// Loss of a frame whose pipeline failed: strictly worse than any
/// plausible successful frame, but finite.
fn failed_sample_loss(config: &CalibrationConfig) -> f64 {
    config.lambda1 * 10.0 + config.lambda2
}

struct PreparedSample {
    displacements: Option<DisplacementField>,
    delta_p: f64,
    f_gt: Vector3<f64>,
    c_gt: Vec<bool>,
}

struct LossEvaluator<'a> {
    context: &'a CalibrationContext,
    config: &'a CalibrationConfig,
    geometry: VertexGeometry,
    /// Stiffness assembled at E = 1 Pa; scaling by E replaces reassembly.
    unit_stiffness: fem::StiffnessMatrix,
    prepared: Vec<PreparedSample>,
    warm: Vec<Option<DisplacementField>>,
}

impl<'a> LossEvaluator<'a> {
    fn new(
        dataset: &[CalibrationSample],
        context: &'a CalibrationContext,
        config: &'a CalibrationConfig,
    ) -> Result<Self, CalibrationError> {
        if dataset.is_empty() {
            return Err(CalibrationError::EmptyDataset);
        }
        let mesh = &context.reference.mesh;
        let geometry = VertexGeometry::compute(mesh);
        let unit_material = MaterialParams {
            youngs_modulus: 1.0,
            poisson_ratio: config.poisson_ratio,
            thickness: config.thickness,
        };
        let unit_stiffness = fem::assemble_stiffness(mesh, &unit_material)?;
        let prepared: Vec<PreparedSample> = dataset
            .iter()
            .map(|sample| {
                let displacements =
                    estimate_deformation(&context.reference, &sample.frame, &context.camera).ok();
                PreparedSample {
                    displacements,
                    delta_p: sample.frame.delta_p(&context.reference),
                    f_gt: sample.f_gt,
                    c_gt: sample.c_gt.clone(),
                }
            })
            .collect();
        if prepared.iter().all(|p| p.displacements.is_none()) {
            return Err(CalibrationError::AllSamplesFailed);
        }
        let warm = vec![None; prepared.len()];
        Ok(Self {
            context,
            config,
            geometry,
            unit_stiffness,
            prepared,
            warm,
        })
    }

    fn failed_samples(&self) -> usize {
        self.prepared
            .iter()
            .filter(|p| p.displacements.is_none())
            .count()
    }

    /// Summed loss at physical parameters, with per-sample breakdown.
    fn evaluate(&mut self, params: &CalibrationParams) -> Result<(f64, Vec<f64>), CalibrationError> {
        let mesh = &self.context.reference.mesh;
        let stiffness = self.unit_stiffness.scaled(params.youngs_modulus);
        // The useful ADMM penalty tracks the inverse square of the
        // stiffness magnitude across the searched modulus range (measured:
        // the per-E optimum follows rho * (E_anchor / E)^2 closely at sweep
        // tolerances), so anchor the configured value at the default
        // modulus and rescale per evaluation.
        let mut solver_config = self.config.solver.clone();
        let anchor = CalibrationParams::default().youngs_modulus / params.youngs_modulus;
        solver_config.rho *= anchor * anchor;
        let mut solver = AdmmSolver::new(mesh, &stiffness, &params.weights())?;
        let mut per_sample = Vec::with_capacity(self.prepared.len());
        let mut total = 0.0;
        for (idx, sample) in self.prepared.iter().enumerate() {
            let loss = match &sample.displacements {
                None => failed_sample_loss(self.config),
                Some(u) => {
                    let result = solver.solve(
                        &self.geometry,
                        u,
                        sample.delta_p,
                        &solver_config,
                        self.warm[idx].as_ref(),
                    )?;
                    let inward = inward_normal_pressure(&result.pressures, &self.geometry);
                    let mask = contact_mask(&inward, &self.geometry, &self.config.contact);
                    let loss = loss_terms(
                        &result.net_force,
                        &inward,
                        mask.threshold,
                        &sample.f_gt,
                        &sample.c_gt,
                        self.config,
                    );
                    self.warm[idx] = Some(result.delta_u);
                    loss
                }
            };
            per_sample.push(loss);
            total += loss;
        }
        Ok((total, per_sample))
    }
}

/// Loss of a single sample at the given parameters; the standalone entry
/// point (the batched [`calibrate`] path shares assembly and warm starts
/// instead).
pub fn sample_loss(
    sample: &CalibrationSample,
    params: &CalibrationParams,
    context: &CalibrationContext,
    config: &CalibrationConfig,
) -> Result<f64, CalibrationError> {
    let mut evaluator = LossEvaluator::new(std::slice::from_ref(sample), context, config)?;
    let (total, _) = evaluator.evaluate(params)?;
    Ok(total)
}

/// Fits (k_f, k_u, E) by simplex search over log10 parameters.
pub fn calibrate(
    dataset: &[CalibrationSample],
    context: &CalibrationContext,
    config: &CalibrationConfig,
) -> Result<CalibrationReport, CalibrationError> {
    let mut evaluator = LossEvaluator::new(dataset, context, config)?;

    let lo = [
        config.bounds.k_f.0.log10(),
        config.bounds.k_u.0.log10(),
        config.bounds.youngs_modulus.0.log10(),
    ];
    let hi = [
        config.bounds.k_f.1.log10(),
        config.bounds.k_u.1.log10(),
        config.bounds.youngs_modulus.1.log10(),
    ];

    let mut evaluation_error: Option<CalibrationError> = None;
    let mut total_evaluations = 0usize;
    let mut history: Vec<f64> = Vec::new();
    let mut best_seen = f64::INFINITY;

    let objective = |log_params: &[f64],
                         evaluator: &mut LossEvaluator<'_>,
                         evaluation_error: &mut Option<CalibrationError>|
     -> f64 {
        // Clamp into bounds; a quadratic penalty steers the simplex back.
        let mut clamped = [0.0; 3];
        let mut penalty = 0.0;
        for i in 0..3 {
            clamped[i] = log_params[i].clamp(lo[i], hi[i]);
            let excess = log_params[i] - clamped[i];
            penalty += 1e3 * excess * excess;
        }
        let params = CalibrationParams::from_log(&clamped);
        match evaluator.evaluate(&params) {
            Ok((loss, _)) => loss + penalty,
            Err(e) => {
                *evaluation_error = Some(e);
                f64::INFINITY
            }
        }
    };

    let mut start = config.initial.to_log();
    for i in 0..3 {
        start[i] = start[i].clamp(lo[i], hi[i]);
    }
    let mut best_x = start;
    let mut best_value = f64::INFINITY;
    let mut initial_simplex_loss = f64::INFINITY;

    for restart in 0..config.restarts.max(1) {
        let x0 = if restart == 0 {
            start
        } else {
            // Deterministic perturbation around the best point so far.
            let mut x = best_x;
            for (i, xi) in x.iter_mut().enumerate() {
                let sign = if (restart + i) % 2 == 0 { 1.0 } else { -1.0 };
                *xi = (*xi + sign * config.initial_step * (1.0 + 0.5 * restart as f64))
                    .clamp(lo[i], hi[i]);
            }
            x
        };
        let result = minimize(
            &mut |x| objective(x, &mut evaluator, &mut evaluation_error),
            &x0,
            config.initial_step,
            config.budget,
        );
        if let Some(e) = evaluation_error.take() {
            return Err(e);
        }
        if restart == 0 {
            // Best of the 4 evaluations that form the initial simplex.
            initial_simplex_loss = result
                .history
                .get(3)
                .copied()
                .or_else(|| result.history.last().copied())
                .unwrap_or(f64::INFINITY);
        }
        for &v in &result.history {
            best_seen = best_seen.min(v);
            history.push(best_seen);
        }
        total_evaluations += result.evaluations;
        if result.value < best_value {
            best_value = result.value;
            best_x = [result.x[0], result.x[1], result.x[2]];
        }
    }

    let params = CalibrationParams::from_log(&best_x);
    let (final_loss, per_sample_losses) = evaluator.evaluate(&params)?;

    // Finite-difference sensitivity per log-parameter.
    let mut insensitive = Vec::new();
    let names = ["k_f", "k_u", "youngs_modulus"];
    let scale = final_loss.abs().max(1.0);
    for i in 0..3 {
        let h = 0.01;
        let mut up = best_x;
        let mut down = best_x;
        up[i] = (up[i] + h).clamp(lo[i], hi[i]);
        down[i] = (down[i] - h).clamp(lo[i], hi[i]);
        let (lu, _) = evaluator.evaluate(&CalibrationParams::from_log(&up))?;
        let (ld, _) = evaluator.evaluate(&CalibrationParams::from_log(&down))?;
        let denom = up[i] - down[i];
        let sensitivity = if denom.abs() > 0.0 {
            ((lu - ld) / denom).abs()
        } else {
            0.0
        };
        if sensitivity < 1e-6 * scale {
            insensitive.push(names[i].to_string());
        }
    }

    Ok(CalibrationReport {
        params,
        initial_simplex_loss,
        final_loss,
        evaluations: total_evaluations,
        history,
        per_sample_losses,
        insensitive,
        failed_samples: evaluator.failed_samples(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{spherical_cap_mesh, CapGeometry};
    use crate::synthetic::{
        random_poke_scenario, run_scenario, NoiseModel,
    };

    fn build_context(nv: usize) -> CalibrationContext {
        let mesh = spherical_cap_mesh(nv, CapGeometry::default()).unwrap();
        CalibrationContext {
            reference: ReferenceConfiguration::new(mesh, 101_325.0, "cal-ref"),
            camera: CameraModel::sensor_default(),
        }
    }

    fn synthetic_dataset(
        context: &CalibrationContext,
        youngs_modulus: f64,
        frames: usize,
        noise: &NoiseModel,
    ) -> Vec<CalibrationSample> {
        let mesh = &context.reference.mesh;
        let geometry = VertexGeometry::compute(mesh);
        let material = MaterialParams {
            youngs_modulus,
            ..MaterialParams::sensor_default()
        };
        let stiffness = fem::assemble_stiffness(mesh, &material).unwrap();
        (0..frames as u64)
            .map(|seed| {
                let spec = random_poke_scenario(mesh, &geometry, (2.0, 8.0), noise, seed);
                let (frame, truth) = run_scenario(
                    &context.reference,
                    &geometry,
                    &stiffness,
                    &context.camera,
                    &spec,
                    &ContactParams::default(),
                )
                .unwrap();
                CalibrationSample {
                    frame,
                    f_gt: truth.net_force,
                    c_gt: truth.mask.flags,
                }
            })
            .collect()
    }

    #[test]
    fn perfect_prediction_loss_is_near_zero() {
        // Hand-build loss terms: exact net force, margins pushed toward
        // the saturation limit where both terms vanish.
        let config = CalibrationConfig::default();
        let f = Vector3::new(0.0, 0.5, -2.0);
        let pressures = [1e8, -1e8, -1e8, 1e8];
        let truth = [true, false, false, true];
        let loss = loss_terms(&f, &pressures, 2000.0, &f, &truth, &config);
        assert!(loss < 1e-9, "loss {loss}");
        let worse = loss_terms(
            &Vector3::new(1.0, 0.5, -2.0),
            &pressures,
            2000.0,
            &f,
            &truth,
            &config,
        );
        assert!((worse - loss - config.lambda1 * 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_margin_scores_half() {
        assert_eq!(sigmoid(0.0), 0.5);
        let config = CalibrationConfig::default();
        let loss = loss_terms(
            &Vector3::zeros(),
            &[2000.0],
            2000.0,
            &Vector3::zeros(),
            &[false],
            &config,
        );
        assert!((loss - config.lambda2 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn force_error_of_one_newton_costs_lambda1() {
        let config = CalibrationConfig::default();
        let base = loss_terms(
            &Vector3::new(1.0, 0.0, 0.0),
            &[],
            2000.0,
            &Vector3::zeros(),
            &[],
            &config,
        );
        assert!((base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_transform_round_trips_parameters() {
        let params = CalibrationParams {
            k_f: 0.731,
            k_u: 2.4e5,
            youngs_modulus: 3.3e6,
        };
        let back = CalibrationParams::from_log(&params.to_log());
        assert!((back.k_f - params.k_f).abs() < 1e-12 * params.k_f);
        assert!((back.k_u - params.k_u).abs() < 1e-9 * params.k_u);
        assert!(
            (back.youngs_modulus - params.youngs_modulus).abs()
                < 1e-9 * params.youngs_modulus
        );
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let context = build_context(80);
        assert!(matches!(
            calibrate(&[], &context, &CalibrationConfig::default()),
            Err(CalibrationError::EmptyDataset)
        ));
    }

    #[test]
    fn summed_loss_is_order_invariant() {
        let context = build_context(100);
        let mut dataset = synthetic_dataset(&context, 1.3e6, 4, &NoiseModel::none());
        let config = CalibrationConfig::default();
        let params = CalibrationParams::default();
        let mut eval = LossEvaluator::new(&dataset, &context, &config).unwrap();
        let (a, _) = eval.evaluate(&params).unwrap();
        dataset.reverse();
        let mut eval2 = LossEvaluator::new(&dataset, &context, &config).unwrap();
        let (b, _) = eval2.evaluate(&params).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn recovers_modulus_from_synthetic_data() {
        let context = build_context(150);
        let e_true = 1.0e6;
        let dataset = synthetic_dataset(
            &context,
            e_true,
            12,
            &NoiseModel {
                sigma_u: 0.1e-3,
                sigma_p: 2.0,
            },
        );
        let config = CalibrationConfig {
            budget: 60,
            restarts: 1,
            initial: CalibrationParams {
                youngs_modulus: 3.0e6,
                ..CalibrationParams::default()
            },
            ..CalibrationConfig::default()
        };
        let report = calibrate(&dataset, &context, &config).unwrap();
        let ratio = report.params.youngs_modulus / e_true;
        assert!(
            (0.8..=1.2).contains(&ratio),
            "recovered E {:.3e} (ratio {ratio:.3})",
            report.params.youngs_modulus
        );
        assert!(report.final_loss < 0.5 * report.initial_simplex_loss);
        assert_eq!(report.failed_samples, 0);
        for w in report.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn zero_contact_dataset_flags_modulus_insensitive() {
        let context = build_context(100);
        let mesh = &context.reference.mesh;
        let geometry = VertexGeometry::compute(mesh);
        let zero = DisplacementField::zeros(mesh.vertex_count());
        let dataset: Vec<CalibrationSample> = (0..3u64)
            .map(|seed| {
                let frame = crate::synthetic::render_frame(
                    &context.reference,
                    &context.camera,
                    &zero,
                    0.0,
                    &NoiseModel::none(),
                    seed,
                )
                .unwrap();
                CalibrationSample {
                    frame,
                    f_gt: Vector3::zeros(),
                    c_gt: vec![false; mesh.vertex_count()],
                }
            })
            .collect();
        let _ = geometry;
        let config = CalibrationConfig {
            budget: 25,
            restarts: 1,
            ..CalibrationConfig::default()
        };
        let report = calibrate(&dataset, &context, &config).unwrap();
        assert!(
            report.insensitive.contains(&"youngs_modulus".to_string()),
            "insensitive: {:?}",
            report.insensitive
        );
    }
}
