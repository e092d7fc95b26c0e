//! Command-line interface: estimate, calibrate, simulate, benchmark, and
//! mesh generation.
//!
//! Exit codes are a stable contract: 0 on success, 1 for usage or
//! configuration problems, 2 for computational failures.

use crate::calibration::{
    calibrate, CalibrationConfig, CalibrationContext, CalibrationParams, CalibrationSample,
};
use crate::contact::ContactParams;
use crate::formats::{
    self, BenchmarkReport, BenchmarkRow, ContactTruthFile, FormatError, FrameFile,
    ManifestFile, ParamsFile, ResultRecord, RunConfigFile, ScenarioFile, ScenarioMetadata,
    SidecarFile, BENCHMARK_VERSION, FRAME_FORMAT_VERSION, RESULT_VERSION, SIDECAR_FORMAT_VERSION,
};
use crate::mesh::{spherical_cap_mesh, write_off, CapGeometry, MeshResolution, SurfaceMesh};
use crate::observation::{CameraModel, ReferenceConfiguration};
use crate::pipeline::{FrameEstimator, FrameResult};
use crate::synthetic::{
    self, random_poke_scenario, NoiseModel, ScenarioSpec,
};
use crate::mesh::VertexGeometry;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

/// Contact force and contact patch reconstruction for air-inflated
/// membrane tactile sensors.
#[derive(Debug, Parser)]
#[command(name = "bubbleforce", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate contact forces for a batch of observation frames.
    Estimate(EstimateArgs),
    /// Fit the three model scalars (k_f, k_u, E) against labeled data.
    Calibrate(CalibrateArgs),
    /// Generate synthetic frames with ground-truth sidecars.
    Simulate(SimulateArgs),
    /// Time the pipeline stages across mesh resolutions.
    Benchmark(BenchmarkArgs),
    /// Generate a spherical-cap membrane mesh.
    MeshGen(MeshGenArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Run configuration file (mesh, camera, params, frame list).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Override the configured worker count.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Calibration dataset manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fitted parameter file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Convergence report to write.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Function evaluations per restart.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    /// Initial parameters file (defaults to the shipped calibration).
    #[arg(long)]
    pub initial: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario description file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory for frames, sidecars, and the generated run config.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated resolutions (coarse, medium, fine).
    #[arg(long, default_value = "coarse,medium,fine", value_delimiter = ',')]
    pub resolutions: Vec<String>,
    /// Frames per resolution.
    #[arg(long, default_value_t = 5)]
    pub frames: usize,
    /// Machine-readable report path.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional parameter file.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeshGenArgs {
    /// Named resolution (coarse, medium, fine); overrides --vertices.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long, default_value_t = 390)]
    pub vertices: usize,
    /// Rim radius, m.
    #[arg(long, default_value_t = 0.04)]
    pub base_radius: f64,
    /// Apex height above the rim plane, m.
    #[arg(long, default_value_t = 0.015)]
    pub height: f64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, missing or malformed files: exit code 1.
    Usage(String),
    /// The computation itself failed: exit code 2.
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Computation(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Computation(m) => m,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Benchmark(args) => cmd_benchmark(&args),
        Command::MeshGen(args) => cmd_mesh_gen(&args),
    }
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}

fn frame_records(name: &str, result: &FrameResult, vertices: usize) -> Vec<ResultRecord> {
    let to_rows = |vs: &[nalgebra::Vector3<f64>]| -> Vec<[f64; 3]> {
        vs.iter().map(|v| [v.x, v.y, v.z]).collect()
    };
    let displacement_rows: Vec<[f64; 3]> = (0..result.displacements.vertex_count())
        .map(|v| {
            let d = result.displacements.vertex(v);
            [d.x, d.y, d.z]
        })
        .collect();
    let correction_rows: Vec<[f64; 3]> = (0..result.estimation.delta_u.vertex_count())
        .map(|v| {
            let d = result.estimation.delta_u.vertex(v);
            [d.x, d.y, d.z]
        })
        .collect();
    vec![
        ResultRecord::FrameHeader {
            version: RESULT_VERSION,
            frame: name.to_string(),
            vertices,
            delta_p: result.delta_p,
        },
        ResultRecord::NetForce {
            newtons: [
                result.estimation.net_force.x,
                result.estimation.net_force.y,
                result.estimation.net_force.z,
            ],
            magnitude: result.estimation.net_force.norm(),
        },
        ResultRecord::VertexData {
            displacements: displacement_rows,
            correction: correction_rows,
            forces: to_rows(&result.estimation.forces),
            pressures: to_rows(&result.estimation.pressures),
            inward_pressure: result.inward_pressure.clone(),
            contact: result.mask.flags.clone(),
            contact_threshold_pa: result.mask.threshold,
        },
        ResultRecord::Diagnostics {
            iterations: result.estimation.diagnostics.iterations,
            converged: result.estimation.diagnostics.converged,
            kkt_residual: result.estimation.diagnostics.kkt_residual,
            objective: result.estimation.objective,
        },
        ResultRecord::timing(&result.timing),
    ]
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let config = RunConfigFile::read(&args.config)?;
    let output_dir = args.output.clone().unwrap_or(config.output_dir.clone());

    // Fail fast: everything referenced must exist and parse before any
    // computation starts.
    let mesh = formats::read_mesh(&config.mesh)?;
    let params = match &config.params {
        Some(path) => ParamsFile::read(path)?,
        None => ParamsFile::default(),
    };
    if config.frames.is_empty() {
        return Err(CliError::Usage("run config lists no frames".into()));
    }
    let mut frames = Vec::with_capacity(config.frames.len());
    for path in &config.frames {
        frames.push((path.clone(), FrameFile::read(path)?));
    }
    ensure_dir(&output_dir)?;

    let camera = config.camera.to_model();
    let pipeline_config = params.to_pipeline_config();
    let workers = args
        .workers
        .or(config.workers)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);

    let jobs: Vec<(usize, PathBuf, FrameFile)> = frames
        .into_iter()
        .enumerate()
        .map(|(i, (p, f))| (i, p, f))
        .collect();
    let failures = std::sync::Mutex::new(Vec::<(PathBuf, String)>::new());
    let completed = std::sync::atomic::AtomicUsize::new(0);

    let chunk = jobs.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for worker_jobs in jobs.chunks(chunk.max(1)) {
            let mesh = mesh.clone();
            let camera = camera.clone();
            let pipeline_config = pipeline_config.clone();
            let output_dir = output_dir.clone();
            let failures = &failures;
            let completed = &completed;
            let reference_pressure = config.reference_pressure_pa;
            scope.spawn(move || {
                let reference =
                    ReferenceConfiguration::new(mesh, reference_pressure, "run-config");
                let mut estimator =
                    match FrameEstimator::new(reference, camera.clone(), pipeline_config) {
                        Ok(e) => e,
                        Err(e) => {
                            let mut f = failures.lock().unwrap();
                            for (_, path, _) in worker_jobs {
                                f.push((path.clone(), e.to_string()));
                            }
                            return;
                        }
                    };
                for (_, path, file) in worker_jobs {
                    let name = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .map(|s| s.trim_end_matches(".frame").to_string())
                        .unwrap_or_else(|| "frame".into());
                    let outcome = file
                        .clone()
                        .into_observation(&camera)
                        .map_err(|e| e.to_string())
                        .and_then(|frame| {
                            estimator.estimate_frame(&frame).map_err(|e| e.to_string())
                        })
                        .and_then(|result| {
                            let records = frame_records(
                                &name,
                                &result,
                                estimator.mesh().vertex_count(),
                            );
                            formats::write_result_stream(
                                &output_dir.join(format!("{name}.result.jsonl")),
                                &records,
                            )
                            .map_err(|e| e.to_string())
                        });
                    match outcome {
                        Ok(()) => {
                            completed.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        }
                        Err(message) => {
                            failures.lock().unwrap().push((path.clone(), message));
                        }
                    }
                }
            });
        }
    });

    let failures = failures.into_inner().unwrap();
    let done = completed.load(std::sync::atomic::Ordering::Relaxed);
    for (path, message) in &failures {
        eprintln!("frame {} failed: {message}", path.display());
    }
    println!(
        "estimated {done}/{} frames -> {}",
        done + failures.len(),
        output_dir.display()
    );
    if done == 0 {
        return Err(CliError::Computation("all frames failed".into()));
    }
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let manifest = ManifestFile::read(&args.manifest)?;
    if manifest.samples.is_empty() {
        return Err(CliError::Usage("calibration manifest lists no samples".into()));
    }
    let mesh = formats::read_mesh(&manifest.mesh)?;
    let camera = manifest.camera.to_model();

    let initial = match &args.initial {
        Some(path) => {
            let p = ParamsFile::read(path)?;
            CalibrationParams {
                k_f: p.weights.k_f,
                k_u: p.weights.k_u,
                youngs_modulus: p.material.youngs_modulus,
            }
        }
        None => CalibrationParams::default(),
    };

    let mut samples = Vec::with_capacity(manifest.samples.len());
    for entry in &manifest.samples {
        let frame = FrameFile::read(&entry.frame)?;
        let truth = ContactTruthFile::read(&entry.contact_truth)?;
        if truth.contact.len() != mesh.vertex_count() {
            return Err(CliError::Usage(format!(
                "{}: contact truth has {} flags for a {}-vertex mesh",
                entry.contact_truth.display(),
                truth.contact.len(),
                mesh.vertex_count()
            )));
        }
        samples.push(CalibrationSample {
            frame: frame.into_observation(&camera)?,
            f_gt: nalgebra::Vector3::new(entry.f_gt[0], entry.f_gt[1], entry.f_gt[2]),
            c_gt: truth.contact,
        });
    }

    let context = CalibrationContext {
        reference: ReferenceConfiguration::new(mesh, manifest.reference_pressure_pa, "manifest"),
        camera,
    };
    let config = CalibrationConfig {
        budget: args.budget,
        restarts: args.restarts,
        initial,
        ..CalibrationConfig::default()
    };
    let report = calibrate(&samples, &context, &config)
        .map_err(|e| CliError::Computation(e.to_string()))?;

    let fitted = ParamsFile {
        material: crate::fem::MaterialParams {
            youngs_modulus: report.params.youngs_modulus,
            poisson_ratio: config.poisson_ratio,
            thickness: config.thickness,
        },
        weights: report.params.weights(),
        ..ParamsFile::default()
    };
    fitted.write(&args.output)?;
    if let Some(report_path) = &args.report {
        formats::write_json_atomic(report_path, &report)?;
    }
    println!(
        "calibrated k_f {:.4} 1/N, k_u {:.1} 1/m^2, E {:.4} MPa; loss {:.4} -> {:.4} over {} evaluations",
        report.params.k_f,
        report.params.k_u,
        report.params.youngs_modulus / 1e6,
        report.initial_simplex_loss,
        report.final_loss,
        report.evaluations
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let scenario_file = ScenarioFile::read(&args.scenario)?;
    if scenario_file.scenarios.is_empty() {
        return Err(CliError::Usage("scenario file lists no scenarios".into()));
    }
    ensure_dir(&args.output)?;

    let mesh: SurfaceMesh = match (&scenario_file.mesh, &scenario_file.generate_mesh) {
        (Some(path), None) => formats::read_mesh(path)?,
        (None, Some(spec)) => spherical_cap_mesh(
            spec.vertices,
            CapGeometry {
                base_radius: spec.base_radius,
                height: spec.height,
            },
        )
        .map_err(|e| CliError::Usage(format!("mesh generation failed: {e}")))?,
        _ => {
            return Err(CliError::Usage(
                "scenario file must set exactly one of mesh / generate_mesh".into(),
            ))
        }
    };
    let mesh_path = args.output.join("mesh.off");
    write_off(&mesh, &mesh_path).map_err(|e| CliError::Usage(e.to_string()))?;

    let camera_file = scenario_file.camera.clone().unwrap_or_default();
    let camera = camera_file.to_model();
    let material = scenario_file
        .material
        .unwrap_or_else(crate::fem::MaterialParams::sensor_default);
    let reference = ReferenceConfiguration::new(
        mesh,
        scenario_file.reference_pressure_pa,
        "scenario",
    );
    let geometry = VertexGeometry::compute(&reference.mesh);
    let stiffness = crate::fem::assemble_stiffness(&reference.mesh, &material)
        .map_err(|e| CliError::Computation(e.to_string()))?;

    let mut frame_paths = Vec::new();
    for entry in &scenario_file.scenarios {
        let spec = ScenarioSpec {
            load: entry.load.clone(),
            delta_p: entry.delta_p,
            noise: entry.noise,
            seed: entry.seed,
        };
        let (raw, truth) = run_scenario_to_raw(&reference, &geometry, &stiffness, &camera, &spec)
            .map_err(|e| CliError::Computation(format!("scenario {}: {e}", entry.name)))?;

        let frame_file = FrameFile {
            version: FRAME_FORMAT_VERSION,
            pressure_pa: raw.pressure,
            depth_samples: raw.depth_samples.clone(),
            flow_grid: Some(raw.rasterize_flow(scenario_file.flow_grid_stride)),
        };
        let frame_path = args.output.join(format!("{}.frame.json", entry.name));
        frame_file.write(&frame_path)?;

        let sidecar = SidecarFile {
            version: SIDECAR_FORMAT_VERSION,
            displacements: (0..truth.displacements.vertex_count())
                .map(|v| {
                    let d = truth.displacements.vertex(v);
                    [d.x, d.y, d.z]
                })
                .collect(),
            forces: truth.forces.iter().map(|f| [f.x, f.y, f.z]).collect(),
            contact: truth.mask.flags.clone(),
            net_force: [truth.net_force.x, truth.net_force.y, truth.net_force.z],
            delta_p: truth.delta_p,
            metadata: ScenarioMetadata {
                seed: entry.seed,
                sigma_u: entry.noise.sigma_u,
                sigma_p: entry.noise.sigma_p,
                regularization: truth.regularization,
                description: entry.name.clone(),
            },
        };
        sidecar.write(&args.output.join(format!("{}.truth.json", entry.name)))?;
        let contact_truth = ContactTruthFile {
            version: SIDECAR_FORMAT_VERSION,
            contact: truth.mask.flags,
        };
        contact_truth.write(&args.output.join(format!("{}.contact.json", entry.name)))?;
        frame_paths.push(frame_path);
    }

    // A ready-to-run estimation config over the generated frames.
    let run_config = RunConfigFile {
        version: formats::RUN_CONFIG_VERSION,
        mesh: mesh_path,
        camera: camera_file,
        reference_pressure_pa: scenario_file.reference_pressure_pa,
        params: None,
        frames: frame_paths,
        output_dir: args.output.join("results"),
        workers: None,
    };
    run_config.write(&args.output.join("run.json"))?;
    println!(
        "simulated {} scenarios -> {}",
        scenario_file.scenarios.len(),
        args.output.display()
    );
    Ok(())
}

/// Scenario execution that keeps the raw render for file output.
fn run_scenario_to_raw(
    reference: &ReferenceConfiguration,
    geometry: &VertexGeometry,
    stiffness: &crate::fem::StiffnessMatrix,
    camera: &CameraModel,
    spec: &ScenarioSpec,
) -> Result<(synthetic::RawRender, synthetic::GroundTruth), synthetic::SyntheticError> {
    let mesh = &reference.mesh;
    let applied = spec.load.to_forces(mesh, geometry)?;
    let forward =
        synthetic::forward_solve_with(mesh, geometry, stiffness, &applied, spec.delta_p)?;
    let forces = crate::fem::external_forces(
        stiffness,
        geometry,
        forward.displacements.as_slice(),
        spec.delta_p,
    )?;
    let net_force = crate::fem::net_force(&forces, mesh);
    let pressures = crate::fem::contact_pressures(&forces, geometry);
    let mask = crate::contact::contact_mask(
        &crate::contact::inward_normal_pressure(&pressures, geometry),
        geometry,
        &ContactParams::default(),
    );
    let raw = synthetic::render_raw(
        reference,
        camera,
        &forward.displacements,
        spec.delta_p,
        &spec.noise,
        spec.seed,
    )?;
    Ok((
        raw,
        synthetic::GroundTruth {
            displacements: forward.displacements,
            forces,
            net_force,
            mask,
            delta_p: spec.delta_p,
            regularization: forward.regularization,
        },
    ))
}

fn parse_resolution(name: &str) -> Result<MeshResolution, CliError> {
    match name.trim() {
        "coarse" => Ok(MeshResolution::Coarse),
        "medium" => Ok(MeshResolution::Medium),
        "fine" => Ok(MeshResolution::Fine),
        other => Err(CliError::Usage(format!(
            "unknown resolution {other:?} (expected coarse, medium, or fine)"
        ))),
    }
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    if args.frames == 0 {
        return Err(CliError::Usage("benchmark needs at least one frame".into()));
    }
    let params = match &args.params {
        Some(path) => ParamsFile::read(path)?,
        None => ParamsFile::default(),
    };
    let mut rows = Vec::new();
    for name in &args.resolutions {
        let resolution = parse_resolution(name)?;
        let mesh = spherical_cap_mesh(resolution.vertex_count(), CapGeometry::default())
            .map_err(|e| CliError::Computation(e.to_string()))?;
        let geometry = VertexGeometry::compute(&mesh);
        let reference = ReferenceConfiguration::new(mesh, 101_325.0, "benchmark");
        let camera = CameraModel::sensor_default();
        let mut estimator = FrameEstimator::new(
            reference,
            camera.clone(),
            params.to_pipeline_config(),
        )
        .map_err(|e| CliError::Computation(e.to_string()))?;
        let assembly_s = estimator.take_assembly_time();

        let mut deformation_s = 0.0;
        let mut solve_s = 0.0;
        for seed in 0..args.frames as u64 {
            let spec = random_poke_scenario(
                estimator.mesh(),
                &geometry,
                (1.0, 10.0),
                &NoiseModel::sensor_default(),
                seed,
            );
            let (frame, _) = synthetic::run_scenario(
                estimator.reference(),
                &geometry,
                estimator.stiffness(),
                &camera,
                &spec,
                &ContactParams::default(),
            )
            .map_err(|e| CliError::Computation(e.to_string()))?;
            let result = estimator
                .estimate_frame(&frame)
                .map_err(|e| CliError::Computation(e.to_string()))?;
            deformation_s += result.timing.deformation_s;
            solve_s += result.timing.solve_s;
        }
        let total_s = assembly_s + deformation_s + solve_s;
        rows.push(BenchmarkRow {
            mesh: resolution.name().to_string(),
            vertices: resolution.vertex_count(),
            frames: args.frames,
            deformation_s,
            assembly_s,
            solve_s,
            total_s,
            per_frame_s: (deformation_s + solve_s) / args.frames as f64,
        });
        println!(
            "{:>6} ({} vertices): assembly {:.3} s, {:.3} s/frame (deformation {:.3}, solve {:.3})",
            resolution.name(),
            resolution.vertex_count(),
            assembly_s,
            rows.last().unwrap().per_frame_s,
            deformation_s / args.frames as f64,
            solve_s / args.frames as f64,
        );
    }
    BenchmarkReport {
        version: BENCHMARK_VERSION,
        rows,
    }
    .write(&args.output)?;
    println!("benchmark report -> {}", args.output.display());
    Ok(())
}

fn cmd_mesh_gen(args: &MeshGenArgs) -> Result<(), CliError> {
    let vertices = match &args.resolution {
        Some(name) => parse_resolution(name)?.vertex_count(),
        None => args.vertices,
    };
    if vertices < 12 {
        return Err(CliError::Usage("mesh needs at least 12 vertices".into()));
    }
    let mesh = spherical_cap_mesh(
        vertices,
        CapGeometry {
            base_radius: args.base_radius,
            height: args.height,
        },
    )
    .map_err(|e| CliError::Computation(e.to_string()))?;
    write_off(&mesh, &args.output).map_err(|e| CliError::Usage(e.to_string()))?;
    println!(
        "mesh with {} vertices / {} faces ({} rim) -> {}",
        mesh.vertex_count(),
        mesh.face_count(),
        mesh.boundary().len(),
        args.output.display()
    );
    Ok(())
}
