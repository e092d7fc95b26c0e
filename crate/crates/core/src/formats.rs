//! Versioned on-disk formats: observation frames, ground-truth sidecars,
//! parameter files, run configurations, calibration manifests, scenario
//! descriptions, the line-delimited result stream, and benchmark reports.
//!
//! Everything is JSON with a mandatory `version` field; floats use the
//! shortest round-trip encoding so payloads are lossless and
//! byte-reproducible. Files are written atomically (temp file + rename).

use crate::contact::ContactParams;
use crate::estimator::{EstimatorWeights, SolverConfig};
use crate::fem::MaterialParams;
use crate::mesh::SurfaceMesh;
use crate::observation::{
    CameraModel, DenseFlowGrid, DepthMap, ObservationError, ObservationFrame, ZeroFlow,
};
use crate::pipeline::{PipelineConfig, StageTiming};
use crate::synthetic::{LoadPattern, NoiseModel};
use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FRAME_FORMAT_VERSION: u32 = 1;
pub const SIDECAR_FORMAT_VERSION: u32 = 1;
pub const PARAMS_FORMAT_VERSION: u32 = 1;
pub const RUN_CONFIG_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;
pub const SCENARIO_VERSION: u32 = 1;
pub const RESULT_VERSION: u32 = 1;
pub const BENCHMARK_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unsupported version {found} (expected {expected})")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error(transparent)]
    Observation(#[from] ObservationError),
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let bytes = std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Serializes pretty JSON and renames it into place.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let wrap = |source: std::io::Error| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes).map_err(wrap)?;
    std::fs::rename(&tmp, path).map_err(wrap)?;
    Ok(())
}

fn check_version(path: &Path, found: u32, expected: u32) -> Result<(), FormatError> {
    if found != expected {
        return Err(FormatError::Version {
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(())
}

/// One observation frame: scattered depth samples `(u, v, depth_m)`, an
/// optional dense flow grid (absent means zero flow), and the pressure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameFile {
    pub version: u32,
    pub pressure_pa: f64,
    pub depth_samples: Vec<[f64; 3]>,
    pub flow_grid: Option<DenseFlowGrid>,
}

impl FrameFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: FrameFile = read_json(path)?;
        check_version(path, file.version, FRAME_FORMAT_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }

    /// Builds the in-memory frame against a camera model.
    pub fn into_observation(self, camera: &CameraModel) -> Result<ObservationFrame, FormatError> {
        let depth = DepthMap::from_samples(camera, &self.depth_samples)?;
        let flow: Box<dyn crate::observation::FlowField> = match self.flow_grid {
            Some(grid) => Box::new(grid),
            None => Box::new(ZeroFlow),
        };
        Ok(ObservationFrame {
            depth,
            flow,
            pressure: self.pressure_pa,
        })
    }
}

/// Scenario provenance stored next to ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub seed: u64,
    pub sigma_u: f64,
    pub sigma_p: f64,
    /// Tikhonov diagonal the forward solve needed (zero normally).
    pub regularization: f64,
    pub description: String,
}

/// Ground truth emitted beside each synthetic frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarFile {
    pub version: u32,
    pub displacements: Vec<[f64; 3]>,
    pub forces: Vec<[f64; 3]>,
    pub contact: Vec<bool>,
    pub net_force: [f64; 3],
    pub delta_p: f64,
    pub metadata: ScenarioMetadata,
}

impl SidecarFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: SidecarFile = read_json(path)?;
        check_version(path, file.version, SIDECAR_FORMAT_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }
}

/// Material, weights, thresholds, and solver settings; the file the
/// calibrator emits and the estimator consumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub version: u32,
    pub material: MaterialParams,
    pub weights: EstimatorWeights,
    pub contact: ContactParams,
    pub solver: SolverConfig,
    #[serde(default)]
    pub warm_start: bool,
}

impl Default for ParamsFile {
    fn default() -> Self {
        let config = PipelineConfig::default();
        Self {
            version: PARAMS_FORMAT_VERSION,
            material: config.material,
            weights: config.weights,
            contact: config.contact,
            solver: config.solver,
            warm_start: false,
        }
    }
}

impl ParamsFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: ParamsFile = read_json(path)?;
        check_version(path, file.version, PARAMS_FORMAT_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }

    pub fn to_pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            material: self.material,
            weights: self.weights,
            contact: self.contact,
            solver: self.solver.clone(),
            warm_start: self.warm_start,
        }
    }
}

/// Pinhole camera with an explicit quaternion pose (mesh frame to camera
/// frame); `rotation` is `[w, x, y, z]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl CameraFile {
    pub fn from_model(camera: &CameraModel) -> Self {
        let q = camera.pose.rotation.quaternion();
        let t = camera.pose.translation.vector;
        Self {
            fx: camera.fx,
            fy: camera.fy,
            cx: camera.cx,
            cy: camera.cy,
            width: camera.width,
            height: camera.height,
            rotation: [q.w, q.i, q.j, q.k],
            translation: [t.x, t.y, t.z],
        }
    }

    pub fn to_model(&self) -> CameraModel {
        let [w, x, y, z] = self.rotation;
        let rotation = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
        let translation = Translation3::from(Vector3::new(
            self.translation[0],
            self.translation[1],
            self.translation[2],
        ));
        CameraModel::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            Isometry3::from_parts(translation, rotation),
        )
    }
}

impl Default for CameraFile {
    fn default() -> Self {
        Self::from_model(&CameraModel::sensor_default())
    }
}

/// Batch estimation run description: where the scene lives, which frames
/// to process, and where results go.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfigFile {
    pub version: u32,
    pub mesh: PathBuf,
    pub camera: CameraFile,
    pub reference_pressure_pa: f64,
    /// Parameter file; defaults apply when absent.
    pub params: Option<PathBuf>,
    pub frames: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
}

impl RunConfigFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: RunConfigFile = read_json(path)?;
        check_version(path, file.version, RUN_CONFIG_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }
}

/// One labeled calibration observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame: PathBuf,
    pub f_gt: [f64; 3],
    pub contact_truth: PathBuf,
}

/// Calibration dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub version: u32,
    pub mesh: PathBuf,
    pub camera: CameraFile,
    pub reference_pressure_pa: f64,
    pub samples: Vec<ManifestEntry>,
}

impl ManifestFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: ManifestFile = read_json(path)?;
        check_version(path, file.version, MANIFEST_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }
}

/// Per-vertex contact truth flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactTruthFile {
    pub version: u32,
    pub contact: Vec<bool>,
}

impl ContactTruthFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }
}

/// Mesh generation request used when a scenario does not reference an
/// existing OFF file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshGenSpec {
    pub vertices: usize,
    pub base_radius: f64,
    pub height: f64,
}

/// One named scenario inside a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub name: String,
    pub load: LoadPattern,
    pub delta_p: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

/// Batch of synthetic scenarios sharing a mesh, camera, and material.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub version: u32,
    /// Path to an OFF mesh; mutually exclusive with `generate_mesh`.
    pub mesh: Option<PathBuf>,
    pub generate_mesh: Option<MeshGenSpec>,
    pub camera: Option<CameraFile>,
    pub reference_pressure_pa: f64,
    pub material: Option<MaterialParams>,
    /// Flow rasterization stride, pixels.
    pub flow_grid_stride: f64,
    pub scenarios: Vec<ScenarioEntry>,
}

impl ScenarioFile {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: ScenarioFile = read_json(path)?;
        check_version(path, file.version, SCENARIO_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }
}

/// A line of the result stream. Payload records are bit-reproducible for
/// identical inputs; timing lines are the only nondeterministic part.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ResultRecord {
    FrameHeader {
        version: u32,
        frame: String,
        vertices: usize,
        delta_p: f64,
    },
    NetForce {
        newtons: [f64; 3],
        magnitude: f64,
    },
    VertexData {
        displacements: Vec<[f64; 3]>,
        correction: Vec<[f64; 3]>,
        forces: Vec<[f64; 3]>,
        pressures: Vec<[f64; 3]>,
        inward_pressure: Vec<f64>,
        contact: Vec<bool>,
        contact_threshold_pa: f64,
    },
    Diagnostics {
        iterations: usize,
        converged: bool,
        kkt_residual: f64,
        objective: f64,
    },
    Timing {
        deformation_s: f64,
        assembly_s: f64,
        solve_s: f64,
        total_s: f64,
    },
}

impl ResultRecord {
    pub fn is_timing(&self) -> bool {
        matches!(self, ResultRecord::Timing { .. })
    }

    pub fn timing(timing: &StageTiming) -> Self {
        ResultRecord::Timing {
            deformation_s: timing.deformation_s,
            assembly_s: timing.assembly_s,
            solve_s: timing.solve_s,
            total_s: timing.total_s,
        }
    }
}

/// Writes one frame's records as JSON lines, atomically.
pub fn write_result_stream(path: &Path, records: &[ResultRecord]) -> Result<(), FormatError> {
    let wrap = |source: std::io::Error| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for record in records {
        let line = serde_json::to_vec(record).map_err(|source| FormatError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        out.extend_from_slice(&line);
        out.push(b'\n');
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &out).map_err(wrap)?;
    std::fs::rename(&tmp, path).map_err(wrap)?;
    Ok(())
}

pub fn read_result_stream(path: &Path) -> Result<Vec<ResultRecord>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| FormatError::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub mesh: String,
    pub vertices: usize,
    pub frames: usize,
    pub deformation_s: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
    pub per_frame_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub version: u32,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let file: BenchmarkReport = read_json(path)?;
        check_version(path, file.version, BENCHMARK_VERSION)?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json_atomic(path, self)
    }
}

/// Loads a mesh, wiring OFF errors into the format error space.
pub fn read_mesh(path: &Path) -> Result<SurfaceMesh, FormatError> {
    crate::mesh::read_off(path).map_err(|e| match e {
        crate::mesh::OffError::Io(source) => FormatError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => FormatError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, other.to_string()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{spherical_cap_mesh, write_off, CapGeometry};

    fn tempdir() -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "bubbleforce-fmt-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn frame_file_round_trips_bytes() {
        let dir = tempdir();
        let path = dir.join("frame.json");
        let frame = FrameFile {
            version: FRAME_FORMAT_VERSION,
            pressure_pa: 101_325.062_517,
            depth_samples: vec![[1.5, 2.25, 0.081234567890123], [3.0, 4.0, 0.08]],
            flow_grid: Some(DenseFlowGrid::new(
                [10.0, 20.0],
                4.0,
                2,
                2,
                vec![[0.1, -0.2], [0.3, 0.4], [0.0, 0.0], [1.0 / 3.0, 2.0 / 3.0]],
            )),
        };
        frame.write(&path).unwrap();
        let back = FrameFile::read(&path).unwrap();
        assert_eq!(back.pressure_pa.to_bits(), frame.pressure_pa.to_bits());
        assert_eq!(back.depth_samples, frame.depth_samples);
        let g1 = frame.flow_grid.as_ref().unwrap();
        let g2 = back.flow_grid.as_ref().unwrap();
        assert_eq!(g1.data, g2.data);
        // Writing again produces identical bytes.
        let bytes1 = std::fs::read(&path).unwrap();
        back.write(&path).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempdir();
        let path = dir.join("frame-bad.json");
        let frame = FrameFile {
            version: 99,
            pressure_pa: 0.0,
            depth_samples: vec![],
            flow_grid: None,
        };
        write_json_atomic(&path, &frame).unwrap();
        assert!(matches!(
            FrameFile::read(&path),
            Err(FormatError::Version { found: 99, .. })
        ));
    }

    #[test]
    fn camera_file_round_trips_pose() {
        let camera = CameraModel::sensor_default();
        let file = CameraFile::from_model(&camera);
        let back = file.to_model();
        assert_eq!(back.fx, camera.fx);
        let p = nalgebra::Point3::new(0.01, -0.02, 0.005);
        assert!(((back.pose * p) - (camera.pose * p)).norm() < 1e-15);
    }

    #[test]
    fn result_stream_round_trips_and_flags_timing() {
        let dir = tempdir();
        let path = dir.join("result.jsonl");
        let records = vec![
            ResultRecord::FrameHeader {
                version: RESULT_VERSION,
                frame: "f0".into(),
                vertices: 3,
                delta_p: 12.5,
            },
            ResultRecord::NetForce {
                newtons: [0.1, 0.2, -2.0],
                magnitude: 2.012461179749811,
            },
            ResultRecord::Timing {
                deformation_s: 0.01,
                assembly_s: 0.0,
                solve_s: 0.2,
                total_s: 0.21,
            },
        ];
        write_result_stream(&path, &records).unwrap();
        let back = read_result_stream(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert!(back[2].is_timing());
        match (&records[1], &back[1]) {
            (
                ResultRecord::NetForce { magnitude: a, .. },
                ResultRecord::NetForce { magnitude: b, .. },
            ) => assert_eq!(a.to_bits(), b.to_bits()),
            _ => panic!("record order changed"),
        }
    }

    #[test]
    fn params_file_defaults_round_trip() {
        let dir = tempdir();
        let path = dir.join("params.json");
        let params = ParamsFile::default();
        params.write(&path).unwrap();
        let back = ParamsFile::read(&path).unwrap();
        assert_eq!(back.weights.k_f, params.weights.k_f);
        assert_eq!(back.solver.max_iterations, params.solver.max_iterations);
    }

    #[test]
    fn mesh_reader_integrates_with_off() {
        let dir = tempdir();
        let path = dir.join("mesh.off");
        let mesh = spherical_cap_mesh(60, CapGeometry::default()).unwrap();
        write_off(&mesh, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(back.vertex_count(), 60);
    }
}
