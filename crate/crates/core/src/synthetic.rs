//! Forward quasi-static simulator and frame renderer.
//!
//! The inverse pipeline is validated against this module: apply known nodal
//! forces, solve the constrained equilibrium forward for displacements,
//! render a synthetic observation frame (depth samples, exact flow
//! correspondences, pressure, seeded Gaussian noise), and keep the ground
//! truth as a sidecar. Substituting the forward solution back into the
//! external-force map must reproduce the applied forces; that identity is
//! the central correctness property of the repository.

use crate::contact::{contact_mask, inward_normal_pressure, ContactMask, ContactParams};
use crate::fem::{self, FemError, MaterialParams, StiffnessMatrix};
use crate::mesh::{SurfaceMesh, VertexGeometry};
use crate::observation::{
    CameraModel, DepthMap, DisplacementField, FlowField as _, ObservationError,
    ObservationFrame, ReferenceConfiguration, ScatteredFlow,
};
use crate::sparse::{CsrMatrix, SparseError, SpdSolver};
use nalgebra::{Isometry3, Point3, Unit, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("applied force on rim vertex {vertex}; the rim is fixed")]
    BoundaryLoaded { vertex: usize },
    #[error("constrained stiffness system is singular even with Tikhonov floor {floor:.3e}")]
    SingularSystem { floor: f64 },
    #[error("vertex {vertex} is not visible from the camera: {source}")]
    VertexNotVisible {
        vertex: usize,
        #[source]
        source: Box<ObservationError>,
    },
    #[error("load footprint does not touch any interior vertex")]
    EmptyFootprint,
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Observation(#[from] ObservationError),
}

/// Result of a forward equilibrium solve.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub displacements: DisplacementField,
    /// Tikhonov diagonal added to make the constrained system definite;
    /// zero when the plain factorization succeeded.
    pub regularization: f64,
}

/// Solves the constrained static equilibrium forward:
/// `K_ff U_f = -(F_applied + delta_p a n)_f` with rim rows eliminated.
///
/// `f_applied` must be zero on rim vertices. When the membrane system is
/// rank deficient in normal directions (flat patches have no bending
/// stiffness) a diagonal floor of `1e-8 * trace-scale` is added and
/// reported in the solution.
pub fn forward_solve(
    mesh: &SurfaceMesh,
    material: &MaterialParams,
    f_applied: &[Vector3<f64>],
    delta_p: f64,
) -> Result<ForwardSolution, SyntheticError> {
    let stiffness = fem::assemble_stiffness(mesh, material)?;
    let geometry = VertexGeometry::compute(mesh);
    forward_solve_with(mesh, &geometry, &stiffness, f_applied, delta_p)
}

/// [`forward_solve`] with a preassembled stiffness.
pub fn forward_solve_with(
    mesh: &SurfaceMesh,
    geometry: &VertexGeometry,
    stiffness: &StiffnessMatrix,
    f_applied: &[Vector3<f64>],
    delta_p: f64,
) -> Result<ForwardSolution, SyntheticError> {
    assert_eq!(f_applied.len(), mesh.vertex_count());
    for &v in mesh.boundary() {
        if f_applied[v].norm() > 0.0 {
            return Err(SyntheticError::BoundaryLoaded { vertex: v });
        }
    }
    let free: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| !mesh.is_boundary(v))
        .flat_map(|v| (0..3).map(move |c| 3 * v + c))
        .collect();
    let mut col_map = vec![None; stiffness.dim()];
    for (new, &old) in free.iter().enumerate() {
        col_map[old] = Some(new);
    }
    let k_ff = stiffness
        .matrix()
        .select_rows(&free)
        .select_cols(&col_map, free.len());

    let pressure = fem::pressure_forces(geometry, delta_p);
    let rhs: Vec<f64> = free
        .iter()
        .map(|&coord| {
            let (v, c) = (coord / 3, coord % 3);
            -(f_applied[v][c] + pressure[v][c])
        })
        .collect();

    let (solution, regularization) = solve_with_floor(&k_ff, &rhs)?;
    let displacements = {
        let mut stacked = vec![0.0; stiffness.dim()];
        for (i, &coord) in free.iter().enumerate() {
            stacked[coord] = solution[i];
        }
        DisplacementField::from_stacked(stacked)
    };
    Ok(ForwardSolution {
        displacements,
        regularization,
    })
}

fn solve_with_floor(matrix: &CsrMatrix, rhs: &[f64]) -> Result<(Vec<f64>, f64), SyntheticError> {
    let n = matrix.nrows();
    let trace_scale = {
        let mut tr = 0.0;
        for r in 0..n {
            let (cols, vals) = matrix.row(r);
            if let Ok(pos) = cols.binary_search(&r) {
                tr += vals[pos];
            }
        }
        tr / n as f64
    };
    let mut floor = 0.0;
    for attempt in 0..3 {
        let system = if floor == 0.0 {
            matrix.clone()
        } else {
            matrix.add_diagonal(floor)
        };
        match SpdSolver::analyze(&system).and_then(|s| s.factor(&system)) {
            Ok(factor) => {
                let mut x = factor.solve(rhs);
                // Two refinement sweeps push the round-trip residual to the
                // rounding floor.
                for _ in 0..2 {
                    let mut residual = system.matvec(&x);
                    for (ri, bi) in residual.iter_mut().zip(rhs) {
                        *ri = bi - *ri;
                    }
                    let correction = factor.solve(&residual);
                    for (xi, ci) in x.iter_mut().zip(&correction) {
                        *xi += ci;
                    }
                }
                return Ok((x, floor));
            }
            Err(_) => {
                floor = if attempt == 0 {
                    1e-8 * trace_scale
                } else {
                    floor * 100.0
                };
            }
        }
    }
    Err(SyntheticError::SingularSystem { floor })
}

/// Gaussian observation noise: isotropic on 3D surface points, scalar on
/// the pressure reading.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Surface point noise, m.
    pub sigma_u: f64,
    /// Pressure noise, Pa.
    pub sigma_p: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            sigma_u: 0.0,
            sigma_p: 0.0,
        }
    }

    /// Consumer depth camera defaults: 0.3 mm points, 5 Pa pressure.
    pub fn sensor_default() -> Self {
        Self {
            sigma_u: 0.3e-3,
            sigma_p: 5.0,
        }
    }
}

/// Raw render products: depth samples at the projections of the (noisy)
/// deformed vertices, exact pixel correspondences, and the noisy pressure.
#[derive(Debug, Clone)]
pub struct RawRender {
    pub depth_samples: Vec<[f64; 3]>,
    /// `(reference pixel, flow)` pairs.
    pub correspondences: Vec<(Vector2<f64>, Vector2<f64>)>,
    pub pressure: f64,
}

impl RawRender {
    /// Packages the render as an in-memory frame with exact scattered flow.
    pub fn into_observation(
        self,
        camera: &CameraModel,
    ) -> Result<ObservationFrame, SyntheticError> {
        Ok(ObservationFrame {
            depth: DepthMap::from_samples(camera, &self.depth_samples)?,
            flow: Box::new(ScatteredFlow::from_correspondences(&self.correspondences)),
            pressure: self.pressure,
        })
    }

    /// Rasterizes the exact correspondences onto a dense grid for the frame
    /// file format: piecewise linear inside the correspondence hull,
    /// nearest-sample outside (only the hull interior is ever queried).
    pub fn rasterize_flow(&self, stride: f64) -> crate::observation::DenseFlowGrid {
        assert!(stride > 0.0);
        let (mut lo_u, mut lo_v) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_u, mut hi_v) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (r, _) in &self.correspondences {
            lo_u = lo_u.min(r.x);
            lo_v = lo_v.min(r.y);
            hi_u = hi_u.max(r.x);
            hi_v = hi_v.max(r.y);
        }
        let origin = [lo_u - 2.0 * stride, lo_v - 2.0 * stride];
        let width = (((hi_u - lo_u) / stride).ceil() as usize + 5).max(2);
        let height = (((hi_v - lo_v) / stride).ceil() as usize + 5).max(2);
        let exact = ScatteredFlow::from_correspondences(&self.correspondences);
        let mut data = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                let pixel = Vector2::new(
                    origin[0] + stride * i as f64,
                    origin[1] + stride * j as f64,
                );
                let flow = exact.flow(&pixel).unwrap_or_else(|| {
                    // Outside the hull: nearest correspondence.
                    let mut best = (f64::INFINITY, Vector2::zeros());
                    for (r, f) in &self.correspondences {
                        let d = (r - pixel).norm_squared();
                        if d < best.0 {
                            best = (d, *f);
                        }
                    }
                    best.1
                });
                data.push([flow.x, flow.y]);
            }
        }
        crate::observation::DenseFlowGrid::new(origin, stride, width, height, data)
    }
}

/// Renders the raw products for a known deformation; see [`render_frame`].
pub fn render_raw(
    reference: &ReferenceConfiguration,
    camera: &CameraModel,
    u_true: &DisplacementField,
    delta_p: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<RawRender, SyntheticError> {
    let mesh = &reference.mesh;
    assert_eq!(u_true.vertex_count(), mesh.vertex_count());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let point_noise = Normal::new(0.0, noise.sigma_u.max(0.0)).expect("finite sigma");
    let pressure_noise = Normal::new(0.0, noise.sigma_p.max(0.0)).expect("finite sigma");

    let mut correspondences = Vec::with_capacity(mesh.vertex_count());
    let mut depth_samples = Vec::with_capacity(mesh.vertex_count());
    for (v, x_ref) in mesh.vertices().iter().enumerate() {
        let jitter = Vector3::new(
            point_noise.sample(&mut rng),
            point_noise.sample(&mut rng),
            point_noise.sample(&mut rng),
        );
        let x_cur = x_ref + u_true.vertex(v) + jitter;
        let wrap = |e: ObservationError| SyntheticError::VertexNotVisible {
            vertex: v,
            source: Box::new(e),
        };
        let r = camera.project(x_ref).map_err(&wrap)?;
        let r_cur = camera.project(&x_cur).map_err(&wrap)?;
        for pixel in [&r, &r_cur] {
            if !camera.contains(pixel) {
                return Err(wrap(ObservationError::OutsideImage {
                    u: pixel.x,
                    v: pixel.y,
                    width: camera.width,
                    height: camera.height,
                }));
            }
        }
        correspondences.push((r, r_cur - r));
        depth_samples.push([r_cur.x, r_cur.y, camera.depth_of(&x_cur)]);
    }
    let pressure = reference.pressure + delta_p + pressure_noise.sample(&mut rng);

    // Skirt of copied-depth samples outside the rim projection: a real
    // depth image extends past the membrane, and file-backed flow grids
    // are bilinear approximations whose rim queries wobble a few pixels
    // beyond the exact correspondences.
    let centroid = {
        let mut c = Vector2::zeros();
        for s in &depth_samples {
            c += Vector2::new(s[0], s[1]);
        }
        c / depth_samples.len() as f64
    };
    for &v in mesh.boundary() {
        let s = depth_samples[v];
        let pixel = Vector2::new(s[0], s[1]);
        let outward = pixel - centroid;
        if outward.norm() < 1e-9 {
            continue;
        }
        let pad = pixel + outward.normalize() * 12.0;
        depth_samples.push([pad.x, pad.y, s[2]]);
    }

    Ok(RawRender {
        depth_samples,
        correspondences,
        pressure,
    })
}

/// Renders an observation frame for a known deformation.
///
/// Depth samples are taken exactly at the projections of the (noisy)
/// deformed vertices and the flow field holds the exact pixel
/// correspondences, so with zero noise the deformation estimate reproduces
/// `u_true` to interpolation accuracy at the vertices.
pub fn render_frame(
    reference: &ReferenceConfiguration,
    camera: &CameraModel,
    u_true: &DisplacementField,
    delta_p: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ObservationFrame, SyntheticError> {
    render_raw(reference, camera, u_true, delta_p, noise, seed)?.into_observation(camera)
}

/// The five indenter geometries, built from one characteristic dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndenterKind {
    Round,
    Point,
    Line,
    Square,
    Split,
}

/// Rigid indenter with a pose mapping its local frame into the mesh frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndenterSpec {
    pub kind: IndenterKind,
    pub pose: Isometry3<f64>,
    /// Characteristic dimension, m (sphere radius, line half-length,
    /// square half-side, split pair spacing).
    pub size: f64,
}

impl IndenterSpec {
    pub fn new(kind: IndenterKind, pose: Isometry3<f64>, size: f64) -> Self {
        assert!(size > 0.0, "indenter dimension must be positive");
        Self { kind, pose, size }
    }

    /// Signed distance from a mesh-frame point to the indenter surface,
    /// negative inside.
    pub fn signed_distance(&self, point: &Point3<f64>) -> f64 {
        let q = self.pose.inverse_transform_point(point);
        let s = self.size;
        match self.kind {
            IndenterKind::Round => q.coords.norm() - s,
            IndenterKind::Point => q.coords.norm() - s / 5.0,
            IndenterKind::Line => {
                // Capsule along the local x axis.
                let x = q.x.clamp(-s, s);
                (q - Point3::new(x, 0.0, 0.0)).norm() - s / 5.0
            }
            IndenterKind::Square => {
                // Box with a flat square face, thin along z.
                let half = Vector3::new(s / 2.0, s / 2.0, s / 5.0);
                let d = Vector3::new(
                    q.x.abs() - half.x,
                    q.y.abs() - half.y,
                    q.z.abs() - half.z,
                );
                let outside = Vector3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0));
                outside.norm() + d.x.max(d.y).max(d.z).min(0.0)
            }
            IndenterKind::Split => {
                // Two spheres along the local x axis.
                let r = s / 2.0;
                let a = (q - Point3::new(s, 0.0, 0.0)).norm() - r;
                let b = (q - Point3::new(-s, 0.0, 0.0)).norm() - r;
                a.min(b)
            }
        }
    }
}

/// Ground-truth contact detection from indenter geometry: a vertex of the
/// deformed surface is in contact when its signed distance to the indenter
/// is below `penetration_tol`.
pub fn indenter_contact_truth(
    deformed_positions: &[Point3<f64>],
    indenter: &IndenterSpec,
    penetration_tol: f64,
) -> ContactMask {
    ContactMask {
        flags: deformed_positions
            .iter()
            .map(|p| indenter.signed_distance(p) < penetration_tol)
            .collect(),
        threshold: penetration_tol,
    }
}

/// A contact load expressed as a pressure footprint on the reference
/// surface: every loaded vertex is pushed along the same direction (rigid
/// indenter), weights follow the indenter shape, and the weighted forces
/// sum exactly to `total_force * direction`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FootprintLoad {
    pub kind: IndenterKind,
    /// Footprint center on (or near) the surface.
    pub center: Point3<f64>,
    /// Force direction (unit), usually inward.
    pub direction: Unit<Vector3<f64>>,
    /// Total force magnitude, N.
    pub total_force: f64,
    /// Footprint dimension, m.
    pub size: f64,
    /// In-tangent-plane rotation for anisotropic footprints, rad.
    pub orientation: f64,
}

/// Footprint weight profiles per indenter shape; approximate by design
/// (a Hertz-like dome for the round tip, a sharp cusp for the point, a
/// band for the line, a plateau for the square, two domes for the split).
fn footprint_weight(kind: IndenterKind, x: f64, y: f64, size: f64) -> f64 {
    let r = (x * x + y * y).sqrt();
    match kind {
        IndenterKind::Round => {
            let t = r / size;
            (1.0 - t * t).max(0.0).sqrt()
        }
        IndenterKind::Point => {
            let t = r / size;
            let w = (1.0 - t).max(0.0);
            w * w
        }
        IndenterKind::Line => {
            let along = x.abs() / size;
            let across = y.abs() / (size / 3.0);
            if along > 1.0 {
                0.0
            } else {
                (1.0 - across * across).max(0.0).sqrt()
            }
        }
        IndenterKind::Square => {
            let half = size / 2.0;
            let edge = 0.25 * half;
            let wx = ((half - x.abs()) / edge).clamp(0.0, 1.0);
            let wy = ((half - y.abs()) / edge).clamp(0.0, 1.0);
            wx.min(wy)
        }
        IndenterKind::Split => {
            let sep = size;
            let radius = size / 2.0;
            let mut w: f64 = 0.0;
            for sx in [-sep, sep] {
                let d = ((x - sx) * (x - sx) + y * y).sqrt() / radius;
                w = w.max((1.0 - d * d).max(0.0).sqrt());
            }
            w
        }
    }
}

/// Maps a footprint load to per-vertex nodal forces on the reference mesh.
pub fn footprint_forces(
    mesh: &SurfaceMesh,
    geometry: &VertexGeometry,
    load: &FootprintLoad,
) -> Result<Vec<Vector3<f64>>, SyntheticError> {
    // Tangent frame at the footprint center, rotated by `orientation`.
    let up = {
        // Surface normal nearest to the center.
        let nearest = (0..mesh.vertex_count())
            .min_by(|&a, &b| {
                let da = (mesh.vertex(a) - load.center).norm_squared();
                let db = (mesh.vertex(b) - load.center).norm_squared();
                da.partial_cmp(&db).unwrap()
            })
            .expect("non-empty mesh");
        geometry.normal(nearest)
    };
    let seed_axis = if up.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let t1 = (seed_axis - up * seed_axis.dot(&up)).normalize();
    let t2 = up.cross(&t1);
    let (sin_o, cos_o) = load.orientation.sin_cos();
    let e1 = t1 * cos_o + t2 * sin_o;
    let e2 = t2 * cos_o - t1 * sin_o;

    let mut weights = vec![0.0; mesh.vertex_count()];
    let mut total = 0.0;
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary(v) {
            continue;
        }
        let d = mesh.vertex(v) - load.center;
        let w = footprint_weight(load.kind, d.dot(&e1), d.dot(&e2), load.size);
        weights[v] = w;
        total += w;
    }
    if total <= 0.0 {
        return Err(SyntheticError::EmptyFootprint);
    }
    let scale = load.total_force / total;
    Ok(weights
        .into_iter()
        .map(|w| load.direction.into_inner() * (w * scale))
        .collect())
}

/// A reproducible synthetic scenario: a load, a pressure change, a noise
/// model, and the seed that fixes every random draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub load: LoadPattern,
    pub delta_p: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPattern {
    /// Explicit per-vertex forces (zero on the rim).
    Explicit(Vec<[f64; 3]>),
    /// Indenter-shaped pressure footprint.
    Footprint(FootprintLoad),
}

impl LoadPattern {
    pub fn to_forces(
        &self,
        mesh: &SurfaceMesh,
        geometry: &VertexGeometry,
    ) -> Result<Vec<Vector3<f64>>, SyntheticError> {
        match self {
            LoadPattern::Explicit(rows) => {
                assert_eq!(rows.len(), mesh.vertex_count());
                Ok(rows.iter().map(|r| Vector3::new(r[0], r[1], r[2])).collect())
            }
            LoadPattern::Footprint(load) => footprint_forces(mesh, geometry, load),
        }
    }
}

/// Everything the inverse pipeline is later scored against.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub displacements: DisplacementField,
    /// Full external force field (interior loads plus rim reactions), N.
    pub forces: Vec<Vector3<f64>>,
    /// Interior net force, N.
    pub net_force: Vector3<f64>,
    /// Contact mask from the adaptive threshold applied to the true
    /// pressures.
    pub mask: ContactMask,
    pub delta_p: f64,
    pub regularization: f64,
}

/// Runs one scenario end to end: forward solve, ground truth extraction,
/// and frame rendering. Deterministic per seed.
pub fn run_scenario(
    reference: &ReferenceConfiguration,
    geometry: &VertexGeometry,
    stiffness: &StiffnessMatrix,
    camera: &CameraModel,
    spec: &ScenarioSpec,
    contact_params: &ContactParams,
) -> Result<(ObservationFrame, GroundTruth), SyntheticError> {
    let mesh = &reference.mesh;
    let applied = spec.load.to_forces(mesh, geometry)?;
    let forward = forward_solve_with(mesh, geometry, stiffness, &applied, spec.delta_p)?;
    let forces = fem::external_forces(
        stiffness,
        geometry,
        forward.displacements.as_slice(),
        spec.delta_p,
    )?;
    let net_force = fem::net_force(&forces, mesh);
    let pressures = fem::contact_pressures(&forces, geometry);
    let mask = contact_mask(
        &inward_normal_pressure(&pressures, geometry),
        geometry,
        contact_params,
    );
    let frame = render_frame(
        reference,
        camera,
        &forward.displacements,
        spec.delta_p,
        &spec.noise,
        spec.seed,
    )?;
    Ok((
        frame,
        GroundTruth {
            displacements: forward.displacements,
            forces,
            net_force,
            mask,
            delta_p: spec.delta_p,
            regularization: forward.regularization,
        },
    ))
}

/// Draws a randomized poke scenario on the cap: an interior center away
/// from the rim, a mostly-inward force direction with a shear component,
/// and a magnitude in `force_range`.
pub fn random_poke_scenario(
    mesh: &SurfaceMesh,
    geometry: &VertexGeometry,
    force_range: (f64, f64),
    noise: &NoiseModel,
    seed: u64,
) -> ScenarioSpec {
    use rand::RngExt;
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let size = rng.random_range(0.009..0.013);
    // Keep the footprint well inside the rim.
    let rim_radius = mesh
        .boundary()
        .iter()
        .map(|&v| (mesh.vertex(v).x.powi(2) + mesh.vertex(v).y.powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    let max_center_radius = (rim_radius - size - 0.006).max(rim_radius * 0.3);
    let candidates: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| {
            !mesh.is_boundary(v)
                && (mesh.vertex(v).x.powi(2) + mesh.vertex(v).y.powi(2)).sqrt()
                    < max_center_radius
        })
        .collect();
    let center_vertex = candidates[rng.random_range(0..candidates.len())];
    let center = *mesh.vertex(center_vertex);
    let normal = geometry.normal(center_vertex);

    // Inward push with a tangential (shear) component up to ~35 degrees.
    let tangent = {
        let seed_axis = if normal.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        (seed_axis - normal * seed_axis.dot(&normal)).normalize()
    };
    let bitangent = normal.cross(&tangent);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let shear = rng.random_range(0.0..0.7);
    let direction = Unit::new_normalize(
        -normal + (tangent * phi.cos() + bitangent * phi.sin()) * shear,
    );

    let total_force = rng.random_range(force_range.0..force_range.1);
    // Poking stiffens the air spring; couple the pressure rise to the load.
    let delta_p = total_force * rng.random_range(60.0..140.0);
    ScenarioSpec {
        load: LoadPattern::Footprint(FootprintLoad {
            kind: IndenterKind::Round,
            center,
            direction,
            total_force,
            size,
            orientation: rng.random_range(0.0..std::f64::consts::TAU),
        }),
        delta_p,
        noise: *noise,
        seed,
    }
}
