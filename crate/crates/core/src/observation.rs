//! From raw sensor-style inputs to per-vertex 3D displacements.
//!
//! The deformation estimate composes three maps per vertex: project the
//! reference position to a pixel, displace the pixel by the optical flow,
//! and lift the displaced pixel back to 3D through the interpolated depth
//! map. Optical flow itself is an injectable field; providers exist for
//! dense file-backed grids (bilinear) and exact scattered correspondences
//! (piecewise linear over a Delaunay triangulation).

use crate::mesh::SurfaceMesh;
use nalgebra::{Isometry3, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, FloatTriangulation as _, HasPosition, Point2 as SpadePoint, Triangulation as _};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObservationError {
    #[error("point is behind the camera (camera-frame depth {depth:.6} m)")]
    BehindCamera { depth: f64 },
    #[error("pixel ({u:.2}, {v:.2}) projects outside the {width}x{height} image")]
    OutsideImage {
        u: f64,
        v: f64,
        width: f64,
        height: f64,
    },
    #[error("pixel ({u:.2}, {v:.2}) lies outside the depth sample hull")]
    OutsideHull { u: f64, v: f64 },
    #[error("flow field is undefined at pixel ({u:.2}, {v:.2})")]
    FlowUndefined { u: f64, v: f64 },
    #[error("need at least 3 depth samples, got {count}")]
    InsufficientDepthSamples { count: usize },
    #[error("vertex {vertex}: projection failed: {source}")]
    ProjectionFailure {
        vertex: usize,
        #[source]
        source: Box<ObservationError>,
    },
    #[error("vertex {vertex}: displaced pixel left the observed surface: {source}")]
    VertexOutsideHull {
        vertex: usize,
        #[source]
        source: Box<ObservationError>,
    },
    #[error("displacement field has {got} values, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Distortion-free pinhole camera with a pose mapping mesh-frame points
/// into the camera frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
    /// Mesh frame to camera frame.
    pub pose: Isometry3<f64>,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: f64,
        height: f64,
        pose: Isometry3<f64>,
    ) -> Self {
        assert!(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
        Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose,
        }
    }

    /// VGA camera 12 cm below the rim plane, looking up at the membrane.
    pub fn sensor_default() -> Self {
        Self::new(
            600.0,
            600.0,
            320.0,
            240.0,
            640.0,
            480.0,
            Isometry3::translation(0.0, 0.0, 0.12),
        )
    }

    /// Pinhole projection `u = fx X/Z + cx, v = fy Y/Z + cy`.
    pub fn project(&self, point: &Point3<f64>) -> Result<Vector2<f64>, ObservationError> {
        let cam = self.pose * point;
        if cam.z <= 0.0 {
            return Err(ObservationError::BehindCamera { depth: cam.z });
        }
        Ok(Vector2::new(
            self.fx * cam.x / cam.z + self.cx,
            self.fy * cam.y / cam.z + self.cy,
        ))
    }

    /// Camera-frame depth (Z coordinate) of a mesh-frame point.
    pub fn depth_of(&self, point: &Point3<f64>) -> f64 {
        (self.pose * point).z
    }

    /// Inverse pinhole map: pixel plus camera-frame depth back to the mesh
    /// frame.
    pub fn unproject(&self, pixel: &Vector2<f64>, depth: f64) -> Point3<f64> {
        let cam = Point3::new(
            (pixel.x - self.cx) / self.fx * depth,
            (pixel.y - self.cy) / self.fy * depth,
            depth,
        );
        self.pose.inverse_transform_point(&cam)
    }

    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        pixel.x >= 0.0 && pixel.y >= 0.0 && pixel.x <= self.width && pixel.y <= self.height
    }
}

struct DepthSample {
    position: SpadePoint<f64>,
    depth: f64,
}

impl HasPosition for DepthSample {
    type Scalar = f64;
    fn position(&self) -> SpadePoint<f64> {
        self.position
    }
}

/// Scattered depth samples with piecewise-linear interpolation over their
/// Delaunay triangulation; exact at sample pixels, an error outside the
/// sample hull (extrapolated depth is physically meaningless).
pub struct DepthMap {
    triangulation: DelaunayTriangulation<DepthSample>,
    camera: CameraModel,
    sample_count: usize,
}

impl DepthMap {
    /// `samples` rows are `(u, v, depth_m)` with depth in the camera frame.
    pub fn from_samples(
        camera: &CameraModel,
        samples: &[[f64; 3]],
    ) -> Result<Self, ObservationError> {
        if samples.len() < 3 {
            return Err(ObservationError::InsufficientDepthSamples {
                count: samples.len(),
            });
        }
        let mut triangulation = DelaunayTriangulation::new();
        for s in samples {
            triangulation
                .insert(DepthSample {
                    position: SpadePoint::new(s[0], s[1]),
                    depth: s[2],
                })
                .expect("finite pixel coordinates");
        }
        Ok(Self {
            triangulation,
            camera: camera.clone(),
            sample_count: samples.len(),
        })
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn depth_at(&self, pixel: &Vector2<f64>) -> Result<f64, ObservationError> {
        self.triangulation
            .barycentric()
            .interpolate(|v| v.data().depth, SpadePoint::new(pixel.x, pixel.y))
            .ok_or(ObservationError::OutsideHull {
                u: pixel.x,
                v: pixel.y,
            })
    }

    /// The map `S`: pixel to mesh-frame 3D point through the interpolated
    /// depth.
    pub fn point_at(&self, pixel: &Vector2<f64>) -> Result<Point3<f64>, ObservationError> {
        let depth = self.depth_at(pixel)?;
        Ok(self.camera.unproject(pixel, depth))
    }
}

/// Pixel-space displacement field `F`.
pub trait FlowField: Send + Sync {
    /// Flow at a pixel; `None` where the field is undefined.
    fn flow(&self, pixel: &Vector2<f64>) -> Option<Vector2<f64>>;
}

/// The identity frame: no motion anywhere.
pub struct ZeroFlow;

impl FlowField for ZeroFlow {
    fn flow(&self, _pixel: &Vector2<f64>) -> Option<Vector2<f64>> {
        Some(Vector2::zeros())
    }
}

/// Dense flow grid with bilinear lookup, the file-backed provider.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseFlowGrid {
    pub origin: [f64; 2],
    pub stride: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major `(du, dv)` at grid nodes.
    pub data: Vec<[f64; 2]>,
}

impl DenseFlowGrid {
    pub fn new(
        origin: [f64; 2],
        stride: f64,
        width: usize,
        height: usize,
        data: Vec<[f64; 2]>,
    ) -> Self {
        assert!(stride > 0.0);
        assert!(width >= 2 && height >= 2);
        assert_eq!(data.len(), width * height);
        Self {
            origin,
            stride,
            width,
            height,
            data,
        }
    }

    fn node(&self, i: usize, j: usize) -> Vector2<f64> {
        let [du, dv] = self.data[j * self.width + i];
        Vector2::new(du, dv)
    }
}

impl FlowField for DenseFlowGrid {
    fn flow(&self, pixel: &Vector2<f64>) -> Option<Vector2<f64>> {
        let x = (pixel.x - self.origin[0]) / self.stride;
        let y = (pixel.y - self.origin[1]) / self.stride;
        if x < 0.0 || y < 0.0 || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return None;
        }
        let i0 = (x.floor() as usize).min(self.width - 2);
        let j0 = (y.floor() as usize).min(self.height - 2);
        let tx = x - i0 as f64;
        let ty = y - j0 as f64;
        let top = self.node(i0, j0) * (1.0 - tx) + self.node(i0 + 1, j0) * tx;
        let bottom = self.node(i0, j0 + 1) * (1.0 - tx) + self.node(i0 + 1, j0 + 1) * tx;
        Some(top * (1.0 - ty) + bottom * ty)
    }
}

struct FlowSample {
    position: SpadePoint<f64>,
    flow: Vector2<f64>,
}

impl HasPosition for FlowSample {
    type Scalar = f64;
    fn position(&self) -> SpadePoint<f64> {
        self.position
    }
}

/// Exact flow from known correspondences: reproduces each sample exactly
/// and interpolates linearly in between. Used by the synthetic renderer.
pub struct ScatteredFlow {
    triangulation: DelaunayTriangulation<FlowSample>,
}

impl ScatteredFlow {
    /// `(pixel, flow)` correspondence pairs.
    pub fn from_correspondences(pairs: &[(Vector2<f64>, Vector2<f64>)]) -> Self {
        let mut triangulation = DelaunayTriangulation::new();
        for (pixel, flow) in pairs {
            triangulation
                .insert(FlowSample {
                    position: SpadePoint::new(pixel.x, pixel.y),
                    flow: *flow,
                })
                .expect("finite pixel coordinates");
        }
        Self { triangulation }
    }
}

impl FlowField for ScatteredFlow {
    fn flow(&self, pixel: &Vector2<f64>) -> Option<Vector2<f64>> {
        let query = SpadePoint::new(pixel.x, pixel.y);
        let barycentric = self.triangulation.barycentric();
        let du = barycentric.interpolate(|v| v.data().flow.x, query)?;
        let dv = barycentric.interpolate(|v| v.data().flow.y, query)?;
        Some(Vector2::new(du, dv))
    }
}

/// The inflated, contact-free state the model linearizes about.
pub struct ReferenceConfiguration {
    pub mesh: SurfaceMesh,
    /// Reference internal pressure, Pa.
    pub pressure: f64,
    /// Identifier of the reference image this configuration was built from.
    pub image_id: String,
}

impl ReferenceConfiguration {
    pub fn new(mesh: SurfaceMesh, pressure: f64, image_id: impl Into<String>) -> Self {
        Self {
            mesh,
            pressure,
            image_id: image_id.into(),
        }
    }
}

/// One sensor reading: interpolated depth, a flow field, and the pressure.
pub struct ObservationFrame {
    pub depth: DepthMap,
    pub flow: Box<dyn FlowField>,
    /// Current internal pressure, Pa.
    pub pressure: f64,
}

impl ObservationFrame {
    pub fn delta_p(&self, reference: &ReferenceConfiguration) -> f64 {
        self.pressure - reference.pressure
    }
}

/// Stacked per-vertex displacements `u_v = x_cur - x_ref`, layout
/// `3 * vertex + axis`, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    values: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(vertex_count: usize) -> Self {
        Self {
            values: vec![0.0; 3 * vertex_count],
        }
    }

    pub fn from_stacked(values: Vec<f64>) -> Self {
        assert_eq!(values.len() % 3, 0);
        Self { values }
    }

    pub fn from_vectors(vectors: &[Vector3<f64>]) -> Self {
        let mut values = Vec::with_capacity(3 * vectors.len());
        for v in vectors {
            values.extend_from_slice(&[v.x, v.y, v.z]);
        }
        Self { values }
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len() / 3
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn vertex(&self, v: usize) -> Vector3<f64> {
        Vector3::new(
            self.values[3 * v],
            self.values[3 * v + 1],
            self.values[3 * v + 2],
        )
    }

    pub fn set_vertex(&mut self, v: usize, value: Vector3<f64>) {
        self.values[3 * v] = value.x;
        self.values[3 * v + 1] = value.y;
        self.values[3 * v + 2] = value.z;
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.vertex_count()).fold(0.0f64, |m, v| m.max(self.vertex(v).norm()))
    }

    pub fn zero_boundary(&mut self, mesh: &SurfaceMesh) {
        for &v in mesh.boundary() {
            self.set_vertex(v, Vector3::zeros());
        }
    }
}

/// Recovers per-vertex displacements from one frame:
/// `x_cur = S(P(x_ref) + F(P(x_ref)))`, `u = x_cur - x_ref`, with rim
/// vertices forced to zero (the estimator constrains them anyway).
pub fn estimate_deformation(
    reference: &ReferenceConfiguration,
    frame: &ObservationFrame,
    camera: &CameraModel,
) -> Result<DisplacementField, ObservationError> {
    let mesh = &reference.mesh;
    let mut displacements = DisplacementField::zeros(mesh.vertex_count());
    for (v, x_ref) in mesh.vertices().iter().enumerate() {
        let pixel = camera
            .project(x_ref)
            .map_err(|e| ObservationError::ProjectionFailure {
                vertex: v,
                source: Box::new(e),
            })?;
        if !camera.contains(&pixel) {
            return Err(ObservationError::ProjectionFailure {
                vertex: v,
                source: Box::new(ObservationError::OutsideImage {
                    u: pixel.x,
                    v: pixel.y,
                    width: camera.width,
                    height: camera.height,
                }),
            });
        }
        let flow = frame
            .flow
            .flow(&pixel)
            .ok_or(ObservationError::FlowUndefined {
                u: pixel.x,
                v: pixel.y,
            })
            .map_err(|e| ObservationError::VertexOutsideHull {
                vertex: v,
                source: Box::new(e),
            })?;
        let displaced = pixel + flow;
        let x_cur =
            frame
                .depth
                .point_at(&displaced)
                .map_err(|e| ObservationError::VertexOutsideHull {
                    vertex: v,
                    source: Box::new(e),
                })?;
        displacements.set_vertex(v, x_cur - x_ref);
    }
    displacements.zero_boundary(mesh);
    Ok(displacements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{spherical_cap_mesh, CapGeometry};
    use rand::RngExt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let cam = CameraModel::sensor_default();
        for depth in [0.02, 0.1, 1.0] {
            let p = cam
                .pose
                .inverse_transform_point(&Point3::new(0.0, 0.0, depth));
            let pix = cam.project(&p).unwrap();
            assert!((pix - Vector2::new(cam.cx, cam.cy)).norm() < 1e-12);
        }
    }

    #[test]
    fn textbook_projection_example() {
        let cam = CameraModel::new(
            500.0,
            500.0,
            320.0,
            240.0,
            640.0,
            480.0,
            Isometry3::identity(),
        );
        let pix = cam.project(&Point3::new(0.01, 0.0, 0.1)).unwrap();
        assert!((pix.x - 370.0).abs() < 1e-12);
        assert!((pix.y - 240.0).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_rejected() {
        let cam = CameraModel::new(
            500.0,
            500.0,
            320.0,
            240.0,
            640.0,
            480.0,
            Isometry3::identity(),
        );
        assert!(matches!(
            cam.project(&Point3::new(0.0, 0.0, -0.1)),
            Err(ObservationError::BehindCamera { .. })
        ));
    }

    #[test]
    fn unproject_inverts_project() {
        let cam = CameraModel::sensor_default();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..200 {
            let p = Point3::new(
                rng.random_range(-0.03..0.03),
                rng.random_range(-0.03..0.03),
                rng.random_range(-0.01..0.02),
            );
            let pix = cam.project(&p).unwrap();
            let back = cam.unproject(&pix, cam.depth_of(&p));
            assert!((back - p).norm() < 1e-9);
        }
    }

    fn grid_samples(f: impl Fn(f64, f64) -> f64) -> Vec<[f64; 3]> {
        let mut samples = Vec::new();
        for j in 0..25 {
            for i in 0..25 {
                let u = 120.0 + 16.0 * i as f64;
                let v = 90.0 + 12.0 * j as f64;
                samples.push([u, v, f(u, v)]);
            }
        }
        samples
    }

    #[test]
    fn depth_exact_at_sample_pixels() {
        let cam = CameraModel::sensor_default();
        let samples = grid_samples(|u, v| 0.07 + 1e-5 * u + 2e-5 * v);
        let depth = DepthMap::from_samples(&cam, &samples).unwrap();
        for s in samples.iter().step_by(7) {
            let d = depth.depth_at(&Vector2::new(s[0], s[1])).unwrap();
            assert!((d - s[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_depth_interpolates_exactly() {
        let cam = CameraModel::sensor_default();
        let plane = |u: f64, v: f64| 0.08 + 3e-5 * u - 1.5e-5 * v;
        let depth = DepthMap::from_samples(&cam, &grid_samples(plane)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..300 {
            let u = rng.random_range(125.0..500.0);
            let v = rng.random_range(95.0..370.0);
            let d = depth.depth_at(&Vector2::new(u, v)).unwrap();
            assert!((d - plane(u, v)).abs() < 1e-9);
        }
    }

    #[test]
    fn hole_in_bubble_depth_fills_to_analytic_surface() {
        // Analytic spherical-cap depth seen from the default camera; punch a
        // hole and require interpolation across it to stay within 1e-4 m.
        let cam = CameraModel::sensor_default();
        let geometry = CapGeometry::default();
        let rs = geometry.sphere_radius();
        let cap_depth = |u: f64, v: f64| -> Option<f64> {
            // Camera ray x = t (dx, dy, 1); sphere center sits at
            // (0, 0, height - rs) in mesh frame, +0.09 in camera z.
            let dx = (u - cam.cx) / cam.fx;
            let dy = (v - cam.cy) / cam.fy;
            let cz = geometry.height - rs + cam.pose.translation.z;
            let d2 = dx * dx + dy * dy + 1.0;
            let b = -2.0 * cz;
            let c0 = cz * cz - rs * rs;
            let disc = b * b - 4.0 * d2 * c0;
            if disc < 0.0 {
                return None;
            }
            let t = (-b + disc.sqrt()) / (2.0 * d2);
            let z_mesh = t - cam.pose.translation.z;
            if z_mesh < -1e-6 {
                return None;
            }
            Some(t)
        };
        let hole = Vector2::new(320.0, 240.0);
        let mut samples = Vec::new();
        for j in 0..90 {
            for i in 0..90 {
                let u = 190.0 + 2.9 * i as f64;
                let v = 110.0 + 2.9 * j as f64;
                if (Vector2::new(u, v) - hole).norm() < 15.0 {
                    continue; // the hole
                }
                if let Some(d) = cap_depth(u, v) {
                    samples.push([u, v, d]);
                }
            }
        }
        let depth = DepthMap::from_samples(&cam, &samples).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for _ in 0..200 {
            let u = hole.x + rng.random_range(-12.0..12.0);
            let v = hole.y + rng.random_range(-12.0..12.0);
            let truth = cap_depth(u, v).unwrap();
            let got = depth.depth_at(&Vector2::new(u, v)).unwrap();
            assert!(
                (got - truth).abs() < 1e-4,
                "depth error {} at ({u}, {v})",
                (got - truth).abs()
            );
        }
    }

    #[test]
    fn outside_hull_is_an_error() {
        let cam = CameraModel::sensor_default();
        let depth = DepthMap::from_samples(&cam, &grid_samples(|_, _| 0.08)).unwrap();
        assert!(matches!(
            depth.depth_at(&Vector2::new(10.0, 10.0)),
            Err(ObservationError::OutsideHull { .. })
        ));
    }

    #[test]
    fn too_few_samples_rejected() {
        let cam = CameraModel::sensor_default();
        assert!(matches!(
            DepthMap::from_samples(&cam, &[[0.0, 0.0, 0.1], [1.0, 0.0, 0.1]]),
            Err(ObservationError::InsufficientDepthSamples { count: 2 })
        ));
    }

    #[test]
    fn dense_grid_bilinear_reproduces_affine_flow() {
        let flow_fn = |u: f64, v: f64| Vector2::new(0.5 + 0.01 * u - 0.02 * v, -1.0 + 0.005 * v);
        let (w, h, stride) = (33usize, 25usize, 4.0);
        let mut data = Vec::new();
        for j in 0..h {
            for i in 0..w {
                let f = flow_fn(10.0 + stride * i as f64, 20.0 + stride * j as f64);
                data.push([f.x, f.y]);
            }
        }
        let grid = DenseFlowGrid::new([10.0, 20.0], stride, w, h, data);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..200 {
            let u = rng.random_range(10.0..(10.0 + stride * (w - 1) as f64));
            let v = rng.random_range(20.0..(20.0 + stride * (h - 1) as f64));
            let got = grid.flow(&Vector2::new(u, v)).unwrap();
            assert!((got - flow_fn(u, v)).norm() < 1e-10);
        }
        assert!(grid.flow(&Vector2::new(0.0, 0.0)).is_none());
    }

    #[test]
    fn scattered_flow_exact_at_correspondences() {
        let pairs: Vec<_> = (0..40)
            .map(|k| {
                let a = k as f64;
                (
                    Vector2::new(
                        100.0 + 13.7 * (a * 0.7).sin() * a.sqrt(),
                        100.0 + 11.3 * (a * 1.3).cos() * a.sqrt(),
                    ),
                    Vector2::new((a * 0.37).sin(), (a * 0.53).cos()),
                )
            })
            .collect();
        let flow = ScatteredFlow::from_correspondences(&pairs);
        for (pix, expected) in &pairs {
            let got = flow.flow(pix).unwrap();
            assert!((got - expected).norm() < 1e-12);
        }
    }

    /// Builds a frame whose depth and flow encode the given deformed
    /// positions exactly.
    fn exact_frame(
        cam: &CameraModel,
        reference: &ReferenceConfiguration,
        deformed: &[Point3<f64>],
        pressure: f64,
    ) -> ObservationFrame {
        let mut correspondences = Vec::new();
        let mut depth_samples = Vec::new();
        for (v, x_ref) in reference.mesh.vertices().iter().enumerate() {
            let r = cam.project(x_ref).unwrap();
            let r2 = cam.project(&deformed[v]).unwrap();
            correspondences.push((r, r2 - r));
            depth_samples.push([r2.x, r2.y, cam.depth_of(&deformed[v])]);
        }
        ObservationFrame {
            depth: DepthMap::from_samples(cam, &depth_samples).unwrap(),
            flow: Box::new(ScatteredFlow::from_correspondences(&correspondences)),
            pressure,
        }
    }

    #[test]
    fn identity_frame_gives_zero_displacements() {
        let cam = CameraModel::sensor_default();
        let mesh = spherical_cap_mesh(120, CapGeometry::default()).unwrap();
        let reference = ReferenceConfiguration::new(mesh, 101_325.0, "ref");
        let deformed: Vec<_> = reference.mesh.vertices().to_vec();
        let frame = exact_frame(&cam, &reference, &deformed, 101_325.0);
        let u = estimate_deformation(&reference, &frame, &cam).unwrap();
        assert!(u.max_norm() < 1e-12);
        assert_eq!(frame.delta_p(&reference), 0.0);
    }

    #[test]
    fn rigid_translation_recovered_exactly() {
        let cam = CameraModel::sensor_default();
        let mesh = spherical_cap_mesh(120, CapGeometry::default()).unwrap();
        let reference = ReferenceConfiguration::new(mesh, 101_325.0, "ref");
        let shift = Vector3::new(1e-3, 0.0, 0.0);
        let deformed: Vec<_> = reference
            .mesh
            .vertices()
            .iter()
            .map(|p| p + shift)
            .collect();
        let frame = exact_frame(&cam, &reference, &deformed, 101_325.0);
        let u = estimate_deformation(&reference, &frame, &cam).unwrap();
        for v in 0..reference.mesh.vertex_count() {
            if reference.mesh.is_boundary(v) {
                assert_eq!(u.vertex(v), Vector3::zeros());
            } else {
                assert!((u.vertex(v) - shift).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn delta_p_is_antisymmetric() {
        let cam = CameraModel::sensor_default();
        let mesh = spherical_cap_mesh(60, CapGeometry::default()).unwrap();
        let ref_a = ReferenceConfiguration::new(mesh.clone(), 100_000.0, "a");
        let ref_b = ReferenceConfiguration::new(mesh, 100_250.0, "b");
        let deformed: Vec<_> = ref_a.mesh.vertices().to_vec();
        let frame_b = exact_frame(&cam, &ref_a, &deformed, 100_250.0);
        let frame_a = exact_frame(&cam, &ref_b, &deformed, 100_000.0);
        assert_eq!(frame_b.delta_p(&ref_a), -frame_a.delta_p(&ref_b));
    }
}
