//! Mesh generators: spherical caps at the sensor's working resolutions and a
//! closed icosahedron for divergence-theorem style checks.

use super::{MeshError, SurfaceMesh};
use nalgebra::{Point3, Vector3};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};
use std::f64::consts::PI;

/// Working resolutions of the membrane mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshResolution {
    Coarse,
    Medium,
    Fine,
}

impl MeshResolution {
    pub fn vertex_count(self) -> usize {
        match self {
            MeshResolution::Coarse => 227,
            MeshResolution::Medium => 390,
            MeshResolution::Fine => 749,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshResolution::Coarse => "coarse",
            MeshResolution::Medium => "medium",
            MeshResolution::Fine => "fine",
        }
    }
}

/// Shape of the inflated cap: a circular rim of `base_radius` lifted to a
/// sphere so the apex sits `height` above the rim plane.
#[derive(Debug, Clone, Copy)]
pub struct CapGeometry {
    pub base_radius: f64,
    pub height: f64,
}

impl Default for CapGeometry {
    fn default() -> Self {
        // Desk-scale sensor: 8 cm rim diameter, 1.5 cm inflation height.
        Self {
            base_radius: 0.04,
            height: 0.015,
        }
    }
}

impl CapGeometry {
    /// Radius of the sphere the cap lies on.
    pub fn sphere_radius(&self) -> f64 {
        let a = self.base_radius;
        let h = self.height;
        (a * a + h * h) / (2.0 * h)
    }

    fn lift(&self, x: f64, y: f64) -> Point3<f64> {
        let r2 = x * x + y * y;
        let rs = self.sphere_radius();
        let z = (rs * rs - r2).max(0.0).sqrt() - (rs - self.height);
        Point3::new(x, y, z)
    }
}

struct ParamPoint {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for ParamPoint {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Generates an unstructured spherical-cap mesh with exactly
/// `vertex_count` vertices.
///
/// Interior vertices follow a sunflower (golden-angle) layout in the
/// parameter disk, the rim is an evenly spaced circle, and faces come from a
/// Delaunay triangulation of the parameter points lifted onto the sphere.
/// The rim circle is the convex hull of the point set, so the mesh boundary
/// is exactly the rim.
pub fn spherical_cap_mesh(
    vertex_count: usize,
    geometry: CapGeometry,
) -> Result<SurfaceMesh, MeshError> {
    assert!(vertex_count >= 12, "cap mesh needs at least 12 vertices");
    let a = geometry.base_radius;
    let n_rim = ((2.0 * (PI * vertex_count as f64).sqrt()).round() as usize)
        .clamp(8, vertex_count / 2);
    let n_interior = vertex_count - n_rim;

    let mut params: Vec<(f64, f64)> = Vec::with_capacity(vertex_count);
    // Mean point spacing in the parameter disk; interior points stop short
    // of the rim by a fraction of it so rim triangles stay well shaped.
    let spacing = a * (PI / vertex_count as f64).sqrt();
    let r_max = a - 0.7 * spacing;
    let golden_angle = PI * (3.0 - 5.0_f64.sqrt());
    for i in 0..n_interior {
        let r = r_max * (((i as f64) + 0.5) / n_interior as f64).sqrt();
        let theta = golden_angle * i as f64;
        params.push((r * theta.cos(), r * theta.sin()));
    }
    for k in 0..n_rim {
        let theta = 2.0 * PI * k as f64 / n_rim as f64;
        params.push((a * theta.cos(), a * theta.sin()));
    }

    let mut triangulation: DelaunayTriangulation<ParamPoint> = DelaunayTriangulation::new();
    for (index, &(x, y)) in params.iter().enumerate() {
        triangulation
            .insert(ParamPoint {
                position: Point2::new(x, y),
                index,
            })
            .expect("finite, distinct parameter points");
    }

    let vertices: Vec<Point3<f64>> = params
        .iter()
        .map(|&(x, y)| geometry.lift(x, y))
        .collect();
    let mut faces = Vec::with_capacity(triangulation.num_inner_faces());
    for face in triangulation.inner_faces() {
        let [v0, v1, v2] = face.vertices();
        // Spade's inner faces are counterclockwise in the parameter plane,
        // which matches outward (upward) orientation after lifting.
        faces.push([v0.data().index, v1.data().index, v2.data().index]);
    }
    SurfaceMesh::build(vertices, faces)
}

/// Closed icosahedron of circumscribed radius `radius`, outward oriented.
pub fn icosahedron(radius: f64) -> SurfaceMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let scale = radius / (1.0 + phi * phi).sqrt();
    let vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| Point3::new(x * scale, y * scale, z * scale))
        .collect();
    let index_faces: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let faces: Vec<[usize; 3]> = index_faces
        .iter()
        .map(|&[i, j, k]| {
            // Star-shaped about the origin: flip any face whose normal
            // points inward.
            let n: Vector3<f64> = (vertices[j] - vertices[i]).cross(&(vertices[k] - vertices[i]));
            let centroid = (vertices[i].coords + vertices[j].coords + vertices[k].coords) / 3.0;
            if n.dot(&centroid) >= 0.0 {
                [i, j, k]
            } else {
                [i, k, j]
            }
        })
        .collect();
    SurfaceMesh::build(vertices, faces).expect("icosahedron is a valid closed mesh")
}
