//! Triangulated membrane surface with the geometric quantities needed by the
//! finite-element model and the pressure lumping: lumped vertex areas,
//! area-weighted outward normals, rim detection, and on-surface barycentric
//! interpolation.

mod generate;
mod off;

pub use generate::{icosahedron, spherical_cap_mesh, CapGeometry, MeshResolution};
pub use off::{read_off, read_off_str, write_off, write_off_string, OffError};

use nalgebra::{Point3, Unit, Vector3};
use std::collections::HashMap;
use thiserror::Error;

/// Faces thinner than this are rejected before they can poison the
/// stiffness assembly.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Maximum distance between a surface query point and its containing face
/// plane; sensor-scale geometry makes 1 mm generous.
pub const PROJECTION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no vertices or no faces")]
    EmptyMesh,
    #[error("face {face} references vertex {index} out of range")]
    FaceIndexOutOfRange { face: usize, index: usize },
    #[error("face {face} is degenerate (area {area:.3e} m^2)")]
    DegenerateFace { face: usize, area: f64 },
    #[error("edge ({0}, {1}) is traversed twice in the same direction", edge.0, edge.1)]
    InconsistentOrientation { edge: (usize, usize) },
    #[error("edge ({0}, {1}) has more than two incident faces", edge.0, edge.1)]
    NonManifoldEdge { edge: (usize, usize) },
    #[error("vertex {vertex} belongs to no face")]
    DanglingVertex { vertex: usize },
    #[error("query point lies outside the mesh (nearest face distance {distance:.3e} m)")]
    PointOutsideMesh { distance: f64 },
}

/// An oriented triangulated surface, immutable after construction.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl SurfaceMesh {
    /// Validates indices, face areas, orientation consistency, and detects
    /// the open rim.
    pub fn build(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= vertices.len() {
                    return Err(MeshError::FaceIndexOutOfRange { face: f, index: v });
                }
            }
            let area = triangle_area(&vertices[face[0]], &vertices[face[1]], &vertices[face[2]]);
            if !(area > DEGENERATE_AREA) {
                return Err(MeshError::DegenerateFace { face: f, area });
            }
        }

        // Each undirected edge may carry at most two faces, and those two
        // must traverse it in opposite directions.
        let mut edges: HashMap<(usize, usize), (u8, u8)> = HashMap::new();
        for face in &faces {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edges.entry(key).or_insert((0, 0));
                if a < b {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        let mut is_boundary = vec![false; vertices.len()];
        let mut seen = vec![false; vertices.len()];
        for face in &faces {
            for &v in face {
                seen[v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(MeshError::DanglingVertex { vertex: v });
        }
        let mut sorted_edges: Vec<_> = edges.iter().collect();
        sorted_edges.sort_unstable_by_key(|(k, _)| **k);
        for (&edge, &(fwd, bwd)) in sorted_edges {
            let total = fwd + bwd;
            if total > 2 {
                return Err(MeshError::NonManifoldEdge { edge });
            }
            if fwd > 1 || bwd > 1 {
                return Err(MeshError::InconsistentOrientation { edge });
            }
            if total == 1 {
                is_boundary[edge.0] = true;
                is_boundary[edge.1] = true;
            }
        }
        let boundary: Vec<usize> = (0..vertices.len()).filter(|&v| is_boundary[v]).collect();
        Ok(Self {
            vertices,
            faces,
            boundary,
            is_boundary,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Point3<f64> {
        &self.vertices[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Rim vertex indices, ascending.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn interior_count(&self) -> usize {
        self.vertex_count() - self.boundary.len()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn face_positions(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_positions(f);
        triangle_area(&a, &b, &c)
    }

    /// Non-normalized outward area vector (normal scaled by face area).
    pub fn face_area_vector(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_positions(f);
        (b - a).cross(&(c - a)) * 0.5
    }

    pub fn face_normal(&self, f: usize) -> Unit<Vector3<f64>> {
        Unit::new_normalize(self.face_area_vector(f))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.face_count()).map(|f| self.face_area(f)).sum()
    }

    /// Interpolates per-vertex values at a point on (or within
    /// [`PROJECTION_TOLERANCE`] of) the surface.
    ///
    /// The containing face is located by projecting the query into each face
    /// plane and solving the 2x2 barycentric system; among faces containing
    /// the projection, the one with the smallest out-of-plane distance wins.
    pub fn barycentric_interpolate<T: Interpolable>(
        &self,
        values: &[T],
        point: &Point3<f64>,
    ) -> Result<T, MeshError> {
        assert_eq!(values.len(), self.vertex_count());
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for f in 0..self.face_count() {
            let [p0, p1, p2] = self.face_positions(f);
            if let Some((dist, bary)) = barycentric_in_face(&p0, &p1, &p2, point) {
                if best.map_or(true, |(d, _, _)| dist < d) {
                    best = Some((dist, f, bary));
                }
            }
        }
        match best {
            Some((dist, f, bary)) if dist <= PROJECTION_TOLERANCE => {
                let [a, b, c] = self.faces[f];
                let mut out = T::interp_zero();
                out = out.interp_axpy(bary[0], values[a]);
                out = out.interp_axpy(bary[1], values[b]);
                out = out.interp_axpy(bary[2], values[c]);
                Ok(out)
            }
            Some((dist, _, _)) => Err(MeshError::PointOutsideMesh { distance: dist }),
            None => Err(MeshError::PointOutsideMesh { distance: f64::INFINITY }),
        }
    }

    /// Midpoint 4-way subdivision; children inherit the parent orientation.
    pub fn subdivide4(&self) -> SurfaceMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces = Vec::with_capacity(self.faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let p = Point3::from((vertices[a].coords + vertices[b].coords) * 0.5);
                vertices.push(p);
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &self.faces {
            let mab = midpoint(a, b, &mut vertices);
            let mbc = midpoint(b, c, &mut vertices);
            let mca = midpoint(c, a, &mut vertices);
            faces.push([a, mab, mca]);
            faces.push([b, mbc, mab]);
            faces.push([c, mca, mbc]);
            faces.push([mab, mbc, mca]);
        }
        SurfaceMesh::build(vertices, faces).expect("subdivision preserves validity")
    }
}

/// Values that can be barycentrically combined.
pub trait Interpolable: Copy {
    fn interp_zero() -> Self;
    fn interp_axpy(self, weight: f64, value: Self) -> Self;
}

impl Interpolable for f64 {
    fn interp_zero() -> Self {
        0.0
    }
    fn interp_axpy(self, weight: f64, value: Self) -> Self {
        self + weight * value
    }
}

impl Interpolable for Vector3<f64> {
    fn interp_zero() -> Self {
        Vector3::zeros()
    }
    fn interp_axpy(self, weight: f64, value: Self) -> Self {
        self + weight * value
    }
}

/// Lumped areas and unit outward normals per vertex.
///
/// A vertex receives one third of each incident triangle's area; its normal
/// is the area-weighted mean of incident face normals, normalized.
#[derive(Debug, Clone)]
pub struct VertexGeometry {
    lumped_areas: Vec<f64>,
    normals: Vec<Vector3<f64>>,
}

impl VertexGeometry {
    pub fn compute(mesh: &SurfaceMesh) -> Self {
        let n = mesh.vertex_count();
        let mut lumped_areas = vec![0.0; n];
        let mut normal_sums = vec![Vector3::zeros(); n];
        for f in 0..mesh.face_count() {
            let area_vec = mesh.face_area_vector(f);
            let area = area_vec.norm();
            for &v in &mesh.faces[f] {
                lumped_areas[v] += area / 3.0;
                normal_sums[v] += area_vec;
            }
        }
        let normals = normal_sums
            .into_iter()
            .map(|s| s.normalize())
            .collect();
        Self {
            lumped_areas,
            normals,
        }
    }

    pub fn lumped_areas(&self) -> &[f64] {
        &self.lumped_areas
    }

    pub fn lumped_area(&self, v: usize) -> f64 {
        self.lumped_areas[v]
    }

    /// Unit outward normals.
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn normal(&self, v: usize) -> Vector3<f64> {
        self.normals[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.lumped_areas.len()
    }

    pub fn total_area(&self) -> f64 {
        self.lumped_areas.iter().sum()
    }
}

pub fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    (b - a).cross(&(c - a)).norm() * 0.5
}

/// Projects `point` into the plane of triangle (p0, p1, p2) and returns
/// `(out_of_plane_distance, barycentric)` when the projection falls inside
/// the triangle (with a small slack for edge queries).
fn barycentric_in_face(
    p0: &Point3<f64>,
    p1: &Point3<f64>,
    p2: &Point3<f64>,
    point: &Point3<f64>,
) -> Option<(f64, [f64; 3])> {
    const INSIDE_SLACK: f64 = 1e-10;
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let d = point - p0;
    // Solve d = s*e1 + t*e2 (+ normal component) via the Gram system.
    let g11 = e1.dot(&e1);
    let g12 = e1.dot(&e2);
    let g22 = e2.dot(&e2);
    let b1 = d.dot(&e1);
    let b2 = d.dot(&e2);
    let det = g11 * g22 - g12 * g12;
    if det <= 0.0 {
        return None;
    }
    let s = (g22 * b1 - g12 * b2) / det;
    let t = (g11 * b2 - g12 * b1) / det;
    let u = 1.0 - s - t;
    if s < -INSIDE_SLACK || t < -INSIDE_SLACK || u < -INSIDE_SLACK {
        return None;
    }
    let dist = (d - e1 * s - e2 * t).norm();
    Some((dist, [u, s, t]))
}
