//! Linear plane-stress membrane model on the triangulated surface.
//!
//! Each triangle is treated as a flat constant-strain element in its own
//! tangent frame: 3D vertex displacements are projected into the frame,
//! strains follow from the linear B matrix, stresses from the plane-stress
//! constitutive law, and the resulting in-plane node forces are lifted back
//! to 3D. Out-of-plane motion produces no force (zero bending stiffness).
//! Assembly yields the sparse map from stacked displacements to tension
//! force changes; combined with per-vertex pressure lumping this gives the
//! external contact force as a linear function of the observed displacement
//! and the pressure change.

use crate::mesh::{SurfaceMesh, VertexGeometry};
use crate::sparse::CsrMatrix;
use nalgebra::{Matrix3, Point3, SMatrix, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("face {face} is degenerate and cannot carry an element")]
    DegenerateFace { face: usize },
    #[error("non-physical material: {reason}")]
    NonPhysicalMaterial { reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Material of the membrane sheet.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Young's modulus, Pa.
    pub youngs_modulus: f64,
    /// Poisson ratio; 0.5 (incompressible rubber) is valid in plane stress.
    pub poisson_ratio: f64,
    /// Sheet thickness, m.
    pub thickness: f64,
}

impl MaterialParams {
    /// Paper-calibrated membrane defaults: E = 1.317 MPa, nu = 0.5,
    /// t = 0.65 mm.
    pub fn sensor_default() -> Self {
        Self {
            youngs_modulus: 1.317e6,
            poisson_ratio: 0.5,
            thickness: 0.65e-3,
        }
    }

    pub fn new(youngs_modulus: f64, poisson_ratio: f64, thickness: f64) -> Result<Self, FemError> {
        let m = Self {
            youngs_modulus,
            poisson_ratio,
            thickness,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), FemError> {
        if !(self.youngs_modulus > 0.0) {
            return Err(FemError::NonPhysicalMaterial {
                reason: format!("Young's modulus must be positive, got {}", self.youngs_modulus),
            });
        }
        if !(0.0..=0.5).contains(&self.poisson_ratio) {
            return Err(FemError::NonPhysicalMaterial {
                reason: format!(
                    "Poisson ratio must lie in [0, 0.5], got {}",
                    self.poisson_ratio
                ),
            });
        }
        if !(self.thickness > 0.0) {
            return Err(FemError::NonPhysicalMaterial {
                reason: format!("thickness must be positive, got {}", self.thickness),
            });
        }
        Ok(())
    }

    /// Plane-stress constitutive matrix D mapping (e_ii, e_jj, g_ij) to
    /// (s_ii, s_jj, s_ij).
    pub fn plane_stress_matrix(&self) -> Matrix3<f64> {
        let e = self.youngs_modulus;
        let nu = self.poisson_ratio;
        let c = e / (1.0 - nu * nu);
        Matrix3::new(
            c,
            c * nu,
            0.0,
            c * nu,
            c,
            0.0,
            0.0,
            0.0,
            c * (1.0 - nu) / 2.0,
        )
    }
}

/// Orthonormal tangent frame of one triangle: i along the first edge, k the
/// outward normal, j completing the right-handed triad.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub i_hat: Unit<Vector3<f64>>,
    pub j_hat: Unit<Vector3<f64>>,
    pub k_hat: Unit<Vector3<f64>>,
}

impl LocalFrame {
    pub fn for_triangle(p: &[Point3<f64>; 3]) -> Result<Self, FemError> {
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let normal = e1.cross(&e2);
        if normal.norm() <= 2.0 * crate::mesh::DEGENERATE_AREA {
            return Err(FemError::DegenerateFace { face: 0 });
        }
        let k_hat = Unit::new_normalize(normal);
        let i_hat = Unit::new_normalize(e1);
        let j_hat = Unit::new_normalize(k_hat.cross(&i_hat));
        Ok(Self { i_hat, j_hat, k_hat })
    }

    /// 2D coordinates of a vector expressed in the (i, j) tangent plane.
    pub fn project(&self, v: &Vector3<f64>) -> [f64; 2] {
        [self.i_hat.dot(v), self.j_hat.dot(v)]
    }
}

/// The assembled 3|M| x 3|M| map from stacked vertex displacements to
/// tension force changes, with displacement coordinate `3 * vertex + axis`.
#[derive(Debug, Clone)]
pub struct StiffnessMatrix {
    matrix: CsrMatrix,
}

impl StiffnessMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Tension force change `K U` for a stacked displacement vector.
    pub fn apply(&self, displacements: &[f64]) -> Vec<f64> {
        self.matrix.matvec(displacements)
    }

    /// Stiffness scaled by a factor; with a fixed Poisson ratio the
    /// assembled matrix is linear in the Young's modulus, so rescaling
    /// replaces reassembly during calibration sweeps.
    pub fn scaled(&self, factor: f64) -> StiffnessMatrix {
        StiffnessMatrix {
            matrix: self.matrix.scaled(factor),
        }
    }
}

/// Element stiffness of one triangle as a 9x9 block over its three
/// vertices' 3D displacements.
pub fn element_stiffness(
    positions: &[Point3<f64>; 3],
    frame: &LocalFrame,
    material: &MaterialParams,
) -> Result<SMatrix<f64, 9, 9>, FemError> {
    material.validate()?;
    // Local 2D coordinates with p0 at the origin.
    let e1 = positions[1] - positions[0];
    let e2 = positions[2] - positions[0];
    let [x1, y1] = frame.project(&e1);
    let [x2, y2] = frame.project(&e2);
    let coords = [[0.0, 0.0], [x1, y1], [x2, y2]];
    let area2 = x1 * y2 - x2 * y1; // twice the signed area; positive for CCW faces
    if area2 <= 2.0 * crate::mesh::DEGENERATE_AREA {
        return Err(FemError::DegenerateFace { face: 0 });
    }
    let area = 0.5 * area2;

    // Constant-strain-triangle B matrix (3x6) in the local frame.
    let mut b = SMatrix::<f64, 3, 6>::zeros();
    for v in 0..3 {
        let (xj, yj) = (coords[(v + 1) % 3][0], coords[(v + 1) % 3][1]);
        let (xk, yk) = (coords[(v + 2) % 3][0], coords[(v + 2) % 3][1]);
        let bv = (yj - yk) / area2;
        let cv = (xk - xj) / area2;
        b[(0, 2 * v)] = bv;
        b[(1, 2 * v + 1)] = cv;
        b[(2, 2 * v)] = cv;
        b[(2, 2 * v + 1)] = bv;
    }

    let d = material.plane_stress_matrix();
    let k2d = b.transpose() * d * b * (material.thickness * area);

    // Projection from stacked 3D displacements to stacked 2D tangent
    // displacements: block diagonal copies of [i j]^T.
    let mut p = SMatrix::<f64, 6, 9>::zeros();
    for v in 0..3 {
        for c in 0..3 {
            p[(2 * v, 3 * v + c)] = frame.i_hat[c];
            p[(2 * v + 1, 3 * v + c)] = frame.j_hat[c];
        }
    }
    Ok(p.transpose() * k2d * p)
}

/// Assembles the global stiffness by scattering element blocks to the
/// stacked vertex coordinates.
pub fn assemble_stiffness(
    mesh: &SurfaceMesh,
    material: &MaterialParams,
) -> Result<StiffnessMatrix, FemError> {
    material.validate()?;
    let dim = 3 * mesh.vertex_count();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.face_count() * 81);
    for f in 0..mesh.face_count() {
        let positions = mesh.face_positions(f);
        let frame =
            LocalFrame::for_triangle(&positions).map_err(|_| FemError::DegenerateFace { face: f })?;
        let ke = element_stiffness(&positions, &frame, material)
            .map_err(|e| match e {
                FemError::DegenerateFace { .. } => FemError::DegenerateFace { face: f },
                other => other,
            })?;
        let face = mesh.faces()[f];
        for (lr, &gr) in face.iter().enumerate() {
            for (lc, &gc) in face.iter().enumerate() {
                for a in 0..3 {
                    for b in 0..3 {
                        let v = ke[(3 * lr + a, 3 * lc + b)];
                        if v != 0.0 {
                            triplets.push((3 * gr + a, 3 * gc + b, v));
                        }
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(dim, dim, &triplets).expect("indices in range");
    Ok(StiffnessMatrix { matrix })
}

/// Per-vertex pressure force rows `delta_p * a_i * n_i`.
pub fn pressure_forces(geometry: &VertexGeometry, delta_p: f64) -> Vec<Vector3<f64>> {
    geometry
        .lumped_areas()
        .iter()
        .zip(geometry.normals())
        .map(|(&a, n)| n * (a * delta_p))
        .collect()
}

/// Stacked (3n) version of [`pressure_forces`].
pub fn pressure_forces_stacked(geometry: &VertexGeometry, delta_p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * geometry.vertex_count());
    for (a, n) in geometry.lumped_areas().iter().zip(geometry.normals()) {
        let f = n * (*a * delta_p);
        out.extend_from_slice(&[f.x, f.y, f.z]);
    }
    out
}

/// External contact forces per vertex:
/// `F_external = -(K U + delta_p [a_i n_i])`.
pub fn external_forces(
    stiffness: &StiffnessMatrix,
    geometry: &VertexGeometry,
    displacements: &[f64],
    delta_p: f64,
) -> Result<Vec<Vector3<f64>>, FemError> {
    if displacements.len() != stiffness.dim() {
        return Err(FemError::DimensionMismatch {
            expected: stiffness.dim(),
            got: displacements.len(),
        });
    }
    if 3 * geometry.vertex_count() != stiffness.dim() {
        return Err(FemError::DimensionMismatch {
            expected: stiffness.dim(),
            got: 3 * geometry.vertex_count(),
        });
    }
    let tension = stiffness.apply(displacements);
    let pressure = pressure_forces(geometry, delta_p);
    Ok((0..geometry.vertex_count())
        .map(|v| {
            -Vector3::new(tension[3 * v], tension[3 * v + 1], tension[3 * v + 2]) - pressure[v]
        })
        .collect())
}

/// Contact pressures `diag(a)^{-1} F_external`, Pa.
pub fn contact_pressures(
    forces: &[Vector3<f64>],
    geometry: &VertexGeometry,
) -> Vec<Vector3<f64>> {
    forces
        .iter()
        .zip(geometry.lumped_areas())
        .map(|(f, &a)| f / a)
        .collect()
}

/// Net contact force: sum of vertex forces over the interior
/// (rim vertices carry the mounting reaction and are excluded).
pub fn net_force(forces: &[Vector3<f64>], mesh: &SurfaceMesh) -> Vector3<f64> {
    forces
        .iter()
        .enumerate()
        .filter(|(v, _)| !mesh.is_boundary(*v))
        .fold(Vector3::zeros(), |acc, (_, f)| acc + f)
}
