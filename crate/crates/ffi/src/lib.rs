//! C ABI over the estimation pipeline: opaque handles, integer status
//! codes, and a thread-local error message.
//!
//! Ownership rules: every `*_new`/`*_load`/`*_generate` function hands the
//! caller a pointer that must be released with the matching `*_free`;
//! every getter borrows. Configuration crosses the boundary as JSON
//! strings in the same schemas the CLI uses, which keeps the ABI stable
//! while the configuration grows.

use bubbleforce::formats::{CameraFile, FrameFile, ParamsFile};
use bubbleforce::mesh::{spherical_cap_mesh, CapGeometry, SurfaceMesh};
use bubbleforce::observation::DisplacementField;
use bubbleforce::pipeline::{FrameEstimator, FrameResult};
use bubbleforce::ReferenceConfiguration;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfStatus {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Mesh = 3,
    Config = 4,
    Observation = 5,
    Solver = 6,
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: BfStatus, message: &str) -> BfStatus {
    set_error(message);
    status
}

/// Message for the most recent error on this thread; valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn bf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque triangulated membrane mesh.
pub struct BfMesh {
    inner: SurfaceMesh,
}

/// Opaque per-mesh estimator holding the assembled model.
pub struct BfEstimator {
    inner: FrameEstimator,
}

/// Opaque result of one frame estimation.
pub struct BfResult {
    inner: FrameResult,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, BfStatus> {
    if ptr.is_null() {
        return Err(fail(BfStatus::InvalidArgument, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(BfStatus::InvalidArgument, "string is not valid UTF-8"))
}

fn guard(body: impl FnOnce() -> BfStatus) -> BfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(BfStatus::Internal, "internal panic"),
    }
}

/// Loads an ASCII OFF mesh.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid location to
/// store the new handle.
#[no_mangle]
pub unsafe extern "C" fn bf_mesh_load_off(
    path: *const c_char,
    out: *mut *mut BfMesh,
) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return fail(BfStatus::InvalidArgument, "null output pointer");
        }
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match bubbleforce::mesh::read_off(Path::new(path)) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(BfMesh { inner: mesh }));
                BfStatus::Ok
            }
            Err(e) => fail(BfStatus::Mesh, &e.to_string()),
        }
    })
}

/// Generates a spherical-cap membrane mesh with exactly `vertices`
/// vertices (`vertices >= 12`).
///
/// # Safety
/// `out` must be a valid location to store the new handle.
#[no_mangle]
pub unsafe extern "C" fn bf_mesh_generate_cap(
    vertices: usize,
    base_radius: f64,
    height: f64,
    out: *mut *mut BfMesh,
) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return fail(BfStatus::InvalidArgument, "null output pointer");
        }
        if vertices < 12 || !(base_radius > 0.0) || !(height > 0.0) {
            return fail(
                BfStatus::InvalidArgument,
                "need vertices >= 12 and positive dimensions",
            );
        }
        match spherical_cap_mesh(
            vertices,
            CapGeometry {
                base_radius,
                height,
            },
        ) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(BfMesh { inner: mesh }));
                BfStatus::Ok
            }
            Err(e) => fail(BfStatus::Mesh, &e.to_string()),
        }
    })
}

/// # Safety
/// `mesh` must be a handle from this library, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn bf_mesh_free(mesh: *mut BfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_mesh_vertex_count(mesh: *const BfMesh) -> usize {
    if mesh.is_null() {
        return 0;
    }
    (*mesh).inner.vertex_count()
}

/// # Safety
/// `mesh` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_mesh_face_count(mesh: *const BfMesh) -> usize {
    if mesh.is_null() {
        return 0;
    }
    (*mesh).inner.face_count()
}

/// Number of rim vertices.
///
/// # Safety
/// `mesh` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_mesh_boundary_count(mesh: *const BfMesh) -> usize {
    if mesh.is_null() {
        return 0;
    }
    (*mesh).inner.boundary().len()
}

/// Builds an estimator for a mesh.
///
/// `camera_json` is a camera description in the run-config schema (null
/// for the built-in sensor camera); `params_json` is a parameter file
/// payload (null for defaults).
///
/// # Safety
/// `mesh` must be a valid handle; the JSON pointers must be null or
/// NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bf_estimator_new(
    mesh: *const BfMesh,
    reference_pressure_pa: f64,
    camera_json: *const c_char,
    params_json: *const c_char,
    out: *mut *mut BfEstimator,
) -> BfStatus {
    guard(|| {
        if mesh.is_null() || out.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        let camera = if camera_json.is_null() {
            CameraFile::default().to_model()
        } else {
            let text = match cstr(camera_json) {
                Ok(t) => t,
                Err(status) => return status,
            };
            match serde_json::from_str::<CameraFile>(text) {
                Ok(file) => file.to_model(),
                Err(e) => return fail(BfStatus::Config, &format!("camera json: {e}")),
            }
        };
        let params = if params_json.is_null() {
            ParamsFile::default()
        } else {
            let text = match cstr(params_json) {
                Ok(t) => t,
                Err(status) => return status,
            };
            match serde_json::from_str::<ParamsFile>(text) {
                Ok(file) => file,
                Err(e) => return fail(BfStatus::Config, &format!("params json: {e}")),
            }
        };
        let reference = ReferenceConfiguration::new(
            (*mesh).inner.clone(),
            reference_pressure_pa,
            "ffi",
        );
        match FrameEstimator::new(reference, camera, params.to_pipeline_config()) {
            Ok(estimator) => {
                *out = Box::into_raw(Box::new(BfEstimator { inner: estimator }));
                BfStatus::Ok
            }
            Err(e) => fail(BfStatus::Solver, &e.to_string()),
        }
    })
}

/// # Safety
/// `estimator` must be a handle from this library, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn bf_estimator_free(estimator: *mut BfEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// Runs the full pipeline on an observation frame file.
///
/// # Safety
/// `estimator` must be valid, `path` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bf_estimator_estimate_frame_file(
    estimator: *mut BfEstimator,
    path: *const c_char,
    out: *mut *mut BfResult,
) -> BfStatus {
    guard(|| {
        if estimator.is_null() || out.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let frame_file = match FrameFile::read(Path::new(path)) {
            Ok(f) => f,
            Err(e) => return fail(BfStatus::Io, &e.to_string()),
        };
        let estimator = &mut (*estimator).inner;
        let frame = match frame_file.into_observation(estimator.camera()) {
            Ok(f) => f,
            Err(e) => return fail(BfStatus::Observation, &e.to_string()),
        };
        match estimator.estimate_frame(&frame) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(BfResult { inner: result }));
                BfStatus::Ok
            }
            Err(e) => fail(BfStatus::Solver, &e.to_string()),
        }
    })
}

/// Runs the estimation tail on an already-computed displacement field
/// (`stacked_u` has `3 * vertex_count` entries ordered x, y, z per
/// vertex).
///
/// # Safety
/// `estimator` must be valid; `stacked_u` must point to `len` doubles;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bf_estimator_estimate_displacements(
    estimator: *mut BfEstimator,
    stacked_u: *const f64,
    len: usize,
    delta_p: f64,
    out: *mut *mut BfResult,
) -> BfStatus {
    guard(|| {
        if estimator.is_null() || out.is_null() || stacked_u.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        let estimator = &mut (*estimator).inner;
        if len != 3 * estimator.mesh().vertex_count() {
            return fail(
                BfStatus::InvalidArgument,
                &format!(
                    "displacement length {len} does not match 3 * {} vertices",
                    estimator.mesh().vertex_count()
                ),
            );
        }
        let values = std::slice::from_raw_parts(stacked_u, len).to_vec();
        let mut displacements = DisplacementField::from_stacked(values);
        displacements.zero_boundary(estimator.mesh());
        match estimator.estimate_displacements(displacements, delta_p) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(BfResult { inner: result }));
                BfStatus::Ok
            }
            Err(e) => fail(BfStatus::Solver, &e.to_string()),
        }
    })
}

/// # Safety
/// `result` must be a handle from this library, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn bf_result_free(result: *mut BfResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_result_vertex_count(result: *const BfResult) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).inner.estimation.forces.len()
}

/// Net interior contact force, N.
///
/// # Safety
/// `result` must be valid and `out` point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn bf_result_net_force(result: *const BfResult, out: *mut f64) -> BfStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        let f = (*result).inner.estimation.net_force;
        let out = std::slice::from_raw_parts_mut(out, 3);
        out.copy_from_slice(&[f.x, f.y, f.z]);
        BfStatus::Ok
    })
}

unsafe fn copy_rows(
    rows: &[nalgebra::Vector3<f64>],
    out: *mut f64,
    len: usize,
) -> BfStatus {
    if out.is_null() {
        return fail(BfStatus::InvalidArgument, "null output pointer");
    }
    if len != 3 * rows.len() {
        return fail(
            BfStatus::InvalidArgument,
            &format!("buffer holds {len} doubles, need {}", 3 * rows.len()),
        );
    }
    let out = std::slice::from_raw_parts_mut(out, len);
    for (v, row) in rows.iter().enumerate() {
        out[3 * v] = row.x;
        out[3 * v + 1] = row.y;
        out[3 * v + 2] = row.z;
    }
    BfStatus::Ok
}

/// Per-vertex external forces (x, y, z per vertex), N.
///
/// # Safety
/// `result` must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bf_result_vertex_forces(
    result: *const BfResult,
    out: *mut f64,
    len: usize,
) -> BfStatus {
    guard(|| {
        if result.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        copy_rows(&(*result).inner.estimation.forces, out, len)
    })
}

/// Per-vertex contact pressure vectors, Pa.
///
/// # Safety
/// `result` must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bf_result_contact_pressures(
    result: *const BfResult,
    out: *mut f64,
    len: usize,
) -> BfStatus {
    guard(|| {
        if result.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        copy_rows(&(*result).inner.estimation.pressures, out, len)
    })
}

/// Inward normal contact pressure per vertex, Pa.
///
/// # Safety
/// `result` must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bf_result_inward_pressure(
    result: *const BfResult,
    out: *mut f64,
    len: usize,
) -> BfStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        let values = &(*result).inner.inward_pressure;
        if len != values.len() {
            return fail(
                BfStatus::InvalidArgument,
                &format!("buffer holds {len} doubles, need {}", values.len()),
            );
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
        BfStatus::Ok
    })
}

/// Contact flags per vertex (1 = in contact).
///
/// # Safety
/// `result` must be valid; `out` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bf_result_contact_mask(
    result: *const BfResult,
    out: *mut u8,
    len: usize,
) -> BfStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return fail(BfStatus::InvalidArgument, "null handle");
        }
        let flags = &(*result).inner.mask.flags;
        if len != flags.len() {
            return fail(
                BfStatus::InvalidArgument,
                &format!("buffer holds {len} bytes, need {}", flags.len()),
            );
        }
        let out = std::slice::from_raw_parts_mut(out, len);
        for (o, &f) in out.iter_mut().zip(flags) {
            *o = u8::from(f);
        }
        BfStatus::Ok
    })
}

/// Contact threshold used for the mask, Pa.
///
/// # Safety
/// `result` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_result_contact_threshold(result: *const BfResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    (*result).inner.mask.threshold
}

/// Objective value at the returned correction.
///
/// # Safety
/// `result` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_result_objective(result: *const BfResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    (*result).inner.estimation.objective
}

/// 1 when the solver met its tolerances, 0 otherwise.
///
/// # Safety
/// `result` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_result_converged(result: *const BfResult) -> c_int {
    if result.is_null() {
        return 0;
    }
    c_int::from((*result).inner.estimation.diagnostics.converged)
}

/// Solver iteration count.
///
/// # Safety
/// `result` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bf_result_iterations(result: *const BfResult) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).inner.estimation.diagnostics.iterations
}
