//! C ABI for the solver laboratory: opaque handles, integer status codes
//! and a thread-local last-error message.
//!
//! Ownership rules: every `*_create`/`*_load`/`*_solve` hands ownership of
//! the returned handle to the caller, who must release it with the matching
//! `*_free`. Handles are not thread-safe; share nothing across threads.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use robinopt::geometry::{build_disk_mesh, BoundaryFunction, DiskMesh};
use robinopt::optimize::{self, SolutionSet, SolveOptions};
use robinopt::problem::{self, Instance, ParamVector, SampleSpec};

/// Success.
pub const ROBINOPT_OK: i32 = 0;
/// Invalid argument (null pointer, bad mesh size, unknown name, ...).
pub const ROBINOPT_ERR_INVALID: i32 = 1;
/// Solver failure (state solve or optimizer did not converge).
pub const ROBINOPT_ERR_SOLVER: i32 = 2;
/// Instance file could not be parsed or validated.
pub const ROBINOPT_ERR_PARSE: i32 = 3;
/// Assumption check failed on the instance.
pub const ROBINOPT_ERR_ASSUMPTIONS: i32 = 4;

/// Opaque problem-instance handle.
pub struct RobinoptInstance {
    _opaque: [u8; 0],
}

/// Opaque disk-mesh handle.
pub struct RobinoptMesh {
    _opaque: [u8; 0],
}

/// Opaque solution-set handle.
pub struct RobinoptSolution {
    _opaque: [u8; 0],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn invalid(message: &str) -> i32 {
    set_error(message);
    ROBINOPT_ERR_INVALID
}

unsafe fn instance_ref<'a>(handle: *const RobinoptInstance) -> Option<&'a Instance> {
    (handle as *const Instance).as_ref()
}

unsafe fn mesh_ref<'a>(handle: *const RobinoptMesh) -> Option<&'a DiskMesh> {
    (handle as *const DiskMesh).as_ref()
}

unsafe fn solution_ref<'a>(handle: *const RobinoptSolution) -> Option<&'a SolutionSet> {
    (handle as *const SolutionSet).as_ref()
}

/// Copy the message of the most recent error on this thread into `buffer`
/// (always NUL-terminated, truncated to `length` bytes). Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buffer` must point to `length` writable bytes, or be null with
/// `length == 0` to query the message length only.
#[no_mangle]
pub unsafe extern "C" fn robinopt_last_error_message(buffer: *mut c_char, length: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && length > 0 {
            let n = bytes.len().min(length - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buffer, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Create an instance from a builtin name (`quartic`, `unbounded`,
/// `quadratic`) or a JSON file path.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn robinopt_instance_create(
    spec: *const c_char,
    out: *mut *mut RobinoptInstance,
) -> i32 {
    if spec.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    let spec = match CStr::from_ptr(spec).to_str() {
        Ok(s) => s,
        Err(_) => return invalid("instance spec is not valid UTF-8"),
    };
    match problem::resolve_instance(spec) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(instance)) as *mut RobinoptInstance;
            ROBINOPT_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            ROBINOPT_ERR_PARSE
        }
    }
}

/// Release an instance handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `robinopt_instance_create` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn robinopt_instance_free(handle: *mut RobinoptInstance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut Instance));
    }
}

/// Check the standing assumptions on an instance. Returns `ROBINOPT_OK`
/// when all pass and `ROBINOPT_ERR_ASSUMPTIONS` (with the first witness as
/// the error message) otherwise.
///
/// # Safety
/// `handle` must be a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn robinopt_check_assumptions(handle: *const RobinoptInstance) -> i32 {
    let Some(instance) = instance_ref(handle) else {
        return invalid("null instance handle");
    };
    let report = problem::check_assumptions(instance, &SampleSpec::default());
    if report.all_pass() {
        ROBINOPT_OK
    } else {
        let witness = report
            .witnesses
            .first()
            .map(String::as_str)
            .unwrap_or("assumption check failed");
        set_error(witness);
        ROBINOPT_ERR_ASSUMPTIONS
    }
}

/// Build the structured disk mesh with the given ring and sector counts.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn robinopt_mesh_create(
    rings: usize,
    sectors: usize,
    out: *mut *mut RobinoptMesh,
) -> i32 {
    if out.is_null() {
        return invalid("null output pointer");
    }
    match build_disk_mesh(rings, sectors) {
        Ok(mesh) => {
            *out = Box::into_raw(Box::new(mesh)) as *mut RobinoptMesh;
            ROBINOPT_OK
        }
        Err(e) => invalid(&e.to_string()),
    }
}

/// Release a mesh handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `robinopt_mesh_create` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn robinopt_mesh_free(handle: *mut RobinoptMesh) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut DiskMesh));
    }
}

/// Number of boundary nodes (the control dimension) of a mesh.
///
/// # Safety
/// `handle` must be a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn robinopt_mesh_boundary_count(handle: *const RobinoptMesh) -> usize {
    mesh_ref(handle).map_or(0, |m| m.n_boundary())
}

/// Solve the control problem at constant parameter overrides with the
/// default deterministic multistart, producing a solution-set handle.
///
/// # Safety
/// `instance` and `mesh` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solve(
    instance: *const RobinoptInstance,
    mesh: *const RobinoptMesh,
    mu1: f64,
    mu2: f64,
    lambda1: f64,
    lambda2: f64,
    out: *mut *mut RobinoptSolution,
) -> i32 {
    if out.is_null() {
        return invalid("null output pointer");
    }
    let Some(instance) = instance_ref(instance) else {
        return invalid("null instance handle");
    };
    let Some(mesh) = mesh_ref(mesh) else {
        return invalid("null mesh handle");
    };
    let mut params = ParamVector::zeros(mesh);
    params.mu1 = robinopt::geometry::Field::constant(mesh, mu1);
    params.mu2 = BoundaryFunction::constant(mesh, mu2);
    params.lambda1 = BoundaryFunction::constant(mesh, lambda1);
    params.lambda2 = BoundaryFunction::constant(mesh, lambda2);
    match optimize::approximate_solution_set(mesh, instance, &params, &SolveOptions::default()) {
        Ok(set) => {
            *out = Box::into_raw(Box::new(set)) as *mut RobinoptSolution;
            ROBINOPT_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            ROBINOPT_ERR_SOLVER
        }
    }
}

/// Release a solution handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `robinopt_solve` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solution_free(handle: *mut RobinoptSolution) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut SolutionSet));
    }
}

/// Optimal value of a solution set.
///
/// # Safety
/// `handle` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solution_value(handle: *const RobinoptSolution) -> f64 {
    solution_ref(handle).map_or(f64::NAN, |s| s.value)
}

/// Number of deduplicated candidate minimizers.
///
/// # Safety
/// `handle` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solution_cluster_count(handle: *const RobinoptSolution) -> usize {
    solution_ref(handle).map_or(0, |s| s.points.len())
}

/// Cost of the given cluster.
///
/// # Safety
/// `handle` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solution_cost(
    handle: *const RobinoptSolution,
    cluster: usize,
) -> f64 {
    solution_ref(handle)
        .and_then(|s| s.points.get(cluster))
        .map_or(f64::NAN, |p| p.cost)
}

/// Largest optimality-system residual of the given cluster.
///
/// # Safety
/// `handle` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solution_residual(
    handle: *const RobinoptSolution,
    cluster: usize,
) -> f64 {
    solution_ref(handle)
        .and_then(|s| s.points.get(cluster))
        .map_or(f64::NAN, |p| p.residuals.max())
}

/// Copy the boundary control of the given cluster into `buffer`. The
/// required length is `robinopt_mesh_boundary_count`. Returns the number of
/// values written.
///
/// # Safety
/// `handle` must be a live solution handle and `buffer` must point to
/// `length` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn robinopt_solution_control(
    handle: *const RobinoptSolution,
    cluster: usize,
    buffer: *mut f64,
    length: usize,
) -> usize {
    let Some(point) = solution_ref(handle).and_then(|s| s.points.get(cluster)) else {
        return 0;
    };
    if buffer.is_null() {
        return 0;
    }
    let n = point.u.values.len().min(length);
    ptr::copy_nonoverlapping(point.u.values.as_ptr(), buffer, n);
    n
}
