//! C ABI over `rcurrent`.
//!
//! Objects are opaque heap handles released with their `_free` function.
//! Every fallible call returns an [`RcStatus`]; on failure the message is
//! available from [`rc_last_error_message`] on the same thread until the
//! next failing call. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rcurrent::graph::{build_lattice, load_graph, Boundary, CouplingGraph, LatticeSpec};
use rcurrent::harness::{self, ExperimentConfig, ExperimentKind};
use rcurrent::ising_exact::{ExactGibbs, ThermoParams};
use rcurrent::pfaffian::{crossing_sign, pfaffian, AntisymmetricArray, Pairing};
use rcurrent::worm_mc::{s2_name, wolff_run, Observable, RunConfig};
use rcurrent::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    /// A verification experiment ran but some check failed.
    VerificationFailed = 5,
    ReplayMismatch = 6,
    Panic = 7,
    /// An experiment stopped before finishing; partial results were kept.
    RunFailed = 8,
}

/// Coupling graph handle.
pub struct RcGraph(CouplingGraph);

/// Exact Gibbs measure handle.
pub struct RcGibbs(ExactGibbs);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RcStatus {
    match e {
        Error::Config(_) => RcStatus::Config,
        Error::ReplayMismatch(_) => RcStatus::ReplayMismatch,
        Error::Io(_) | Error::GraphFile { .. } | Error::Csv(_) | Error::Json(_) => RcStatus::Io,
        _ => RcStatus::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (RcStatus, String)>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            RcStatus::Panic
        }
    }
}

fn lib<T>(r: rcurrent::Result<T>) -> Result<T, (RcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RcStatus, String) {
    (RcStatus::NullPointer, format!("{what} is null"))
}

fn bad(msg: impl Into<String>) -> (RcStatus, String) {
    (RcStatus::InvalidArgument, msg.into())
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| bad(format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (RcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (RcStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Clears the last error message of this thread.
#[no_mangle]
pub extern "C" fn rc_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Hypercubic lattice `{0..l-1}^d` with uniform coupling `j`; `periodic`
/// selects torus or free boundary.
///
/// # Safety
/// `out_graph` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_lattice(d: usize, l: usize, j: f64, periodic: bool, out_graph: *mut *mut RcGraph) -> RcStatus {
    guard(|| {
        let slot = out(out_graph, "out_graph")?;
        let bc = if periodic { Boundary::Periodic } else { Boundary::Free };
        let g = lib(build_lattice(LatticeSpec::new(d, l, j, bc)))?;
        *slot = Box::into_raw(Box::new(RcGraph(g)));
        Ok(())
    })
}

/// Graph on `n` vertices from `m` edges `(u[i], v[i], j[i])`.
///
/// # Safety
/// `u`, `v`, `j` must point to `m` readable elements each.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_from_edges(
    n: usize,
    m: usize,
    u: *const usize,
    v: *const usize,
    j: *const f64,
    out_graph: *mut *mut RcGraph,
) -> RcStatus {
    guard(|| {
        let slot = out(out_graph, "out_graph")?;
        let (u, v, j) = (slice(u, m, "u")?, slice(v, m, "v")?, slice(j, m, "j")?);
        let triples: Vec<(usize, usize, f64)> = (0..m).map(|i| (u[i], v[i], j[i])).collect();
        let g = lib(CouplingGraph::from_triples(n, &triples))?;
        *slot = Box::into_raw(Box::new(RcGraph(g)));
        Ok(())
    })
}

/// Reads a JSON graph file.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_load(path: *const c_char, out_graph: *mut *mut RcGraph) -> RcStatus {
    guard(|| {
        let slot = out(out_graph, "out_graph")?;
        let g = lib(load_graph(cstr(path, "path")?))?;
        *slot = Box::into_raw(Box::new(RcGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a handle from an `rc_graph_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_free(graph: *mut RcGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_vertices(graph: *const RcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_vertices())
}

/// Edge count, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_edges(graph: *const RcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_edges())
}

/// Exact zero-field Gibbs measure at inverse temperature `beta`.
///
/// # Safety
/// `graph` must be a live handle and `out_gibbs` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_gibbs_new(graph: *const RcGraph, beta: f64, out_gibbs: *mut *mut RcGibbs) -> RcStatus {
    guard(|| {
        let slot = out(out_gibbs, "out_gibbs")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        let gibbs = lib(ExactGibbs::new(&g.0, ThermoParams::new(beta)))?;
        *slot = Box::into_raw(Box::new(RcGibbs(gibbs)));
        Ok(())
    })
}

/// # Safety
/// `gibbs` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_gibbs_free(gibbs: *mut RcGibbs) {
    if !gibbs.is_null() {
        drop(Box::from_raw(gibbs));
    }
}

fn check_points(n: usize, pts: &[usize]) -> Result<(), (RcStatus, String)> {
    match pts.iter().find(|&&p| p >= n) {
        Some(p) => Err(bad(format!("point {p} is not one of the {n} vertices"))),
        None => Ok(()),
    }
}

/// Correlation `<prod_i sigma_{points[i]}>`.
///
/// # Safety
/// `points` must hold `k` elements; `gibbs` live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_gibbs_correlation(
    gibbs: *const RcGibbs,
    points: *const usize,
    k: usize,
    out_value: *mut f64,
) -> RcStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let g = gibbs.as_ref().ok_or_else(|| null("gibbs"))?;
        let pts = slice(points, k, "points")?;
        check_points(g.0.n_vertices(), pts)?;
        *slot = g.0.correlation(pts);
        Ok(())
    })
}

/// Fourth Ursell function `U4(x1, x2, x3, x4)`.
///
/// # Safety
/// `points` must hold 4 elements; `gibbs` live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_gibbs_ursell4(gibbs: *const RcGibbs, points: *const usize, out_value: *mut f64) -> RcStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let g = gibbs.as_ref().ok_or_else(|| null("gibbs"))?;
        let pts = slice(points, 4, "points")?;
        check_points(g.0.n_vertices(), pts)?;
        *slot = g.0.ursell4([pts[0], pts[1], pts[2], pts[3]]);
        Ok(())
    })
}

/// Pfaffian of the `dim x dim` antisymmetric matrix stored row-major in
/// `matrix`; only the strict upper triangle is read.
///
/// # Safety
/// `matrix` must hold `dim * dim` elements.
#[no_mangle]
pub unsafe extern "C" fn rc_pfaffian(matrix: *const f64, dim: usize, out_value: *mut f64) -> RcStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let m = slice(matrix, dim.checked_mul(dim).ok_or_else(|| bad("dim overflows"))?, "matrix")?;
        let a = AntisymmetricArray::from_fn(dim, |i, j| m[i * dim + j]);
        *slot = lib(pfaffian(&a))?;
        Ok(())
    })
}

/// Sign `(-1)^{crossings}` of a pairing of `size` labels placed at cyclic
/// `positions`; `partner[i]` is the label paired with `i`.
///
/// # Safety
/// `positions` and `partner` must each hold `size` elements.
#[no_mangle]
pub unsafe extern "C" fn rc_crossing_sign(
    positions: *const i64,
    partner: *const usize,
    size: usize,
    out_sign: *mut i32,
) -> RcStatus {
    guard(|| {
        let slot = out(out_sign, "out_sign")?;
        let pos = slice(positions, size, "positions")?;
        let pairing = lib(Pairing::new(slice(partner, size, "partner")?.to_vec()))?;
        *slot = i32::from(lib(crossing_sign(pos, &pairing))?);
        Ok(())
    })
}

/// Wolff estimate of `<sigma_x sigma_y>` with its binned standard error.
///
/// # Safety
/// `graph` live; `out_mean`, `out_err` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_wolff_s2(
    graph: *const RcGraph,
    beta: f64,
    sweeps: u64,
    seed: u64,
    x: usize,
    y: usize,
    out_mean: *mut f64,
    out_err: *mut f64,
) -> RcStatus {
    guard(|| {
        let mean = out(out_mean, "out_mean")?;
        let err = out(out_err, "out_err")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        let cfg = RunConfig::new(&g.0, beta, sweeps, seed).observe(Observable::S2Pairs { pairs: vec![(x, y)] });
        let run = lib(wolff_run(&cfg))?;
        let e = lib(run.get(&s2_name(x, y)))?;
        *mean = e.mean;
        *err = e.stderr;
        Ok(())
    })
}

/// Runs experiment `kind` from a TOML config string and writes its result
/// directory under `out_root`. Returns `VerificationFailed` when a
/// verification kind ran but some check failed.
///
/// # Safety
/// `kind`, `config_toml` and `out_root` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rc_run_experiment(kind: *const c_char, config_toml: *const c_char, out_root: *const c_char) -> RcStatus {
    guard(|| {
        let name = cstr(kind, "kind")?;
        let k = ExperimentKind::parse(name).ok_or_else(|| (RcStatus::Config, format!("unknown experiment kind {name:?}")))?;
        let cfg = lib(ExperimentConfig::from_toml(cstr(config_toml, "config_toml")?, Some(k)))?;
        let report = lib(harness::run(&cfg, Path::new(cstr(out_root, "out_root")?)))?;
        if let Some(f) = &report.manifest.failure {
            return Err((RcStatus::RunFailed, format!("run stopped early: {f}")));
        }
        if !report.passed() {
            return Err((RcStatus::VerificationFailed, format!("verification failed; see {}", report.dir.display())));
        }
        Ok(())
    })
}

/// Replays a result directory; `ReplayMismatch` names the first divergent record.
///
/// # Safety
/// `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rc_replay(dir: *const c_char) -> RcStatus {
    guard(|| {
        lib(harness::replay(Path::new(cstr(dir, "dir")?)))?;
        Ok(())
    })
}
