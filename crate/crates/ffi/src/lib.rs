//! C ABI for the `cftransport` library.
//!
//! Objects are opaque handles created by `cft_*_new`/`cft_*_load`/solver
//! functions and released with the matching `cft_*_free`. Every fallible
//! function returns a [`CftStatus`]; on failure the message is kept per
//! thread and can be read with [`cft_last_error_message`]. Arrays are
//! row-major `double` buffers.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cftransport::cfmodel::{build_ot_model, load_model, save_model, CounterfactualModel, GroupedData};
use cftransport::scm::{LinearAdditiveScm, NoiseSpec};
use cftransport::transport::{
    barycentric_map, quantile_coupling_1d, solve_kantorovich, solve_quadratic, Coupling, DiscreteDistribution,
};
use cftransport::{Error, Group};
use ndarray::{Array1, Array2};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CftStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    BufferTooSmall = 4,
    Numerical = 5,
    Io = 6,
    Validation = 7,
    Panic = 8,
}

/// Weighted point cloud.
pub struct CftDistribution {
    inner: DiscreteDistribution,
}

/// Sparse transport plan between two distributions.
pub struct CftCoupling {
    inner: Coupling,
}

/// Counterfactual model over several groups.
pub struct CftModel {
    inner: CounterfactualModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> CftStatus {
    match err {
        Error::DimensionMismatch(_) => CftStatus::DimensionMismatch,
        Error::SingularMatrix(_) | Error::NonFiniteLoss(_) | Error::EmptyRow(_) => CftStatus::Numerical,
        Error::Io { .. } => CftStatus::Io,
        Error::Validation(_) | Error::ParityViolated { .. } => CftStatus::Validation,
        _ => CftStatus::InvalidArgument,
    }
}

struct Fail(CftStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CftStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CftStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CftStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CftStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CftStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn matrix(values: &[f64], rows: usize, cols: usize) -> Result<Array2<f64>, Fail> {
    Array2::from_shape_vec((rows, cols), values.to_vec())
        .map_err(|e| Fail(CftStatus::DimensionMismatch, e.to_string()))
}

fn check_len(needed: usize, given: usize) -> Result<(), Fail> {
    if given < needed {
        Err(Fail(
            CftStatus::BufferTooSmall,
            format!("buffer holds {given} values, {needed} needed"),
        ))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns its full length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cft_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `n` points in `R^d` with the given weights, or uniform weights when
/// `weights` is null.
///
/// # Safety
/// `points` must hold `n*d` values, `weights` null or `n` values, and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cft_distribution_new(
    points: *const f64,
    n: usize,
    d: usize,
    weights: *const f64,
    out: *mut *mut CftDistribution,
) -> CftStatus {
    guard(|| {
        let x = matrix(slice(points, n * d, "points")?, n, d)?;
        let inner = if weights.is_null() {
            DiscreteDistribution::uniform(x)?
        } else {
            DiscreteDistribution::new(x, Array1::from(slice(weights, n, "weights")?.to_vec()))?
        };
        put(out, CftDistribution { inner })
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cft_distribution_free(p: *mut CftDistribution) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cft_distribution_len(p: *const CftDistribution) -> usize {
    p.as_ref().map_or(0, |p| p.inner.len())
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cft_distribution_dim(p: *const CftDistribution) -> usize {
    p.as_ref().map_or(0, |p| p.inner.dim())
}

/// Optimal coupling under the squared Euclidean cost.
///
/// # Safety
/// `p` and `q` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cft_solve_quadratic(
    p: *const CftDistribution,
    q: *const CftDistribution,
    out: *mut *mut CftCoupling,
) -> CftStatus {
    guard(|| {
        let (p, q) = (handle(p, "p")?, handle(q, "q")?);
        let inner = solve_quadratic(&p.inner, &q.inner)?;
        put(out, CftCoupling { inner })
    })
}

/// Optimal coupling for an arbitrary `len(p) × len(q)` cost matrix.
///
/// # Safety
/// `cost` must hold `len(p)*len(q)` values; see [`cft_solve_quadratic`].
#[no_mangle]
pub unsafe extern "C" fn cft_solve_kantorovich(
    p: *const CftDistribution,
    q: *const CftDistribution,
    cost: *const f64,
    out: *mut *mut CftCoupling,
) -> CftStatus {
    guard(|| {
        let (p, q) = (handle(p, "p")?, handle(q, "q")?);
        let (n, m) = (p.inner.len(), q.inner.len());
        let c = matrix(slice(cost, n * m, "cost")?, n, m)?;
        let inner = solve_kantorovich(&p.inner, &q.inner, &c)?;
        put(out, CftCoupling { inner })
    })
}

/// Monotone coupling of two one-dimensional distributions.
///
/// # Safety
/// See [`cft_solve_quadratic`].
#[no_mangle]
pub unsafe extern "C" fn cft_quantile_1d(
    p: *const CftDistribution,
    q: *const CftDistribution,
    out: *mut *mut CftCoupling,
) -> CftStatus {
    guard(|| {
        let (p, q) = (handle(p, "p")?, handle(q, "q")?);
        let inner = quantile_coupling_1d(&p.inner, &q.inner)?;
        put(out, CftCoupling { inner })
    })
}

/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cft_coupling_free(c: *mut CftCoupling) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of stored entries, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cft_coupling_nnz(c: *const CftCoupling) -> usize {
    c.as_ref().map_or(0, |c| c.inner.nnz())
}

/// # Safety
/// `c` must be a live handle; `n_src` and `n_tgt` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cft_coupling_shape(c: *const CftCoupling, n_src: *mut usize, n_tgt: *mut usize) -> CftStatus {
    guard(|| {
        let c = handle(c, "coupling")?;
        if n_src.is_null() || n_tgt.is_null() {
            return Err(null("output pointer"));
        }
        *n_src = c.inner.n_src();
        *n_tgt = c.inner.n_tgt();
        Ok(())
    })
}

/// Copies the entries, sorted by source then target atom, into three
/// arrays of capacity `cap ≥ nnz`.
///
/// # Safety
/// Each output must be valid for `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn cft_coupling_entries(
    c: *const CftCoupling,
    src: *mut usize,
    tgt: *mut usize,
    mass: *mut f64,
    cap: usize,
) -> CftStatus {
    guard(|| {
        let c = handle(c, "coupling")?;
        let nnz = c.inner.nnz();
        check_len(nnz, cap)?;
        let (src, tgt, mass) = (slice_mut(src, nnz, "src")?, slice_mut(tgt, nnz, "tgt")?, slice_mut(mass, nnz, "mass")?);
        for (k, e) in c.inner.entries().iter().enumerate() {
            src[k] = e.i;
            tgt[k] = e.j;
            mass[k] = e.mass;
        }
        Ok(())
    })
}

/// Writes the dense `n_src × n_tgt` plan into `out`.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cft_coupling_dense(c: *const CftCoupling, out: *mut f64, len: usize) -> CftStatus {
    guard(|| {
        let c = handle(c, "coupling")?;
        let dense = c.inner.to_dense();
        check_len(dense.len(), len)?;
        let out = slice_mut(out, dense.len(), "out")?;
        for (o, v) in out.iter_mut().zip(dense.iter()) {
            *o = *v;
        }
        Ok(())
    })
}

/// `Σ π(i,j) C(i,j)` for a row-major cost matrix of the coupling's shape.
///
/// # Safety
/// `cost` must hold `n_src*n_tgt` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cft_coupling_cost(c: *const CftCoupling, cost: *const f64, out: *mut f64) -> CftStatus {
    guard(|| {
        let c = handle(c, "coupling")?;
        let (n, m) = (c.inner.n_src(), c.inner.n_tgt());
        let cm = matrix(slice(cost, n * m, "cost")?, n, m)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = c.inner.cost(&cm)?;
        Ok(())
    })
}

/// Barycentric images of the atoms of `p` under the coupling, written as a
/// `len(p) × dim` matrix.
///
/// # Safety
/// Handles must be live; `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cft_barycentric_images(
    c: *const CftCoupling,
    p: *const CftDistribution,
    q: *const CftDistribution,
    out: *mut f64,
    len: usize,
) -> CftStatus {
    guard(|| {
        let (c, p, q) = (handle(c, "coupling")?, handle(p, "p")?, handle(q, "q")?);
        let map = barycentric_map(&c.inner, &p.inner, &q.inner)?;
        let images = map.images();
        check_len(images.len(), len)?;
        let out = slice_mut(out, images.len(), "out")?;
        for (o, v) in out.iter_mut().zip(images.iter()) {
            *o = *v;
        }
        Ok(())
    })
}

/// Optimal transport counterfactual model of `n` rows in `R^d` labelled by
/// `groups`. Each group is the uniform distribution over its rows, in row
/// order.
///
/// # Safety
/// `points` must hold `n*d` values, `groups` `n` values, `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn cft_model_build_ot(
    points: *const f64,
    n: usize,
    d: usize,
    groups: *const i64,
    out: *mut *mut CftModel,
) -> CftStatus {
    guard(|| {
        let x = slice(points, n * d, "points")?;
        let labels = slice(groups, n, "groups")?;
        let mut rows: BTreeMap<Group, Vec<f64>> = BTreeMap::new();
        for (i, &g) in labels.iter().enumerate() {
            rows.entry(Group(g)).or_default().extend_from_slice(&x[i * d..(i + 1) * d]);
        }
        let mut dists = BTreeMap::new();
        let mut shares = BTreeMap::new();
        for (g, flat) in rows {
            let k = flat.len() / d.max(1);
            shares.insert(g, k as f64 / n as f64);
            dists.insert(g, DiscreteDistribution::uniform(matrix(&flat, k, d)?)?);
        }
        let inner = build_ot_model(&GroupedData::new(dists, shares)?)?;
        put(out, CftModel { inner })
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cft_model_free(m: *mut CftModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of groups, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cft_model_num_groups(m: *const CftModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.groups().len())
}

/// Runs the model checks. `passed` receives 1 or 0 and `max_residual` the
/// largest marginal residual.
///
/// # Safety
/// `m` must be live; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cft_model_validate(m: *const CftModel, passed: *mut c_int, max_residual: *mut f64) -> CftStatus {
    guard(|| {
        let m = handle(m, "model")?;
        if passed.is_null() || max_residual.is_null() {
            return Err(null("output pointer"));
        }
        let report = m.inner.validate();
        *passed = c_int::from(report.passed);
        *max_residual = report.max_marginal_residual;
        Ok(())
    })
}

/// Copy of the coupling from group `s` to group `s_prime`.
///
/// # Safety
/// `m` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cft_model_coupling(m: *const CftModel, s: i64, s_prime: i64, out: *mut *mut CftCoupling) -> CftStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let inner = m.inner.coupling(Group(s), Group(s_prime))?.clone();
        put(out, CftCoupling { inner })
    })
}

/// Writes the model directory `path`.
///
/// # Safety
/// `m` must be live and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn cft_model_save(m: *const CftModel, path: *const c_char) -> CftStatus {
    guard(|| {
        let m = handle(m, "model")?;
        save_model(&m.inner, &path_arg(path)?)?;
        Ok(())
    })
}

/// Reads a model directory, verifying its checksums.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cft_model_load(path: *const c_char, out: *mut *mut CftModel) -> CftStatus {
    guard(|| {
        let inner = load_model(&path_arg(path)?)?;
        put(out, CftModel { inner })
    })
}

/// Structural counterfactual map of the linear additive model
/// `x = M x + w s + b + u` from group `s` to `s_prime`, applied to `n` rows
/// of `x`. The result does not depend on `b` or the noise law.
///
/// # Safety
/// `m` must hold `d*d` values, `w` `d` values, `x` and `out` `n*d` values.
#[no_mangle]
pub unsafe extern "C" fn cft_linear_counterfactual(
    m: *const f64,
    w: *const f64,
    d: usize,
    s: i64,
    s_prime: i64,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> CftStatus {
    guard(|| {
        let scm = LinearAdditiveScm::new(
            matrix(slice(m, d * d, "m")?, d, d)?,
            Array1::from(slice(w, d, "w")?.to_vec()),
            Array1::zeros(d),
            vec![NoiseSpec::Gaussian { mean: 0.0, sd: 1.0 }; d],
            NoiseSpec::Bernoulli { p: 0.5 },
        )?;
        let rows = matrix(slice(x, n * d, "x")?, n, d)?;
        let mapped = scm.structural_operator(Group(s), Group(s_prime)).apply_rows(&rows)?;
        let out = slice_mut(out, n * d, "out")?;
        for (o, v) in out.iter_mut().zip(mapped.iter()) {
            *o = *v;
        }
        Ok(())
    })
}
