//! C interface to `ggmsl`. Objects are opaque handles created by `*_new`
//! (or returned through out-pointers) and released with the matching
//! `*_free`. Every fallible call returns a [`GgmslStatus`]; on failure the
//! message is available from [`ggmsl_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ggmsl::gaussian::{DataMatrix, GWishartParams};
use ggmsl::graph::Graph;
use ggmsl::inference::{edge_inclusion, EdgeInclusionMatrix};
use ggmsl::metrics::{auc, mamse, MamseConfig};
use ggmsl::priors::{GraphPrior, SpikeSlabParams};
use ggmsl::samplers::{run_bd, run_plbd, run_plrj, run_rj, run_ss, BdOptions, MplHyper, RjOptions, SamplerConfig};
use ggmsl::simbench::{gen_instance, GraphType};
use ggmsl::Error;

/// Version of this interface; bumped on incompatible changes.
pub const GGMSL_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgmslStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    Numerical = 5,
    UndefinedMetric = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgmslSampler {
    SsO = 0,
    Rj = 1,
    Bd = 2,
    Plrj = 3,
    Plbd = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgmslGraphType {
    Random = 0,
    Cluster = 1,
    ScaleFree = 2,
}

/// Chain settings. `max_seconds <= 0` means no wall-clock cap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GgmslRunOptions {
    pub iterations: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Bernoulli edge prior; ignored by `GGMSL_SAMPLER_SS_O`.
    pub prior_theta: f64,
    pub max_seconds: f64,
}

/// Opaque `n × p` data matrix.
pub struct GgmslData(DataMatrix);

/// Opaque undirected graph.
pub struct GgmslGraph(Graph);

/// Opaque edge inclusion matrix.
pub struct GgmslInclusion(EdgeInclusionMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GgmslStatus {
    match e {
        Error::DimensionMismatch { .. } => GgmslStatus::DimensionMismatch,
        Error::NotPositiveDefinite(_) => GgmslStatus::NotPositiveDefinite,
        Error::Numerical(_) => GgmslStatus::Numerical,
        Error::UndefinedMetric(_) => GgmslStatus::UndefinedMetric,
        _ => GgmslStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (GgmslStatus, String)>>(f: F) -> GgmslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GgmslStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GgmslStatus::Internal
        }
    }
}

fn lib<T>(r: ggmsl::Result<T>) -> Result<T, (GgmslStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GgmslStatus, String) {
    (GgmslStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: &str) -> (GgmslStatus, String) {
    (GgmslStatus::InvalidArgument, msg.to_string())
}

unsafe fn as_ref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, (GgmslStatus, String)> {
    // SAFETY: the caller passes either null or a live handle from this library.
    unsafe { ptr.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (GgmslStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the interface contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

#[no_mangle]
pub extern "C" fn ggmsl_abi_version() -> u32 {
    GGMSL_ABI_VERSION
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ggmsl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Copies `n * p` row-major values into a new data handle.
///
/// # Safety
/// `values` must point to `n * p` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_data_new(values: *const f64, n: usize, p: usize, out: *mut *mut GgmslData) -> GgmslStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let len = n.checked_mul(p).ok_or_else(|| invalid("n * p overflows"))?;
        // SAFETY: the caller guarantees `n * p` readable values.
        let slice = unsafe { std::slice::from_raw_parts(values, len) };
        let y = lib(DataMatrix::new(nalgebra::DMatrix::from_row_slice(n, p, slice)))?;
        unsafe { write_out(out, Box::into_raw(Box::new(GgmslData(y))), "out") }
    })
}

/// # Safety
/// `data` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_data_free(data: *mut GgmslData) {
    if !data.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(data) });
    }
}

/// # Safety
/// `data` must be a live handle; `n` and `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_data_shape(data: *const GgmslData, n: *mut usize, p: *mut usize) -> GgmslStatus {
    guard(|| {
        let d = unsafe { as_ref(data, "data") }?;
        unsafe { write_out(n, d.0.n(), "n") }?;
        unsafe { write_out(p, d.0.p(), "p") }
    })
}

/// Empty graph on `p` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_graph_new(p: usize, out: *mut *mut GgmslGraph) -> GgmslStatus {
    guard(|| unsafe { write_out(out, Box::into_raw(Box::new(GgmslGraph(Graph::new(p)))), "out") })
}

/// # Safety
/// `graph` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_graph_free(graph: *mut GgmslGraph) {
    if !graph.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Adds the 0-based edge `{a, b}`; adding a present edge is a no-op.
///
/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_graph_add_edge(graph: *mut GgmslGraph, a: usize, b: usize) -> GgmslStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let g = unsafe { graph.as_mut() }.ok_or_else(|| null("graph"))?;
        let e = lib(g.0.edge(a, b))?;
        g.0.insert(e);
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_graph_has_edge(graph: *const GgmslGraph, a: usize, b: usize, out: *mut bool) -> GgmslStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph") }?;
        let e = lib(g.0.edge(a, b))?;
        unsafe { write_out(out, g.0.contains(e), "out") }
    })
}

/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_graph_edge_count(graph: *const GgmslGraph, out: *mut usize) -> GgmslStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph") }?;
        unsafe { write_out(out, g.0.edge_count(), "out") }
    })
}

/// Synthetic benchmark instance: true graph and `n` observations.
///
/// # Safety
/// `graph_out` and `data_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_generate_instance(
    graph_type: GgmslGraphType,
    p: usize,
    n: usize,
    master_seed: u64,
    replication: usize,
    graph_out: *mut *mut GgmslGraph,
    data_out: *mut *mut GgmslData,
) -> GgmslStatus {
    guard(|| {
        if graph_out.is_null() || data_out.is_null() {
            return Err(null("output pointer"));
        }
        let t = match graph_type {
            GgmslGraphType::Random => GraphType::Random,
            GgmslGraphType::Cluster => GraphType::Cluster,
            GgmslGraphType::ScaleFree => GraphType::ScaleFree,
        };
        let inst = lib(gen_instance(t, p, n, 0.2, master_seed, replication))?;
        unsafe { write_out(graph_out, Box::into_raw(Box::new(GgmslGraph(inst.g_true))), "graph_out") }?;
        unsafe { write_out(data_out, Box::into_raw(Box::new(GgmslData(inst.data))), "data_out") }
    })
}

/// Runs one chain and returns its edge inclusion matrix.
///
/// # Safety
/// `data` and `options` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_run_sampler(
    data: *const GgmslData,
    sampler: GgmslSampler,
    options: *const GgmslRunOptions,
    out: *mut *mut GgmslInclusion,
) -> GgmslStatus {
    guard(|| {
        let y = &unsafe { as_ref(data, "data") }?.0;
        let o = unsafe { as_ref(options, "options") }?;
        let config = SamplerConfig {
            burn_in: o.burn_in,
            max_seconds: (o.max_seconds > 0.0).then_some(o.max_seconds),
            record_states: false,
            ..SamplerConfig::new(o.iterations, o.seed)
        };
        let prior = lib(GraphPrior::bernoulli(o.prior_theta))?;
        let gw = lib(GWishartParams::identity(y.p(), 3.0))?;
        let trace = lib(match sampler {
            GgmslSampler::SsO => run_ss(y, &SpikeSlabParams::default(), &config),
            GgmslSampler::Rj => run_rj(y, &gw, &prior, &config, &RjOptions::default()),
            GgmslSampler::Bd => run_bd(y, &gw, &prior, &config, &BdOptions::default()),
            GgmslSampler::Plrj => run_plrj(y, &prior, MplHyper::default(), &config),
            GgmslSampler::Plbd => run_plbd(y, &prior, MplHyper::default(), &config),
        })?;
        let p = lib(edge_inclusion(&trace, o.burn_in))?;
        unsafe { write_out(out, Box::into_raw(Box::new(GgmslInclusion(p))), "out") }
    })
}

/// # Safety
/// `inclusion` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_inclusion_free(inclusion: *mut GgmslInclusion) {
    if !inclusion.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(inclusion) });
    }
}

/// Estimated inclusion probability of the 0-based pair `{i, j}`.
///
/// # Safety
/// `inclusion` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_inclusion_get(
    inclusion: *const GgmslInclusion,
    i: usize,
    j: usize,
    out: *mut f64,
) -> GgmslStatus {
    guard(|| {
        let m = &unsafe { as_ref(inclusion, "inclusion") }?.0;
        if i >= m.p() || j >= m.p() || i == j {
            return Err(invalid("pair out of range or on the diagonal"));
        }
        unsafe { write_out(out, m.get(i, j), "out") }
    })
}

/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_auc(
    inclusion: *const GgmslInclusion,
    truth: *const GgmslGraph,
    out: *mut f64,
) -> GgmslStatus {
    guard(|| {
        let m = &unsafe { as_ref(inclusion, "inclusion") }?.0;
        let g = &unsafe { as_ref(truth, "truth") }?.0;
        let v = lib(auc(m, g))?;
        unsafe { write_out(out, v, "out") }
    })
}

/// MAMSE with weight `alpha` on present edges.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmsl_mamse(
    inclusion: *const GgmslInclusion,
    truth: *const GgmslGraph,
    alpha: f64,
    out: *mut f64,
) -> GgmslStatus {
    guard(|| {
        let m = &unsafe { as_ref(inclusion, "inclusion") }?.0;
        let g = &unsafe { as_ref(truth, "truth") }?.0;
        let v = lib(mamse(m, g, &MamseConfig { alpha }))?;
        unsafe { write_out(out, v, "out") }
    })
}
