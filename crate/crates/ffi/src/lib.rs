//! C ABI over the sidewalk-audit core.
//!
//! Every fallible function returns a [`SwaStatus`]; on failure a message is
//! available from [`swa_last_error_message`] on the same thread. Handles are
//! opaque and released with their `*_free` function; returned strings go
//! back through [`swa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sidewalk_audit::geo::{haversine_distance, GeoPoint};
use sidewalk_audit::guidance::{build_prompt, GuidanceRequest, PanoramaRef};
use sidewalk_audit::labels::{load_taxonomy, severity_weight, Taxonomy};
use sidewalk_audit::ratings::{descriptive_stats, spearman, weighted_kappa, Correlation};
use sidewalk_audit::road_graph::{
    load_network, nearest_node, trace_paths, EdgeId, NodeId, RoadNetwork, RoadType, TracedPathSet,
};
use sidewalk_audit::scoring::{normalize_values, poi_across_sector_score, poi_sec_score};
use sidewalk_audit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    NotFound = 5,
    /// The statistic is not defined for the input (constant ratings, a
    /// category without POIs). Not an error; no message is set.
    Undefined = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

/// Descriptive statistics of a rating sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwaDescriptive {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Opaque road network.
pub struct SwaNetwork(RoadNetwork);

/// Opaque set of edges reached from one node.
pub struct SwaTrace(TracedPathSet);

/// Opaque label taxonomy.
pub struct SwaTaxonomy(Taxonomy);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SwaStatus {
    match e {
        Error::InvalidInput(_) | Error::Config(_) => SwaStatus::InvalidArgument,
        Error::Schema { .. } | Error::Json(_) | Error::GeoJson(_) | Error::Csv(_) => SwaStatus::Parse,
        Error::NotFound(_) | Error::MissingFile(_) => SwaStatus::NotFound,
        _ => SwaStatus::Internal,
    }
}

struct Failure(SwaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SwaStatus::NullPointer, format!("{name} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<SwaStatus, Failure>) -> SwaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sidewalk-audit");
            SwaStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    // SAFETY: the caller promises `p` points to `n` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller promises `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    // SAFETY: the caller promises a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(SwaStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn swa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swa_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Great-circle distance in meters.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64, out_m: *mut f64) -> SwaStatus {
    guard(|| {
        let a = GeoPoint::new(lat1, lon1)?;
        let b = GeoPoint::new(lat2, lon2)?;
        *unsafe { out(out_m, "out_m") }? = haversine_distance(&a, &b);
        Ok(SwaStatus::Ok)
    })
}

/// Weight of a severity level: 1 → 0.2, 2 → 0.6, 3 → 1.0.
///
/// # Safety
/// `out_weight` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_severity_weight(severity: i64, out_weight: *mut f64) -> SwaStatus {
    guard(|| {
        *unsafe { out(out_weight, "out_weight") }? = severity_weight(severity)?;
        Ok(SwaStatus::Ok)
    })
}

/// Normalizes `n` raw segment scores into (0, 1), writing `n` values.
///
/// # Safety
/// `raw` must hold `n` readable values and `out_scores` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn swa_normalize_scores(raw: *const f64, n: usize, out_scores: *mut f64) -> SwaStatus {
    guard(|| {
        let raw = unsafe { slice(raw, n, "raw") }?;
        let normalized = normalize_values(raw)?;
        if out_scores.is_null() {
            return Err(null("out_scores"));
        }
        // SAFETY: caller provides room for n values.
        let dst = unsafe { std::slice::from_raw_parts_mut(out_scores, n) };
        dst.copy_from_slice(&normalized);
        Ok(SwaStatus::Ok)
    })
}

/// Length-weighted mean of segment scores.
///
/// # Safety
/// `scores` and `lengths_m` must hold `n` values; `out_score` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_poi_sec_score(
    scores: *const f64,
    lengths_m: *const f64,
    n: usize,
    out_score: *mut f64,
) -> SwaStatus {
    guard(|| {
        let s = unsafe { slice(scores, n, "scores") }?;
        let l = unsafe { slice(lengths_m, n, "lengths_m") }?;
        let pairs: Vec<(f64, f64)> = s.iter().copied().zip(l.iter().copied()).collect();
        *unsafe { out(out_score, "out_score") }? = poi_sec_score(&pairs)?;
        Ok(SwaStatus::Ok)
    })
}

/// POI-count-weighted mean of POI scores. Returns `Undefined` when the
/// counts sum to zero.
///
/// # Safety
/// `scores` and `counts` must hold `n` values; `out_score` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_poi_across_sector_score(
    scores: *const f64,
    counts: *const u64,
    n: usize,
    out_score: *mut f64,
) -> SwaStatus {
    guard(|| {
        let s = unsafe { slice(scores, n, "scores") }?;
        let c = unsafe { slice(counts, n, "counts") }?;
        let out_score = unsafe { out(out_score, "out_score") }?;
        let groups: Vec<(f64, u64)> = s.iter().copied().zip(c.iter().copied()).collect();
        Ok(match poi_across_sector_score(&groups) {
            Some(v) => {
                *out_score = v;
                SwaStatus::Ok
            }
            None => SwaStatus::Undefined,
        })
    })
}

/// Sample mean, standard deviation and range of `n` ratings.
///
/// # Safety
/// `values` must hold `n` values; `out_stats` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_descriptive_stats(
    values: *const f64,
    n: usize,
    out_stats: *mut SwaDescriptive,
) -> SwaStatus {
    guard(|| {
        let v = unsafe { slice(values, n, "values") }?;
        let d = descriptive_stats(v)?;
        *unsafe { out(out_stats, "out_stats") }? = SwaDescriptive {
            mean: d.mean,
            sd: d.sd,
            min: d.min,
            max: d.max,
            n: d.n,
        };
        Ok(SwaStatus::Ok)
    })
}

/// Spearman's rho and its two-sided p value. Returns `Undefined` when
/// either vector is constant.
///
/// # Safety
/// `a` and `b` must hold `n` values; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_spearman(
    a: *const f64,
    b: *const f64,
    n: usize,
    out_rho: *mut f64,
    out_p: *mut f64,
) -> SwaStatus {
    guard(|| {
        let a = unsafe { slice(a, n, "a") }?;
        let b = unsafe { slice(b, n, "b") }?;
        let rho_out = unsafe { out(out_rho, "out_rho") }?;
        let p_out = unsafe { out(out_p, "out_p") }?;
        Ok(match spearman(a, b)? {
            Correlation::Defined { rho, p } => {
                *rho_out = rho;
                *p_out = p;
                SwaStatus::Ok
            }
            Correlation::Undefined => SwaStatus::Undefined,
        })
    })
}

/// Quadratic-weighted Cohen's kappa over ratings in `1..=k`.
///
/// # Safety
/// `a` and `b` must hold `n` values; `out_kappa` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_weighted_kappa(
    a: *const u8,
    b: *const u8,
    n: usize,
    k: u8,
    out_kappa: *mut f64,
) -> SwaStatus {
    guard(|| {
        let a = unsafe { slice(a, n, "a") }?;
        let b = unsafe { slice(b, n, "b") }?;
        *unsafe { out(out_kappa, "out_kappa") }? = weighted_kappa(a, b, k)?;
        Ok(SwaStatus::Ok)
    })
}

/// Parses a GeoJSON FeatureCollection of LineStrings into a network.
///
/// # Safety
/// `geojson` must be a NUL-terminated string; `out_network` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_network_load(geojson: *const c_char, out_network: *mut *mut SwaNetwork) -> SwaStatus {
    guard(|| {
        let text = unsafe { text(geojson, "geojson") }?;
        let slot = unsafe { out(out_network, "out_network") }?;
        let net = load_network(text)?;
        *slot = Box::into_raw(Box::new(SwaNetwork(net)));
        Ok(SwaStatus::Ok)
    })
}

/// # Safety
/// `network` must come from [`swa_network_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swa_network_free(network: *mut SwaNetwork) {
    if !network.is_null() {
        // SAFETY: produced by Box::into_raw in swa_network_load.
        drop(unsafe { Box::from_raw(network) });
    }
}

/// # Safety
/// `network` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn swa_network_node_count(network: *const SwaNetwork) -> usize {
    unsafe { network.as_ref() }.map_or(0, |n| n.0.node_count())
}

/// # Safety
/// `network` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn swa_network_edge_count(network: *const SwaNetwork) -> usize {
    unsafe { network.as_ref() }.map_or(0, |n| n.0.edge_count())
}

/// Node nearest to a coordinate.
///
/// # Safety
/// `network` must be a live handle; `out_node` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_network_nearest_node(
    network: *const SwaNetwork,
    lat: f64,
    lon: f64,
    out_node: *mut u32,
) -> SwaStatus {
    guard(|| {
        let net = unsafe { network.as_ref() }.ok_or_else(|| null("network"))?;
        let p = GeoPoint::new(lat, lon)?;
        *unsafe { out(out_node, "out_node") }? = nearest_node(&net.0, &p)?.0;
        Ok(SwaStatus::Ok)
    })
}

/// Edges reachable within `budget_m` of node `origin`.
///
/// # Safety
/// `network` must be a live handle; `out_trace` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_trace_paths(
    network: *const SwaNetwork,
    origin: u32,
    budget_m: f64,
    out_trace: *mut *mut SwaTrace,
) -> SwaStatus {
    guard(|| {
        let net = unsafe { network.as_ref() }.ok_or_else(|| null("network"))?;
        let slot = unsafe { out(out_trace, "out_trace") }?;
        let set = trace_paths(&net.0, NodeId(origin), budget_m)?;
        *slot = Box::into_raw(Box::new(SwaTrace(set)));
        Ok(SwaStatus::Ok)
    })
}

/// # Safety
/// `trace` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn swa_trace_edge_count(trace: *const SwaTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.0.edges.len())
}

/// Copies the traced edge ids in ascending order. Fails with
/// `BufferTooSmall` when `capacity` is below [`swa_trace_edge_count`].
///
/// # Safety
/// `trace` must be a live handle and `out_edges` must have room for
/// `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn swa_trace_edges(trace: *const SwaTrace, out_edges: *mut u32, capacity: usize) -> SwaStatus {
    guard(|| {
        let t = unsafe { trace.as_ref() }.ok_or_else(|| null("trace"))?;
        let n = t.0.edges.len();
        if capacity < n {
            return Err(Failure(
                SwaStatus::BufferTooSmall,
                format!("need room for {n} edges, got {capacity}"),
            ));
        }
        if n > 0 && out_edges.is_null() {
            return Err(null("out_edges"));
        }
        for (i, EdgeId(id)) in t.0.edges.iter().enumerate() {
            // SAFETY: i < n <= capacity.
            unsafe { *out_edges.add(i) = *id };
        }
        Ok(SwaStatus::Ok)
    })
}

/// # Safety
/// `trace` must come from [`swa_trace_paths`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swa_trace_free(trace: *mut SwaTrace) {
    if !trace.is_null() {
        // SAFETY: produced by Box::into_raw in swa_trace_paths.
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// The bundled label taxonomy. Never null.
#[no_mangle]
pub extern "C" fn swa_taxonomy_builtin() -> *mut SwaTaxonomy {
    Box::into_raw(Box::new(SwaTaxonomy(Taxonomy::builtin())))
}

/// Parses and validates a taxonomy JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_taxonomy` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn swa_taxonomy_load(json: *const c_char, out_taxonomy: *mut *mut SwaTaxonomy) -> SwaStatus {
    guard(|| {
        let text = unsafe { text(json, "json") }?;
        let slot = unsafe { out(out_taxonomy, "out_taxonomy") }?;
        *slot = Box::into_raw(Box::new(SwaTaxonomy(load_taxonomy(text)?)));
        Ok(SwaStatus::Ok)
    })
}

/// # Safety
/// `taxonomy` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swa_taxonomy_free(taxonomy: *mut SwaTaxonomy) {
    if !taxonomy.is_null() {
        // SAFETY: produced by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(taxonomy) });
    }
}

/// Guidance prompt for a road type such as `"residential"` or
/// `"secondary"`. Release the result with [`swa_string_free`].
///
/// # Safety
/// `taxonomy` must be a live handle, `road_type` a NUL-terminated string
/// and `out_prompt` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swa_build_prompt(
    taxonomy: *const SwaTaxonomy,
    road_type: *const c_char,
    out_prompt: *mut *mut c_char,
) -> SwaStatus {
    guard(|| {
        let tax = unsafe { taxonomy.as_ref() }.ok_or_else(|| null("taxonomy"))?;
        let road: RoadType = unsafe { text(road_type, "road_type") }?.parse()?;
        let slot = unsafe { out(out_prompt, "out_prompt") }?;
        let pano = |id: &str| PanoramaRef {
            pano_id: id.to_string(),
            image: None,
        };
        let req = GuidanceRequest::new(EdgeId(0), road, pano("start"), pano("end"))?;
        let prompt = CString::new(build_prompt(&req, &tax.0))
            .map_err(|_| Failure(SwaStatus::Internal, "prompt holds NUL".into()))?;
        *slot = prompt.into_raw();
        Ok(SwaStatus::Ok)
    })
}
