//! C ABI for segfd.
//!
//! Every function returns a [`SegfdStatus`]; results are written through out
//! pointers. On failure the calling thread's last error message is set and
//! can be read with [`segfd_last_error_message`]. Objects cross the boundary
//! as opaque handles that are released with their matching `*_free`
//! function. Arrays are passed as pointer plus length in C order; a null
//! pointer is accepted only with length zero.
//!
//! Strings returned as `char *` are owned by the caller and must be released
//! with [`segfd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use segfd::aggregation;
use segfd::datamodel::{ConfidenceMap, FeatureVector, LabelMap, RiskMetric, RiskSpec};
use segfd::learners::{self, ForestModel, ForestParams, GaussianModel};
use segfd::risk_coverage::{self, RiskCoverageCurve};
use segfd::{io, pairwise, pipeline, segmetrics, stats, Error};

/// Result of every call. Values other than `Ok`, `NullPointer`, `InvalidUtf8`
/// and `Panic` mirror the library's error kinds one to one.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegfdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    DimMismatch = 10,
    ModeMismatch = 11,
    ClassSetMismatch = 12,
    InvalidValue = 13,
    BadWidth = 14,
    BadPatch = 15,
    BadTolerance = 16,
    EmptyMap = 17,
    EmptyInput = 18,
    LengthMismatch = 19,
    RiskOutOfRange = 20,
    NonfiniteInput = 21,
    TooFewSamples = 22,
    TooFewRows = 23,
    SingularAfterRidge = 24,
    SchemaMismatch = 25,
    NormalizationDegenerate = 26,
    ConstantInput = 27,
    SingleClass = 28,
    MisalignedCases = 29,
    EmptyFold = 30,
    BadMagic = 40,
    UnsupportedDtype = 41,
    FortranOrderUnsupported = 42,
    ValueOutOfRange = 43,
    MissingColumn = 44,
    DuplicateCase = 45,
    UnresolvedPath = 46,
    BadRow = 47,
    Config = 48,
    Io = 49,
    Json = 50,
    Csv = 51,
}

impl From<&Error> for SegfdStatus {
    fn from(e: &Error) -> Self {
        use SegfdStatus as S;
        match e {
            Error::DimMismatch { .. } => S::DimMismatch,
            Error::ModeMismatch { .. } => S::ModeMismatch,
            Error::ClassSetMismatch { .. } => S::ClassSetMismatch,
            Error::InvalidValue { .. } => S::InvalidValue,
            Error::BadWidth(_) => S::BadWidth,
            Error::BadPatch(_) => S::BadPatch,
            Error::BadTolerance(_) => S::BadTolerance,
            Error::EmptyMap => S::EmptyMap,
            Error::EmptyInput => S::EmptyInput,
            Error::LengthMismatch { .. } => S::LengthMismatch,
            Error::RiskOutOfRange { .. } => S::RiskOutOfRange,
            Error::NonFiniteInput(_) => S::NonfiniteInput,
            Error::TooFewSamples { .. } => S::TooFewSamples,
            Error::TooFewRows { .. } => S::TooFewRows,
            Error::SingularAfterRidge => S::SingularAfterRidge,
            Error::SchemaMismatch { .. } => S::SchemaMismatch,
            Error::NormalizationDegenerate(_) => S::NormalizationDegenerate,
            Error::ConstantInput => S::ConstantInput,
            Error::SingleClass => S::SingleClass,
            Error::MisalignedCases(_) => S::MisalignedCases,
            Error::EmptyFold(_) => S::EmptyFold,
            Error::BadMagic { .. } => S::BadMagic,
            Error::UnsupportedDtype { .. } => S::UnsupportedDtype,
            Error::FortranOrderUnsupported { .. } => S::FortranOrderUnsupported,
            Error::ValueOutOfRange { .. } => S::ValueOutOfRange,
            Error::MissingColumn { .. } => S::MissingColumn,
            Error::DuplicateCase { .. } => S::DuplicateCase,
            Error::UnresolvedPath { .. } => S::UnresolvedPath,
            Error::BadRow { .. } => S::BadRow,
            Error::Config(_) => S::Config,
            Error::Io { .. } => S::Io,
            Error::Json { .. } => S::Json,
            Error::Csv { .. } => S::Csv,
        }
    }
}

/// Segmentation metric behind a risk.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegfdRiskMetric {
    Dsc = 0,
    GeneralizedDsc = 1,
    Nsd = 2,
}

/// Label map handle.
pub struct SegfdLabelMap(LabelMap);
/// Confidence map handle.
pub struct SegfdConfidenceMap(ConfidenceMap);
/// Risk-coverage curve handle.
pub struct SegfdCurve(RiskCoverageCurve);
/// Fitted Gaussian handle for Mahalanobis confidence.
pub struct SegfdGaussian(GaussianModel);
/// Fitted regression forest handle.
pub struct SegfdForest(ForestModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: SegfdStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            status: SegfdStatus::from(&e),
            message: format!("[{}] {e}", e.code()),
        }
    }
}

fn null(what: &str) -> Failure {
    Failure {
        status: SegfdStatus::NullPointer,
        message: format!("`{what}` is null"),
    }
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("no interior nul"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SegfdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            SegfdStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(Some(failure.message));
            failure.status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            SegfdStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn reference<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn check_out<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(null(what))
    } else {
        Ok(())
    }
}

unsafe fn string<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure {
        status: SegfdStatus::InvalidUtf8,
        message: format!("`{what}` is not valid UTF-8"),
    })
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn segfd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn segfd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn segfd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// DSC of two binary masks of `n` voxels (nonzero is inside).
///
/// # Safety
/// `pred` and `gt` must point to `n` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_dsc_binary(pred: *const u8, gt: *const u8, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| {
        let p: Vec<bool> = slice(pred, n, "pred")?.iter().map(|&v| v != 0).collect();
        let g: Vec<bool> = slice(gt, n, "gt")?.iter().map(|&v| v != 0).collect();
        write_out(out, segmetrics::dsc_binary(&p, &g)?, "out")
    })
}

/// Normalized surface distance of two binary masks on a `ndim`-axis grid.
///
/// # Safety
/// `dims` and `spacing` must hold `ndim` entries, masks `prod(dims)` bytes.
#[no_mangle]
pub unsafe extern "C" fn segfd_nsd_binary(
    pred: *const u8,
    gt: *const u8,
    dims: *const usize,
    ndim: usize,
    spacing: *const f64,
    tolerance: f64,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let dims = slice(dims, ndim, "dims")?;
        let spacing = slice(spacing, ndim, "spacing")?;
        let n = dims.iter().product();
        let p: Vec<bool> = slice(pred, n, "pred")?.iter().map(|&v| v != 0).collect();
        let g: Vec<bool> = slice(gt, n, "gt")?.iter().map(|&v| v != 0).collect();
        write_out(out, segmetrics::nsd_binary(&p, &g, dims, spacing, tolerance)?, "out")
    })
}

/// Creates an exclusive label map; voxel values are 0 or one of `class_ids`.
///
/// # Safety
/// Arrays must hold the stated number of entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_label_map_new_exclusive(
    dims: *const usize,
    ndim: usize,
    spacing: *const f64,
    class_ids: *const u32,
    n_classes: usize,
    labels: *const u32,
    out: *mut *mut SegfdLabelMap,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let dims = slice(dims, ndim, "dims")?.to_vec();
        let n = dims.iter().product();
        let map = LabelMap::exclusive(
            dims,
            slice(spacing, ndim, "spacing")?.to_vec(),
            slice(class_ids, n_classes, "class_ids")?.to_vec(),
            slice(labels, n, "labels")?.to_vec(),
        )?;
        write_out(out, boxed(SegfdLabelMap(map)), "out")
    })
}

/// Creates a region label map from `n_classes` stacked masks (nonzero is inside).
///
/// # Safety
/// `masks` must hold `n_classes * prod(dims)` bytes, channel-major.
#[no_mangle]
pub unsafe extern "C" fn segfd_label_map_new_regions(
    dims: *const usize,
    ndim: usize,
    spacing: *const f64,
    class_ids: *const u32,
    n_classes: usize,
    masks: *const u8,
    out: *mut *mut SegfdLabelMap,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let dims = slice(dims, ndim, "dims")?.to_vec();
        let n: usize = dims.iter().product();
        let raw = slice(masks, n * n_classes, "masks")?;
        let masks = raw
            .chunks(n.max(1))
            .map(|c| c.iter().map(|&v| v != 0).collect())
            .collect();
        let map = LabelMap::regions(
            dims,
            slice(spacing, ndim, "spacing")?.to_vec(),
            slice(class_ids, n_classes, "class_ids")?.to_vec(),
            masks,
        )?;
        write_out(out, boxed(SegfdLabelMap(map)), "out")
    })
}

/// # Safety
/// `map` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn segfd_label_map_free(map: *mut SegfdLabelMap) {
    free(map)
}

/// # Safety
/// `values` must hold `prod(dims)` entries in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn segfd_confidence_map_new(
    dims: *const usize,
    ndim: usize,
    values: *const f64,
    out: *mut *mut SegfdConfidenceMap,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let dims = slice(dims, ndim, "dims")?.to_vec();
        let n = dims.iter().product();
        let map = ConfidenceMap::new(dims, slice(values, n, "values")?.to_vec())?;
        write_out(out, boxed(SegfdConfidenceMap(map)), "out")
    })
}

/// # Safety
/// `map` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn segfd_confidence_map_free(map: *mut SegfdConfidenceMap) {
    free(map)
}

/// Mean DSC over the foreground classes.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_mean_dsc(pred: *const SegfdLabelMap, gt: *const SegfdLabelMap, out: *mut f64) -> SegfdStatus {
    guard(|| {
        let v = segmetrics::mean_dsc(&reference(pred, "pred")?.0, &reference(gt, "gt")?.0)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_generalized_dsc(pred: *const SegfdLabelMap, gt: *const SegfdLabelMap, out: *mut f64) -> SegfdStatus {
    guard(|| {
        let v = segmetrics::generalized_dsc(&reference(pred, "pred")?.0, &reference(gt, "gt")?.0)?;
        write_out(out, v, "out")
    })
}

/// Risk `1 - metric` over all classes; `nsd_tolerance` is used only for NSD.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_compute_risk(
    pred: *const SegfdLabelMap,
    gt: *const SegfdLabelMap,
    metric: SegfdRiskMetric,
    nsd_tolerance: f64,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let spec = match metric {
            SegfdRiskMetric::Dsc => RiskSpec::new(RiskMetric::Dsc),
            SegfdRiskMetric::GeneralizedDsc => RiskSpec::new(RiskMetric::GeneralizedDsc),
            SegfdRiskMetric::Nsd => RiskSpec::nsd(nsd_tolerance),
        };
        spec.validate()?;
        let v = segmetrics::compute_risk(&reference(pred, "pred")?.0, &reference(gt, "gt")?.0, &spec)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `conf` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_agg_mean(conf: *const SegfdConfidenceMap, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, aggregation::agg_mean(&reference(conf, "conf")?.0)?, "out"))
}

/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_agg_non_boundary(
    conf: *const SegfdConfidenceMap,
    pred: *const SegfdLabelMap,
    width: usize,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let v = aggregation::agg_non_boundary(&reference(conf, "conf")?.0, &reference(pred, "pred")?.0, width)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_agg_mean_foreground(
    conf: *const SegfdConfidenceMap,
    pred: *const SegfdLabelMap,
    width: usize,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let v = aggregation::agg_mean_foreground(&reference(conf, "conf")?.0, &reference(pred, "pred")?.0, width)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `conf` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_agg_patch_min(conf: *const SegfdConfidenceMap, patch_size: usize, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, aggregation::agg_patch_min(&reference(conf, "conf")?.0, patch_size)?, "out"))
}

/// Writes the five simple features into `out[0..5]`.
///
/// # Safety
/// Handles must be valid; `out` must hold 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn segfd_simple_features(
    conf: *const SegfdConfidenceMap,
    pred: *const SegfdLabelMap,
    width: usize,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let f = aggregation::simple_features(&reference(conf, "conf")?.0, &reference(pred, "pred")?.0, width)?;
        ptr::copy_nonoverlapping(f.values().as_ptr(), out, f.values().len());
        Ok(())
    })
}

/// Mean DSC over all unordered pairs of `m` sample predictions.
///
/// # Safety
/// `samples` must hold `m` valid handles.
#[no_mangle]
pub unsafe extern "C" fn segfd_pairwise_dsc(samples: *const *const SegfdLabelMap, m: usize, out: *mut f64) -> SegfdStatus {
    guard(|| {
        let maps = slice(samples, m, "samples")?
            .iter()
            .map(|&p| reference(p, "samples[i]").map(|h| h.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        write_out(out, pairwise::pairwise_dsc(&maps)?, "out")
    })
}

/// # Safety
/// `risks` and `confidences` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_rc_curve_new(
    risks: *const f64,
    confidences: *const f64,
    n: usize,
    out: *mut *mut SegfdCurve,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let curve = risk_coverage::rc_curve(slice(risks, n, "risks")?, slice(confidences, n, "confidences")?)?;
        write_out(out, boxed(SegfdCurve(curve)), "out")
    })
}

/// Number of working points (tie groups) of the curve.
///
/// # Safety
/// `curve` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_rc_curve_len(curve: *const SegfdCurve, out: *mut usize) -> SegfdStatus {
    guard(|| write_out(out, reference(curve, "curve")?.0.points().len(), "out"))
}

/// # Safety
/// `curve` must be valid; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_rc_curve_point(
    curve: *const SegfdCurve,
    index: usize,
    coverage: *mut f64,
    selective_risk: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let points = reference(curve, "curve")?.0.points();
        let p = points.get(index).ok_or_else(|| {
            Failure::from(Error::LengthMismatch {
                left: points.len(),
                right: index,
            })
        })?;
        write_out(coverage, p.coverage, "coverage")?;
        write_out(selective_risk, p.selective_risk, "selective_risk")
    })
}

/// # Safety
/// `curve` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_rc_curve_aurc(curve: *const SegfdCurve, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, risk_coverage::aurc(&reference(curve, "curve")?.0), "out"))
}

/// Largest coverage whose selective risk is at most `max_selective_risk`.
///
/// # Safety
/// `curve` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_rc_curve_operating_point(
    curve: *const SegfdCurve,
    max_selective_risk: f64,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let v = risk_coverage::operating_point(&reference(curve, "curve")?.0, max_selective_risk);
        write_out(out, v, "out")
    })
}

/// # Safety
/// `curve` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn segfd_rc_curve_free(curve: *mut SegfdCurve) {
    free(curve)
}

/// AURC of the curve built from `risks` and `confidences`.
///
/// # Safety
/// Arrays must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_aurc(risks: *const f64, confidences: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| {
        let curve = risk_coverage::rc_curve(slice(risks, n, "risks")?, slice(confidences, n, "confidences")?)?;
        write_out(out, risk_coverage::aurc(&curve), "out")
    })
}

/// # Safety
/// `risks` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_aurc_random(risks: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, risk_coverage::aurc_random(slice(risks, n, "risks")?)?, "out"))
}

/// # Safety
/// `risks` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_aurc_optimal(risks: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, risk_coverage::aurc_optimal(slice(risks, n, "risks")?)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_naurc(aurc: f64, aurc_random: f64, aurc_optimal: f64, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, risk_coverage::naurc(aurc, aurc_random, aurc_optimal)?, "out"))
}

/// # Safety
/// `x` and `y` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, stats::spearman(slice(x, n, "x")?, slice(y, n, "y")?)?, "out"))
}

/// # Safety
/// `x` and `y` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, stats::pearson(slice(x, n, "x")?, slice(y, n, "y")?)?, "out"))
}

/// AUROC of `scores` for the positive (nonzero) `labels`.
///
/// # Safety
/// Arrays must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_auroc(labels: *const u8, scores: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| {
        let labels: Vec<bool> = slice(labels, n, "labels")?.iter().map(|&v| v != 0).collect();
        write_out(out, stats::auroc(&labels, slice(scores, n, "scores")?)?, "out")
    })
}

/// Failure AUROC: failures are `risk > failure_threshold`, scored by negated confidence.
///
/// # Safety
/// Arrays must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_f_auroc(
    risks: *const f64,
    confidences: *const f64,
    n: usize,
    failure_threshold: f64,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let v = stats::f_auroc(slice(risks, n, "risks")?, slice(confidences, n, "confidences")?, failure_threshold)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// Arrays must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_mae(estimates: *const f64, truths: *const f64, n: usize, out: *mut f64) -> SegfdStatus {
    guard(|| write_out(out, stats::mae(slice(estimates, n, "estimates")?, slice(truths, n, "truths")?)?, "out"))
}

unsafe fn rows(data: *const f64, n: usize, d: usize, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    let flat = slice(data, n * d, what)?;
    Ok((0..n).map(|i| flat[i * d..(i + 1) * d].to_vec()).collect())
}

/// Fits a Gaussian on `n` row-major feature vectors of length `d`.
///
/// # Safety
/// `rows` must hold `n * d` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_gaussian_fit(
    data: *const f64,
    n: usize,
    d: usize,
    ridge_epsilon: f64,
    out: *mut *mut SegfdGaussian,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let model = learners::mahalanobis_fit(&rows(data, n, d, "data")?, ridge_epsilon)?;
        write_out(out, boxed(SegfdGaussian(model)), "out")
    })
}

/// Negated Mahalanobis distance of `x` (length `d`).
///
/// # Safety
/// `model` must be valid, `x` must hold `d` entries.
#[no_mangle]
pub unsafe extern "C" fn segfd_gaussian_confidence(
    model: *const SegfdGaussian,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let v = learners::mahalanobis_confidence(&reference(model, "model")?.0, slice(x, d, "x")?)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_gaussian_from_json(json: *const c_char, out: *mut *mut SegfdGaussian) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let model: GaussianModel = parse_json(string(json, "json")?)?;
        write_out(out, boxed(SegfdGaussian(model)), "out")
    })
}

/// # Safety
/// `model` must be valid; release `*out` with `segfd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn segfd_gaussian_to_json(model: *const SegfdGaussian, out: *mut *mut c_char) -> SegfdStatus {
    guard(|| {
        let text = serde_json::to_string(&reference(model, "model")?.0).expect("model serialises");
        write_out(out, owned_string(text), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn segfd_gaussian_free(model: *mut SegfdGaussian) {
    free(model)
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure {
        status: SegfdStatus::Json,
        message: format!("[JSON] {e}"),
    })
}

/// Fits a multi-output forest on `n` rows of `d` features and `t` targets.
/// Features are named `f0..`, targets `t0..`; the confidence averages all targets.
///
/// # Safety
/// `features` must hold `n * d` and `targets` `n * t` entries.
#[no_mangle]
pub unsafe extern "C" fn segfd_forest_fit(
    features: *const f64,
    targets: *const f64,
    n: usize,
    d: usize,
    t: usize,
    n_trees: usize,
    seed: u64,
    out: *mut *mut SegfdForest,
) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let params = ForestParams {
            n_trees,
            seed,
            ..ForestParams::default()
        };
        let model = learners::rf_fit(
            &rows(features, n, d, "features")?,
            &rows(targets, n, t, "targets")?,
            (0..d).map(|i| format!("f{i}")).collect(),
            (0..t).map(|i| format!("t{i}")).collect(),
            &params,
        )?;
        write_out(out, boxed(SegfdForest(model)), "out")
    })
}

/// Writes the `t` predicted targets for feature row `x` into `out`.
///
/// # Safety
/// `x` must hold `d` entries and `out` room for `t` doubles.
#[no_mangle]
pub unsafe extern "C" fn segfd_forest_predict(
    model: *const SegfdForest,
    x: *const f64,
    d: usize,
    out: *mut f64,
    t: usize,
) -> SegfdStatus {
    guard(|| {
        let model = &reference(model, "model")?.0;
        check_out(out, "out")?;
        let pred = model.predict(slice(x, d, "x")?)?;
        if pred.len() != t {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: t,
            }
            .into());
        }
        ptr::copy_nonoverlapping(pred.as_ptr(), out, t);
        Ok(())
    })
}

/// Mean predicted per-class DSC for feature row `x`.
///
/// # Safety
/// `model` must be valid, `x` must hold `d` entries.
#[no_mangle]
pub unsafe extern "C" fn segfd_forest_confidence(
    model: *const SegfdForest,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> SegfdStatus {
    guard(|| {
        let model = &reference(model, "model")?.0;
        let features = FeatureVector::new(slice(x, d, "x")?.to_vec(), model.feature_schema.clone())?;
        write_out(out, learners::rf_confidence(model, &features)?, "out")
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_forest_from_json(json: *const c_char, out: *mut *mut SegfdForest) -> SegfdStatus {
    guard(|| {
        check_out(out, "out")?;
        let model: ForestModel = parse_json(string(json, "json")?)?;
        write_out(out, boxed(SegfdForest(model)), "out")
    })
}

/// # Safety
/// `model` must be valid; release `*out` with `segfd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn segfd_forest_to_json(model: *const SegfdForest, out: *mut *mut c_char) -> SegfdStatus {
    guard(|| {
        let text = serde_json::to_string(&reference(model, "model")?.0).expect("model serialises");
        write_out(out, owned_string(text), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn segfd_forest_free(model: *mut SegfdForest) {
    free(model)
}

/// Runs a full evaluation and writes the report files into `out_dir`.
/// `n_errors` receives the size of the error ledger.
///
/// # Safety
/// Paths must be NUL-terminated UTF-8; `n_errors` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segfd_evaluate(
    manifest_path: *const c_char,
    config_path: *const c_char,
    out_dir: *const c_char,
    n_errors: *mut usize,
) -> SegfdStatus {
    guard(|| {
        check_out(n_errors, "n_errors")?;
        let (config, base) = io::Config::load(Path::new(string(config_path, "config_path")?))?;
        let manifest = io::read_manifest(Path::new(string(manifest_path, "manifest_path")?))?;
        let report = pipeline::run_evaluate(&manifest, &config, &base)?;
        io::emit_report(&report, Path::new(string(out_dir, "out_dir")?))?;
        write_out(n_errors, report.errors.len(), "n_errors")
    })
}
