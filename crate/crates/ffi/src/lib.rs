//! C ABI over the change-detection pipeline.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `ddnet_*_new`/`load`/producer call and released with the matching
//! `ddnet_*_free`. Fallible calls return a [`DdnetStatus`]; on failure
//! [`ddnet_last_error`] describes what went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ddnet::evalmap::{score, ChangeMap};
use ddnet::imagery::{load_pgm, log_ratio, save_pgm, Raster};
use ddnet::network::{load_checkpoint, save_checkpoint, Mode, ModelParams};
use ddnet::preclassify::{draw_samples, hierarchical_trimap, PixelClass, TriMap};
use ddnet::synthgen::{generate, SceneSpec};
use ddnet::trainer::{infer_map, train, TrainConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Preclassify = 4,
    Training = 5,
    Panic = 6,
}

/// Single-band image.
pub struct DdnetRaster(Raster);
/// Changed / unchanged / intermediate labels.
pub struct DdnetTriMap(TriMap);
/// Trained network weights.
pub struct DdnetModel(ModelParams);
/// Binary change decision per pixel.
pub struct DdnetChangeMap(ChangeMap);

/// Training hyperparameters. `mode`: 0 both, 1 no-dct, 2 no-mrc, 3 plain-cnn.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DdnetTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub r: usize,
    pub mode: u32,
    pub mask_width: usize,
    pub sample_fraction: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DdnetMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub oe: u64,
    pub pcc: f64,
    pub kc: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DdnetStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: DdnetStatus, msg: impl ToString) -> FfiResult<T> {
    Err(Failure(status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> DdnetStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(DdnetStatus::Panic, format!("internal panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DdnetStatus::Ok
        }
        Err(Failure(status, msg)) => {
            let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
            status
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().map_or_else(|| fail(DdnetStatus::NullPointer, format!("{name} is null")), Ok)
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().map_or_else(|| fail(DdnetStatus::NullPointer, format!("{name} is null")), Ok)
}

unsafe fn path_arg(p: *const c_char) -> FfiResult<PathBuf> {
    if p.is_null() {
        return fail(DdnetStatus::NullPointer, "path is null");
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(DdnetStatus::InvalidArgument, "path is not valid UTF-8"),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the most recent failure on this thread, or null after a
/// successful call. Valid until the next `ddnet_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ddnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `width * height` non-negative samples, row-major.
///
/// # Safety
/// `pixels` must point to `width * height` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_raster_new(
    width: usize,
    height: usize,
    pixels: *const f64,
    out: *mut *mut DdnetRaster,
) -> DdnetStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if pixels.is_null() {
            return fail(DdnetStatus::NullPointer, "pixels is null");
        }
        let n =
            width.checked_mul(height).ok_or_else(|| Failure(DdnetStatus::InvalidArgument, "size overflow".into()))?;
        let data = std::slice::from_raw_parts(pixels, n).to_vec();
        let r = Raster::new(width, height, data).map_err(|e| Failure(DdnetStatus::InvalidArgument, e.to_string()))?;
        *out = boxed(DdnetRaster(r));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_raster_load_pgm(path: *const c_char, out: *mut *mut DdnetRaster) -> DdnetStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let r = load_pgm(path_arg(path)?).map_err(|e| Failure(DdnetStatus::Io, e.to_string()))?;
        *out = boxed(DdnetRaster(r));
        Ok(())
    })
}

/// # Safety
/// `raster` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ddnet_raster_save_pgm(raster: *const DdnetRaster, path: *const c_char) -> DdnetStatus {
    guard(|| {
        let r = borrow(raster, "raster")?;
        save_pgm(&r.0, path_arg(path)?).map_err(|e| Failure(DdnetStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `raster` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ddnet_raster_width(raster: *const DdnetRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.width())
}

/// # Safety
/// `raster` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ddnet_raster_height(raster: *const DdnetRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.height())
}

/// # Safety
/// `raster` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ddnet_raster_free(raster: *mut DdnetRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

/// The default synthetic scene (128×128, 4-look speckle) for `seed`.
///
/// # Safety
/// All three output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_synth_default(
    seed: u64,
    image1: *mut *mut DdnetRaster,
    image2: *mut *mut DdnetRaster,
    truth: *mut *mut DdnetChangeMap,
) -> DdnetStatus {
    guard(|| {
        let (o1, o2, ot) = (out_ptr(image1, "image1")?, out_ptr(image2, "image2")?, out_ptr(truth, "truth")?);
        let (i1, i2, t) = generate(&SceneSpec::default_scene(seed))
            .map_err(|e| Failure(DdnetStatus::InvalidArgument, e.to_string()))?;
        *o1 = boxed(DdnetRaster(i1));
        *o2 = boxed(DdnetRaster(i2));
        *ot = boxed(DdnetChangeMap(t));
        Ok(())
    })
}

/// Log-ratio difference image followed by two-stage fuzzy c-means.
///
/// # Safety
/// Inputs must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_preclassify(
    image1: *const DdnetRaster,
    image2: *const DdnetRaster,
    out: *mut *mut DdnetTriMap,
) -> DdnetStatus {
    guard(|| {
        let (i1, i2, out) = (borrow(image1, "image1")?, borrow(image2, "image2")?, out_ptr(out, "out")?);
        let di = log_ratio(&i1.0, &i2.0).map_err(|e| Failure(DdnetStatus::InvalidArgument, e.to_string()))?;
        let t = hierarchical_trimap(&di).map_err(|e| Failure(DdnetStatus::Preclassify, e.to_string()))?;
        *out = boxed(DdnetTriMap(t));
        Ok(())
    })
}

/// Pixels in one class: 0 unchanged, 1 intermediate, 2 changed.
///
/// # Safety
/// `trimap` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_trimap_count(trimap: *const DdnetTriMap, class: u32, out: *mut usize) -> DdnetStatus {
    guard(|| {
        let (t, out) = (borrow(trimap, "trimap")?, out_ptr(out, "out")?);
        let class = match class {
            0 => PixelClass::Unchanged,
            1 => PixelClass::Intermediate,
            2 => PixelClass::Changed,
            c => return fail(DdnetStatus::InvalidArgument, format!("unknown class {c}")),
        };
        *out = t.0.count(class);
        Ok(())
    })
}

/// # Safety
/// `trimap` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ddnet_trimap_free(trimap: *mut DdnetTriMap) {
    if !trimap.is_null() {
        drop(Box::from_raw(trimap));
    }
}

fn to_rust_config(c: &DdnetTrainConfig) -> FfiResult<TrainConfig> {
    let mode = Mode::from_code(c.mode)
        .ok_or_else(|| Failure(DdnetStatus::InvalidArgument, format!("unknown mode code {}", c.mode)))?;
    let cfg = TrainConfig {
        epochs: c.epochs,
        batch_size: c.batch_size,
        lr: c.lr,
        seed: c.seed,
        r: c.r,
        mode,
        mask_width: c.mask_width,
        sample_fraction: c.sample_fraction,
    };
    cfg.validate().map_err(|e| Failure(DdnetStatus::InvalidArgument, e.to_string()))?;
    Ok(cfg)
}

/// The library defaults (50 epochs, batch 64, lr 1e-3, r 7, both branches).
#[no_mangle]
pub extern "C" fn ddnet_train_config_default() -> DdnetTrainConfig {
    let d = TrainConfig::default();
    DdnetTrainConfig {
        epochs: d.epochs,
        batch_size: d.batch_size,
        lr: d.lr,
        seed: d.seed,
        r: d.r,
        mode: d.mode.code(),
        mask_width: d.mask_width,
        sample_fraction: d.sample_fraction,
    }
}

/// Draws balanced pseudo-labelled patches from the tri-map and trains.
///
/// # Safety
/// Inputs must come from this library; `config` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_train(
    image1: *const DdnetRaster,
    image2: *const DdnetRaster,
    trimap: *const DdnetTriMap,
    config: *const DdnetTrainConfig,
    out: *mut *mut DdnetModel,
) -> DdnetStatus {
    guard(|| {
        let (i1, i2, t) = (borrow(image1, "image1")?, borrow(image2, "image2")?, borrow(trimap, "trimap")?);
        let (cfg, out) = (to_rust_config(borrow(config, "config")?)?, out_ptr(out, "out")?);
        let samples = draw_samples(&t.0, &i1.0, &i2.0, cfg.r, cfg.sample_fraction, cfg.seed)
            .map_err(|e| Failure(DdnetStatus::Preclassify, e.to_string()))?;
        let (params, _) = train(&samples, &cfg).map_err(|e| Failure(DdnetStatus::Training, e.to_string()))?;
        *out = boxed(DdnetModel(params));
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_load(path: *const c_char, out: *mut *mut DdnetModel) -> DdnetStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = load_checkpoint(path_arg(path)?).map_err(|e| Failure(DdnetStatus::Io, e.to_string()))?;
        *out = boxed(DdnetModel(p));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_save(model: *const DdnetModel, path: *const c_char) -> DdnetStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        save_checkpoint(&m.0, path_arg(path)?).map_err(|e| Failure(DdnetStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `model` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_free(model: *mut DdnetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Keeps the tri-map's confident labels and classifies the rest.
///
/// # Safety
/// Inputs must come from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_infer(
    image1: *const DdnetRaster,
    image2: *const DdnetRaster,
    trimap: *const DdnetTriMap,
    model: *const DdnetModel,
    out: *mut *mut DdnetChangeMap,
) -> DdnetStatus {
    guard(|| {
        let (i1, i2, t) = (borrow(image1, "image1")?, borrow(image2, "image2")?, borrow(trimap, "trimap")?);
        let (m, out) = (borrow(model, "model")?, out_ptr(out, "out")?);
        let map = infer_map(&i1.0, &i2.0, &t.0, &m.0).map_err(|e| Failure(DdnetStatus::Training, e.to_string()))?;
        *out = boxed(DdnetChangeMap(map));
        Ok(())
    })
}

/// Copies the 0/1 decisions, row-major, into `buf` of length `len`
/// (must equal width × height).
///
/// # Safety
/// `map` must come from this library; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ddnet_changemap_copy(map: *const DdnetChangeMap, buf: *mut u8, len: usize) -> DdnetStatus {
    guard(|| {
        let m = borrow(map, "map")?;
        if buf.is_null() {
            return fail(DdnetStatus::NullPointer, "buf is null");
        }
        let bits = m.0.bits();
        if len != bits.len() {
            return fail(DdnetStatus::InvalidArgument, format!("buffer holds {len} bytes, map has {}", bits.len()));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(bits);
        Ok(())
    })
}

/// # Safety
/// `map` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ddnet_changemap_width(map: *const DdnetChangeMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.width())
}

/// # Safety
/// `map` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ddnet_changemap_height(map: *const DdnetChangeMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.height())
}

/// # Safety
/// `map` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ddnet_changemap_free(map: *mut DdnetChangeMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Confusion counts, overall error, PCC and kappa (both in percent).
///
/// # Safety
/// Maps must come from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddnet_score(
    map: *const DdnetChangeMap,
    truth: *const DdnetChangeMap,
    out: *mut DdnetMetrics,
) -> DdnetStatus {
    guard(|| {
        let (m, t, out) = (borrow(map, "map")?, borrow(truth, "truth")?, out_ptr(out, "out")?);
        let r = score(&m.0, &t.0).map_err(|e| Failure(DdnetStatus::InvalidArgument, e.to_string()))?;
        *out = DdnetMetrics { tp: r.tp, tn: r.tn, fp: r.fp, fn_: r.fn_, oe: r.oe, pcc: r.pcc, kc: r.kc };
        Ok(())
    })
}
