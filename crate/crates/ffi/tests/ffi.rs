use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ddnet_ffi::*;

fn last_error() -> String {
    let p = ddnet_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn raster_round_trip_through_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let path = cpath(&dir.path().join("a.pgm"));
    let px = [0.0, 10.0, 300.0, 65535.0, 7.0, 1.0];
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(ddnet_raster_new(3, 2, px.as_ptr(), &mut r), DdnetStatus::Ok);
        assert!(ddnet_last_error().is_null());
        assert_eq!((ddnet_raster_width(r), ddnet_raster_height(r)), (3, 2));
        assert_eq!(ddnet_raster_save_pgm(r, path.as_ptr()), DdnetStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ddnet_raster_load_pgm(path.as_ptr(), &mut back), DdnetStatus::Ok);
        assert_eq!(ddnet_raster_width(back), 3);
        ddnet_raster_free(r);
        ddnet_raster_free(back);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(ddnet_raster_new(2, 2, ptr::null(), &mut r), DdnetStatus::NullPointer);
        assert!(last_error().contains("pixels"));
        let bad = [1.0, -1.0];
        assert_eq!(ddnet_raster_new(2, 1, bad.as_ptr(), &mut r), DdnetStatus::InvalidArgument);
        assert!(r.is_null());
        let missing = CString::new("/nonexistent/x.pgm").unwrap();
        assert_eq!(ddnet_raster_load_pgm(missing.as_ptr(), &mut r), DdnetStatus::Io);
        assert!(last_error().contains("nonexistent"));
        let mut cfg = ddnet_train_config_default();
        cfg.mode = 9;
        let mut m = ptr::null_mut();
        assert_eq!(ddnet_train(ptr::null(), ptr::null(), ptr::null(), &cfg, &mut m), DdnetStatus::NullPointer);
        // Freeing null is a no-op.
        ddnet_raster_free(ptr::null_mut());
        ddnet_model_free(ptr::null_mut());
        ddnet_changemap_free(ptr::null_mut());
        ddnet_trimap_free(ptr::null_mut());
    }
}

#[test]
fn pipeline_through_the_c_api() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let (mut i1, mut i2, mut truth) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(ddnet_synth_default(3, &mut i1, &mut i2, &mut truth), DdnetStatus::Ok);
        let mut tri = ptr::null_mut();
        assert_eq!(ddnet_preclassify(i1, i2, &mut tri), DdnetStatus::Ok);
        let mut total = 0;
        for class in 0..3 {
            let mut n = 0;
            assert_eq!(ddnet_trimap_count(tri, class, &mut n), DdnetStatus::Ok);
            total += n;
        }
        assert_eq!(total, 128 * 128);
        let mut n = 0;
        assert_eq!(ddnet_trimap_count(tri, 7, &mut n), DdnetStatus::InvalidArgument);

        let mut cfg = ddnet_train_config_default();
        cfg.epochs = 2;
        cfg.seed = 3;
        let mut model = ptr::null_mut();
        assert_eq!(ddnet_train(i1, i2, tri, &cfg, &mut model), DdnetStatus::Ok);
        let ckpt = cpath(&dir.path().join("model.bin"));
        assert_eq!(ddnet_model_save(model, ckpt.as_ptr()), DdnetStatus::Ok);
        let mut reloaded = ptr::null_mut();
        assert_eq!(ddnet_model_load(ckpt.as_ptr(), &mut reloaded), DdnetStatus::Ok);

        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ddnet_infer(i1, i2, tri, model, &mut a), DdnetStatus::Ok);
        assert_eq!(ddnet_infer(i1, i2, tri, reloaded, &mut b), DdnetStatus::Ok);
        let (w, h) = (ddnet_changemap_width(a), ddnet_changemap_height(a));
        assert_eq!((w, h), (128, 128));
        let mut bits_a = vec![0u8; w * h];
        let mut bits_b = vec![0u8; w * h];
        assert_eq!(ddnet_changemap_copy(a, bits_a.as_mut_ptr(), bits_a.len()), DdnetStatus::Ok);
        assert_eq!(ddnet_changemap_copy(b, bits_b.as_mut_ptr(), bits_b.len()), DdnetStatus::Ok);
        assert_eq!(bits_a, bits_b);
        assert_eq!(ddnet_changemap_copy(a, bits_a.as_mut_ptr(), 5), DdnetStatus::InvalidArgument);

        let mut m = DdnetMetrics::default();
        assert_eq!(ddnet_score(a, truth, &mut m), DdnetStatus::Ok);
        assert_eq!(m.tp + m.tn + m.fp + m.fn_, (w * h) as u64);
        assert_eq!(m.oe, m.fp + m.fn_);

        // Same result as the Rust API with the same configuration.
        let (r1, r2, _) = ddnet::synthgen::generate(&ddnet::synthgen::SceneSpec::default_scene(3)).unwrap();
        let t = ddnet::preclassify::hierarchical_trimap(&ddnet::imagery::log_ratio(&r1, &r2).unwrap()).unwrap();
        let rc = ddnet::trainer::TrainConfig { epochs: 2, seed: 3, ..Default::default() };
        let samples = ddnet::preclassify::draw_samples(&t, &r1, &r2, rc.r, rc.sample_fraction, rc.seed).unwrap();
        let (p, _) = ddnet::trainer::train(&samples, &rc).unwrap();
        assert_eq!(ddnet::trainer::infer_map(&r1, &r2, &t, &p).unwrap().bits(), bits_a.as_slice());

        for r in [i1, i2] {
            ddnet_raster_free(r);
        }
        ddnet_trimap_free(tri);
        ddnet_model_free(model);
        ddnet_model_free(reloaded);
        for c in [truth, a, b] {
            ddnet_changemap_free(c);
        }
    }
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ddnet.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for name in ["ddnet_last_error", "ddnet_raster_new", "ddnet_train", "ddnet_infer", "ddnet_score", "DDNET_STATUS_OK"]
    {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Only checked when a C compiler is on PATH.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
