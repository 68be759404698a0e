use std::ffi::{CStr, CString};
use std::ptr;

use occlab_ffi::*;

fn new_cache(design: OcclabDesign) -> *mut OcclabCache {
    let mut h = ptr::null_mut();
    let s = unsafe { occlab_cache_new(design, OcclabPolicy::Random, 1 << 20, 5, &mut h) };
    assert_eq!(s, OcclabStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn access_then_hit() {
    let h = new_cache(OcclabDesign::Mirage);
    let mut r = OcclabAccessResult::default();
    unsafe {
        assert_eq!(occlab_cache_access(h, 0x4000, 1, false, &mut r), OcclabStatus::Ok);
        assert!(!r.hit);
        assert_eq!(r.eviction, OcclabEviction::ColdFill);
        assert_eq!(r.cost, 103);
        assert_eq!(occlab_cache_access(h, 0x4000, 1, true, &mut r), OcclabStatus::Ok);
        assert!(r.hit);
        let mut n = 0;
        assert_eq!(occlab_cache_lines_of(h, 1, &mut n), OcclabStatus::Ok);
        assert_eq!(n, 1);
        let mut st = OcclabStats::default();
        assert_eq!(occlab_cache_stats(h, &mut st), OcclabStatus::Ok);
        assert_eq!((st.accesses, st.hits, st.misses, st.coldfill), (2, 1, 1, 1));
        assert_eq!(occlab_cache_flush(h), OcclabStatus::Ok);
        assert_eq!(occlab_cache_lines_of(h, 1, &mut n), OcclabStatus::Ok);
        assert_eq!(n, 0);
        occlab_cache_free(h);
    }
}

#[test]
fn prefill_reaches_gle() {
    let h = new_cache(OcclabDesign::Mirage);
    let mut r = OcclabAccessResult::default();
    unsafe {
        assert_eq!(occlab_cache_prefill(h, 1), OcclabStatus::Ok);
        assert_eq!(occlab_cache_access(h, 0x4000, 0, false, &mut r), OcclabStatus::Ok);
        assert_eq!(r.eviction, OcclabEviction::Gle);
        assert_ne!(r.victim_domain, 0);
        occlab_cache_free(h);
    }
}

#[test]
fn null_handles_rejected() {
    unsafe {
        assert_eq!(occlab_cache_access(ptr::null_mut(), 0, 0, false, ptr::null_mut()), OcclabStatus::NullPointer);
        assert_eq!(occlab_cache_new(OcclabDesign::Mirage, OcclabPolicy::Fifo, 1 << 20, 0, ptr::null_mut()), OcclabStatus::NullPointer);
        assert!(!occlab_last_error().is_null());
        occlab_cache_free(ptr::null_mut());
        occlab_string_free(ptr::null_mut());
    }
}

#[test]
fn ciphers() {
    let mut ct = 0u64;
    unsafe {
        assert_eq!(occlab_present_encrypt([0u8; 10].as_ptr(), 0, &mut ct), OcclabStatus::Ok);
    }
    assert_eq!(ct, 0x5579_C138_7B22_8445);

    let key: [u8; 16] = core::array::from_fn(|i| i as u8);
    let pt: [u8; 16] = core::array::from_fn(|i| (i as u8) * 0x11);
    let mut out = [0u8; 16];
    unsafe {
        assert_eq!(occlab_aes128_encrypt(key.as_ptr(), pt.as_ptr(), out.as_mut_ptr()), OcclabStatus::Ok);
    }
    assert_eq!(out, [0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a]);
}

#[test]
fn run_config_text() {
    let dir = std::env::temp_dir().join(format!("occlab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("t.trace");
    std::fs::write(&trace, "L 0x100\nL 0x100\n").unwrap();
    let text = format!(
        "[cache]\ndesign = scattercache\nllc_bytes = 1048576\n[experiment]\nkind = bench\nwarmup = none\n[bench]\ntrace = {}\n",
        trace.display()
    );
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(occlab_run_config(c.as_ptr(), &mut out), OcclabStatus::Ok);
        let s = CStr::from_ptr(out).to_str().unwrap().to_owned();
        occlab_string_free(out);
        assert!(s.ends_with("accesses,hits,misses,sae,gle,coldfill,setfill\n2,1,1,0,0,0,1\n"), "{s}");
    }
    let bad = CString::new("[experiment]\nkind = nothing\n").unwrap();
    unsafe {
        assert_eq!(occlab_run_config(bad.as_ptr(), &mut out), OcclabStatus::InvalidArgument);
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/occlab.h")).unwrap();
    for sym in ["occlab_cache_new", "occlab_cache_free", "occlab_run_config", "typedef struct OcclabCache OcclabCache", "OCCLAB_STATUS_OK"] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(occlab_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
