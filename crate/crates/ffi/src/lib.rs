//! C ABI over `occlab`.
//!
//! Caches are opaque `OcclabCache *` handles from [`occlab_cache_new`],
//! released with [`occlab_cache_free`]. Every fallible call returns an
//! [`OcclabStatus`]; on failure [`occlab_last_error`] holds a message for
//! the calling thread until its next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use occlab::aesattack::AesKey;
use occlab::cachecore::{AccessKind, Cache, CacheConfig, DesignKind, Eviction};
use occlab::harness::{self, ExperimentConfig};
use occlab::randfunc::{present_encrypt, PresentKey, SecurityDomain};
use occlab::{Error, PolicyKind};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcclabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidKey = 3,
    Geometry = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcclabDesign {
    Baseline = 0,
    Ceaser = 1,
    CeaserS = 2,
    ScatterCache = 3,
    SassCache = 4,
    Mirage = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcclabPolicy {
    Random = 0,
    TreePlru = 1,
    WeightedLru = 2,
    Rrip = 3,
    Fifo = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OcclabEviction {
    #[default]
    None = 0,
    ColdFill = 1,
    Sae = 2,
    Gle = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OcclabAccessResult {
    pub hit: bool,
    pub eviction: OcclabEviction,
    /// Line address and domain of the evicted line; zero when none.
    pub victim_line: u64,
    pub victim_domain: u16,
    pub skew: u32,
    pub set: u32,
    pub cost: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OcclabStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub sae: u64,
    pub gle: u64,
    pub coldfill: u64,
    pub setfill: u64,
}

/// Opaque cache handle.
pub struct OcclabCache {
    inner: Cache,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OcclabStatus {
    match e {
        Error::InvalidKey(_) => OcclabStatus::InvalidKey,
        Error::Geometry(_) => OcclabStatus::Geometry,
        Error::Io { .. } => OcclabStatus::Io,
        Error::Parse { .. } | Error::EmptyTrace(_) | Error::Csv(_) | Error::Json(_) => OcclabStatus::Parse,
        _ => OcclabStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (OcclabStatus, String)>) -> OcclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OcclabStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside occlab".into());
            OcclabStatus::Panic
        }
    }
}

fn lift(e: Error) -> (OcclabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (OcclabStatus, String) {
    (OcclabStatus::NullPointer, format!("{what} is null"))
}

impl From<OcclabDesign> for DesignKind {
    fn from(d: OcclabDesign) -> Self {
        match d {
            OcclabDesign::Baseline => DesignKind::Baseline,
            OcclabDesign::Ceaser => DesignKind::Ceaser,
            OcclabDesign::CeaserS => DesignKind::CeaserS,
            OcclabDesign::ScatterCache => DesignKind::ScatterCache,
            OcclabDesign::SassCache => DesignKind::SassCache,
            OcclabDesign::Mirage => DesignKind::Mirage,
        }
    }
}

impl From<OcclabPolicy> for PolicyKind {
    fn from(p: OcclabPolicy) -> Self {
        match p {
            OcclabPolicy::Random => PolicyKind::Random,
            OcclabPolicy::TreePlru => PolicyKind::TreePlru,
            OcclabPolicy::WeightedLru => PolicyKind::WeightedLru,
            OcclabPolicy::Rrip => PolicyKind::Rrip,
            OcclabPolicy::Fifo => PolicyKind::Fifo,
        }
    }
}

/// Message of the calling thread's last failure, or null. Valid until the
/// next failing call on this thread.
#[no_mangle]
pub extern "C" fn occlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn occlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a cache with the design's default geometry.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_new(
    design: OcclabDesign,
    policy: OcclabPolicy,
    llc_bytes: u64,
    seed: u64,
    out: *mut *mut OcclabCache,
) -> OcclabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = CacheConfig::new(design.into())
            .with_llc_bytes(llc_bytes)
            .with_policy(policy.into())
            .with_seed(seed);
        let inner = Cache::new(cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(OcclabCache { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `cache` must come from [`occlab_cache_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_free(cache: *mut OcclabCache) {
    if !cache.is_null() {
        drop(Box::from_raw(cache));
    }
}

/// # Safety
/// `cache` must be a live handle; `out` may be null.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_access(
    cache: *mut OcclabCache,
    addr: u64,
    domain: u16,
    is_store: bool,
    out: *mut OcclabAccessResult,
) -> OcclabStatus {
    guard(|| {
        let c = cache.as_mut().ok_or_else(|| null("cache"))?;
        let kind = if is_store { AccessKind::Store } else { AccessKind::Load };
        let r = c.inner.access(addr, SecurityDomain(domain), kind);
        if let Some(o) = out.as_mut() {
            let (eviction, v) = match r.eviction {
                Eviction::None => (OcclabEviction::None, None),
                Eviction::ColdFill => (OcclabEviction::ColdFill, None),
                Eviction::Sae(v) => (OcclabEviction::Sae, Some(v)),
                Eviction::Gle(v) => (OcclabEviction::Gle, Some(v)),
            };
            *o = OcclabAccessResult {
                hit: r.hit,
                eviction,
                victim_line: v.map_or(0, |v| v.line),
                victim_domain: v.map_or(0, |v| v.domain.0),
                skew: r.skew_used as u32,
                set: r.set_used as u32,
                cost: r.cost,
            };
        }
        Ok(())
    })
}

/// # Safety
/// `cache` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_stats(cache: *const OcclabCache, out: *mut OcclabStats) -> OcclabStatus {
    guard(|| {
        let c = cache.as_ref().ok_or_else(|| null("cache"))?;
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        let s = c.inner.stats();
        *o = OcclabStats {
            accesses: s.accesses,
            hits: s.hits,
            misses: s.misses,
            sae: s.sae_count,
            gle: s.gle_count,
            coldfill: s.coldfill_count,
            setfill: s.setfill_count,
        };
        Ok(())
    })
}

/// Lines currently held by `domain`.
///
/// # Safety
/// `cache` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_lines_of(cache: *const OcclabCache, domain: u16, out: *mut u64) -> OcclabStatus {
    guard(|| {
        let c = cache.as_ref().ok_or_else(|| null("cache"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = c.inner.lines_of(SecurityDomain(domain));
        Ok(())
    })
}

/// Fills the cache with spurious lines and clears the counters.
///
/// # Safety
/// `cache` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_prefill(cache: *mut OcclabCache, seed: u64) -> OcclabStatus {
    guard(|| {
        let c = cache.as_mut().ok_or_else(|| null("cache"))?;
        harness::warm_up(&mut c.inner, harness::Warmup::Full, seed);
        Ok(())
    })
}

/// # Safety
/// `cache` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn occlab_cache_flush(cache: *mut OcclabCache) -> OcclabStatus {
    guard(|| {
        cache.as_mut().ok_or_else(|| null("cache"))?.inner.flush_all();
        Ok(())
    })
}

/// PRESENT-80 on one block. `key` is 10 bytes, most significant first.
///
/// # Safety
/// `key` must point to 10 readable bytes and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn occlab_present_encrypt(key: *const u8, block: u64, out: *mut u64) -> OcclabStatus {
    guard(|| {
        if key.is_null() {
            return Err(null("key"));
        }
        let mut k = [0u8; 10];
        ptr::copy_nonoverlapping(key, k.as_mut_ptr(), 10);
        *out.as_mut().ok_or_else(|| null("out"))? = present_encrypt(block, PresentKey::from_bytes(k));
        Ok(())
    })
}

/// AES-128 on one block with the simulator's T-table implementation.
///
/// # Safety
/// `key` and `input` must point to 16 readable bytes, `output` to 16
/// writable bytes.
#[no_mangle]
pub unsafe extern "C" fn occlab_aes128_encrypt(key: *const u8, input: *const u8, output: *mut u8) -> OcclabStatus {
    guard(|| {
        if key.is_null() || input.is_null() || output.is_null() {
            return Err(null("key, input or output"));
        }
        let mut k = [0u8; 16];
        let mut pt = [0u8; 16];
        ptr::copy_nonoverlapping(key, k.as_mut_ptr(), 16);
        ptr::copy_nonoverlapping(input, pt.as_mut_ptr(), 16);
        let ct = AesKey::new(k).encrypt(pt);
        ptr::copy_nonoverlapping(ct.as_ptr(), output, 16);
        Ok(())
    })
}

/// Runs an experiment config (file contents, not a path) and returns the
/// rendered result in `*out`, to be released with [`occlab_string_free`].
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn occlab_run_config(config_text: *const c_char, out: *mut *mut c_char) -> OcclabStatus {
    guard(|| {
        if config_text.is_null() {
            return Err(null("config_text"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let text = CStr::from_ptr(config_text)
            .to_str()
            .map_err(|e| (OcclabStatus::InvalidArgument, format!("config is not UTF-8: {e}")))?;
        let cfg = ExperimentConfig::parse(text, Path::new("<ffi>")).map_err(lift)?;
        let (_, rendered) = harness::run_and_write(&cfg).map_err(lift)?;
        *out = CString::new(rendered)
            .map_err(|e| (OcclabStatus::InvalidArgument, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn occlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_error_set_on_failure() {
        let mut h = ptr::null_mut();
        let s = unsafe { occlab_cache_new(OcclabDesign::Baseline, OcclabPolicy::Random, 1000, 0, &mut h) };
        assert_eq!(s, OcclabStatus::Geometry);
        assert!(h.is_null());
        let msg = unsafe { CStr::from_ptr(occlab_last_error()) }.to_str().unwrap();
        assert!(msg.contains("geometry"), "{msg}");
    }
}
