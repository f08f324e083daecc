//! C ABI over `fpauth`.
//!
//! Keys, images and tamper masks are opaque heap handles owned by the caller
//! and released with the matching `*_free` function. Every fallible function
//! returns an [`FpaStatus`]; on failure a description is kept per thread and
//! can be fetched with [`fpa_last_error_message`]. Output pointers are only
//! written on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fpauth::imageio::{read_image, write_image, ImageFormat};
use fpauth::{AuthKey, GrayImage, ScanMode, TamperMask};

/// Secret authentication key.
pub struct FpaKey(AuthKey);

/// 8-bit grayscale image, row-major.
pub struct FpaImage(GrayImage);

/// Per-pixel verification verdicts.
pub struct FpaMask(TamperMask);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    NoFixedPoint = 5,
    DimensionMismatch = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpaScanMode {
    CausalForward = 0,
    CausalBackward = 1,
}

fn scan_mode(raw: u32) -> Result<ScanMode, Failure> {
    match raw {
        x if x == FpaScanMode::CausalForward as u32 => Ok(ScanMode::CausalForward),
        x if x == FpaScanMode::CausalBackward as u32 => Ok(ScanMode::CausalBackward),
        _ => Err(Failure::new(
            FpaStatus::InvalidArgument,
            format!("unknown scan mode {raw}"),
        )),
    }
}

struct Failure {
    status: FpaStatus,
    msg: String,
}

impl Failure {
    fn new(status: FpaStatus, msg: impl Into<String>) -> Self {
        Failure {
            status,
            msg: msg.into(),
        }
    }
}

impl From<fpauth::Error> for Failure {
    fn from(e: fpauth::Error) -> Self {
        use fpauth::Error as E;
        let status = match &e {
            E::KeyParse { .. } | E::Layout { .. } | E::Format { .. } => FpaStatus::Parse,
            E::NoFixedPoint { .. } => FpaStatus::NoFixedPoint,
            E::DimensionMismatch { .. } => FpaStatus::DimensionMismatch,
            E::Io(_) => FpaStatus::Io,
            _ => FpaStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> FpaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FpaStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.msg);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            FpaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(FpaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(FpaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            FpaStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(FpaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            FpaStatus::NullPointer,
            "output pointer is null",
        ));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies `bytes` plus a NUL terminator into `buf` when it fits. Returns the
/// size needed, terminator included.
unsafe fn copy_c_string(bytes: &[u8], buf: *mut c_char, len: usize) -> usize {
    let need = bytes.len() + 1;
    if !buf.is_null() && len >= need {
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    need
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated)
/// and returns the buffer size it needs; 0 when there is no error. Nothing is
/// written when `len` is too small.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fpa_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => copy_c_string(msg.as_bytes(), buf, len),
        None => 0,
    })
}

/// Parses an FPAKEY1 key from NUL-terminated text.
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_key_parse(text: *const c_char, out: *mut *mut FpaKey) -> FpaStatus {
    run(|| {
        let key = fpauth::parse_key(c_str(text, "text")?)?;
        put(out, FpaKey(key))
    })
}

/// Draws a key deterministically from `seed` with integers in `[lo, hi]`.
/// `mode` takes an [`FpaScanMode`] value.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_key_random(
    seed: u64,
    mode: u32,
    ub_h: f64,
    lo: u64,
    hi: u64,
    out: *mut *mut FpaKey,
) -> FpaStatus {
    run(|| {
        let key = fpauth::random_key(seed, scan_mode(mode)?, ub_h, lo, hi)?;
        put(out, FpaKey(key))
    })
}

/// Serializes `key` as FPAKEY1 text into `buf`. `*needed` receives the size
/// required including the NUL; `BufferTooSmall` when `len` is short.
///
/// # Safety
/// `key` must be a live handle; `buf` null or `len` writable bytes; `needed`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_key_write(
    key: *const FpaKey,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> FpaStatus {
    run(|| {
        let text = fpauth::write_key(&deref(key, "key")?.0);
        let need = copy_c_string(text.as_bytes(), buf, len);
        if !needed.is_null() {
            *needed = need;
        }
        if buf.is_null() || len < need {
            return Err(Failure::new(
                FpaStatus::BufferTooSmall,
                format!("key text needs {need} bytes, buffer has {len}"),
            ));
        }
        Ok(())
    })
}

/// # Safety
/// `key` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpa_key_free(key: *mut FpaKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Creates a `rows` x `cols` image, copying `rows * cols` bytes from `pixels`
/// or zero-filled when `pixels` is null.
///
/// # Safety
/// `pixels` must be null or point to `rows * cols` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_new(
    rows: usize,
    cols: usize,
    pixels: *const u8,
    out: *mut *mut FpaImage,
) -> FpaStatus {
    run(|| {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::new(FpaStatus::InvalidArgument, "image size overflows"))?;
        let data = if pixels.is_null() {
            vec![0; n]
        } else {
            std::slice::from_raw_parts(pixels, n).to_vec()
        };
        put(out, FpaImage(GrayImage::new(rows, cols, data)?))
    })
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_rows(img: *const FpaImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.rows())
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_cols(img: *const FpaImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.cols())
}

/// Row-major pixel buffer of `rows * cols` bytes, valid until the image is
/// freed or modified. Null for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_pixels(img: *const FpaImage) -> *const u8 {
    img.as_ref().map_or(ptr::null(), |i| i.0.pixels().as_ptr())
}

/// Sets one pixel at zero-based `(row, col)`.
///
/// # Safety
/// `img` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_set(
    img: *mut FpaImage,
    row: usize,
    col: usize,
    value: u8,
) -> FpaStatus {
    run(|| {
        let img = &mut deref_mut(img, "image")?.0;
        if row >= img.rows() || col >= img.cols() {
            return Err(Failure::new(
                FpaStatus::InvalidArgument,
                format!("({row}, {col}) outside {}x{}", img.rows(), img.cols()),
            ));
        }
        img.set(row, col, value);
        Ok(())
    })
}

/// Reads a PGM (P5) or 8-bit grayscale PNG file.
///
/// # Safety
/// `path` must be a valid C string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_read(path: *const c_char, out: *mut *mut FpaImage) -> FpaStatus {
    run(|| {
        let img = read_image(c_str(path, "path")?)?;
        put(out, FpaImage(img))
    })
}

/// Writes PNG when `path` ends in `.png`, PGM otherwise.
///
/// # Safety
/// `img` must be a live handle; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_write(img: *const FpaImage, path: *const c_char) -> FpaStatus {
    run(|| {
        let img = deref(img, "image")?;
        let path = Path::new(c_str(path, "path")?);
        write_image(&img.0, path, ImageFormat::from_path(path))?;
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpa_image_free(img: *mut FpaImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Signs `img` under `key` into a new fixed point image.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_generate(
    img: *const FpaImage,
    key: *const FpaKey,
    out: *mut *mut FpaImage,
) -> FpaStatus {
    run(|| {
        let signed = fpauth::generate(&deref(img, "image")?.0, &deref(key, "key")?.0)?;
        put(out, FpaImage(signed))
    })
}

/// Verifies `img` under `key` into a new tamper mask.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_verify(
    img: *const FpaImage,
    key: *const FpaKey,
    out: *mut *mut FpaMask,
) -> FpaStatus {
    run(|| {
        let mask = fpauth::verify(&deref(img, "image")?.0, &deref(key, "key")?.0)?;
        put(out, FpaMask(mask))
    })
}

/// Number of suspicious pixels; 0 for a null handle.
///
/// # Safety
/// `mask` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpa_mask_count(mask: *const FpaMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.count())
}

/// Whether zero-based `(row, col)` is suspicious; false when out of range.
///
/// # Safety
/// `mask` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpa_mask_get(mask: *const FpaMask, row: usize, col: usize) -> bool {
    match mask.as_ref() {
        Some(m) if row < m.0.rows() && col < m.0.cols() => m.0.get(row, col),
        _ => false,
    }
}

/// Copies the mask row-major into `buf` as 255 (suspicious) or 0.
///
/// # Safety
/// `mask` must be a live handle; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fpa_mask_copy(
    mask: *const FpaMask,
    buf: *mut u8,
    len: usize,
) -> FpaStatus {
    run(|| {
        let m = &deref(mask, "mask")?.0;
        let flags = m.flags();
        if buf.is_null() || len < flags.len() {
            return Err(Failure::new(
                FpaStatus::BufferTooSmall,
                format!("mask needs {} bytes, buffer has {len}", flags.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, flags.len());
        for (o, &f) in out.iter_mut().zip(flags) {
            *o = if f { 255 } else { 0 };
        }
        Ok(())
    })
}

/// # Safety
/// `mask` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpa_mask_free(mask: *mut FpaMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// PSNR in dB between two equally sized images; infinity when identical.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpa_psnr(
    a: *const FpaImage,
    b: *const FpaImage,
    out: *mut f64,
) -> FpaStatus {
    run(|| {
        let v = fpauth::psnr(&deref(a, "a")?.0, &deref(b, "b")?.0)?;
        *deref_mut(out, "out")? = v;
        Ok(())
    })
}
