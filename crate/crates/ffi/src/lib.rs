//! C interface to the Re-Pair compressor.
//!
//! Results come back in opaque [`RpBuffer`] handles that the caller frees
//! with [`rp_buffer_free`]. Every entry point returns an [`RpStatus`]; the
//! text of the most recent failure on the calling thread is available from
//! [`rp_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use repair::archive;
use repair::compress::{compress_with, CompressConfig};
use repair::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    /// A null pointer or out-of-range parameter.
    InvalidArgument = 1,
    EmptyInput = 2,
    /// The input is longer than the compressor supports.
    TooLarge = 3,
    /// The archive is damaged, truncated, or not an archive.
    Corrupt = 4,
    Checksum = 5,
    /// An internal invariant failed; please report it.
    Internal = 6,
}

/// Bytes owned by the library.
pub struct RpBuffer {
    data: Vec<u8>,
}

/// Size accounting of an archive, as reported by [`rp_stats`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RpStats {
    pub n: u64,
    pub sigma: u32,
    /// Rules in the grammar.
    pub d: u64,
    /// Length of the final text.
    pub t: u64,
    /// Distinct substitution frequencies, or -1 when not recorded.
    pub m: i64,
    /// Monotone runs in the grammar encoding.
    pub runs: u64,
    pub grammar_bits: u64,
    pub text_bits: u64,
    pub encoded_bits: u64,
    pub lower_bound_bits: f64,
    /// Encoded size over the lower bound, in percent.
    pub rate: f64,
    pub archive_bytes: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RpStatus {
    match e {
        Error::EmptyInput => RpStatus::EmptyInput,
        Error::Capacity { .. } => RpStatus::TooLarge,
        Error::Config(_) | Error::Alphabet { .. } => RpStatus::InvalidArgument,
        Error::Checksum { .. } => RpStatus::Checksum,
        Error::Truncated | Error::Corrupt(_) | Error::BadMagic | Error::BadVersion(_) | Error::Grammar(_) => {
            RpStatus::Corrupt
        }
        Error::Position(_) | Error::Contract(_) | Error::Io(_) => RpStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RpStatus, String)>) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside the library".into());
            RpStatus::Internal
        }
    }
}

fn fail(e: Error) -> (RpStatus, String) {
    (status_of(&e), e.to_string())
}

fn invalid(msg: &str) -> (RpStatus, String) {
    (RpStatus::InvalidArgument, msg.to_string())
}

/// # Safety
/// `data` must point to `len` readable bytes, or be null with `len == 0`.
unsafe fn input<'a>(data: *const u8, len: usize) -> Result<&'a [u8], (RpStatus, String)> {
    if data.is_null() {
        return if len == 0 { Ok(&[]) } else { Err(invalid("data is null")) };
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn hand_out(bytes: Vec<u8>, out: *mut *mut RpBuffer) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(RpBuffer { data: bytes })) };
}

/// Compresses `len` bytes at `data` into an archive. `epsilon` sizes the
/// low-frequency queue as a fraction of the input, in (0, 1]; pass 0 for
/// the default. On success `*out` receives a new buffer.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_compress(data: *const u8, len: usize, epsilon: f64, out: *mut *mut RpBuffer) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let input = input(data, len)?;
        let mut config = CompressConfig::default();
        if epsilon != 0.0 {
            config.epsilon = epsilon;
        }
        let c = compress_with(input, &config).map_err(fail)?;
        let bytes = archive::to_bytes(&c.grammar, &c.final_text, len as u64).map_err(fail)?;
        hand_out(bytes, out);
        Ok(())
    })
}

/// Restores the original bytes from an archive.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_decompress(data: *const u8, len: usize, out: *mut *mut RpBuffer) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let bytes = archive::decompress(input(data, len)?).map_err(fail)?;
        hand_out(bytes, out);
        Ok(())
    })
}

/// Fills `*out` with the size accounting of an archive.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_stats(data: *const u8, len: usize, out: *mut RpStats) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let s = archive::stats(input(data, len)?).map_err(fail)?;
        *out = RpStats {
            n: s.n,
            sigma: s.sigma,
            d: s.d,
            t: s.t,
            m: s.m.map_or(-1, |m| m as i64),
            runs: s.runs,
            grammar_bits: s.grammar_bits,
            text_bits: s.text_bits,
            encoded_bits: s.encoded_bits,
            lower_bound_bits: s.lower_bound_bits,
            rate: s.rate,
            archive_bytes: s.archive_bytes,
        };
        Ok(())
    })
}

/// Start of the buffer's bytes; valid until the buffer is freed.
///
/// # Safety
/// `buf` must be null or a live buffer from this library.
#[no_mangle]
pub unsafe extern "C" fn rp_buffer_data(buf: *const RpBuffer) -> *const u8 {
    buf.as_ref().map_or(ptr::null(), |b| b.data.as_ptr())
}

/// # Safety
/// `buf` must be null or a live buffer from this library.
#[no_mangle]
pub unsafe extern "C" fn rp_buffer_len(buf: *const RpBuffer) -> usize {
    buf.as_ref().map_or(0, |b| b.data.len())
}

/// Releases a buffer. Null is ignored.
///
/// # Safety
/// `buf` must be null or a buffer from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rp_buffer_free(buf: *mut RpBuffer) {
    if !buf.is_null() {
        drop(Box::from_raw(buf));
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn rp_status_message(status: RpStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        RpStatus::Ok => b"ok\0",
        RpStatus::InvalidArgument => b"invalid argument\0",
        RpStatus::EmptyInput => b"input is empty\0",
        RpStatus::TooLarge => b"input too large\0",
        RpStatus::Corrupt => b"corrupt archive\0",
        RpStatus::Checksum => b"checksum mismatch\0",
        RpStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
