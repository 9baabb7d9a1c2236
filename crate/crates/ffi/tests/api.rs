use std::ffi::CStr;
use std::ptr;

use repair_ffi::*;

fn owned(buf: *mut RpBuffer) -> Vec<u8> {
    unsafe {
        let v = std::slice::from_raw_parts(rp_buffer_data(buf), rp_buffer_len(buf)).to_vec();
        rp_buffer_free(buf);
        v
    }
}

fn compress(data: &[u8]) -> Vec<u8> {
    let mut out = ptr::null_mut();
    let status = unsafe { rp_compress(data.as_ptr(), data.len(), 0.0, &mut out) };
    assert_eq!(status, RpStatus::Ok);
    owned(out)
}

fn last_error() -> String {
    let p = rp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn roundtrip() {
    let data = b"she sells sea shells by the sea shore, the shells she sells".repeat(40);
    let archive = compress(&data);
    assert!(archive.len() < data.len());

    let mut out = ptr::null_mut();
    let status = unsafe { rp_decompress(archive.as_ptr(), archive.len(), &mut out) };
    assert_eq!(status, RpStatus::Ok);
    assert_eq!(owned(out), data);
}

#[test]
fn stats_match_the_archive() {
    let data = b"abracadabra ".repeat(100);
    let archive = compress(&data);
    let mut s = RpStats::default();
    assert_eq!(unsafe { rp_stats(archive.as_ptr(), archive.len(), &mut s) }, RpStatus::Ok);
    assert_eq!(s.n, data.len() as u64);
    assert_eq!(s.archive_bytes, archive.len() as u64);
    assert!(s.d > 0 && s.m >= 1);
    assert!(s.rate > 0.0 && s.lower_bound_bits > 0.0);
}

#[test]
fn epsilon_is_checked() {
    let data = b"abcabc";
    let mut out = ptr::null_mut();
    for eps in [-0.5, 2.0, f64::NAN] {
        let status = unsafe { rp_compress(data.as_ptr(), data.len(), eps, &mut out) };
        assert_eq!(status, RpStatus::InvalidArgument, "{eps}");
        assert!(out.is_null());
    }
    let status = unsafe { rp_compress(data.as_ptr(), data.len(), 0.5, &mut out) };
    assert_eq!(status, RpStatus::Ok);
    unsafe { rp_buffer_free(out) };
}

#[test]
fn bad_arguments() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(rp_compress(ptr::null(), 4, 0.0, &mut out), RpStatus::InvalidArgument);
        assert_eq!(last_error(), "data is null");
        assert_eq!(rp_compress(b"ab".as_ptr(), 2, 0.0, ptr::null_mut()), RpStatus::InvalidArgument);
        assert_eq!(rp_compress(ptr::null(), 0, 0.0, &mut out), RpStatus::EmptyInput);
        assert_eq!(rp_stats(b"ab".as_ptr(), 2, ptr::null_mut()), RpStatus::InvalidArgument);
        assert!(rp_buffer_data(ptr::null()).is_null());
        assert_eq!(rp_buffer_len(ptr::null()), 0);
        rp_buffer_free(ptr::null_mut());
    }
}

#[test]
fn damaged_archives() {
    let mut out = ptr::null_mut();
    let junk = b"definitely not an archive, but long enough to hold a header";
    let status = unsafe { rp_decompress(junk.as_ptr(), junk.len(), &mut out) };
    assert_eq!(status, RpStatus::Corrupt);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let mut archive = compress(&b"banana bandana ".repeat(30));
    let last = archive.len() - 1;
    archive[last] ^= 0x10;
    let status = unsafe { rp_decompress(archive.as_ptr(), archive.len(), &mut out) };
    assert_eq!(status, RpStatus::Checksum);

    let status = unsafe { rp_decompress(archive.as_ptr(), 10, &mut out) };
    assert_eq!(status, RpStatus::Corrupt);
}

#[test]
fn status_messages() {
    for s in [
        RpStatus::Ok,
        RpStatus::InvalidArgument,
        RpStatus::EmptyInput,
        RpStatus::TooLarge,
        RpStatus::Corrupt,
        RpStatus::Checksum,
        RpStatus::Internal,
    ] {
        let m = unsafe { CStr::from_ptr(rp_status_message(s)) };
        assert!(!m.to_bytes().is_empty());
    }
}
