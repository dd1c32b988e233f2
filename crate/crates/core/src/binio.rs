//! Little-endian primitives shared by the binary file formats.

use std::io::{Read, Write};

use crate::{Error, Result, C64};

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_c64<W: Write>(w: &mut W, v: C64) -> Result<()> {
    put_f64(w, v.re)?;
    put_f64(w, v.im)
}

pub(crate) fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn get_c64<R: Read>(r: &mut R) -> Result<C64> {
    Ok(C64::new(get_f64(r)?, get_f64(r)?))
}

pub(crate) fn get_str<R: Read>(r: &mut R, max: usize) -> Result<String> {
    let len = get_usize(r)?;
    if len > max {
        return Err(Error::Format(format!("string of {len} bytes exceeds the {max}-byte limit")));
    }
    let mut b = vec![0u8; len];
    r.read_exact(&mut b).map_err(truncated)?;
    String::from_utf8(b).map_err(|_| Error::Format("string is not valid UTF-8".into()))
}

pub(crate) fn get_usize<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(get_u64(r)?).map_err(|_| Error::Format("size does not fit in usize".into()))
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    if &b != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&b),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

/// Guards allocation sizes read from untrusted headers.
pub(crate) fn checked_len(rows: usize, cols: usize, limit: usize) -> Result<usize> {
    rows.checked_mul(cols)
        .filter(|&n| n <= limit)
        .ok_or_else(|| Error::Format(format!("declared size {rows} × {cols} is implausibly large")))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file ends early".into())
    } else {
        Error::Io(e)
    }
}
