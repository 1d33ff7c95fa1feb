//! Little-endian primitives and variable-byte integers shared by the binary
//! file formats.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_u16(w: &mut impl Write, v: u16) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_f32(w: &mut impl Write, v: f32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_array<const N: usize>(r: &mut impl Read, kind: &'static str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::format(kind, "unexpected end of file")
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

pub(crate) fn read_u8(r: &mut impl Read, kind: &'static str) -> Result<u8> {
    Ok(read_array::<1>(r, kind)?[0])
}

pub(crate) fn read_u16(r: &mut impl Read, kind: &'static str) -> Result<u16> {
    Ok(u16::from_le_bytes(read_array(r, kind)?))
}

pub(crate) fn read_u32(r: &mut impl Read, kind: &'static str) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r, kind)?))
}

pub(crate) fn read_u64(r: &mut impl Read, kind: &'static str) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r, kind)?))
}

pub(crate) fn read_f32(r: &mut impl Read, kind: &'static str) -> Result<f32> {
    Ok(f32::from_le_bytes(read_array(r, kind)?))
}

pub(crate) fn read_f64(r: &mut impl Read, kind: &'static str) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r, kind)?))
}

/// Reads and checks a 4-byte magic followed by a `u32` format version.
pub(crate) fn read_header(
    r: &mut impl Read,
    kind: &'static str,
    magic: &[u8; 4],
    version: u32,
) -> Result<()> {
    let got: [u8; 4] = read_array(r, kind)?;
    if &got != magic {
        return Err(Error::format(kind, format!("bad magic {got:?}")));
    }
    let v = read_u32(r, kind)?;
    if v != version {
        return Err(Error::format(kind, format!("unsupported version {v}")));
    }
    Ok(())
}

pub(crate) fn write_header(w: &mut impl Write, magic: &[u8; 4], version: u32) -> io::Result<()> {
    w.write_all(magic)?;
    write_u32(w, version)
}

/// Fails if the reader still has bytes left.
pub(crate) fn expect_eof(r: &mut impl Read, kind: &'static str) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::format(kind, "trailing bytes")),
    }
}

/// Appends `value` as a variable-byte integer: 7 payload bits per byte,
/// least-significant group first, high bit set on every byte but the last.
pub fn vbyte_encode(mut value: u32, out: &mut Vec<u8>) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Decodes one variable-byte integer starting at `*pos`, advancing `*pos`.
pub fn vbyte_decode(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let mut value: u64 = 0;
    let mut shift = 0;
    loop {
        let Some(&byte) = bytes.get(*pos) else {
            return Err(Error::format("vbyte", "truncated integer"));
        };
        *pos += 1;
        value |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            break;
        }
        shift += 7;
        if shift > 28 {
            return Err(Error::format("vbyte", "integer overflows u32"));
        }
    }
    u32::try_from(value).map_err(|_| Error::format("vbyte", "integer overflows u32"))
}

/// Delta + variable-byte encoding of a strictly increasing id list.
pub fn encode_deltas(ids: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(ids.len());
    let mut prev = 0u32;
    for (i, &id) in ids.iter().enumerate() {
        let gap = if i == 0 { id } else { id - prev };
        vbyte_encode(gap, &mut out);
        prev = id;
    }
    out
}

pub fn decode_deltas(bytes: &[u8], count: usize) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    let mut pos = 0;
    let mut prev = 0u32;
    for i in 0..count {
        let gap = vbyte_decode(bytes, &mut pos)?;
        let id = if i == 0 {
            gap
        } else {
            if gap == 0 {
                return Err(Error::format("vbyte", "doc ids not strictly increasing"));
            }
            prev.checked_add(gap)
                .ok_or_else(|| Error::format("vbyte", "doc id overflow"))?
        };
        out.push(id);
        prev = id;
    }
    if pos != bytes.len() {
        return Err(Error::format("vbyte", "trailing bytes in postings"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vbyte_known_encodings() {
        let mut out = Vec::new();
        vbyte_encode(0, &mut out);
        vbyte_encode(127, &mut out);
        vbyte_encode(128, &mut out);
        vbyte_encode(300, &mut out);
        assert_eq!(out, vec![0x00, 0x7f, 0x80, 0x01, 0xac, 0x02]);
    }

    #[test]
    fn truncated_vbyte_is_an_error() {
        let mut pos = 0;
        assert!(vbyte_decode(&[0x80], &mut pos).is_err());
    }

    proptest! {
        #[test]
        fn deltas_round_trip(mut ids in proptest::collection::btree_set(any::<u32>(), 0..200)) {
            let ids: Vec<u32> = std::mem::take(&mut ids).into_iter().collect();
            let bytes = encode_deltas(&ids);
            prop_assert_eq!(decode_deltas(&bytes, ids.len()).unwrap(), ids);
        }
    }
}
