//! VPRD: binary interchange format for descriptor sets.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "VPRD" (0x56 0x50 0x52 0x44)
//! 4       2           version = 1
//! 6       2           reserved = 0
//! 8       4           count
//! 12      4           dim
//! 16      2           label length L
//! 18      L           technique label, UTF-8
//! 18+L    4*count*dim IEEE-754 binary32 values, row-major
//! ...     count x     (u16 length + UTF-8 filename)
//! ```
//!
//! Anything else, including trailing bytes, is rejected on load.

use std::fs;
use std::path::Path;

use super::{DescriptorSet, DescriptorVector};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"VPRD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

pub fn encode(set: &DescriptorSet) -> Result<Vec<u8>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let count = u32::try_from(set.len())
        .map_err(|_| Error::InvalidParams("too many descriptors for VPRD".into()))?;
    let dim = u32::try_from(set.dim())
        .map_err(|_| Error::InvalidParams("descriptor too long for VPRD".into()))?;

    let mut out = Vec::with_capacity(HEADER_LEN + 2 + set.label.len() + set.len() * set.dim() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    put_str(&mut out, &set.label, "label")?;
    for d in set.descriptors() {
        for v in d.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for name in set.filenames() {
        put_str(&mut out, name, "filename")?;
    }
    Ok(out)
}

fn put_str(out: &mut Vec<u8>, s: &str, what: &str) -> Result<()> {
    let len = u16::try_from(s.len())
        .map_err(|_| Error::InvalidParams(format!("{what} longer than 65535 bytes")))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                Error::Truncated(format!(
                    "{what}: need {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::MalformedVprd(format!("{what} is not valid UTF-8")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<DescriptorSet> {
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut cur = Cursor { bytes, pos: 4 };
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let reserved = cur.u16("reserved")?;
    if reserved != 0 {
        return Err(Error::MalformedVprd(format!("reserved field is {reserved}")));
    }
    let count = cur.u32("count")? as usize;
    let dim = cur.u32("dim")? as usize;
    if count == 0 {
        return Err(Error::EmptySet);
    }
    if dim == 0 {
        return Err(Error::MalformedVprd("dim is 0".into()));
    }
    let label = cur.string("label")?;

    let body_len = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedVprd("count x dim overflows".into()))?;
    let body = cur.take(body_len, "descriptor body")?;
    let mut descriptors = Vec::with_capacity(count);
    for (row, chunk) in body.chunks_exact(dim * 4).enumerate() {
        let values: Vec<f32> = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let d = DescriptorVector::new(values).map_err(|e| match e {
            Error::NonFinite(col) => Error::NonFinite(row * dim + col),
            other => other,
        })?;
        descriptors.push(d);
    }

    let filenames = (0..count)
        .map(|i| cur.string(&format!("filename {i}")))
        .collect::<Result<Vec<_>>>()?;
    if cur.pos != bytes.len() {
        return Err(Error::MalformedVprd(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    DescriptorSet::new(label, None, descriptors, filenames)
}

/// Write `set` to `path`, returning the number of bytes written.
pub fn write_descriptor_file(set: &DescriptorSet, path: impl AsRef<Path>) -> Result<u64> {
    let path = path.as_ref();
    let bytes = encode(set)?;
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len() as u64)
}

pub fn load_descriptor_file(path: impl AsRef<Path>) -> Result<DescriptorSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
