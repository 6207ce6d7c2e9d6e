//! The `SORC1` binary stack container.
//!
//! Layout, little-endian throughout:
//!
//! | bytes     | content                                  |
//! |-----------|------------------------------------------|
//! | 4         | magic `S O R C`                          |
//! | 2         | `u16` version, always 1                  |
//! | 2         | `u16` reserved, always 0                 |
//! | 4 + 4 + 4 | `u32` height, width, channel count       |
//! | 8 Z       | `f64` m/z values                         |
//! | H W       | `u8` mask, row-major, 1 = spectral       |
//! | 8 Z H W   | `f64` intensities, one row-major plane per channel |

use std::fs;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

use crate::stack::{MassChannelStack, Plane, SpectralMask, StackError};

pub const MAGIC: [u8; 4] = *b"SORC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic bytes {found:02x?} at offset 0")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported container version {version} at offset 4")]
    UnsupportedVersion { version: u16 },
    #[error("malformed header at offset {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("payload truncated at offset {offset}: need {needed} bytes, file has {available}")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{extra} trailing bytes after payload end at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("invalid mask byte {value} at offset {offset}")]
    InvalidMaskByte { offset: usize, value: u8 },
    #[error("stack invariant violated: {0}")]
    Invariant(#[from] StackError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Exact size in bytes of the container for the given dimensions.
pub fn container_len(height: usize, width: usize, channels: usize) -> usize {
    HEADER_LEN + 8 * channels + height * width + 8 * channels * height * width
}

pub fn encode(stack: &MassChannelStack) -> Vec<u8> {
    let (h, w, z) = (stack.height(), stack.width(), stack.channels());
    let mut out = Vec::with_capacity(container_len(h, w, z));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    for dim in [h, w, z] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for mz in stack.mz_values() {
        out.extend_from_slice(&mz.to_le_bytes());
    }
    out.extend(stack.mask().bits().iter().map(|&b| u8::from(b)));
    for plane in stack.planes() {
        for v in plane.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let end = self.offset.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.offset..end];
                self.offset = end;
                Ok(s)
            }
            None => Err(ContainerError::Truncated {
                offset: self.offset,
                needed: n,
                available: self.bytes.len(),
            }),
        }
    }

    fn u16(&mut self) -> Result<u16, ContainerError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ContainerError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<MassChannelStack, ContainerError> {
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(ContainerError::BadMagic {
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    let mut r = Reader { bytes, offset: 4 };
    let version = r.u16()?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion { version });
    }
    let reserved = r.u16()?;
    if reserved != 0 {
        return Err(ContainerError::MalformedHeader {
            offset: 6,
            reason: format!("reserved field is {reserved}, expected 0"),
        });
    }
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let z = r.u32()? as usize;
    for (offset, name, value) in [(8, "height", h), (12, "width", w), (16, "channel count", z)] {
        if value == 0 {
            return Err(ContainerError::MalformedHeader {
                offset,
                reason: format!("{name} is zero"),
            });
        }
    }

    // Validate the total length up front so absurd headers fail before allocating.
    let expected = h
        .checked_mul(w)
        .and_then(|hw| hw.checked_mul(z))
        .and_then(|hwz| hwz.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN + 8 * z + h * w));
    match expected {
        Some(len) if len < bytes.len() => {
            return Err(ContainerError::TrailingBytes {
                offset: len,
                extra: bytes.len() - len,
            })
        }
        Some(len) if len > bytes.len() => {
            // Report where the first short section starts.
            let mut probe = r;
            probe.take(8 * z)?;
            probe.take(h * w)?;
            probe.take(8 * h * w * z)?;
            unreachable!("length check and section reads disagree");
        }
        None => {
            return Err(ContainerError::MalformedHeader {
                offset: 8,
                reason: "dimensions overflow".into(),
            })
        }
        _ => {}
    }

    let mz: Vec<f64> = (0..z).map(|_| r.f64()).collect::<Result<_, _>>()?;
    let mask_offset = r.offset;
    let mask_bytes = r.take(h * w)?;
    let mut bits = Array2::from_elem((h, w), false);
    for (k, &b) in mask_bytes.iter().enumerate() {
        bits[(k / w, k % w)] = match b {
            0 => false,
            1 => true,
            value => {
                return Err(ContainerError::InvalidMaskByte {
                    offset: mask_offset + k,
                    value,
                })
            }
        };
    }
    let mask = SpectralMask::new(bits)?;
    let mut planes = Vec::with_capacity(z);
    for _ in 0..z {
        let raw = r.take(8 * h * w)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        planes.push(Plane::from_shape_vec((h, w), values).expect("exact plane length"));
    }
    Ok(MassChannelStack::new(mz, mask, planes)?)
}

pub fn load_stack(path: impl AsRef<Path>) -> Result<MassChannelStack, ContainerError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

pub fn save_stack(stack: &MassChannelStack, path: impl AsRef<Path>) -> Result<(), ContainerError> {
    let path = path.as_ref();
    fs::write(path, encode(stack)).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn minimal() -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"SORC");
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&0u16.to_le_bytes());
        for d in [1u32, 1, 1] {
            b.extend_from_slice(&d.to_le_bytes());
        }
        b.extend_from_slice(&123.4f64.to_le_bytes());
        b.push(1);
        b.extend_from_slice(&0.5f64.to_le_bytes());
        b
    }

    #[test]
    fn minimal_container_loads() {
        let s = decode(&minimal()).unwrap();
        assert_eq!((s.height(), s.width(), s.channels()), (1, 1, 1));
        assert_eq!(s.mask().count(), 1);
        assert_eq!(s.plane(0)[(0, 0)], 0.5);
        assert_eq!(encode(&s), minimal());
    }

    #[test]
    fn masked_out_intensity_is_rejected() {
        let mut b = minimal();
        b[HEADER_LEN + 8] = 0; // mask says (0,0) is not spectral
        // An all-false mask fails first; use a 1x2 image to isolate the zero rule.
        assert!(matches!(decode(&b), Err(ContainerError::Invariant(StackError::EmptyMask))));

        let mask = SpectralMask::new(array![[false, true]]).unwrap();
        let ok = MassChannelStack::new(vec![1.0], mask, vec![array![[0.0, 0.7]]]).unwrap();
        let mut bytes = encode(&ok);
        let plane_start = HEADER_LEN + 8 + 2;
        bytes[plane_start..plane_start + 8].copy_from_slice(&0.3f64.to_le_bytes());
        match decode(&bytes) {
            Err(ContainerError::Invariant(StackError::MaskedNonZero { channel: 0, i: 0, j: 0, .. })) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_errors() {
        let mut b = minimal();
        b[0] = b'X';
        assert!(matches!(decode(&b), Err(ContainerError::BadMagic { .. })));
        let mut b = minimal();
        b[4] = 2;
        assert!(matches!(decode(&b), Err(ContainerError::UnsupportedVersion { version: 2 })));
        let b = minimal();
        match decode(&b[..b.len() - 3]) {
            Err(ContainerError::Truncated { offset, needed, .. }) => {
                assert_eq!(offset, HEADER_LEN + 8 + 1);
                assert_eq!(needed, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut b = minimal();
        b.push(0);
        assert!(matches!(decode(&b), Err(ContainerError::TrailingBytes { extra: 1, .. })));
        let mut b = minimal();
        b[HEADER_LEN + 8] = 7;
        assert!(matches!(decode(&b), Err(ContainerError::InvalidMaskByte { value: 7, .. })));
        assert!(matches!(decode(&b[..10]), Err(ContainerError::Truncated { offset: 8, .. })));
    }
}
