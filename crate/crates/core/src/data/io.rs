//! Cube and label file formats.
//!
//! Cube: `HSIC`, then `h`, `w`, `d` as little-endian u32, then `h*w*d`
//! little-endian f64 values, row-major with the band index fastest.
//!
//! Probability map: same layout with magic `PROB` and the class count in
//! place of the band count.
//!
//! Labels: plain-text CSV with `h` lines of `w` non-negative integers.

use std::fs;
use std::path::Path;

use super::{HsiCube, LabelMap, ProbMap};
use crate::error::{Error, Result};

pub const CUBE_MAGIC: &[u8; 4] = b"HSIC";
pub const PROBMAP_MAGIC: &[u8; 4] = b"PROB";
const HEADER_LEN: usize = 16;

fn encode_block(magic: &[u8; 4], dims: [usize; 3], values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 8);
    out.extend_from_slice(magic);
    for dim in dims {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_block(bytes: &[u8], magic: &[u8; 4]) -> Result<([usize; 3], Vec<f64>)> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(Error::format(
            0,
            format!("missing {} magic", String::from_utf8_lossy(magic)),
        ));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, "truncated header"));
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (h, w, d) = (dim(4), dim(8), dim(12));
    if h == 0 || w == 0 || d == 0 {
        return Err(Error::format(4, format!("zero dimension in header {h}x{w}x{d}")));
    }
    let expected = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(d))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(4, "header dimensions overflow"))?;
    if bytes.len() < expected {
        return Err(Error::format(
            bytes.len() as u64,
            format!("payload truncated, header declares {expected} bytes"),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(
            expected as u64,
            format!("{} trailing bytes after declared payload", bytes.len() - expected),
        ));
    }
    let mut values = Vec::with_capacity(h * w * d);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                (HEADER_LEN + 8 * i) as u64,
                "non-finite value",
            ));
        }
        values.push(v);
    }
    Ok(([h, w, d], values))
}

pub fn encode_cube(cube: &HsiCube) -> Vec<u8> {
    encode_block(CUBE_MAGIC, [cube.height(), cube.width(), cube.bands()], cube.values())
}

pub fn decode_cube(bytes: &[u8]) -> Result<HsiCube> {
    let ([h, w, d], values) = decode_block(bytes, CUBE_MAGIC)?;
    HsiCube::new(h, w, d, values)
}

/// Encodes a probability map laid out on an h×w grid.
pub fn encode_probmap(probmap: &ProbMap, height: usize, width: usize) -> Result<Vec<u8>> {
    if height * width != probmap.rows() {
        return Err(Error::shape(format!(
            "{height}x{width} grid does not match {} rows",
            probmap.rows()
        )));
    }
    Ok(encode_block(PROBMAP_MAGIC, [height, width, probmap.classes()], probmap.probs()))
}

/// Returns the grid height, width and the map.
pub fn decode_probmap(bytes: &[u8]) -> Result<(usize, usize, ProbMap)> {
    let ([h, w, k], values) = decode_block(bytes, PROBMAP_MAGIC)?;
    Ok((h, w, ProbMap::new(h * w, k, values)?))
}

pub fn write_probmap(path: impl AsRef<Path>, probmap: &ProbMap, height: usize, width: usize) -> Result<()> {
    fs::write(path, encode_probmap(probmap, height, width)?)?;
    Ok(())
}

pub fn read_probmap(path: impl AsRef<Path>) -> Result<(usize, usize, ProbMap)> {
    decode_probmap(&fs::read(path)?)
}

pub fn write_cube(path: impl AsRef<Path>, cube: &HsiCube) -> Result<()> {
    fs::write(path, encode_cube(cube))?;
    Ok(())
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<HsiCube> {
    decode_cube(&fs::read(path)?)
}

pub fn encode_labels(labels: &LabelMap) -> String {
    let mut out = String::with_capacity(labels.pixels() * 3);
    for row in labels.labels().chunks(labels.width()) {
        for (j, l) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&l.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn decode_labels(text: &str) -> Result<LabelMap> {
    let mut labels = Vec::new();
    let mut width = None;
    let mut height = 0;
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);
        if content.trim().is_empty() {
            continue;
        }
        let mut field_start = line_start;
        let mut count = 0;
        for field in content.split(',') {
            let value: u32 = field.trim().parse().map_err(|_| {
                Error::format(field_start as u64, format!("not a non-negative integer: {field:?}"))
            })?;
            labels.push(value);
            count += 1;
            field_start += field.len() + 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::format(
                    line_start as u64,
                    format!("row {height} has {count} columns, expected {w}"),
                ))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::format(0, "empty label file"))?;
    LabelMap::from_labels(height, width, labels)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    decode_labels(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cube_round_trip() {
        let values: Vec<f64> = (0..12).map(|i| i as f64 * 0.37 - 1.5).collect();
        let cube = HsiCube::new(2, 2, 3, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.hsic");
        write_cube(&path, &cube).unwrap();
        assert_eq!(read_cube(&path).unwrap(), cube);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let cube = HsiCube::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut bytes = encode_cube(&cube);
        let good_len = bytes.len();

        bytes.truncate(good_len - 3);
        match decode_cube(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, (good_len - 3) as u64),
            other => panic!("expected truncation error, got {other:?}"),
        }

        let mut wrong = encode_cube(&cube);
        wrong[0] = b'X';
        assert!(matches!(decode_cube(&wrong), Err(Error::Format { offset: 0, .. })));

        let mut long = encode_cube(&cube);
        long.push(0);
        assert!(matches!(decode_cube(&long), Err(Error::Format { offset, .. }) if offset == good_len as u64));
    }

    #[test]
    fn probmap_round_trip() {
        let p = ProbMap::new(2, 2, vec![0.25, 0.75, 1.0, 0.0]).unwrap();
        let bytes = encode_probmap(&p, 1, 2).unwrap();
        assert_eq!(&bytes[..4], PROBMAP_MAGIC);
        assert_eq!(decode_probmap(&bytes).unwrap(), (1, 2, p.clone()));
        assert!(encode_probmap(&p, 2, 2).is_err());
        // a cube file is not a probability map
        let cube = HsiCube::new(1, 1, 2, vec![0.5, 0.5]).unwrap();
        assert!(matches!(decode_probmap(&encode_cube(&cube)), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn label_csv() {
        let m = decode_labels("1,0\n2,2").unwrap();
        assert_eq!((m.height(), m.width()), (2, 2));
        assert_eq!(m.labels(), &[1, 0, 2, 2]);
        assert_eq!(m.class_counts()[0], 1);
        assert_eq!(encode_labels(&m), "1,0\n2,2\n");
    }

    #[test]
    fn label_csv_errors_carry_offsets() {
        match decode_labels("1,2\n3\n") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match decode_labels("1,x\n") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(decode_labels("").is_err());
    }

    proptest! {
        #[test]
        fn cube_bytes_round_trip(h in 1usize..4, w in 1usize..4, d in 1usize..4,
                                 raw in proptest::collection::vec(-1e300f64..1e300, 64)) {
            let values: Vec<f64> = raw.into_iter().cycle().take(h * w * d).collect();
            let cube = HsiCube::new(h, w, d, values).unwrap();
            let back = decode_cube(&encode_cube(&cube)).unwrap();
            prop_assert!(back.values().iter().zip(cube.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn labels_round_trip(h in 1usize..6, w in 1usize..6, raw in proptest::collection::vec(0u32..20, 36)) {
            let labels: Vec<u32> = raw.into_iter().take(h * w).collect();
            prop_assume!(labels.len() == h * w);
            let map = LabelMap::from_labels(h, w, labels).unwrap();
            prop_assert_eq!(decode_labels(&encode_labels(&map)).unwrap(), map);
        }
    }
}
