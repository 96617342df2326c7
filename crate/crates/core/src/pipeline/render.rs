use std::fs;
use std::path::Path;

use crate::data::LabelMap;
use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// Index 0 (unlabeled) is black; classes 1..=16 follow.
pub const PALETTE: [Rgb; 17] = [
    [0, 0, 0],
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

/// Binary PPM (P6) bytes for a label map. `classes` overrides the built-in
/// colors for labels 1, 2, ...; unlabeled pixels stay black.
pub fn render_ppm(labels: &LabelMap, classes: Option<&[Rgb]>) -> Result<Vec<u8>> {
    let available = classes.map_or(PALETTE.len() - 1, |c| c.len());
    let k = labels.num_classes();
    if k > available {
        return Err(Error::invalid(format!(
            "{k} classes but the palette has only {available} colors; supply a palette file"
        )));
    }
    let color = |l: u32| -> Rgb {
        match (l, classes) {
            (0, _) => PALETTE[0],
            (l, Some(c)) => c[l as usize - 1],
            (l, None) => PALETTE[l as usize],
        }
    };
    let header = format!("P6\n{} {}\n255\n", labels.width(), labels.height());
    let mut out = Vec::with_capacity(header.len() + 3 * labels.pixels());
    out.extend_from_slice(header.as_bytes());
    for &l in labels.labels() {
        out.extend_from_slice(&color(l));
    }
    Ok(out)
}

pub fn write_ppm(path: impl AsRef<Path>, labels: &LabelMap, classes: Option<&[Rgb]>) -> Result<()> {
    fs::write(path, render_ppm(labels, classes)?)?;
    Ok(())
}

/// Palette text: one `r g b` triple (0..=255) per line for classes 1, 2, ...;
/// blank lines and `#` comments are skipped.
pub fn parse_palette(text: &str) -> Result<Vec<Rgb>> {
    let mut colors = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let rgb: Option<Vec<u8>> = parts.iter().map(|p| p.parse().ok()).collect();
        match rgb {
            Some(c) if c.len() == 3 => colors.push([c[0], c[1], c[2]]),
            _ => {
                return Err(Error::config(format!(
                    "palette line {}: expected three integers 0-255, got `{line}`",
                    n + 1
                )))
            }
        }
    }
    Ok(colors)
}

pub fn read_palette(path: impl AsRef<Path>) -> Result<Vec<Rgb>> {
    parse_palette(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unlabeled_pixel_is_black() {
        let m = LabelMap::new(1, 1, 1, vec![0]).unwrap();
        let bytes = render_ppm(&m, None).unwrap();
        assert_eq!(bytes, b"P6\n1 1\n255\n\0\0\0");
    }

    #[test]
    fn palette_is_distinct() {
        for i in 0..PALETTE.len() {
            for j in i + 1..PALETTE.len() {
                assert_ne!(PALETTE[i], PALETTE[j]);
            }
        }
    }

    #[test]
    fn too_many_classes() {
        let m = LabelMap::new(1, 2, 17, vec![17, 1]).unwrap();
        assert!(render_ppm(&m, None).is_err());
        let custom: Vec<Rgb> = (0..17).map(|i| [i as u8, 0, 0]).collect();
        let bytes = render_ppm(&m, Some(&custom)).unwrap();
        assert_eq!(&bytes[bytes.len() - 6..], &[16, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn palette_text() {
        assert_eq!(parse_palette("# classes\n1 2 3\n\n4 5 6 # second").unwrap(), vec![[1, 2, 3], [4, 5, 6]]);
        assert!(parse_palette("1 2").is_err());
        assert!(parse_palette("1 2 300").is_err());
    }
}
