//! Binary PGM (P5) images. 8-bit samples for `maxval < 256`, otherwise
//! 16-bit big-endian. Intensities are scaled to `[0, 1]` on read.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::transforms::{centered_index, Image};

pub fn decode(bytes: &[u8]) -> Result<Image> {
    let bad = |why: &str| Error::Parse(format!("PGM: {why}"));
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let num = |s: String| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let cols = num(token()?)?;
    let rows = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval outside 1..=65535"));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = &bytes[pos + 1..];
    let wide = maxval > 255;
    let need = rows * cols * if wide { 2 } else { 1 };
    if data.len() < need {
        return Err(bad("raster shorter than header claims"));
    }
    let scale = 1.0 / maxval as f64;
    let pixels: Vec<f64> = if wide {
        data[..need]
            .chunks_exact(2)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64 * scale).min(1.0))
            .collect()
    } else {
        data[..need].iter().map(|&b| (b as f64 * scale).min(1.0)).collect()
    };
    Image::unit(rows, cols, pixels)
}

/// Encodes `pixels / peak` clamped to `[0, 1]` at the given `maxval`.
pub fn encode(image: &Image, maxval: u16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", image.cols(), image.rows(), maxval).into_bytes();
    for &p in image.pixels() {
        let v = ((p / image.peak()).clamp(0.0, 1.0) * maxval as f64).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    out
}

pub fn read(path: &Path) -> Result<Image> {
    decode(&fs::read(path)?)
}

pub fn write(path: &Path, image: &Image, maxval: u16) -> Result<()> {
    fs::write(path, encode(image, maxval))?;
    Ok(())
}

/// Mask image with DC shifted to the centre; 255 marks sampled locations.
pub fn write_mask(path: &Path, rows: usize, cols: usize, mask: &[usize]) -> Result<()> {
    let mut pixels = vec![0.0; rows * cols];
    for &k in mask {
        pixels[centered_index(rows, cols, k)] = 1.0;
    }
    write(path, &Image::unit(rows, cols, pixels)?, 255)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_and_sixteen_bit_round_trip() {
        let img = Image::unit(2, 3, vec![0.0, 1.0, 0.5, 0.25, 1.0 / 255.0, 0.75]).unwrap();
        for maxval in [255u16, 65535] {
            let back = decode(&encode(&img, maxval)).unwrap();
            assert_eq!((back.rows(), back.cols()), (2, 3));
            for (a, b) in back.pixels().iter().zip(img.pixels()) {
                assert!((a - b).abs() <= 0.5 / maxval as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn header_comments_and_big_endian() {
        let mut bytes = b"P5 # comment\n2 1\n# another\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0x00, 0xff, 0xff]);
        let img = decode(&bytes).unwrap();
        assert!((img.pixels()[0] - 256.0 / 65535.0).abs() < 1e-15);
        assert_eq!(img.pixels()[1], 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decode(b"P2\n1 1\n255\n0").is_err());
        assert!(decode(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode(b"P5\n1 1\n70000\n\x00\x00").is_err());
    }
}
