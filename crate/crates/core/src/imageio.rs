//! PGM (P5) and 8-bit grayscale PNG reading and writing, plus mask rendering.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, TamperMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    PgmP5,
    PngGray8,
}

impl ImageFormat {
    /// `.png` selects PNG; anything else is written as PGM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("png") => ImageFormat::PngGray8,
            _ => ImageFormat::PgmP5,
        }
    }
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let fail = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes).map_err(fail)
    } else if bytes.starts_with(b"P") {
        decode_pgm(&bytes).map_err(fail)
    } else {
        Err(fail("unsupported image format".into()))
    }
}

pub fn write_image(img: &GrayImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::PgmP5 => encode_pgm(img),
        ImageFormat::PngGray8 => encode_png(img).map_err(|msg| Error::Format {
            path: path.to_path_buf(),
            msg,
        })?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes the mask as a PGM: 255 at suspicious pixels, 0 elsewhere.
pub fn write_mask(mask: &TamperMask, path: impl AsRef<Path>) -> Result<()> {
    write_image(&mask_image(mask), path, ImageFormat::PgmP5)
}

pub fn mask_image(mask: &TamperMask) -> GrayImage {
    let pixels = mask
        .flags()
        .iter()
        .map(|&f| if f { 255 } else { 0 })
        .collect();
    GrayImage::new(mask.rows(), mask.cols(), pixels).expect("mask dimensions are valid")
}

/// Copy of `img` with suspicious pixels painted white.
pub fn overlay_mask(img: &GrayImage, mask: &TamperMask) -> Result<GrayImage> {
    if img.dims() != (mask.rows(), mask.cols()) {
        return Err(Error::DimensionMismatch {
            a_rows: img.rows(),
            a_cols: img.cols(),
            b_rows: mask.rows(),
            b_cols: mask.cols(),
        });
    }
    let mut out = img.clone();
    for (p, &f) in out.pixels_mut().iter_mut().zip(mask.flags()) {
        if f {
            *p = 255;
        }
    }
    Ok(out)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

/// Parses a binary PGM. Header tokens may be separated by any whitespace and
/// interleaved with `#` comments; exactly one whitespace byte follows maxval.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or("missing magic number")?;
    match magic {
        b"P5" => {}
        b"P6" | b"P3" | b"P7" => return Err("multi-channel input is not supported".into()),
        b"P2" => return Err("ASCII PGM (P2) is not supported; use P5".into()),
        _ => return Err("not a binary PGM (P5) file".into()),
    }
    let mut field = |name: &str| -> std::result::Result<usize, String> {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| format!("missing {name}"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {name}"))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval != 255 {
        return Err(format!("maxval must be 255, found {maxval}"));
    }
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    let need = width * height;
    let data = &bytes[pos..];
    if data.len() < need {
        return Err(format!(
            "truncated payload: need {need} bytes, found {}",
            data.len()
        ));
    }
    GrayImage::new(height, width, data[..need].to_vec()).map_err(|e| e.to_string())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let dynamic = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    match dynamic {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::new(h as usize, w as usize, buf.into_raw()).map_err(|e| e.to_string())
        }
        other => Err(format!(
            "expected 8-bit single-channel PNG, found {:?}",
            other.color()
        )),
    }
}

fn encode_png(img: &GrayImage) -> std::result::Result<Vec<u8>, String> {
    let buf = image::ImageBuffer::<image::Luma<u8>, _>::from_raw(
        img.cols() as u32,
        img.rows() as u32,
        img.pixels().to_vec(),
    )
    .ok_or("image buffer size mismatch")?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    Ok(out.into_inner())
}
