//! Row-major rasters: 8-bit grayscale images and boolean tamper masks.

use crate::error::{Error, Result};

/// An `rows × cols` 8-bit grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if pixels.len() != rows * cols {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels for {rows}x{cols}, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        Ok(GrayImage { rows, cols, pixels })
    }

    /// Image with every pixel set to `value`.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(rows: usize, cols: usize, value: u8) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be non-zero");
        GrayImage {
            rows,
            cols,
            pixels: vec![value; rows * cols],
        }
    }

    /// Builds an image from a per-pixel function of `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be non-zero");
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        GrayImage { rows, cols, pixels }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.cols + col] = value;
    }

    pub(crate) fn ensure_same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                a_rows: self.rows,
                a_cols: self.cols,
                b_rows: other.rows,
                b_cols: other.cols,
            });
        }
        Ok(())
    }
}

/// Per-pixel verification result; `true` marks a suspicious pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TamperMask {
    rows: usize,
    cols: usize,
    flags: Vec<bool>,
}

impl TamperMask {
    pub fn clear(rows: usize, cols: usize) -> Self {
        TamperMask {
            rows,
            cols,
            flags: vec![false; rows * cols],
        }
    }

    pub fn from_flags(rows: usize, cols: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != rows * cols {
            return Err(Error::InvalidImage(format!(
                "expected {} mask flags for {rows}x{cols}, got {}",
                rows * cols,
                flags.len()
            )));
        }
        Ok(TamperMask { rows, cols, flags })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, flagged: bool) {
        self.flags[row * self.cols + col] = flagged;
    }

    /// Number of suspicious pixels.
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn is_clean(&self) -> bool {
        !self.flags.iter().any(|&f| f)
    }

    /// `(row, col)` of every suspicious pixel in raster order.
    pub fn flagged(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(i, _)| (i / cols, i % cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_pixel_count() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn mask_positions_are_row_major() {
        let mut m = TamperMask::clear(3, 4);
        m.set(2, 1, true);
        m.set(0, 3, true);
        assert_eq!(m.flagged().collect::<Vec<_>>(), vec![(0, 3), (2, 1)]);
        assert_eq!(m.count(), 2);
        assert!(!m.is_clean());
    }
}
