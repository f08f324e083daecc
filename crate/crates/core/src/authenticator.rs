//! Whole-image signing and verification.
//!
//! Signing walks the image in the key's scan order and replaces each pixel by
//! the nearest fixed point of its keyed map. Because the only non-zero
//! neighbor weights point at already visited positions, every solved pixel
//! stays a fixed point after the rest of the image is solved, and verification
//! can re-evaluate each predicate independently from the received image.

use rayon::prelude::*;

use crate::error::Result;
use crate::fixedpoint::{self, NeighborVector};
use crate::keyschedule::{expand_key, AuthKey, ParamField, ScanMode};
use crate::raster::{GrayImage, TamperMask};

/// Offsets `(drow, dcol)` read by neighbor slots `x1..x8`.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Zero-based positions in scan order.
pub fn scan_order(
    mode: ScanMode,
    rows: usize,
    cols: usize,
) -> impl Iterator<Item = (usize, usize)> {
    (0..rows * cols).map(move |i| match mode {
        ScanMode::CausalForward => (i / cols, i % cols),
        ScanMode::CausalBackward => {
            let j = rows * cols - 1 - i;
            (j / cols, j % cols)
        }
    })
}

/// In-image positions whose environment reads `(row, col)` through a non-zero
/// neighbor weight, with the slot index (0 for `x1`) they read it through.
///
/// In causal-forward mode these are the E, SW, S and SE neighbors.
pub fn dependents(
    mode: ScanMode,
    rows: usize,
    cols: usize,
    row: usize,
    col: usize,
) -> Vec<(usize, usize, usize)> {
    mode.active_neighbors()
        .into_iter()
        .filter_map(|slot| {
            let (dr, dc) = NEIGHBOR_OFFSETS[slot];
            let r = row as isize - dr;
            let c = col as isize - dc;
            (r >= 0 && c >= 0 && r < rows as isize && c < cols as isize)
                .then_some((r as usize, c as usize, slot))
        })
        .collect()
}

/// Signs `img`: returns the fixed point image for `key`.
pub fn generate(img: &GrayImage, key: &AuthKey) -> Result<GrayImage> {
    let field = expand_key(key, img.rows(), img.cols())?;
    generate_with_field(img, &field)
}

/// Signs `img` with an already expanded parameter field of the same size.
///
/// Neighbors not yet visited still hold their original values in the working
/// buffer; their weights are zero, so they never influence the result.
pub fn generate_with_field(img: &GrayImage, field: &ParamField) -> Result<GrayImage> {
    check_field(img, field)?;
    let mut buf = img.clone();
    for (r, c) in scan_order(field.mode(), img.rows(), img.cols()) {
        let env = NeighborVector::at(&buf, r, c);
        let solved = fixedpoint::solve_pixel(buf.get(r, c), &field.pixel(r, c), &env)?;
        buf.set(r, c, solved);
    }
    Ok(buf)
}

/// Checks every pixel of a received image; flagged pixels are suspicious.
pub fn verify(img: &GrayImage, key: &AuthKey) -> Result<TamperMask> {
    let field = expand_key(key, img.rows(), img.cols())?;
    verify_with_field(img, &field)
}

pub fn verify_with_field(img: &GrayImage, field: &ParamField) -> Result<TamperMask> {
    check_field(img, field)?;
    let (rows, cols) = img.dims();
    let mut flags = vec![false; rows * cols];
    flags
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, line)| {
            for (c, flag) in line.iter_mut().enumerate() {
                *flag = !pixel_is_authentic(img, field, r, c);
            }
        });
    TamperMask::from_flags(rows, cols, flags)
}

/// The fixed-point predicate at one position, with the environment read from `img`.
#[inline]
pub fn pixel_is_authentic(img: &GrayImage, field: &ParamField, row: usize, col: usize) -> bool {
    let env = NeighborVector::at(img, row, col);
    fixedpoint::is_fixed_point(img.get(row, col), &field.pixel(row, col), &env)
}

fn check_field(img: &GrayImage, field: &ParamField) -> Result<()> {
    if img.dims() != (field.rows(), field.cols()) {
        return Err(crate::Error::DimensionMismatch {
            a_rows: img.rows(),
            a_cols: img.cols(),
            b_rows: field.rows(),
            b_cols: field.cols(),
        });
    }
    Ok(())
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// Predicted probability that replacing the pixel at zero-based `(row, col)`
/// of the fixed point image `img` with a uniformly random value is detected:
/// `1 - p0 · Π p_d` over the in-image dependents `d`.
///
/// `p0` is the feasible fraction of values at the position itself. For a
/// dependent, the tampered pixel sits in one of its neighbor slots, so `p_d` is
/// its feasible fraction averaged over all 256 values of that slot.
pub fn predicted_detection_probability(
    img: &GrayImage,
    field: &ParamField,
    row: usize,
    col: usize,
) -> Result<f64> {
    check_field(img, field)?;
    let env = NeighborVector::at(img, row, col);
    let p0 = fixedpoint::count_feasible(&field.pixel(row, col), &env) as f64 / 256.0;

    let mut survive = p0;
    for (dr, dc, slot) in dependents(field.mode(), img.rows(), img.cols(), row, col) {
        let params = field.pixel(dr, dc);
        let mut env = NeighborVector::at(img, dr, dc);
        let mut total = 0u64;
        for v in 0..=255u8 {
            env.neighbors[slot] = v;
            total += fixedpoint::count_feasible(&params, &env) as u64;
        }
        survive *= total as f64 / (256.0 * 256.0);
    }
    Ok(1.0 - survive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyschedule::random_key;

    fn ramp(rows: usize, cols: usize) -> GrayImage {
        GrayImage::from_fn(rows, cols, |r, c| ((r * 37 + c * 11) % 256) as u8)
    }

    #[test]
    fn scan_orders() {
        let fwd: Vec<_> = scan_order(ScanMode::CausalForward, 2, 2).collect();
        assert_eq!(fwd, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let bwd: Vec<_> = scan_order(ScanMode::CausalBackward, 2, 2).collect();
        assert_eq!(bwd, vec![(1, 1), (1, 0), (0, 1), (0, 0)]);
    }

    #[test]
    fn forward_dependents_are_e_sw_s_se() {
        let mut d = dependents(ScanMode::CausalForward, 10, 10, 4, 4);
        d.sort();
        assert_eq!(d, vec![(4, 5, 3), (5, 3, 2), (5, 4, 1), (5, 5, 0)]);
        let mut d = dependents(ScanMode::CausalBackward, 10, 10, 4, 4);
        d.sort();
        assert_eq!(d, vec![(3, 3, 7), (3, 4, 6), (3, 5, 5), (4, 3, 4)]);
        assert!(dependents(ScanMode::CausalForward, 10, 10, 9, 9).is_empty());
    }

    #[test]
    fn single_pixel_image() {
        let key = random_key(3, ScanMode::CausalForward, 0.9, 10, 90).unwrap();
        for v in [0u8, 1, 128, 254, 255] {
            let img = GrayImage::filled(1, 1, v);
            let j = generate(&img, &key).unwrap();
            assert!(verify(&j, &key).unwrap().is_clean());
        }
    }

    #[test]
    fn sign_verify_both_modes() {
        for mode in [ScanMode::CausalForward, ScanMode::CausalBackward] {
            let key = random_key(5, mode, 1.0, 10, 90).unwrap();
            let img = ramp(20, 17);
            let j = generate(&img, &key).unwrap();
            assert!(verify(&j, &key).unwrap().is_clean(), "{mode}");
            assert_eq!(generate(&j, &key).unwrap(), j);
        }
    }

    #[test]
    fn psnr_examples() {
        let a = GrayImage::filled(4, 4, 0);
        let b = GrayImage::filled(4, 4, 3);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let expected = 10.0 * (65025.0f64 / 9.0).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 38.59).abs() < 0.01);
        assert!(psnr(&a, &GrayImage::filled(4, 5, 0)).is_err());
    }

    #[test]
    fn detection_probability_with_zero_phases() {
        let (rows, cols) = (5, 5);
        let n = rows * cols;
        let field = ParamField::from_parts(
            ScanMode::CausalForward,
            rows,
            cols,
            vec![1.0; n],
            std::array::from_fn(|_| vec![0.0; n]),
        )
        .unwrap();
        let img = GrayImage::filled(rows, cols, 2);
        let p = predicted_detection_probability(&img, &field, 2, 2).unwrap();
        let expected = 1.0 - (86.0f64 / 256.0).powi(5);
        assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
    }

    #[test]
    fn detection_probability_vanishes_near_half() {
        let (rows, cols) = (5, 5);
        let n = rows * cols;
        let mut k: [Vec<f64>; 12] = std::array::from_fn(|_| vec![0.0; n]);
        k[8] = vec![0.3; n];
        let field =
            ParamField::from_parts(ScanMode::CausalForward, rows, cols, vec![0.5 + 1e-12; n], k)
                .unwrap();
        let img = GrayImage::filled(rows, cols, 7);
        let p = predicted_detection_probability(&img, &field, 2, 2).unwrap();
        assert!(p < 0.02, "{p}");
    }
}
