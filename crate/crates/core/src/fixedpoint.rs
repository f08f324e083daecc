//! Scalar kernel: the three-level rounding `R`, the keyed map
//! `f(x) = x + R[h cos(x + K·X)]`, its fixed-point predicate, and the windowed
//! integer search that moves a pixel onto the nearest fixed point.
//!
//! Sender and receiver must agree on a strict inequality evaluated in floating
//! point, so [`phase`] sums its twelve products in one fixed order and nothing
//! here may be reassociated or fused.

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Half-width of the search window around the original pixel value.
pub const SEARCH_RADIUS: i32 = 3;

/// Eight-neighborhood plus position, `(x1..x8, s, t, M, N)`.
///
/// Neighbor layout, with `x` the pixel itself:
///
/// ```text
/// x1 x2 x3
/// x4 x  x5
/// x6 x7 x8
/// ```
///
/// `s` and `t` are the 1-based row and column; `M` and `N` the image height
/// and width. Neighbors outside the image read as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborVector {
    pub neighbors: [u8; 8],
    pub s: u32,
    pub t: u32,
    pub m: u32,
    pub n: u32,
}

impl NeighborVector {
    /// Environment of zero-based `(row, col)` in `img`.
    pub fn at(img: &GrayImage, row: usize, col: usize) -> Self {
        let (rows, cols) = img.dims();
        let read = |dr: isize, dc: isize| -> u8 {
            let r = row as isize + dr;
            let c = col as isize + dc;
            if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
                0
            } else {
                img.get(r as usize, c as usize)
            }
        };
        NeighborVector {
            neighbors: [
                read(-1, -1),
                read(-1, 0),
                read(-1, 1),
                read(0, -1),
                read(0, 1),
                read(1, -1),
                read(1, 0),
                read(1, 1),
            ],
            s: row as u32 + 1,
            t: col as u32 + 1,
            m: rows as u32,
            n: cols as u32,
        }
    }

    /// The twelve components in multiplication order.
    pub fn components(&self) -> [f64; 12] {
        let x = &self.neighbors;
        [
            x[0] as f64,
            x[1] as f64,
            x[2] as f64,
            x[3] as f64,
            x[4] as f64,
            x[5] as f64,
            x[6] as f64,
            x[7] as f64,
            self.s as f64,
            self.t as f64,
            self.m as f64,
            self.n as f64,
        ]
    }
}

/// `h_st` and `K_st = (K1(s,t), ..., K12(s,t))` at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelParams {
    pub h: f64,
    pub kvec: [f64; 12],
}

/// Three-level rounding: -1 at or below -0.5, 1 at or above 0.5, 0 between.
#[inline]
pub fn round_r(v: f64) -> i32 {
    if v >= 0.5 {
        1
    } else if v <= -0.5 {
        -1
    } else {
        0
    }
}

/// `K_st · X_st`, summed strictly left to right.
#[inline]
pub fn phase(kvec: &[f64; 12], env: &NeighborVector) -> f64 {
    let x = env.components();
    let mut acc = 0.0;
    for i in 0..12 {
        acc += kvec[i] * x[i];
    }
    acc
}

/// `|h cos(x + phase)| < 0.5` with a precomputed phase.
#[inline]
pub fn is_fixed_point_at_phase(x: i32, h: f64, phase: f64) -> bool {
    (h * (x as f64 + phase).cos()).abs() < 0.5
}

#[inline]
pub fn is_fixed_point(x: u8, p: &PixelParams, env: &NeighborVector) -> bool {
    is_fixed_point_at_phase(x as i32, p.h, phase(&p.kvec, env))
}

/// One application of the keyed map. The result may leave `[0, 255]`.
pub fn f_apply(x: i32, p: &PixelParams, env: &NeighborVector) -> i32 {
    x + round_r(p.h * (x as f64 + phase(&p.kvec, env)).cos())
}

/// Nearest fixed point to `x0` with a precomputed phase.
///
/// Searches outward from `x0`, lower candidate first at each distance, within
/// `[0, 255]`. The first [`SEARCH_RADIUS`] rings form the regular window;
/// further rings are only reached when the window is clipped at 0 or 255.
pub fn solve_at_phase(x0: u8, h: f64, phase: f64) -> Option<u8> {
    let x0 = x0 as i32;
    for d in 0..=255 {
        for x in [x0 - d, x0 + d] {
            if (0..=255).contains(&x) && is_fixed_point_at_phase(x, h, phase) {
                return Some(x as u8);
            }
            if d == 0 {
                break;
            }
        }
    }
    None
}

/// Minimizes `|x - x0|` over fixed points `x ∈ [0, 255]`; ties go to the smaller value.
pub fn solve_pixel(x0: u8, p: &PixelParams, env: &NeighborVector) -> Result<u8> {
    solve_at_phase(x0, p.h, phase(&p.kvec, env)).ok_or(Error::NoFixedPoint {
        row: env.s as usize - 1,
        col: env.t as usize - 1,
    })
}

/// Whether the radius-3 window around `x0` is clipped by the pixel range.
pub fn window_is_clamped(x0: u8) -> bool {
    (x0 as i32) < SEARCH_RADIUS || (x0 as i32) > 255 - SEARCH_RADIUS
}

/// Number of `x ∈ [0, 255]` with `|h cos(x + phase)| < 0.5`.
pub fn count_feasible_at_phase(h: f64, phase: f64) -> u32 {
    (0..256)
        .filter(|&x| is_fixed_point_at_phase(x, h, phase))
        .count() as u32
}

pub fn count_feasible(p: &PixelParams, env: &NeighborVector) -> u32 {
    count_feasible_at_phase(p.h, phase(&p.kvec, env))
}
