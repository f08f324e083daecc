//! Image integrity authentication with keyed fixed point images.
//!
//! A secret [`AuthKey`] expands into per-pixel parameters `h` and `K`. Signing
//! moves every pixel of an 8-bit grayscale image by at most a few gray levels
//! onto a fixed point of its keyed map `f(x) = x + R[h cos(x + K·X)]`, where
//! `X` collects the pixel's neighbors and position. Verification re-checks the
//! fixed-point predicate at every pixel; a modified pixel breaks the predicate
//! at itself or at one of its immediate neighbors, which localizes tampering
//! to within one pixel.
//!
//! ```
//! use fpauth::{generate, random_key, verify, GrayImage, ScanMode};
//!
//! let key = random_key(7, ScanMode::CausalForward, 0.52, 10, 90).unwrap();
//! let img = GrayImage::from_fn(16, 16, |r, c| (r * 16 + c) as u8);
//! let mut signed = generate(&img, &key).unwrap();
//! assert!(verify(&signed, &key).unwrap().is_clean());
//!
//! signed.set(8, 8, signed.get(8, 8) ^ 0x40);
//! let mask = verify(&signed, &key).unwrap();
//! assert!(mask.flagged().all(|(r, c)| r.abs_diff(8) <= 1 && c.abs_diff(8) <= 1));
//! ```

pub mod attacks;
pub mod authenticator;
pub mod cli;
pub mod error;
pub mod eval;
pub mod fixedpoint;
pub mod imageio;
pub mod keyschedule;
pub mod raster;

pub use authenticator::{generate, generate_with_field, psnr, verify, verify_with_field};
pub use error::{Error, Result};
pub use keyschedule::{
    expand_key, parse_key, random_key, write_key, AuthKey, LcgParams, ParamField, ScanMode,
};
pub use raster::{GrayImage, TamperMask};
