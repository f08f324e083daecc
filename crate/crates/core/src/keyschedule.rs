//! Key schedule: expands a compact secret key into the per-pixel parameter
//! matrices `H` and `K1..K12`.
//!
//! Each matrix is filled from its own linear congruential stream
//! `x_{n+1} = ((4a + 1) x_n + 2b + 1) mod 2^m`, consumed in row-major order
//! starting at `x_1` (the seed `x_0` itself is never emitted). Four of the
//! eight neighbor matrices are identically zero; which four depends on the
//! scan mode, so a key carries nine generator quadruples instead of thirteen.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixedpoint::PixelParams;

/// Smallest permitted modulus exponent.
pub const MIN_MODULUS_BITS: u32 = 8;
/// Largest permitted modulus exponent.
pub const MAX_MODULUS_BITS: u32 = 31;
/// Number of generator quadruples stored in a key.
pub const QUAD_COUNT: usize = 9;

const KEY_MAGIC: &str = "FPAKEY1";

/// Parameters `(x0, a, b, m)` of one linear congruential stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LcgParams {
    pub x0: u64,
    pub a: u64,
    pub b: u64,
    /// Modulus exponent: the stream runs modulo `2^m`.
    pub m: u32,
}

impl LcgParams {
    pub fn new(x0: u64, a: u64, b: u64, m: u32) -> Result<Self> {
        let p = LcgParams { x0, a, b, m };
        p.check().map_err(Error::InvalidKey)?;
        Ok(p)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.x0 < 1 || self.a < 1 || self.b < 1 {
            return Err("x0, a and b must be positive".into());
        }
        if !(MIN_MODULUS_BITS..=MAX_MODULUS_BITS).contains(&self.m) {
            return Err(format!(
                "m must lie in [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}], got {}",
                self.m
            ));
        }
        if self.x0 >= self.modulus() {
            return Err(format!("x0 = {} must be below 2^{}", self.x0, self.m));
        }
        Ok(())
    }

    pub fn modulus(&self) -> u64 {
        1u64 << self.m
    }

    /// The generated values `x_1, x_2, ...`.
    pub fn stream(&self) -> LcgStream {
        LcgStream {
            state: self.x0 & (self.modulus() - 1),
            params: *self,
        }
    }
}

/// One step of the generator. Exact for every `a`, `b` and `m <= 63`:
/// arithmetic wraps modulo `2^64`, and `2^m` divides `2^64`.
#[inline]
pub fn lcg_next(state: u64, p: &LcgParams) -> u64 {
    let mask = (1u64 << p.m) - 1;
    let mult = p.a.wrapping_mul(4).wrapping_add(1);
    let inc = p.b.wrapping_mul(2).wrapping_add(1);
    mult.wrapping_mul(state).wrapping_add(inc) & mask
}

#[derive(Debug, Clone)]
pub struct LcgStream {
    state: u64,
    params: LcgParams,
}

impl Iterator for LcgStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        self.state = lcg_next(self.state, &self.params);
        Some(self.state)
    }
}

/// Interval a raw generator value is standardized into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FillRange {
    /// `(0.5, ub_h]` via `0.5 + ((x + 1) / 2^m) (ub_h - 0.5)`.
    H { ub_h: f64 },
    /// `[0, 2π)` via `(x / 2^m) 2π`.
    Angle,
}

impl FillRange {
    #[inline]
    pub fn standardize(&self, x: u64, m: u32) -> f64 {
        // Division by a power of two is exact for m <= 52.
        let scale = (1u64 << m) as f64;
        match *self {
            FillRange::H { ub_h } => 0.5 + ((x + 1) as f64 / scale) * (ub_h - 0.5),
            FillRange::Angle => (x as f64 / scale) * TAU,
        }
    }
}

/// Fills a `rows × cols` matrix in row-major order, one stream step per element.
pub fn fill_matrix(p: &LcgParams, rows: usize, cols: usize, target: FillRange) -> Vec<f64> {
    p.stream()
        .take(rows * cols)
        .map(|x| target.standardize(x, p.m))
        .collect()
}

/// Scan order of generation, which also fixes the zero neighbor matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanMode {
    /// Top to bottom, left to right; `K5..K8` are zero.
    CausalForward,
    /// Bottom to top, right to left; `K1..K4` are zero.
    CausalBackward,
}

impl ScanMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanMode::CausalForward => "causal-forward",
            ScanMode::CausalBackward => "causal-backward",
        }
    }

    /// Zero-based indices into `K1..K12` of the generated neighbor matrices.
    pub fn active_neighbors(&self) -> [usize; 4] {
        match self {
            ScanMode::CausalForward => [0, 1, 2, 3],
            ScanMode::CausalBackward => [4, 5, 6, 7],
        }
    }

    /// Labels of the nine key-file quadruples, in order.
    pub fn labels(&self) -> [&'static str; QUAD_COUNT] {
        match self {
            ScanMode::CausalForward => ["H", "K1", "K2", "K3", "K4", "K9", "K10", "K11", "K12"],
            ScanMode::CausalBackward => ["H", "K5", "K6", "K7", "K8", "K9", "K10", "K11", "K12"],
        }
    }
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScanMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "causal-forward" | "forward" => Ok(ScanMode::CausalForward),
            "causal-backward" | "backward" => Ok(ScanMode::CausalBackward),
            other => Err(format!("unknown scan mode {other:?}")),
        }
    }
}

/// The shared secret of sender and receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthKey {
    pub mode: ScanMode,
    /// Upper bound of the `H` entries, in `(0.5, 1]`.
    pub ub_h: f64,
    /// `H`, the four generated neighbor matrices, then `K9..K12`.
    pub quads: [LcgParams; QUAD_COUNT],
}

pub(crate) fn check_ub_h(ub_h: f64) -> std::result::Result<(), String> {
    if ub_h.is_nan() || ub_h <= 0.5 {
        return Err("ub_h must exceed 0.5".into());
    }
    if ub_h > 1.0 {
        return Err("ub_h must not exceed 1".into());
    }
    Ok(())
}

impl AuthKey {
    pub fn new(mode: ScanMode, ub_h: f64, quads: [LcgParams; QUAD_COUNT]) -> Result<Self> {
        check_ub_h(ub_h).map_err(Error::InvalidKey)?;
        for (label, q) in mode.labels().iter().zip(&quads) {
            q.check()
                .map_err(|e| Error::InvalidKey(format!("{label}: {e}")))?;
        }
        Ok(AuthKey { mode, ub_h, quads })
    }

    /// Same key with a different `H` upper bound.
    pub fn with_ub_h(&self, ub_h: f64) -> Result<Self> {
        AuthKey::new(self.mode, ub_h, self.quads)
    }
}

/// The thirteen per-pixel parameter matrices for one image size.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamField {
    rows: usize,
    cols: usize,
    mode: ScanMode,
    h: Vec<f64>,
    k: [Vec<f64>; 12],
}

impl ParamField {
    /// Assembles a field from explicit matrices.
    ///
    /// Checks shapes, the `(0.5, 1]` range of `h`, and that the four neighbor
    /// matrices the mode leaves out are zero. Unlike [`expand_key`], an
    /// all-zero generated neighbor matrix is accepted.
    pub fn from_parts(
        mode: ScanMode,
        rows: usize,
        cols: usize,
        h: Vec<f64>,
        k: [Vec<f64>; 12],
    ) -> Result<Self> {
        let n = rows * cols;
        if n == 0 {
            return Err(Error::InvalidKey(
                "parameter field must be non-empty".into(),
            ));
        }
        if h.len() != n || k.iter().any(|m| m.len() != n) {
            return Err(Error::InvalidKey(format!(
                "every parameter matrix must hold {n} entries"
            )));
        }
        if let Some(v) = h.iter().find(|&&v| !(v > 0.5 && v <= 1.0)) {
            return Err(Error::InvalidKey(format!("H entry {v} outside (0.5, 1]")));
        }
        let active = mode.active_neighbors();
        for (i, m) in k.iter().enumerate().take(8) {
            if !active.contains(&i) && m.iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidKey(format!(
                    "K{} must be zero in {mode} mode",
                    i + 1
                )));
            }
        }
        Ok(ParamField {
            rows,
            cols,
            mode,
            h,
            k,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> ScanMode {
        self.mode
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Matrix `K{index + 1}`, row-major.
    pub fn k(&self, index: usize) -> &[f64] {
        &self.k[index]
    }

    /// Parameters at zero-based `(row, col)`.
    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> PixelParams {
        let i = row * self.cols + col;
        let mut kvec = [0.0; 12];
        for (slot, m) in kvec.iter_mut().zip(&self.k) {
            *slot = m[i];
        }
        PixelParams { h: self.h[i], kvec }
    }
}

/// Expands `key` into the parameter field of a `rows × cols` image.
pub fn expand_key(key: &AuthKey, rows: usize, cols: usize) -> Result<ParamField> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidKey(format!(
            "cannot expand a key for a {rows}x{cols} image"
        )));
    }
    let labels = key.mode.labels();
    let mut generated: Vec<Vec<f64>> = key
        .quads
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let target = if i == 0 {
                FillRange::H { ub_h: key.ub_h }
            } else {
                FillRange::Angle
            };
            fill_matrix(q, rows, cols, target)
        })
        .collect();

    for (i, label) in labels.iter().enumerate().skip(1).take(4) {
        if generated[i].iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroNeighborMatrix { label });
        }
    }

    let zero = vec![0.0; rows * cols];
    let mut k: [Vec<f64>; 12] = std::array::from_fn(|_| zero.clone());
    let mut drained = generated.drain(..);
    let h = drained.next().expect("nine generated matrices");
    for idx in key.mode.active_neighbors() {
        k[idx] = drained.next().expect("nine generated matrices");
    }
    for slot in k.iter_mut().skip(8) {
        *slot = drained.next().expect("nine generated matrices");
    }
    Ok(ParamField {
        rows,
        cols,
        mode: key.mode,
        h,
        k,
    })
}

/// Serializes a key in the `FPAKEY1` text format.
pub fn write_key(key: &AuthKey) -> String {
    let mut out = String::new();
    out.push_str(KEY_MAGIC);
    out.push('\n');
    out.push_str(&format!("mode {}\n", key.mode));
    out.push_str(&format!("ubh {}\n", format_ub_h(key.ub_h)));
    for (label, q) in key.mode.labels().iter().zip(&key.quads) {
        out.push_str(&format!("{label} {} {} {} {}\n", q.x0, q.a, q.b, q.m));
    }
    out
}

// Six decimals when that round-trips, shortest exact representation otherwise.
fn format_ub_h(v: f64) -> String {
    let fixed = format!("{v:.6}");
    if fixed.parse::<f64>() == Ok(v) {
        fixed
    } else {
        format!("{v}")
    }
}

/// Parses the `FPAKEY1` text format. Blank lines and `#` comments are skipped.
pub fn parse_key(text: &str) -> Result<AuthKey> {
    let err = |line: usize, msg: String| Error::KeyParse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (n, magic) = lines
        .next()
        .ok_or_else(|| err(1, "empty key file".into()))?;
    if magic != KEY_MAGIC {
        return Err(err(
            n,
            format!("expected header {KEY_MAGIC:?}, found {magic:?}"),
        ));
    }

    let (n, line) = lines
        .next()
        .ok_or_else(|| err(n + 1, "missing mode line".into()))?;
    let mode = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["mode", m] => m.parse::<ScanMode>().map_err(|e| err(n, e))?,
        _ => {
            return Err(err(
                n,
                format!("expected `mode <scan-mode>`, found {line:?}"),
            ))
        }
    };

    let (n, line) = lines
        .next()
        .ok_or_else(|| err(n + 1, "missing ubh line".into()))?;
    let ub_h = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["ubh", v] => v
            .parse::<f64>()
            .map_err(|_| err(n, format!("invalid ubh value {v:?}")))?,
        _ => return Err(err(n, format!("expected `ubh <decimal>`, found {line:?}"))),
    };
    check_ub_h(ub_h).map_err(|e| err(n, e))?;

    let rest: Vec<(usize, &str)> = lines.collect();
    if rest.len() != QUAD_COUNT {
        let at = rest.get(QUAD_COUNT).or(rest.last()).map_or(n, |(l, _)| *l);
        return Err(err(
            at,
            format!("expected {QUAD_COUNT} quadruples, found {}", rest.len()),
        ));
    }

    let labels = mode.labels();
    let mut quads = [LcgParams {
        x0: 0,
        a: 0,
        b: 0,
        m: 0,
    }; QUAD_COUNT];
    for ((slot, &(n, line)), label) in quads.iter_mut().zip(&rest).zip(labels) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(
                n,
                format!("expected `{label} <x0> <a> <b> <m>`, found {line:?}"),
            ));
        }
        if fields[0] != label {
            return Err(err(
                n,
                format!("expected label {label} in {mode} mode, found {}", fields[0]),
            ));
        }
        let num = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| err(n, format!("invalid integer {s:?}")))
        };
        let m = num(fields[4])?;
        let q = LcgParams {
            x0: num(fields[1])?,
            a: num(fields[2])?,
            b: num(fields[3])?,
            m: u32::try_from(m).unwrap_or(u32::MAX),
        };
        q.check().map_err(|e| err(n, format!("{label}: {e}")))?;
        *slot = q;
    }
    Ok(AuthKey { mode, ub_h, quads })
}

/// Draws a key whose `x0`, `a`, `b` lie in `[lo, hi]` and whose `m` lies in
/// `[max(lo, 8), min(hi, 31)]`. `x0` is further capped below `2^m`.
pub fn random_key(seed: u64, mode: ScanMode, ub_h: f64, lo: u64, hi: u64) -> Result<AuthKey> {
    check_ub_h(ub_h).map_err(Error::InvalidKey)?;
    if lo < 1 || lo > hi {
        return Err(Error::InvalidKey(format!(
            "parameter range [{lo}, {hi}] must be non-empty with lo >= 1"
        )));
    }
    let (m_lo, m_hi) = modulus_range(lo, hi)
        .ok_or_else(|| Error::InvalidKey(format!("no admissible m in [{lo}, {hi}]")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quads = std::array::from_fn(|_| {
        let m = rng.gen_range(m_lo..=m_hi);
        let x0_hi = hi.min((1u64 << m) - 1);
        let x0 = rng.gen_range(lo..=x0_hi);
        let a = rng.gen_range(lo..=hi);
        let b = rng.gen_range(lo..=hi);
        LcgParams { x0, a, b, m }
    });
    AuthKey::new(mode, ub_h, quads)
}

fn modulus_range(lo: u64, hi: u64) -> Option<(u32, u32)> {
    let m_lo = lo.max(MIN_MODULUS_BITS as u64);
    let m_hi = hi.min(MAX_MODULUS_BITS as u64);
    (m_lo <= m_hi).then_some((m_lo as u32, m_hi as u32))
}

/// `log2` of the nominal key space when all 36 key integers range over `[lo, hi]`.
pub fn nominal_key_space_bits(lo: u64, hi: u64) -> f64 {
    (QUAD_COUNT * 4) as f64 * ((hi - lo + 1) as f64).log2()
}

/// `log2` of the key space [`random_key`] actually draws from, where `m` is
/// confined to `[8, 31]` (an upper bound: `x0` is additionally capped below `2^m`).
pub fn effective_key_space_bits(lo: u64, hi: u64) -> Option<f64> {
    let (m_lo, m_hi) = modulus_range(lo, hi)?;
    let per_component = ((hi - lo + 1) as f64).log2();
    let m_choices = ((m_hi - m_lo + 1) as f64).log2();
    Some(QUAD_COUNT as f64 * (3.0 * per_component + m_choices))
}
