//! Simulated local attacks on fixed point images, and a battery runner that
//! signs, attacks, verifies and scores localization.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::authenticator::{generate, psnr, verify};
use crate::error::{Error, Result};
use crate::keyschedule::{random_key, AuthKey, ScanMode};
use crate::raster::{GrayImage, TamperMask};

/// Axis-aligned rectangle of pixels, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Region {
    pub fn new(row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Region {
            row0,
            col0,
            rows,
            cols,
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Region::new(0, 0, rows, cols)
    }

    pub fn row_end(&self) -> usize {
        self.row0 + self.rows
    }

    pub fn col_end(&self) -> usize {
        self.col0 + self.cols
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row_end()).contains(&row) && (self.col0..self.col_end()).contains(&col)
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.rows > 0 && self.cols > 0 && self.row_end() <= rows && self.col_end() <= cols
    }

    pub fn overlaps(&self, other: &Region) -> bool {
        self.row0 < other.row_end()
            && other.row0 < self.row_end()
            && self.col0 < other.col_end()
            && other.col0 < self.col_end()
    }

    /// Chebyshev distance from `(row, col)` to the nearest pixel of the region.
    pub fn distance(&self, row: usize, col: usize) -> usize {
        let axis = |v: usize, lo: usize, end: usize| {
            if v < lo {
                lo - v
            } else if v >= end {
                v + 1 - end
            } else {
                0
            }
        };
        axis(row, self.row0, self.row_end()).max(axis(col, self.col0, self.col_end()))
    }

    /// Chebyshev distance from `(row, col)` inside the region to its boundary
    /// (0 on the outermost ring and outside the region).
    pub fn depth(&self, row: usize, col: usize) -> usize {
        if !self.contains(row, col) {
            return 0;
        }
        [
            row - self.row0,
            self.row_end() - 1 - row,
            col - self.col0,
            self.col_end() - 1 - col,
        ]
        .into_iter()
        .min()
        .unwrap_or(0)
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> {
        let r = *self;
        (r.row0..r.row_end()).flat_map(move |row| (r.col0..r.col_end()).map(move |col| (row, col)))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.row0, self.col0, self.rows, self.cols)
    }
}

pub const DEFAULT_SALT_PEPPER_DENSITY: f64 = 0.05;
pub const DEFAULT_NOISE_SIGMA: f64 = 5.0;
pub const DEFAULT_FILTER_SIZE: usize = 3;
pub const DEFAULT_GAUSSIAN_FILTER_SIGMA: f64 = 0.8;
pub const DEFAULT_ENHANCE_GAIN: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    /// Replace each region pixel by `value`, or by a random different value.
    TamperPixel {
        value: Option<u8>,
    },
    SaltPepper {
        density: f64,
    },
    GaussianNoise {
        sigma: f64,
    },
    MedianFilter {
        size: usize,
    },
    GaussianFilter {
        size: usize,
        sigma: f64,
    },
    /// Linear contrast stretch about the region mean.
    Enhance {
        gain: f64,
    },
    /// Paste from the auxiliary image, reading at `(row + dr, col + dc)`.
    CopyExternal {
        dr: isize,
        dc: isize,
    },
    /// Paste from the attacked image itself at a non-zero offset.
    CopySelf {
        dr: isize,
        dc: isize,
    },
    CoverConstant {
        value: u8,
    },
    /// Paste from another fixed point image signed with the same key. Position
    /// enters the keyed map, so only a zero offset keeps the block interior valid.
    Collage {
        dr: isize,
        dc: isize,
    },
    /// Stamp pixels `>= 128` of the auxiliary image onto the region with `ink`.
    Logo {
        ink: u8,
    },
    /// Re-sign the original image (the auxiliary image) under a guessed key.
    Rewrite {
        attacker_key: Box<AuthKey>,
    },
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::TamperPixel { .. } => "tamper-pixel",
            AttackKind::SaltPepper { .. } => "salt-pepper",
            AttackKind::GaussianNoise { .. } => "gaussian-noise",
            AttackKind::MedianFilter { .. } => "median-filter",
            AttackKind::GaussianFilter { .. } => "gaussian-filter",
            AttackKind::Enhance { .. } => "enhance",
            AttackKind::CopyExternal { .. } => "copy-external",
            AttackKind::CopySelf { .. } => "copy-self",
            AttackKind::CoverConstant { .. } => "cover-constant",
            AttackKind::Collage { .. } => "collage",
            AttackKind::Logo { .. } => "logo",
            AttackKind::Rewrite { .. } => "rewrite",
        }
    }

    pub fn needs_aux(&self) -> bool {
        matches!(
            self,
            AttackKind::CopyExternal { .. }
                | AttackKind::Collage { .. }
                | AttackKind::Logo { .. }
                | AttackKind::Rewrite { .. }
        )
    }

    pub fn is_global(&self) -> bool {
        matches!(self, AttackKind::Rewrite { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub region: Region,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, region: Region) -> Self {
        AttackSpec {
            kind,
            region,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Region actually modified for an image of the given size.
    pub fn effective_region(&self, rows: usize, cols: usize) -> Region {
        if self.kind.is_global() {
            Region::full(rows, cols)
        } else {
            self.region
        }
    }

    fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if !self.kind.is_global() && !self.region.fits(rows, cols) {
            return Err(Error::Attack(format!(
                "{} region ({}) outside {rows}x{cols} image",
                self.kind.name(),
                self.region
            )));
        }
        match &self.kind {
            AttackKind::MedianFilter { size } | AttackKind::GaussianFilter { size, .. }
                if size % 2 == 0 =>
            {
                Err(Error::Attack(format!("kernel size {size} must be odd")))
            }
            AttackKind::SaltPepper { density } if !(0.0..=1.0).contains(density) => {
                Err(Error::Attack(format!("density {density} outside [0, 1]")))
            }
            AttackKind::GaussianNoise { sigma } | AttackKind::GaussianFilter { sigma, .. }
                if sigma.is_nan() || *sigma <= 0.0 =>
            {
                Err(Error::Attack(format!("sigma {sigma} must be positive")))
            }
            AttackKind::CopySelf { dr: 0, dc: 0 } => {
                Err(Error::Attack("copy-self needs a non-zero offset".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Applies one attack to `img`. Only pixels inside the region change, except
/// for `Rewrite`, which replaces the whole image.
pub fn apply_attack(
    img: &GrayImage,
    spec: &AttackSpec,
    aux: Option<&GrayImage>,
) -> Result<GrayImage> {
    let (rows, cols) = img.dims();
    spec.validate(rows, cols)?;
    let aux = match (spec.kind.needs_aux(), aux) {
        (true, None) => {
            return Err(Error::Attack(format!(
                "{} needs an auxiliary image",
                spec.kind.name()
            )))
        }
        (_, aux) => aux,
    };
    let region = spec.region;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = img.clone();

    match &spec.kind {
        AttackKind::TamperPixel { value } => {
            for (r, c) in region.positions() {
                let old = img.get(r, c);
                let new = match value {
                    Some(v) => *v,
                    None => {
                        // Uniform over the 255 values different from `old`.
                        let v = rng.gen_range(0..255u16) as u8;
                        if v >= old {
                            v + 1
                        } else {
                            v
                        }
                    }
                };
                out.set(r, c, new);
            }
        }
        AttackKind::SaltPepper { density } => {
            for (r, c) in region.positions() {
                if rng.gen::<f64>() < *density {
                    out.set(r, c, if rng.gen::<bool>() { 255 } else { 0 });
                }
            }
        }
        AttackKind::GaussianNoise { sigma } => {
            let normal = Normal::new(0.0, *sigma).map_err(|e| Error::Attack(e.to_string()))?;
            for (r, c) in region.positions() {
                let v = img.get(r, c) as f64 + normal.sample(&mut rng);
                out.set(r, c, clamp_round(v));
            }
        }
        AttackKind::MedianFilter { size } => {
            let half = (*size / 2) as isize;
            let mut window = Vec::with_capacity(size * size);
            for (r, c) in region.positions() {
                window.clear();
                for dr in -half..=half {
                    for dc in -half..=half {
                        window.push(replicated(img, r as isize + dr, c as isize + dc));
                    }
                }
                window.sort_unstable();
                out.set(r, c, window[window.len() / 2]);
            }
        }
        AttackKind::GaussianFilter { size, sigma } => {
            let half = (*size / 2) as isize;
            let weights: Vec<f64> = (-half..=half)
                .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
                .collect();
            let norm: f64 = weights.iter().sum::<f64>().powi(2);
            for (r, c) in region.positions() {
                let mut acc = 0.0;
                for (i, dr) in (-half..=half).enumerate() {
                    for (j, dc) in (-half..=half).enumerate() {
                        let v = replicated(img, r as isize + dr, c as isize + dc) as f64;
                        acc += weights[i] * weights[j] * v;
                    }
                }
                out.set(r, c, clamp_round(acc / norm));
            }
        }
        AttackKind::Enhance { gain } => {
            let n = (region.rows * region.cols) as f64;
            let mean = region
                .positions()
                .map(|(r, c)| img.get(r, c) as f64)
                .sum::<f64>()
                / n;
            for (r, c) in region.positions() {
                let v = mean + gain * (img.get(r, c) as f64 - mean);
                out.set(r, c, clamp_round(v));
            }
        }
        AttackKind::CopyExternal { dr, dc } | AttackKind::Collage { dr, dc } => {
            let src = aux.expect("checked above");
            paste(&mut out, src, region, *dr, *dc)?;
        }
        AttackKind::CopySelf { dr, dc } => {
            paste(&mut out, img, region, *dr, *dc)?;
        }
        AttackKind::CoverConstant { value } => {
            for (r, c) in region.positions() {
                out.set(r, c, *value);
            }
        }
        AttackKind::Logo { ink } => {
            let stamp = aux.expect("checked above");
            if stamp.rows() < region.rows || stamp.cols() < region.cols {
                return Err(Error::Attack(format!(
                    "logo stamp {}x{} smaller than region {}x{}",
                    stamp.rows(),
                    stamp.cols(),
                    region.rows,
                    region.cols
                )));
            }
            for (r, c) in region.positions() {
                if stamp.get(r - region.row0, c - region.col0) >= 128 {
                    out.set(r, c, *ink);
                }
            }
        }
        AttackKind::Rewrite { attacker_key } => {
            let original = aux.expect("checked above");
            img.ensure_same_dims(original)?;
            out = generate(original, attacker_key)?;
        }
    }
    Ok(out)
}

fn clamp_round(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn replicated(img: &GrayImage, r: isize, c: isize) -> u8 {
    let r = r.clamp(0, img.rows() as isize - 1) as usize;
    let c = c.clamp(0, img.cols() as isize - 1) as usize;
    img.get(r, c)
}

fn paste(dst: &mut GrayImage, src: &GrayImage, region: Region, dr: isize, dc: isize) -> Result<()> {
    let r0 = region.row0 as isize + dr;
    let c0 = region.col0 as isize + dc;
    if r0 < 0
        || c0 < 0
        || r0 as usize + region.rows > src.rows()
        || c0 as usize + region.cols > src.cols()
    {
        return Err(Error::Attack(format!(
            "source block at offset ({dr}, {dc}) leaves the {}x{} source image",
            src.rows(),
            src.cols()
        )));
    }
    for (r, c) in region.positions() {
        let v = src.get((r as isize + dr) as usize, (c as isize + dc) as usize);
        dst.set(r, c, v);
    }
    Ok(())
}

/// Auxiliary images for a battery run.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatteryInputs<'a> {
    /// Source for `copy-external`, and (after signing with the battery key)
    /// for `collage`.
    pub external: Option<&'a GrayImage>,
    /// Stamp for `logo`; a built-in ring is used when absent.
    pub logo: Option<&'a GrayImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub kind: &'static str,
    pub region: Region,
    /// Flagged pixels attributed to this attack (nearest region).
    pub flagged: usize,
    /// Largest Chebyshev distance from an attributed flag to the region.
    pub localization_error: usize,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub signed: GrayImage,
    pub attacked: GrayImage,
    pub mask: TamperMask,
    pub signed_psnr: f64,
    pub outcomes: Vec<AttackOutcome>,
    /// Flagged pixels farther than one pixel from every attacked region.
    pub stray: usize,
}

impl BatteryReport {
    pub fn total_flagged(&self) -> usize {
        self.mask.count()
    }

    /// Plain-text report, one line per attack.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "image {}x{} signed_psnr_db {:.4}\n",
            self.signed.rows(),
            self.signed.cols(),
            self.signed_psnr
        ));
        s.push_str("kind row0 col0 rows cols flagged loc_err detected\n");
        for o in &self.outcomes {
            s.push_str(&format!(
                "{} {} {} {} {}\n",
                o.kind,
                o.region,
                o.flagged,
                o.localization_error,
                if o.detected { "yes" } else { "no" }
            ));
        }
        s.push_str(&format!(
            "total_flagged {} stray {}\n",
            self.total_flagged(),
            self.stray
        ));
        s
    }
}

/// Ring-shaped binary stamp used when no logo image is supplied.
pub fn builtin_logo(rows: usize, cols: usize) -> GrayImage {
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let outer = cy.min(cx);
    let inner = outer * 0.55;
    GrayImage::from_fn(rows, cols, |r, c| {
        let d = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
        if d <= outer && d >= inner {
            255
        } else {
            0
        }
    })
}

/// Signs `img`, applies every attack in `layout`, verifies, and scores each attack.
pub fn attack_battery(
    img: &GrayImage,
    key: &AuthKey,
    layout: &[AttackSpec],
    inputs: BatteryInputs<'_>,
) -> Result<BatteryReport> {
    let (rows, cols) = img.dims();
    let regions: Vec<Region> = layout
        .iter()
        .map(|s| s.effective_region(rows, cols))
        .collect();
    for (i, a) in regions.iter().enumerate() {
        for (j, b) in regions.iter().enumerate().skip(i + 1) {
            if a.overlaps(b) {
                return Err(Error::Attack(format!(
                    "regions of attacks {} ({}) and {} ({}) overlap",
                    i + 1,
                    layout[i].kind.name(),
                    j + 1,
                    layout[j].kind.name()
                )));
            }
        }
    }

    let signed = generate(img, key)?;
    let signed_psnr = psnr(img, &signed)?;

    let mut collage_source = None;
    let mut attacked = signed.clone();
    for spec in layout {
        let aux = match &spec.kind {
            AttackKind::CopyExternal { .. } => inputs.external.cloned(),
            AttackKind::Collage { .. } => {
                if collage_source.is_none() {
                    if let Some(ext) = inputs.external {
                        collage_source = Some(generate(ext, key)?);
                    }
                }
                collage_source.clone()
            }
            AttackKind::Logo { .. } => Some(
                inputs
                    .logo
                    .cloned()
                    .unwrap_or_else(|| builtin_logo(spec.region.rows, spec.region.cols)),
            ),
            AttackKind::Rewrite { .. } => Some(img.clone()),
            _ => None,
        };
        attacked = apply_attack(&attacked, spec, aux.as_ref())?;
    }

    let mask = verify(&attacked, key)?;
    let mut outcomes: Vec<AttackOutcome> = layout
        .iter()
        .zip(&regions)
        .map(|(spec, region)| AttackOutcome {
            kind: spec.kind.name(),
            region: *region,
            flagged: 0,
            localization_error: 0,
            detected: false,
        })
        .collect();
    let mut stray = 0;
    for (r, c) in mask.flagged() {
        let nearest = regions
            .iter()
            .enumerate()
            .map(|(i, reg)| (reg.distance(r, c), i))
            .min();
        match nearest {
            Some((d, i)) => {
                let o = &mut outcomes[i];
                o.flagged += 1;
                o.localization_error = o.localization_error.max(d);
                o.detected = true;
                if d > 1 {
                    stray += 1;
                }
            }
            None => stray += 1,
        }
    }

    Ok(BatteryReport {
        signed,
        attacked,
        mask,
        signed_psnr,
        outcomes,
        stray,
    })
}

/// Parses an attack layout: one attack per line,
/// `kind row0 col0 rows cols [key=value ...]`. Blank lines and `#` comments
/// are skipped.
///
/// Recognized keys: `seed`, `value`, `density`, `sigma`, `size`, `gain`, `dr`,
/// `dc`, `ink`; `rewrite` additionally takes `kseed`, `ub`, `lo`, `hi` and
/// `mode` to draw the attacker key.
pub fn parse_layout(text: &str) -> Result<Vec<AttackSpec>> {
    let mut specs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        specs.push(parse_layout_line(line).map_err(|msg| Error::Layout { line: idx + 1, msg })?);
    }
    Ok(specs)
}

fn parse_layout_line(line: &str) -> std::result::Result<AttackSpec, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 5 {
        return Err(format!(
            "expected `kind row0 col0 rows cols [k=v ...]`, found {line:?}"
        ));
    }
    let coord = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("invalid coordinate {s:?}"))
    };
    let region = Region::new(
        coord(fields[1])?,
        coord(fields[2])?,
        coord(fields[3])?,
        coord(fields[4])?,
    );

    let mut opts = std::collections::BTreeMap::new();
    for kv in &fields[5..] {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, found {kv:?}"))?;
        opts.insert(k, v);
    }
    let mut used = vec!["seed"];
    let mut get = |key: &'static str| {
        used.push(key);
        opts.get(key).copied()
    };
    fn num<T: std::str::FromStr>(
        key: &str,
        v: Option<&str>,
        default: T,
    ) -> std::result::Result<T, String> {
        match v {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| format!("invalid {key} value {s:?}")),
        }
    }

    let kind = match fields[0] {
        "tamper-pixel" => AttackKind::TamperPixel {
            value: get("value")
                .map(|s| s.parse::<u8>().map_err(|_| format!("invalid value {s:?}")))
                .transpose()?,
        },
        "salt-pepper" => AttackKind::SaltPepper {
            density: num("density", get("density"), DEFAULT_SALT_PEPPER_DENSITY)?,
        },
        "gaussian-noise" => AttackKind::GaussianNoise {
            sigma: num("sigma", get("sigma"), DEFAULT_NOISE_SIGMA)?,
        },
        "median-filter" => AttackKind::MedianFilter {
            size: num("size", get("size"), DEFAULT_FILTER_SIZE)?,
        },
        "gaussian-filter" => AttackKind::GaussianFilter {
            size: num("size", get("size"), DEFAULT_FILTER_SIZE)?,
            sigma: num("sigma", get("sigma"), DEFAULT_GAUSSIAN_FILTER_SIGMA)?,
        },
        "enhance" => AttackKind::Enhance {
            gain: num("gain", get("gain"), DEFAULT_ENHANCE_GAIN)?,
        },
        "copy-external" => AttackKind::CopyExternal {
            dr: num("dr", get("dr"), 0)?,
            dc: num("dc", get("dc"), 0)?,
        },
        "copy-self" => AttackKind::CopySelf {
            dr: num("dr", get("dr"), 0)?,
            dc: num("dc", get("dc"), 0)?,
        },
        "cover-constant" => AttackKind::CoverConstant {
            value: num("value", get("value"), 128)?,
        },
        "collage" => AttackKind::Collage {
            dr: num("dr", get("dr"), 0)?,
            dc: num("dc", get("dc"), 0)?,
        },
        "logo" => AttackKind::Logo {
            ink: num("ink", get("ink"), 255)?,
        },
        "rewrite" => {
            let kseed = num("kseed", get("kseed"), 1u64)?;
            let ub = num("ub", get("ub"), 0.51)?;
            let lo = num("lo", get("lo"), 10u64)?;
            let hi = num("hi", get("hi"), 90u64)?;
            let mode = match get("mode") {
                None => ScanMode::CausalForward,
                Some(m) => m.parse()?,
            };
            let attacker_key = random_key(kseed, mode, ub, lo, hi).map_err(|e| e.to_string())?;
            AttackKind::Rewrite {
                attacker_key: Box::new(attacker_key),
            }
        }
        other => return Err(format!("unknown attack kind {other:?}")),
    };
    if let Some(k) = opts.keys().find(|k| !used.contains(k)) {
        return Err(format!("unknown option {k:?} for {}", kind.name()));
    }
    let seed = num("seed", opts.get("seed").copied(), 0u64)?;
    Ok(AttackSpec { kind, region, seed })
}
