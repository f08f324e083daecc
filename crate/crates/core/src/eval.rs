//! Desk-scale experiments: transparency sweeps over a corpus and the
//! single-pixel fragility experiment.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::authenticator::{
    dependents, generate_with_field, predicted_detection_probability, psnr, verify_with_field,
};
use crate::error::{Error, Result};
use crate::imageio::read_image;
use crate::keyschedule::{expand_key, random_key, AuthKey, ParamField, ScanMode};
use crate::raster::GrayImage;

/// One image of a corpus.
#[derive(Debug, Clone)]
pub struct CorpusImage {
    pub path: PathBuf,
    pub image: GrayImage,
}

/// Loads every `.pgm` and `.png` file in `dir`, sorted by file name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusImage>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let image = read_image(&path)?;
            Ok(CorpusImage { path, image })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsnrRow {
    pub path: PathBuf,
    pub ub_h: f64,
    pub psnr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrSummary {
    pub ub_h: f64,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Key settings shared by every image of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepKeys {
    pub seed: u64,
    pub mode: ScanMode,
    pub lo: u64,
    pub hi: u64,
}

impl SweepKeys {
    /// Key for corpus image `index`. Only `H`'s bound differs between sweep
    /// points; the generator quadruples are fixed per image.
    pub fn key_for(&self, index: usize, ub_h: f64) -> Result<AuthKey> {
        random_key(
            self.seed.wrapping_add(index as u64),
            self.mode,
            ub_h,
            self.lo,
            self.hi,
        )
    }
}

/// Signs every corpus image at every `ub_h` and records `PSNR(I, J)`.
/// Rows are ordered by `ub_h`, then by corpus order.
pub fn psnr_sweep(
    corpus: &[CorpusImage],
    ub_values: &[f64],
    keys: SweepKeys,
) -> Result<Vec<PsnrRow>> {
    let mut rows = Vec::with_capacity(corpus.len() * ub_values.len());
    for &ub_h in ub_values {
        let batch: Vec<PsnrRow> = corpus
            .par_iter()
            .enumerate()
            .map(|(i, item)| {
                let key = keys.key_for(i, ub_h)?;
                let field = expand_key(&key, item.image.rows(), item.image.cols())?;
                let signed = generate_with_field(&item.image, &field)?;
                Ok(PsnrRow {
                    path: item.path.clone(),
                    ub_h,
                    psnr_db: psnr(&item.image, &signed)?,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(batch);
    }
    Ok(rows)
}

/// Min, mean and max PSNR per `ub_h`, in first-seen order.
pub fn summarize(rows: &[PsnrRow]) -> Vec<PsnrSummary> {
    let mut out: Vec<PsnrSummary> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|s| s.ub_h == row.ub_h) {
            Some(s) => {
                s.count += 1;
                s.min = s.min.min(row.psnr_db);
                s.max = s.max.max(row.psnr_db);
                s.mean += row.psnr_db;
            }
            None => out.push(PsnrSummary {
                ub_h: row.ub_h,
                count: 1,
                min: row.psnr_db,
                mean: row.psnr_db,
                max: row.psnr_db,
            }),
        }
    }
    for s in &mut out {
        s.mean /= s.count as f64;
    }
    out
}

/// Writes `path,ub_h,psnr_db` rows with a header line.
pub fn write_psnr_csv<W: Write>(rows: &[PsnrRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["path", "ub_h", "psnr_db"])
        .map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.path.display().to_string(),
            format!("{:.4}", row.ub_h),
            format!("{:.4}", row.psnr_db),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of repeated single-pixel tampering on one fixed point image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragilityStats {
    pub trials: usize,
    /// Trials whose verification flagged at least one pixel.
    pub detected: usize,
    /// Sum of the per-trial predicted detection probabilities.
    pub expected: f64,
    /// Sum of `p (1 - p)` over trials: the variance of the detected count.
    pub variance: f64,
    /// Flagged pixels outside the tampered pixel and its dependents.
    pub localization_violations: usize,
    /// Largest Chebyshev distance from a flag to its tampered pixel.
    pub max_distance: usize,
    /// Largest number of flags in a single trial.
    pub max_flagged: usize,
}

impl FragilityStats {
    pub fn empirical_rate(&self) -> f64 {
        self.detected as f64 / self.trials as f64
    }

    pub fn predicted_rate(&self) -> f64 {
        self.expected / self.trials as f64
    }

    /// Binomial standard error of the detection rate.
    pub fn standard_error(&self) -> f64 {
        self.variance.sqrt() / self.trials as f64
    }

    /// `(detected - expected) / sqrt(variance)`.
    pub fn z_score(&self) -> f64 {
        if self.variance == 0.0 {
            return if self.detected as f64 == self.expected {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.detected as f64 - self.expected) / self.variance.sqrt()
    }
}

/// Tampers one random pixel at a time (at least `margin` pixels from every
/// border, replaced by a uniformly random different value), verifies the whole
/// image, and compares against [`predicted_detection_probability`].
///
/// `signed` must be a fixed point image for `field`.
pub fn fragility_experiment(
    signed: &GrayImage,
    field: &ParamField,
    trials: usize,
    margin: usize,
    seed: u64,
) -> Result<FragilityStats> {
    let (rows, cols) = signed.dims();
    if rows < 2 * margin + 1 || cols < 2 * margin + 1 {
        return Err(Error::InvalidImage(format!(
            "{rows}x{cols} image too small for a {margin}-pixel margin"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = signed.clone();
    let mut stats = FragilityStats {
        trials,
        detected: 0,
        expected: 0.0,
        variance: 0.0,
        localization_violations: 0,
        max_distance: 0,
        max_flagged: 0,
    };
    for _ in 0..trials {
        let r = rng.gen_range(margin..rows - margin);
        let c = rng.gen_range(margin..cols - margin);
        let old = signed.get(r, c);
        let v = rng.gen_range(0..255u16) as u8;
        let new = if v >= old { v + 1 } else { v };

        let p = predicted_detection_probability(signed, field, r, c)?;
        stats.expected += p;
        stats.variance += p * (1.0 - p);

        work.set(r, c, new);
        let mask = verify_with_field(&work, field)?;
        work.set(r, c, old);

        let allowed: Vec<(usize, usize)> = std::iter::once((r, c))
            .chain(
                dependents(field.mode(), rows, cols, r, c)
                    .into_iter()
                    .map(|(dr, dc, _)| (dr, dc)),
            )
            .collect();
        let mut flagged = 0;
        for (fr, fc) in mask.flagged() {
            flagged += 1;
            let d = fr.abs_diff(r).max(fc.abs_diff(c));
            stats.max_distance = stats.max_distance.max(d);
            if !allowed.contains(&(fr, fc)) {
                stats.localization_violations += 1;
            }
        }
        stats.max_flagged = stats.max_flagged.max(flagged);
        if flagged > 0 {
            stats.detected += 1;
        }
    }
    Ok(stats)
}

/// Mean per-pixel feasible fraction `count_feasible / 256` over an image,
/// with environments read from `img`.
pub fn mean_feasible_fraction(img: &GrayImage, field: &ParamField) -> f64 {
    use crate::fixedpoint::{count_feasible, NeighborVector};
    let (rows, cols) = img.dims();
    let total: u64 = (0..rows)
        .into_par_iter()
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let env = NeighborVector::at(img, r, c);
                    count_feasible(&field.pixel(r, c), &env) as u64
                })
                .sum::<u64>()
        })
        .sum();
    total as f64 / (256.0 * (rows * cols) as f64)
}
