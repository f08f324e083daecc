//! Command-line front end.
//!
//! Exit codes: 0 success or clean verification, 3 suspicious pixels found,
//! 1 any error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::attacks::{attack_battery, parse_layout, BatteryInputs};
use crate::authenticator::{generate, psnr, verify};
use crate::error::Result;
use crate::eval::{
    fragility_experiment, load_corpus, psnr_sweep, summarize, write_psnr_csv, SweepKeys,
};
use crate::imageio::{overlay_mask, read_image, write_image, write_mask, ImageFormat};
use crate::keyschedule::{
    effective_key_space_bits, expand_key, nominal_key_space_bits, parse_key, random_key, write_key,
    AuthKey, ScanMode,
};

pub const EXIT_TAMPERED: u8 = 3;

const LAYOUT_HELP: &str = "\
Layout file: one attack per line, `kind row0 col0 rows cols [key=value ...]`,
zero-based coordinates; blank lines and `#` comments are ignored.

Kinds and options (defaults in brackets):
  tamper-pixel     value=<0-255> [random different value]
  salt-pepper      density [0.05]
  gaussian-noise   sigma [5]
  median-filter    size [3]
  gaussian-filter  size [3] sigma [0.8]
  enhance          gain [1.5]   linear contrast stretch about the region mean
  copy-external    dr dc [0 0]  from --aux
  copy-self        dr dc        from the signed image itself, non-zero offset
  cover-constant   value [128]
  collage          dr dc [0 0]  from --aux, signed with the same key; only a zero
                                offset leaves the block interior verifiable
  logo             ink [255]    stamp from --logo (pixels >= 128), or a built-in ring
  rewrite          kseed [1] ub [0.51] lo hi [10 90] mode   re-sign the input under a guessed key
Every kind accepts seed=<u64> [0].";

#[derive(Debug, Parser)]
#[command(
    name = "fpauth",
    version,
    about = "Keyed fixed point images for image integrity authentication"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random key and write it in FPAKEY1 format.
    Keygen(KeygenArgs),
    /// Turn an image into its fixed point image.
    Sign(SignArgs),
    /// Check a received image; exit 0 when clean, 3 when tampered.
    Verify(VerifyArgs),
    /// Sign an image, apply a layout of simulated attacks, verify and report.
    #[command(after_long_help = LAYOUT_HELP)]
    Attack(AttackArgs),
    /// Transparency sweep over a corpus plus a single-pixel fragility check.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct KeyRangeArgs {
    /// Inclusive range of the key integers x0, a, b, m.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [10u64, 90])]
    pub range: Vec<u64>,
    #[arg(long, default_value = "causal-forward")]
    pub mode: ScanMode,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    pub seed: u64,
    /// Upper bound of H, in (0.5, 1].
    #[arg(long = "ub")]
    pub ub_h: f64,
    #[command(flatten)]
    pub keys: KeyRangeArgs,
    /// Key file to write; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SignArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the tamper mask (255 = suspicious) as PGM.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Write the input with suspicious pixels painted white.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub key: PathBuf,
    /// Original (unsigned) image.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub layout: PathBuf,
    /// Attacked fixed point image.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-attack text report; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// External image for copy-external and collage.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Binary stamp for logo.
    #[arg(long)]
    pub logo: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of .pgm / .png images.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Comma-separated H upper bounds to sweep.
    #[arg(long = "ub", value_delimiter = ',', default_values_t = [0.52, 0.6, 0.7, 0.85, 1.0])]
    pub ub_values: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub keys: KeyRangeArgs,
    /// Per-image PSNR rows (path,ub_h,psnr_db).
    #[arg(long)]
    pub csv: PathBuf,
    /// Summary and fragility report; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Single-pixel tampering trials per ub value, on the first corpus image.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

/// Parses `std::env::args` and runs the selected command.
pub fn main() -> ExitCode {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Keygen(a) => cmd_keygen(&a).map(|_| ExitCode::SUCCESS),
        Command::Sign(a) => cmd_sign(&a).map(|_| ExitCode::SUCCESS),
        Command::Verify(a) => cmd_verify(&a),
        Command::Attack(a) => cmd_attack(&a).map(|_| ExitCode::SUCCESS),
        Command::Eval(a) => cmd_eval(&a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}

fn load_key(path: &Path) -> Result<AuthKey> {
    parse_key(&fs::read_to_string(path)?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn range(keys: &KeyRangeArgs) -> (u64, u64) {
    (keys.range[0], keys.range[1])
}

pub fn cmd_keygen(args: &KeygenArgs) -> Result<()> {
    let (lo, hi) = range(&args.keys);
    let key = random_key(args.seed, args.keys.mode, args.ub_h, lo, hi)?;
    let text = write_key(&key);
    let mut summary = format!(
        "key space: {}^36 = 2^{:.2}",
        hi - lo + 1,
        nominal_key_space_bits(lo, hi)
    );
    if let Some(eff) = effective_key_space_bits(lo, hi) {
        summary.push_str(&format!(" (at most 2^{eff:.2} with m confined to [8, 31])"));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, text)?;
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub fn cmd_sign(args: &SignArgs) -> Result<()> {
    let key = load_key(&args.key)?;
    let img = read_image(&args.input)?;
    let signed = generate(&img, &key)?;
    write_image(&signed, &args.out, ImageFormat::from_path(&args.out))?;
    println!("psnr_db {:.4}", psnr(&img, &signed)?);
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let key = load_key(&args.key)?;
    let img = read_image(&args.input)?;
    let mask = verify(&img, &key)?;
    if let Some(path) = &args.mask {
        write_mask(&mask, path)?;
    }
    if let Some(path) = &args.overlay {
        write_image(
            &overlay_mask(&img, &mask)?,
            path,
            ImageFormat::from_path(path),
        )?;
    }
    let n = mask.count();
    if n == 0 {
        println!("authentic");
        Ok(ExitCode::SUCCESS)
    } else {
        let total = mask.rows() * mask.cols();
        println!(
            "suspicious {n} of {total} ({:.4}%)",
            100.0 * n as f64 / total as f64
        );
        Ok(ExitCode::from(EXIT_TAMPERED))
    }
}

pub fn cmd_attack(args: &AttackArgs) -> Result<()> {
    let key = load_key(&args.key)?;
    let img = read_image(&args.input)?;
    let layout = parse_layout(&fs::read_to_string(&args.layout)?)?;
    let aux = args.aux.as_ref().map(read_image).transpose()?;
    let logo = args.logo.as_ref().map(read_image).transpose()?;
    let report = attack_battery(
        &img,
        &key,
        &layout,
        BatteryInputs {
            external: aux.as_ref(),
            logo: logo.as_ref(),
        },
    )?;
    write_image(
        &report.attacked,
        &args.out,
        ImageFormat::from_path(&args.out),
    )?;
    if let Some(path) = &args.mask {
        write_mask(&report.mask, path)?;
    }
    write_or_print(args.report.as_deref(), &report.to_text())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (lo, hi) = range(&args.keys);
    let corpus = load_corpus(&args.corpus)?;
    if corpus.is_empty() {
        return Err(crate::Error::InvalidImage(format!(
            "no .pgm or .png images in {}",
            args.corpus.display()
        )));
    }
    let keys = SweepKeys {
        seed: args.seed,
        mode: args.keys.mode,
        lo,
        hi,
    };
    let rows = psnr_sweep(&corpus, &args.ub_values, keys)?;
    write_psnr_csv(&rows, fs::File::create(&args.csv)?)?;

    let mut text = format!(
        "corpus {} images: {}\n",
        corpus.len(),
        args.corpus.display()
    );
    text.push_str("ub_h count min_db mean_db max_db\n");
    for s in summarize(&rows) {
        text.push_str(&format!(
            "{:.4} {} {:.4} {:.4} {:.4}\n",
            s.ub_h, s.count, s.min, s.mean, s.max
        ));
    }

    if args.trials > 0 {
        let first = &corpus[0];
        text.push_str(&format!(
            "\nfragility: {} single-pixel tampers on {}\n",
            args.trials,
            first.path.display()
        ));
        text.push_str("ub_h empirical predicted std_err z loc_violations\n");
        for &ub_h in &args.ub_values {
            let key = keys.key_for(0, ub_h)?;
            let field = expand_key(&key, first.image.rows(), first.image.cols())?;
            let signed = crate::generate_with_field(&first.image, &field)?;
            let stats = fragility_experiment(&signed, &field, args.trials, 2, args.seed)?;
            text.push_str(&format!(
                "{:.4} {:.4} {:.4} {:.4} {:+.3} {}\n",
                ub_h,
                stats.empirical_rate(),
                stats.predicted_rate(),
                stats.standard_error(),
                stats.z_score(),
                stats.localization_violations
            ));
        }
    }
    write_or_print(args.report.as_deref(), &text)
}
