use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpauth::imageio::{read_image, write_image, ImageFormat};
use fpauth::GrayImage;

fn fpauth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpauth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus_image(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/corpus")
        .join(name)
}

fn keygen(dir: &Path, seed: &str, ub: &str) -> PathBuf {
    let key = dir.join(format!("k{seed}_{ub}.key"));
    let o = fpauth(&["keygen", "--seed", seed, "--ub", ub, "-o", s(&key)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    key
}

fn sign(dir: &Path, key: &Path, input: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = fpauth(&["sign", "--key", s(key), "--in", s(input), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn keygen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.key");
    let b = dir.path().join("b.key");
    for p in [&a, &b] {
        let o = fpauth(&[
            "keygen",
            "--seed",
            "7",
            "--ub",
            "0.52",
            "--range",
            "10",
            "90",
            "-o",
            s(p),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let printed = fpauth(&["keygen", "--seed", "7", "--ub", "0.52"]);
    assert_eq!(stdout(&printed).as_bytes(), fs::read(&a).unwrap());
}

#[test]
fn keygen_rejects_closed_bound() {
    let o = fpauth(&["keygen", "--seed", "7", "--ub", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.5"));
}

#[test]
fn keygen_reports_key_space() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k");
    let o = fpauth(&[
        "keygen",
        "--seed",
        "1",
        "--ub",
        "0.7",
        "--range",
        "10",
        "50",
        "-o",
        s(&key),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let bits: f64 = text
        .split("2^")
        .nth(1)
        .and_then(|t| t.split_whitespace().next())
        .and_then(|t| t.parse().ok())
        .unwrap_or_else(|| panic!("no exponent in {text:?}"));
    assert!(bits > 192.0, "{text}");
    assert!(text.contains("41^36"), "{text}");
}

#[test]
fn sign_verify_round_trip_and_single_pixel_flip() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "3", "0.7");
    let signed = sign(dir.path(), &key, &corpus_image("camera.pgm"), "cam.pgm");

    let o = fpauth(&["verify", "--key", s(&key), "--in", s(&signed)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "authentic");

    // Each detected flip is bounded by the localization set.
    let img = read_image(&signed).unwrap();
    let mut detected = 0;
    for i in 0..8usize {
        let (r, c) = (40 + 17 * i, 60 + 11 * i);
        let mut t = img.clone();
        t.set(r, c, t.get(r, c) ^ 0x80);
        let path = dir.path().join(format!("t{i}.pgm"));
        write_image(&t, &path, ImageFormat::PgmP5).unwrap();
        let mask = dir.path().join(format!("m{i}.pgm"));
        let o = fpauth(&[
            "verify",
            "--key",
            s(&key),
            "--in",
            s(&path),
            "--mask",
            s(&mask),
        ]);
        match o.status.code() {
            Some(0) => {}
            Some(3) => {
                detected += 1;
                let n: usize = stdout(&o)
                    .split_whitespace()
                    .nth(1)
                    .unwrap()
                    .parse()
                    .unwrap();
                assert!((1..=5).contains(&n), "{}", stdout(&o));
                let m = read_image(&mask).unwrap();
                let marked = m.pixels().iter().filter(|&&v| v == 255).count();
                assert_eq!(marked, n);
            }
            other => panic!("unexpected exit {other:?}"),
        }
    }
    assert!(detected >= 4, "only {detected} of 8 flips detected");
}

#[test]
fn wrong_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "3", "0.52");
    let other = keygen(dir.path(), "4", "0.52");
    let signed = sign(dir.path(), &key, &corpus_image("coins.pgm"), "coins.pgm");
    let o = fpauth(&["verify", "--key", s(&other), "--in", s(&signed)]);
    assert_eq!(o.status.code(), Some(3));
    let n: usize = stdout(&o)
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(n > 256 * 256 / 20, "{}", stdout(&o));
}

#[test]
fn signing_twice_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "5", "1.0");
    let once = sign(dir.path(), &key, &corpus_image("moon.pgm"), "once.pgm");
    let twice = dir.path().join("twice.pgm");
    let o = fpauth(&[
        "sign",
        "--key",
        s(&key),
        "--in",
        s(&once),
        "--out",
        s(&twice),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "psnr_db inf");
    assert_eq!(fs::read(&once).unwrap(), fs::read(&twice).unwrap());
}

#[test]
fn sign_prints_psnr_above_51_db() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "6", "0.7");
    let out = dir.path().join("x.png");
    let o = fpauth(&[
        "sign",
        "--key",
        s(&key),
        "--in",
        s(&corpus_image("brick.pgm")),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let db: f64 = stdout(&o)
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(db > 51.0, "{db}");
    // PNG output reads back to the same pixels a PGM would hold.
    assert_eq!(read_image(&out).unwrap().dims(), (256, 256));
}

#[test]
fn attack_with_empty_layout_flags_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "8", "0.7");
    let layout = dir.path().join("empty.txt");
    fs::write(&layout, "# nothing\n\n").unwrap();
    let out = dir.path().join("out.pgm");
    let report = dir.path().join("report.txt");
    let o = fpauth(&[
        "attack",
        "--key",
        s(&key),
        "--in",
        s(&corpus_image("clock_motion.pgm")),
        "--layout",
        s(&layout),
        "--out",
        s(&out),
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("total_flagged 0 stray 0"), "{text}");
}

#[test]
fn attack_reports_layout_errors_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "8", "0.7");
    let layout = dir.path().join("bad.txt");
    fs::write(&layout, "cover-constant 0 0 4 4\nsmudge 1 1 2 2\n").unwrap();
    let o = fpauth(&[
        "attack",
        "--key",
        s(&key),
        "--in",
        s(&corpus_image("coins.pgm")),
        "--layout",
        s(&layout),
        "--out",
        s(&dir.path().join("o.pgm")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn attack_localizes_a_cover() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), "9", "1.0");
    let layout = dir.path().join("l.txt");
    fs::write(&layout, "cover-constant 50 60 16 16 value=128\n").unwrap();
    let mask = dir.path().join("mask.pgm");
    let o = fpauth(&[
        "attack",
        "--key",
        s(&key),
        "--in",
        s(&corpus_image("camera.pgm")),
        "--layout",
        s(&layout),
        "--out",
        s(&dir.path().join("o.pgm")),
        "--mask",
        s(&mask),
    ]);
    assert!(o.status.success());
    let m = read_image(&mask).unwrap();
    let mut any = false;
    for r in 0..256 {
        for c in 0..256 {
            if m.get(r, c) == 255 {
                any = true;
                assert!(
                    (49..=66).contains(&r) && (59..=76).contains(&c),
                    "flag at {r},{c}"
                );
            }
        }
    }
    assert!(any);
}

#[test]
fn eval_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    for name in ["camera.pgm", "coins.pgm", "moon.pgm"] {
        fs::copy(corpus_image(name), corpus.join(name)).unwrap();
    }
    let csv = dir.path().join("psnr.csv");
    let report = dir.path().join("report.txt");
    let o = fpauth(&[
        "eval",
        "--corpus",
        s(&corpus),
        "--ub",
        "0.52,0.7",
        "--csv",
        s(&csv),
        "--report",
        s(&report),
        "--trials",
        "20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<String> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(rows[0], "path,ub_h,psnr_db");
    assert_eq!(rows.len(), 1 + 3 * 2);
    for row in &rows[1..] {
        let db: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(db > 51.0, "{row}");
    }
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("fragility"), "{text}");
}

#[test]
fn image_io_round_trips_through_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::from_fn(5, 7, |r, c| (r * 40 + c) as u8);
    for name in ["a.pgm", "a.png"] {
        let p = dir.path().join(name);
        write_image(&img, &p, ImageFormat::from_path(&p)).unwrap();
        assert_eq!(read_image(&p).unwrap(), img);
    }
}
