use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mdwc_core::ImagePlane;
use tempfile::TempDir;

fn mdwc(args: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdwc")).args(args).output().unwrap()
}

fn ok(args: &[&Path]) -> String {
    let out = mdwc(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

/// Smooth texture with edges, so every rate has something to code.
fn sample(dir: &TempDir) -> PathBuf {
    let (w, h) = (96, 80);
    let px: Vec<u8> = (0..w * h)
        .map(|k| {
            let (i, j) = ((k / w) as f64, (k % w) as f64);
            let v = 128.0 + 60.0 * (i * 0.21).sin() * (j * 0.13).cos() + if j > 50.0 { 40.0 } else { -20.0 };
            v.clamp(0.0, 255.0) as u8
        })
        .collect();
    let path = dir.path().join("in.pgm");
    ImagePlane::new(w, h, px).unwrap().write_pgm(&path).unwrap();
    path
}

#[test]
fn encode_decode_round_trip() {
    let dir = TempDir::new().unwrap();
    let img = sample(&dir);
    let coded = dir.path().join("x.mdwc");
    let back = dir.path().join("back.pgm");
    ok(&[p("encode"), &img, &coded, p("--rate"), p("1.0")]);
    assert!(fs::metadata(&coded).unwrap().len() <= 96 * 80 / 8);
    ok(&[p("decode"), &coded, &back]);
    let db: f64 = ok(&[p("psnr"), &img, &back]).trim().parse().unwrap();
    assert!(db > 30.0, "{db}");
    assert_eq!(ok(&[p("psnr"), &img, &img]).trim(), "inf");
}

#[test]
fn early_decode_matches_direct_encode() {
    let dir = TempDir::new().unwrap();
    let img = sample(&dir);
    let (high, low) = (dir.path().join("high.mdwc"), dir.path().join("low.mdwc"));
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    for raw in [false, true] {
        let mut extra = vec![];
        if raw {
            extra.push(p("--no-ac"));
        }
        ok(&[&[p("encode"), &img, &high, p("--rate"), p("2.0")], &extra[..]].concat());
        ok(&[&[p("encode"), &img, &low, p("--rate"), p("0.125")], &extra[..]].concat());
        ok(&[p("decode"), &high, &a, p("--rate"), p("0.125")]);
        ok(&[p("decode"), &low, &b]);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "raw={raw}");
    }
}

#[test]
fn rd_sweep_writes_increasing_psnr() {
    let dir = TempDir::new().unwrap();
    let img = sample(&dir);
    let csv = dir.path().join("rd.csv");
    ok(&[p("--sequential"), p("rd"), &img, p("--csv"), &csv]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rate_bpp,psnr_db,bytes"));
    let db: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(db.len(), 5);
    assert!(db.windows(2).all(|w| w[1] > w[0]), "{db:?}");
}

#[test]
fn stats_reports_both_histograms() {
    let dir = TempDir::new().unwrap();
    let img = sample(&dir);
    let text = ok(&[p("stats"), &img, p("--levels"), p("3")]);
    assert!(text.starts_with("source,plane,m,count,probability\n"));
    assert!(text.lines().any(|l| l.starts_with("groups,")));
    assert!(text.lines().any(|l| l.starts_with("neighbours,")));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = TempDir::new().unwrap();
    let img = sample(&dir);
    let junk = dir.path().join("junk.mdwc");
    fs::write(&junk, [1u8, 2, 3]).unwrap();
    let out = mdwc(&[p("decode"), &junk, &dir.path().join("o.pgm")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let coded = dir.path().join("x.mdwc");
    ok(&[p("encode"), &img, &coded, p("--rate"), p("2.0")]);
    let bytes = fs::read(&coded).unwrap();
    let half = 96 + (bytes.len() - 96) / 2;
    fs::write(&coded, &bytes[..half]).unwrap();
    let back = dir.path().join("half.pgm");
    ok(&[p("decode"), &coded, &back]);
    let db: f64 = ok(&[p("psnr"), &img, &back]).trim().parse().unwrap();
    assert!(db > 25.0, "{db}");

    let out = mdwc(&[p("encode"), &img, &coded, p("--rate"), p("-1")]);
    assert!(!out.status.success());
}
