//! Byte-for-byte comparisons against checked-in outputs. Set
//! `PCD_UPDATE_GOLDEN=1` to rewrite the files after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn check(name: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_pcd"))
        .args(args)
        .args(["--manifest", "/dev/null"])
        .current_dir(root().join("../.."))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = root().join("tests/golden").join(name);
    if std::env::var_os("PCD_UPDATE_GOLDEN").is_some() || !path.exists() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let expected = std::fs::read(&path).unwrap();
    assert!(expected == out.stdout, "{name} differs from the golden copy:\n{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn fit_thipcd_los() {
    check("fit_thipcd_los.json", &["fit", "thipcd", "data/los_pancreas.csv"]);
}

#[test]
fn compare_los() {
    check(
        "compare_los.json",
        &["compare", "thipcd,thipd,pcd,poisson", "data/los_pancreas.csv", "--df-override", "5", "--output", "json"],
    );
}

#[test]
fn compare_los_table() {
    check("compare_los.txt", &["compare", "thipcd,thipd", "data/los_pancreas.csv", "--df-override", "5"]);
}

#[test]
fn simulate_pcd() {
    check("simulate_pcd.txt", &["simulate", "pcd", "--eta", "1", "--phi", "1", "-n", "50", "--seed", "2024"]);
}
