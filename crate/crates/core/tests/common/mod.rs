#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use augtest::toolchain::Toolchain;
use tempfile::TempDir;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dest = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            if entry.file_name() == "target" {
                continue;
            }
            copy_dir(&entry.path(), &dest);
        } else {
            fs::copy(entry.path(), &dest).unwrap();
        }
    }
}

/// Copies a fixture into a fresh temporary directory, keeping its name.
pub fn fixture_copy(name: &str) -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let dest = tmp.path().join(name);
    copy_dir(&fixture(name), &dest);
    (tmp, dest)
}

/// Toolchain sharing one fuzz build directory across tests and runs.
pub fn toolchain() -> Toolchain {
    Toolchain {
        fuzz_target_dir: Some(Path::new(env!("CARGO_TARGET_TMPDIR")).join("fuzz-build")),
        ..Toolchain::default()
    }
}

pub fn has_cargo_fuzz() -> bool {
    let tc = Toolchain::default();
    let mut cmd = tc.cargo_cmd();
    cmd.args(["fuzz", "--version"]);
    augtest::toolchain::run(&mut cmd, None, "cargo").is_ok_and(|o| o.success())
}

pub fn has_llvm_tools() -> bool {
    Toolchain::default()
        .llvm_bin_dir()
        .is_ok_and(|d| d.join("llvm-cov").is_file() && d.join("llvm-profdata").is_file())
}
