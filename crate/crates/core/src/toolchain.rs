//! External tool invocation: cargo, rustc, cargo-fuzz and the coverage tools.
//!
//! Every child runs in its own process group so that a timeout kills the
//! whole tree (`cargo fuzz run` forks the fuzzer binary, which would
//! otherwise outlive its parent).

use std::ffi::OsString;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::PathBuf;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::error::{Error, Result};

/// Locations and flags for the external build, fuzz and coverage tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Toolchain {
    pub cargo: PathBuf,
    pub rustc: PathBuf,
    /// Sanitizer passed to `cargo fuzz` (`none`, `address`, ...).
    pub sanitizer: String,
    /// Shared target directory for fuzz builds, so repeated runs reuse the
    /// compiled libFuzzer runtime.
    pub fuzz_target_dir: Option<PathBuf>,
    /// Extra environment applied to every child process.
    pub env: Vec<(String, String)>,
    pub grcov: PathBuf,
    /// Directory holding `llvm-profdata` / `llvm-cov`; discovered from the
    /// rustc sysroot when unset.
    pub llvm_bin_dir: Option<PathBuf>,
}

impl Default for Toolchain {
    fn default() -> Self {
        Toolchain {
            cargo: std::env::var_os("CARGO")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("cargo")),
            rustc: std::env::var_os("RUSTC")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("rustc")),
            sanitizer: "none".to_string(),
            fuzz_target_dir: None,
            // cargo-fuzz and branch coverage both rely on unstable flags.
            env: vec![("RUSTC_BOOTSTRAP".to_string(), "1".to_string())],
            grcov: PathBuf::from("grcov"),
            llvm_bin_dir: None,
        }
    }
}

impl Toolchain {
    pub fn cargo_cmd(&self) -> Command {
        self.command(&self.cargo)
    }

    pub fn rustc_cmd(&self) -> Command {
        self.command(&self.rustc)
    }

    pub fn command(&self, program: impl Into<OsString>) -> Command {
        let mut cmd = Command::new(program.into());
        for (k, v) in &self.env {
            cmd.env(k, v);
        }
        // Nested cargo invocations must not inherit the outer build's
        // target directory.
        cmd.env_remove("CARGO_TARGET_DIR");
        cmd
    }

    /// Directory with the LLVM tools matching the active rustc.
    pub fn llvm_bin_dir(&self) -> Result<PathBuf> {
        if let Some(dir) = &self.llvm_bin_dir {
            return Ok(dir.clone());
        }
        let out = run(self.rustc_cmd().args(["--print", "sysroot"]), None, "rustc")?;
        if !out.success() {
            return Err(Error::ToolchainMissing("rustc".into()));
        }
        let host = run(self.rustc_cmd().arg("-vV"), None, "rustc")?;
        let triple = host
            .stdout
            .lines()
            .find_map(|l| l.strip_prefix("host: "))
            .ok_or_else(|| Error::ToolchainMissing("rustc host triple".into()))?
            .trim()
            .to_string();
        let dir = PathBuf::from(out.stdout.trim())
            .join("lib/rustlib")
            .join(triple)
            .join("bin");
        if dir.join("llvm-profdata").exists() {
            Ok(dir)
        } else {
            Err(Error::CoverageToolMissing(
                "llvm-profdata (install the llvm-tools component)".into(),
            ))
        }
    }
}

/// Captured result of a child process.
#[derive(Debug, Clone)]
pub struct ProcessOutput {
    /// `None` when the process was killed on timeout.
    pub status: Option<ExitStatus>,
    pub timed_out: bool,
    pub stdout: String,
    pub stderr: String,
}

impl ProcessOutput {
    pub fn success(&self) -> bool {
        self.status.map(|s| s.success()).unwrap_or(false)
    }

    pub fn code(&self) -> Option<i32> {
        self.status.and_then(|s| s.code())
    }

    /// Tail of stderr, for diagnostics.
    pub fn stderr_tail(&self, lines: usize) -> String {
        let all: Vec<&str> = self.stderr.lines().collect();
        all[all.len().saturating_sub(lines)..].join("\n")
    }
}

/// Runs a command to completion, killing its process group after `timeout`.
/// `tool` names the program for `ToolchainMissing` errors.
pub fn run(cmd: &mut Command, timeout: Option<Duration>, tool: &str) -> Result<ProcessOutput> {
    cmd.stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::ToolchainMissing(tool.to_string()))
        }
        Err(e) => return Err(Error::io(tool, e)),
    };
    let stdout = drain(child.stdout.take());
    let stderr = drain(child.stderr.take());

    let (status, timed_out) = match timeout {
        None => (Some(child.wait().map_err(|e| Error::io(tool, e))?), false),
        Some(limit) => match child.wait_timeout(limit).map_err(|e| Error::io(tool, e))? {
            Some(status) => (Some(status), false),
            None => {
                kill_group(&mut child);
                let _ = child.wait();
                (None, true)
            }
        },
    };
    Ok(ProcessOutput {
        status,
        timed_out,
        stdout: stdout.join().unwrap_or_default(),
        stderr: stderr.join().unwrap_or_default(),
    })
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn kill_group(child: &mut Child) {
    let pid = child.id() as libc::pid_t;
    // SAFETY: signalling a process group we created; failure is harmless.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
    let _ = child.kill();
}

/// True when `program` can be spawned.
pub fn is_available(program: &std::path::Path, probe_arg: &str) -> bool {
    Command::new(program)
        .arg(probe_arg)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok()
}
