use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    pub timeout_s: u64,
    pub max_output_bytes: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        Self {
            timeout_s: 300,
            max_output_bytes: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResult {
    /// `None` when the process was killed by a signal or never started.
    pub exit_code: Option<i32>,
    pub killed: bool,
    pub timed_out: bool,
    pub stdout: String,
    pub stderr: String,
    pub truncated: bool,
    pub duration_s: f64,
    pub spawn_error: Option<String>,
}

impl ExecResult {
    pub fn success(&self) -> bool {
        self.exit_code == Some(0) && !self.timed_out
    }

    /// Combined output for feeding back into logs or prompts.
    pub fn log(&self) -> String {
        let mut out = String::new();
        if let Some(e) = &self.spawn_error {
            out.push_str(&format!("spawn error: {e}\n"));
        }
        if self.timed_out {
            out.push_str("timed out\n");
        }
        out.push_str(&self.stdout);
        if !self.stderr.is_empty() {
            if !out.is_empty() && !out.ends_with('\n') {
                out.push('\n');
            }
            out.push_str(&self.stderr);
        }
        out
    }
}

struct Captured {
    text: String,
    truncated: bool,
}

fn drain<R: Read>(mut reader: R, cap: usize) -> Captured {
    let mut kept = Vec::with_capacity(cap.min(64 * 1024));
    let mut total: u64 = 0;
    let mut buf = [0u8; 64 * 1024];
    loop {
        match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => {
                total += n as u64;
                let room = cap.saturating_sub(kept.len());
                kept.extend_from_slice(&buf[..n.min(room)]);
            }
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    let truncated = total > cap as u64;
    let mut text = String::from_utf8_lossy(&kept).into_owned();
    if truncated {
        text.push_str(&format!("\n[output truncated: {} of {} bytes kept]\n", cap, total));
    }
    Captured { text, truncated }
}

fn kill_group(pid: u32) {
    // SAFETY: plain syscall on a process group we created.
    unsafe {
        libc::kill(-(pid as i32), libc::SIGKILL);
    }
}

/// Runs `cmd` through `sh -c` in `workdir` with a wall-clock limit and a
/// per-stream output cap. The command runs in its own process group so a
/// timeout kills everything it spawned.
/// The last `max_bytes` of `text`, cut at a character boundary.
pub fn tail(text: &str, max_bytes: usize) -> String {
    if text.len() <= max_bytes {
        return text.to_string();
    }
    let mut start = text.len() - max_bytes;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    format!("...\n{}", &text[start..])
}

pub fn execute_build_test(workdir: &Path, cmd: &str, limits: &ExecLimits) -> ExecResult {
    let started = Instant::now();
    let spawned = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => {
            return ExecResult {
                exit_code: None,
                killed: false,
                timed_out: false,
                stdout: String::new(),
                stderr: String::new(),
                truncated: false,
                duration_s: started.elapsed().as_secs_f64(),
                spawn_error: Some(e.to_string()),
            }
        }
    };
    let cap = limits.max_output_bytes;
    let out = child.stdout.take().expect("piped stdout");
    let err = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || drain(out, cap));
    let err_reader = thread::spawn(move || drain(err, cap));

    let deadline = started + Duration::from_secs(limits.timeout_s);
    let mut timed_out = false;
    let mut pause = Duration::from_millis(1);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) => {}
            Err(_) => break None,
        }
        if Instant::now() >= deadline {
            timed_out = true;
            kill_group(child.id());
            break child.wait().ok();
        }
        thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(20));
    };
    // Background children may still hold the pipes; make sure they go too.
    kill_group(child.id());
    let stdout = out_reader.join().unwrap_or(Captured {
        text: String::new(),
        truncated: false,
    });
    let stderr = err_reader.join().unwrap_or(Captured {
        text: String::new(),
        truncated: false,
    });
    let exit_code = status.and_then(|s| s.code());
    ExecResult {
        exit_code: if timed_out { None } else { exit_code },
        killed: timed_out || exit_code.is_none(),
        timed_out,
        stdout: stdout.text,
        stderr: stderr.text,
        truncated: stdout.truncated || stderr.truncated,
        duration_s: started.elapsed().as_secs_f64(),
        spawn_error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(timeout_s: u64, max: usize) -> ExecLimits {
        ExecLimits {
            timeout_s,
            max_output_bytes: max,
        }
    }

    #[test]
    fn passing_script() {
        let dir = tempfile::tempdir().unwrap();
        let r = execute_build_test(dir.path(), "echo hi; exit 0", &limits(10, 1024));
        assert_eq!(r.exit_code, Some(0));
        assert!(r.success());
        assert_eq!(r.stdout, "hi\n");
    }

    #[test]
    fn runs_in_workdir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("marker"), "x").unwrap();
        let r = execute_build_test(dir.path(), "test -f marker", &limits(10, 1024));
        assert!(r.success());
    }

    #[test]
    fn failing_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let r = execute_build_test(dir.path(), "echo oops >&2; exit 3", &limits(10, 1024));
        assert_eq!(r.exit_code, Some(3));
        assert_eq!(r.stderr, "oops\n");
        assert!(!r.success());
    }

    #[test]
    fn timeout_kills() {
        let dir = tempfile::tempdir().unwrap();
        let t = Instant::now();
        let r = execute_build_test(dir.path(), "sleep 30", &limits(1, 1024));
        assert!(r.timed_out);
        assert!(r.killed);
        assert_eq!(r.exit_code, None);
        assert!(t.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn huge_output_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let r = execute_build_test(
            dir.path(),
            "head -c 1073741824 /dev/zero | tr '\\0' 'a'",
            &limits(120, 1 << 20),
        );
        assert!(r.success(), "{:?}", r.spawn_error);
        assert!(r.truncated);
        assert!(r.stdout.len() < (1 << 20) + 200);
        assert!(r
            .stdout
            .contains("[output truncated: 1048576 of 1073741824 bytes kept]"));
    }

    #[test]
    fn missing_workdir_is_a_spawn_error() {
        let r = execute_build_test(Path::new("/nonexistent/dir"), "true", &limits(5, 10));
        assert!(r.spawn_error.is_some());
        assert!(!r.success());
    }
}
