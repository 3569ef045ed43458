use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn pbk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbk"))
        .args(args)
        .output()
        .expect("pbk runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Writes a scenario with one `[[process]]` block per entry of `eps`.
pub fn write_scenario(dir: &Path, name: &str, head: &str, eps: &[f64]) -> PathBuf {
    let mut text = head.to_owned();
    for e in eps {
        writeln!(text, "[[process]]\nepsilon = {e:?}").unwrap();
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}
