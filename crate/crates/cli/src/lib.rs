//! Manifest-driven runner behind the `soliton` binary.
//!
//! A run builds every model of a manifest, samples a seeded grid for each,
//! runs the requested suites and assembles a [`run::RunReport`].

pub mod manifest;
pub mod run;

use std::path::{Path, PathBuf};

/// Environment variable naming the default report directory.
pub const REPORT_DIR_ENV: &str = "SOLITON_REPORT_DIR";

/// Exit codes of the binary.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const PARSE_ERROR: i32 = 2;
    pub const BUILD_ERROR: i32 = 3;
}

/// `--out`, then the manifest's `output_path` (relative to the manifest),
/// then `<report dir>/<manifest stem>.<command>.json`.
pub fn report_path(out: Option<&Path>, manifest_path: &Path, output_path: Option<&str>, report_dir: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(p) = output_path {
        let p = Path::new(p);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        return manifest_path.parent().unwrap_or(Path::new(".")).join(p);
    }
    let stem = manifest_path.file_stem().and_then(|s| s.to_str()).unwrap_or("manifest");
    report_dir.unwrap_or(Path::new(".")).join(format!("{stem}.{command}.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_path_precedence() {
        let m = Path::new("runs/a.toml");
        assert_eq!(report_path(Some(Path::new("x.json")), m, Some("y.json"), None, "verify"), PathBuf::from("x.json"));
        assert_eq!(report_path(None, m, Some("y.json"), None, "verify"), PathBuf::from("runs/y.json"));
        assert_eq!(report_path(None, m, None, Some(Path::new("/tmp/r")), "classify"), PathBuf::from("/tmp/r/a.classify.json"));
        assert_eq!(report_path(None, m, None, None, "verify"), PathBuf::from("./a.verify.json"));
    }
}
