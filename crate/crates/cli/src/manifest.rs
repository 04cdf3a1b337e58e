use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub argv: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seed: u64,
    pub workers: usize,
    pub parameters: serde_json::Value,
    pub outputs: Vec<FileDigest>,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<FileDigest, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Write through a temporary file in the same directory, then rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(|e| Failure::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

/// Files produced by one run, written under the output directory.
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Artifacts { files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.add(name, text);
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<FileDigest>, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path: PathBuf = dir.join(name);
                write_atomic(&path, bytes)?;
                Ok(FileDigest {
                    path: path.display().to_string(),
                    sha256: sha256_hex(bytes),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            subcommand: "degrees".into(),
            tool_version: "0.1.0".into(),
            argv: vec!["arithdyn".into(), "degrees".into()],
            inputs: vec![FileDigest {
                path: "henon.json".into(),
                sha256: sha256_hex(b"x"),
            }],
            seed: 0,
            workers: 2,
            parameters: serde_json::json!({"max_n": 6}),
            outputs: vec![],
            wall_time_seconds: 0.25,
            exit_code: 0,
        };
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<RunManifest>(&text).unwrap(), m);
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
