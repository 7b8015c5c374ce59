#![allow(dead_code)]

use std::path::{Path, PathBuf};

use layerbench::fsutil;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// A writable copy of a fixture corpus.
pub fn scratch_corpus(name: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dest = tmp.path().join(name);
    fsutil::copy_dir_all(&fixture(name), &dest).unwrap();
    (tmp, dest)
}
