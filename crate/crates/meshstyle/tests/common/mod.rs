#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub const CORPUS: [&str; 4] = ["cube.obj", "tetrahedron.obj", "torus.obj", "octahedron.ply"];

/// Settings that keep a CLI run to a fraction of a second.
pub const FAST: [&str; 10] = [
    "--set",
    "resolution=64",
    "--set",
    "width=32",
    "--set",
    "anchor_grid_count=8",
    "--set",
    "n_theta=2",
    "--set",
    "snapshot_width=64",
];

pub fn meshstyle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshstyle")).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
