#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Golden network: seven MIT packages and one AGPL-3.0 package `i`;
/// a, b, c and d reach e, which depends on i.
pub const GOLDEN_PROJECTS: &str = "\
Platform,ID,Name,Licenses
NPM,a,alpha,MIT
NPM,b,bravo,MIT
NPM,c,charlie,MIT
NPM,d,delta,MIT
NPM,e,echo,MIT
NPM,f,foxtrot,MIT
NPM,g,golf,MIT
NPM,i,india,AGPL-3.0
Maven,m1,other-registry,Apache-2.0
";

/// Eight logical links; the extra rows are a repeated version link, a
/// development-only link and a row from another registry.
pub const GOLDEN_DEPENDENCIES: &str = "\
Platform,Project ID,Dependency Project ID,Dependency Kind
NPM,a,b,runtime
NPM,a,b,runtime
NPM,b,e,runtime
NPM,c,e,compile
NPM,d,c,runtime
NPM,e,i,runtime
NPM,e,f,runtime
NPM,f,g,runtime
NPM,d,g,
NPM,g,a,Development
Maven,m1,m1,runtime
";

pub const PERMISSIVE_PROJECTS: &str = "\
Platform,ID,Name,Licenses
Cargo,x,x,MIT
Cargo,y,y,Apache-2.0
Cargo,z,z,\"MIT,Apache-2.0\"
";

pub const PERMISSIVE_DEPENDENCIES: &str = "\
Platform,Project ID,Dependency Project ID,Dependency Kind
Cargo,x,y,runtime
Cargo,y,z,runtime
";

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_depcompat"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("DEPCOMPAT_WORKERS", "2")
        .output()
        .expect("spawn depcompat")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_dumps(dir: &Path, projects: &str, dependencies: &str) -> (PathBuf, PathBuf) {
    let p = dir.join("projects.csv");
    let d = dir.join("dependencies.csv");
    fs::write(&p, projects).unwrap();
    fs::write(&d, dependencies).unwrap();
    (p, d)
}

/// Writes the golden dumps and filters them into `<dir>/data`.
pub fn golden_data(dir: &Path) -> PathBuf {
    filtered(dir, GOLDEN_PROJECTS, GOLDEN_DEPENDENCIES, "npm")
}

pub fn filtered(dir: &Path, projects: &str, dependencies: &str, ecosystems: &str) -> PathBuf {
    let (p, d) = write_dumps(dir, projects, dependencies);
    let data = dir.join("data");
    let out = run(&[
        "filter",
        "--projects",
        p.to_str().unwrap(),
        "--deps",
        d.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--ecosystems",
        ecosystems,
    ]);
    assert!(out.status.success(), "filter failed: {}", stderr(&out));
    data
}
