use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bbm_core::analysis::Check;
use bbm_core::gates::{Gates, GATES_VERSION};
use bbm_core::harness::{read_store, Store};
use bbm_core::{Error, Result};

pub fn load_gates(path: Option<&Path>) -> Result<Gates> {
    match path {
        None => Ok(Gates::default()),
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
    }
}

/// A store with at least one replica record.
pub fn load_store(path: &Path) -> Result<Store> {
    if !path.exists() {
        return Err(Error::EmptyInput(format!("store {} does not exist", path.display())));
    }
    let s = read_store(path)?;
    if s.replicas().next().is_none() {
        return Err(Error::EmptyInput(format!("store {} has no replica records", path.display())));
    }
    Ok(s)
}

pub fn write(path: &Path, body: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    Ok(path.to_path_buf())
}

/// `prefix` with `ext` appended (`out/fit` -> `out/fit.csv`).
pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Report preamble: title, source store and the full gates table.
pub fn header(title: &str, store: &Path, gates: &Gates) -> String {
    let mut s = format!("# {title}\nstore = {}\n", store.display());
    let _ = writeln!(s, "\n## gates (built-in version {GATES_VERSION})");
    s.push_str(&gates.to_text());
    s.push('\n');
    s
}

pub fn checks_text(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{:<4} {}: value={} target={} band=[{}, {}] {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.target,
            c.lo,
            c.hi,
            c.note
        );
    }
    s
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut s = String::from(Check::CSV_HEADER);
    s.push('\n');
    for c in checks {
        s.push_str(&c.csv_row());
        s.push('\n');
    }
    s
}

/// Worker count: `auto` (`None`) or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parallelism(pub Option<usize>);

impl std::str::FromStr for Parallelism {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Parallelism(None));
        }
        match s.parse::<usize>() {
            Ok(0) => Err("parallelism must be positive or `auto`".into()),
            Ok(n) => Ok(Parallelism(Some(n))),
            Err(_) => Err(format!("expected a count or `auto`, got `{s}`")),
        }
    }
}

/// `lo:hi` or a single value.
pub fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}` in range `{s}`"));
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("range `{s}` must satisfy lo <= hi"));
    }
    Ok((lo, hi))
}

/// `GxB` or a single count used for both axes.
pub fn parse_cells(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |v: &str| match v.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("cell counts must be positive integers, got `{s}`")),
        Ok(n) => Ok(n),
    };
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}
