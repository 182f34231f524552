//! Checked-in fixtures: small inputs with frozen expected outputs.
//!
//! Each fixture is a directory holding `fixture.txt` (`kind`, `provenance`,
//! `description` and kind-specific keys) plus its inputs and expectations:
//!
//! * `merge`: `input_*.map` merged in name order, compared to `expected.map`.
//! * `insert`: `candidates.txt` (`fitness,trait1,trait2` per line) inserted in
//!   order into an empty map, compared to `expected.map`.
//! * `stats`: samples `a.txt` and `b.txt`, one value per line, compared to
//!   the rendered decision in `expected.txt`.
//! * `smoke`: `config.txt` run with `seed`; every artifact is compared byte
//!   for byte with `expected/`. Only these are rewritten by `bless`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::archive::{BehaviourDescriptor, Elite, GridSpec, MapArchive};
use crate::config::{parse_config, parse_config_text};
use crate::error::{Error, Result};
use crate::experiment::run_experiment;
use crate::genome::Genome;
use crate::stats::compare;

type Files = BTreeMap<String, Vec<u8>>;

#[derive(Debug, Clone)]
pub struct FixtureOutcome {
    pub name: String,
    pub kind: String,
    pub provenance: String,
    /// Files that differ, are missing or are unexpected.
    pub mismatches: Vec<String>,
    /// Set when `bless` rewrote the expectations.
    pub blessed: bool,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() || self.blessed
    }
}

impl fmt::Display for FixtureOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.blessed, self.mismatches.is_empty()) {
            (true, true) => "BLESSED (unchanged)",
            (true, false) => "BLESSED",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        write!(
            f,
            "{status} {} [{}, {}]",
            self.name, self.kind, self.provenance
        )?;
        for m in &self.mismatches {
            write!(f, "\n    {m}")?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn meta(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = dir.join("fixture.txt");
    Ok(parse_config_text(&read(&path)?, &path)?
        .into_iter()
        .collect())
}

fn grid(meta: &BTreeMap<String, String>, path: &Path) -> Result<GridSpec> {
    let mut spec = GridSpec::default();
    if let Some(b) = meta.get("bins") {
        spec.bins = b.parse().map_err(|_| parse_err(path, 0, "bad bins"))?;
    }
    if let Some(b) = meta.get("bound") {
        spec.max_distance_bound = b.parse().map_err(|_| parse_err(path, 0, "bad bound"))?;
    }
    Ok(spec)
}

fn collect_files(root: &Path) -> Result<Files> {
    fn walk(root: &Path, dir: &Path, out: &mut Files) -> Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, fs::read(&p).map_err(|e| Error::io(&p, e))?);
            }
        }
        Ok(())
    }
    let mut out = Files::new();
    if root.exists() {
        walk(root, root, &mut out)?;
    }
    Ok(out)
}

/// Renders the statistical decision for two samples as stored in `expected.txt`.
pub fn render_comparison(a: &[f64], b: &[f64]) -> Result<String> {
    let r = compare(a, b)?;
    Ok(format!(
        "test = {}\ndirection = {}\np_value = {:.6e}\ndegenerate = {}\n",
        r.test_used,
        r.direction.symbol(),
        r.p_value,
        r.degenerate
    ))
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim()
                .parse()
                .map_err(|_| parse_err(path, n + 1, "expected a number"))
        })
        .collect()
}

/// Produces the files a fixture is checked against, keyed by name relative
/// to the expectation location.
fn actual(dir: &Path, kind: &str, meta: &BTreeMap<String, String>) -> Result<Files> {
    let meta_path = dir.join("fixture.txt");
    let mut files = Files::new();
    match kind {
        "merge" => {
            let spec = grid(meta, &meta_path)?;
            let mut inputs: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .is_some_and(|n| n.to_string_lossy().starts_with("input_"))
                })
                .collect();
            inputs.sort();
            let maps = inputs
                .iter()
                .map(|p| MapArchive::from_dump(&read(p)?, spec, p))
                .collect::<Result<Vec<_>>>()?;
            let merged = crate::archive::merge_list(&maps)?;
            files.insert("expected.map".into(), merged.to_dump(false).into_bytes());
        }
        "insert" => {
            let spec = grid(meta, &meta_path)?;
            let path = dir.join("candidates.txt");
            let mut map = MapArchive::new(spec);
            for (n, line) in read(&path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let f: Vec<&str> = line.split(',').map(str::trim).collect();
                let bad = || parse_err(&path, n + 1, "expected `fitness,trait1,trait2`");
                if f.len() != 3 {
                    return Err(bad());
                }
                let fitness: u32 = f[0].parse().map_err(|_| bad())?;
                let t1: f64 = f[1].parse().map_err(|_| bad())?;
                let t2: f64 = f[2].parse().map_err(|_| bad())?;
                map.try_insert(Elite::new(
                    Genome::zeros(),
                    fitness,
                    BehaviourDescriptor::new(t1, t2),
                ));
            }
            files.insert("expected.map".into(), map.to_dump(false).into_bytes());
        }
        "stats" => {
            let a = read_samples(&dir.join("a.txt"))?;
            let b = read_samples(&dir.join("b.txt"))?;
            files.insert(
                "expected.txt".into(),
                render_comparison(&a, &b)?.into_bytes(),
            );
        }
        "smoke" => {
            let seed: u64 = meta
                .get("seed")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(&meta_path, 0, "smoke fixtures need a numeric `seed`"))?;
            let cfg = parse_config(&[], Some(&dir.join("config.txt")))?;
            let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            run_experiment(&cfg, seed, tmp.path())?;
            files = collect_files(tmp.path())?;
        }
        other => {
            return Err(parse_err(
                &meta_path,
                0,
                format!("unknown fixture kind `{other}`"),
            ))
        }
    }
    Ok(files)
}

fn expected(dir: &Path, kind: &str, names: &Files) -> Result<Files> {
    if kind == "smoke" {
        return collect_files(&dir.join("expected"));
    }
    let mut out = Files::new();
    for name in names.keys() {
        let p = dir.join(name);
        if let Ok(bytes) = fs::read(&p) {
            out.insert(name.clone(), bytes);
        }
    }
    Ok(out)
}

fn diff(actual: &Files, expected: &Files) -> Vec<String> {
    let mut out = Vec::new();
    for (name, bytes) in actual {
        match expected.get(name) {
            None => out.push(format!("missing expectation: {name}")),
            Some(e) if e != bytes => out.push(format!("differs: {name}")),
            _ => {}
        }
    }
    for name in expected.keys().filter(|n| !actual.contains_key(*n)) {
        out.push(format!("not produced: {name}"));
    }
    out
}

/// Verifies one fixture directory; with `bless`, smoke fixtures have their
/// expectations rewritten and the changed files are reported.
pub fn run_fixture(dir: &Path, bless: bool) -> Result<FixtureOutcome> {
    let meta = meta(dir)?;
    let kind = meta.get("kind").cloned().unwrap_or_default();
    let got = actual(dir, &kind, &meta)?;
    let want = expected(dir, &kind, &got)?;
    let mismatches = diff(&got, &want);
    let blessed = bless && kind == "smoke";
    if blessed && !mismatches.is_empty() {
        let root = dir.join("expected");
        if root.exists() {
            fs::remove_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        }
        for (name, bytes) in &got {
            let p = root.join(name);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(FixtureOutcome {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        kind,
        provenance: meta
            .get("provenance")
            .cloned()
            .unwrap_or_else(|| "unspecified".into()),
        mismatches,
        blessed,
    })
}

/// Runs every fixture directory under `root` in name order.
pub fn run_all(root: &Path, bless: bool) -> Result<Vec<FixtureOutcome>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("fixture.txt").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| run_fixture(d, bless)).collect()
}
