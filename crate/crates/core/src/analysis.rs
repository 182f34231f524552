//! Post-hoc analysis of batches: per-run metrics, the shared reference map,
//! pairwise statistics and heatmaps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::archive::{GridSpec, MapArchive};
use crate::error::{Error, Result};
use crate::evolution::Variant;
use crate::experiment::RunOutcome;
use crate::metrics::{heatmap_pgm, precision, ReferenceMap};
use crate::stats::{median, pairwise_long, pairwise_table};

pub const METRICS_HEADER: &str =
    "run,treatment,n_occ,medianPrecision,swarmMapOcc,swarmMapPrecision";

/// Final archives of one replicate.
#[derive(Debug, Clone)]
pub struct RunData {
    pub treatment: Variant,
    pub name: String,
    pub local_maps: Vec<MapArchive>,
    pub expressed: MapArchive,
    pub swarm: MapArchive,
}

impl RunData {
    pub fn from_outcome(treatment: Variant, name: impl Into<String>, o: &RunOutcome) -> Self {
        RunData {
            treatment,
            name: name.into(),
            local_maps: if treatment.uses_maps() {
                o.local_maps.clone()
            } else {
                Vec::new()
            },
            expressed: o.expressed.clone(),
            swarm: o.swarm.clone(),
        }
    }

    /// The swarm-level map: merged local maps, or the projection of
    /// expressed behaviours for genome-sharing runs.
    pub fn swarm_map(&self) -> &MapArchive {
        if self.treatment.uses_maps() {
            &self.swarm
        } else {
            &self.expressed
        }
    }

    fn maps(&self) -> impl Iterator<Item = &MapArchive> {
        self.local_maps.iter().chain([&self.expressed, &self.swarm])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub treatment: Variant,
    pub run: String,
    pub n_occ: usize,
    /// Median local-map precision; projected-map precision for genome-sharing
    /// runs. NaN when there is nothing to score.
    pub median_precision: f64,
    pub swarm_map_occ: usize,
    pub swarm_map_precision: f64,
}

fn precision_or_nan(m: &MapArchive, reference: &ReferenceMap) -> Result<f64> {
    if m.is_empty() {
        Ok(f64::NAN)
    } else {
        precision(m, reference)
    }
}

/// Reference map over every archive of every run, and per-run metrics.
pub fn compute_metrics(runs: &[RunData]) -> Result<(ReferenceMap, Vec<RunMetrics>)> {
    let bins = runs
        .first()
        .ok_or(Error::NoUsableRuns)?
        .expressed
        .spec()
        .bins;
    let reference = ReferenceMap::from_maps(bins, runs.iter().flat_map(RunData::maps))?;
    let mut out = Vec::with_capacity(runs.len());
    for r in runs {
        let median_precision = if r.treatment.uses_maps() {
            // Robots that never archived anything have no precision.
            let values = r
                .local_maps
                .iter()
                .filter(|m| !m.is_empty())
                .map(|m| precision(m, &reference))
                .collect::<Result<Vec<f64>>>()?;
            median(&values).unwrap_or(f64::NAN)
        } else {
            precision_or_nan(&r.expressed, &reference)?
        };
        let swarm = r.swarm_map();
        out.push(RunMetrics {
            treatment: r.treatment,
            run: r.name.clone(),
            n_occ: r.expressed.occupied_count(),
            median_precision,
            swarm_map_occ: swarm.occupied_count(),
            swarm_map_precision: precision_or_nan(swarm, &reference)?,
        });
    }
    Ok((reference, out))
}

pub fn metrics_csv(metrics: &[RunMetrics]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for m in metrics {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            m.run,
            m.treatment.label(),
            m.n_occ,
            m.median_precision,
            m.swarm_map_occ,
            m.swarm_map_precision
        );
    }
    s
}

/// Per-treatment samples of one metric in treatment order, NaNs dropped.
pub fn groups_of(
    metrics: &[RunMetrics],
    value: impl Fn(&RunMetrics) -> f64,
) -> Vec<(String, Vec<f64>)> {
    let mut by: BTreeMap<Variant, Vec<f64>> = BTreeMap::new();
    for m in metrics {
        let v = value(m);
        let entry = by.entry(m.treatment).or_default();
        if !v.is_nan() {
            entry.push(v);
        }
    }
    by.into_iter()
        .map(|(v, xs)| (v.label().to_string(), xs))
        .collect()
}

fn read_manifest(dir: &Path) -> Result<(Variant, usize)> {
    let path = dir.join("manifest.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let pairs = crate::config::parse_config_text(&text, &path)?;
    let get = |key: &str| {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse {
                path: path.clone(),
                line: 0,
                reason: format!("missing `{key}`"),
            })
    };
    let variant = get("variant")?.parse().map_err(|reason| Error::Parse {
        path: path.clone(),
        line: 0,
        reason,
    })?;
    let bins = get("map-bins")?.parse().map_err(|_| Error::Parse {
        path: path.clone(),
        line: 0,
        reason: "bad map-bins".into(),
    })?;
    Ok((variant, bins))
}

fn read_map(path: &Path, spec: GridSpec) -> Result<MapArchive> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MapArchive::from_dump(&text, spec, path)
}

fn load_run(dir: &Path, variant: Variant, spec: GridSpec, name: String) -> Result<RunData> {
    let expressed = read_map(&dir.join("expressed.map"), spec)?;
    let (local_maps, swarm) = if variant.uses_maps() {
        let maps_dir = dir.join("maps");
        let mut files: Vec<PathBuf> = fs::read_dir(&maps_dir)
            .map_err(|e| Error::io(&maps_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "map"))
            .collect();
        files.sort();
        let maps = files
            .iter()
            .map(|p| read_map(p, spec))
            .collect::<Result<Vec<_>>>()?;
        (maps, read_map(&dir.join("swarm.map"), spec)?)
    } else {
        (Vec::new(), MapArchive::new(spec))
    };
    Ok(RunData {
        treatment: variant,
        name,
        local_maps,
        expressed,
        swarm,
    })
}

/// Loads every `run_*` directory of a batch. Runs with missing or unreadable
/// dumps are skipped with a warning.
pub fn load_batch(dir: &Path) -> Result<Vec<RunData>> {
    let (variant, bins) = read_manifest(dir)?;
    let spec = GridSpec {
        bins,
        ..GridSpec::default()
    };
    let mut run_dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with("run_"))
        })
        .collect();
    run_dirs.sort();
    let prefix = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut runs = Vec::new();
    for rd in run_dirs {
        let name = format!("{prefix}/{}", rd.file_name().unwrap().to_string_lossy());
        match load_run(&rd, variant, spec, name) {
            Ok(r) => runs.push(r),
            Err(e) => log::warn!("skipping {}: {e}", rd.display()),
        }
    }
    Ok(runs)
}

/// Full analysis of `dirs` into `out`. Returns a short text summary.
pub fn analyze(dirs: &[PathBuf], out: &Path) -> Result<String> {
    let mut runs = Vec::new();
    for d in dirs {
        runs.extend(load_batch(d)?);
    }
    if runs.is_empty() {
        return Err(Error::NoUsableRuns);
    }
    let (reference, metrics) = compute_metrics(&runs)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let write = |name: &str, body: &str| {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("reference.map", &reference.to_dump())?;
    write("metrics.csv", &metrics_csv(&metrics))?;

    let mut summary = format!("{} runs analysed\n", runs.len());
    type Measure = (&'static str, fn(&RunMetrics) -> f64);
    let measures: [Measure; 3] = [
        ("diversity", |m| m.n_occ as f64),
        ("precision", |m| m.median_precision),
        ("swarm_precision", |m| m.swarm_map_precision),
    ];
    for (name, f) in measures {
        let groups = groups_of(&metrics, f);
        for (g, xs) in &groups {
            let _ = writeln!(
                summary,
                "{name} {g}: n={} median={}",
                xs.len(),
                median(xs).unwrap_or(f64::NAN)
            );
        }
        if groups.len() < 2 || groups.iter().any(|(_, xs)| xs.len() < 3) {
            log::warn!("{name}: need two treatments with at least 3 runs each; skipping tests");
            continue;
        }
        write(&format!("stats_{name}.csv"), &pairwise_table(&groups)?)?;
        write(&format!("stats_{name}_long.csv"), &pairwise_long(&groups)?)?;
    }

    let heat = out.join("heatmaps");
    fs::create_dir_all(&heat).map_err(|e| Error::io(&heat, e))?;
    for r in &runs {
        let stem = r.name.replace('/', "_");
        for (kind, m) in [("expressed", &r.expressed), ("swarm", r.swarm_map())] {
            let p = heat.join(format!("{stem}_{kind}.pgm"));
            fs::write(&p, heatmap_pgm(m)).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(summary)
}
