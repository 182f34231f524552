//! Run configuration: defaults, flat `key = value` files and overrides.
//!
//! Keys are matched case-insensitively with `-` and `_` ignored, so
//! `map-bins`, `map_bins` and `mapBins` name the same setting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::archive::GridSpec;
use crate::error::{Error, Result};
use crate::evolution::Variant;
use crate::genome::{MutationParams, SigmaRule, SIGMA_INIT};
use crate::world::ArenaConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub population: usize,
    pub lifetime: usize,
    pub generations: usize,
    pub map_bins: usize,
    /// Displacement mapped onto the last trait-1 bin. `None` means the largest
    /// displacement a robot can reach: the arena diameter, or the distance
    /// covered in one lifetime at full speed if that is shorter.
    pub max_distance_bound: Option<f64>,
    pub arena: ArenaConfig,
    pub sigma_init: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_rule: SigmaRule,
    pub weight_bound: f64,
    pub seed: u64,
    pub replicates: usize,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub dump_genomes: bool,
    pub trace: bool,
}

impl RunConfig {
    /// Full-scale defaults for the given variant.
    pub fn new(variant: Variant) -> Self {
        let m = MutationParams::default();
        RunConfig {
            variant,
            population: 200,
            lifetime: 800,
            generations: 1000,
            map_bins: 15,
            max_distance_bound: None,
            arena: ArenaConfig::default(),
            sigma_init: SIGMA_INIT,
            sigma_min: m.sigma_min,
            sigma_max: m.sigma_max,
            sigma_rule: m.rule,
            weight_bound: m.weight_bound,
            seed: 1,
            replicates: 30,
            out: PathBuf::from("runs"),
            workers: None,
            dump_genomes: false,
            trace: false,
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            bins: self.map_bins,
            max_distance_bound: self.distance_bound(),
        }
    }

    pub fn distance_bound(&self) -> f64 {
        self.max_distance_bound.unwrap_or_else(|| {
            self.arena
                .diameter
                .min(self.lifetime as f64 * self.arena.max_speed)
        })
    }

    pub fn mutation(&self) -> MutationParams {
        MutationParams {
            rule: self.sigma_rule,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            weight_bound: self.weight_bound,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let k = normalise_key(key);
        let bad = |reason: String| Error::config(key, reason);
        fn num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
        }
        fn flag(v: &str, key: &str) -> Result<bool> {
            match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
            }
        }
        match k.as_str() {
            "variant" => self.variant = value.parse().map_err(bad)?,
            "population" | "populationsize" => self.population = num(value, key)?,
            "lifetime" => self.lifetime = num(value, key)?,
            "generations" | "maxgen" => self.generations = num(value, key)?,
            "mapbins" => self.map_bins = num(value, key)?,
            "maxdistancebound" => self.max_distance_bound = Some(num(value, key)?),
            "diameter" => self.arena.diameter = num(value, key)?,
            "robotradius" => self.arena.robot_radius = num(value, key)?,
            "tokenradius" => self.arena.token_radius = num(value, key)?,
            "sensorrange" => self.arena.sensor_range = num(value, key)?,
            "broadcastrange" => self.arena.broadcast_range = num(value, key)?,
            "maxspeed" => self.arena.max_speed = num(value, key)?,
            "maxturnrate" => self.arena.max_turn_rate = num::<f64>(value, key)?.to_radians(),
            "redtokens" => self.arena.red_tokens = num(value, key)?,
            "bluetokens" => self.arena.blue_tokens = num(value, key)?,
            "siginit" | "sigmainit" => self.sigma_init = num(value, key)?,
            "sigmamin" => self.sigma_min = num(value, key)?,
            "sigmamax" => self.sigma_max = num(value, key)?,
            "sigmarule" => {
                self.sigma_rule = match value.to_ascii_lowercase().as_str() {
                    "self-adaptive" | "selfadaptive" | "lognormal" => SigmaRule::SelfAdaptive,
                    "fixed" => SigmaRule::Fixed,
                    other => return Err(bad(format!("unknown sigma rule `{other}`"))),
                }
            }
            "weightbound" => self.weight_bound = num(value, key)?,
            "seed" => self.seed = num(value, key)?,
            "replicates" => self.replicates = num(value, key)?,
            "out" | "outputdir" => self.out = PathBuf::from(value),
            "workers" => self.workers = Some(num(value, key)?),
            "dumpgenomes" => self.dump_genomes = flag(value, key)?,
            "trace" => self.trace = flag(value, key)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("population", self.population),
            ("lifetime", self.lifetime),
            ("map-bins", self.map_bins),
            ("replicates", self.replicates),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::config(k, "must be positive"));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be positive"));
        }
        if let Some(b) = self.max_distance_bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::config("max-distance-bound", "must be positive"));
            }
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max) {
            return Err(Error::config(
                "sigma-min",
                "need 0 < sigma-min <= sigma-max",
            ));
        }
        if !(self.sigma_init >= self.sigma_min && self.sigma_init <= self.sigma_max) {
            return Err(Error::config(
                "sigma-init",
                "must lie in [sigma-min, sigma-max]",
            ));
        }
        if self.weight_bound.is_nan() || self.weight_bound <= 0.0 {
            return Err(Error::config("weight-bound", "must be positive"));
        }
        self.arena
            .validate()
            .map_err(|(k, r)| Error::config(k, r))?;
        let r = self.arena.radius();
        let disk = std::f64::consts::PI * r * r;
        let robot_area = std::f64::consts::PI * (2.0 * self.arena.robot_radius).powi(2);
        if self.population as f64 * robot_area > 0.5 * disk {
            return Err(Error::config("population", "too many robots for the arena"));
        }
        Ok(())
    }

    /// Every setting that affects results, one `key = value` per line in a
    /// fixed order. Output location and worker count are excluded.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let bound = self.distance_bound();
        let rule = match self.sigma_rule {
            SigmaRule::SelfAdaptive => "self-adaptive",
            SigmaRule::Fixed => "fixed",
        };
        let a = &self.arena;
        let lines: Vec<(&str, String)> = vec![
            ("variant", self.variant.to_string()),
            ("population", self.population.to_string()),
            ("lifetime", self.lifetime.to_string()),
            ("generations", self.generations.to_string()),
            ("map-bins", self.map_bins.to_string()),
            ("max-distance-bound", bound.to_string()),
            ("diameter", a.diameter.to_string()),
            ("robot-radius", a.robot_radius.to_string()),
            ("token-radius", a.token_radius.to_string()),
            ("sensor-range", a.sensor_range.to_string()),
            ("broadcast-range", a.broadcast_range.to_string()),
            ("max-speed", a.max_speed.to_string()),
            ("max-turn-rate", a.max_turn_rate.to_degrees().to_string()),
            ("red-tokens", a.red_tokens.to_string()),
            ("blue-tokens", a.blue_tokens.to_string()),
            ("sigma-init", self.sigma_init.to_string()),
            ("sigma-min", self.sigma_min.to_string()),
            ("sigma-max", self.sigma_max.to_string()),
            ("sigma-rule", rule.to_string()),
            ("weight-bound", self.weight_bound.to_string()),
            ("seed", self.seed.to_string()),
            ("replicates", self.replicates.to_string()),
            ("dump-genomes", self.dump_genomes.to_string()),
            ("trace", self.trace.to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn normalise_key(key: &str) -> String {
    key.trim()
        .trim_start_matches("--")
        .chars()
        .filter(|c| *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            reason: "expected `key = value`".into(),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Resolves a configuration: defaults, then the file, then `overrides`
/// (later entries win). A variant must come from the file or the overrides.
pub fn parse_config(overrides: &[(String, String)], file: Option<&Path>) -> Result<RunConfig> {
    let mut pairs = Vec::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        pairs.extend(parse_config_text(&text, path)?);
    }
    pairs.extend(overrides.iter().cloned());
    let variant = pairs
        .iter()
        .rev()
        .find(|(k, _)| normalise_key(k) == "variant")
        .ok_or_else(|| {
            Error::config(
                "variant",
                "missing; pass --variant or set it in the config file",
            )
        })?;
    let variant: Variant = variant
        .1
        .parse()
        .map_err(|e: String| Error::config("variant", e))?;
    let mut cfg = RunConfig::new(variant);
    for (k, v) in &pairs {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// SplitMix64 output for `state`.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index`: the `index + 1`-th output of a SplitMix64
/// stream started at `base`.
pub fn replicate_seed(base: u64, index: usize) -> u64 {
    splitmix64(base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_match_published_setup() {
        let c = parse_config(&kv(&[("variant", "M1")]), None).unwrap();
        assert_eq!(c.population, 200);
        assert_eq!(c.lifetime, 800);
        assert_eq!(c.generations, 1000);
        assert_eq!(c.map_bins, 15);
        assert_eq!(c.arena.red_tokens, 150);
        assert_eq!(c.arena.blue_tokens, 150);
        assert_eq!(c.sigma_init, 0.1);
        assert_eq!(c.replicates, 30);
        assert_eq!(c.arena.diameter, 956.0);
        assert_eq!(c.grid().max_distance_bound, 956.0);
    }

    #[test]
    fn short_lifetimes_shrink_the_distance_bound() {
        let mut c = RunConfig::new(Variant::R);
        c.lifetime = 300;
        assert_eq!(c.grid().max_distance_bound, 600.0);
        c.max_distance_bound = Some(956.0);
        assert_eq!(c.grid().max_distance_bound, 956.0);
    }

    #[test]
    fn variant_is_required() {
        let err = parse_config(&[], None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "variant"));
    }

    #[test]
    fn overrides_apply() {
        let c = parse_config(&kv(&[("--variant", "M2"), ("--generations", "50")]), None).unwrap();
        assert_eq!(c.variant, Variant::M2);
        assert_eq!(c.generations, 50);
    }

    #[test]
    fn invalid_values_name_the_key() {
        let err = parse_config(&kv(&[("variant", "M1"), ("--mapBins", "0")]), None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "map-bins"));
        let err =
            parse_config(&kv(&[("variant", "M1"), ("population", "many")]), None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "population"));
        let err = parse_config(&kv(&[("variant", "M1"), ("colour", "red")]), None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "colour"));
        assert!(parse_config(&kv(&[("variant", "Q")]), None).is_err());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# desk scale\nvariant = R\npopulation = 50\nlifetime=300\n",
        )
        .unwrap();
        let c = parse_config(&kv(&[("lifetime", "100")]), Some(&path)).unwrap();
        assert_eq!(c.variant, Variant::R);
        assert_eq!(c.population, 50);
        assert_eq!(c.lifetime, 100);
        std::fs::write(&path, "variant = R\nbogus line\n").unwrap();
        assert!(matches!(
            parse_config(&[], Some(&path)),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn canonical_form_round_trips() {
        let mut c = RunConfig::new(Variant::M3);
        c.population = 20;
        c.arena.sensor_range = 80.0;
        let pairs = parse_config_text(&c.canonical(), Path::new("-")).unwrap();
        let back = parse_config(&pairs, None).unwrap();
        assert_eq!(back.canonical(), c.canonical());
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn replicate_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..100).map(|i| replicate_seed(42, i)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), 100);
        assert_eq!(replicate_seed(42, 3), seeds[3]);
        // Reference SplitMix64 output for state 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
