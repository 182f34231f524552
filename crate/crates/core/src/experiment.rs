//! Single replicates, their on-disk artifacts, and batches of replicates.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::archive::MapArchive;
use crate::config::{replicate_seed, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{run_generation, GenerationReport};
use crate::exec::Exec;
use crate::genome::Genome;
use crate::metrics::build_swarm_map;
use crate::world::World;

pub const GENERATIONS_HEADER: &str =
    "generation,robotId,active,fitness,trait1,trait2,cell_i,cell_j,localMapOcc";
pub const SUMMARY_HEADER: &str = "generation,activeCount,nOcc,swarmMapOcc,totalFitness";
pub const TRACE_HEADER: &str = "step,robotId,x,y,heading,tokensRed,tokensBlue";

/// Swarm-level numbers for one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSummary {
    pub generation: usize,
    pub active_count: usize,
    /// Distinct cells filled by the behaviours active robots expressed.
    pub n_occ: usize,
    /// Occupancy of the merged local maps after selection (0 without maps).
    pub swarm_map_occ: usize,
    pub total_fitness: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub generations: Vec<GenerationSummary>,
    /// Final local map of every robot, by id.
    pub local_maps: Vec<MapArchive>,
    /// Behaviours expressed in the last generation (empty if none ran).
    pub expressed: MapArchive,
    pub swarm: MapArchive,
}

/// Hooks for streaming per-step and per-generation data out of a run.
pub trait Observer {
    fn wants_steps(&self) -> bool {
        false
    }
    fn step(&mut self, _world: &World) {}
    fn generation(&mut self, _report: &GenerationReport) {}
}

impl Observer for () {}

/// Initial world for `seed`: random genomes first, then placement.
pub fn initial_world(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> World {
    let genomes: Vec<Genome> = (0..cfg.population)
        .map(|_| Genome::random(rng, cfg.sigma_init))
        .collect();
    World::populate(
        cfg.arena.clone(),
        cfg.variant.payload(),
        genomes,
        &MapArchive::new(cfg.grid()),
        rng,
    )
}

/// Runs one replicate in memory.
pub fn run_replicate(cfg: &RunConfig, seed: u64, observer: &mut dyn Observer) -> RunOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = initial_world(cfg, &mut rng);
    let grid = cfg.grid();
    let mutation = cfg.mutation();
    let mut generations = Vec::with_capacity(cfg.generations);
    let mut expressed = MapArchive::new(grid);
    let trace = observer.wants_steps();
    for g in 0..cfg.generations {
        let report = run_generation(
            &mut world,
            cfg.variant,
            &mutation,
            cfg.lifetime,
            g,
            &mut rng,
            |w| {
                if trace {
                    observer.step(w)
                }
            },
        );
        expressed = report.expressed_map(grid);
        let swarm_map_occ = if cfg.variant.uses_maps() {
            swarm_of(&world).occupied_count()
        } else {
            0
        };
        generations.push(GenerationSummary {
            generation: g,
            active_count: report.active_count,
            n_occ: expressed.occupied_count(),
            swarm_map_occ,
            total_fitness: report.robots.iter().map(|r| r.fitness as u64).sum(),
        });
        observer.generation(&report);
    }
    let local_maps: Vec<MapArchive> = world
        .robots
        .iter()
        .map(|r| (*r.local_map).clone())
        .collect();
    let swarm = swarm_of(&world);
    RunOutcome {
        seed,
        generations,
        local_maps,
        expressed,
        swarm,
    }
}

fn swarm_of(world: &World) -> MapArchive {
    let spec = *world
        .robots
        .first()
        .map_or(&Default::default(), |r| r.local_map.spec());
    build_swarm_map(world.robots.iter().map(|r| &*r.local_map), spec).expect("equal grids")
}

struct CsvObserver {
    generations: BufWriter<File>,
    trace: Option<BufWriter<File>>,
    error: Option<std::io::Error>,
}

impl CsvObserver {
    fn record(&mut self, r: std::io::Result<()>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }
}

impl Observer for CsvObserver {
    fn wants_steps(&self) -> bool {
        self.trace.is_some()
    }

    fn step(&mut self, world: &World) {
        let Some(out) = self.trace.as_mut() else {
            return;
        };
        let mut res = Ok(());
        for r in &world.robots {
            res = res.and_then(|_| {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    world.iteration,
                    r.id,
                    r.position.x,
                    r.position.y,
                    r.heading,
                    r.tokens_red,
                    r.tokens_blue
                )
            });
        }
        self.record(res);
    }

    fn generation(&mut self, report: &GenerationReport) {
        let mut res = Ok(());
        for r in &report.robots {
            res = res.and_then(|_| {
                writeln!(
                    self.generations,
                    "{},{},{},{},{},{},{},{},{}",
                    report.generation,
                    r.id,
                    u8::from(r.active),
                    r.fitness,
                    r.descriptor.max_displacement,
                    r.descriptor.red_ratio,
                    r.cell.i,
                    r.cell.j,
                    r.local_map_occupancy
                )
            });
        }
        self.record(res);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs one replicate and writes its artifacts into `dir`:
/// `generations.csv`, `summary.csv`, `expressed.map`, `swarm.map`,
/// `maps/robot_NNN.map` (map-sharing variants) and optionally `trace.csv`.
pub fn run_experiment(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let gen_path = dir.join("generations.csv");
    let mut generations = create(&gen_path)?;
    writeln!(generations, "{GENERATIONS_HEADER}").map_err(|e| Error::io(&gen_path, e))?;
    let trace_path = dir.join("trace.csv");
    let trace = if cfg.trace {
        let mut t = create(&trace_path)?;
        writeln!(t, "{TRACE_HEADER}").map_err(|e| Error::io(&trace_path, e))?;
        Some(t)
    } else {
        None
    };
    let mut obs = CsvObserver {
        generations,
        trace,
        error: None,
    };
    let outcome = run_replicate(cfg, seed, &mut obs);
    if let Some(e) = obs.error.take() {
        return Err(Error::io(dir, e));
    }
    obs.generations
        .flush()
        .map_err(|e| Error::io(&gen_path, e))?;
    if let Some(t) = obs.trace.as_mut() {
        t.flush().map_err(|e| Error::io(&trace_path, e))?;
    }

    let mut summary = format!("{SUMMARY_HEADER}\n");
    for g in &outcome.generations {
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            g.generation, g.active_count, g.n_occ, g.swarm_map_occ, g.total_fitness
        ));
    }
    write_file(&dir.join("summary.csv"), &summary)?;
    write_file(
        &dir.join("expressed.map"),
        &outcome.expressed.to_dump(cfg.dump_genomes),
    )?;
    if cfg.variant.uses_maps() {
        write_file(
            &dir.join("swarm.map"),
            &outcome.swarm.to_dump(cfg.dump_genomes),
        )?;
        let maps = dir.join("maps");
        fs::create_dir_all(&maps).map_err(|e| Error::io(&maps, e))?;
        for (id, m) in outcome.local_maps.iter().enumerate() {
            write_file(
                &maps.join(format!("robot_{id:03}.map")),
                &m.to_dump(cfg.dump_genomes),
            )?;
        }
    }
    Ok(outcome)
}

pub fn run_dir_name(index: usize) -> String {
    format!("run_{index:03}")
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub dir: PathBuf,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunOutcome>,
}

/// Runs `cfg.replicates` replicates into `cfg.out/run_NNN`, writing
/// `config.txt` and `manifest.txt` alongside. Refuses a non-empty output
/// directory unless `force` is set.
pub fn run_batch(cfg: &RunConfig, force: bool, exec: Exec) -> Result<BatchOutcome> {
    let dir = cfg.out.clone();
    let occupied = fs::read_dir(&dir)
        .map(|mut d| d.next().is_some())
        .unwrap_or(false);
    if occupied && !force {
        return Err(Error::OutputExists { path: dir });
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_file(&dir.join("config.txt"), &cfg.canonical())?;
    let seeds: Vec<u64> = (0..cfg.replicates)
        .map(|i| replicate_seed(cfg.seed, i))
        .collect();
    let results = exec.map(cfg.replicates, |i| {
        let run = dir.join(run_dir_name(i));
        log::info!(
            "{} replicate {} (seed {})",
            cfg.variant.label(),
            i,
            seeds[i]
        );
        run_experiment(cfg, seeds[i], &run)
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_file(&dir.join("manifest.txt"), &manifest(cfg, &seeds))?;
    Ok(BatchOutcome { dir, seeds, runs })
}

fn manifest(cfg: &RunConfig, seeds: &[u64]) -> String {
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = format!(
        "software = {} {}\nvariant = {}\nmap-bins = {}\nconfig-hash = {}\nbase-seed = {}\nreplicates = {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        cfg.variant,
        cfg.map_bins,
        cfg.hash(),
        cfg.seed,
        seeds.len()
    );
    for (i, seed) in seeds.iter().enumerate() {
        s.push_str(&format!("{} = {}\n", run_dir_name(i), seed));
    }
    s.push_str(&format!("created-unix = {created}\n"));
    s
}
