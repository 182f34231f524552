//! Generation protocol shared by the four map-sharing variants and the
//! fitness-proportionate genome-sharing baseline.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::archive::{merge_list, BehaviourDescriptor, CellCoord, Elite, GridSpec, MapArchive};
use crate::genome::{mutate, Genome, MutationParams};
use crate::world::{Broadcast, PayloadKind, Robot, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// SelectMap is one received map picked at random.
    R,
    /// SelectMap merges every received map.
    M1,
    /// SelectMap merges received maps with a persistent memory map.
    M2,
    /// SelectMap merges received maps with the local map, which also absorbs them.
    M3,
    /// Baseline: genomes are broadcast, parents drawn by fitness-proportionate selection.
    MedeaFps,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::R,
        Variant::M1,
        Variant::M2,
        Variant::M3,
        Variant::MedeaFps,
    ];

    pub fn payload(self) -> PayloadKind {
        match self {
            Variant::MedeaFps => PayloadKind::GenomeWithFitness,
            _ => PayloadKind::LocalMap,
        }
    }

    pub fn uses_maps(self) -> bool {
        self != Variant::MedeaFps
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::R => "EDQD-R",
            Variant::M1 => "EDQD-M1",
            Variant::M2 => "EDQD-M2",
            Variant::M3 => "EDQD-M3",
            Variant::MedeaFps => "mEDEA-fps",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::R => "R",
            Variant::M1 => "M1",
            Variant::M2 => "M2",
            Variant::M3 => "M3",
            Variant::MedeaFps => "medea-fps",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r" | "edqd-r" => Ok(Variant::R),
            "m1" | "edqd-m1" => Ok(Variant::M1),
            "m2" | "edqd-m2" => Ok(Variant::M2),
            "m3" | "edqd-m3" => Ok(Variant::M3),
            "medea-fps" | "medea_fps" | "medeafps" | "medea" => Ok(Variant::MedeaFps),
            other => Err(format!(
                "unknown variant `{other}` (expected R, M1, M2, M3 or medea-fps)"
            )),
        }
    }
}

/// What one robot did during the lifetime that just ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotRecord {
    pub id: usize,
    pub active: bool,
    pub fitness: u32,
    pub descriptor: BehaviourDescriptor,
    pub cell: CellCoord,
    pub genome: Option<Arc<Genome>>,
    pub local_map_occupancy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub generation: usize,
    /// Robots that executed a controller during this generation.
    pub active_count: usize,
    /// Robots holding a genome for the next generation.
    pub next_active_count: usize,
    pub robots: Vec<RobotRecord>,
}

impl GenerationReport {
    /// Expressed behaviours of active robots projected onto a fresh map.
    pub fn expressed_map(&self, spec: GridSpec) -> MapArchive {
        let mut m = MapArchive::new(spec);
        for r in self.robots.iter().filter(|r| r.active) {
            if let Some(g) = &r.genome {
                m.try_insert(Elite::new(Arc::clone(g), r.fitness, r.descriptor));
            }
        }
        m
    }
}

/// Fitness-proportionate choice of an index; uniform when every weight is zero.
pub fn fitness_proportionate<R: Rng + ?Sized>(fitnesses: &[u32], rng: &mut R) -> Option<usize> {
    if fitnesses.is_empty() {
        return None;
    }
    let total: u64 = fitnesses.iter().map(|&f| f as u64).sum();
    if total == 0 {
        return Some(rng.random_range(0..fitnesses.len()));
    }
    let mut ticket = rng.random_range(0..total);
    for (k, &f) in fitnesses.iter().enumerate() {
        if ticket < f as u64 {
            return Some(k);
        }
        ticket -= f as u64;
    }
    unreachable!("ticket below total weight")
}

/// Builds the map a robot draws its next parent from. `None` means no
/// selectable material was collected and the robot goes dormant.
fn select_map<R: Rng + ?Sized>(
    robot: &mut Robot,
    variant: Variant,
    rng: &mut R,
) -> Option<MapArchive> {
    let received: Vec<&MapArchive> = robot
        .received
        .values()
        .filter_map(|b| match b {
            Broadcast::Map(m) => Some(m.as_ref()),
            Broadcast::Genome { .. } => None,
        })
        .collect();
    match variant {
        Variant::R => {
            if received.is_empty() {
                return None;
            }
            Some(received[rng.random_range(0..received.len())].clone())
        }
        Variant::M1 => merge_list(received).ok(),
        Variant::M2 => {
            if received.is_empty() {
                return None;
            }
            let memory = robot
                .memory_map
                .get_or_insert_with(|| MapArchive::new(*robot.local_map.spec()));
            let merged = merge_list(received.into_iter().chain(std::iter::once(&*memory)))
                .expect("non-empty list of equal grids");
            *memory = merged.clone();
            Some(merged)
        }
        Variant::M3 => {
            if received.is_empty() && robot.local_map.is_empty() {
                return None;
            }
            merge_list(
                received
                    .into_iter()
                    .chain(std::iter::once(robot.local_map.as_ref())),
            )
            .ok()
        }
        Variant::MedeaFps => unreachable!("baseline selects genomes directly"),
    }
}

/// Selection and variation at the end of a lifetime, after the robot's own
/// elite (if any) has been archived. Clears the received list.
pub fn end_of_lifetime<R: Rng + ?Sized>(
    robot: &mut Robot,
    variant: Variant,
    mutation: &MutationParams,
    rng: &mut R,
) {
    let parent: Option<Arc<Genome>> = match variant {
        Variant::MedeaFps => {
            let (genomes, fitnesses): (Vec<&Arc<Genome>>, Vec<u32>) = robot
                .received
                .values()
                .filter_map(|b| match b {
                    Broadcast::Genome { genome, fitness } => Some((genome, *fitness)),
                    Broadcast::Map(_) => None,
                })
                .unzip();
            fitness_proportionate(&fitnesses, rng).map(|k| Arc::clone(genomes[k]))
        }
        _ => {
            if variant == Variant::M3 {
                let local = Arc::make_mut(&mut robot.local_map);
                for b in robot.received.values() {
                    if let Broadcast::Map(m) = b {
                        local.merge_into(m).expect("equal grids");
                    }
                }
            }
            match select_map(robot, variant, rng) {
                Some(m) if !m.is_empty() => {
                    let e = m.select_random(rng).expect("non-empty map");
                    Some(Arc::clone(&e.genome))
                }
                _ => None,
            }
        }
    };
    robot.genome = parent.map(|p| Arc::new(mutate(&p, mutation, rng)));
    robot.received.clear();
}

/// Closes a generation for the whole swarm.
///
/// Every active robot first archives its own elite. Received map entries are
/// then refreshed to the sender's post-update map, so a map heard during the
/// lifetime always carries the sender's latest elite, before each robot (in
/// id order) selects its next genome.
pub fn end_of_generation<R: Rng + ?Sized>(
    world: &mut World,
    variant: Variant,
    mutation: &MutationParams,
    generation: usize,
    rng: &mut R,
) -> GenerationReport {
    let mut records = Vec::with_capacity(world.robots.len());
    for robot in world.robots.iter_mut() {
        let (fitness, descriptor) = robot.lifetime_traits();
        let active = robot.is_active();
        if active && variant.uses_maps() {
            let genome = Arc::clone(robot.genome.as_ref().unwrap());
            Arc::make_mut(&mut robot.local_map).try_insert(Elite::new(genome, fitness, descriptor));
        }
        records.push(RobotRecord {
            id: robot.id,
            active,
            fitness,
            descriptor,
            cell: robot.local_map.spec().bin(&descriptor),
            genome: robot.genome.clone(),
            local_map_occupancy: 0,
        });
    }

    if world.payload == PayloadKind::LocalMap {
        let snapshots: Vec<Arc<MapArchive>> = world
            .robots
            .iter()
            .map(|r| Arc::clone(&r.local_map))
            .collect();
        for robot in world.robots.iter_mut() {
            for (sender, b) in robot.received.iter_mut() {
                if let Broadcast::Map(m) = b {
                    *m = Arc::clone(&snapshots[*sender]);
                }
            }
        }
    }

    for (robot, rec) in world.robots.iter_mut().zip(records.iter_mut()) {
        end_of_lifetime(robot, variant, mutation, rng);
        rec.local_map_occupancy = robot.local_map.occupied_count();
        robot.reset_lifetime();
    }

    GenerationReport {
        generation,
        active_count: records.iter().filter(|r| r.active).count(),
        next_active_count: world.active_count(),
        robots: records,
    }
}

/// Runs one lifetime of `lifetime` steps followed by selection.
/// `on_step` sees the world after every step (used for trace logging).
pub fn run_generation<R: Rng + ?Sized>(
    world: &mut World,
    variant: Variant,
    mutation: &MutationParams,
    lifetime: usize,
    generation: usize,
    rng: &mut R,
    mut on_step: impl FnMut(&World),
) -> GenerationReport {
    for _ in 0..lifetime {
        world.step(rng);
        on_step(world);
    }
    end_of_generation(world, variant, mutation, generation, rng)
}
