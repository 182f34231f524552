//! MAP-Elites grid over the two-trait behaviour space.
//!
//! Two replacement rules live here and are deliberately different:
//! [`MapArchive::try_insert`] breaks fitness ties by distance to the cell
//! centre, while [`MapArchive::merge_into`] only replaces on strictly greater
//! fitness, so a tie keeps the destination's occupant.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::genome::Genome;

/// Bins per trait dimension in the default grid.
pub const DEFAULT_BINS: usize = 15;

/// Displacement bound used for binning: the arena diameter.
pub const DEFAULT_MAX_DISTANCE: f64 = 956.0;

/// End-of-lifetime functional traits of one evaluated controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviourDescriptor {
    pub max_displacement: f64,
    pub red_ratio: f64,
}

impl BehaviourDescriptor {
    pub fn new(max_displacement: f64, red_ratio: f64) -> Self {
        debug_assert!(max_displacement >= 0.0);
        debug_assert!((0.0..=1.0).contains(&red_ratio));
        BehaviourDescriptor {
            max_displacement,
            red_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellCoord {
    pub i: usize,
    pub j: usize,
}

/// Grid resolution and the displacement value mapped onto the last bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub bins: usize,
    pub max_distance_bound: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            bins: DEFAULT_BINS,
            max_distance_bound: DEFAULT_MAX_DISTANCE,
        }
    }
}

impl GridSpec {
    /// Descriptor in the unit square: displacement scaled by the bound and clamped.
    pub fn normalise(&self, d: &BehaviourDescriptor) -> (f64, f64) {
        let x = (d.max_displacement / self.max_distance_bound).clamp(0.0, 1.0);
        let y = d.red_ratio.clamp(0.0, 1.0);
        (x, y)
    }

    pub fn bin(&self, d: &BehaviourDescriptor) -> CellCoord {
        let (x, y) = self.normalise(d);
        let last = self.bins - 1;
        let b = self.bins as f64;
        CellCoord {
            i: ((b * x).floor() as usize).min(last),
            j: ((b * y).floor() as usize).min(last),
        }
    }

    /// Euclidean distance, in normalised trait space, from `d` to the centre of its cell.
    pub fn centre_distance(&self, d: &BehaviourDescriptor) -> f64 {
        let (x, y) = self.normalise(d);
        let c = self.bin(d);
        let b = self.bins as f64;
        let cx = (c.i as f64 + 0.5) / b;
        let cy = (c.j as f64 + 0.5) / b;
        (x - cx).hypot(y - cy)
    }

    pub fn cell_count(&self) -> usize {
        self.bins * self.bins
    }
}

/// Bin a descriptor on the default 15x15 grid.
pub fn bin_descriptor(d: &BehaviourDescriptor, max_distance_bound: f64) -> CellCoord {
    GridSpec {
        bins: DEFAULT_BINS,
        max_distance_bound,
    }
    .bin(d)
}

/// An archived solution. Genomes are shared immutably between archives.
#[derive(Debug, Clone, PartialEq)]
pub struct Elite {
    pub genome: Arc<Genome>,
    pub fitness: u32,
    pub descriptor: BehaviourDescriptor,
}

impl Elite {
    pub fn new(
        genome: impl Into<Arc<Genome>>,
        fitness: u32,
        descriptor: BehaviourDescriptor,
    ) -> Self {
        Elite {
            genome: genome.into(),
            fitness,
            descriptor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapArchive {
    spec: GridSpec,
    cells: Vec<Option<Elite>>,
}

impl Default for MapArchive {
    fn default() -> Self {
        MapArchive::new(GridSpec::default())
    }
}

impl MapArchive {
    pub fn new(spec: GridSpec) -> Self {
        MapArchive {
            spec,
            cells: vec![None; spec.cell_count()],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn index(&self, c: CellCoord) -> usize {
        c.i * self.spec.bins + c.j
    }

    fn coord(&self, idx: usize) -> CellCoord {
        CellCoord {
            i: idx / self.spec.bins,
            j: idx % self.spec.bins,
        }
    }

    pub fn get(&self, c: CellCoord) -> Option<&Elite> {
        self.cells.get(self.index(c)).and_then(Option::as_ref)
    }

    pub fn fitness_at(&self, c: CellCoord) -> Option<u32> {
        self.get(c).map(|e| e.fitness)
    }

    /// Occupied cells in (i, j) order.
    pub fn iter(&self) -> impl Iterator<Item = (CellCoord, &Elite)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(idx, e)| e.as_ref().map(|e| (self.coord(idx), e)))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    /// MAP-Elites cell update. Replaces the occupant when the cell is empty,
    /// the candidate is fitter, or fitness is equal and the candidate lies
    /// strictly closer to the cell centre.
    pub fn try_insert(&mut self, elite: Elite) -> bool {
        let coord = self.spec.bin(&elite.descriptor);
        let idx = self.index(coord);
        let replace = match &self.cells[idx] {
            None => true,
            Some(cur) if elite.fitness > cur.fitness => true,
            Some(cur) if elite.fitness == cur.fitness => {
                self.spec.centre_distance(&elite.descriptor)
                    < self.spec.centre_distance(&cur.descriptor)
            }
            Some(_) => false,
        };
        if replace {
            self.cells[idx] = Some(elite);
        }
        replace
    }

    /// Cell-wise merge of `src` into `self`; a cell is taken from `src` only
    /// when its fitness is strictly greater (an empty cell counts as lowest).
    pub fn merge_into(&mut self, src: &MapArchive) -> Result<()> {
        if self.spec.bins != src.spec.bins {
            return Err(Error::DimensionMismatch {
                left: self.spec.bins,
                right: src.spec.bins,
            });
        }
        for (dst, s) in self.cells.iter_mut().zip(&src.cells) {
            if let Some(s) = s {
                let take = match dst {
                    None => true,
                    Some(d) => s.fitness > d.fitness,
                };
                if take {
                    *dst = Some(s.clone());
                }
            }
        }
        Ok(())
    }

    /// Uniform draw over occupied cells.
    pub fn select_random<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Elite> {
        let occupied: Vec<&Elite> = self.cells.iter().flatten().collect();
        if occupied.is_empty() {
            return Err(Error::EmptyArchive);
        }
        Ok(occupied[rng.random_range(0..occupied.len())])
    }

    /// One line per occupied cell: `i,j,fitness,trait1,trait2[,genome_hex]`.
    pub fn to_dump(&self, with_genomes: bool) -> String {
        let mut out = String::new();
        for (c, e) in self.iter() {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                c.i, c.j, e.fitness, e.descriptor.max_displacement, e.descriptor.red_ratio
            );
            if with_genomes {
                out.push(',');
                out.push_str(&e.genome.to_hex());
            }
            out.push('\n');
        }
        out
    }

    /// Parses a dump. Lines without a genome column get a zero genome.
    pub fn from_dump(text: &str, spec: GridSpec, path: &Path) -> Result<MapArchive> {
        let mut map = MapArchive::new(spec);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 && fields.len() != 6 {
                return Err(err("expected 5 or 6 comma-separated fields"));
            }
            let i: usize = fields[0].parse().map_err(|_| err("bad cell index i"))?;
            let j: usize = fields[1].parse().map_err(|_| err("bad cell index j"))?;
            if i >= spec.bins || j >= spec.bins {
                return Err(err("cell index outside the grid"));
            }
            let fitness: u32 = fields[2].parse().map_err(|_| err("bad fitness"))?;
            let t1: f64 = fields[3].parse().map_err(|_| err("bad trait1"))?;
            let t2: f64 = fields[4].parse().map_err(|_| err("bad trait2"))?;
            let genome = match fields.get(5) {
                Some(h) => Genome::from_hex(h).ok_or_else(|| err("bad genome hex"))?,
                None => Genome::zeros(),
            };
            let idx = map.index(CellCoord { i, j });
            if map.cells[idx].is_some() {
                return Err(err("duplicate cell"));
            }
            map.cells[idx] = Some(Elite::new(
                genome,
                fitness,
                BehaviourDescriptor::new(t1, t2),
            ));
        }
        Ok(map)
    }
}

/// Left fold of [`MapArchive::merge_into`] over `maps`, starting from a copy of the first.
pub fn merge_list<'a, I>(maps: I) -> Result<MapArchive>
where
    I: IntoIterator<Item = &'a MapArchive>,
{
    let mut it = maps.into_iter();
    let mut acc = it.next().ok_or(Error::EmptyMapList)?.clone();
    for m in it {
        acc.merge_into(m)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn genome(tag: f64) -> Genome {
        let mut w = vec![0.0; crate::genome::GENOME_LEN];
        w[0] = tag;
        Genome::new(w, 0.1)
    }

    /// Descriptor landing in cell (i, j) at an offset from its centre, in cell widths.
    fn at(i: usize, j: usize, dx: f64, dy: f64) -> BehaviourDescriptor {
        let w = 1.0 / 15.0;
        let x = (i as f64 + 0.5 + dx) * w;
        let y = (j as f64 + 0.5 + dy) * w;
        BehaviourDescriptor::new(x * DEFAULT_MAX_DISTANCE, y)
    }

    fn elite(i: usize, j: usize, fitness: u32, tag: f64) -> Elite {
        Elite::new(genome(tag), fitness, at(i, j, 0.0, 0.0))
    }

    #[test]
    fn binning_examples() {
        let bound = 956.0;
        assert_eq!(
            bin_descriptor(&BehaviourDescriptor::new(0.0, 0.0), bound),
            CellCoord { i: 0, j: 0 }
        );
        assert_eq!(
            bin_descriptor(&BehaviourDescriptor::new(956.0, 1.0), bound),
            CellCoord { i: 14, j: 14 }
        );
        assert_eq!(
            bin_descriptor(&BehaviourDescriptor::new(478.0, 0.75), bound),
            CellCoord { i: 7, j: 11 }
        );
        assert_eq!(
            bin_descriptor(&BehaviourDescriptor::new(5000.0, 0.0), bound),
            CellCoord { i: 14, j: 0 }
        );
    }

    #[test]
    fn insert_into_empty_and_reject_weaker() {
        let mut m = MapArchive::default();
        assert!(m.try_insert(elite(3, 4, 7, 1.0)));
        assert_eq!(m.fitness_at(CellCoord { i: 3, j: 4 }), Some(7));
        assert!(!m.try_insert(elite(3, 4, 5, 2.0)));
        assert_eq!(m.fitness_at(CellCoord { i: 3, j: 4 }), Some(7));
        assert!(m.try_insert(elite(3, 4, 9, 3.0)));
        assert_eq!(m.occupied_count(), 1);
    }

    #[test]
    fn insert_tie_prefers_cell_centre() {
        let mut m = MapArchive::default();
        assert!(m.try_insert(Elite::new(genome(1.0), 5, at(2, 2, 0.3, 0.0))));
        assert!(m.try_insert(Elite::new(genome(2.0), 5, at(2, 2, 0.1, 0.0))));
        assert_eq!(
            m.get(CellCoord { i: 2, j: 2 }).unwrap().genome.weights()[0],
            2.0
        );
        // Farther candidate with equal fitness is rejected.
        assert!(!m.try_insert(Elite::new(genome(3.0), 5, at(2, 2, -0.2, 0.2))));
    }

    #[test]
    fn merge_rules() {
        let c = CellCoord { i: 1, j: 1 };
        let mut dst = MapArchive::default();
        dst.try_insert(elite(1, 1, 3, 1.0));
        let mut src = MapArchive::default();
        src.try_insert(elite(1, 1, 7, 2.0));
        dst.merge_into(&src).unwrap();
        assert_eq!(dst.fitness_at(c), Some(7));

        let mut a = MapArchive::default();
        a.try_insert(elite(1, 1, 7, 10.0));
        let mut b = MapArchive::default();
        b.try_insert(elite(1, 1, 7, 20.0));
        a.merge_into(&b).unwrap();
        assert_eq!(a.get(c).unwrap().genome.weights()[0], 10.0);

        let mut a = MapArchive::default();
        a.try_insert(elite(0, 0, 2, 1.0));
        let mut b = MapArchive::default();
        b.try_insert(elite(5, 5, 4, 1.0));
        a.merge_into(&b).unwrap();
        assert_eq!(a.occupied_count(), 2);
    }

    #[test]
    fn merge_dimension_mismatch() {
        let mut a = MapArchive::default();
        let b = MapArchive::new(GridSpec {
            bins: 10,
            max_distance_bound: 956.0,
        });
        assert!(matches!(
            a.merge_into(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn merge_list_examples() {
        let mut a = MapArchive::default();
        a.try_insert(elite(4, 4, 3, 1.0));
        assert_eq!(merge_list([&a]).unwrap(), a);
        assert_eq!(merge_list([&a, &a]).unwrap(), a);
        let mut b = MapArchive::default();
        b.try_insert(elite(4, 4, 7, 2.0));
        let mut c = MapArchive::default();
        c.try_insert(elite(4, 4, 5, 3.0));
        let merged = merge_list([&a, &b, &c]).unwrap();
        assert_eq!(merged.fitness_at(CellCoord { i: 4, j: 4 }), Some(7));
        assert!(matches!(
            merge_list(std::iter::empty::<&MapArchive>()),
            Err(Error::EmptyMapList)
        ));
    }

    #[test]
    fn select_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let empty = MapArchive::default();
        assert!(matches!(
            empty.select_random(&mut rng),
            Err(Error::EmptyArchive)
        ));

        let mut one = MapArchive::default();
        one.try_insert(elite(9, 9, 1, 42.0));
        assert_eq!(
            one.select_random(&mut rng).unwrap().genome.weights()[0],
            42.0
        );

        let mut two = MapArchive::default();
        two.try_insert(elite(0, 1, 1, 1.0));
        two.try_insert(elite(2, 3, 1, 2.0));
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| two.select_random(&mut rng).unwrap().genome.weights()[0] == 1.0)
            .count();
        // Binomial(10000, 0.5): sd = 50.
        assert!((hits as i64 - 5000).abs() <= 150, "hits = {hits}");
    }

    #[test]
    fn occupancy() {
        let mut m = MapArchive::default();
        assert_eq!(m.occupied_count(), 0);
        m.try_insert(elite(1, 2, 1, 1.0));
        m.try_insert(elite(1, 2, 3, 1.0));
        assert_eq!(m.occupied_count(), 1);
        for i in 0..15 {
            for j in 0..15 {
                m.try_insert(elite(i, j, 1, 0.0));
            }
        }
        assert_eq!(m.occupied_count(), 225);
    }

    #[test]
    fn dump_round_trip() {
        let mut m = MapArchive::default();
        m.try_insert(elite(3, 1, 4, 0.5));
        m.try_insert(elite(0, 7, 2, 0.25));
        let text = m.to_dump(false);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("0,7,2,"));
        assert!(lines[1].starts_with("3,1,4,"));
        let back =
            MapArchive::from_dump(&m.to_dump(true), GridSpec::default(), Path::new("x")).unwrap();
        assert_eq!(back, m);
        assert!(MapArchive::from_dump("1,2,3", GridSpec::default(), Path::new("x")).is_err());
        assert!(MapArchive::from_dump("15,0,1,0,0", GridSpec::default(), Path::new("x")).is_err());
    }
}
