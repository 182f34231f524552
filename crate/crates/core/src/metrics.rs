//! Diversity, precision and swarm-map measures over archives.

use std::fmt::Write as _;
use std::path::Path;

use crate::archive::{merge_list, CellCoord, GridSpec, MapArchive};
use crate::error::{Error, Result};
use crate::evolution::GenerationReport;
use crate::stats::median;

/// Number of distinct cells filled by the behaviours active robots expressed.
pub fn expressed_diversity(report: &GenerationReport, spec: GridSpec) -> usize {
    report.expressed_map(spec).occupied_count()
}

/// Cell-wise best of every robot's local map. An empty input gives an empty map.
pub fn build_swarm_map<'a, I>(maps: I, spec: GridSpec) -> Result<MapArchive>
where
    I: IntoIterator<Item = &'a MapArchive>,
{
    let mut maps = maps.into_iter().peekable();
    if maps.peek().is_none() {
        return Ok(MapArchive::new(spec));
    }
    merge_list(maps)
}

/// Best fitness known per cell across a collection of archives.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    bins: usize,
    cells: Vec<Option<u32>>,
}

impl ReferenceMap {
    pub fn new(bins: usize) -> Self {
        ReferenceMap {
            bins,
            cells: vec![None; bins * bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, c: CellCoord) -> Option<u32> {
        self.cells[c.i * self.bins + c.j]
    }

    pub fn absorb(&mut self, map: &MapArchive) -> Result<()> {
        if map.spec().bins != self.bins {
            return Err(Error::DimensionMismatch {
                left: self.bins,
                right: map.spec().bins,
            });
        }
        for (c, e) in map.iter() {
            let slot = &mut self.cells[c.i * self.bins + c.j];
            *slot = Some(slot.map_or(e.fitness, |f| f.max(e.fitness)));
        }
        Ok(())
    }

    pub fn from_maps<'a>(
        bins: usize,
        maps: impl IntoIterator<Item = &'a MapArchive>,
    ) -> Result<Self> {
        let mut r = ReferenceMap::new(bins);
        for m in maps {
            r.absorb(m)?;
        }
        Ok(r)
    }

    /// One `i,j,fitness` line per known cell.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for (idx, f) in self.cells.iter().enumerate() {
            if let Some(f) = f {
                let _ = writeln!(out, "{},{},{}", idx / self.bins, idx % self.bins, f);
            }
        }
        out
    }

    pub fn from_dump(text: &str, bins: usize, path: &Path) -> Result<Self> {
        let mut r = ReferenceMap::new(bins);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = || Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                reason: "expected `i,j,fitness`".into(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(err());
            }
            let i: usize = f[0].parse().map_err(|_| err())?;
            let j: usize = f[1].parse().map_err(|_| err())?;
            let v: u32 = f[2].parse().map_err(|_| err())?;
            if i >= bins || j >= bins {
                return Err(err());
            }
            r.cells[i * bins + j] = Some(v);
        }
        Ok(r)
    }
}

/// Mean over occupied cells of achieved / best-known fitness.
///
/// A cell whose best-known fitness is zero can only hold zero-fitness
/// elites; such a cell scores 1.
pub fn precision(map: &MapArchive, reference: &ReferenceMap) -> Result<f64> {
    if map.spec().bins != reference.bins {
        return Err(Error::DimensionMismatch {
            left: map.spec().bins,
            right: reference.bins,
        });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (c, e) in map.iter() {
        let inconsistent = || Error::InconsistentReference {
            i: c.i,
            j: c.j,
            fitness: e.fitness,
        };
        let best = reference.get(c).ok_or_else(inconsistent)?;
        let ratio = match (best, e.fitness) {
            (0, 0) => 1.0,
            (0, _) => return Err(inconsistent()),
            (b, f) => f as f64 / b as f64,
        };
        sum += ratio;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyArchive);
    }
    Ok(sum / n as f64)
}

/// Median over robots of local-map precision for one run.
pub fn median_local_precision<'a>(
    local_maps: impl IntoIterator<Item = &'a MapArchive>,
    reference: &ReferenceMap,
) -> Result<f64> {
    let values = local_maps
        .into_iter()
        .map(|m| precision(m, reference))
        .collect::<Result<Vec<f64>>>()?;
    median(&values).ok_or(Error::EmptyArchive)
}

/// What a run contributes to the precision summary.
pub enum RunMaps<'a> {
    /// Map-sharing runs: every robot's local map.
    Local(&'a [MapArchive]),
    /// Genome-sharing runs: the projected map of expressed behaviours.
    Expressed(&'a MapArchive),
}

/// Per-run summary precision: the median local-map precision, or the
/// projected-map precision for runs without local maps.
pub fn swarm_precision_summary(runs: &[RunMaps<'_>], reference: &ReferenceMap) -> Result<Vec<f64>> {
    runs.iter()
        .map(|r| match r {
            RunMaps::Local(maps) => median_local_precision(maps.iter(), reference),
            RunMaps::Expressed(m) => precision(m, reference),
        })
        .collect()
}

/// Plain PGM (P2) heatmap: row `i` is trait-1 bin `i`, fitness scaled so
/// the map's best cell is 255. Empty cells are 0.
pub fn heatmap_pgm(map: &MapArchive) -> String {
    let bins = map.spec().bins;
    let max = map.iter().map(|(_, e)| e.fitness).max().unwrap_or(0);
    let mut out = format!("P2\n{bins} {bins}\n255\n");
    for i in 0..bins {
        let row: Vec<String> = (0..bins)
            .map(|j| match map.fitness_at(CellCoord { i, j }) {
                None => 0,
                Some(_) if max == 0 => 255,
                Some(f) => ((f as f64 / max as f64) * 255.0).round() as u32,
            })
            .map(|v| v.to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{BehaviourDescriptor, Elite};
    use crate::evolution::RobotRecord;
    use crate::genome::Genome;
    use std::sync::Arc;

    fn desc(i: usize, j: usize) -> BehaviourDescriptor {
        BehaviourDescriptor::new((i as f64 + 0.5) / 15.0 * 956.0, (j as f64 + 0.5) / 15.0)
    }

    fn map_with(cells: &[(usize, usize, u32)]) -> MapArchive {
        let mut m = MapArchive::default();
        for &(i, j, f) in cells {
            m.try_insert(Elite::new(Genome::zeros(), f, desc(i, j)));
        }
        m
    }

    fn report(cells: &[(usize, usize)], active: bool) -> GenerationReport {
        let g = Arc::new(Genome::zeros());
        let robots = cells
            .iter()
            .enumerate()
            .map(|(id, &(i, j))| RobotRecord {
                id,
                active,
                fitness: 1,
                descriptor: desc(i, j),
                cell: CellCoord { i, j },
                genome: active.then(|| Arc::clone(&g)),
                local_map_occupancy: 0,
            })
            .collect();
        GenerationReport {
            generation: 0,
            active_count: if active { cells.len() } else { 0 },
            next_active_count: 0,
            robots,
        }
    }

    #[test]
    fn expressed_diversity_cases() {
        let spec = GridSpec::default();
        assert_eq!(expressed_diversity(&report(&[(3, 3); 200], true), spec), 1);
        let distinct: Vec<(usize, usize)> = (0..200).map(|k| (k / 15, k % 15)).collect();
        assert_eq!(expressed_diversity(&report(&distinct, true), spec), 200);
        assert_eq!(expressed_diversity(&report(&distinct, false), spec), 0);
    }

    #[test]
    fn swarm_map_cases() {
        let spec = GridSpec::default();
        let empties = vec![MapArchive::default(); 4];
        assert_eq!(build_swarm_map(&empties, spec).unwrap().occupied_count(), 0);
        let all: Vec<(usize, usize, u32)> = (0..225).map(|k| (k / 15, k % 15, 1)).collect();
        let maps = vec![
            MapArchive::default(),
            map_with(&all),
            map_with(&[(1, 1, 9)]),
        ];
        let swarm = build_swarm_map(&maps, spec).unwrap();
        assert_eq!(swarm.occupied_count(), 225);
        assert_eq!(swarm.fitness_at(CellCoord { i: 1, j: 1 }), Some(9));
        for m in &maps {
            assert!(swarm.occupied_count() >= m.occupied_count());
        }
    }

    #[test]
    fn precision_cases() {
        let m = map_with(&[(2, 3, 8)]);
        let r = ReferenceMap::from_maps(15, [&map_with(&[(2, 3, 10)])]).unwrap();
        assert!((precision(&m, &r).unwrap() - 0.8).abs() < 1e-15);

        let m = map_with(&[(0, 0, 4), (5, 6, 7), (7, 7, 0)]);
        let own = ReferenceMap::from_maps(15, [&m]).unwrap();
        assert_eq!(precision(&m, &own).unwrap(), 1.0);

        assert!(matches!(
            precision(&MapArchive::default(), &own),
            Err(Error::EmptyArchive)
        ));
        let stranger = map_with(&[(14, 14, 1)]);
        assert!(matches!(
            precision(&stranger, &own),
            Err(Error::InconsistentReference { .. })
        ));
    }

    #[test]
    fn summary_uses_medians() {
        let reference = ReferenceMap::from_maps(15, [&map_with(&[(1, 1, 10)])]).unwrap();
        let maps = vec![
            map_with(&[(1, 1, 2)]),
            map_with(&[(1, 1, 5)]),
            map_with(&[(1, 1, 9)]),
        ];
        let same = vec![map_with(&[(1, 1, 4)]); 3];
        let projected = map_with(&[(1, 1, 3)]);
        let runs = [
            RunMaps::Local(&maps),
            RunMaps::Local(&same),
            RunMaps::Expressed(&projected),
        ];
        let s = swarm_precision_summary(&runs, &reference).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[1] - 0.4).abs() < 1e-15);
        assert!((s[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn reference_dump_round_trip_and_dominance() {
        let a = map_with(&[(1, 2, 3), (4, 4, 1)]);
        let b = map_with(&[(1, 2, 5)]);
        let ra = ReferenceMap::from_maps(15, [&a]).unwrap();
        let rab = ReferenceMap::from_maps(15, [&a, &b]).unwrap();
        for i in 0..15 {
            for j in 0..15 {
                let c = CellCoord { i, j };
                assert!(rab.get(c) >= ra.get(c));
            }
        }
        let back = ReferenceMap::from_dump(&rab.to_dump(), 15, Path::new("ref")).unwrap();
        assert_eq!(back, rab);
    }

    #[test]
    fn heatmap_layout() {
        let m = map_with(&[(0, 1, 2), (14, 0, 4)]);
        let pgm = heatmap_pgm(&m);
        let lines: Vec<&str> = pgm.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[1], "15 15");
        assert_eq!(lines[2], "255");
        assert_eq!(lines.len(), 18);
        assert!(lines[3].starts_with("0 128 0"));
        assert!(lines[17].starts_with("255 0"));
    }
}
