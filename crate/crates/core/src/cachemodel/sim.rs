use super::config::CacheConfig;
use super::trace::{Access, AccessKind, AccessSink, AccessTrace, AddressSpace, TraceError};

/// Counters for one simulated level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCounts {
    pub name: String,
    pub hits: u64,
    pub misses: u64,
    /// Dirty lines evicted from this level during the run.
    pub writebacks: u64,
    /// Dirty lines still resident when the run finished.
    pub dirty_resident: u64,
}

impl LevelCounts {
    /// Lines moved across this level's lower boundary: fills plus
    /// write-backs, counting lines left dirty at the end as flushed.
    pub fn traffic_lines(&self) -> u64 {
        self.misses + self.writebacks + self.dirty_resident
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissCounts {
    pub levels: Vec<LevelCounts>,
    /// Accesses in the trace.
    pub accesses: u64,
    /// Cache-line touches after splitting accesses at line boundaries.
    pub line_touches: u64,
    pub line_size: u32,
}

impl MissCounts {
    pub fn misses(&self, level: usize) -> u64 {
        self.levels[level].misses
    }

    pub fn traffic_bytes(&self, level: usize) -> u64 {
        self.levels[level].traffic_lines() * self.line_size as u64
    }
}

struct Level {
    sets_mask: u64,
    ways: usize,
    // per set, `ways` slots ordered most- to least-recently used
    lines: Vec<u64>,
    dirty: Vec<bool>,
    fill: Vec<u32>,
    counts: LevelCounts,
}

impl Level {
    fn new(name: &str, sets: u64, ways: usize) -> Self {
        let slots = sets as usize * ways;
        Level {
            sets_mask: sets - 1,
            ways,
            lines: vec![0; slots],
            dirty: vec![false; slots],
            fill: vec![0; sets as usize],
            counts: LevelCounts {
                name: name.to_string(),
                hits: 0,
                misses: 0,
                writebacks: 0,
                dirty_resident: 0,
            },
        }
    }

    /// Looks a line up, allocating it on a miss. Returns whether it hit.
    fn probe(&mut self, line: u64, write: bool) -> bool {
        let set = (line & self.sets_mask) as usize;
        let start = set * self.ways;
        let fill = self.fill[set] as usize;
        let lines = &mut self.lines[start..start + self.ways];
        let dirty = &mut self.dirty[start..start + self.ways];

        if let Some(pos) = lines[..fill].iter().position(|&l| l == line) {
            lines[..=pos].rotate_right(1);
            dirty[..=pos].rotate_right(1);
            dirty[0] |= write;
            self.counts.hits += 1;
            return true;
        }

        self.counts.misses += 1;
        let used = if fill < self.ways {
            self.fill[set] += 1;
            fill + 1
        } else {
            if dirty[self.ways - 1] {
                self.counts.writebacks += 1;
            }
            self.ways
        };
        lines[..used].rotate_right(1);
        dirty[..used].rotate_right(1);
        lines[0] = line;
        dirty[0] = write;
        false
    }

    fn finish(&mut self) -> LevelCounts {
        let mut resident = 0;
        for (set, &fill) in self.fill.iter().enumerate() {
            let start = set * self.ways;
            resident += self.dirty[start..start + fill as usize].iter().filter(|&&d| d).count() as u64;
        }
        let mut counts = self.counts.clone();
        counts.dirty_resident = resident;
        counts
    }
}

/// Multi-level LRU hierarchy driven one access at a time.
///
/// A line touch probes L1, then each lower level while it keeps missing; every
/// probed level is updated (allocate on miss). Writes dirty the line in the
/// first level only. Evicted dirty lines are counted but not inserted below.
pub struct CacheSimulator {
    levels: Vec<Level>,
    line_shift: u32,
    line_size: u32,
    accesses: u64,
    line_touches: u64,
}

impl CacheSimulator {
    pub fn new(config: &CacheConfig) -> Self {
        let levels = config
            .levels()
            .iter()
            .enumerate()
            .map(|(i, l)| Level::new(&l.name, config.sets(i), l.ways as usize))
            .collect();
        CacheSimulator {
            levels,
            line_shift: config.line_size().trailing_zeros(),
            line_size: config.line_size(),
            accesses: 0,
            line_touches: 0,
        }
    }

    pub fn touch_line(&mut self, line: u64, kind: AccessKind) {
        self.line_touches += 1;
        let write = kind == AccessKind::Write;
        for (i, level) in self.levels.iter_mut().enumerate() {
            if level.probe(line, write && i == 0) {
                break;
            }
        }
    }

    /// Simulates `len` bytes at absolute address `addr`.
    pub fn access(&mut self, addr: u64, len: u32, kind: AccessKind) {
        debug_assert!(len > 0);
        self.accesses += 1;
        let first = addr >> self.line_shift;
        let last = (addr + len as u64 - 1) >> self.line_shift;
        for line in first..=last {
            self.touch_line(line, kind);
        }
    }

    pub fn finish(mut self) -> MissCounts {
        MissCounts {
            levels: self.levels.iter_mut().map(Level::finish).collect(),
            accesses: self.accesses,
            line_touches: self.line_touches,
            line_size: self.line_size,
        }
    }
}

/// A simulator fed by array-relative accesses, resolving them through an
/// address space as they arrive.
pub struct TracingSimulator {
    space: AddressSpace,
    sim: CacheSimulator,
    error: Option<TraceError>,
}

impl TracingSimulator {
    pub fn new(space: AddressSpace, config: &CacheConfig) -> Result<Self, TraceError> {
        space.validate()?;
        Ok(TracingSimulator { space, sim: CacheSimulator::new(config), error: None })
    }

    pub fn finish(self) -> Result<MissCounts, TraceError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.sim.finish()),
        }
    }
}

impl AccessSink for TracingSimulator {
    fn record(&mut self, access: Access) {
        if self.error.is_some() {
            return;
        }
        match self.space.resolve(&access) {
            Ok(addr) => self.sim.access(addr, access.len, access.kind),
            Err(e) => self.error = Some(e),
        }
    }
}

/// Replays a recorded trace through a fresh hierarchy.
pub fn simulate(trace: &AccessTrace, config: &CacheConfig) -> Result<MissCounts, TraceError> {
    let mut sim = TracingSimulator::new(trace.space.clone(), config)?;
    for a in &trace.accesses {
        sim.record(*a);
    }
    sim.finish()
}

#[cfg(test)]
mod tests {
    use super::super::config::LevelGeometry;
    use super::*;

    fn one_level(sets: u64, ways: u32) -> CacheConfig {
        CacheConfig::new(
            vec![LevelGeometry { name: "L1".into(), size_bytes: sets * ways as u64 * 64, ways }],
            64,
        )
        .unwrap()
    }

    #[test]
    fn sequential_read_is_compulsory_misses() {
        let mut space = AddressSpace::new();
        let a = space.add_array("a", 256);
        let mut t = AccessTrace::new(space);
        for i in 0..32 {
            t.record(Access::read(a, i * 8, 8));
        }
        let m = simulate(&t, &CacheConfig::e5_2680v2_core()).unwrap();
        assert_eq!(m.misses(0), 4);
        assert_eq!(m.levels[0].hits, 28);
        assert_eq!(m.misses(1), 4);
        assert_eq!(m.misses(2), 4);
    }

    #[test]
    fn repeated_word_hits() {
        let mut space = AddressSpace::new();
        let a = space.add_array("a", 8);
        let mut t = AccessTrace::new(space);
        for _ in 0..1000 {
            t.record(Access::read(a, 0, 8));
        }
        let m = simulate(&t, &one_level(4, 4)).unwrap();
        assert_eq!(m.misses(0), 1);
        assert_eq!(m.levels[0].hits, 999);
    }

    #[test]
    fn lru_evicts_least_recent() {
        // one set, two ways: A B C A -> C evicts A, A misses again
        let mut sim = CacheSimulator::new(&one_level(1, 2));
        for line in [0, 1, 2, 0] {
            sim.touch_line(line, AccessKind::Read);
        }
        let m = sim.finish();
        assert_eq!(m.misses(0), 4);

        // A B A C A -> C evicts B, A hits
        let mut sim = CacheSimulator::new(&one_level(1, 2));
        for line in [0, 1, 0, 2, 0] {
            sim.touch_line(line, AccessKind::Read);
        }
        let m = sim.finish();
        assert_eq!(m.misses(0), 3);
        assert_eq!(m.levels[0].hits, 2);
    }

    #[test]
    fn straddling_access_touches_two_lines() {
        let mut sim = CacheSimulator::new(&one_level(4, 4));
        sim.access(60, 8, AccessKind::Read);
        let m = sim.finish();
        assert_eq!(m.accesses, 1);
        assert_eq!(m.line_touches, 2);
        assert_eq!(m.misses(0), 2);
    }

    #[test]
    fn writes_allocate_and_write_back() {
        let mut sim = CacheSimulator::new(&one_level(1, 1));
        sim.touch_line(0, AccessKind::Write);
        sim.touch_line(1, AccessKind::Read);
        sim.touch_line(2, AccessKind::Write);
        let m = sim.finish();
        assert_eq!(m.misses(0), 3);
        assert_eq!(m.levels[0].writebacks, 1);
        assert_eq!(m.levels[0].dirty_resident, 1);
        assert_eq!(m.traffic_bytes(0), 5 * 64);
    }

    #[test]
    fn overlapping_arrays_rejected() {
        let mut space = AddressSpace::new();
        space.place("a", 0, 64);
        space.place("b", 32, 64);
        let t = AccessTrace::new(space);
        assert!(matches!(simulate(&t, &one_level(1, 1)), Err(TraceError::Overlap { .. })));
    }
}
