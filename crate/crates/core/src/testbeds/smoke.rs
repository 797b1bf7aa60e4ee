//! Smoke detection on an 11 x 11 lattice with three sensors.
//!
//! A fire starts at a uniformly chosen point of the source domain (by
//! default the 9 x 9 interior of the lattice) and emits one smoke
//! particle per time slot. Each particle moves to one of its four axis
//! neighbours with probability proportional to the neighbour's Euclidean
//! distance from the fire; a move off the lattice leaves the particle where
//! it is. The response time is the first slot at which a particle sits on a
//! sensor.
//!
//! Sensors go to 3 of 9 candidate cells at `{2, 5, 8} x {2, 5, 8}`, numbered
//! 1 to 9 row by row:
//!
//! ```text
//! y=8   7 8 9
//! y=5   4 5 6
//! y=2   1 2 3
//!      x=2 5 8
//! ```

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::stats::{DesignId, DesignStats, Observation, Simulator};
use crate::{Error, Result};

/// Lattice coordinates run over `0..=GRID_MAX` on both axes.
pub const GRID_MAX: i32 = 10;
pub const GRID_POINTS: usize = ((GRID_MAX + 1) * (GRID_MAX + 1)) as usize;
/// Coordinates of the candidate sensor rows and columns.
pub const CANDIDATE_COORDS: [i32; 3] = [2, 5, 8];
pub const NUM_CANDIDATES: u8 = 9;
pub const DEFAULT_HORIZON: u64 = 1_000_000;

/// Where a fire may start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SourceDomain {
    /// The 81 points strictly inside the boundary.
    #[default]
    Interior,
    /// All 121 lattice points.
    Full,
}

impl SourceDomain {
    pub fn coord_range(self) -> core::ops::RangeInclusive<i32> {
        match self {
            SourceDomain::Interior => 1..=GRID_MAX - 1,
            SourceDomain::Full => 0..=GRID_MAX,
        }
    }

    pub fn num_points(self) -> usize {
        let side = self.coord_range().count();
        side * side
    }

    pub fn name(self) -> &'static str {
        match self {
            SourceDomain::Interior => "interior",
            SourceDomain::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn on_grid(self) -> bool {
        (0..=GRID_MAX).contains(&self.x) && (0..=GRID_MAX).contains(&self.y)
    }

    fn distance(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        libm::sqrt(dx * dx + dy * dy)
    }

    fn slot(self) -> usize {
        (self.y * (GRID_MAX + 1) + self.x) as usize
    }

    /// Right, left, up, down.
    pub fn neighbours(self) -> [Cell; 4] {
        [
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x - 1, self.y),
            Cell::new(self.x, self.y + 1),
            Cell::new(self.x, self.y - 1),
        ]
    }
}

/// Lattice cell of candidate sensor `id` (1..=9).
pub fn candidate_cell(id: u8) -> Cell {
    assert!(
        (1..=NUM_CANDIDATES).contains(&id),
        "sensor ids run from 1 to 9"
    );
    let k = usize::from(id - 1);
    Cell::new(CANDIDATE_COORDS[k % 3], CANDIDATE_COORDS[k / 3])
}

/// Three distinct candidate sensor ids in increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement([u8; 3]);

impl Placement {
    pub fn new(mut ids: [u8; 3]) -> Result<Self> {
        ids.sort_unstable();
        if ids.iter().any(|id| !(1..=NUM_CANDIDATES).contains(id))
            || ids[0] == ids[1]
            || ids[1] == ids[2]
        {
            return Err(Error::InvalidArgument(
                "a placement is three distinct sensor ids in 1..=9",
            ));
        }
        Ok(Placement(ids))
    }

    pub fn ids(&self) -> [u8; 3] {
        self.0
    }

    pub fn cells(&self) -> [Cell; 3] {
        self.0.map(candidate_cell)
    }

    /// Image under a symmetry of the square acting on the 3 x 3 candidates.
    pub fn transformed(&self, symmetry: Symmetry) -> Placement {
        let ids = self.0.map(|id| symmetry.apply(id));
        Placement::new(ids).expect("symmetries permute candidates")
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{a},{b},{c}")
    }
}

/// The eight symmetries of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Identity,
    Rotate90,
    Rotate180,
    Rotate270,
    FlipHorizontal,
    FlipVertical,
    Transpose,
    AntiTranspose,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::Identity,
        Symmetry::Rotate90,
        Symmetry::Rotate180,
        Symmetry::Rotate270,
        Symmetry::FlipHorizontal,
        Symmetry::FlipVertical,
        Symmetry::Transpose,
        Symmetry::AntiTranspose,
    ];

    /// Maps a candidate id to the id at the transformed position.
    pub fn apply(self, id: u8) -> u8 {
        let (r, c) = ((id - 1) / 3, (id - 1) % 3);
        let (r, c) = match self {
            Symmetry::Identity => (r, c),
            Symmetry::Rotate90 => (c, 2 - r),
            Symmetry::Rotate180 => (2 - r, 2 - c),
            Symmetry::Rotate270 => (2 - c, r),
            Symmetry::FlipHorizontal => (r, 2 - c),
            Symmetry::FlipVertical => (2 - r, c),
            Symmetry::Transpose => (c, r),
            Symmetry::AntiTranspose => (2 - c, 2 - r),
        };
        r * 3 + c + 1
    }
}

/// All `C(9, 3) = 84` placements in lexicographic order.
pub fn enumerate_placements() -> Vec<Placement> {
    let mut out = Vec::with_capacity(84);
    for a in 1..=NUM_CANDIDATES {
        for b in a + 1..=NUM_CANDIDATES {
            for c in b + 1..=NUM_CANDIDATES {
                out.push(Placement([a, b, c]));
            }
        }
    }
    out
}

/// An equivalence class of placements under the symmetries of the square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    /// Lexicographically smallest member.
    pub representative: Placement,
    pub members: Vec<Placement>,
}

/// Partitions `placements` into symmetry orbits, ordered by representative.
/// Orbits only contain members present in the input.
pub fn symmetry_reduce(placements: &[Placement]) -> Vec<Orbit> {
    let present: BTreeSet<Placement> = placements.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut orbits = Vec::new();
    for &p in &present {
        if seen.contains(&p) {
            continue;
        }
        let members: BTreeSet<Placement> = Symmetry::ALL
            .iter()
            .map(|&s| p.transformed(s))
            .filter(|q| present.contains(q))
            .collect();
        seen.extend(members.iter().copied());
        let members: Vec<Placement> = members.into_iter().collect();
        orbits.push(Orbit {
            representative: members[0],
            members,
        });
    }
    orbits
}

/// The 16 orbit representatives of all placements.
pub fn representative_placements() -> Vec<Placement> {
    symmetry_reduce(&enumerate_placements())
        .into_iter()
        .map(|o| o.representative)
        .collect()
}

/// One move of a smoke particle at `pos` for a fire at `source`.
pub fn smoke_step<R: Rng + ?Sized>(pos: Cell, source: Cell, rng: &mut R) -> Cell {
    let candidates = pos.neighbours();
    let weights = candidates.map(|c| c.distance(source));
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut chosen = candidates[3];
    for (c, w) in candidates.iter().zip(weights) {
        if u < w {
            chosen = *c;
            break;
        }
        u -= w;
    }
    if chosen.on_grid() {
        chosen
    } else {
        pos
    }
}

/// A sensor placement together with the censoring bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmokeSpec {
    pub placement: Placement,
    pub horizon: u64,
    pub source_domain: SourceDomain,
}

impl SmokeSpec {
    pub fn new(placement: Placement) -> Self {
        SmokeSpec {
            placement,
            horizon: DEFAULT_HORIZON,
            source_domain: SourceDomain::default(),
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_source_domain(mut self, domain: SourceDomain) -> Self {
        self.source_domain = domain;
        self
    }
}

/// Response time of one fire.
///
/// In every slot a particle is spawned at the source (detected at once if
/// the source is a sensor cell), then every particle moves, then sensors
/// are checked. Returns the slot number, so the minimum is 1.
pub fn simulate_response_time<R: Rng + ?Sized>(spec: &SmokeSpec, rng: &mut R) -> Result<u64> {
    if spec.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least one slot"));
    }
    let range = spec.source_domain.coord_range();
    let source = Cell::new(rng.random_range(range.clone()), rng.random_range(range));
    let mut sensor = [false; GRID_POINTS];
    for c in spec.placement.cells() {
        sensor[c.slot()] = true;
    }
    if sensor[source.slot()] {
        return Ok(1);
    }
    let mut particles: Vec<Cell> = Vec::new();
    for slot in 1..=spec.horizon {
        particles.push(source);
        let mut detected = false;
        for p in particles.iter_mut() {
            *p = smoke_step(*p, source, rng);
            detected |= sensor[p.slot()];
        }
        if detected {
            return Ok(slot);
        }
    }
    Err(Error::Censored {
        horizon: spec.horizon,
    })
}

/// Sensor placement testbed: each design is a placement and the observed
/// performance is the response time itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SmokeTestbed {
    designs: Vec<Placement>,
    horizon: u64,
    source_domain: SourceDomain,
    true_best: Option<DesignId>,
}

impl SmokeTestbed {
    /// The 16 symmetry representatives as designs 1..=16.
    pub fn representatives() -> Self {
        Self::new(representative_placements())
    }

    pub fn new(designs: Vec<Placement>) -> Self {
        SmokeTestbed {
            designs,
            horizon: DEFAULT_HORIZON,
            source_domain: SourceDomain::default(),
            true_best: None,
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_source_domain(mut self, domain: SourceDomain) -> Self {
        self.source_domain = domain;
        self
    }

    pub fn with_true_best(mut self, best: DesignId) -> Self {
        self.true_best = Some(best);
        self
    }

    pub fn designs(&self) -> &[Placement] {
        &self.designs
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn true_best(&self) -> Option<DesignId> {
        self.true_best
    }

    pub fn source_domain(&self) -> SourceDomain {
        self.source_domain
    }

    pub fn spec(&self, design: DesignId) -> SmokeSpec {
        SmokeSpec::new(self.designs[design.index()])
            .with_horizon(self.horizon)
            .with_source_domain(self.source_domain)
    }
}

impl Simulator for SmokeTestbed {
    fn num_designs(&self) -> usize {
        self.designs.len()
    }

    fn run<R: Rng + ?Sized>(&self, design: DesignId, rng: &mut R) -> Result<Observation> {
        if design.index() >= self.designs.len() {
            return Err(Error::InvalidArgument("design out of range"));
        }
        let t = simulate_response_time(&self.spec(design), rng)?;
        Observation::new(design, t as f64, t)
    }
}

/// Sample mean and standard error of one placement's response time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignEstimate {
    pub placement: Placement,
    pub mean: f64,
    pub std_err: f64,
    pub reps: u64,
}

impl DesignEstimate {
    pub fn from_stats(placement: Placement, stats: &DesignStats) -> Self {
        let std_err = stats
            .variance()
            .map_or(f64::NAN, |v| libm::sqrt(v / stats.completed as f64));
        DesignEstimate {
            placement,
            mean: stats.mean,
            std_err,
            reps: stats.completed,
        }
    }
}

/// Estimates every design's mean response time from `reps` replications,
/// designs in order, all drawing from `rng`.
pub fn estimate_design_means<R: Rng + ?Sized>(
    testbed: &SmokeTestbed,
    reps: u64,
    rng: &mut R,
) -> Result<Vec<DesignEstimate>> {
    if reps == 0 {
        return Err(Error::InvalidArgument(
            "at least one replication is required",
        ));
    }
    (0..testbed.num_designs())
        .map(|i| {
            let design = DesignId::from_index(i);
            let mut stats = DesignStats::new();
            for _ in 0..reps {
                stats.push(&testbed.run(design, rng)?);
            }
            Ok(DesignEstimate::from_stats(testbed.designs[i], &stats))
        })
        .collect()
}

/// Design with the smallest estimated mean.
pub fn best_estimate(estimates: &[DesignEstimate]) -> Option<DesignId> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in estimates.iter().enumerate() {
        match best {
            Some((_, m)) if e.mean >= m => {}
            _ => best = Some((i, e.mean)),
        }
    }
    best.map(|(i, _)| DesignId::from_index(i))
}

/// Empirical PMF of one design's response time, as `(time, frequency)`
/// pairs in increasing time order.
pub fn empirical_pmf<R: Rng + ?Sized>(
    testbed: &SmokeTestbed,
    design: DesignId,
    reps: u64,
    rng: &mut R,
) -> Result<Vec<(u64, f64)>> {
    if reps == 0 {
        return Err(Error::InvalidArgument(
            "at least one replication is required",
        ));
    }
    let mut counts: Vec<u64> = vec![];
    for _ in 0..reps {
        let t = testbed.run(design, rng)?.elapsed as usize;
        if counts.len() <= t {
            counts.resize(t + 1, 0);
        }
        counts[t] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|&(_, n)| n > 0)
        .map(|(t, n)| (t as u64, n as f64 / reps as f64))
        .collect())
}
