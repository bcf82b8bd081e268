//! Grid-based global phase portraits of the period map.
//!
//! Cells are indexed row-major with `v` as the row: `index = iv * nx + ix`.
//! Every operation evaluates cells in parallel and returns results in index
//! order, so output does not depend on the number of worker threads.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ValidatedParams;
use crate::strobemap::{phi, phi_jacobian, Classification, DET_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nx: usize,
    pub nv: usize,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub transient: usize,
}

fn default_iterations() -> usize {
    2000
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), v_range: (f64, f64), nx: usize, nv: usize) -> Self {
        GridSpec { x_range, v_range, nx, nv, t0: 0.0, iterations: default_iterations(), transient: 0 }
    }

    pub fn with_iterations(self, iterations: usize, transient: usize) -> Self {
        GridSpec { iterations, transient, ..self }
    }

    pub fn validate(&self, p: &ValidatedParams) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.nx < 2 || self.nv < 2 {
            return bad(format!("grid needs nx, nv >= 2 (got {} x {})", self.nx, self.nv));
        }
        let (x0, x1) = self.x_range;
        let (v0, v1) = self.v_range;
        if !(x0 < x1) || !(v0 < v1) || !v0.is_finite() || !v1.is_finite() {
            return bad("grid ranges must be finite with lo < hi".into());
        }
        if x0 < p.l() || x1 > p.r() {
            return bad(format!("x range [{x0}, {x1}] exceeds the walls [{}, {}]", p.l(), p.r()));
        }
        if self.iterations == 0 || self.transient >= self.iterations {
            return bad("need iterations >= 1 and transient < iterations".into());
        }
        if !self.t0.is_finite() {
            return bad("grid phase t0 must be finite".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v_range.1 - self.v_range.0) / self.nv as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dv()
    }

    pub fn index(&self, ix: usize, iv: usize) -> usize {
        iv * self.nx + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn center(&self, index: usize) -> (f64, f64) {
        let (ix, iv) = self.coords(index);
        (
            self.x_range.0 + (ix as f64 + 0.5) * self.dx(),
            self.v_range.0 + (iv as f64 + 0.5) * self.dv(),
        )
    }

    /// Cell containing `(x, v)`, if inside the grid.
    pub fn cell_of(&self, x: f64, v: f64) -> Option<usize> {
        let fx = (x - self.x_range.0) / self.dx();
        let fv = (v - self.v_range.0) / self.dv();
        if fx < 0.0 || fv < 0.0 || !fx.is_finite() || !fv.is_finite() {
            return None;
        }
        let (ix, iv) = (fx as usize, fv as usize);
        // The upper x edge may be a wall; keep it in the last column.
        let ix = if ix == self.nx && x <= self.x_range.1 { self.nx - 1 } else { ix };
        (ix < self.nx && iv < self.nv).then(|| self.index(ix, iv))
    }

    /// Indices of the (up to eight) surrounding cells.
    pub fn neighbours(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iv) = self.coords(index);
        (-1i64..=1)
            .flat_map(move |dv| (-1i64..=1).map(move |dx| (dx, dv)))
            .filter(|&(dx, dv)| dx != 0 || dv != 0)
            .filter_map(move |(dx, dv)| {
                let (x, v) = (ix as i64 + dx, iv as i64 + dv);
                (x >= 0 && v >= 0 && (x as usize) < self.nx && (v as usize) < self.nv)
                    .then(|| self.index(x as usize, v as usize))
            })
    }

    fn edge_neighbours(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iv) = self.coords(index);
        [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].into_iter().filter_map(move |(dx, dv)| {
            let (x, v) = (ix as i64 + dx, iv as i64 + dv);
            (x >= 0 && v >= 0 && (x as usize) < self.nx && (v as usize) < self.nv)
                .then(|| self.index(x as usize, v as usize))
        })
    }
}

// ---------------------------------------------------------------------------
// Orbit clouds

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CloudPoint {
    pub seed: usize,
    pub iteration: usize,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedFailure {
    pub seed: usize,
    pub iteration: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Cloud {
    pub points: Vec<CloudPoint>,
    pub failures: Vec<SeedFailure>,
}

/// Orbit of one seed; stops at the first failing iteration.
pub fn iterate_seed(
    p: &ValidatedParams,
    seed: (f64, f64),
    t0: f64,
    iterations: usize,
) -> (Vec<(f64, f64)>, Option<(usize, Error)>) {
    let mut z = seed;
    let mut out = Vec::with_capacity(iterations);
    for n in 1..=iterations {
        match phi(p, z, t0, 1) {
            Ok(m) => {
                z = m.output_xy();
                out.push(z);
            }
            Err(e) => return (out, Some((n, e))),
        }
    }
    (out, None)
}

/// Stroboscopic orbits of every cell center, after the transient.
pub fn iterate_cloud(p: &ValidatedParams, grid: &GridSpec) -> Result<Cloud> {
    grid.validate(p)?;
    let seeds: Vec<(f64, f64)> = (0..grid.len()).map(|i| grid.center(i)).collect();
    Ok(iterate_seeds(p, &seeds, grid.t0, grid.iterations, grid.transient))
}

pub fn iterate_seeds(p: &ValidatedParams, seeds: &[(f64, f64)], t0: f64, iterations: usize, transient: usize) -> Cloud {
    let per_seed: Vec<_> = seeds
        .par_iter()
        .map(|&s| iterate_seed(p, s, t0, iterations))
        .collect();
    let mut cloud = Cloud::default();
    for (seed, (orbit, failure)) in per_seed.into_iter().enumerate() {
        for (n, z) in orbit.into_iter().enumerate() {
            let iteration = n + 1;
            if iteration > transient {
                cloud.points.push(CloudPoint { seed, iteration, x: z.0, v: z.1 });
            }
        }
        if let Some((iteration, e)) = failure {
            cloud.failures.push(SeedFailure { seed, iteration, message: e.to_string() });
        }
    }
    cloud
}

// ---------------------------------------------------------------------------
// Area-preserving / dissipative decomposition

#[derive(Debug, Clone, Serialize)]
pub struct RegionMap {
    pub grid: GridSpec,
    pub classes: Vec<Classification>,
    /// `det Phi'` per cell; NaN where undefined.
    pub dets: Vec<f64>,
}

impl RegionMap {
    pub fn is_dissipative(&self, index: usize) -> bool {
        self.classes[index].is_dissipative()
    }

    /// Cells within one cell-width of a class change.
    pub fn on_boundary(&self, index: usize) -> bool {
        let own = self.classes[index];
        self.grid.neighbours(index).any(|n| self.classes[n] != own)
    }

    pub fn count(&self, class: Classification) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn dissipative_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes.len()).filter(|&i| self.is_dissipative(i))
    }
}

/// One-period classification of a single state.
pub fn classify_point(p: &ValidatedParams, z: (f64, f64), t0: f64) -> (Classification, f64) {
    match phi_jacobian(p, z, t0, 1) {
        Ok(m) => {
            let det = m.det.expect("defined det");
            (m.classification, det)
        }
        Err(_) => (Classification::Undefined, f64::NAN),
    }
}

pub fn classify_regions(p: &ValidatedParams, grid: &GridSpec) -> Result<RegionMap> {
    grid.validate(p)?;
    let cells: Vec<(Classification, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| classify_point(p, grid.center(i), grid.t0))
        .collect();
    let (classes, dets) = cells.into_iter().unzip();
    Ok(RegionMap { grid: *grid, classes, dets })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InvarianceReport {
    pub region_cells: usize,
    pub excluded_boundary: usize,
    pub excluded_undefined: usize,
    pub tested: usize,
    pub violations: usize,
    pub violation_fraction: f64,
}

/// Maps every dissipative cell forward one period and re-classifies the image.
///
/// Cells on the class boundary, and images landing in boundary cells, are not
/// counted.
pub fn invariance_check(p: &ValidatedParams, map: &RegionMap) -> InvarianceReport {
    let grid = &map.grid;
    let region: Vec<usize> = map.dissipative_cells().collect();
    let outcomes: Vec<Outcome> = region
        .par_iter()
        .map(|&i| {
            if map.on_boundary(i) {
                return Outcome::Boundary;
            }
            let image = match phi(p, grid.center(i), grid.t0, 1) {
                Ok(m) => m.output_xy(),
                Err(_) => return Outcome::Undefined,
            };
            if let Some(j) = grid.cell_of(image.0, image.1) {
                if map.on_boundary(j) {
                    return Outcome::Boundary;
                }
            }
            // Image phase is t0 + T, equivalent to t0.
            match classify_point(p, image, grid.t0).0 {
                Classification::Undefined => Outcome::Undefined,
                c if c.is_dissipative() => Outcome::Inside,
                _ => Outcome::Violation,
            }
        })
        .collect();
    let mut rep = InvarianceReport { region_cells: region.len(), ..Default::default() };
    for o in outcomes {
        match o {
            Outcome::Boundary => rep.excluded_boundary += 1,
            Outcome::Undefined => rep.excluded_undefined += 1,
            Outcome::Inside => rep.tested += 1,
            Outcome::Violation => {
                rep.tested += 1;
                rep.violations += 1;
            }
        }
    }
    rep.violation_fraction = if rep.tested == 0 { 0.0 } else { rep.violations as f64 / rep.tested as f64 };
    rep
}

enum Outcome {
    Boundary,
    Undefined,
    Inside,
    Violation,
}

// ---------------------------------------------------------------------------
// Long-run cell verdicts

#[derive(Debug, Clone, Copy)]
pub struct VerdictOptions {
    /// Consecutive periods a convergence test must hold.
    pub tail: usize,
    pub converge_tol: f64,
    pub max_cycle: usize,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        VerdictOptions { tail: 10, converge_tol: 1e-9, max_cycle: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CellVerdict {
    /// Never turns or sticks over the whole budget.
    Island,
    /// Settles on a fixed point whose motion has no impacts; `x` locates it on
    /// the segment of such fixed points.
    AttractedToNoImpactLine { x: f64 },
    AttractedToPeriodicOrbit { id: usize },
    /// Stuck at least once, not yet converged.
    StickingTransient,
    EscapedToBudget,
}

impl CellVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            CellVerdict::Island => "island",
            CellVerdict::AttractedToNoImpactLine { .. } => "no_impact_line",
            CellVerdict::AttractedToPeriodicOrbit { .. } => "periodic_orbit",
            CellVerdict::StickingTransient => "sticking_transient",
            CellVerdict::EscapedToBudget => "escaped_to_budget",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            CellVerdict::Island => 0,
            CellVerdict::AttractedToNoImpactLine { .. } => 1,
            CellVerdict::AttractedToPeriodicOrbit { .. } => 2,
            CellVerdict::StickingTransient => 3,
            CellVerdict::EscapedToBudget => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellDiagnostics {
    pub iterations_used: usize,
    pub final_state: (f64, f64),
    /// Smallest one-period `det` met along the orbit.
    pub min_det: f64,
    /// One-period `det` over the last `tail` iterations; NaN where undefined.
    pub det_history: Vec<f64>,
    pub turnings: usize,
    pub sticks: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub verdict: CellVerdict,
    pub diagnostics: CellDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct Attractor {
    pub id: usize,
    pub period: usize,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Portrait {
    pub grid: GridSpec,
    pub cells: Vec<CellResult>,
    pub attractors: Vec<Attractor>,
}

impl Portrait {
    pub fn count(&self, label: &str) -> usize {
        self.cells.iter().filter(|c| c.verdict.label() == label).count()
    }
}

enum RawVerdict {
    Island,
    NoImpact(f64),
    Cycle(Vec<(f64, f64)>),
    Sticking,
    Escaped,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn run_cell(p: &ValidatedParams, seed: (f64, f64), t0: f64, budget: usize, opts: &VerdictOptions) -> (RawVerdict, CellDiagnostics) {
    let mut states = Vec::with_capacity(budget + 1);
    let mut impacts = Vec::with_capacity(budget);
    states.push(seed);
    let mut streak = vec![0usize; opts.max_cycle + 1];
    let mut diag = CellDiagnostics {
        iterations_used: 0,
        final_state: seed,
        min_det: 1.0,
        det_history: Vec::new(),
        turnings: 0,
        sticks: 0,
        error: None,
    };
    let mut dissipated = false;
    let mut grazed = false;
    let mut z = seed;
    for n in 1..=budget {
        let m = match phi(p, z, t0, 1) {
            Ok(m) => m,
            Err(e) => {
                diag.error = Some(e.to_string());
                return (RawVerdict::Escaped, diag);
            }
        };
        z = m.output_xy();
        states.push(z);
        impacts.push(m.summary.impacts());
        diag.iterations_used = n;
        diag.final_state = z;
        diag.turnings += m.summary.turnings;
        diag.sticks += m.summary.stick_starts;
        grazed |= m.summary.grazings > 0;
        if diag.det_history.len() == opts.tail.max(1) {
            diag.det_history.remove(0);
        }
        diag.det_history.push(m.det.unwrap_or(f64::NAN));
        match m.det {
            Some(d) => {
                diag.min_det = diag.min_det.min(d.abs());
                dissipated |= d.abs() < 1.0 - DET_TOL;
            }
            None => dissipated = true,
        }
        if !dissipated {
            continue;
        }
        for k in 1..=opts.max_cycle.min(n) {
            if dist(z, states[n - k]) < opts.converge_tol {
                streak[k] += 1;
            } else {
                streak[k] = 0;
            }
        }
        if let Some(k) = (1..=opts.max_cycle.min(n)).find(|&k| streak[k] >= opts.tail) {
            let quiet = impacts[n.saturating_sub(opts.tail)..].iter().all(|&c| c == 0);
            if k == 1 && quiet {
                return (RawVerdict::NoImpact(z.0), diag);
            }
            return (RawVerdict::Cycle(states[n + 1 - k..=n].to_vec()), diag);
        }
    }
    let verdict = if diag.turnings == 0 && diag.sticks == 0 && !grazed {
        RawVerdict::Island
    } else if diag.sticks > 0 {
        RawVerdict::Sticking
    } else {
        RawVerdict::Escaped
    };
    (verdict, diag)
}

/// Rotates a cycle to start at its lexicographically smallest point.
fn canonical(cycle: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let start = (0..cycle.len())
        .min_by(|&a, &b| cycle[a].partial_cmp(&cycle[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    cycle[start..].iter().chain(&cycle[..start]).copied().collect()
}

/// Long-run verdict for every cell of the grid.
pub fn classify_cells(p: &ValidatedParams, grid: &GridSpec, opts: VerdictOptions) -> Result<Portrait> {
    grid.validate(p)?;
    let raw: Vec<(RawVerdict, CellDiagnostics)> = (0..grid.len())
        .into_par_iter()
        .map(|i| run_cell(p, grid.center(i), grid.t0, grid.iterations, &opts))
        .collect();
    let mut attractors: Vec<Attractor> = Vec::new();
    let match_tol = 1e-6;
    let cells = raw
        .into_iter()
        .map(|(v, diagnostics)| {
            let verdict = match v {
                RawVerdict::Island => CellVerdict::Island,
                RawVerdict::NoImpact(x) => CellVerdict::AttractedToNoImpactLine { x },
                RawVerdict::Sticking => CellVerdict::StickingTransient,
                RawVerdict::Escaped => CellVerdict::EscapedToBudget,
                RawVerdict::Cycle(c) => {
                    let c = canonical(&c);
                    let known = attractors.iter().find(|a| {
                        a.period == c.len() && c.iter().all(|z| a.points.iter().any(|q| dist(*z, *q) < match_tol))
                    });
                    let id = match known {
                        Some(a) => a.id,
                        None => {
                            let id = attractors.len();
                            attractors.push(Attractor { id, period: c.len(), points: c });
                            id
                        }
                    };
                    CellVerdict::AttractedToPeriodicOrbit { id }
                }
            };
            CellResult { verdict, diagnostics }
        })
        .collect();
    Ok(Portrait { grid: *grid, cells, attractors })
}

// ---------------------------------------------------------------------------
// Invariant islands

#[derive(Debug, Clone, Copy)]
pub struct IslandOptions {
    /// Iterations a point must survive without turning or sticking.
    pub iterations: usize,
    pub samples: usize,
    /// Periods the samples are mapped forward for the preservation test.
    pub forward: usize,
    pub seed: u64,
}

impl Default for IslandOptions {
    fn default() -> Self {
        IslandOptions { iterations: 200, samples: 100_000, forward: 1, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IslandArea {
    pub cells: usize,
    /// Area of the island cells of the connected component.
    pub cell_area: f64,
    pub area: f64,
    pub std_error: f64,
    /// Area of the forward image, `sum |det (Phi^k)'|` over accepted samples.
    pub mapped_area: f64,
    /// Fraction of mapped samples landing back in the island's cells.
    pub containment: f64,
    pub accepted: usize,
    pub low_confidence: bool,
}

/// True when the orbit of `z` neither turns, sticks nor grazes for `n` periods.
pub fn stays_in_island(p: &ValidatedParams, z: (f64, f64), t0: f64, n: usize) -> bool {
    let mut z = z;
    for _ in 0..n {
        match phi(p, z, t0, 1) {
            Ok(m) if !m.summary.touches_zero_velocity() => z = m.output_xy(),
            _ => return false,
        }
    }
    true
}

/// Connected set of island cells around `seed`, by breadth-first search.
pub fn island_component(p: &ValidatedParams, grid: &GridSpec, seed: (f64, f64), iterations: usize) -> Result<BTreeSet<usize>> {
    grid.validate(p)?;
    let start = grid
        .cell_of(seed.0, seed.1)
        .ok_or_else(|| Error::ContractViolation("island seed lies outside the grid".into()))?;
    let test = |i: usize| stays_in_island(p, grid.center(i), grid.t0, iterations);
    // The seed's own cell counts even when its center misses a thin island.
    if !stays_in_island(p, seed, grid.t0, iterations) {
        return Err(Error::NotInIsland);
    }
    let mut seen = vec![false; grid.len()];
    let mut island = BTreeSet::new();
    let mut frontier = VecDeque::from([start]);
    seen[start] = true;
    while !frontier.is_empty() {
        // Evaluate one BFS layer in parallel.
        let layer: Vec<usize> = frontier.drain(..).collect();
        let verdicts: Vec<bool> = layer.par_iter().map(|&i| i == start || test(i)).collect();
        for (&i, ok) in layer.iter().zip(verdicts) {
            if !ok {
                continue;
            }
            island.insert(i);
            for n in grid.edge_neighbours(i).chain(wall_mirror(p, grid, i)) {
                if !seen[n] {
                    seen[n] = true;
                    frontier.push_back(n);
                }
            }
        }
    }
    Ok(island)
}

/// Across a wall, `(x, v)` continues as `(x, -v)`: a state reaching the wall
/// reflects. Returns the mirrored cell of a cell in a wall column.
fn wall_mirror(p: &ValidatedParams, grid: &GridSpec, index: usize) -> Option<usize> {
    let (ix, _) = grid.coords(index);
    let at_wall = (ix == 0 && grid.x_range.0 <= p.l()) || (ix + 1 == grid.nx && grid.x_range.1 >= p.r());
    if !at_wall {
        return None;
    }
    let (x, v) = grid.center(index);
    grid.cell_of(x, -v).filter(|&m| m != index)
}

/// Monte-Carlo area of the island containing `seed`, with a forward-mapped
/// re-estimate.
pub fn island_area(p: &ValidatedParams, grid: &GridSpec, seed: (f64, f64), opts: IslandOptions) -> Result<IslandArea> {
    let island = island_component(p, grid, seed, opts.iterations)?;
    let coords: Vec<(usize, usize)> = island.iter().map(|&i| grid.coords(i)).collect();
    let ix0 = coords.iter().map(|c| c.0).min().unwrap_or(0);
    let ix1 = coords.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let iv0 = coords.iter().map(|c| c.1).min().unwrap_or(0);
    let iv1 = coords.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let bx = (grid.x_range.0 + ix0 as f64 * grid.dx(), grid.x_range.0 + ix1 as f64 * grid.dx());
    let bv = (grid.v_range.0 + iv0 as f64 * grid.dv(), grid.v_range.0 + iv1 as f64 * grid.dv());
    let box_area = (bx.1 - bx.0) * (bv.1 - bv.0);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples: Vec<(f64, f64)> = (0..opts.samples)
        .map(|_| (rng.gen_range(bx.0..bx.1), rng.gen_range(bv.0..bv.1)))
        .collect();
    let in_cells = |z: (f64, f64)| grid.cell_of(z.0, z.1).map_or(false, |c| island.contains(&c));
    let in_island = |z: (f64, f64)| in_cells(z) && stays_in_island(p, z, grid.t0, opts.iterations);
    let results: Vec<Option<(f64, bool)>> = samples
        .par_iter()
        .map(|&z| {
            if !in_island(z) {
                return None;
            }
            let m = phi_jacobian(p, z, grid.t0, opts.forward).ok()?;
            let det = m.det.unwrap_or(f64::NAN).abs();
            Some((det, in_cells(m.output_xy())))
        })
        .collect();
    let accepted = results.iter().filter(|r| r.is_some()).count();
    let contained = results.iter().flatten().filter(|r| r.1).count();
    let det_sum: f64 = results.iter().flatten().map(|r| r.0).sum();
    let n = opts.samples.max(1) as f64;
    let frac = accepted as f64 / n;
    let cells = island.len();
    Ok(IslandArea {
        cells,
        cell_area: cells as f64 * grid.cell_area(),
        area: box_area * frac,
        std_error: box_area * (frac * (1.0 - frac) / n).sqrt(),
        mapped_area: box_area * det_sum / n,
        containment: if accepted == 0 { 0.0 } else { contained as f64 / accepted as f64 },
        accepted,
        low_confidence: cells <= 4 || accepted < 100,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OscillatorParams;
    use std::f64::consts::PI;

    fn unit_walls(f: f64) -> ValidatedParams {
        OscillatorParams::uniform(1.0, f, 2.0 * PI, -1.0, 1.0).validate().unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = GridSpec::new((-1.0, 1.0), (-2.0, 2.0), 4, 8);
        assert_eq!(g.len(), 32);
        assert_eq!(g.center(0), (-0.75, -1.75));
        assert_eq!(g.cell_of(-0.75, -1.75), Some(0));
        assert_eq!(g.cell_of(1.0, 0.1), Some(g.index(3, 4)));
        assert_eq!(g.cell_of(0.0, 2.5), None);
        assert_eq!(g.neighbours(0).count(), 3);
        assert_eq!(g.neighbours(g.index(1, 1)).count(), 8);
        for i in 0..g.len() {
            let c = g.center(i);
            assert_eq!(g.cell_of(c.0, c.1), Some(i));
        }
    }

    #[test]
    fn grid_validation() {
        let p = unit_walls(0.05);
        assert!(GridSpec::new((-1.0, 1.0), (-2.0, 2.0), 1, 8).validate(&p).is_err());
        assert!(GridSpec::new((-1.5, 1.0), (-2.0, 2.0), 4, 8).validate(&p).is_err());
        assert!(GridSpec::new((-1.0, 1.0), (2.0, -2.0), 4, 8).validate(&p).is_err());
        assert!(GridSpec::new((-1.0, 1.0), (-2.0, 2.0), 4, 8).with_iterations(5, 5).validate(&p).is_err());
    }

    #[test]
    fn fixed_point_seed_has_a_constant_orbit() {
        let p = unit_walls(0.05);
        let o = crate::orbits::symmetric_orbit(&p, crate::orbits::Branch::X1).unwrap();
        let cloud = iterate_seeds(&p, &[o.fixed_state], 0.0, 20, 0);
        for pt in &cloud.points {
            assert!(dist((pt.x, pt.v), o.fixed_state) < 1e-9);
        }
    }

    #[test]
    fn verdicts_are_deterministic_across_thread_counts() {
        let p = unit_walls(0.1);
        let g = GridSpec::new((-1.0, 1.0), (-5.0, 5.0), 8, 8).with_iterations(150, 0);
        let a = classify_cells(&p, &g, VerdictOptions::default()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| classify_cells(&p, &g, VerdictOptions::default()).unwrap());
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.verdict, y.verdict);
        }
    }
}
