//! The computational core: coverage fields, exact k-coverage verification
//! of a 2D window by disks, and cover times / coverage thresholds by
//! monotone bisection, cross-checked by certified Lipschitz grid oracles.
//!
//! The exact verifier rests on the vacancy-corner structure: a nonempty
//! uncovered region has a lowest point, and that point is a window corner,
//! a circle/boundary crossing, a circle/circle crossing, the top of a
//! single circle, or the bottom of a disc window. Each such candidate is
//! tested robustly with wedge probes at several scales; a probe that is
//! inside the window and covered by fewer than k closed disks is a
//! certified witness of non-coverage.

use crate::geom::{
    circle_circle_intersections, Disk, GeomError, Location, Point, Window, DEFAULT_GEOM_TOL,
};
use crate::processes::{MarkKind, MarkedPointSet, RadiusLaw, RngSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default bisection tolerance, in window-diameter units. Geometry uses
/// [`DEFAULT_GEOM_TOL`]; statistics downstream need far less precision
/// than the geometric kernel provides, and bisection cost is logarithmic.
pub const DEFAULT_BISECT_TOL: f64 = 1e-7;

/// A growth-process realization: space-time seeds plus how they were
/// sampled. `horizon` is the time bound the sample is valid up to; cover
/// times beyond it raise [`CoverageError::InsufficientHalo`] rather than
/// silently using an incomplete seed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfiguration {
    pub seeds: MarkedPointSet,
    pub restricted: bool,
    pub horizon: Option<f64>,
}

impl GrowthConfiguration {
    pub fn new(seeds: MarkedPointSet, restricted: bool, horizon: Option<f64>) -> Self {
        assert_eq!(seeds.mark_kind, MarkKind::BirthTime);
        assert!(seeds.marks.iter().all(|s| *s >= 0.0));
        GrowthConfiguration { seeds, restricted, horizon }
    }

    /// Balls `B(x_i, (t - s_i)+)` claimed by time `t`.
    pub fn disks_at(&self, t: f64) -> Vec<Disk> {
        self.seeds
            .points
            .iter()
            .zip(&self.seeds.marks)
            .filter(|(_, s)| **s <= t)
            .map(|(p, s)| Disk::new(*p, t - *s))
            .collect()
    }

    /// Like [`disks_at`](Self::disks_at), keeping only balls that can
    /// reach the window `w` at all: halo seeds far outside contribute
    /// nothing to its coverage and only burden the verifier.
    pub fn disks_at_reaching(&self, t: f64, w: &Window) -> Vec<Disk> {
        self.seeds
            .points
            .iter()
            .zip(&self.seeds.marks)
            .filter(|(p, s)| **s <= t && w.distance_to(p) <= t - **s)
            .map(|(p, s)| Disk::new(*p, t - *s))
            .collect()
    }
}

/// Outcome of an exact coverage check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageVerdict {
    pub covered: bool,
    /// A certified uncovered (deficit) point when `covered` is false.
    pub witness: Option<Point>,
    /// `k` minus the achieved cover count at the witness.
    pub deficit: Option<u32>,
    /// Some candidate was decided only by local grid refinement inside the
    /// tolerance band.
    pub ambiguous: bool,
}

/// Rigorous bracket for the maximum of a Lipschitz field over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedInterval {
    pub lower: f64,
    pub upper: f64,
    pub lipschitz_used: f64,
    pub grid_spacing: f64,
}

impl CertifiedInterval {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverageError {
    UnsupportedDimension { expected: usize, got: usize },
    /// The sampled horizon is below the cover time; the caller must extend
    /// the realization (e.g. via `sample_halo_shell`) and retry.
    InsufficientHalo { horizon: f64, lower_bound: f64 },
    /// Post-hoc re-verification of the bisection sandwich failed.
    SandwichViolation { value: f64, tol: f64 },
    GridTooCoarse { h: f64, inradius: f64 },
    ZeroMark,
    Geom(GeomError),
}

impl fmt::Display for CoverageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageError::UnsupportedDimension { expected, got } => {
                write!(f, "exact coverage verification needs d={expected}, got d={got}")
            }
            CoverageError::InsufficientHalo { horizon, lower_bound } => write!(
                f,
                "sampling horizon {horizon} is below the cover time (> {lower_bound}); \
                 re-sample with a doubled horizon"
            ),
            CoverageError::SandwichViolation { value, tol } => {
                write!(f, "bisection sandwich failed at {value} (tol {tol})")
            }
            CoverageError::GridTooCoarse { h, inradius } => {
                write!(f, "grid spacing {h} exceeds window inradius {inradius}")
            }
            CoverageError::ZeroMark => write!(f, "spbm field needs all positive marks"),
            CoverageError::Geom(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CoverageError {}

impl From<GeomError> for CoverageError {
    fn from(e: GeomError) -> Self {
        CoverageError::Geom(e)
    }
}

/// Johnson-Mehl coverage field: the time at which `x` is covered,
/// `min_i (s_i + ||x - x_i||)`; infinite for an empty seed set.
pub fn xi_jm(x: &Point, g: &GrowthConfiguration) -> f64 {
    g.seeds
        .points
        .iter()
        .zip(&g.seeds.marks)
        .map(|(p, s)| s + x.dist(p))
        .fold(f64::INFINITY, f64::min)
}

/// Boolean-model k-coverage field: the k-th smallest of `||x - p_i|| / Y_i`
/// (the smallest scale factor at which `x` is covered k times). Points
/// with zero mark contribute infinity; fewer than `k` usable points give
/// infinity.
pub fn xi_spbm(x: &Point, pts: &MarkedPointSet, k: u32) -> f64 {
    let k = k as usize;
    if k == 0 {
        return 0.0;
    }
    // Track the k smallest of dist^2 / Y^2; the k-th smallest commutes
    // with the square root.
    let mut best = vec![f64::INFINITY; k];
    for (p, y) in pts.points.iter().zip(&pts.marks) {
        if *y <= 0.0 {
            continue;
        }
        let v = x.dist_sq(p) / (y * y);
        if v < best[k - 1] {
            let mut i = k - 1;
            while i > 0 && best[i - 1] > v {
                best[i] = best[i - 1];
                i -= 1;
            }
            best[i] = v;
        }
    }
    best[k - 1].sqrt()
}

/// Closed and open cover counts of `p`: disks with `||p-c|| <= r + tol`
/// and `||p-c|| <= r - tol` respectively.
pub fn cover_count(p: &Point, disks: &[Disk], tol: f64) -> (u32, u32) {
    let mut closed = 0;
    let mut open = 0;
    for d in disks {
        let dist_sq = p.dist_sq(&d.center);
        let hi = d.radius + tol;
        if dist_sq <= hi * hi {
            closed += 1;
            let lo = d.radius - tol;
            if lo >= 0.0 && dist_sq <= lo * lo {
                open += 1;
            }
        }
    }
    (closed, open)
}

// ---------------------------------------------------------------------------
// Spatial index: disks bucketed into every grid cell they overlap, so a
// point-in-which-disks query scans a single cell.

struct DiskIndex {
    ox: f64,
    oy: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    /// CSR cell layout: entries of cell c live at `offsets[c]..offsets[c+1]`.
    offsets: Vec<u32>,
    /// Packed per-entry disk data `(cx, cy, (r+tol)^2, (r-tol)^2)`, scanned
    /// contiguously by the count queries; negative last component encodes
    /// a radius below the tolerance.
    packed: Vec<[f64; 4]>,
    ids: Vec<u32>,
}

impl DiskIndex {
    fn build(disks: &[Disk], w: &Window, tol: f64) -> DiskIndex {
        let (lo, hi) = w.bounding_box();
        let max_r = disks.iter().map(|d| d.radius).fold(0.0f64, f64::max);
        let ox = lo.x() - max_r;
        let oy = lo.y() - max_r;
        let ex = hi.x() + max_r - ox;
        let ey = hi.y() + max_r - oy;
        // A few disks per cell; tying the cell to the mean radius keeps
        // the per-disk fill bounded.
        let mean_r = if disks.is_empty() {
            0.0
        } else {
            disks.iter().map(|d| d.radius).sum::<f64>() / disks.len() as f64
        };
        let mut cell = (0.75 * mean_r).max(ex.max(ey) / 512.0);
        if !(cell > 0.0) {
            cell = ex.max(ey).max(1.0);
        }
        let nx = ((ex / cell).ceil() as usize).max(1);
        let ny = ((ey / cell).ceil() as usize).max(1);
        let span = |d: &Disk| {
            let x0 = (((d.center.x() - d.radius - ox) / cell).floor() as isize).max(0) as usize;
            let x1 = (((d.center.x() + d.radius - ox) / cell).floor() as isize)
                .clamp(0, nx as isize - 1) as usize;
            let y0 = (((d.center.y() - d.radius - oy) / cell).floor() as isize).max(0) as usize;
            let y1 = (((d.center.y() + d.radius - oy) / cell).floor() as isize)
                .clamp(0, ny as isize - 1) as usize;
            (x0.min(nx - 1), x1, y0.min(ny - 1), y1)
        };
        let mut counts = vec![0u32; nx * ny + 1];
        for d in disks {
            let (x0, x1, y0, y1) = span(d);
            for cx in x0..=x1 {
                for cy in y0..=y1 {
                    counts[cx * ny + cy + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts;
        let total = *offsets.last().unwrap() as usize;
        let mut fill = offsets.clone();
        let mut packed = vec![[0.0; 4]; total];
        let mut ids = vec![0u32; total];
        for (id, d) in disks.iter().enumerate() {
            let r_hi = d.radius + tol;
            let r_lo = d.radius - tol;
            let entry = [
                d.center.x(),
                d.center.y(),
                r_hi * r_hi,
                if r_lo >= 0.0 { r_lo * r_lo } else { -1.0 },
            ];
            let (x0, x1, y0, y1) = span(d);
            for cx in x0..=x1 {
                for cy in y0..=y1 {
                    let slot = fill[cx * ny + cy] as usize;
                    packed[slot] = entry;
                    ids[slot] = id as u32;
                    fill[cx * ny + cy] += 1;
                }
            }
        }
        DiskIndex { ox, oy, cell, nx, ny, offsets, packed, ids }
    }

    fn cell_range(&self, cx: usize, cy: usize) -> std::ops::Range<usize> {
        let c = cx * self.ny + cy;
        self.offsets[c] as usize..self.offsets[c + 1] as usize
    }

    fn counts(&self, p: &Point) -> (u32, u32) {
        let cx = ((p.x() - self.ox) / self.cell).floor() as isize;
        let cy = ((p.y() - self.oy) / self.cell).floor() as isize;
        if cx < 0 || cy < 0 || cx >= self.nx as isize || cy >= self.ny as isize {
            return (0, 0);
        }
        let mut closed = 0;
        let mut open = 0;
        let (px, py) = (p.x(), p.y());
        for e in &self.packed[self.cell_range(cx as usize, cy as usize)] {
            let dx = px - e[0];
            let dy = py - e[1];
            let dist_sq = dx * dx + dy * dy;
            closed += (dist_sq <= e[2]) as u32;
            open += (dist_sq <= e[3]) as u32;
        }
        (closed, open)
    }

    /// Early-exit robust-interior test: true once `k` disks contain `p`
    /// with the open (inner) margin. The common covered-side case exits
    /// after a handful of entries.
    fn open_at_least(&self, p: &Point, k: u32) -> bool {
        let cx = ((p.x() - self.ox) / self.cell).floor() as isize;
        let cy = ((p.y() - self.oy) / self.cell).floor() as isize;
        if cx < 0 || cy < 0 || cx >= self.nx as isize || cy >= self.ny as isize {
            return k == 0;
        }
        let mut open = 0;
        let (px, py) = (p.x(), p.y());
        for e in &self.packed[self.cell_range(cx as usize, cy as usize)] {
            let dx = px - e[0];
            let dy = py - e[1];
            if dx * dx + dy * dy <= e[3] {
                open += 1;
                if open >= k {
                    return true;
                }
            }
        }
        false
    }

    /// Early-exit closed-cover test with the outer margin.
    fn closed_at_least(&self, p: &Point, k: u32) -> bool {
        let cx = ((p.x() - self.ox) / self.cell).floor() as isize;
        let cy = ((p.y() - self.oy) / self.cell).floor() as isize;
        if cx < 0 || cy < 0 || cx >= self.nx as isize || cy >= self.ny as isize {
            return k == 0;
        }
        let mut closed = 0;
        let (px, py) = (p.x(), p.y());
        for e in &self.packed[self.cell_range(cx as usize, cy as usize)] {
            let dx = px - e[0];
            let dy = py - e[1];
            if dx * dx + dy * dy <= e[2] {
                closed += 1;
                if closed >= k {
                    return true;
                }
            }
        }
        false
    }

    fn min_cell(&self, d: &Disk) -> (i32, i32) {
        (
            (((d.center.x() - d.radius - self.ox) / self.cell).floor() as i32).max(0),
            (((d.center.y() - d.radius - self.oy) / self.cell).floor() as i32).max(0),
        )
    }

    /// Visit every unordered pair of disks whose boundaries can cross.
    /// Each co-resident pair is owned by exactly one cell (the
    /// componentwise max of the two clamped bounding-box min cells), so no
    /// pair is visited twice and no dedup state is needed.
    fn for_each_crossing_pair(&self, disks: &[Disk], mut visit: impl FnMut(u32, u32)) {
        let cells: Vec<(i32, i32)> = disks.iter().map(|d| self.min_cell(d)).collect();
        for cx in 0..self.nx {
            for cy in 0..self.ny {
                let range = self.cell_range(cx, cy);
                for ai in range.clone() {
                    let i = self.ids[ai];
                    let di = &disks[i as usize];
                    let (ix, iy) = cells[i as usize];
                    for aj in (ai + 1)..range.end {
                        let j = self.ids[aj];
                        let (jx, jy) = cells[j as usize];
                        if (ix.max(jx), iy.max(jy)) != (cx as i32, cy as i32) {
                            continue;
                        }
                        let dj = &disks[j as usize];
                        let sum = di.radius + dj.radius;
                        if di.center.dist_sq(&dj.center) <= sum * sum {
                            visit(i, j);
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact k-coverage verification.

#[derive(Clone, Copy)]
struct Candidate {
    point: Point,
    /// Wedge-bisector unit directions of the generating curves; the first
    /// `ndirs` entries are valid. Zero directions mean the candidate point
    /// itself decides (the bare interior probe).
    dirs: [(f64, f64); 4],
    ndirs: u8,
}

impl Candidate {
    fn bare(point: Point) -> Candidate {
        Candidate { point, dirs: [(0.0, 0.0); 4], ndirs: 0 }
    }

    fn with_dirs(point: Point, dirs: [(f64, f64); 4]) -> Candidate {
        Candidate { point, dirs, ndirs: 4 }
    }
}

fn norm_dir(x: f64, y: f64) -> Option<(f64, f64)> {
    let n = (x * x + y * y).sqrt();
    if n > 1e-30 {
        Some((x / n, y / n))
    } else {
        None
    }
}

/// Wedge bisectors for two curves with tangent directions t1, t2.
fn wedge_dirs(t1: (f64, f64), t2: (f64, f64)) -> [(f64, f64); 4] {
    let sum = norm_dir(t1.0 + t2.0, t1.1 + t2.1);
    let diff = norm_dir(t1.0 - t2.0, t1.1 - t2.1);
    match (sum, diff) {
        (Some(u), Some(v)) => [u, (-u.0, -u.1), v, (-v.0, -v.1)],
        // Near-parallel tangents: probe along the common tangent and its
        // normal.
        _ => [t1, (-t1.0, -t1.1), (-t1.1, t1.0), (t1.1, -t1.0)],
    }
}

fn circle_tangent_at(d: &Disk, p: &Point) -> (f64, f64) {
    let (nx, ny) = (p.x() - d.center.x(), p.y() - d.center.y());
    norm_dir(-ny, nx).unwrap_or((1.0, 0.0))
}

enum CandidateOutcome {
    Pass,
    Fail { witness: Point, deficit: u32 },
    /// Passed only via local grid refinement inside the tolerance band.
    PassAmbiguous,
}

struct Verifier<'a> {
    w: &'a Window,
    disks: &'a [Disk],
    index: DiskIndex,
    k: u32,
    tol: f64,
    /// Probe scale ladder: small enough to resolve tolerance-scale wedges,
    /// large enough to catch the flat slivers that appear near the cover
    /// time.
    deltas: [f64; 4],
    ndeltas: usize,
}

impl<'a> Verifier<'a> {
    fn new(w: &'a Window, disks: &'a [Disk], k: u32, tol: f64) -> Verifier<'a> {
        let delta0 = 10.0 * tol;
        let mut deltas = [delta0; 4];
        let mut ndeltas = 1;
        let mut d = delta0;
        while ndeltas < 4 && d * 100.0 <= 0.05 * w.diameter() {
            d *= 100.0;
            deltas[ndeltas] = d;
            ndeltas += 1;
        }
        Verifier { w, disks, index: DiskIndex::build(disks, w, tol), k, tol, deltas, ndeltas }
    }

    fn test(&self, cand: &Candidate) -> CandidateOutcome {
        if self.index.open_at_least(&cand.point, self.k) {
            return CandidateOutcome::Pass;
        }
        if cand.ndirs == 0 {
            // Bare probe: the point itself decides.
            let (closed, _) = self.index.counts(&cand.point);
            return if closed < self.k {
                CandidateOutcome::Fail { witness: cand.point, deficit: self.k - closed }
            } else {
                CandidateOutcome::Pass
            };
        }
        for &delta in &self.deltas[..self.ndeltas] {
            for &u in &cand.dirs[..cand.ndirs as usize] {
                let q = cand.point.offset2(u, delta);
                if self.w.locate(&q, self.tol) == Location::Outside {
                    continue;
                }
                if !self.index.closed_at_least(&q, self.k) {
                    let (qc, _) = self.index.counts(&q);
                    return CandidateOutcome::Fail { witness: q, deficit: self.k - qc };
                }
            }
        }
        // No probe failed but the candidate is not robustly open-covered:
        // resolve by local refinement at spacing delta0 / 10.
        let delta0 = self.deltas[0];
        let span = 3.0 * delta0;
        let step = delta0 / 10.0;
        let m = (2.0 * span / step).ceil() as i64;
        for ix in 0..=m {
            for iy in 0..=m {
                let q = Point::new2(
                    cand.point.x() - span + ix as f64 * step,
                    cand.point.y() - span + iy as f64 * step,
                );
                if self.w.locate(&q, self.tol) == Location::Outside {
                    continue;
                }
                if !self.index.closed_at_least(&q, self.k) {
                    let (qc, _) = self.index.counts(&q);
                    return CandidateOutcome::Fail { witness: q, deficit: self.k - qc };
                }
            }
        }
        CandidateOutcome::PassAmbiguous
    }

    /// Stream the vacancy-corner candidates through `test`, stopping at
    /// the first certified failure.
    fn verify(&self) -> CoverageVerdict {
        let mut ambiguous = false;
        let mut failure: Option<(Point, u32)> = None;
        {
            let mut check = |cand: Candidate| -> bool {
                match self.test(&cand) {
                    CandidateOutcome::Pass => false,
                    CandidateOutcome::PassAmbiguous => {
                        ambiguous = true;
                        false
                    }
                    CandidateOutcome::Fail { witness, deficit } => {
                        failure = Some((witness, deficit));
                        true
                    }
                }
            };

            'done: {
                // (iv) the interior probe first: rejects the no-disk case
                // and, on the uncovered side, often ends the scan at once.
                if check(Candidate::bare(self.w.interior_point())) {
                    break 'done;
                }
                // (i) window corners, probed along the edge bisectors; the
                // lowest boundary point of a disc window plays their role.
                if let Some(vs) = self.w.as_polygon_vertices() {
                    let n = vs.len();
                    for i in 0..n {
                        let prev = vs[(i + n - 1) % n];
                        let next = vs[(i + 1) % n];
                        let p = Point::new2(vs[i][0], vs[i][1]);
                        let e1 = norm_dir(prev[0] - vs[i][0], prev[1] - vs[i][1])
                            .unwrap_or((1.0, 0.0));
                        let e2 = norm_dir(next[0] - vs[i][0], next[1] - vs[i][1])
                            .unwrap_or((0.0, 1.0));
                        if check(Candidate::with_dirs(p, wedge_dirs(e1, e2))) {
                            break 'done;
                        }
                    }
                }
                let window_disk = match self.w {
                    Window::Disc { center, radius } => {
                        let p = Point::new2(center[0], center[1] - radius);
                        if check(Candidate {
                            point: p,
                            dirs: [(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)],
                            ndirs: 3,
                        }) {
                            break 'done;
                        }
                        Some(Disk::new(Point::new2(center[0], center[1]), *radius))
                    }
                    _ => None,
                };
                // (ii) circle/boundary crossings and circle tops.
                let edges: Vec<([f64; 2], [f64; 2])> = self
                    .w
                    .as_polygon_vertices()
                    .map(|vs| {
                        let n = vs.len();
                        (0..n).map(|i| (vs[i], vs[(i + 1) % n])).collect()
                    })
                    .unwrap_or_default();
                let mut buf = [Point::new2(0.0, 0.0); 2];
                for d in self.disks {
                    if d.radius <= 0.0 {
                        continue;
                    }
                    if let Some(wd) = &window_disk {
                        let (n, _, _) = crate::geom::circle_circle_core(d, wd, self.tol, &mut buf);
                        for p in &buf[..n] {
                            let t1 = circle_tangent_at(d, p);
                            let t2 = circle_tangent_at(wd, p);
                            if check(Candidate::with_dirs(*p, wedge_dirs(t1, t2))) {
                                break 'done;
                            }
                        }
                    } else {
                        for (a, b) in &edges {
                            // A circle meets the edge only if the segment
                            // passes within its radius.
                            if point_to_segment(&d.center, *a, *b) > d.radius + self.tol {
                                continue;
                            }
                            let n = crate::geom::circle_segment_core(d, *a, *b, self.tol, &mut buf);
                            for p in &buf[..n] {
                                let t1 = circle_tangent_at(d, p);
                                let t2 =
                                    norm_dir(b[0] - a[0], b[1] - a[1]).unwrap_or((1.0, 0.0));
                                if check(Candidate::with_dirs(*p, wedge_dirs(t1, t2))) {
                                    break 'done;
                                }
                            }
                        }
                    }
                    // Top of each circle: the lowest point of a vacancy
                    // bounded locally by a single circle sits there.
                    let top = Point::new2(d.center.x(), d.center.y() + d.radius);
                    if self.w.locate(&top, self.tol) != Location::Outside
                        && check(Candidate {
                            point: top,
                            dirs: [(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0), (0.0, -1.0)],
                            ndirs: 4,
                        })
                    {
                        break 'done;
                    }
                }
                // (iii) circle/circle crossings inside the window.
                let mut found: Option<(Point, u32)> = None;
                let mut amb = false;
                self.index.for_each_crossing_pair(self.disks, |i, j| {
                    if found.is_some() {
                        return;
                    }
                    let (a, b) = (&self.disks[i as usize], &self.disks[j as usize]);
                    if a.radius <= 0.0 || b.radius <= 0.0 {
                        return;
                    }
                    let (n, _, _) = crate::geom::circle_circle_core(a, b, self.tol, &mut buf);
                    for p in &buf[..n] {
                        if self.w.locate(p, self.tol) == Location::Outside {
                            continue;
                        }
                        let t1 = circle_tangent_at(a, p);
                        let t2 = circle_tangent_at(b, p);
                        match self.test(&Candidate::with_dirs(*p, wedge_dirs(t1, t2))) {
                            CandidateOutcome::Pass => {}
                            CandidateOutcome::PassAmbiguous => amb = true,
                            CandidateOutcome::Fail { witness, deficit } => {
                                found = Some((witness, deficit));
                                return;
                            }
                        }
                    }
                });
                ambiguous |= amb;
                if let Some((witness, deficit)) = found {
                    failure = Some((witness, deficit));
                }
            }
        }
        match failure {
            Some((witness, deficit)) => CoverageVerdict {
                covered: false,
                witness: Some(witness),
                deficit: Some(deficit),
                ambiguous,
            },
            None => CoverageVerdict { covered: true, witness: None, deficit: None, ambiguous },
        }
    }
}

impl Verifier<'_> {
    /// The candidate points alone (corners, boundary crossings, circle
    /// tops, pair crossings), for argmax evaluation.
    fn collect_candidate_points(&self) -> Vec<Point> {
        let mut out = vec![self.w.interior_point()];
        out.extend(self.w.corners());
        let window_disk = match self.w {
            Window::Disc { center, radius } => {
                out.push(Point::new2(center[0], center[1] - radius));
                Some(Disk::new(Point::new2(center[0], center[1]), *radius))
            }
            _ => None,
        };
        let edges: Vec<([f64; 2], [f64; 2])> = self
            .w
            .as_polygon_vertices()
            .map(|vs| {
                let n = vs.len();
                (0..n).map(|i| (vs[i], vs[(i + 1) % n])).collect()
            })
            .unwrap_or_default();
        for d in self.disks {
            if d.radius <= 0.0 {
                continue;
            }
            if let Some(wd) = &window_disk {
                out.extend(circle_circle_intersections(d, wd, self.tol).points);
            } else {
                for (a, b) in &edges {
                    out.extend(crate::geom::circle_segment_intersections(d, *a, *b, self.tol));
                }
            }
            let top = Point::new2(d.center.x(), d.center.y() + d.radius);
            if self.w.locate(&top, self.tol) != Location::Outside {
                out.push(top);
            }
        }
        self.index.for_each_crossing_pair(self.disks, |i, j| {
            let (a, b) = (&self.disks[i as usize], &self.disks[j as usize]);
            if a.radius > 0.0 && b.radius > 0.0 {
                for p in circle_circle_intersections(a, b, self.tol).points {
                    if self.w.locate(&p, self.tol) != Location::Outside {
                        out.push(p);
                    }
                }
            }
        });
        out
    }
}

/// Exact k-coverage of a 2D window by closed disks.
///
/// Every vacancy-corner candidate is tested robustly: a candidate passes
/// outright when its open cover count reaches `k`; otherwise wedge probes
/// at a ladder of scales look for a certified uncovered point nearby.
/// Candidates that cannot be resolved by probing are settled by local grid
/// refinement and flagged ambiguous.
pub fn is_k_covered(
    w: &Window,
    disks: &[Disk],
    k: u32,
    tol: f64,
) -> Result<CoverageVerdict, CoverageError> {
    if w.dim() != 2 {
        return Err(CoverageError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    Ok(Verifier::new(w, disks, k, tol).verify())
}

// ---------------------------------------------------------------------------
// Ring-search index for the coverage fields: evaluates the k-th smallest
// of `add_i + mul_i * ||x - p_i||` by expanding cell rings until the ring
// lower bound cannot improve the current k-th best. Exact, and fast when
// a good upper bound is threaded from a neighbouring query.

struct FieldIndex {
    ox: f64,
    oy: f64,
    cell: f64,
    nx: isize,
    ny: isize,
    buckets: Vec<Vec<u32>>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    adds: Vec<f64>,
    muls: Vec<f64>,
    min_add: f64,
    min_mul: f64,
}

impl FieldIndex {
    /// `adds[i] + muls[i] * dist` entries; only 2D points supported.
    fn build(points: &[Point], adds: Vec<f64>, muls: Vec<f64>) -> Option<FieldIndex> {
        let n = points.len();
        if n == 0 {
            return None;
        }
        let (mut lox, mut loy, mut hix, mut hiy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            lox = lox.min(p.x());
            loy = loy.min(p.y());
            hix = hix.max(p.x());
            hiy = hiy.max(p.y());
        }
        let span = (hix - lox).max(hiy - loy).max(1e-12);
        // Aim for a few seeds per cell.
        let cell = (span / (n as f64).sqrt() * 1.7).max(span / 4096.0);
        let nx = (((hix - lox) / cell).floor() as isize + 1).max(1);
        let ny = (((hiy - loy) / cell).floor() as isize + 1).max(1);
        let mut buckets = vec![Vec::new(); (nx * ny) as usize];
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x() - lox) / cell).floor() as isize).clamp(0, nx - 1);
            let cy = (((p.y() - loy) / cell).floor() as isize).clamp(0, ny - 1);
            buckets[(cx * ny + cy) as usize].push(i as u32);
            xs.push(p.x());
            ys.push(p.y());
        }
        let min_add = adds.iter().copied().fold(f64::INFINITY, f64::min);
        let min_mul = muls.iter().copied().fold(f64::INFINITY, f64::min);
        Some(FieldIndex {
            ox: lox,
            oy: loy,
            cell,
            nx,
            ny,
            buckets,
            xs,
            ys,
            adds,
            muls,
            min_add,
            min_mul,
        })
    }

    /// Exact k-th smallest field value at `x`.
    ///
    /// Rings expand around the virtual (unclamped) cell of x, so the
    /// `(ring - 1) * cell` distance bound is valid even far outside the
    /// seed bounding box; scans are clipped to the grid, the first ring is
    /// the nearest one touching the grid, and the loop ends as soon as the
    /// ring rectangle has swallowed the whole grid.
    fn eval(&self, x: &Point, k: usize, best: &mut Vec<f64>) -> f64 {
        best.clear();
        best.resize(k, f64::INFINITY);
        let mut kth = f64::INFINITY;
        let cx = ((x.x() - self.ox) / self.cell).floor() as isize;
        let cy = ((x.y() - self.oy) / self.cell).floor() as isize;
        let gap_x = (-cx).max(cx - (self.nx - 1)).max(0);
        let gap_y = (-cy).max(cy - (self.ny - 1)).max(0);
        let mut ring = gap_x.max(gap_y);
        loop {
            let ring_lb = if ring <= 1 { 0.0 } else { (ring - 1) as f64 * self.cell };
            if ring > 1 && self.min_add + self.min_mul * ring_lb >= kth {
                break;
            }
            let scan = |bx: isize, by: isize, best: &mut Vec<f64>, kth: &mut f64| {
                if bx < 0 || by < 0 || bx >= self.nx || by >= self.ny {
                    return;
                }
                for &id in &self.buckets[(bx * self.ny + by) as usize] {
                    let i = id as usize;
                    let dx = x.x() - self.xs[i];
                    let dy = x.y() - self.ys[i];
                    let v = self.adds[i] + self.muls[i] * (dx * dx + dy * dy).sqrt();
                    if v < best[k - 1] {
                        let mut pos = k - 1;
                        while pos > 0 && best[pos - 1] > v {
                            best[pos] = best[pos - 1];
                            pos -= 1;
                        }
                        best[pos] = v;
                        *kth = best[k - 1];
                    }
                }
            };
            if ring == 0 {
                scan(cx, cy, best, &mut kth);
            } else {
                let (x0, x1) = ((cx - ring).max(0), (cx + ring).min(self.nx - 1));
                for bx in x0..=x1 {
                    scan(bx, cy - ring, best, &mut kth);
                    scan(bx, cy + ring, best, &mut kth);
                }
                for by in ((cy - ring + 1).max(0))..((cy + ring).min(self.ny)) {
                    scan(cx - ring, by, best, &mut kth);
                    scan(cx + ring, by, best, &mut kth);
                }
            }
            // Ring rectangle covers the grid: nothing further out exists.
            if cx - ring <= 0
                && cy - ring <= 0
                && cx + ring >= self.nx - 1
                && cy + ring >= self.ny - 1
            {
                break;
            }
            ring += 1;
        }
        kth
    }
}

/// Exact maximum of an indexed L-Lipschitz field over a point net.
///
/// Walks the net in chunks, carrying the Lipschitz bound
/// `value(p) <= value(prev) + L ||p - prev||` so points that provably
/// cannot raise the running maximum are skipped without evaluation.
fn net_max_indexed(net: &[Point], index: &FieldIndex, k: usize, lipschitz: f64) -> f64 {
    const CHUNK: usize = 2048;
    net.par_chunks(CHUNK)
        .map(|chunk| {
            let mut scratch = Vec::new();
            let mut max = f64::NEG_INFINITY;
            let mut bound = f64::INFINITY;
            let mut prev: Option<Point> = None;
            for p in chunk {
                if let Some(q) = prev {
                    bound += lipschitz * p.dist(&q);
                } else {
                    bound = f64::INFINITY;
                }
                prev = Some(*p);
                if bound <= max {
                    continue;
                }
                let v = index.eval(p, k, &mut scratch);
                bound = v;
                max = max.max(v);
            }
            max
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Certified grid oracles.

/// Field whose maximum over the window is certified by the grid oracle.
pub enum Field<'a> {
    Jm(&'a GrowthConfiguration),
    Spbm { pts: &'a MarkedPointSet, k: u32 },
}

impl Field<'_> {
    fn eval(&self, x: &Point) -> f64 {
        match self {
            Field::Jm(g) => xi_jm(x, g),
            Field::Spbm { pts, k } => xi_spbm(x, pts, *k),
        }
    }

    fn order(&self) -> usize {
        match self {
            Field::Jm(_) => 1,
            Field::Spbm { k, .. } => *k as usize,
        }
    }

    /// Ring-search accelerator; only for 2D point sets.
    fn index(&self) -> Option<FieldIndex> {
        match self {
            Field::Jm(g) => {
                if g.seeds.points.first().map(|p| p.dim) != Some(2) {
                    return None;
                }
                FieldIndex::build(
                    &g.seeds.points,
                    g.seeds.marks.clone(),
                    vec![1.0; g.seeds.len()],
                )
            }
            Field::Spbm { pts, .. } => {
                if pts.points.first().map(|p| p.dim) != Some(2) {
                    return None;
                }
                let mut points = Vec::with_capacity(pts.len());
                let mut muls = Vec::with_capacity(pts.len());
                for (p, y) in pts.points.iter().zip(&pts.marks) {
                    if *y > 0.0 {
                        points.push(*p);
                        muls.push(1.0 / y);
                    }
                }
                FieldIndex::build(&points, vec![0.0; points.len()], muls)
            }
        }
    }

    fn lipschitz(&self) -> Result<f64, CoverageError> {
        match self {
            Field::Jm(_) => Ok(1.0),
            Field::Spbm { pts, .. } => {
                let min_y = pts
                    .marks
                    .iter()
                    .copied()
                    .filter(|y| *y > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if min_y.is_finite() && min_y > 0.0 {
                    Ok(1.0 / min_y)
                } else {
                    Err(CoverageError::ZeroMark)
                }
            }
        }
    }
}

fn window_inradius(w: &Window) -> f64 {
    match w {
        Window::Disc { radius, .. } => *radius,
        Window::Box { d, sides } => {
            sides[..*d].iter().copied().fold(f64::INFINITY, f64::min) / 2.0
        }
        Window::Polygon { vertices } => {
            // Lower bound from a coarse interior scan.
            let w2 = Window::Polygon { vertices: vertices.clone() };
            let (lo, hi) = w2.bounding_box();
            let mut best = 0.0f64;
            let n = 64;
            for ix in 0..n {
                for iy in 0..n {
                    let p = Point::new2(
                        lo.x() + (hi.x() - lo.x()) * (ix as f64 + 0.5) / n as f64,
                        lo.y() + (hi.y() - lo.y()) * (iy as f64 + 0.5) / n as f64,
                    );
                    if w2.locate(&p, 1e-12) == Location::Inside {
                        let d = vertices
                            .iter()
                            .enumerate()
                            .map(|(i, _)| {
                                let a = vertices[i];
                                let b = vertices[(i + 1) % vertices.len()];
                                point_to_segment(&p, a, b)
                            })
                            .fold(f64::MAX, f64::min);
                        best = best.max(d);
                    }
                }
            }
            best
        }
    }
}

fn point_to_segment(p: &Point, a: [f64; 2], b: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let len_sq = vx * vx + vy * vy;
    let t = if len_sq > 0.0 {
        (((p.x() - a[0]) * vx + (p.y() - a[1]) * vy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.x() - a[0] - t * vx).powi(2) + (p.y() - a[1] - t * vy).powi(2)).sqrt()
}

/// Points of the window forming an (h sqrt(d) / 2)-net: every point of the
/// window is within that distance of some net point.
///
/// Convex windows (disc, box) use a lattice of spacing `h` projected onto
/// the window (projection onto a convex set is 1-Lipschitz). Polygons use
/// an interior lattice of spacing `h/3` plus boundary samples at arc
/// spacing `0.8 h`: a point within `0.307 h` of the boundary is within
/// `h sqrt(2)/2` of a boundary sample, and any other point keeps its
/// nearest fine-lattice neighbour inside the window.
pub fn certification_net(w: &Window, h: f64) -> Vec<Point> {
    let (lo, hi) = w.bounding_box();
    let d = w.dim();
    let mut pts = Vec::new();
    match w {
        Window::Polygon { vertices } => {
            let g = h / 3.0;
            let nx = ((hi.x() - lo.x()) / g).ceil() as usize + 1;
            let ny = ((hi.y() - lo.y()) / g).ceil() as usize + 1;
            for ix in 0..=nx {
                for iy in 0..=ny {
                    let p = Point::new2(lo.x() + ix as f64 * g, lo.y() + iy as f64 * g);
                    if w.locate(&p, 1e-15 * h.max(1.0)) != Location::Outside {
                        pts.push(p);
                    }
                }
            }
            let n = vertices.len();
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                let m = (len / (0.8 * h)).ceil() as usize;
                for j in 0..=m {
                    let t = j as f64 / m.max(1) as f64;
                    pts.push(Point::new2(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])));
                }
            }
        }
        _ => {
            // Lattice over the inflated bounding box, projected onto the
            // (convex) window.
            let margin = h * (d as f64).sqrt() / 2.0;
            let mut counts = [1usize; 3];
            for i in 0..d {
                counts[i] =
                    ((hi.coords[i] - lo.coords[i] + 2.0 * margin) / h).ceil() as usize + 1;
            }
            let mut idx = [0usize; 3];
            loop {
                let mut c = [0.0; 3];
                for i in 0..d {
                    c[i] = lo.coords[i] - margin + idx[i] as f64 * h;
                }
                let p = Point { coords: c, dim: d };
                if w.distance_to(&p) <= margin {
                    pts.push(w.project(&p));
                }
                // Odometer increment.
                let mut i = 0;
                loop {
                    idx[i] += 1;
                    if idx[i] < counts[i] {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                    if i == d {
                        return pts;
                    }
                }
            }
        }
    }
    pts
}

/// Certified bracket for the maximum of a coverage field over the window:
/// `lower` is the max over an explicit net, `upper = lower + L h sqrt(d)/2`
/// with `L` the field's Lipschitz constant.
pub fn grid_oracle_max(
    field: &Field<'_>,
    w: &Window,
    h: f64,
) -> Result<CertifiedInterval, CoverageError> {
    let inr = window_inradius(w);
    if h > inr {
        return Err(CoverageError::GridTooCoarse { h, inradius: inr });
    }
    let lip = field.lipschitz()?;
    let net = certification_net(w, h);
    let lower = match field.index() {
        Some(index) => net_max_indexed(&net, &index, field.order(), lip),
        None => net
            .par_iter()
            .map(|p| field.eval(p))
            .reduce(|| f64::NEG_INFINITY, f64::max),
    };
    let half_mesh = lip * h * (w.dim() as f64).sqrt() / 2.0;
    Ok(CertifiedInterval { lower, upper: lower + half_mesh, lipschitz_used: lip, grid_spacing: h })
}

/// Certified grid decision of the k-coverage event, via the 1-Lipschitz
/// deficiency field (k-th smallest of `||x - c_i|| - r_i`): the window is
/// covered iff the field максимум is nonpositive. Returns `None` when the
/// bracket straddles zero (inconclusive at this spacing).
pub fn k_coverage_grid_decision(
    w: &Window,
    disks: &[Disk],
    k: u32,
    h: f64,
) -> Result<Option<bool>, CoverageError> {
    let inr = window_inradius(w);
    if h > inr {
        return Err(CoverageError::GridTooCoarse { h, inradius: inr });
    }
    let net = certification_net(w, h);
    let k = k as usize;
    // Deficiency field: k-th smallest of ||x - c_i|| - r_i, 1-Lipschitz.
    let centers: Vec<Point> = disks.iter().map(|d| d.center).collect();
    let neg_radii: Vec<f64> = disks.iter().map(|d| -d.radius).collect();
    let index = FieldIndex::build(&centers, neg_radii, vec![1.0; disks.len()]);
    let max_def = match index {
        Some(index) => net_max_indexed(&net, &index, k, 1.0),
        None => f64::INFINITY,
    };
    let half_mesh = h * (w.dim() as f64).sqrt() / 2.0;
    if max_def > 0.0 {
        Ok(Some(false))
    } else if max_def <= -half_mesh {
        Ok(Some(true))
    } else {
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Monotone bisection for thresholds and cover times.

/// Result of a threshold bisection, with the post-hoc sandwich state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionResult {
    pub value: f64,
    /// Coverage holds at `value + tol` and fails at `value - tol`,
    /// re-checked after the bisection.
    pub sandwich_ok: bool,
}

fn bisect<F>(lo: f64, hi: f64, tol: f64, pred: F) -> f64
where
    F: FnMut(f64) -> bool,
{
    bisect_biased(lo, hi, tol, 0.5, pred)
}

/// Bisection with an asymmetric split: `split` is the fraction of the
/// bracket at which the predicate is probed. Splits above 1/2 make most
/// probes land on the false side, which is the cheap side for the
/// coverage predicate (an early witness ends the scan).
fn bisect_biased<F>(mut lo: f64, mut hi: f64, tol: f64, split: f64, mut pred: F) -> f64
where
    F: FnMut(f64) -> bool,
{
    debug_assert!(hi > lo && split > 0.0 && split < 1.0);
    while hi - lo > tol {
        let mid = lo + split * (hi - lo);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest scale factor `r` such that balls `B(p_i, r Y_i)` k-cover the
/// window, to within `tol`. Returns infinity when fewer than `k` points
/// have positive marks.
pub fn coverage_threshold(
    w: &Window,
    pts: &MarkedPointSet,
    k: u32,
    tol: f64,
) -> Result<BisectionResult, CoverageError> {
    if w.dim() != 2 {
        return Err(CoverageError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    let usable = pts.marks.iter().filter(|y| **y > 0.0).count();
    if usable < k as usize {
        return Ok(BisectionResult { value: f64::INFINITY, sandwich_ok: true });
    }
    let geom_tol = DEFAULT_GEOM_TOL * w.diameter();
    let covered_at = |r: f64| -> Result<bool, CoverageError> {
        let disks: Vec<Disk> = pts
            .points
            .iter()
            .zip(&pts.marks)
            .map(|(p, y)| Disk::new(*p, r * y))
            .collect();
        Ok(is_k_covered(w, &disks, k, geom_tol)?.covered)
    };
    let min_y = pts
        .marks
        .iter()
        .copied()
        .filter(|y| *y > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut hi = w.diameter() / min_y;
    let mut tries = 0;
    while !covered_at(hi)? {
        hi *= 2.0;
        tries += 1;
        assert!(tries < 64, "coverage threshold bracket failed to close");
    }
    let mut err: Option<CoverageError> = None;
    let result = bisect(0.0, hi, tol, |r| match covered_at(r) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            true
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let sandwich_ok = covered_at(result + tol)? && !covered_at((result - tol).max(0.0))?;
    Ok(BisectionResult { value: result, sandwich_ok })
}

/// Johnson-Mehl cover time of the window for a seed configuration, by
/// bisection over the coverage predicate. For halo- or horizon-limited
/// samples the returned time is always within the sampled horizon, or an
/// [`CoverageError::InsufficientHalo`] is raised.
pub fn jm_cover_time(
    w: &Window,
    g: &GrowthConfiguration,
    tol: f64,
) -> Result<BisectionResult, CoverageError> {
    if w.dim() != 2 {
        return Err(CoverageError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    if g.seeds.is_empty() {
        return Ok(BisectionResult { value: f64::INFINITY, sandwich_ok: true });
    }
    let geom_tol = DEFAULT_GEOM_TOL * w.diameter();
    let covered_at = |t: f64| -> Result<bool, CoverageError> {
        Ok(is_k_covered(w, &g.disks_at_reaching(t, w), 1, geom_tol)?.covered)
    };
    let min_s = g.seeds.marks.iter().copied().fold(f64::INFINITY, f64::min);
    // A coarse certified bracket for max xi (Lipschitz constant 1) starts
    // the bisection off tight, skipping the expensive large-t coverage
    // checks where every circle overlaps every other.
    let diam = w.diameter();
    let pre_h = (diam / 128.0).max(8.0 * tol);
    let mut lo = min_s;
    let mut hi = min_s + diam;
    let mut hi_certified = false;
    if pre_h <= window_inradius(w) {
        if let Some(index) = Field::Jm(g).index() {
            let net = certification_net(w, pre_h);
            let max_net = net_max_indexed(&net, &index, 1, 1.0);
            if max_net.is_finite() {
                // The net max brackets the true maximum of the 1-Lipschitz
                // field within half a mesh width; trust it and let the
                // post-hoc sandwich catch any edge-rounding violation.
                lo = (max_net - tol).max(min_s);
                hi = max_net + pre_h * std::f64::consts::SQRT_2 / 2.0 + tol;
                hi_certified = true;
            }
        }
    }
    if let Some(h) = g.horizon {
        if hi > h {
            if covered_at(h)? {
                hi = h;
                hi_certified = true;
            } else {
                return Err(CoverageError::InsufficientHalo { horizon: h, lower_bound: h });
            }
        }
    }
    while !hi_certified && !covered_at(hi)? {
        hi = min_s + 2.0 * (hi - min_s).max(tol);
        if let Some(h) = g.horizon {
            if hi > h {
                if covered_at(h)? {
                    hi = h;
                    break;
                }
                return Err(CoverageError::InsufficientHalo { horizon: h, lower_bound: h });
            }
        }
    }
    while lo > min_s && covered_at(lo)? {
        lo = (lo - (hi - lo).max(tol) * 2.0).max(min_s);
    }
    let mut err: Option<CoverageError> = None;
    let result = bisect_biased(lo, hi, tol, 0.1, |t| match covered_at(t) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            true
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if let Some(h) = g.horizon {
        if result > h {
            return Err(CoverageError::InsufficientHalo { horizon: h, lower_bound: h });
        }
    }
    let sandwich_ok = covered_at(result + tol)? && !covered_at(result - tol)?;
    Ok(BisectionResult { value: result, sandwich_ok })
}

/// Which field `last_covered_point` maximizes.
pub enum LastCoveredQuery<'a> {
    Jm(&'a GrowthConfiguration),
    Spbm { pts: &'a MarkedPointSet, k: u32 },
}

/// The argmax of the coverage field: the point covered last (growth model)
/// or requiring the largest scale (Boolean model). Found by evaluating the
/// field at the vacancy-corner candidates of the final bisection state and
/// refining locally on a shrinking grid.
pub fn last_covered_point(
    w: &Window,
    query: &LastCoveredQuery<'_>,
    tol: f64,
) -> Result<(Point, f64), CoverageError> {
    if w.dim() != 2 {
        return Err(CoverageError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    let geom_tol = DEFAULT_GEOM_TOL * w.diameter();
    let (disks, eval): (Vec<Disk>, Box<dyn Fn(&Point) -> f64>) = match query {
        LastCoveredQuery::Jm(g) => {
            let t = jm_cover_time(w, g, tol)?.value;
            (g.disks_at_reaching(t + tol, w), Box::new(move |p: &Point| xi_jm(p, g)))
        }
        LastCoveredQuery::Spbm { pts, k } => {
            let r = coverage_threshold(w, pts, *k, tol)?.value;
            let disks = pts
                .points
                .iter()
                .zip(&pts.marks)
                .map(|(p, y)| Disk::new(*p, (r + tol) * y))
                .collect();
            let pts = *pts;
            let k = *k;
            (disks, Box::new(move |p: &Point| xi_spbm(p, pts, k)))
        }
    };
    let verifier = Verifier::new(w, &disks, 1, geom_tol);
    let mut best = w.interior_point();
    let mut best_val = eval(&best);
    for cand in verifier.collect_candidate_points() {
        if w.locate(&cand, geom_tol) == Location::Outside {
            continue;
        }
        let p = w.project(&cand);
        let v = eval(&p);
        if v > best_val {
            best_val = v;
            best = p;
        }
    }
    // Shrinking local grid refinement around the best candidate.
    let mut span = w.diameter() * 1e-3;
    for _ in 0..4 {
        let m = 8;
        let mut improved = best;
        let mut improved_val = best_val;
        for ix in -m..=m {
            for iy in -m..=m {
                let q = Point::new2(
                    best.x() + ix as f64 * span / m as f64,
                    best.y() + iy as f64 * span / m as f64,
                );
                if w.locate(&q, geom_tol) == Location::Outside {
                    continue;
                }
                let v = eval(&q);
                if v > improved_val {
                    improved_val = v;
                    improved = q;
                }
            }
        }
        best = improved;
        best_val = improved_val;
        span /= 5.0;
    }
    Ok((best, best_val))
}

// ---------------------------------------------------------------------------
// Monte Carlo coverage probability.

/// Coverage model for probability estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum CoverageModel {
    /// Growth process at intensity `rho`, coverage checked at time `t`.
    Jm { rho: f64, t: f64 },
    /// Boolean model with intensity `n`, radii `r * Y`, multiplicity `k`.
    Spbm { n: f64, law: RadiusLaw, r: f64, k: u32 },
}

/// Monte Carlo coverage probability with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub successes: u64,
    pub reps: u64,
}

pub fn wilson_interval(successes: u64, reps: u64) -> (f64, f64) {
    if reps == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = reps as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Estimate the probability of the coverage event by independent
/// replications over disjoint RNG streams (merged by summation, so the
/// result is independent of scheduling).
pub fn coverage_probability_estimate(
    w: &Window,
    model: &CoverageModel,
    restricted: bool,
    reps: u64,
    rng: &RngSpec,
) -> Result<CoverageEstimate, CoverageError> {
    if w.dim() != 2 {
        return Err(CoverageError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    // Heavy-tailed radii with infinite d-th moment cover every compact set
    // almost surely in the unrestricted model; no simulation needed.
    if let CoverageModel::Spbm { law, .. } = model {
        if !restricted && !law.moment(w.dim() as u32).is_finite() {
            return Ok(CoverageEstimate {
                p_hat: 1.0,
                wilson_low: 1.0,
                wilson_high: 1.0,
                successes: reps,
                reps,
            });
        }
    }
    let geom_tol = DEFAULT_GEOM_TOL * w.diameter();
    let successes: u64 = (0..reps)
        .into_par_iter()
        .map(|i| {
            let spec = RngSpec::new(rng.master_seed, rng.stream_index.wrapping_add(i));
            let covered = match model {
                CoverageModel::Jm { rho, t } => {
                    let seeds = if restricted {
                        crate::processes::sample_spacetime_poisson(w, *rho, *t, &spec)
                    } else {
                        crate::processes::sample_halo(w, *rho, *t, &spec)
                    }
                    .expect("valid intensity");
                    let g = GrowthConfiguration::new(seeds, restricted, Some(*t));
                    is_k_covered(w, &g.disks_at_reaching(*t, w), 1, geom_tol)
                        .expect("2D window")
                        .covered
                }
                CoverageModel::Spbm { n, law, r, k } => {
                    let pts = if restricted {
                        crate::processes::sample_marked_poisson(w, *n, law, &spec)
                            .expect("valid intensity")
                    } else {
                        sample_spbm_halo(w, *n, law, *r, &spec)
                    };
                    let disks: Vec<Disk> = pts
                        .points
                        .iter()
                        .zip(&pts.marks)
                        .map(|(p, y)| Disk::new(*p, r * y))
                        .collect();
                    is_k_covered(w, &disks, *k, geom_tol).expect("2D window").covered
                }
            };
            covered as u64
        })
        .sum();
    let (lo, hi) = wilson_interval(successes, reps);
    Ok(CoverageEstimate { p_hat: successes as f64 / reps.max(1) as f64, wilson_low: lo, wilson_high: hi, successes, reps })
}

/// Grains of the full-space Boolean model that can reach the window:
/// centers within `r Y` of `w`. For unbounded laws the mark cutoff is
/// raised until the expected number of discarded relevant grains is below
/// 1e-9.
fn sample_spbm_halo(
    w: &Window,
    n: f64,
    law: &RadiusLaw,
    r: f64,
    spec: &RngSpec,
) -> MarkedPointSet {
    let y_cut = match *law {
        RadiusLaw::Constant { c } => c,
        RadiusLaw::Uniform { b } => b,
        RadiusLaw::Exponential { rate } => {
            // Tail bound: n * integral over y > cut of |w + B(0, r y)| dmu.
            let (lo, hi) = w.bounding_box();
            let (a, b) = (hi.x() - lo.x(), hi.y() - lo.y());
            let mut cut = 1.0 / rate;
            loop {
                // |w + B(0,s)| <= ab + 2(a+b) r y + pi r^2 y^2; integrate
                // the exponential tail term by term.
                let e = (-rate * cut).exp();
                let m1 = e * (cut + 1.0 / rate);
                let m2 = e * (cut * cut + 2.0 * cut / rate + 2.0 / (rate * rate));
                let miss = n
                    * (a * b * e
                        + 2.0 * (a + b) * r * m1
                        + std::f64::consts::PI * r * r * m2);
                if miss < 1e-9 {
                    break cut;
                }
                cut *= 2.0;
            }
        }
        RadiusLaw::Pareto { alpha, xm } => {
            // Finite second moment required here (the infinite case is
            // short-circuited by the caller).
            let (lo, hi) = w.bounding_box();
            let (a, b) = (hi.x() - lo.x(), hi.y() - lo.y());
            let mut cut = xm * 2.0;
            loop {
                let tail0 = (xm / cut).powf(alpha);
                let m1 = alpha * xm.powf(alpha) * cut.powf(1.0 - alpha) / (alpha - 1.0);
                let m2 = alpha * xm.powf(alpha) * cut.powf(2.0 - alpha) / (alpha - 2.0);
                let miss = n
                    * (a * b * tail0
                        + 2.0 * (a + b) * r * m1
                        + std::f64::consts::PI * r * r * m2);
                if miss < 1e-9 {
                    break cut;
                }
                cut *= 2.0;
            }
        }
    };
    let halo = r * y_cut;
    let (lo, hi) = w.bounding_box();
    let vol = (hi.x() - lo.x() + 2.0 * halo) * (hi.y() - lo.y() + 2.0 * halo);
    let mut rng = spec.rng();
    let count = {
        use rand_distr::Distribution;
        let mean = n * vol;
        if mean <= 0.0 {
            0
        } else {
            rand_distr::Poisson::new(mean).unwrap().sample(&mut rng) as usize
        }
    };
    use rand::Rng as _;
    let mut points = Vec::new();
    let mut marks = Vec::new();
    for _ in 0..count {
        let p = Point::new2(
            lo.x() - halo + (hi.x() - lo.x() + 2.0 * halo) * rng.random::<f64>(),
            lo.y() - halo + (hi.y() - lo.y() + 2.0 * halo) * rng.random::<f64>(),
        );
        let y = law.sample(&mut rng);
        if w.distance_to(&p) <= r * y && y <= y_cut {
            points.push(p);
            marks.push(y);
        }
    }
    MarkedPointSet {
        points,
        marks,
        mark_kind: MarkKind::Radius,
        intensity_used: n,
        window_used: w.clone(),
    }
}

/// Failure-reproduction dump: everything needed to replay one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDump {
    pub window: Window,
    pub points: Vec<Point>,
    pub marks: Vec<f64>,
    pub k: u32,
    pub tol: f64,
    pub verdict: CoverageVerdict,
    pub witness: Option<Point>,
}

impl InstanceDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
