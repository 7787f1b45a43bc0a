//! 2D (and minimal 3D) geometric kernel: windows, disks, intersection
//! predicates and exact measures.
//!
//! Everything here is tolerance-based floating point, not exact arithmetic.
//! The global convention is a tolerance expressed in window-diameter units
//! (see [`DEFAULT_GEOM_TOL`]); boundary classifications use it so that
//! generic (probability-one) configurations are decided robustly and true
//! degeneracies are flagged rather than mis-decided.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Geometric tolerance, in window-diameter units. Random configurations put
/// true degeneracies at probability zero; the tolerance only has to absorb
/// floating-point noise.
pub const DEFAULT_GEOM_TOL: f64 = 1e-9;

/// A point in R^d, d = 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: [f64; 3],
    pub dim: usize,
}

impl Point {
    pub fn new2(x: f64, y: f64) -> Self {
        Point { coords: [x, y, 0.0], dim: 2 }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Point { coords: [x, y, z], dim: 3 }
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn z(&self) -> f64 {
        self.coords[2]
    }

    pub fn is_finite(&self) -> bool {
        self.coords[..self.dim].iter().all(|c| c.is_finite())
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        let d = self.dim.max(other.dim);
        (0..d).map(|i| (self.coords[i] - other.coords[i]).powi(2)).sum()
    }

    /// Translate by `delta * u` where `u` is a unit direction in 2D.
    pub fn offset2(&self, u: (f64, f64), delta: f64) -> Point {
        Point::new2(self.x() + delta * u.0, self.y() + delta * u.1)
    }
}

/// A closed Euclidean ball in the window's dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        debug_assert!(radius >= 0.0 && radius.is_finite());
        Disk { center, radius }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist_sq(p) <= self.radius * self.radius
    }
}

/// Point classification against a window at a given tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeomError {
    DegeneratePolygon { area: f64 },
    NonSimplePolygon,
    TooFewVertices { got: usize },
    NonFiniteCoordinate,
    InvalidRadius { radius: f64 },
    InvalidBox { dim: usize },
    NonPositiveParameter { name: &'static str, value: f64 },
    UnsupportedDimension { expected: usize, got: usize },
}

impl fmt::Display for GeomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeomError::DegeneratePolygon { area } => {
                write!(f, "degenerate polygon (area {area:.3e})")
            }
            GeomError::NonSimplePolygon => write!(f, "polygon edges self-intersect"),
            GeomError::TooFewVertices { got } => {
                write!(f, "polygon needs at least 3 vertices, got {got}")
            }
            GeomError::NonFiniteCoordinate => write!(f, "non-finite coordinate"),
            GeomError::InvalidRadius { radius } => write!(f, "invalid radius {radius}"),
            GeomError::InvalidBox { dim } => write!(f, "box dimension {dim} unsupported"),
            GeomError::NonPositiveParameter { name, value } => {
                write!(f, "parameter {name} must be positive, got {value}")
            }
            GeomError::UnsupportedDimension { expected, got } => {
                write!(f, "operation needs dimension {expected}, window has {got}")
            }
        }
    }
}

impl std::error::Error for GeomError {}

/// A compact sampling/coverage window with exact area and perimeter.
///
/// Serialized form follows the JSON schema
/// `{"kind":"polygon","vertices":[[x,y],...]}`,
/// `{"kind":"disc","center":[x,y],"radius":r}` or
/// `{"kind":"box","d":n,"sides":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    Polygon { vertices: Vec<[f64; 2]> },
    Disc { center: [f64; 2], radius: f64 },
    Box { d: usize, sides: Vec<f64> },
}

impl Window {
    /// Simple counterclockwise polygon. Clockwise input is reversed on
    /// construction so a single orientation can be assumed everywhere.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::TooFewVertices { got: vertices.len() });
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(GeomError::NonFiniteCoordinate);
        }
        let signed = shoelace(&vertices);
        let mut vs = vertices;
        if signed < 0.0 {
            vs.reverse();
        }
        let area = shoelace(&vs);
        let diam = polygon_diameter(&vs);
        if area <= DEFAULT_GEOM_TOL * diam * diam {
            return Err(GeomError::DegeneratePolygon { area });
        }
        if !polygon_is_simple(&vs, DEFAULT_GEOM_TOL * diam) {
            return Err(GeomError::NonSimplePolygon);
        }
        Ok(Window::Polygon { vertices: vs })
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeomError::InvalidRadius { radius });
        }
        Ok(Window::Disc { center, radius })
    }

    pub fn rect_box(d: usize, sides: Vec<f64>) -> Result<Self, GeomError> {
        if !(1..=3).contains(&d) || sides.len() != d {
            return Err(GeomError::InvalidBox { dim: d });
        }
        if sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(GeomError::InvalidBox { dim: d });
        }
        Ok(Window::Box { d, sides })
    }

    /// The unit square `[0,1]^2`.
    pub fn unit_square() -> Self {
        Window::Box { d: 2, sides: vec![1.0, 1.0] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Window::Polygon { .. } | Window::Disc { .. } => 2,
            Window::Box { d, .. } => *d,
        }
    }

    /// Lebesgue measure: shoelace for polygons, pi r^2 for discs, side
    /// products for boxes.
    pub fn area(&self) -> f64 {
        match self {
            Window::Polygon { vertices } => shoelace(vertices),
            Window::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
            Window::Box { sides, .. } => sides.iter().product(),
        }
    }

    /// Boundary measure: edge-length sum, 2 pi r, or the box surface sum.
    pub fn perimeter(&self) -> f64 {
        match self {
            Window::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
                    })
                    .sum()
            }
            Window::Disc { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            Window::Box { d, sides } => match d {
                1 => 2.0,
                2 => 2.0 * (sides[0] + sides[1]),
                _ => 2.0 * (sides[0] * sides[1] + sides[1] * sides[2] + sides[0] * sides[2]),
            },
        }
    }

    /// Euclidean diameter (exact for disc/box, exact vertex diameter for
    /// polygons).
    pub fn diameter(&self) -> f64 {
        match self {
            Window::Polygon { vertices } => polygon_diameter(vertices),
            Window::Disc { radius, .. } => 2.0 * radius,
            Window::Box { sides, .. } => sides.iter().map(|s| s * s).sum::<f64>().sqrt(),
        }
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Window::Polygon { vertices } => {
                let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
                for v in vertices {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (Point::new2(lo[0], lo[1]), Point::new2(hi[0], hi[1]))
            }
            Window::Disc { center, radius } => (
                Point::new2(center[0] - radius, center[1] - radius),
                Point::new2(center[0] + radius, center[1] + radius),
            ),
            Window::Box { d, sides } => {
                let mut hi = [0.0; 3];
                for i in 0..*d {
                    hi[i] = sides[i];
                }
                (Point { coords: [0.0; 3], dim: *d }, Point { coords: hi, dim: *d })
            }
        }
    }

    /// A point in the interior, used as the coverage probe for the
    /// no-disks case.
    pub fn interior_point(&self) -> Point {
        match self {
            Window::Disc { center, .. } => Point::new2(center[0], center[1]),
            Window::Box { d, sides } => {
                let mut c = [0.0; 3];
                for i in 0..*d {
                    c[i] = sides[i] / 2.0;
                }
                Point { coords: c, dim: *d }
            }
            Window::Polygon { vertices } => polygon_interior_point(vertices),
        }
    }

    /// Classify `p` relative to the window: `Boundary` iff the distance
    /// from `p` to the boundary is at most `tol`, strict otherwise.
    pub fn locate(&self, p: &Point, tol: f64) -> Location {
        debug_assert!(tol > 0.0);
        match self {
            Window::Disc { center, radius } => {
                let d = ((p.x() - center[0]).powi(2) + (p.y() - center[1]).powi(2)).sqrt();
                if (d - radius).abs() <= tol {
                    Location::Boundary
                } else if d < *radius {
                    Location::Inside
                } else {
                    Location::Outside
                }
            }
            Window::Box { d, sides } => {
                let mut min_gap = f64::MAX;
                let mut outside = false;
                for i in 0..*d {
                    let c = p.coords[i];
                    if c < -tol || c > sides[i] + tol {
                        outside = true;
                    }
                    min_gap = min_gap.min(c.abs()).min((sides[i] - c).abs());
                }
                if outside {
                    Location::Outside
                } else if min_gap <= tol {
                    Location::Boundary
                } else {
                    Location::Inside
                }
            }
            Window::Polygon { vertices } => {
                if distance_to_polygon_boundary(p, vertices) <= tol {
                    Location::Boundary
                } else if winding_number_inside(p, vertices) {
                    Location::Inside
                } else {
                    Location::Outside
                }
            }
        }
    }

    /// Distance from `p` to the window (0 inside).
    pub fn distance_to(&self, p: &Point) -> f64 {
        match self {
            Window::Disc { center, radius } => {
                let d = ((p.x() - center[0]).powi(2) + (p.y() - center[1]).powi(2)).sqrt();
                (d - radius).max(0.0)
            }
            Window::Box { d, sides } => {
                let mut dist_sq = 0.0;
                for i in 0..*d {
                    let c = p.coords[i];
                    let t = c.clamp(0.0, sides[i]);
                    dist_sq += (c - t) * (c - t);
                }
                dist_sq.sqrt()
            }
            Window::Polygon { vertices } => {
                if winding_number_inside(p, vertices) {
                    0.0
                } else {
                    distance_to_polygon_boundary(p, vertices)
                }
            }
        }
    }

    /// Nearest point of the window to `p` (projection; `p` itself inside).
    /// Exact for convex windows; for polygons the nearest boundary point is
    /// used when `p` is outside.
    pub fn project(&self, p: &Point) -> Point {
        match self {
            Window::Disc { center, radius } => {
                let dx = p.x() - center[0];
                let dy = p.y() - center[1];
                let d = (dx * dx + dy * dy).sqrt();
                if d <= *radius {
                    *p
                } else {
                    Point::new2(center[0] + dx * radius / d, center[1] + dy * radius / d)
                }
            }
            Window::Box { d, sides } => {
                let mut c = [0.0; 3];
                for i in 0..*d {
                    c[i] = p.coords[i].clamp(0.0, sides[i]);
                }
                Point { coords: c, dim: *d }
            }
            Window::Polygon { vertices } => {
                if winding_number_inside(p, vertices) {
                    *p
                } else {
                    nearest_point_on_polygon_boundary(p, vertices)
                }
            }
        }
    }

    /// Polygon view of the boundary for 2D windows with straight edges;
    /// `None` for discs.
    pub fn as_polygon_vertices(&self) -> Option<Vec<[f64; 2]>> {
        match self {
            Window::Polygon { vertices } => Some(vertices.clone()),
            Window::Box { d: 2, sides } => Some(vec![
                [0.0, 0.0],
                [sides[0], 0.0],
                [sides[0], sides[1]],
                [0.0, sides[1]],
            ]),
            _ => None,
        }
    }

    /// Corner vertices of the window boundary (empty for discs).
    pub fn corners(&self) -> Vec<Point> {
        self.as_polygon_vertices()
            .map(|vs| vs.iter().map(|v| Point::new2(v[0], v[1])).collect())
            .unwrap_or_default()
    }
}

/// Exact window area; degenerate polygons are rejected at construction, so
/// this simply reads the cached geometry.
pub fn window_area(w: &Window) -> f64 {
    w.area()
}

/// Exact boundary length.
pub fn window_perimeter(w: &Window) -> f64 {
    w.perimeter()
}

/// Tolerance-banded point location.
pub fn locate_point(p: &Point, w: &Window, tol: f64) -> Location {
    w.locate(p, tol)
}

fn shoelace(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc / 2.0
}

fn polygon_diameter(vs: &[[f64; 2]]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let d = ((vs[i][0] - vs[j][0]).powi(2) + (vs[i][1] - vs[j][1]).powi(2)).sqrt();
            best = best.max(d);
        }
    }
    best
}

fn polygon_is_simple(vs: &[[f64; 2]], tol: f64) -> bool {
    let n = vs.len();
    for i in 0..n {
        let (a1, a2) = (vs[i], vs[(i + 1) % n]);
        for j in (i + 1)..n {
            // Adjacent edges share an endpoint; skip them.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (vs[j], vs[(j + 1) % n]);
            if segments_properly_intersect(a1, a2, b1, b2, tol) {
                return false;
            }
        }
    }
    true
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_properly_intersect(
    a1: [f64; 2],
    a2: [f64; 2],
    b1: [f64; 2],
    b2: [f64; 2],
    tol: f64,
) -> bool {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    d1 * d2 < -tol * tol && d3 * d4 < -tol * tol
}

fn winding_number_inside(p: &Point, vs: &[[f64; 2]]) -> bool {
    let mut wn = 0i32;
    let n = vs.len();
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        if a[1] <= p.y() {
            if b[1] > p.y() && cross(a, b, [p.x(), p.y()]) > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p.y() && cross(a, b, [p.x(), p.y()]) < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

fn point_segment_distance(p: &Point, a: [f64; 2], b: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let (wx, wy) = (p.x() - a[0], p.y() - a[1]);
    let len_sq = vx * vx + vy * vy;
    let t = if len_sq > 0.0 { ((wx * vx + wy * vy) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (a[0] + t * vx, a[1] + t * vy);
    ((p.x() - cx).powi(2) + (p.y() - cy).powi(2)).sqrt()
}

fn distance_to_polygon_boundary(p: &Point, vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    (0..n)
        .map(|i| point_segment_distance(p, vs[i], vs[(i + 1) % n]))
        .fold(f64::MAX, f64::min)
}

fn nearest_point_on_polygon_boundary(p: &Point, vs: &[[f64; 2]]) -> Point {
    let n = vs.len();
    let mut best = Point::new2(vs[0][0], vs[0][1]);
    let mut best_d = f64::MAX;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
        let len_sq = vx * vx + vy * vy;
        let t = if len_sq > 0.0 {
            (((p.x() - a[0]) * vx + (p.y() - a[1]) * vy) / len_sq).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = Point::new2(a[0] + t * vx, a[1] + t * vy);
        let d = p.dist(&q);
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

fn polygon_interior_point(vs: &[[f64; 2]]) -> Point {
    // Centroid works for convex polygons; otherwise probe triangle
    // midpoints of a diagonal fan until one lands strictly inside.
    let n = vs.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut area6 = 0.0;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let w = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
        area6 += w;
    }
    let centroid = Point::new2(cx / (3.0 * area6), cy / (3.0 * area6));
    let tol = DEFAULT_GEOM_TOL * polygon_diameter(vs);
    if winding_number_inside(&centroid, vs) && distance_to_polygon_boundary(&centroid, vs) > tol
    {
        return centroid;
    }
    for i in 1..n {
        for j in (i + 1)..n {
            let m = Point::new2(
                (vs[0][0] + vs[i][0] + vs[j][0]) / 3.0,
                (vs[0][1] + vs[i][1] + vs[j][1]) / 3.0,
            );
            if winding_number_inside(&m, vs) && distance_to_polygon_boundary(&m, vs) > tol {
                return m;
            }
        }
    }
    centroid
}

/// Result of intersecting two circle boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleIntersections {
    pub points: Vec<Point>,
    /// Circles are concentric or identical within tolerance; no meaningful
    /// intersection points exist.
    pub degenerate: bool,
    /// Single contact point within tolerance.
    pub tangent: bool,
}

/// Allocation-free core of the circle-circle solve: intersection points
/// into a fixed buffer, returning (count, degenerate, tangent).
pub(crate) fn circle_circle_core(
    a: &Disk,
    b: &Disk,
    tol: f64,
    out: &mut [Point; 2],
) -> (usize, bool, bool) {
    debug_assert!(tol > 0.0);
    let dx = b.center.x() - a.center.x();
    let dy = b.center.y() - a.center.y();
    let d = (dx * dx + dy * dy).sqrt();
    if d <= tol {
        return (0, true, false);
    }
    let (r1, r2) = (a.radius, b.radius);
    let sum = r1 + r2;
    let diff = (r1 - r2).abs();
    if d > sum + tol || d < diff - tol {
        return (0, false, false);
    }
    // Distance from the first center to the intersection chord.
    let t = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h_sq = r1 * r1 - t * t;
    let (ux, uy) = (dx / d, dy / d);
    let (mx, my) = (a.center.x() + t * ux, a.center.y() + t * uy);
    if (d - sum).abs() <= tol || (d - diff).abs() <= tol || h_sq <= tol * tol {
        out[0] = Point::new2(mx, my);
        return (1, false, true);
    }
    let h = h_sq.sqrt();
    out[0] = Point::new2(mx - h * uy, my + h * ux);
    out[1] = Point::new2(mx + h * uy, my - h * ux);
    (2, false, false)
}

/// Intersection points of the boundaries of two circles.
///
/// Tangency within `tol` reports one point; concentric or identical circles
/// report zero points with the degeneracy flag set.
pub fn circle_circle_intersections(a: &Disk, b: &Disk, tol: f64) -> CircleIntersections {
    let mut buf = [Point::new2(0.0, 0.0); 2];
    let (n, degenerate, tangent) = circle_circle_core(a, b, tol, &mut buf);
    CircleIntersections { points: buf[..n].to_vec(), degenerate, tangent }
}

/// Allocation-free core of the circle-segment solve.
pub(crate) fn circle_segment_core(
    disk: &Disk,
    a: [f64; 2],
    b: [f64; 2],
    tol: f64,
    out: &mut [Point; 2],
) -> usize {
    let (cx, cy, r) = (disk.center.x(), disk.center.y(), disk.radius);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let (fx, fy) = (a[0] - cx, a[1] - cy);
    let qa = dx * dx + dy * dy;
    if qa == 0.0 {
        return 0;
    }
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    let seg_len = qa.sqrt();
    if disc < -tol * seg_len * seg_len {
        return 0;
    }
    let mut n = 0;
    if disc <= tol * seg_len * seg_len {
        let t = -qb / (2.0 * qa);
        if (-tol / seg_len..=1.0 + tol / seg_len).contains(&t) {
            out[n] = Point::new2(a[0] + t * dx, a[1] + t * dy);
            n += 1;
        }
        return n;
    }
    let sq = disc.sqrt();
    for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
        if (-tol / seg_len..=1.0 + tol / seg_len).contains(&t) {
            out[n] = Point::new2(a[0] + t * dx, a[1] + t * dy);
            n += 1;
        }
    }
    n
}

/// Intersections of a circle boundary with a segment `[a, b]`.
pub fn circle_segment_intersections(
    disk: &Disk,
    a: [f64; 2],
    b: [f64; 2],
    tol: f64,
) -> Vec<Point> {
    let mut buf = [Point::new2(0.0, 0.0); 2];
    let n = circle_segment_core(disk, a, b, tol, &mut buf);
    buf[..n].to_vec()
}

/// All points of the circle boundary of `a` meeting the window boundary:
/// per-edge circle-segment solves for straight-edged windows, a
/// circle-circle solve for disc windows. 2D only.
pub fn circle_boundary_intersections(
    a: &Disk,
    w: &Window,
    tol: f64,
) -> Result<Vec<Point>, GeomError> {
    if w.dim() != 2 {
        return Err(GeomError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    match w {
        Window::Disc { center, radius } => {
            let wd = Disk::new(Point::new2(center[0], center[1]), *radius);
            Ok(circle_circle_intersections(a, &wd, tol).points)
        }
        _ => {
            let vs = w.as_polygon_vertices().expect("2D straight-edged window");
            let n = vs.len();
            let mut pts = Vec::new();
            for i in 0..n {
                pts.extend(circle_segment_intersections(a, vs[i], vs[(i + 1) % n], tol));
            }
            // Corner-grazing circles can report the corner twice (once per
            // incident edge); collapse duplicates.
            dedup_points(&mut pts, 10.0 * tol);
            Ok(pts)
        }
    }
}

pub(crate) fn dedup_points(pts: &mut Vec<Point>, tol: f64) {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts.iter() {
        if !out.iter().any(|q| q.dist(p) <= tol) {
            out.push(*p);
        }
    }
    *pts = out;
}

/// Upper bound on the covering number kappa(w, r): the number of radius-r
/// balls with centers in `w` needed to cover `w`, produced by a greedy grid
/// construction. This is an upper bound, not the exact minimum.
///
/// Cells of circumradius at most r whose center lies in the window get one
/// ball at the center; boundary-straddling cells with an outside center are
/// subdivided into diameter-at-most-r subcells, each nonempty subcell
/// getting one ball at a point of the subcell inside the window.
pub fn covering_number(w: &Window, r: f64) -> Result<usize, GeomError> {
    if !(r > 0.0) {
        return Err(GeomError::NonPositiveParameter { name: "r", value: r });
    }
    if w.dim() != 2 {
        return Err(GeomError::UnsupportedDimension { expected: 2, got: w.dim() });
    }
    let (lo, hi) = w.bounding_box();
    let (wx, wy) = (hi.x() - lo.x(), hi.y() - lo.y());
    // Cell sides <= r*sqrt(2) keep the cell circumradius <= r.
    let nx = (wx / (r * std::f64::consts::SQRT_2)).ceil().max(1.0) as usize;
    let ny = (wy / (r * std::f64::consts::SQRT_2)).ceil().max(1.0) as usize;
    let (sx, sy) = (wx / nx as f64, wy / ny as f64);
    let tol = DEFAULT_GEOM_TOL * w.diameter();
    let mut count = 0usize;
    for ix in 0..nx {
        for iy in 0..ny {
            let x0 = lo.x() + ix as f64 * sx;
            let y0 = lo.y() + iy as f64 * sy;
            if !cell_meets_window(w, x0, y0, sx, sy, tol) {
                continue;
            }
            let c = Point::new2(x0 + sx / 2.0, y0 + sy / 2.0);
            if w.locate(&c, tol) != Location::Outside {
                count += 1;
            } else {
                // Center outside: cover the straddling piece with subcells
                // of diameter <= r, one ball per nonempty subcell.
                let m = ((sx * sx + sy * sy).sqrt() / r).ceil() as usize;
                for jx in 0..m {
                    for jy in 0..m {
                        let qx0 = x0 + jx as f64 * sx / m as f64;
                        let qy0 = y0 + jy as f64 * sy / m as f64;
                        if cell_meets_window(w, qx0, qy0, sx / m as f64, sy / m as f64, tol) {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(count)
}

fn cell_meets_window(w: &Window, x0: f64, y0: f64, sx: f64, sy: f64, tol: f64) -> bool {
    let corners = [
        Point::new2(x0, y0),
        Point::new2(x0 + sx, y0),
        Point::new2(x0 + sx, y0 + sy),
        Point::new2(x0, y0 + sy),
    ];
    if corners.iter().any(|c| w.locate(c, tol) != Location::Outside) {
        return true;
    }
    let center = Point::new2(x0 + sx / 2.0, y0 + sy / 2.0);
    if w.locate(&center, tol) != Location::Outside {
        return true;
    }
    match w {
        Window::Disc { center: c, radius } => {
            // Nearest point of the cell to the disc center.
            let nx = c[0].clamp(x0, x0 + sx);
            let ny = c[1].clamp(y0, y0 + sy);
            let d = ((c[0] - nx).powi(2) + (c[1] - ny).powi(2)).sqrt();
            d <= *radius + tol
        }
        Window::Box { .. } => false, // corners/center already decided it
        Window::Polygon { vertices } => {
            // A polygon edge may cross the cell without any corner inside.
            let n = vertices.len();
            let cell = [[x0, y0], [x0 + sx, y0], [x0 + sx, y0 + sy], [x0, y0 + sy]];
            for i in 0..n {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                for j in 0..4 {
                    if segments_properly_intersect(a, b, cell[j], cell[(j + 1) % 4], tol) {
                        return true;
                    }
                }
                if a[0] > x0 && a[0] < x0 + sx && a[1] > y0 && a[1] < y0 + sy {
                    return true;
                }
            }
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square() -> Window {
        Window::unit_square()
    }

    fn triangle() -> Window {
        Window::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn areas_and_perimeters() {
        assert!((unit_square().area() - 1.0).abs() < 1e-15);
        assert!((unit_square().perimeter() - 4.0).abs() < 1e-15);
        let d = Window::disc([0.0, 0.0], 0.45).unwrap();
        assert!((d.area() - PI * 0.2025).abs() < 1e-15);
        assert!((d.perimeter() - 0.9 * PI).abs() < 1e-15);
        assert!((triangle().area() - 0.5).abs() < 1e-15);
        assert!((triangle().perimeter() - (2.0 + 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn degenerate_polygon_rejected() {
        let r = Window::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(matches!(r, Err(GeomError::DegeneratePolygon { .. })));
    }

    #[test]
    fn clockwise_input_reversed() {
        let w = Window::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(w.area() > 0.0);
        if let Window::Polygon { vertices } = &w {
            assert!(shoelace(vertices) > 0.0);
        }
    }

    #[test]
    fn locate_point_cases() {
        let w = unit_square();
        assert_eq!(w.locate(&Point::new2(0.5, 0.5), 1e-9), Location::Inside);
        assert_eq!(w.locate(&Point::new2(1.0, 0.5), 1e-9), Location::Boundary);
        assert_eq!(w.locate(&Point::new2(2.0, 2.0), 1e-9), Location::Outside);
    }

    #[test]
    fn locate_point_matches_raycast_oracle() {
        // Brute-force ray-cast oracle, independent of the winding-number
        // path used by locate().
        fn raycast_inside(p: &Point, vs: &[[f64; 2]]) -> bool {
            let n = vs.len();
            let mut inside = false;
            let mut j = n - 1;
            for i in 0..n {
                let (a, b) = (vs[i], vs[j]);
                if (a[1] > p.y()) != (b[1] > p.y()) {
                    let x_cross = a[0] + (p.y() - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                    if p.x() < x_cross {
                        inside = !inside;
                    }
                }
                j = i;
            }
            inside
        }
        let poly = vec![[0.0, 0.0], [2.0, 0.2], [1.7, 1.5], [0.9, 0.7], [0.1, 1.3]];
        let w = Window::polygon(poly.clone()).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        for _ in 0..100_000 {
            let p = Point::new2(next() * 2.4 - 0.2, next() * 1.9 - 0.2);
            let loc = w.locate(&p, 1e-9);
            if loc == Location::Boundary {
                continue; // oracle is not meaningful within the tol band
            }
            let oracle = raycast_inside(&p, &poly);
            assert_eq!(loc == Location::Inside, oracle, "disagree at {p:?}");
            checked += 1;
        }
        assert!(checked > 99_000);
    }

    #[test]
    fn area_invariant_under_relabel_and_translation() {
        let poly = vec![[0.0, 0.0], [2.0, 0.2], [1.7, 1.5], [0.1, 1.3]];
        let base = Window::polygon(poly.clone()).unwrap().area();
        for shift in 0..poly.len() {
            let mut rotated: Vec<[f64; 2]> = poly[shift..].to_vec();
            rotated.extend_from_slice(&poly[..shift]);
            let translated: Vec<[f64; 2]> =
                rotated.iter().map(|v| [v[0] + 13.25, v[1] - 7.5]).collect();
            let a = Window::polygon(translated).unwrap().area();
            assert!((a - base).abs() <= 1e-12 * base.abs());
        }
    }

    #[test]
    fn circle_circle_tangent_and_crossing() {
        let a = Disk::new(Point::new2(0.0, 0.0), 1.0);
        let b = Disk::new(Point::new2(2.0, 0.0), 1.0);
        let r = circle_circle_intersections(&a, &b, 1e-9);
        assert!(r.tangent);
        assert_eq!(r.points.len(), 1);
        assert!(r.points[0].dist(&Point::new2(1.0, 0.0)) < 1e-9);

        let c = Disk::new(Point::new2(1.0, 0.0), 1.0);
        let r = circle_circle_intersections(&a, &c, 1e-9);
        assert_eq!(r.points.len(), 2);
        let want = 3f64.sqrt() / 2.0;
        for p in &r.points {
            assert!((p.x() - 0.5).abs() < 1e-12);
            assert!((p.y().abs() - want).abs() < 1e-12);
        }

        let d = Disk::new(Point::new2(3.0, 0.0), 1.0);
        let r = circle_circle_intersections(&a, &d, 1e-9);
        assert!(r.points.is_empty() && !r.degenerate);

        let r = circle_circle_intersections(&a, &a, 1e-9);
        assert!(r.degenerate && r.points.is_empty());
    }

    #[test]
    fn circle_circle_points_lie_on_both_circles() {
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let tol = 1e-9;
        for _ in 0..2000 {
            let a = Disk::new(Point::new2(next(), next()), 0.05 + next());
            let b = Disk::new(Point::new2(next(), next()), 0.05 + next());
            let r = circle_circle_intersections(&a, &b, tol);
            if r.tangent {
                continue;
            }
            for p in &r.points {
                assert!((p.dist(&a.center) - a.radius).abs() <= 10.0 * tol);
                assert!((p.dist(&b.center) - b.radius).abs() <= 10.0 * tol);
            }
        }
    }

    #[test]
    fn circle_boundary_cases() {
        let w = unit_square();
        let pts = circle_boundary_intersections(&Disk::new(Point::new2(0.0, 0.0), 1.0), &w, 1e-9)
            .unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().any(|p| p.dist(&Point::new2(1.0, 0.0)) < 1e-9));
        assert!(pts.iter().any(|p| p.dist(&Point::new2(0.0, 1.0)) < 1e-9));

        let pts =
            circle_boundary_intersections(&Disk::new(Point::new2(0.5, 0.5), 0.1), &w, 1e-9)
                .unwrap();
        assert!(pts.is_empty());

        let pts =
            circle_boundary_intersections(&Disk::new(Point::new2(0.5, 0.0), 0.2), &w, 1e-9)
                .unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().any(|p| p.dist(&Point::new2(0.3, 0.0)) < 1e-9));
        assert!(pts.iter().any(|p| p.dist(&Point::new2(0.7, 0.0)) < 1e-9));
    }

    #[test]
    fn covering_number_examples() {
        let w = unit_square();
        let r = 2f64.sqrt() / 2.0;
        assert_eq!(covering_number(&w, r).unwrap(), 1);
        assert!(covering_number(&w, 0.5 * r).unwrap() <= 4);
        let k = covering_number(&w, 0.05).unwrap();
        let lower = (w.area() / (PI * 0.05 * 0.05)).ceil() as usize;
        assert!(k >= lower, "greedy {k} below area bound {lower}");
        assert!(covering_number(&w, 0.0).is_err());
    }

    #[test]
    fn covering_number_dominates_area_bound() {
        let w = Window::disc([0.3, -0.2], 0.8).unwrap();
        for r in [0.5, 0.2, 0.11, 0.07, 0.03] {
            let k = covering_number(&w, r).unwrap();
            let lower = (w.area() / (PI * r * r)).ceil() as usize;
            assert!(k >= lower, "r={r}: {k} < {lower}");
        }
    }

    #[test]
    fn window_json_schema_roundtrip() {
        let w = Window::disc([0.1, 0.2], 0.45).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"kind\":\"disc\""));
        let back: Window = serde_json::from_str(&s).unwrap();
        assert_eq!(w, back);
        let p: Window =
            serde_json::from_str(r#"{"kind":"polygon","vertices":[[0,0],[1,0],[0,1]]}"#).unwrap();
        assert!((p.area() - 0.5).abs() < 1e-12);
        let b: Window = serde_json::from_str(r#"{"kind":"box","d":2,"sides":[1,1]}"#).unwrap();
        assert_eq!(b, Window::unit_square());
    }
}
