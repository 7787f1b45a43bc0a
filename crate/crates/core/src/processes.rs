//! Poisson inputs for the coverage models: space-time seeds for the
//! growth process, radius-marked points for the Boolean model, halo
//! sampling for unrestricted models, and the mark-truncation split.
//!
//! All sampling is pure given an [`RngSpec`]: the same (master seed,
//! stream index) pair reproduces the same sample bit for bit on one build,
//! and distinct stream indices can be consumed concurrently.

use crate::geom::{Point, Window};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write as _;

/// A nonnegative radius distribution with closed-form moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RadiusLaw {
    Constant { c: f64 },
    /// Uniform on `[0, b]`.
    Uniform { b: f64 },
    Exponential { rate: f64 },
    /// Density `alpha * xm^alpha / y^(alpha+1)` on `[xm, inf)`; sampled as
    /// `xm * U^(-1/alpha)`.
    Pareto { alpha: f64, xm: f64 },
}

impl RadiusLaw {
    pub fn constant(c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite());
        RadiusLaw::Constant { c }
    }

    pub fn uniform(b: f64) -> Self {
        assert!(b > 0.0 && b.is_finite());
        RadiusLaw::Uniform { b }
    }

    pub fn exponential(rate: f64) -> Self {
        assert!(rate > 0.0 && rate.is_finite());
        RadiusLaw::Exponential { rate }
    }

    pub fn pareto(alpha: f64, xm: f64) -> Self {
        assert!(alpha > 0.0 && xm > 0.0);
        RadiusLaw::Pareto { alpha, xm }
    }

    /// Closed-form `E[Y^m]`; `f64::INFINITY` is a legitimate value (the
    /// Pareto law with shape at most m), not an error.
    pub fn moment(&self, m: u32) -> f64 {
        if m == 0 {
            return 1.0;
        }
        match *self {
            RadiusLaw::Constant { c } => c.powi(m as i32),
            RadiusLaw::Uniform { b } => b.powi(m as i32) / (m as f64 + 1.0),
            RadiusLaw::Exponential { rate } => {
                let mut acc = 1.0;
                for j in 1..=m {
                    acc *= j as f64 / rate;
                }
                acc
            }
            RadiusLaw::Pareto { alpha, xm } => {
                if alpha <= m as f64 {
                    f64::INFINITY
                } else {
                    alpha * xm.powi(m as i32) / (alpha - m as f64)
                }
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            RadiusLaw::Constant { c } => c,
            RadiusLaw::Uniform { b } => b * rng.random::<f64>(),
            RadiusLaw::Exponential { rate } => {
                let u: f64 = rng.random();
                -(1.0 - u).ln() / rate
            }
            RadiusLaw::Pareto { alpha, xm } => {
                let mut u: f64 = rng.random();
                if u == 0.0 {
                    u = f64::MIN_POSITIVE;
                }
                xm * u.powf(-1.0 / alpha)
            }
        }
    }

    /// Parse `constant:c | uniform:b | exp:rate | pareto:alpha[,xm]`.
    pub fn parse(s: &str) -> Result<Self, ProcessError> {
        let bad = || ProcessError::BadLawSpec { spec: s.to_string() };
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> =
            args.split(',').map(|a| a.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        match (kind, nums.as_slice()) {
            ("constant", [c]) if *c > 0.0 => Ok(RadiusLaw::constant(*c)),
            ("uniform", [b]) if *b > 0.0 => Ok(RadiusLaw::uniform(*b)),
            ("exp", [rate]) if *rate > 0.0 => Ok(RadiusLaw::exponential(*rate)),
            ("pareto", [alpha]) if *alpha > 0.0 => Ok(RadiusLaw::pareto(*alpha, 1.0)),
            ("pareto", [alpha, xm]) if *alpha > 0.0 && *xm > 0.0 => {
                Ok(RadiusLaw::pareto(*alpha, *xm))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RadiusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusLaw::Constant { c } => write!(f, "constant:{c}"),
            RadiusLaw::Uniform { b } => write!(f, "uniform:{b}"),
            RadiusLaw::Exponential { rate } => write!(f, "exp:{rate}"),
            RadiusLaw::Pareto { alpha, xm } => write!(f, "pareto:{alpha},{xm}"),
        }
    }
}

/// What the mark attached to each point means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkKind {
    Radius,
    BirthTime,
}

/// A realization of a marked Poisson process: points with radius factors or
/// birth times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPointSet {
    pub points: Vec<Point>,
    pub marks: Vec<f64>,
    pub mark_kind: MarkKind,
    pub intensity_used: f64,
    pub window_used: Window,
}

impl MarkedPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV rows `x[,y[,z]],mark`, with a header.
    pub fn to_csv(&self) -> String {
        let d = self.window_used.dim();
        let mut out = String::new();
        out.push_str(match d {
            1 => "x,mark\n",
            2 => "x,y,mark\n",
            _ => "x,y,z,mark\n",
        });
        for (p, m) in self.points.iter().zip(&self.marks) {
            for i in 0..d {
                out.push_str(&format!("{:.17e},", p.coords[i]));
            }
            out.push_str(&format!("{:.17e}\n", m));
        }
        out
    }

    /// JSON sidecar describing how the sample was produced.
    pub fn sidecar_json(&self, spec: &RngSpec) -> String {
        serde_json::json!({
            "window": self.window_used,
            "intensity": self.intensity_used,
            "mark_kind": self.mark_kind,
            "seed": spec.master_seed,
            "stream": spec.stream_index,
        })
        .to_string()
    }

    /// Write the CSV and its JSON sidecar (`<path>` and `<path>.json`).
    pub fn write_csv_with_sidecar(
        &self,
        path: &std::path::Path,
        spec: &RngSpec,
    ) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        let sidecar = path.with_extension(format!(
            "{}.json",
            path.extension().and_then(|e| e.to_str()).unwrap_or("csv")
        ));
        std::fs::write(sidecar, self.sidecar_json(spec))
    }
}

/// Identifies one reproducible random stream: replication i of an
/// experiment uses stream index i from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngSpec { master_seed, stream_index }
    }

    /// Derived stream for auxiliary draws inside one replication (halo
    /// extensions, pilot runs) that must not disturb the main stream.
    pub fn substream(&self, tag: u64) -> RngSpec {
        RngSpec {
            master_seed: self.master_seed,
            stream_index: splitmix64(self.stream_index ^ (tag.wrapping_mul(0x9e3779b97f4a7c15))),
        }
    }

    /// Counter-based PCG stream: the master seed picks the state, the
    /// stream index picks the PCG increment, so streams are independent and
    /// merge-order free.
    pub fn rng(&self) -> rand_pcg::Pcg64 {
        let s0 = splitmix64(self.master_seed);
        let s1 = splitmix64(s0 ^ self.stream_index);
        let state = ((s0 as u128) << 64) | s1 as u128;
        let incr = ((splitmix64(self.stream_index) as u128) << 64)
            | splitmix64(self.stream_index ^ 0xdeadbeef) as u128;
        rand_pcg::Pcg64::new(state, incr)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessError {
    NegativeIntensity { value: f64 },
    WrongMarkKind { expected: MarkKind },
    BadLawSpec { spec: String },
}

impl fmt::Display for ProcessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessError::NegativeIntensity { value } => {
                write!(f, "intensity must be nonnegative, got {value}")
            }
            ProcessError::WrongMarkKind { expected } => {
                write!(f, "operation expects mark kind {expected:?}")
            }
            ProcessError::BadLawSpec { spec } => write!(f, "cannot parse radius law {spec:?}"),
        }
    }
}

impl std::error::Error for ProcessError {}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as usize
}

fn uniform_point_in_window<R: Rng>(w: &Window, rng: &mut R) -> Point {
    match w {
        Window::Box { d, sides } => {
            let mut c = [0.0; 3];
            for i in 0..*d {
                c[i] = sides[i] * rng.random::<f64>();
            }
            Point { coords: c, dim: *d }
        }
        Window::Disc { center, radius } => loop {
            let x = center[0] + radius * (2.0 * rng.random::<f64>() - 1.0);
            let y = center[1] + radius * (2.0 * rng.random::<f64>() - 1.0);
            if (x - center[0]).powi(2) + (y - center[1]).powi(2) <= radius * radius {
                return Point::new2(x, y);
            }
        },
        Window::Polygon { .. } => {
            let (lo, hi) = w.bounding_box();
            loop {
                let p = Point::new2(
                    lo.x() + (hi.x() - lo.x()) * rng.random::<f64>(),
                    lo.y() + (hi.y() - lo.y()) * rng.random::<f64>(),
                );
                // Rejection against the closed window keeps the sampler
                // exact; the boundary has measure zero.
                if w.distance_to(&p) == 0.0 {
                    return p;
                }
            }
        }
    }
}

/// Radius-marked Poisson sample in `w`: point count Poisson(n |w|), points
/// uniform, marks iid from `law`. The intensity `n` need not be an integer.
pub fn sample_marked_poisson(
    w: &Window,
    n: f64,
    law: &RadiusLaw,
    spec: &RngSpec,
) -> Result<MarkedPointSet, ProcessError> {
    if n < 0.0 {
        return Err(ProcessError::NegativeIntensity { value: n });
    }
    let mut rng = spec.rng();
    let count = poisson_count(n * w.area(), &mut rng);
    let mut points = Vec::with_capacity(count);
    let mut marks = Vec::with_capacity(count);
    for _ in 0..count {
        points.push(uniform_point_in_window(w, &mut rng));
        marks.push(law.sample(&mut rng));
    }
    Ok(MarkedPointSet {
        points,
        marks,
        mark_kind: MarkKind::Radius,
        intensity_used: n,
        window_used: w.clone(),
    })
}

/// Space-time Poisson sample in `w x [0, t_max]`: count Poisson(rho |w|
/// t_max), locations uniform in `w`, birth times uniform in `[0, t_max]`.
pub fn sample_spacetime_poisson(
    w: &Window,
    rho: f64,
    t_max: f64,
    spec: &RngSpec,
) -> Result<MarkedPointSet, ProcessError> {
    if rho < 0.0 {
        return Err(ProcessError::NegativeIntensity { value: rho });
    }
    let mut rng = spec.rng();
    let count = poisson_count(rho * w.area() * t_max.max(0.0), &mut rng);
    let mut points = Vec::with_capacity(count);
    let mut marks = Vec::with_capacity(count);
    for _ in 0..count {
        points.push(uniform_point_in_window(w, &mut rng));
        marks.push(t_max * rng.random::<f64>());
    }
    Ok(MarkedPointSet {
        points,
        marks,
        mark_kind: MarkKind::BirthTime,
        intensity_used: rho,
        window_used: w.clone(),
    })
}

/// Space-time seeds of the full-space process that can affect coverage of
/// `w` by time `t_max`: only seeds with `s + dist(x, w) <= t_max` matter,
/// so the sample is drawn in the bounding box of the `t_max`-dilated
/// window and thinned to that event set. Seeds inside `w` are included.
pub fn sample_halo(
    w: &Window,
    rho: f64,
    t_max: f64,
    spec: &RngSpec,
) -> Result<MarkedPointSet, ProcessError> {
    sample_halo_shell(w, rho, 0.0, t_max, spec)
}

/// Seeds of the full-space process relevant at horizon `t_new` but not at
/// horizon `t_old`. Together with the `t_old` halo sample (drawn from an
/// independent stream) the union is a halo sample at horizon `t_new`, which
/// lets the caller extend a realization instead of redrawing it.
pub fn sample_halo_shell(
    w: &Window,
    rho: f64,
    t_old: f64,
    t_new: f64,
    spec: &RngSpec,
) -> Result<MarkedPointSet, ProcessError> {
    if rho < 0.0 {
        return Err(ProcessError::NegativeIntensity { value: rho });
    }
    let mut rng = spec.rng();
    let mut points = Vec::new();
    let mut marks = Vec::new();
    if t_new > 0.0 {
        let (lo, hi) = w.bounding_box();
        let d = w.dim();
        let mut vol = 1.0;
        for i in 0..d {
            vol *= hi.coords[i] - lo.coords[i] + 2.0 * t_new;
        }
        let count = poisson_count(rho * vol * t_new, &mut rng);
        for _ in 0..count {
            let mut c = [0.0; 3];
            for i in 0..d {
                c[i] = lo.coords[i] - t_new
                    + (hi.coords[i] - lo.coords[i] + 2.0 * t_new) * rng.random::<f64>();
            }
            let p = Point { coords: c, dim: d };
            let s = t_new * rng.random::<f64>();
            let gap = w.distance_to(&p);
            let relevant_new = s + gap <= t_new;
            let relevant_old = s + gap <= t_old;
            if relevant_new && !relevant_old {
                points.push(p);
                marks.push(s);
            }
        }
    }
    Ok(MarkedPointSet {
        points,
        marks,
        mark_kind: MarkKind::BirthTime,
        intensity_used: rho,
        window_used: w.clone(),
    })
}

/// Split a radius-marked sample into the two independent Poisson processes
/// with marks at most `cutoff` and above it. The parts partition the input.
pub fn truncate_marks(
    s: &MarkedPointSet,
    cutoff: f64,
) -> Result<(MarkedPointSet, MarkedPointSet), ProcessError> {
    if s.mark_kind != MarkKind::Radius {
        return Err(ProcessError::WrongMarkKind { expected: MarkKind::Radius });
    }
    let mut below = MarkedPointSet {
        points: vec![],
        marks: vec![],
        mark_kind: s.mark_kind,
        intensity_used: s.intensity_used,
        window_used: s.window_used.clone(),
    };
    let mut above = below.clone();
    for (p, m) in s.points.iter().zip(&s.marks) {
        if *m <= cutoff {
            below.points.push(*p);
            below.marks.push(*m);
        } else {
            above.points.push(*p);
            above.marks.push(*m);
        }
    }
    Ok((below, above))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Location;

    #[test]
    fn moments_match_closed_forms() {
        assert!((RadiusLaw::uniform(1.0).moment(2) - 1.0 / 3.0).abs() < 1e-15);
        for m in 0..8 {
            assert_eq!(RadiusLaw::constant(1.0).moment(m), 1.0);
        }
        assert_eq!(RadiusLaw::pareto(0.25, 1.0).moment(2), f64::INFINITY);
        assert_eq!(RadiusLaw::pareto(2.0, 1.0).moment(2), f64::INFINITY);
        assert!((RadiusLaw::pareto(3.0, 1.0).moment(2) - 3.0).abs() < 1e-15);
        assert!((RadiusLaw::exponential(2.0).moment(3) - 6.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_moments_match() {
        let n = 1_000_000usize;
        for (law, ms) in [
            (RadiusLaw::uniform(1.0), vec![1u32, 2, 3, 4]),
            (RadiusLaw::exponential(1.5), vec![1, 2, 3, 4]),
            (RadiusLaw::constant(2.0), vec![1, 2, 3, 4]),
            (RadiusLaw::pareto(9.0, 1.0), vec![1, 2, 3, 4]),
        ] {
            let mut rng = RngSpec::new(7, 0).rng();
            let samples: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            for m in ms {
                let vals: Vec<f64> = samples.iter().map(|y| y.powi(m as i32)).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                let se = (var / n as f64).sqrt();
                let want = law.moment(m);
                assert!(
                    (mean - want).abs() <= 4.0 * se + 1e-12,
                    "{law} m={m}: {mean} vs {want} (se {se:.2e})"
                );
            }
        }
    }

    #[test]
    fn poisson_count_statistics() {
        let w = Window::unit_square();
        let law = RadiusLaw::constant(1.0);
        let reps = 10_000usize;
        let mut counts = Vec::with_capacity(reps);
        for i in 0..reps {
            let s = sample_marked_poisson(&w, 1000.0, &law, &RngSpec::new(11, i as u64)).unwrap();
            counts.push(s.len() as f64);
        }
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        // Mean of a Poisson(1000) sample of 1e4: SE = sqrt(1000/1e4).
        let se_mean = (1000.0f64 / reps as f64).sqrt();
        assert!((mean - 1000.0).abs() < 3.0 * se_mean, "mean {mean}");
        // Var estimate SE ~ sqrt((mu4 - sigma^4)/reps), mu4 = lam(1+3lam).
        let lam = 1000.0f64;
        let mu4 = lam * (1.0 + 3.0 * lam);
        let se_var = ((mu4 - lam * lam) / reps as f64).sqrt();
        assert!((var - lam).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn zero_intensity_empty_and_deterministic() {
        let w = Window::unit_square();
        let law = RadiusLaw::uniform(1.0);
        assert!(sample_marked_poisson(&w, 0.0, &law, &RngSpec::new(1, 0)).unwrap().is_empty());
        assert!(sample_spacetime_poisson(&w, 0.0, 1.0, &RngSpec::new(1, 0)).unwrap().is_empty());
        assert!(sample_halo(&w, 5.0, 0.0, &RngSpec::new(1, 0)).unwrap().is_empty());
        let a = sample_marked_poisson(&w, 500.0, &law, &RngSpec::new(42, 3)).unwrap();
        let b = sample_marked_poisson(&w, 500.0, &law, &RngSpec::new(42, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_marked_poisson(&w, 500.0, &law, &RngSpec::new(42, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spacetime_mean_count() {
        let w = Window::disc([0.0, 0.0], 0.45).unwrap();
        let rho = 125.0;
        let t_max = 0.3;
        let reps = 10_000usize;
        let mut total = 0usize;
        for i in 0..reps {
            total +=
                sample_spacetime_poisson(&w, rho, t_max, &RngSpec::new(5, i as u64)).unwrap().len();
        }
        let mean = total as f64 / reps as f64;
        let lam = rho * w.area() * t_max;
        let se = (lam / reps as f64).sqrt();
        assert!((mean - lam).abs() < 3.0 * se, "mean {mean} vs {lam}");
    }

    #[test]
    fn halo_sample_within_dilation() {
        let w = Window::unit_square();
        let s = sample_halo(&w, 2000.0, 0.1, &RngSpec::new(9, 0)).unwrap();
        assert!(!s.is_empty());
        for (p, m) in s.points.iter().zip(&s.marks) {
            assert!(w.distance_to(p) <= 0.1 + 1e-12);
            assert!(*m >= 0.0 && *m <= 0.1);
            assert!(*m + w.distance_to(p) <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn halo_shell_disjoint_from_inner_region() {
        let w = Window::unit_square();
        let shell = sample_halo_shell(&w, 3000.0, 0.05, 0.1, &RngSpec::new(9, 1)).unwrap();
        assert!(!shell.is_empty());
        for (p, m) in shell.points.iter().zip(&shell.marks) {
            assert!(*m + w.distance_to(p) <= 0.1 + 1e-12);
            assert!(*m + w.distance_to(p) > 0.05);
        }
    }

    #[test]
    fn halo_coverage_matches_oversampled_box_oracle() {
        // Coverage probability of the window at time t from halo samples
        // equals the estimate from a much larger box sample of the same
        // full-space process (restricted to seeds that exist there).
        use crate::coverage::{is_k_covered, GrowthConfiguration};
        let w = Window::unit_square();
        let rho = 60.0;
        let t = 0.42;
        let reps = 1500u64;
        let covered_halo = |i: u64| {
            let seeds = sample_halo(&w, rho, t, &RngSpec::new(314, i)).unwrap();
            let g = GrowthConfiguration::new(seeds, false, Some(t));
            is_k_covered(&w, &g.disks_at(t), 1, 1e-9).unwrap().covered
        };
        // Box big enough that every seed that can reach the window by t
        // lives inside it; shift sampled coordinates so the box covers
        // [-t, 1 + t]^2.
        let big = Window::rect_box(2, vec![1.0 + 2.0 * t, 1.0 + 2.0 * t]).unwrap();
        let covered_box = |i: u64| {
            let mut seeds = sample_spacetime_poisson(&big, rho, t, &RngSpec::new(315, i)).unwrap();
            for p in &mut seeds.points {
                p.coords[0] -= t;
                p.coords[1] -= t;
            }
            let g = GrowthConfiguration::new(
                MarkedPointSet { window_used: w.clone(), ..seeds },
                false,
                Some(t),
            );
            is_k_covered(&w, &g.disks_at(t), 1, 1e-9).unwrap().covered
        };
        let p_halo = (0..reps).filter(|i| covered_halo(*i)).count() as f64 / reps as f64;
        let p_box = (0..reps).filter(|i| covered_box(*i)).count() as f64 / reps as f64;
        let se = (2.0 * 0.25 / reps as f64).sqrt();
        assert!(
            (p_halo - p_box).abs() < 3.5 * se,
            "halo {p_halo} vs box {p_box} (se {se:.4})"
        );
        assert!(p_halo > 0.05 && p_halo < 0.95, "uninformative regime {p_halo}");
    }

    #[test]
    fn truncate_marks_partitions() {
        let w = Window::unit_square();
        let law = RadiusLaw::exponential(1.0);
        let s = sample_marked_poisson(&w, 300.0, &law, &RngSpec::new(13, 0)).unwrap();
        let (below, above) = truncate_marks(&s, 0.7).unwrap();
        assert_eq!(below.len() + above.len(), s.len());
        assert!(below.marks.iter().all(|m| *m <= 0.7));
        assert!(above.marks.iter().all(|m| *m > 0.7));
        let (all, none) = truncate_marks(&s, f64::INFINITY).unwrap();
        assert_eq!(all.len(), s.len());
        assert!(none.is_empty());
        let cst = sample_marked_poisson(&w, 50.0, &RadiusLaw::constant(1.0), &RngSpec::new(13, 1))
            .unwrap();
        let (b, a) = truncate_marks(&cst, 0.5).unwrap();
        assert!(b.is_empty());
        assert_eq!(a.len(), cst.len());
    }

    #[test]
    fn counts_poisson_chisq_and_spatial_uniformity() {
        // Chi-square GoF of counts against Poisson(n|w|), alpha = 0.1%.
        let w = Window::unit_square();
        let law = RadiusLaw::constant(1.0);
        let lam = 20.0;
        let reps = 10_000usize;
        let mut counts = vec![0usize; 64];
        for i in 0..reps {
            let s = sample_marked_poisson(&w, lam, &law, &RngSpec::new(2024, i as u64)).unwrap();
            counts[s.len().min(63)] += 1;
        }
        // Bin the tail so expected counts stay above 5.
        let mut probs = Vec::new();
        let mut p = (-lam).exp();
        let mut acc = p;
        probs.push(p);
        for k in 1..64 {
            p *= lam / k as f64;
            probs.push(p);
            acc += p;
        }
        probs[63] += 1.0 - acc;
        let mut chi2 = 0.0;
        let mut obs_bin = 0.0;
        let mut exp_bin = 0.0;
        let mut df = 0usize;
        for k in 0..64 {
            obs_bin += counts[k] as f64;
            exp_bin += probs[k] * reps as f64;
            if exp_bin >= 5.0 {
                chi2 += (obs_bin - exp_bin).powi(2) / exp_bin;
                df += 1;
                obs_bin = 0.0;
                exp_bin = 0.0;
            }
        }
        if exp_bin > 0.0 {
            chi2 += (obs_bin - exp_bin).powi(2) / exp_bin;
            df += 1;
        }
        let crit = chi_sq_crit_999(df - 1);
        assert!(chi2 < crit, "counts chi2 {chi2:.1} >= {crit:.1} (df {})", df - 1);

        // Spatial uniformity: 4x4 partition of the unit square.
        let mut cells = [0f64; 16];
        let mut total = 0f64;
        for i in 0..200 {
            let s =
                sample_marked_poisson(&w, 500.0, &law, &RngSpec::new(77, i as u64)).unwrap();
            for p in &s.points {
                let ix = ((p.x() * 4.0) as usize).min(3);
                let iy = ((p.y() * 4.0) as usize).min(3);
                cells[4 * ix + iy] += 1.0;
                total += 1.0;
            }
        }
        let expect = total / 16.0;
        let chi2: f64 = cells.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // chi-square 0.999 quantile, 15 df
        assert!(chi2 < 37.697, "spatial chi2 {chi2:.1}");
    }

    fn chi_sq_crit_999(df: usize) -> f64 {
        // Wilson-Hilferty approximation of the 0.999 quantile.
        let z = 3.090_232_306_167_813;
        let d = df as f64;
        d * (1.0 - 2.0 / (9.0 * d) + z * (2.0 / (9.0 * d)).sqrt()).powi(3)
    }

    #[test]
    fn csv_and_sidecar_roundtrip_fields() {
        let w = Window::unit_square();
        let spec = RngSpec::new(3, 1);
        let s = sample_marked_poisson(&w, 10.0, &RadiusLaw::uniform(1.0), &spec).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("x,y,mark\n"));
        assert_eq!(csv.lines().count(), s.len() + 1);
        let sidecar: serde_json::Value = serde_json::from_str(&s.sidecar_json(&spec)).unwrap();
        assert_eq!(sidecar["seed"], 3);
        assert_eq!(sidecar["stream"], 1);
        assert_eq!(sidecar["mark_kind"], "radius");
    }

    #[test]
    fn law_parsing() {
        assert_eq!(RadiusLaw::parse("uniform:1").unwrap(), RadiusLaw::uniform(1.0));
        assert_eq!(RadiusLaw::parse("constant:2.5").unwrap(), RadiusLaw::constant(2.5));
        assert_eq!(RadiusLaw::parse("exp:0.5").unwrap(), RadiusLaw::exponential(0.5));
        assert_eq!(RadiusLaw::parse("pareto:1.5").unwrap(), RadiusLaw::pareto(1.5, 1.0));
        assert_eq!(RadiusLaw::parse("pareto:1.5,2").unwrap(), RadiusLaw::pareto(1.5, 2.0));
        assert!(RadiusLaw::parse("gamma:1").is_err());
        assert!(RadiusLaw::parse("uniform:-1").is_err());
    }

    #[test]
    fn points_stay_in_window() {
        for w in [
            Window::unit_square(),
            Window::disc([0.2, -0.1], 0.6).unwrap(),
            Window::polygon(vec![[0.0, 0.0], [2.0, 0.2], [1.7, 1.5], [0.1, 1.3]]).unwrap(),
        ] {
            let s = sample_marked_poisson(&w, 200.0, &RadiusLaw::constant(1.0), &RngSpec::new(1, 2))
                .unwrap();
            for p in &s.points {
                assert_ne!(w.locate(p, 1e-12), Location::Outside);
            }
        }
    }
}
