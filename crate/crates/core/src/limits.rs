//! Closed-form content: dimensional constants, limiting CDFs for the cover
//! time and coverage threshold, standardization maps, the radius schedule,
//! Gumbel/TCEV laws, and the consistency transforms against the classical
//! cube-window result.
//!
//! Every CDF here has the shape `F(beta) = exp(-sum_i a_i e^(-beta/s_i))`
//! with positive coefficients; evaluation keeps the sum in log space and
//! exponentiates last, so the far tails neither overflow nor lose the
//! monotone structure.

use crate::processes::RadiusLaw;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum LimitsError {
    BadDimension { d: i64 },
    TheoremSpecMismatch { id: TheoremId, reason: String },
    InfiniteMoment { m: u32 },
    InternalConsistency { what: &'static str, relative_gap: f64 },
    ScaleTooSmall { scale: f64 },
    BadScaleKind { id: TheoremId },
}

impl fmt::Display for LimitsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitsError::BadDimension { d } => write!(f, "invalid dimension {d}"),
            LimitsError::TheoremSpecMismatch { id, reason } => {
                write!(f, "limit law {id} does not apply: {reason}")
            }
            LimitsError::InfiniteMoment { m } => {
                write!(f, "required moment E[Y^{m}] is infinite")
            }
            LimitsError::InternalConsistency { what, relative_gap } => {
                write!(f, "internal cross-check failed for {what} (relative gap {relative_gap:.3e})")
            }
            LimitsError::ScaleTooSmall { scale } => {
                write!(f, "scale parameter {scale} too small (log log undefined)")
            }
            LimitsError::BadScaleKind { id } => {
                write!(f, "limit law {id} expects the other scale kind (intensity vs dilation)")
            }
        }
    }
}

impl std::error::Error for LimitsError {}

// ---------------------------------------------------------------------------
// Gamma function and the dimensional constants.

/// Natural log of the Gamma function, Lanczos approximation (g = 7, 9
/// terms; about 15 significant digits over the positive axis).
pub fn ln_gamma(z: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // Reflection.
        return (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Volume of the unit ball in R^d, with the convention `omega(0) = 1`.
pub fn omega(d: u32) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let df = d as f64;
    ((df / 2.0) * PI.ln() - ln_gamma(1.0 + df / 2.0)).exp()
}

fn ln_omega(d: u32) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let df = d as f64;
    (df / 2.0) * PI.ln() - ln_gamma(1.0 + df / 2.0)
}

fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// The base unrestricted-coverage constant:
/// `(1/d!) (sqrt(pi) Gamma(1 + d/2) / Gamma((d+1)/2))^(d-1)`.
/// In particular `c_1 = c_2 = 1` and `c_3 = 3 pi^2 / 32`; computed in log
/// space so it stays finite out to very large d.
pub fn c_d(d: u32) -> f64 {
    assert!(d >= 1);
    ln_c_d(d).exp()
}

pub fn ln_c_d(d: u32) -> f64 {
    let df = d as f64;
    -ln_factorial(d)
        + (df - 1.0) * (0.5 * PI.ln() + ln_gamma(1.0 + df / 2.0) - ln_gamma((df + 1.0) / 2.0))
}

/// The k-coverage boundary constant for d >= 2, with an internal
/// cross-check of the two published algebraic routes (the second route
/// carries the corrected `1/(d-1)!` factor). Disagreement beyond 1e-10
/// relative is an internal-consistency error.
pub fn c_dk(d: u32, k: u32) -> Result<f64, LimitsError> {
    if d < 2 {
        return Err(LimitsError::BadDimension { d: d as i64 });
    }
    assert!(k >= 1);
    let df = d as f64;
    let kf = k as f64;
    // Route 1: the product-over-omegas definition.
    let ln_v1 = ln_c_d(d - 1)
        + (2.0 - df - 1.0 / df) * ln_omega(d)
        + (2.0 * df - 3.0) * ln_omega(d - 1)
        + (1.0 - df) * ln_omega(d - 2)
        + (df + kf - 3.0 + 1.0 / df) * (1.0 - 1.0 / df).ln()
        + (-1.0 + 1.0 / df) * 2f64.ln()
        - ln_factorial(k - 1);
    // Route 2: the closed Gamma form for k = 1, then the recursion
    // c_{d,k} = c_{d,1} (1 - 1/d)^(k-1) / (k-1)!.
    let ln_v2 = -ln_factorial(d - 1)
        + (1.0 - df) * 2f64.ln()
        + (df - 2.0 + 1.0 / df) * (df - 1.0).ln()
        + (df / 2.0 - 1.0) * PI.ln()
        + (1.0 - df) * ln_gamma((df + 1.0) / 2.0)
        + (df - 1.0 + 1.0 / df) * ln_gamma(df / 2.0)
        + (kf - 1.0) * (1.0 - 1.0 / df).ln()
        - ln_factorial(k - 1);
    let v1 = ln_v1.exp();
    let v2 = ln_v2.exp();
    let gap = (v1 - v2).abs() / v1.abs().max(v2.abs());
    if gap > 1e-10 {
        return Err(LimitsError::InternalConsistency { what: "c_dk", relative_gap: gap });
    }
    Ok(v1)
}

/// Boundary constant of the smooth-window growth-process limit in d >= 2.
pub fn c_prime_d(d: u32) -> Result<f64, LimitsError> {
    if d < 2 {
        return Err(LimitsError::BadDimension { d: d as i64 });
    }
    let df = d as f64;
    let ln_v = ln_c_d(d - 1) + (2.0 * df - 3.0) * ln_omega(d - 1)
        - (df - 1.0) * ln_omega(d - 2)
        - (df - 1.0) * df.ln()
        + ((df - 1.0) / (df + 1.0))
            * (df * (df - 1.0).ln() - 2f64.ln() - df * ln_omega(d));
    Ok(ln_v.exp())
}

/// Moment-weighted boundary constant
/// `c_{d,k} (E[Y^(d-1)])^(d-1) / (E[Y^d])^(d-2+1/d)`.
pub fn c_dky(spec: &ModelSpec) -> Result<f64, LimitsError> {
    let d = spec.d;
    let base = c_dk(d, spec.k)?;
    let m_dm1 = spec.moment(d - 1)?;
    let m_d = spec.moment(d)?;
    let df = d as f64;
    Ok(base * m_dm1.powi(d as i32 - 1) / m_d.powf(df - 2.0 + 1.0 / df))
}

// ---------------------------------------------------------------------------
// Model spec and the limit-law registry.

/// Parameters a limit law is evaluated at. `law = None` means the
/// deterministic unit radius (the growth-process theorems need no law).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: u32,
    pub k: u32,
    pub area: f64,
    pub perimeter: f64,
    pub law: Option<RadiusLaw>,
}

impl ModelSpec {
    pub fn new(d: u32, k: u32, area: f64, perimeter: f64, law: Option<RadiusLaw>) -> Self {
        assert!(d >= 1 && k >= 1 && area >= 0.0 && perimeter >= 0.0);
        ModelSpec { d, k, area, perimeter, law }
    }

    /// `E[Y^m]`, with `law = None` treated as Y identically 1. Infinite
    /// moments are an error here because every formula that calls this
    /// needs them finite.
    pub fn moment(&self, m: u32) -> Result<f64, LimitsError> {
        let v = match &self.law {
            None => 1.0,
            Some(law) => law.moment(m),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(LimitsError::InfiniteMoment { m })
        }
    }
}

/// Registry ids of the limit laws. The short forms used on the command
/// line (`1228a`, `0322b`, ...) match the ids used in the reference
/// derivations of each formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremId {
    /// Unrestricted growth process, any d, intensity scale. Id `1228a`.
    UnrestrictedJm,
    /// Unrestricted growth process, dilation scale. Id `ttaulim`.
    UnrestrictedJmDilation,
    /// Restricted growth process, d = 2, polygonal window. Id `0322b`.
    RestrictedJm2d,
    /// Restricted growth process, d = 2, dilation scale. Id `taulim`.
    RestrictedJm2dDilation,
    /// Restricted growth process, d >= 3, smooth window. Id `Tlim3d`.
    RestrictedJmHighD,
    /// Restricted growth process, d >= 3, dilation scale. Id `taulim3d`.
    RestrictedJmHighDDilation,
    /// Restricted Boolean model, d = 2, polygonal window. Id `0128a`.
    PolygonSpbm2d,
    /// Restricted Boolean model, d >= 3, smooth window. Id `0128b`.
    SmoothSpbmHighD,
    /// Unrestricted Boolean model, any d. Id `0315b`.
    UnrestrictedSpbm,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::UnrestrictedJm,
        TheoremId::UnrestrictedJmDilation,
        TheoremId::RestrictedJm2d,
        TheoremId::RestrictedJm2dDilation,
        TheoremId::RestrictedJmHighD,
        TheoremId::RestrictedJmHighDDilation,
        TheoremId::PolygonSpbm2d,
        TheoremId::SmoothSpbmHighD,
        TheoremId::UnrestrictedSpbm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            TheoremId::UnrestrictedJm => "1228a",
            TheoremId::UnrestrictedJmDilation => "ttaulim",
            TheoremId::RestrictedJm2d => "0322b",
            TheoremId::RestrictedJm2dDilation => "taulim",
            TheoremId::RestrictedJmHighD => "Tlim3d",
            TheoremId::RestrictedJmHighDDilation => "taulim3d",
            TheoremId::PolygonSpbm2d => "0128a",
            TheoremId::SmoothSpbmHighD => "0128b",
            TheoremId::UnrestrictedSpbm => "0315b",
        }
    }

    pub fn parse(s: &str) -> Option<TheoremId> {
        TheoremId::ALL.iter().copied().find(|t| t.label() == s)
    }

    /// Whether the standardization is indexed by an intensity (rho, n,
    /// lambda) or by a window dilation factor L.
    pub fn scale_kind(&self) -> ScaleKind {
        match self {
            TheoremId::UnrestrictedJmDilation
            | TheoremId::RestrictedJm2dDilation
            | TheoremId::RestrictedJmHighDDilation => ScaleKind::Dilation,
            _ => ScaleKind::Intensity,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleKind {
    Intensity,
    Dilation,
}

/// The scale parameter a standardization is taken along.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    /// Seed/grain intensity (rho, n or lambda depending on the law).
    Intensity(f64),
    /// Window dilation factor L.
    Dilation(f64),
}

impl Scale {
    fn value(&self) -> f64 {
        match self {
            Scale::Intensity(v) | Scale::Dilation(v) => *v,
        }
    }

    fn kind(&self) -> ScaleKind {
        match self {
            Scale::Intensity(_) => ScaleKind::Intensity,
            Scale::Dilation(_) => ScaleKind::Dilation,
        }
    }
}

/// A limiting CDF `beta -> exp(-sum_i a_i e^(-beta / s_i))` together with
/// the spec it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLaw {
    /// `(coefficient, inverse scale)` pairs of the exponent terms.
    pub terms: Vec<(f64, f64)>,
    pub descriptor: TheoremId,
    pub params: ModelSpec,
}

impl LimitLaw {
    /// `log F(beta)`; always finite or -inf, never NaN for real beta.
    /// Zero-coefficient terms (e.g. the area term for k >= 2) are skipped
    /// so they cannot poison the sum when the exponential overflows.
    pub fn log_cdf(&self, beta: f64) -> f64 {
        -self
            .terms
            .iter()
            .filter(|(a, _)| *a > 0.0)
            .map(|(a, inv_s)| a * (-beta * inv_s).exp())
            .sum::<f64>()
    }

    pub fn cdf(&self, beta: f64) -> f64 {
        self.log_cdf(beta).exp()
    }

    /// Inverse CDF by bisection on the monotone evaluator.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0);
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo) > p {
            lo *= 2.0;
        }
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Build the limiting CDF for a registry id at the given spec.
pub fn limit_cdf(which: TheoremId, spec: &ModelSpec) -> Result<LimitLaw, LimitsError> {
    let d = spec.d;
    let df = d as f64;
    let mismatch = |reason: &str| LimitsError::TheoremSpecMismatch {
        id: which,
        reason: reason.to_string(),
    };
    let terms = match which {
        TheoremId::UnrestrictedJm | TheoremId::UnrestrictedJmDilation => {
            if spec.area <= 0.0 {
                return Err(mismatch("needs |A| > 0"));
            }
            let a = c_d(d) * (df.powi(d as i32) * omega(d)).powf(-1.0 / (df + 1.0)) * spec.area;
            vec![(a, 1.0 / (df + 1.0))]
        }
        TheoremId::RestrictedJm2d | TheoremId::RestrictedJm2dDilation => {
            if d != 2 {
                return Err(mismatch("needs d = 2"));
            }
            let a1 = (4.0 * PI).powf(-1.0 / 3.0) * spec.area;
            let a2 = (2.0 * PI * PI).powf(-1.0 / 3.0) * spec.perimeter;
            vec![(a1, 1.0 / 3.0), (a2, 1.0 / 6.0)]
        }
        TheoremId::RestrictedJmHighD | TheoremId::RestrictedJmHighDDilation => {
            if d < 3 {
                return Err(mismatch("needs d >= 3 (use the d = 2 law instead)"));
            }
            let a = c_prime_d(d)? * spec.perimeter;
            vec![(a, 1.0 / (2.0 * df + 2.0))]
        }
        TheoremId::PolygonSpbm2d => {
            if d != 2 {
                return Err(mismatch("needs d = 2"));
            }
            let m1 = spec.moment(1)?;
            let m2 = spec.moment(2)?;
            let area_coeff = if spec.k == 1 { m1 * m1 / m2 * spec.area } else { 0.0 };
            let c2k = c_dk(2, spec.k)?;
            let per_coeff = c2k * m1 / m2.sqrt() * spec.perimeter;
            vec![(area_coeff, 1.0), (per_coeff, 0.5)]
        }
        TheoremId::SmoothSpbmHighD => {
            if d < 3 {
                return Err(mismatch("needs d >= 3 (use the polygon law instead)"));
            }
            vec![(c_dky(spec)? * spec.perimeter, 0.5)]
        }
        TheoremId::UnrestrictedSpbm => {
            let m_dm1 = spec.moment(d - 1)?;
            let m_d = spec.moment(d)?;
            let a = c_d(d) * m_dm1.powi(d as i32)
                / ((ln_factorial(spec.k - 1)).exp() * m_d.powi(d as i32 - 1))
                * spec.area;
            vec![(a, 1.0)]
        }
    };
    Ok(LimitLaw { terms, descriptor: which, params: spec.clone() })
}

/// The standardized value whose comparison against the limit CDF the
/// corresponding theorem asserts: e.g. for the d = 2 restricted growth
/// process at intensity rho, `pi rho T^3 - 2 log rho - 4 log log rho`.
pub fn standardize(
    value: f64,
    scale: Scale,
    which: TheoremId,
    spec: &ModelSpec,
) -> Result<f64, LimitsError> {
    if scale.kind() != which.scale_kind() {
        return Err(LimitsError::BadScaleKind { id: which });
    }
    let s = scale.value();
    if s <= std::f64::consts::E {
        return Err(LimitsError::ScaleTooSmall { scale: s });
    }
    let d = spec.d;
    let df = d as f64;
    let ls = s.ln();
    let lls = ls.ln();
    Ok(match which {
        TheoremId::UnrestrictedJm => {
            omega(d) * s * value.powi(d as i32 + 1) - df * ls - df * df * lls
        }
        TheoremId::UnrestrictedJmDilation => {
            omega(d) * value.powi(d as i32 + 1)
                - df * (df + 1.0) * ls
                - df * df * lls
                - df * df * (df + 1.0).ln()
        }
        TheoremId::RestrictedJm2d => {
            if d != 2 {
                return Err(LimitsError::TheoremSpecMismatch {
                    id: which,
                    reason: "needs d = 2".into(),
                });
            }
            PI * s * value.powi(3) - 2.0 * ls - 4.0 * lls
        }
        TheoremId::RestrictedJm2dDilation => {
            if d != 2 {
                return Err(LimitsError::TheoremSpecMismatch {
                    id: which,
                    reason: "needs d = 2".into(),
                });
            }
            PI * value.powi(3) - 6.0 * ls - 4.0 * lls - 81f64.ln()
        }
        TheoremId::RestrictedJmHighD => {
            omega(d) * s * value.powi(d as i32 + 1)
                - 2.0 * (df - 1.0) * ls
                - 2.0 * df * (df - 1.0) * lls
        }
        TheoremId::RestrictedJmHighDDilation => {
            omega(d) * value.powi(d as i32 + 1)
                - 2.0 * (df * df - 1.0) * ls
                - 2.0 * df * (df - 1.0) * lls
                - 2.0 * df * (df - 1.0) * (df + 1.0).ln()
        }
        TheoremId::PolygonSpbm2d => {
            if d != 2 {
                return Err(LimitsError::TheoremSpecMismatch {
                    id: which,
                    reason: "needs d = 2".into(),
                });
            }
            let m2 = spec.moment(2)?;
            s * PI * value * value * m2 - ls - (2.0 * spec.k as f64 - 1.0) * lls
        }
        TheoremId::SmoothSpbmHighD => {
            let md = spec.moment(d)?;
            s * omega(d) * value.powi(d as i32) * md
                - (2.0 - 2.0 / df) * ls
                - 2.0 * (df + spec.k as f64 - 3.0 + 1.0 / df) * lls
        }
        TheoremId::UnrestrictedSpbm => {
            let md = spec.moment(d)?;
            s * omega(d) * md * value.powi(d as i32)
                - ls
                - (df + spec.k as f64 - 2.0) * lls
        }
    })
}

/// The radius schedule that centres the restricted-model k-coverage
/// probability: the inverse of [`standardize`] for the Boolean-model laws,
/// with negative brackets clipped to zero.
pub fn rn_schedule(n: f64, spec: &ModelSpec, beta: f64) -> Result<f64, LimitsError> {
    if n <= std::f64::consts::E {
        return Err(LimitsError::ScaleTooSmall { scale: n });
    }
    let d = spec.d;
    let df = d as f64;
    let md = spec.moment(d)?;
    let bracket = (2.0 - 2.0 / df) * n.ln()
        + 2.0 * (df + spec.k as f64 - 3.0 + 1.0 / df) * n.ln().ln()
        + beta;
    Ok((bracket.max(0.0) / (n * omega(d) * md)).powf(1.0 / df))
}

// ---------------------------------------------------------------------------
// Gumbel and the two-component extreme value law.

/// Standard Gumbel CDF `exp(-e^(-x))`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Standard Gumbel draw via inversion.
pub fn gumbel_sample<R: Rng>(rng: &mut R) -> f64 {
    let mut u: f64 = rng.random();
    if u <= 0.0 {
        u = f64::MIN_POSITIVE;
    }
    -(-u.ln()).ln()
}

/// One draw of the two-component extreme value variable of the d = 2
/// restricted growth limit:
/// `max(3(G + log|A|) - log(4 pi), 6(G' + log|dA|) - log(4 pi^4))` with
/// independent standard Gumbels G, G'. Its CDF is exactly the `0322b` law.
pub fn tcev_sample<R: Rng>(spec: &ModelSpec, rng: &mut R) -> f64 {
    assert!(spec.area > 0.0 && spec.perimeter > 0.0);
    let g1 = gumbel_sample(rng);
    let g2 = gumbel_sample(rng);
    let area_part = 3.0 * (g1 + spec.area.ln()) - (4.0 * PI).ln();
    let per_part = 6.0 * (g2 + spec.perimeter.ln()) - (4.0 * PI.powi(4)).ln();
    area_part.max(per_part)
}

// ---------------------------------------------------------------------------
// Consistency transforms against the classical cube-window statement.

fn chiu_c(l: f64, d: u32) -> Result<f64, LimitsError> {
    if l <= std::f64::consts::E {
        return Err(LimitsError::ScaleTooSmall { scale: l });
    }
    let df = d as f64;
    let c = df * (df + 1.0) * l.ln() - ln_omega(d);
    if c <= 1.0 {
        return Err(LimitsError::ScaleTooSmall { scale: l });
    }
    Ok(c)
}

/// Left-hand standardization of the classical cube-window statement at
/// dilation L: `c^(d/(d+1)) omega_d^(1/(d+1)) tau - c - log(c^(1/(d+1))
/// ((c + log c)/(d+1))^(d-1))` with `c = d(d+1) log L - log omega_d`.
pub fn chiu_transform(tau: f64, l: f64, d: u32) -> Result<f64, LimitsError> {
    let c = chiu_c(l, d)?;
    let df = d as f64;
    let shift = (c.powf(1.0 / (df + 1.0)) * ((c + c.ln()) / (df + 1.0)).powi(d as i32 - 1)).ln();
    Ok(c.powf(df / (df + 1.0)) * omega(d).powf(1.0 / (df + 1.0)) * tau - c - shift)
}

/// The classical limit CDF `exp(-c_d (d+1)^(d-1) d^(-d) e^(-u))`.
pub fn chiu_f(u: f64, d: u32) -> f64 {
    let df = d as f64;
    (-(c_d(d) * (df + 1.0).powi(d as i32 - 1) * df.powi(-(d as i32)) * (-u).exp())).exp()
}

/// Difference between the tau-threshold solving the classical standardized
/// inequality at level `u` and the tau-threshold solving the unrestricted
/// dilation-scale inequality at the corresponding level
/// `(d+1) u + log(d^(d^2) (d+1) / omega_d)`. Vanishes as L grows.
pub fn chiu_gap(l: f64, u: f64, d: u32) -> Result<f64, LimitsError> {
    let c = chiu_c(l, d)?;
    let df = d as f64;
    let shift = (c.powf(1.0 / (df + 1.0)) * ((c + c.ln()) / (df + 1.0)).powi(d as i32 - 1)).ln();
    let tau_classical = (c + shift + u) / (c.powf(df / (df + 1.0)) * omega(d).powf(1.0 / (df + 1.0)));
    let beta =
        (df + 1.0) * u + (df * df * df.ln() + (df + 1.0).ln() - ln_omega(d));
    let tau_ours = ((df * (df + 1.0) * l.ln() + df * df * l.ln().ln() + beta) / omega(d))
        .powf(1.0 / (df + 1.0));
    Ok(tau_classical - tau_ours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::RngSpec;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn constants_exact() {
        assert!(rel_err(omega(0), 1.0) < 1e-12);
        assert!(rel_err(omega(1), 2.0) < 1e-12);
        assert!(rel_err(omega(2), PI) < 1e-12);
        assert!(rel_err(omega(3), 4.0 * PI / 3.0) < 1e-12);
        assert!(rel_err(c_d(1), 1.0) < 1e-12);
        assert!(rel_err(c_d(2), 1.0) < 1e-12);
        assert!(rel_err(c_d(3), 3.0 * PI * PI / 32.0) < 1e-12);
        assert!(rel_err(c_dk(2, 1).unwrap(), 1.0 / PI.sqrt()) < 1e-12);
        assert!(rel_err(c_dk(3, 1).unwrap(), PI.powf(5.0 / 3.0) / 16.0) < 1e-12);
    }

    #[test]
    fn c_dk_recursion_and_explicit_2d_form() {
        // c_{2,k} = pi^(-1/2) (1/2)^(k-1) / (k-1)!.
        let mut fact = 1.0;
        for k in 1..=6u32 {
            if k > 1 {
                fact *= (k - 1) as f64;
            }
            let want = (1.0 / PI.sqrt()) * 0.5f64.powi(k as i32 - 1) / fact;
            assert!(rel_err(c_dk(2, k).unwrap(), want) < 1e-12, "k={k}");
        }
        // Recursion against k = 1 across dimensions.
        for d in 2..=10u32 {
            let c1 = c_dk(d, 1).unwrap();
            let mut fact = 1.0;
            for k in 1..=5u32 {
                if k > 1 {
                    fact *= (k - 1) as f64;
                }
                let want = c1 * (1.0 - 1.0 / d as f64).powi(k as i32 - 1) / fact;
                assert!(rel_err(c_dk(d, k).unwrap(), want) < 1e-10, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn c_d_asymptotic_trend() {
        // The ratio c_d^(1/d) / (e sqrt(pi/(2d))) tends to 1 from below,
        // like 1 - O(log d / d). Frozen high-precision reference values:
        // 0.908220 (d=50), 0.969501 (d=200), 0.998119 (d=5000).
        let ratio = |d: u32| {
            (ln_c_d(d) / d as f64).exp()
                / (std::f64::consts::E * (PI / (2.0 * d as f64)).sqrt())
        };
        assert!(rel_err(ratio(50), 0.9082199289363843) < 1e-10);
        assert!(rel_err(ratio(200), 0.9695011920239696) < 1e-10);
        assert!(rel_err(ratio(5000), 0.9981193726507342) < 1e-9);
        let mut prev = ratio(50);
        for d in [100u32, 200, 500, 1000, 5000] {
            let r = ratio(d);
            assert!(r > prev && r < 1.0, "d={d}: {r}");
            prev = r;
        }
    }

    #[test]
    fn c_prime_d_values_and_alternative_route() {
        // d = 2 closed form: (2 pi^2)^(-1/3), matching the perimeter
        // coefficient of the d = 2 restricted limit.
        let want2 = (2.0 * PI * PI).powf(-1.0 / 3.0);
        assert!(rel_err(c_prime_d(2).unwrap(), want2) < 1e-12);
        // Independent route via c_{d,1}:
        // c'_d = c_{d,1} d^(1/d - 1) (2(d-1)/omega_d)^((d-1)/(d(d+1))).
        for d in 2..=12u32 {
            let df = d as f64;
            let alt = c_dk(d, 1).unwrap()
                * df.powf(1.0 / df - 1.0)
                * (2.0 * (df - 1.0) / omega(d)).powf((df - 1.0) / (df * (df + 1.0)));
            assert!(
                rel_err(c_prime_d(d).unwrap(), alt) < 1e-10,
                "d={d}: {} vs {alt}",
                c_prime_d(d).unwrap()
            );
        }
        for d in 2..=50u32 {
            let v = c_prime_d(d).unwrap();
            assert!(v.is_finite() && v > 0.0, "d={d}");
        }
    }

    #[test]
    fn c_dky_reductions() {
        // Unit radius reduces to c_{d,k}.
        for d in 2..=5u32 {
            for k in 1..=3u32 {
                let spec = ModelSpec::new(d, k, 1.0, 1.0, None);
                assert!(rel_err(c_dky(&spec).unwrap(), c_dk(d, k).unwrap()) < 1e-12);
            }
        }
        // Uniform law, d = 3, k = 1: moments are 1/(m+1).
        let spec = ModelSpec::new(3, 1, 1.0, 1.0, Some(RadiusLaw::uniform(1.0)));
        let want = c_dk(3, 1).unwrap() * (1.0 / 3.0f64).powi(2) / (0.25f64).powf(4.0 / 3.0);
        assert!(rel_err(c_dky(&spec).unwrap(), want) < 1e-12);
        // Heavy tail: E[Y^3] infinite.
        let spec = ModelSpec::new(3, 1, 1.0, 1.0, Some(RadiusLaw::pareto(2.5, 1.0)));
        assert!(matches!(c_dky(&spec), Err(LimitsError::InfiniteMoment { m: 3 })));
    }

    #[test]
    fn limit_cdf_examples() {
        let square = ModelSpec::new(2, 1, 1.0, 4.0, None);
        let law = limit_cdf(TheoremId::RestrictedJm2d, &square).unwrap();
        assert!(law.cdf(1e3) > 1.0 - 1e-12);
        assert!(law.cdf(-1e3) < 1e-12);

        // Unrestricted law at d = 2, |A| = 1, beta = 0.
        let la = limit_cdf(TheoremId::UnrestrictedJm, &square).unwrap();
        let want = (-(4.0 * PI).powf(-1.0 / 3.0)).exp();
        assert!(rel_err(la.cdf(0.0), want) < 1e-12);

        // k = 2 kills the area term of the 2D Boolean law.
        let spec_k2 =
            ModelSpec::new(2, 2, 1.0, 4.0, Some(RadiusLaw::uniform(1.0)));
        let l2 = limit_cdf(TheoremId::PolygonSpbm2d, &spec_k2).unwrap();
        assert_eq!(l2.terms[0].0, 0.0);
        let spec_k1 =
            ModelSpec::new(2, 1, 1.0, 4.0, Some(RadiusLaw::uniform(1.0)));
        let l1 = limit_cdf(TheoremId::PolygonSpbm2d, &spec_k1).unwrap();
        assert!(l1.terms[0].0 > 0.0);

        // Mismatches are rejected.
        assert!(limit_cdf(TheoremId::RestrictedJmHighD, &square).is_err());
        let spec3 = ModelSpec::new(3, 1, 1.0, 6.0, None);
        assert!(limit_cdf(TheoremId::RestrictedJm2d, &spec3).is_err());
    }

    #[test]
    fn limit_laws_monotone_with_proper_tails() {
        let specs = [
            (TheoremId::UnrestrictedJm, ModelSpec::new(2, 1, 1.0, 4.0, None)),
            (TheoremId::RestrictedJm2d, ModelSpec::new(2, 1, 1.0, 4.0, None)),
            (TheoremId::RestrictedJmHighD, ModelSpec::new(3, 1, 1.0, 6.0, None)),
            (
                TheoremId::PolygonSpbm2d,
                ModelSpec::new(2, 2, 1.0, 4.0, Some(RadiusLaw::uniform(1.0))),
            ),
            (
                TheoremId::SmoothSpbmHighD,
                ModelSpec::new(3, 1, 1.0, 6.0, Some(RadiusLaw::exponential(2.0))),
            ),
            (
                TheoremId::UnrestrictedSpbm,
                ModelSpec::new(2, 1, 1.0, 4.0, Some(RadiusLaw::uniform(1.0))),
            ),
        ];
        for (id, spec) in specs {
            let law = limit_cdf(id, &spec).unwrap();
            let mut prev = 0.0;
            for i in 0..10_000 {
                let beta = -40.0 + 80.0 * i as f64 / 9999.0;
                let v = law.cdf(beta);
                assert!(v >= prev, "{id}: not monotone at {beta}");
                assert!((0.0..=1.0).contains(&v));
                prev = v;
            }
            assert!(law.cdf(-1e4) == 0.0 || law.cdf(-1e4) < 1e-200);
            assert!(law.cdf(1e4) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn standardize_inversions() {
        let spec2 = ModelSpec::new(2, 1, 1.0, 4.0, None);
        // Solve pi rho T^3 = 2 log rho + 4 log log rho for beta = 0.
        let rho = 5_000.0f64;
        let t = ((2.0 * rho.ln() + 4.0 * rho.ln().ln()) / (PI * rho)).powf(1.0 / 3.0);
        let b = standardize(t, Scale::Intensity(rho), TheoremId::RestrictedJm2d, &spec2).unwrap();
        assert!(b.abs() < 1e-9, "{b}");

        // d = 3 form: omega_3 rho T^4 - 4 log rho - 12 log log rho.
        let spec3 = ModelSpec::new(3, 1, 1.0, 6.0, None);
        let v = 0.21f64;
        let got =
            standardize(v, Scale::Intensity(rho), TheoremId::RestrictedJmHighD, &spec3).unwrap();
        let want = omega(3) * rho * v.powi(4) - 4.0 * rho.ln() - 12.0 * rho.ln().ln();
        assert!((got - want).abs() < 1e-12);

        // Scale-kind mismatch and tiny scales are rejected.
        assert!(standardize(t, Scale::Dilation(10.0), TheoremId::RestrictedJm2d, &spec2).is_err());
        assert!(standardize(t, Scale::Intensity(2.0), TheoremId::RestrictedJm2d, &spec2).is_err());
    }

    #[test]
    fn standardization_same_for_restricted_and_unrestricted_2d() {
        // The intensity-scale standardization is one map for both d = 2
        // growth limits.
        let spec = ModelSpec::new(2, 1, 1.0, 4.0, None);
        for (t, rho) in [(0.1, 100.0), (0.05, 1e4), (0.2, 55.0)] {
            let a = standardize(t, Scale::Intensity(rho), TheoremId::RestrictedJm2d, &spec)
                .unwrap();
            let b = standardize(t, Scale::Intensity(rho), TheoremId::UnrestrictedJm, &spec)
                .unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_and_intensity_standardizations_agree_via_scaling() {
        // With rho = L^(d+1) and tau = L T, the dilation-scale form equals
        // the intensity-scale form; checked numerically on random pairs.
        let spec = ModelSpec::new(2, 1, 1.0, 4.0, None);
        let mut rng = RngSpec::new(9, 9).rng();
        use rand::Rng as _;
        for _ in 0..100 {
            let l = 20.0 + 300.0 * rng.random::<f64>();
            let rho = l.powi(3);
            let t = 0.4 * rng.random::<f64>() / l.powf(0.5);
            let tau = l * t;
            let a =
                standardize(tau, Scale::Dilation(l), TheoremId::RestrictedJm2dDilation, &spec)
                    .unwrap();
            let b = standardize(t, Scale::Intensity(rho), TheoremId::RestrictedJm2d, &spec)
                .unwrap();
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            let a =
                standardize(tau, Scale::Dilation(l), TheoremId::UnrestrictedJmDilation, &spec)
                    .unwrap();
            let b =
                standardize(t, Scale::Intensity(rho), TheoremId::UnrestrictedJm, &spec).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // Same identity for the d = 3 pair.
        let spec3 = ModelSpec::new(3, 1, 1.0, 6.0, None);
        for _ in 0..100 {
            let l = 20.0 + 100.0 * rng.random::<f64>();
            let rho = l.powi(4);
            let t = 0.3 * rng.random::<f64>() / l.powf(0.6);
            let tau = l * t;
            let a = standardize(
                tau,
                Scale::Dilation(l),
                TheoremId::RestrictedJmHighDDilation,
                &spec3,
            )
            .unwrap();
            let b = standardize(t, Scale::Intensity(rho), TheoremId::RestrictedJmHighD, &spec3)
                .unwrap();
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn rn_schedule_inverts_and_clips() {
        let spec = ModelSpec::new(2, 1, 1.0, 4.0, Some(RadiusLaw::constant(1.0)));
        let n = 2_000.0;
        for beta in [-3.0, 0.0, 2.0, 10.0] {
            let r = rn_schedule(n, &spec, beta).unwrap();
            // Plugging back: n pi r^2 = log n + log log n + beta for k=1.
            let lhs = n * PI * r * r;
            let rhs = n.ln() + n.ln().ln() + beta;
            assert!((lhs - rhs).abs() < 1e-9, "beta={beta}");
            let b2 =
                standardize(r, Scale::Intensity(n), TheoremId::PolygonSpbm2d, &spec).unwrap();
            assert!((b2 - beta).abs() < 1e-9);
        }
        // Extreme negative beta clips to r = 0.
        assert_eq!(rn_schedule(n, &spec, -1e9).unwrap(), 0.0);
        // Infinite d-th moment is an error.
        let heavy = ModelSpec::new(2, 1, 1.0, 4.0, Some(RadiusLaw::pareto(1.5, 1.0)));
        assert!(rn_schedule(n, &heavy, 0.0).is_err());
    }

    #[test]
    fn gumbel_and_tcev() {
        assert!(rel_err(gumbel_cdf(0.0), (-1.0f64).exp()) < 1e-15);
        // TCEV sample CDF equals the d = 2 restricted law: the max of the
        // two shifted Gumbels has exactly the two-term product CDF.
        let spec = ModelSpec::new(2, 1, 1.0, 4.0, None);
        let law = limit_cdf(TheoremId::RestrictedJm2d, &spec).unwrap();
        for beta in [-4.0, 0.0, 3.0, 8.0, 15.0] {
            let direct = gumbel_cdf((beta + (4.0 * PI).ln()) / 3.0 - spec.area.ln())
                * gumbel_cdf((beta + (4.0 * PI.powi(4)).ln()) / 6.0 - spec.perimeter.ln());
            assert!(rel_err(law.cdf(beta), direct) < 1e-12, "beta={beta}");
        }
        let mut rng = RngSpec::new(17, 0).rng();
        let n = 200_000usize;
        let mut samples: Vec<f64> = (0..n).map(|_| tcev_sample(&spec, &mut rng)).collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut sup: f64 = 0.0;
        for (i, x) in samples.iter().enumerate() {
            let f = law.cdf(*x);
            sup = sup.max((f - i as f64 / n as f64).abs());
            sup = sup.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        assert!(sup < 0.004, "sup distance {sup}");
        // Degenerate perimeter keeps only the area Gumbel component.
        let area_only = LimitLaw {
            terms: vec![((4.0 * PI).powf(-1.0 / 3.0), 1.0 / 3.0)],
            descriptor: TheoremId::RestrictedJm2d,
            params: spec.clone(),
        };
        let spec_tiny = ModelSpec::new(2, 1, 1.0, 1e-12, None);
        let law_tiny = limit_cdf(TheoremId::RestrictedJm2d, &spec_tiny).unwrap();
        for beta in [-2.0, 0.0, 4.0] {
            assert!((law_tiny.cdf(beta) - area_only.cdf(beta)).abs() < 1e-10);
        }
    }

    #[test]
    fn derivation_chain_identity() {
        // The d = 2 restricted growth limit equals the 2D Boolean-model
        // law with k = 1 and uniform radii, composed with the beta shift
        // of the uniform-radius reduction.
        let spec_jm = ModelSpec::new(2, 1, 1.0, 4.0, None);
        let jm = limit_cdf(TheoremId::RestrictedJm2d, &spec_jm).unwrap();
        let spec_bm = ModelSpec::new(2, 1, 1.0, 4.0, Some(RadiusLaw::uniform(1.0)));
        let bm = limit_cdf(TheoremId::PolygonSpbm2d, &spec_bm).unwrap();
        let shift = -(16.0 / (27.0 * PI)).powf(1.0 / 3.0).ln();
        let mut beta = -10.0;
        while beta <= 20.0 {
            let lhs = jm.cdf(beta);
            let rhs = bm.cdf(beta / 3.0 + shift);
            assert!((lhs - rhs).abs() < 1e-10, "beta={beta}: {lhs} vs {rhs}");
            beta += 0.01;
        }
    }

    #[test]
    fn classical_consistency_transforms() {
        for d in [2u32, 3] {
            let df = d as f64;
            // chiu_f matches its closed form.
            for u in [-2.0f64, 0.0, 2.0] {
                let want =
                    (-(c_d(d) * (df + 1.0).powi(d as i32 - 1) / df.powi(d as i32) * (-u).exp()))
                        .exp();
                assert!(rel_err(chiu_f(u, d), want) < 1e-12);
            }
            // The gap shrinks with L, for every tested level.
            for u in [-2.0, 0.0, 2.0] {
                let gaps: Vec<f64> = [1e3, 1e4, 1e6, 1e8]
                    .iter()
                    .map(|l| chiu_gap(*l, u, d).unwrap().abs())
                    .collect();
                for w in gaps.windows(2) {
                    assert!(w[1] < w[0], "d={d} u={u}: {gaps:?}");
                }
            }
            // chiu_transform inverts the threshold construction.
            let l = 1e5;
            let u = 0.7;
            let c = chiu_c(l, d).unwrap();
            let shift =
                (c.powf(1.0 / (df + 1.0)) * ((c + c.ln()) / (df + 1.0)).powi(d as i32 - 1)).ln();
            let tau = (c + shift + u) / (c.powf(df / (df + 1.0)) * omega(d).powf(1.0 / (df + 1.0)));
            assert!((chiu_transform(tau, l, d).unwrap() - u).abs() < 1e-9);
        }
        assert!(chiu_transform(1.0, 2.0, 2).is_err());
    }

    #[test]
    fn theorem_id_labels_roundtrip() {
        for id in TheoremId::ALL {
            assert_eq!(TheoremId::parse(id.label()), Some(id));
        }
        assert_eq!(TheoremId::parse("nope"), None);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let spec = ModelSpec::new(2, 1, 1.0, 4.0, None);
        let law = limit_cdf(TheoremId::RestrictedJm2d, &spec).unwrap();
        for p in [0.01, 0.3, 0.5, 0.9, 0.999] {
            let q = law.quantile(p);
            assert!((law.cdf(q) - p).abs() < 1e-9);
        }
    }
}
