//! Stability domains in the `(a, b)` plane for the four delayed controls,
//! the boundary curve `γ` and `ψ = γ₁ ∘ γ₂⁻¹`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::par;
use crate::spectral::{char_system_eq2, count_unstable_roots};
use crate::symgroup::named_group;

/// `γ(s) = ((s²−1)(1+cos(sπ/3)) / (2s sin(sπ/3)), (s²−1) / (s sin(sπ/3)))`
/// for `1 ≤ s < 3`.
pub fn gamma(s: f64) -> Result<(f64, f64)> {
    if !(1.0..3.0).contains(&s) {
        return Err(Error::Domain(format!("γ needs 1 ≤ s < 3, got {s}")));
    }
    let th = s * PI / 3.0;
    let b = (s * s - 1.0) / (s * th.sin());
    Ok((b * (1.0 + th.cos()) / 2.0, b))
}

const PSI_TOL: f64 = 1e-12;

fn psi_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The `s` with `γ₂(s) = b`, by bisection (γ₂ is increasing on `[1, 3)`).
pub fn gamma2_inverse(b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("ψ needs b > 0, got {b}")));
    }
    let (mut lo, mut hi) = (1.0, 3.0);
    while hi - lo > PSI_TOL {
        let mid = 0.5 * (lo + hi);
        if gamma(mid)?.1 < b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ψ(b) = γ₁(γ₂⁻¹(b))`, memoized per `b`.
pub fn psi(b: f64) -> Result<f64> {
    let key = b.to_bits();
    if let Some(v) = psi_cache().lock().ok().and_then(|m| m.get(&key).copied()) {
        return Ok(v);
    }
    let v = gamma(gamma2_inverse(b)?)?.0;
    if let Ok(mut m) = psi_cache().lock() {
        m.insert(key, v);
    }
    Ok(v)
}

/// Shape of a stability domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainSpec {
    /// `k a < b`.
    BLinear { k: u32 },
    /// `a < ψ(b)`.
    PsiBounded,
}

impl DomainSpec {
    pub fn for_group(label: &str) -> Result<Self> {
        match label.trim() {
            "-Z4c" | "-Z3t" => Ok(DomainSpec::BLinear { k: 1 }),
            "+Z4c" => Ok(DomainSpec::BLinear { k: 2 }),
            "+Z3t" => Ok(DomainSpec::PsiBounded),
            other => Err(Error::NoDomain(other.to_string())),
        }
    }

    /// Strict inequality: boundary points are outside.
    pub fn contains(&self, a: f64, b: f64) -> Result<bool> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!("need a, b > 0, got ({a}, {b})")));
        }
        Ok(match *self {
            DomainSpec::BLinear { k } => (k as f64) * a < b,
            DomainSpec::PsiBounded => a < psi(b)?,
        })
    }

    /// Euclidean distance from `(a, b)` to the boundary curve.
    pub fn boundary_distance(&self, a: f64, b: f64) -> f64 {
        match *self {
            DomainSpec::BLinear { k } => {
                let k = k as f64;
                (b - k * a).abs() / (1.0 + k * k).sqrt()
            }
            DomainSpec::PsiBounded => polyline_distance(gamma_polyline(), a, b),
        }
    }
}

pub fn in_domain(label: &str, a: f64, b: f64) -> Result<bool> {
    DomainSpec::for_group(label)?.contains(a, b)
}

/// Dense sample of `γ` on `[1, 3)`, refined towards `s = 3` where `b` blows
/// up; reaches `b` in the thousands.
fn gamma_polyline() -> &'static [(f64, f64)] {
    static LINE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    LINE.get_or_init(|| {
        let n = 20_000;
        (0..n)
            .map(|i| {
                let u = i as f64 / n as f64;
                // s = 3 − 2(1 − u)^2 clusters points near the upper end
                let s = 3.0 - 2.0 * (1.0 - u).powi(2);
                gamma(s.max(1.0)).expect("s in range")
            })
            .collect()
    })
}

fn segment_distance(p: (f64, f64), q: (f64, f64), x: (f64, f64)) -> f64 {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((x.0 - p.0) * dx + (x.1 - p.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (p.0 + t * dx, p.1 + t * dy);
    ((x.0 - cx).powi(2) + (x.1 - cy).powi(2)).sqrt()
}

fn polyline_distance(line: &[(f64, f64)], a: f64, b: f64) -> f64 {
    line.windows(2)
        .map(|w| segment_distance(w[0], w[1], (a, b)))
        .fold(f64::INFINITY, f64::min)
}

/// Sampled points of `γ` on `n` equally spaced `s` in `[1, 3)`.
pub fn gamma_samples(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| gamma(1.0 + 2.0 * i as f64 / n as f64).expect("s in range"))
        .collect()
}

fn orient(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn on_segment(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
    r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
}

fn segments_meet(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// `true` iff no two non-adjacent segments of the polyline through `pts`
/// intersect.
pub fn self_intersection_check(pts: &[(f64, f64)]) -> bool {
    let n = pts.len();
    if n < 4 {
        return true;
    }
    let rows: Vec<usize> = (0..n - 1).collect();
    let hits = par::map(&rows, |&i| {
        ((i + 2)..(n - 1)).any(|j| segments_meet(pts[i], pts[i + 1], pts[j], pts[j + 1]))
    });
    !hits.into_iter().any(|h| h)
}

/// Grid `a_i = a_max·i/n_a`, `b_j = b_max·j/n_b` for `i, j ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub a_max: f64,
    pub b_max: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_a * self.n_b);
        for i in 1..=self.n_a {
            for j in 1..=self.n_b {
                out.push((self.a_max * i as f64 / self.n_a as f64, self.b_max * j as f64 / self.n_b as f64));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainSample {
    pub a: f64,
    pub b: f64,
    pub inside: bool,
    /// Roots with `Re λ > margin` over all eight rows; `None` when the count
    /// failed.
    pub unstable_count: Option<usize>,
    pub boundary_distance: f64,
}

impl DomainSample {
    /// The predicate and the spectrum agree.
    pub fn agrees(&self) -> Option<bool> {
        self.unstable_count.map(|n| self.inside == (n == 0))
    }
}

/// Root margin used for the spectral side of [`sample_domain`].
pub const SAMPLE_MARGIN: f64 = 1e-9;

/// Unstable roots of the controlled equilibrium at `α = α₀`, `T = 2π`.
pub fn spectral_unstable_count(label: &str, a: f64, b: f64) -> Result<usize> {
    let alpha0 = crate::symgroup::branch(label)?.hopf_index as f64 * a;
    let h = named_group(label)?;
    let cs = char_system_eq2(&Params::new(alpha0, a, b), &h, 2.0 * PI)?;
    let mut n = 0;
    for q in &cs.quasi {
        n += count_unstable_roots(q, SAMPLE_MARGIN)?.unstable;
    }
    Ok(n)
}

/// Domain predicate and spectral count on every grid point, in parallel.
pub fn sample_domain(label: &str, grid: &GridSpec) -> Result<Vec<DomainSample>> {
    let spec = DomainSpec::for_group(label)?;
    named_group(label)?;
    let pts = grid.points();
    par::map(&pts, |&(a, b)| {
        Ok(DomainSample {
            a,
            b,
            inside: spec.contains(a, b)?,
            unstable_count: spectral_unstable_count(label, a, b).ok(),
            boundary_distance: spec.boundary_distance(a, b),
        })
    })
    .into_iter()
    .collect()
}

/// CSV `a,b,inside,unstable_count`; a failed count is written as `NA`.
pub fn samples_csv(samples: &[DomainSample]) -> String {
    let mut out = String::from("a,b,inside,unstable_count\n");
    for s in samples {
        let n = s.unstable_count.map_or("NA".to_string(), |n| n.to_string());
        out.push_str(&format!("{:.16e},{:.16e},{},{}\n", s.a, s.b, s.inside, n));
    }
    out
}
