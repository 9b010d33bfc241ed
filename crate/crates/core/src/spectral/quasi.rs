use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `q(λ) = λ² + cλ + 1 − dλe^{−Δλ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiPolynomial {
    pub c: f64,
    pub d: Complex64,
    pub delta: f64,
}

#[derive(Serialize, Deserialize)]
struct Row {
    c: f64,
    d_re: f64,
    d_im: f64,
    delta: f64,
}

impl Serialize for QuasiPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Row {
            c: self.c,
            d_re: self.d.re,
            d_im: self.d.im,
            delta: self.delta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuasiPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Row::deserialize(d)?;
        Ok(QuasiPolynomial::new(r.c, Complex64::new(r.d_re, r.d_im), r.delta))
    }
}

impl QuasiPolynomial {
    /// A zero delay with real `d` is folded into `c`.
    pub fn new(c: f64, d: Complex64, delta: f64) -> Self {
        if delta == 0.0 && d.im == 0.0 {
            Self {
                c: c - d.re,
                d: Complex64::new(0.0, 0.0),
                delta: 0.0,
            }
        } else {
            Self { c, d, delta }
        }
    }

    pub fn quadratic(c: f64) -> Self {
        Self::new(c, Complex64::new(0.0, 0.0), 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * z + z * self.c + 1.0 - self.d * z * (-z * self.delta).exp()
    }

    /// `∂q/∂λ`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let e = (-z * self.delta).exp();
        z * 2.0 + self.c - self.d * e * (1.0 - z * self.delta)
    }

    /// Rough size of the terms of `q(z)`, used to judge when a value is zero.
    fn scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        r * r + self.c.abs() * r + 1.0 + self.d.norm() * r * (-z.re * self.delta).exp()
    }

    /// Every root with `Re λ ≥ −margin` satisfies `|λ| ≤ 1 + |c| + |d|e^{Δ·margin}`:
    /// for `|λ| > 1`, dividing `|λ|² ≤ |c||λ| + 1 + |d||λ|e^{Δ·margin}` by `|λ|`
    /// leaves `|λ| ≤ |c| + |d|e^{Δ·margin} + 1/|λ|`.
    pub fn root_bound(&self, margin: f64) -> f64 {
        1.0 + self.c.abs() + self.d.norm() * (self.delta * margin).exp()
    }
}

pub fn quasipoly_eval(q: &QuasiPolynomial, z: Complex64) -> Complex64 {
    q.eval(z)
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x0, self.y0),
            Complex64::new(self.x1, self.y0),
            Complex64::new(self.x1, self.y1),
            Complex64::new(self.x0, self.y1),
        ]
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn contains(&self, z: Complex64) -> bool {
        z.re > self.x0 && z.re < self.x1 && z.im > self.y0 && z.im < self.y1
    }

    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    fn split(&self, frac: f64) -> (Rect, Rect) {
        if self.x1 - self.x0 >= self.y1 - self.y0 {
            let xm = self.x0 + frac * (self.x1 - self.x0);
            (Rect { x1: xm, ..*self }, Rect { x0: xm, ..*self })
        } else {
            let ym = self.y0 + frac * (self.y1 - self.y0);
            (Rect { y1: ym, ..*self }, Rect { y0: ym, ..*self })
        }
    }
}

const MAX_DEPTH: usize = 60;
const ARG_STEP: f64 = PI / 6.0;

struct Winder<'a> {
    q: &'a QuasiPolynomial,
}

impl Winder<'_> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        let v = self.q.eval(z);
        let tol = 1e-14 * self.q.scale(z);
        if v.norm() <= tol || !v.is_finite() {
            return Err(Error::ContourHit(v.norm()));
        }
        Ok(v)
    }

    /// Change of `arg q` along the segment, refined until every piece turns
    /// by less than `ARG_STEP` and agrees with its midpoint.
    fn segment(&self, z0: Complex64, f0: Complex64, z1: Complex64, f1: Complex64, depth: usize) -> Result<f64> {
        let zm = (z0 + z1) * 0.5;
        let fm = self.value(zm)?;
        let whole = (f1 / f0).arg();
        let a = (fm / f0).arg();
        let b = (f1 / fm).arg();
        if whole.abs() < ARG_STEP && a.abs() < ARG_STEP && b.abs() < ARG_STEP && (a + b - whole).abs() < 1e-9 {
            return Ok(whole);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::ContourHit(fm.norm()));
        }
        Ok(self.segment(z0, f0, zm, fm, depth + 1)? + self.segment(zm, fm, z1, f1, depth + 1)?)
    }

    fn winding(&self, r: &Rect) -> Result<usize> {
        let cs = r.corners();
        let fs = [self.value(cs[0])?, self.value(cs[1])?, self.value(cs[2])?, self.value(cs[3])?];
        let mut total = 0.0;
        for i in 0..4 {
            let j = (i + 1) % 4;
            // a few fixed pieces per edge before adaptive refinement
            let pieces = 8;
            let mut za = cs[i];
            let mut fa = fs[i];
            for p in 1..=pieces {
                let zb = if p == pieces { cs[j] } else { cs[i] + (cs[j] - cs[i]) * (p as f64 / pieces as f64) };
                let fb = if p == pieces { fs[j] } else { self.value(zb)? };
                total += self.segment(za, fa, zb, fb, 0)?;
                za = zb;
                fa = fb;
            }
        }
        let w = total / (2.0 * PI);
        let n = w.round();
        if (w - n).abs() > 1e-6 || n < 0.0 {
            return Err(Error::NonIntegralWinding(w));
        }
        Ok(n as usize)
    }

    fn newton(&self, mut z: Complex64) -> Option<Complex64> {
        for _ in 0..60 {
            let d = self.q.derivative(z);
            if d.norm() == 0.0 {
                return None;
            }
            let step = self.q.eval(z) / d;
            z -= step;
            if !z.is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * z.norm().max(1.0) {
                return Some(z);
            }
        }
        let r = self.q.eval(z).norm() <= 1e-12 * self.q.scale(z);
        r.then_some(z)
    }

    /// Splits `r` until every piece holds one root that Newton finds, or is
    /// so small that its `n` roots are reported as one cluster.
    fn isolate(&self, r: Rect, n: usize, out: &mut Vec<(Complex64, usize)>) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        if n == 1 {
            if let Some(z) = self.newton(r.center()) {
                if r.contains(z) {
                    out.push((z, 1));
                    return Ok(());
                }
            }
        }
        if r.size() < CLUSTER_SIZE * r.center().norm().max(1.0) {
            out.push((r.center(), n));
            return Ok(());
        }
        // off-centre first: a halving line of the conjugate-symmetric contour is
        // the real axis, where real roots sit
        for frac in [0.47, 0.53, 0.41, 0.59, 0.5, 0.37, 0.63] {
            let (lo, hi) = r.split(frac);
            let (Ok(nl), Ok(nh)) = (self.winding(&lo), self.winding(&hi)) else {
                continue;
            };
            if nl + nh != n {
                continue;
            }
            self.isolate(lo, nl, out)?;
            return self.isolate(hi, nh, out);
        }
        // every cut grazes a multiple root: report it whole
        if let Some(z) = self.newton(r.center()).filter(|&z| r.contains(z)) {
            out.push((z, n));
            return Ok(());
        }
        Err(Error::ContourHit(self.q.eval(r.center()).norm()))
    }
}

/// Boxes below this relative size are not split further; a multiple root
/// ends up in one of them.
const CLUSTER_SIZE: f64 = 1e-7;

/// Roots of a quasipolynomial in the half-plane `Re λ > −margin`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCount {
    /// Winding number of the contour around the region.
    pub in_region: usize,
    /// Roots with `Re λ > margin`, counted with multiplicity.
    pub unstable: usize,
    /// Roots with `|Re λ| ≤ margin`.
    pub neutral: usize,
    #[serde(serialize_with = "ser_roots")]
    pub roots: Vec<Complex64>,
}

fn ser_roots<S: serde::Serializer>(r: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    r.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>().serialize(s)
}

/// Counts roots with `Re λ > −margin` by the argument principle on the
/// rectangle `[−margin, R] × [−R, R]`, `R` from [`QuasiPolynomial::root_bound`],
/// then isolates each of them by bisection and Newton. The roots found, with
/// the multiplicities of clusters at numerically multiple roots, must add up
/// to the winding number.
pub fn count_unstable_roots(q: &QuasiPolynomial, margin: f64) -> Result<RootCount> {
    let r = 1.25 * q.root_bound(margin) + 0.5;
    let rect = Rect {
        x0: -margin,
        x1: r,
        y0: -r,
        y1: r,
    };
    let w = Winder { q };
    let n = w.winding(&rect)?;
    let mut found = Vec::with_capacity(n);
    w.isolate(rect, n, &mut found)?;
    // Simple roots come from disjoint boxes. Two of them may only coincide
    // at a numerically multiple root, where q′ vanishes as well.
    let mut merged: Vec<(Complex64, usize)> = Vec::with_capacity(found.len());
    for &(z, m) in &found {
        match merged.iter_mut().find(|(u, _)| (*u - z).norm() <= 1e-10 * z.norm().max(1.0)) {
            Some(slot) => {
                if q.derivative(z).norm() > 1e-6 * q.scale(z) {
                    return Err(Error::RootCountMismatch {
                        winding: n,
                        isolated: merged.len(),
                    });
                }
                slot.1 += m;
            }
            None => merged.push((z, m)),
        }
    }
    let isolated: usize = merged.iter().map(|(_, m)| m).sum();
    if isolated != n {
        return Err(Error::RootCountMismatch { winding: n, isolated });
    }
    let mut roots: Vec<Complex64> = merged.iter().flat_map(|&(z, m)| std::iter::repeat_n(z, m)).collect();
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let unstable = roots.iter().filter(|z| z.re > margin).count();
    Ok(RootCount {
        in_region: n,
        unstable,
        neutral: n - unstable,
        roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_delay_folds() {
        let q = QuasiPolynomial::new(1.0, c(0.25, 0.0), 0.0);
        assert_eq!(q.c, 0.75);
        assert_eq!(q.d, c(0.0, 0.0));
    }

    #[test]
    fn stable_quadratic() {
        let r = count_unstable_roots(&QuasiPolynomial::quadratic(1.0), 1e-9).unwrap();
        assert_eq!((r.in_region, r.unstable), (0, 0));
    }

    #[test]
    fn unstable_quadratic_roots() {
        // λ² − λ + 1: roots (1 ± i√3)/2
        let r = count_unstable_roots(&QuasiPolynomial::quadratic(-1.0), 1e-9).unwrap();
        assert_eq!(r.unstable, 2);
        for z in r.roots {
            assert!((z.re - 0.5).abs() < 1e-12);
            assert!((z.im.abs() - 3f64.sqrt() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_on_axis_are_neutral() {
        let r = count_unstable_roots(&QuasiPolynomial::quadratic(0.0), 1e-9).unwrap();
        assert_eq!((r.in_region, r.unstable, r.neutral), (2, 0, 2));
    }

    #[test]
    fn real_double_root() {
        // (λ − 1)²
        let r = count_unstable_roots(&QuasiPolynomial::quadratic(-2.0), 1e-9).unwrap();
        assert_eq!((r.in_region, r.unstable), (2, 2));
        for z in r.roots {
            assert!((z - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn delayed_roots_satisfy_equation() {
        let q = QuasiPolynomial::new(-0.3, c(0.8, -0.4), 1.7);
        let r = count_unstable_roots(&q, 1e-9).unwrap();
        for z in &r.roots {
            assert!(q.eval(*z).norm() < 1e-10, "{z}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let q = QuasiPolynomial::new(0.4, c(-0.7, 0.3), 1.1);
        let z = c(0.3, 0.8);
        let h = 1e-6;
        let fd = (q.eval(z + h) - q.eval(z - h)) / (2.0 * h);
        assert!((fd - q.derivative(z)).norm() < 1e-8);
    }

    #[test]
    fn json_rows() {
        let q = QuasiPolynomial::new(0.5, c(0.0, -1.0), 1.5);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"c":0.5,"d_re":0.0,"d_im":-1.0,"delta":1.5}"#);
        let back: QuasiPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
