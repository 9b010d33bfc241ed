//! Linear stability of the controlled equilibrium in isotypical coordinates.
//!
//! Writing `x = Q y` block-diagonalizes the linearization at the origin: on
//! the channel `W_{k+1}` the uncontrolled rate is `α − k a`, and the averaged
//! gain becomes a normal matrix whose eigenvalues `ν` are zero or roots of
//! unity. Each coordinate then obeys
//! `λ² + (b + k a − α)λ + 1 − bνλe^{−t₀Tλ} = 0`.

mod basis;
mod center;
mod quasi;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{control_matrix, interaction_matrix, ControlLaw, ControlSpec, Params};
use crate::symgroup::{Mat8, SymGroup, N};

pub use basis::{isotypical_basis, IsotypicalBasis, CHANNEL_EIGENVALUES, CHANNEL_RANGES, COORD_CHANNEL};
pub use center::{center_fixed_dim, center_fixed_dims, CenterDims};
pub use quasi::{count_unstable_roots, quasipoly_eval, QuasiPolynomial, RootCount};

/// Tolerance for the block structure of averaged gains.
const BLOCK_TOL: f64 = 1e-10;

/// Linear part `αI + (a/2)𝓑` at the origin.
pub fn linear_part(p: &Params) -> Mat8 {
    Mat8::identity() * p.alpha + interaction_matrix() * (0.5 * p.a)
}

/// One isotypical coordinate: its channel index `k` and the eigenvalue `ν`
/// of the averaged gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharRow {
    pub channel: usize,
    #[serde(serialize_with = "ser_c")]
    pub nu: Complex64,
}

fn ser_c<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    (z.re, z.im).serialize(s)
}

impl CharRow {
    /// Row quasipolynomial at the given `α` and period.
    pub fn quasi(&self, p: &Params, delay_fraction: f64, period: f64) -> QuasiPolynomial {
        let c = p.b + self.channel as f64 * p.a - p.alpha;
        QuasiPolynomial::new(c, self.nu * p.b, delay_fraction * period)
    }
}

/// The eight characteristic rows of a Pyragas-controlled equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct CharSystem {
    pub group: Option<String>,
    pub params: Params,
    pub period: f64,
    pub delay_fraction: f64,
    pub rows: [CharRow; N],
    pub quasi: [QuasiPolynomial; N],
}

impl CharSystem {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.quasi.iter().map(|q| q.eval(z)).product()
    }

    /// Same rows at another parameter point.
    pub fn at(&self, p: &Params, period: f64) -> CharSystem {
        let quasi = self.rows.map(|r| r.quasi(p, self.delay_fraction, period));
        CharSystem {
            params: *p,
            period,
            quasi,
            ..self.clone()
        }
    }

    /// Unstable roots over all rows, with the row index (1-based) of each.
    pub fn count_unstable(&self, margin: f64) -> Result<Vec<RootCount>> {
        self.quasi.iter().map(|q| count_unstable_roots(q, margin)).collect()
    }

    /// CSV `re,im,channel` of every root with `Re λ > −margin`; `channel` is
    /// the 1-based row.
    pub fn roots_csv(&self, margin: f64) -> Result<String> {
        let mut out = String::from("re,im,channel\n");
        for (i, rc) in self.count_unstable(margin)?.iter().enumerate() {
            for z in &rc.roots {
                out.push_str(&format!("{:.16e},{:.16e},{}\n", z.re, z.im, i + 1));
            }
        }
        Ok(out)
    }
}

fn snap_root_of_unity(z: Complex64) -> Complex64 {
    if z.norm() < 1e-9 {
        return Complex64::new(0.0, 0.0);
    }
    for n in 1..=24i64 {
        let k = (z.arg() * n as f64 / (2.0 * PI)).round() as i64;
        let r = num_rational::Ratio::new(k.rem_euclid(n), n);
        let exact = match (*r.numer(), *r.denom()) {
            (0, _) => Complex64::new(1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            (p, q) => Complex64::from_polar(1.0, 2.0 * PI * p as f64 / q as f64),
        };
        if (exact - z).norm() < 1e-9 {
            return exact;
        }
    }
    z
}

fn channel_block(m: &Mat8, k: usize) -> DMatrix<f64> {
    let r = CHANNEL_RANGES[k].clone();
    DMatrix::from_fn(r.len(), r.len(), |i, j| m[(r.start + i, r.start + j)])
}

/// Eigenvalues of the averaged gain on each coordinate, per channel sorted
/// by argument (descending, in `(−π, π]`) with zeros last.
fn gain_rows(iso: &IsotypicalBasis, avg: &Mat8) -> Result<[CharRow; N]> {
    let off = iso.off_block(avg);
    if off > BLOCK_TOL {
        return Err(Error::NotBlockDiagonal(off));
    }
    let t = iso.conjugate(avg);
    let mut rows = [CharRow {
        channel: 0,
        nu: Complex64::new(0.0, 0.0),
    }; N];
    for k in 0..4 {
        let block = channel_block(&t, k);
        // a normal block: ‖MᵀM − MMᵀ‖ must vanish
        let defect = (block.transpose() * &block - &block * block.transpose()).amax();
        if defect > BLOCK_TOL {
            return Err(Error::NotBlockDiagonal(defect));
        }
        let mut ev: Vec<Complex64> = block.complex_eigenvalues().iter().map(|z| snap_root_of_unity(*z)).collect();
        ev.sort_by(|a, b| {
            let za = a.norm() < 1e-12;
            let zb = b.norm() < 1e-12;
            za.cmp(&zb).then(b.arg().total_cmp(&a.arg()))
        });
        for (i, nu) in ev.into_iter().enumerate() {
            rows[CHANNEL_RANGES[k].start + i] = CharRow { channel: k, nu };
        }
    }
    Ok(rows)
}

/// Table of characteristic rows for the delayed control built from the
/// level set `φ⁻¹(t₀)` of `H`.
pub fn char_system_eq2(p: &Params, h: &SymGroup, period: f64) -> Result<CharSystem> {
    let spec = control_matrix(ControlLaw::LevelSetAverage, h)
        .map_err(|_| Error::NoCharTable(h.name.clone().unwrap_or_default()))?;
    char_system_for(p, &spec, period)
}

/// Characteristic rows for an arbitrary control.
pub fn char_system_for(p: &Params, spec: &ControlSpec, period: f64) -> Result<CharSystem> {
    let iso = isotypical_basis();
    let rows = gain_rows(&iso, &spec.avg_matrix)?;
    let delay_fraction = spec.delay_fraction.to_f64();
    Ok(CharSystem {
        group: spec.group.name.clone(),
        params: *p,
        period,
        delay_fraction,
        quasi: rows.map(|r| r.quasi(p, delay_fraction, period)),
        rows,
    })
}

/// `det` of the 16-dimensional characteristic matrix
/// `λI − [[0, I], [−I, A − bI + bCe^{−λτ}]]`.
pub fn full_char_det(p: &Params, spec: &ControlSpec, period: f64, z: Complex64) -> Complex64 {
    let a = linear_part(p) - Mat8::identity() * p.b;
    let tau = spec.delay(period);
    let e = (-z * tau).exp();
    let m = DMatrix::<Complex64>::from_fn(2 * N, 2 * N, |i, j| {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match (i < N, j < N) {
            (true, true) => {
                if i == j {
                    z
                } else {
                    zero
                }
            }
            (true, false) => {
                if j - N == i {
                    -one
                } else {
                    zero
                }
            }
            (false, true) => {
                if i - N == j {
                    one
                } else {
                    zero
                }
            }
            (false, false) => {
                let (r, c) = (i - N, j - N);
                let diag = if r == c { z } else { zero };
                diag - a[(r, c)] - spec.avg_matrix[(r, c)] * p.b * e
            }
        }
    });
    m.determinant()
}

/// The 16 eigenvalues of `ẍ = (A₀ − bB₀)ẋ − x` with `B₀ = I − avg_{ker φ}`.
pub fn equilibrium_spectrum_eq1(p: &Params, h: &SymGroup) -> Result<Vec<Complex64>> {
    let spec = control_matrix(ControlLaw::KernelAverage, h)?;
    let iso = isotypical_basis();
    let off = iso.off_block(&spec.avg_matrix);
    if off > BLOCK_TOL {
        return Err(Error::NotBlockDiagonal(off));
    }
    let m = linear_part(p) - (Mat8::identity() - spec.avg_matrix) * p.b;
    let t = iso.conjugate(&m);
    let mut out = Vec::with_capacity(2 * N);
    for k in 0..4 {
        let block = channel_block(&t, k);
        let block = (&block + block.transpose()) * 0.5;
        for mu in block.symmetric_eigen().eigenvalues.iter() {
            let disc = Complex64::new(mu * mu - 4.0, 0.0).sqrt();
            out.push((disc + *mu) * 0.5);
            out.push((-disc + *mu) * 0.5);
        }
    }
    Ok(out)
}

/// `dλ/dα = −(∂q/∂α)/(∂q/∂λ)` at a simple root `λ₀` of `row`, with `T` fixed.
pub fn crossing_derivative(row: &CharRow, p: &Params, delay_fraction: f64, period: f64, z0: Complex64) -> Result<Complex64> {
    let q = row.quasi(p, delay_fraction, period);
    let resid = q.eval(z0).norm();
    if resid > 1e-8 * (1.0 + z0.norm_sqr()) {
        return Err(Error::Domain(format!("λ₀ = {z0} is not a root (|q| = {resid:e})")));
    }
    let dq = q.derivative(z0);
    if dq.norm() < 1e-10 {
        return Err(Error::NonSimpleRoot(dq.norm()));
    }
    // ∂q/∂α = −λ
    Ok(z0 / dq)
}

/// Derivatives `(α′(ω), T′(ω))` of the curve along which `iω` stays a root
/// of `row`, from `∂q/∂λ · i + ∂q/∂α · α′ + ∂q/∂T · T′ = 0`.
pub fn hopf_curve_tangent(row: &CharRow, p: &Params, delay_fraction: f64, period: f64, omega: f64) -> Result<(f64, f64)> {
    let q = row.quasi(p, delay_fraction, period);
    let z = Complex64::new(0.0, omega);
    let resid = q.eval(z).norm();
    if resid > 1e-8 * (1.0 + omega * omega) {
        return Err(Error::Domain(format!("iω = {z} is not a root (|q| = {resid:e})")));
    }
    let f_w = q.derivative(z) * Complex64::new(0.0, 1.0);
    let f_a = -z;
    let f_t = q.d * z * z * delay_fraction * (-z * q.delta).exp();
    let det = f_a.re * f_t.im - f_t.re * f_a.im;
    let scale = f_a.norm() * f_t.norm();
    if det.abs() <= 1e-12 * scale.max(1e-300) {
        return Err(Error::SingularJacobian);
    }
    let alpha_p = (-f_w.re * f_t.im + f_t.re * f_w.im) / det;
    let t_p = (-f_a.re * f_w.im + f_w.re * f_a.im) / det;
    Ok((alpha_p, t_p))
}
