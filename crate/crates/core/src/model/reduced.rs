//! Low-dimensional systems obtained by restricting the network to the
//! fixed-point space of a branch's kernel.

use serde::Serialize;

use super::Params;
use crate::error::{Error, Result};
use crate::symgroup::{branch, fixed_projector, kernel, named_group, Phase, ReductionCase, Vec8, N};

/// Reduced vector field of a branch. States are `(x₁[, x₂], ẋ₁[, ẋ₂])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ReducedSystem {
    /// `ẍ = (α − k a − x²)ẋ − x`.
    SingleOscillator { shift_index: usize },
    /// Two copies of the shifted oscillator.
    UncoupledPair { shift_index: usize },
    /// `ẍ₁ = (α − x₁²)ẋ₁ − x₁ + (3a/2)(ẋ₂ − ẋ₁)`,
    /// `ẍ₂ = (α − x₂²)ẋ₂ − x₂ + (a/2)(ẋ₁ − m ẋ₂)`.
    CoupledPair { second_self: f64 },
    /// Second oscillator couples to itself at lags `T/3`, `2T/3`:
    /// `ẍ₁ = … + (a/2)(ẋ₂ + ẋ₂(t−T/3) + ẋ₂(t−2T/3) − 3ẋ₁)`,
    /// `ẍ₂ = … + (a/2)(ẋ₁ + s(ẋ₂(t−T/3) + ẋ₂(t−2T/3)) − 3ẋ₂)`.
    DelayedPair { delayed_sign: f64 },
}

pub fn reduced_system(label: &str) -> Result<ReducedSystem> {
    let br = branch(label)?;
    Ok(match br.case {
        ReductionCase::SingleOscillator => ReducedSystem::SingleOscillator {
            shift_index: br.hopf_index,
        },
        ReductionCase::UncoupledPair => ReducedSystem::UncoupledPair {
            shift_index: br.hopf_index,
        },
        ReductionCase::CoupledPair => ReducedSystem::CoupledPair {
            second_self: if label.trim() == "-D3z" { 5.0 } else { 1.0 },
        },
        ReductionCase::DelayedPair => ReducedSystem::DelayedPair {
            delayed_sign: if label.trim().starts_with('-') { -1.0 } else { 1.0 },
        },
    })
}

fn vdp(alpha: f64, x: f64, v: f64) -> f64 {
    (alpha - x * x) * v - x
}

impl ReducedSystem {
    pub fn oscillators(&self) -> usize {
        match self {
            ReducedSystem::SingleOscillator { .. } => 1,
            _ => 2,
        }
    }

    /// Lags as fractions of the period.
    pub fn delay_fractions(&self) -> &'static [f64] {
        match self {
            ReducedSystem::DelayedPair { .. } => &[1.0 / 3.0, 2.0 / 3.0],
            _ => &[],
        }
    }

    /// Accelerations given positions, velocities and lagged velocities (one
    /// slice per entry of [`Self::delay_fractions`]).
    pub fn accel(&self, p: &Params, x: &[f64], v: &[f64], lagged_v: &[&[f64]], out: &mut [f64]) {
        let a = p.a;
        match *self {
            ReducedSystem::SingleOscillator { shift_index } => {
                out[0] = vdp(p.alpha - shift_index as f64 * a, x[0], v[0]);
            }
            ReducedSystem::UncoupledPair { shift_index } => {
                let al = p.alpha - shift_index as f64 * a;
                out[0] = vdp(al, x[0], v[0]);
                out[1] = vdp(al, x[1], v[1]);
            }
            ReducedSystem::CoupledPair { second_self } => {
                out[0] = vdp(p.alpha, x[0], v[0]) + 1.5 * a * (v[1] - v[0]);
                out[1] = vdp(p.alpha, x[1], v[1]) + 0.5 * a * (v[0] - second_self * v[1]);
            }
            ReducedSystem::DelayedPair { delayed_sign } => {
                let lag_sum = lagged_v[0][1] + lagged_v[1][1];
                out[0] = vdp(p.alpha, x[0], v[0]) + 0.5 * a * (v[1] + lag_sum - 3.0 * v[0]);
                out[1] = vdp(p.alpha, x[1], v[1]) + 0.5 * a * (v[0] + delayed_sign * lag_sum - 3.0 * v[1]);
            }
        }
    }
}

/// Basis of `Fix(ker φ)` made of vectors with disjoint supports and entries
/// of modulus one, ordered by first vertex. The reduced coordinates of Cases
/// with a spatial reduction are the coefficients in this basis.
pub fn embedding_basis(label: &str) -> Result<Vec<Vec8>> {
    let h = named_group(label)?;
    let p = fixed_projector(kernel(&h).elements());
    let mut basis: Vec<Vec8> = Vec::new();
    for j in 0..N {
        let col: Vec8 = p.column(j).into_owned();
        let peak = col.amax();
        if peak < 1e-9 || basis.iter().any(|u| u[j].abs() > 1e-9) {
            continue;
        }
        let scale = col[j];
        if scale.abs() < 1e-9 {
            continue;
        }
        basis.push(col.map(|c| if c.abs() < 1e-9 { 0.0 } else { c / scale }));
    }
    Ok(basis)
}

/// How one vertex of the network is recovered from the two reduced
/// oscillators: `x_j(t) = sign · x_source(t − phase · T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertexSource {
    pub source: usize,
    pub sign: f64,
    pub phase: Phase,
}

/// Space-time embedding of a two-oscillator reduction: oscillator 1 sits at
/// vertex 1, oscillator 2 at vertex 2, every other vertex is a signed,
/// time-shifted copy of one of them.
pub fn temporal_embedding(label: &str) -> Result<[VertexSource; N]> {
    let h = named_group(label)?;
    let mut out = [None; N];
    for source in 0..2 {
        for g in h.elements() {
            let j = g.perm.apply(source);
            if out[j].is_none() {
                out[j] = Some(VertexSource {
                    source,
                    sign: f64::from(g.sign),
                    phase: g.phase,
                });
            }
        }
    }
    let mut res = [VertexSource {
        source: 0,
        sign: 1.0,
        phase: Phase::zero(),
    }; N];
    for (j, slot) in out.iter().enumerate() {
        res[j] = slot.ok_or_else(|| Error::NotABranch(format!("{label}: vertex {} unreachable", j + 1)))?;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::vdp_rhs;

    #[test]
    fn labels() {
        assert_eq!(reduced_system("+S4").unwrap(), ReducedSystem::SingleOscillator { shift_index: 0 });
        assert_eq!(reduced_system("-Z4c").unwrap(), ReducedSystem::UncoupledPair { shift_index: 1 });
        assert_eq!(reduced_system("+D3").unwrap(), ReducedSystem::CoupledPair { second_self: 1.0 });
        assert_eq!(reduced_system("-D3z").unwrap(), ReducedSystem::CoupledPair { second_self: 5.0 });
        assert_eq!(reduced_system("-Z3t").unwrap(), ReducedSystem::DelayedPair { delayed_sign: -1.0 });
        assert!(reduced_system("Z3t").is_err());
        assert!(reduced_system("+S4-").is_err());
    }

    #[test]
    fn single_oscillator_plus_s4() {
        let p = Params::new(0.3, 0.8, 0.0);
        let mut out = [0.0];
        reduced_system("+S4").unwrap().accel(&p, &[0.5], &[0.2], &[], &mut out);
        assert!((out[0] - ((0.3 - 0.25) * 0.2 - 0.5)).abs() < 1e-15);
    }

    /// The spatial reductions agree with the full field on `Fix(ker φ)`.
    #[test]
    fn spatial_embeddings_solve_full_system() {
        let p = Params::new(0.37, 0.61, 0.0);
        for br in crate::symgroup::BRANCHES {
            if br.case == ReductionCase::DelayedPair {
                continue;
            }
            let sys = reduced_system(br.label).unwrap();
            let basis = embedding_basis(br.label).unwrap();
            assert_eq!(basis.len(), sys.oscillators(), "{}", br.label);
            for trial in 0..5 {
                let xs: Vec<f64> = (0..basis.len()).map(|k| (trial as f64 + 0.3 * k as f64).sin()).collect();
                let vs: Vec<f64> = (0..basis.len()).map(|k| (trial as f64 * 0.7 - k as f64).cos()).collect();
                let x: Vec8 = basis.iter().zip(&xs).map(|(u, c)| u * *c).sum();
                let v: Vec8 = basis.iter().zip(&vs).map(|(u, c)| u * *c).sum();
                let full = vdp_rhs(&p, &x, &v);
                let mut red = vec![0.0; basis.len()];
                sys.accel(&p, &xs, &vs, &[], &mut red);
                let lifted: Vec8 = basis.iter().zip(&red).map(|(u, c)| u * *c).sum();
                assert!((full - lifted).amax() < 1e-13, "{} trial {trial}", br.label);
            }
        }
    }

    /// Both delayed reductions match rows 1 and 2 of the full field on any
    /// pair of functions that respects the vertex stabilizers.
    #[test]
    fn delayed_embeddings_match_full_rows() {
        let period = 5.3;
        for label in ["-Z3t", "+Z3t"] {
            let h = named_group(label).unwrap();
            let emb = temporal_embedding(label).unwrap();
            let sys = reduced_system(label).unwrap();
            // stabilizer-averaged trigonometric polynomials
            let raw = |src: usize, t: f64, deriv: bool| -> f64 {
                (1..=6)
                    .map(|k| {
                        let w = 2.0 * std::f64::consts::PI * k as f64 / period;
                        let (ca, sa) = (0.3 + 0.1 * (k + src) as f64, 0.2 - 0.05 * (k * (src + 1)) as f64);
                        if deriv {
                            w * (-ca * (w * t).sin() + sa * (w * t).cos())
                        } else {
                            ca * (w * t).cos() + sa * (w * t).sin()
                        }
                    })
                    .sum()
            };
            let stab: Vec<Vec<_>> = (0..2)
                .map(|s| h.elements().iter().filter(|g| g.perm.apply(s) == s).copied().collect())
                .collect();
            let osc = |src: usize, t: f64, deriv: bool| -> f64 {
                let st = &stab[src];
                st.iter()
                    .map(|g| f64::from(g.sign) * raw(src, t - g.phase.to_f64() * period, deriv))
                    .sum::<f64>()
                    / st.len() as f64
            };
            let full_state = |t: f64, deriv: bool| -> Vec8 {
                Vec8::from_fn(|j, _| {
                    let e = emb[j];
                    e.sign * osc(e.source, t - e.phase.to_f64() * period, deriv)
                })
            };
            let p = Params::new(0.45, 0.33, 0.0);
            for k in 0..7 {
                let t = 0.37 * k as f64;
                let x = full_state(t, false);
                let v = full_state(t, true);
                // the embedded curve carries the full symmetry
                for g in h.elements() {
                    let shifted = full_state(t - g.phase.to_f64() * period, false);
                    assert!((g.act(&shifted) - x).amax() < 1e-12, "{label} {g}");
                }
                let full = vdp_rhs(&p, &x, &v);
                let lag1 = [osc(0, t - period / 3.0, true), osc(1, t - period / 3.0, true)];
                let lag2 = [osc(0, t - 2.0 * period / 3.0, true), osc(1, t - 2.0 * period / 3.0, true)];
                let mut red = [0.0; 2];
                sys.accel(&p, &[x[0], x[1]], &[v[0], v[1]], &[&lag1, &lag2], &mut red);
                assert!((full[0] - red[0]).abs() < 1e-12, "{label} row 1");
                assert!((full[1] - red[1]).abs() < 1e-12, "{label} row 2");
            }
        }
    }
}
