use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::basis::{isotypical_basis, COORD_CHANNEL};
use crate::symgroup::{GroupElement, N};

/// Fixed-space dimensions of the center space `E_i ⊕ E_{−i}` at `α₀ = k₀a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CenterDims {
    /// Complex dimension of `E_i ⊕ E_{−i}`.
    pub center: usize,
    /// Every element acts by `e^{2πiθ} r𝒯_h` on both copies.
    pub literal: usize,
    /// `e^{2πiθ}` on `E_i` and `e^{−2πiθ}` on `E_{−i}`.
    pub conjugate: usize,
}

/// `dim_ℂ {u ∈ span Q_E : e^{±2πiθ} r𝒯_h u = u for all elements}`.
fn fixed_dim(set: &[GroupElement], cols: &[usize], sign: f64) -> usize {
    let iso = isotypical_basis();
    let m = cols.len();
    if m == 0 {
        return 0;
    }
    let qe = DMatrix::<Complex64>::from_fn(N, m, |i, j| Complex64::new(iso.q[(i, cols[j])], 0.0));
    let mut stacked = DMatrix::<Complex64>::zeros(N * set.len().max(1), m);
    for (s, g) in set.iter().enumerate() {
        let w = Complex64::from_polar(1.0, sign * 2.0 * PI * g.phase.to_f64());
        let op = DMatrix::<Complex64>::from_fn(N, N, |i, j| {
            let mij = Complex64::new(g.matrix()[(i, j)], 0.0) * w;
            if i == j {
                mij - 1.0
            } else {
                mij
            }
        });
        let block = op * &qe;
        stacked.view_mut((N * s, 0), (N, m)).copy_from(&block);
    }
    let sv = stacked.singular_values();
    let top = sv.iter().copied().fold(0.0f64, f64::max).max(1.0);
    let rank = sv.iter().filter(|s| **s > 1e-9 * top).count();
    m - rank
}

pub fn center_fixed_dims(set: &[GroupElement], alpha0_index: usize, a: f64) -> CenterDims {
    let cols: Vec<usize> = (0..N)
        .filter(|&i| ((alpha0_index as f64 - COORD_CHANNEL[i] as f64) * a).abs() <= 1e-12)
        .collect();
    let plus = fixed_dim(set, &cols, 1.0);
    let minus = fixed_dim(set, &cols, -1.0);
    CenterDims {
        center: 2 * cols.len(),
        literal: 2 * plus,
        conjugate: plus + minus,
    }
}

/// Complex dimension of the common `+1`-eigenspace of `e^{2πiθ} r𝒯_h`,
/// `(r, h, θ) ∈ set`, on the center space of the uncontrolled equilibrium at
/// `α₀ = k₀a`. The center space is `E_i ⊕ E_{−i}` built from every channel
/// whose rate `(k₀ − k)a` vanishes.
pub fn center_fixed_dim(set: &[GroupElement], alpha0_index: usize, a: f64) -> usize {
    center_fixed_dims(set, alpha0_index, a).literal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symgroup::{level_set, named_group};

    #[test]
    fn identity_at_zero() {
        let d = center_fixed_dims(&[GroupElement::identity()], 0, 0.5);
        assert_eq!(d, CenterDims { center: 2, literal: 2, conjugate: 2 });
    }

    #[test]
    fn plus_d3_at_a_zero() {
        let h = named_group("+D3").unwrap();
        assert_eq!(center_fixed_dim(h.elements(), 2, 0.0), 4);
    }

    #[test]
    fn level_set_of_plus_z3t() {
        let s = level_set(&named_group("+Z3t").unwrap()).unwrap();
        assert_eq!(center_fixed_dim(&s, 2, 0.5), 2);
    }
}
