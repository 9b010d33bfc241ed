use serde::Serialize;

use crate::model::interaction_matrix;
use crate::symgroup::{Mat8, Vec8, N};

/// Eigenvalues of 𝓑 on W₁..W₄.
pub const CHANNEL_EIGENVALUES: [f64; 4] = [0.0, -2.0, -4.0, -6.0];

/// Column ranges of the four isotypical components inside `Q`.
pub const CHANNEL_RANGES: [std::ops::Range<usize>; 4] = [0..1, 1..4, 4..7, 7..8];

/// Channel index `k` (so that the uncontrolled rate is `α − k a`) of each
/// isotypical coordinate.
pub const COORD_CHANNEL: [usize; N] = [0, 1, 1, 1, 2, 2, 2, 3];

/// Orthogonal basis adapted to the eigenspaces of 𝓑.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotypicalBasis {
    #[serde(serialize_with = "ser_q")]
    pub q: Mat8,
}

fn ser_q<S: serde::Serializer>(m: &Mat8, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..N).map(|i| (0..N).map(|j| m[(i, j)]).collect()).collect();
    rows.serialize(s)
}

impl IsotypicalBasis {
    /// `Qᵀ M Q`.
    pub fn conjugate(&self, m: &Mat8) -> Mat8 {
        self.q.transpose() * m * self.q
    }

    /// Largest entry of `Qᵀ M Q` outside the four diagonal blocks.
    pub fn off_block(&self, m: &Mat8) -> f64 {
        let t = self.conjugate(m);
        let mut worst = 0.0f64;
        for i in 0..N {
            for j in 0..N {
                if COORD_CHANNEL[i] != COORD_CHANNEL[j] {
                    worst = worst.max(t[(i, j)].abs());
                }
            }
        }
        worst
    }
}

/// Spectral projector of 𝓑 onto the eigenvalue `CHANNEL_EIGENVALUES[k]`.
fn projector(k: usize) -> Mat8 {
    let b = interaction_matrix();
    let lk = CHANNEL_EIGENVALUES[k];
    let mut p = Mat8::identity();
    for (j, &lj) in CHANNEL_EIGENVALUES.iter().enumerate() {
        if j != k {
            p = p * (b - Mat8::identity() * lj) / (lk - lj);
        }
    }
    p
}

/// W₁ is spanned by the constant vector and W₄ by the bipartition vector
/// (`+` on vertices 1, 3, 6, 8). W₂ and W₃ get the Gram–Schmidt basis of the
/// projected unit vectors `P e₁, P e₂, …` taken in vertex order.
pub fn isotypical_basis() -> IsotypicalBasis {
    let mut q = Mat8::zeros();
    let ones = Vec8::repeat(1.0).normalize();
    let bip = Vec8::from_column_slice(&[1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0]).normalize();
    q.set_column(0, &ones);
    q.set_column(7, &bip);
    for k in [1usize, 2] {
        let p = projector(k);
        let mut found: Vec<Vec8> = Vec::new();
        for j in 0..N {
            let mut v: Vec8 = p.column(j).into_owned();
            for u in &found {
                v -= u * u.dot(&v);
            }
            if v.norm() > 1e-8 {
                found.push(v.normalize());
            }
            if found.len() == 3 {
                break;
            }
        }
        for (i, v) in found.iter().enumerate() {
            q.set_column(CHANNEL_RANGES[k].start + i, v);
        }
    }
    IsotypicalBasis { q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spatial_symmetry_group;

    #[test]
    fn orthogonal_and_diagonalizing() {
        let iso = isotypical_basis();
        assert!((iso.q.transpose() * iso.q - Mat8::identity()).amax() < 1e-13);
        let d = iso.conjugate(&interaction_matrix());
        let want = [0.0, -2.0, -2.0, -2.0, -4.0, -4.0, -4.0, -6.0];
        for i in 0..N {
            for j in 0..N {
                let w = if i == j { want[i] } else { 0.0 };
                assert!((d[(i, j)] - w).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn eigenvalues_match_brute_force() {
        let mut ev: Vec<f64> = interaction_matrix().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let want = [0.0, -2.0, -2.0, -2.0, -4.0, -4.0, -4.0, -6.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn components_are_invariant() {
        let iso = isotypical_basis();
        for g in spatial_symmetry_group().elements() {
            assert!(iso.off_block(&g.matrix()) < 1e-12, "{g}");
        }
    }

    #[test]
    fn constant_vector_fixed() {
        let ones = Vec8::repeat(1.0);
        for g in spatial_symmetry_group().elements().iter().filter(|g| g.sign == 1) {
            assert_eq!(g.act(&ones), ones);
        }
    }
}
