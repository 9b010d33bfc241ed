//! The cube-coupled Van der Pol network `ẍ = (α − x²)ẋ − x + (a/2)𝓑ẋ` and
//! its equivariant delayed-feedback controls.
//!
//! First-order state ordering everywhere in the crate is
//! `(x₁, …, x₈, ẋ₁, …, ẋ₈)`.

mod reduced;

use serde::Serialize;

use crate::error::Result;
use crate::symgroup::{
    kernel, level_set, named_group, t_zero, GroupElement, Mat8, Phase, SymGroup, Vec8, N,
};

pub use reduced::{embedding_basis, reduced_system, temporal_embedding, ReducedSystem, VertexSource};

/// Model parameters. `b = 0` is the uncontrolled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

impl Params {
    pub fn new(alpha: f64, a: f64, b: f64) -> Self {
        Self { alpha, a, b }
    }
}

const CUBE: [[i8; N]; N] = [
    [-3, 1, 0, 1, 1, 0, 0, 0],
    [1, -3, 1, 0, 0, 1, 0, 0],
    [0, 1, -3, 1, 0, 0, 1, 0],
    [1, 0, 1, -3, 0, 0, 0, 1],
    [1, 0, 0, 0, -3, 1, 0, 1],
    [0, 1, 0, 0, 1, -3, 1, 0],
    [0, 0, 1, 0, 0, 1, -3, 1],
    [0, 0, 0, 1, 1, 0, 1, -3],
];

/// The interaction matrix 𝓑: `−3` on the diagonal, `1` on cube edges.
pub fn interaction_matrix() -> Mat8 {
    Mat8::from_fn(|i, j| f64::from(CUBE[i][j]))
}

/// Neighbours of each vertex (zero-based), read off 𝓑.
pub fn cube_neighbours(j: usize) -> impl Iterator<Item = usize> {
    (0..N).filter(move |&k| k != j && CUBE[j][k] == 1)
}

/// `(α − x²)v − x + (a/2)𝓑v`, with `x²v` taken componentwise. Ignores `p.b`.
pub fn vdp_rhs(p: &Params, x: &Vec8, v: &Vec8) -> Vec8 {
    let mut out = Vec8::zeros();
    for j in 0..N {
        let mut coupling = -3.0 * v[j];
        for k in cube_neighbours(j) {
            coupling += v[k];
        }
        out[j] = (p.alpha - x[j] * x[j]) * v[j] - x[j] + 0.5 * p.a * coupling;
    }
    out
}

/// The 96 spatial symmetries `Z2 × O4` with zero phase.
pub fn spatial_symmetry_group() -> SymGroup {
    let s4 = named_group("S4").expect("bundled S4");
    let antipode: crate::symgroup::Permutation = "(17)(28)(35)(46)".parse().expect("antipode");
    let mut elems = Vec::with_capacity(96);
    for g in s4.elements() {
        for perm in [g.perm, g.perm.compose(&antipode)] {
            for sign in [1, -1] {
                elems.push(GroupElement {
                    sign,
                    perm,
                    phase: Phase::zero(),
                });
            }
        }
    }
    SymGroup::new(Some("Z2xO4".into()), elems).expect("Z2 x O4 is a group")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum ControlLaw {
    /// `b(−ẋ + avg_{ker φ} r𝒯_h ẋ)`, no delay.
    KernelAverage,
    /// `b(−ẋ + avg_{φ⁻¹(t₀)} r𝒯_h ẋ(t − t₀T))`.
    LevelSetAverage,
}

/// A fully specified control: the averaged set, its cached averaging matrix
/// and the delay as a fraction of the period.
#[derive(Debug, Clone, Serialize)]
pub struct ControlSpec {
    pub law: ControlLaw,
    pub group: SymGroup,
    pub averaged: Vec<GroupElement>,
    #[serde(serialize_with = "ser_mat8")]
    pub avg_matrix: Mat8,
    pub delay_fraction: Phase,
}

fn ser_mat8<S: serde::Serializer>(m: &Mat8, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..N).map(|i| (0..N).map(|j| m[(i, j)]).collect()).collect();
    rows.serialize(s)
}

/// `(1/|S|) Σ_{g∈S} r𝒯_h`.
pub fn average_matrix(set: &[GroupElement]) -> Mat8 {
    let mut m = Mat8::zeros();
    for g in set {
        m += g.matrix();
    }
    m / set.len().max(1) as f64
}

pub fn control_matrix(law: ControlLaw, group: &SymGroup) -> Result<ControlSpec> {
    let (averaged, delay_fraction) = match law {
        ControlLaw::KernelAverage => (kernel(group).elements().to_vec(), Phase::zero()),
        ControlLaw::LevelSetAverage => (level_set(group)?, t_zero(group)?),
    };
    Ok(ControlSpec {
        law,
        group: group.clone(),
        avg_matrix: average_matrix(&averaged),
        averaged,
        delay_fraction,
    })
}

impl ControlSpec {
    /// `b(−v + avg · v_delayed)`.
    pub fn term(&self, b: f64, v: &Vec8, v_delayed: &Vec8) -> Vec8 {
        (self.avg_matrix * v_delayed - v) * b
    }

    /// Delay in time units for period `T`.
    pub fn delay(&self, period: f64) -> f64 {
        self.delay_fraction.to_f64() * period
    }

    pub fn is_delayed(&self) -> bool {
        !self.delay_fraction.is_zero()
    }
}

/// `vdp_rhs + b(−v + avg · v_delayed)`. For an undelayed control pass
/// `v_delayed = v`.
pub fn controlled_rhs(p: &Params, spec: &ControlSpec, x: &Vec8, v: &Vec8, v_delayed: &Vec8) -> Vec8 {
    vdp_rhs(p, x, v) + spec.term(p.b, v, v_delayed)
}

/// `‖f(gx, gv) − g f(x, v)‖∞` for the spatial action of `g`.
pub fn equivariance_defect(g: &GroupElement, x: &Vec8, v: &Vec8, p: &Params) -> f64 {
    let lhs = vdp_rhs(p, &g.act(x), &g.act(v));
    let rhs = g.act(&vdp_rhs(p, x, v));
    (lhs - rhs).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symgroup::fixed_subspace;

    #[test]
    fn interaction_matrix_structure() {
        let b = interaction_matrix();
        assert_eq!(b, b.transpose());
        for i in 0..N {
            assert_eq!(b.row(i).sum(), 0.0);
            assert_eq!(cube_neighbours(i).count(), 3);
        }
        // checksum of the transcribed pattern
        let weighted: f64 = (0..N)
            .flat_map(|i| (0..N).map(move |j| (i, j)))
            .map(|(i, j)| b[(i, j)] * ((i * N + j) as f64 + 1.0))
            .sum();
        let mut expect = 0.0;
        for i in 0..N {
            for j in 0..N {
                expect += f64::from(CUBE[i][j]) * ((i * N + j) as f64 + 1.0);
            }
        }
        assert_eq!(weighted, expect);
        let mut eig: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-6.0, -4.0, -4.0, -4.0, -2.0, -2.0, -2.0, 0.0];
        for (e, x) in eig.iter().zip(expect) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_examples() {
        let p = Params::new(0.7, 0.3, 0.0);
        assert_eq!(vdp_rhs(&p, &Vec8::zeros(), &Vec8::zeros()), Vec8::zeros());
        let ones = Vec8::repeat(1.0);
        assert!((vdp_rhs(&p, &Vec8::zeros(), &ones) - ones * 0.7).amax() < 1e-15);
        let e1 = Vec8::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 });
        let r = vdp_rhs(&Params::new(1.0, 0.0, 0.0), &e1, &e1);
        assert_eq!(r, e1 * -1.0);
    }

    #[test]
    fn coupling_uses_matrix() {
        let p = Params::new(0.2, 0.9, 0.0);
        let x = Vec8::from_fn(|i, _| (i as f64 * 0.37).sin());
        let v = Vec8::from_fn(|i, _| (i as f64 * 1.3).cos());
        let direct = x.zip_map(&v, |xi, vi| (p.alpha - xi * xi) * vi - xi) + interaction_matrix() * v * (p.a / 2.0);
        assert!((vdp_rhs(&p, &x, &v) - direct).amax() < 1e-14);
    }

    #[test]
    fn oddness() {
        let p = Params::new(0.3, 0.4, 0.0);
        let x = Vec8::from_fn(|i, _| i as f64 * 0.1 - 0.3);
        let v = Vec8::from_fn(|i, _| 0.5 - i as f64 * 0.07);
        assert_eq!(vdp_rhs(&p, &-x, &-v), -vdp_rhs(&p, &x, &v));
    }

    #[test]
    fn d2d_kernel_control_matrix() {
        let spec = control_matrix(ControlLaw::KernelAverage, &named_group("-D2d").unwrap()).unwrap();
        #[rustfmt::skip]
        let shown: [[f64; 8]; 8] = [
            [-3., 0., -1., 0., 1., 0., -1., 0.],
            [0., -4., 0., 0., 0., 0., 0., 0.],
            [-1., 0., -3., 0., -1., 0., 1., 0.],
            [0., 0., 0., -4., 0., 0., 0., 0.],
            [1., 0., -1., 0., -3., 0., -1., 0.],
            [0., 0., 0., 0., 0., -4., 0., 0.],
            [-1., 0., 1., 0., -1., 0., -3., 0.],
            [0., 0., 0., 0., 0., 0., 0., -4.],
        ];
        let m = (spec.avg_matrix - Mat8::identity()) * 4.0;
        for i in 0..N {
            for j in 0..N {
                assert_eq!(m[(i, j)], shown[i][j], "({i},{j})");
            }
        }
        // control on e2 with x = 0
        let e2 = Vec8::from_fn(|i, _| if i == 1 { 1.0 } else { 0.0 });
        let b = 1.7;
        let p = Params::new(0.0, 0.5, b);
        let out = controlled_rhs(&p, &spec, &Vec8::zeros(), &e2, &e2) - vdp_rhs(&p, &Vec8::zeros(), &e2);
        assert!((out + e2 * b).amax() < 1e-15);
    }

    #[test]
    fn trivial_group_control_vanishes() {
        let e = SymGroup::new(None, [GroupElement::identity()]).unwrap();
        let spec = control_matrix(ControlLaw::KernelAverage, &e).unwrap();
        assert_eq!(spec.avg_matrix, Mat8::identity());
        let v = Vec8::from_fn(|i, _| i as f64);
        assert_eq!(spec.term(3.0, &v, &v), Vec8::zeros());
    }

    #[test]
    fn level_set_control_z3t() {
        let spec = control_matrix(ControlLaw::LevelSetAverage, &named_group("-Z3t").unwrap()).unwrap();
        assert_eq!(spec.averaged.len(), 2);
        assert_eq!(spec.delay_fraction, Phase::new(1, 6).unwrap());
        assert!(spec.avg_matrix.amax() <= 1.0);
        assert!(control_matrix(ControlLaw::LevelSetAverage, &named_group("S4").unwrap()).is_err());
    }

    #[test]
    fn kernel_control_vanishes_on_fixed_space() {
        for label in ["-D2d", "+D4d", "-S4-", "-D3z", "+D2d", "-D4z"] {
            let h = named_group(label).unwrap();
            let spec = control_matrix(ControlLaw::KernelAverage, &h).unwrap();
            for v in fixed_subspace(kernel(&h).elements()) {
                assert!(spec.term(2.0, &v, &v).amax() < 1e-14, "{label}");
            }
        }
    }

    #[test]
    fn level_set_control_cancels_on_delayed_copy() {
        // The level set is a coset g₀·ker φ, so on Fix(ker φ) every averaged
        // element acts as g₀ and avg · v(t − τ) = g₀ v(t − τ).
        let spec = control_matrix(ControlLaw::LevelSetAverage, &named_group("-Z4c").unwrap()).unwrap();
        let g0 = spec.averaged[0];
        let raw = Vec8::from_fn(|i, _| ((i + 1) as f64).sqrt());
        let fixed = fixed_subspace(kernel(&spec.group).elements());
        let vd: Vec8 = fixed.iter().map(|u| u * u.dot(&raw)).sum();
        assert!(vd.norm() > 0.1);
        let v = g0.act(&vd);
        assert!(spec.term(1.0, &v, &vd).amax() < 1e-14);
    }

    #[test]
    fn equivariance() {
        let p = Params::new(0.3, 0.7, 0.0);
        let x = Vec8::from_fn(|i, _| (i as f64 * 1.1).sin());
        let v = Vec8::from_fn(|i, _| (i as f64 * 0.6).cos());
        let full = spatial_symmetry_group();
        assert_eq!(full.len(), 96);
        for g in full.elements() {
            assert!(equivariance_defect(g, &x, &v, &p) < 1e-12, "{g}");
        }
        assert_eq!(equivariance_defect(&GroupElement::identity(), &x, &v, &p), 0.0);
        let swap = GroupElement {
            sign: 1,
            perm: "(12)".parse().unwrap(),
            phase: Phase::zero(),
        };
        assert!(equivariance_defect(&swap, &x, &v, &p) > 1e-3);
    }
}
