//! Finite spatio-temporal symmetry groups `H^φ < Z2 × O4 × S¹`.
//!
//! An element `(r, h, θ)` acts on a `T`-periodic function by
//! `x(t) ↦ r 𝒯_h x(t − θT)`; products compose spatial parts and add phases.

mod catalog;
mod perm;

use std::collections::HashSet;
use std::fmt;

use nalgebra::SVector;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub use catalog::{
    branch, named_group, parse_elements, Branch, ReductionCase, BASE_GROUPS, BRANCHES, GROUP_DATA,
};
pub use perm::{Mat8, Permutation, N};

pub type Vec8 = SVector<f64, N>;

/// A phase in `[0, 1)`, kept as an exact reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(Ratio<i64>);

impl Phase {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("zero phase denominator".into()));
        }
        Ok(Self::from_ratio(Ratio::new(num, den)))
    }

    fn from_ratio(r: Ratio<i64>) -> Self {
        let frac = r - r.floor();
        Phase(frac)
    }

    pub fn zero() -> Self {
        Phase(Ratio::from_integer(0))
    }

    pub fn is_zero(&self) -> bool {
        *self.0.numer() == 0
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn add(self, other: Phase) -> Phase {
        Self::from_ratio(self.0 + other.0)
    }

    pub fn neg(self) -> Phase {
        Self::from_ratio(-self.0)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Phase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One spatio-temporal symmetry `(r, h, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub sign: i8,
    pub perm: Permutation,
    pub phase: Phase,
}

impl GroupElement {
    pub fn new(sign: i8, perm: Permutation, phase: Phase) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::Parse(format!("sign must be ±1, got {sign}")));
        }
        Ok(Self { sign, perm, phase })
    }

    pub fn identity() -> Self {
        Self {
            sign: 1,
            perm: Permutation::identity(),
            phase: Phase::zero(),
        }
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            sign: self.sign * other.sign,
            perm: self.perm.compose(&other.perm),
            phase: self.phase.add(other.phase),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            sign: self.sign,
            perm: self.perm.inverse(),
            phase: self.phase.neg(),
        }
    }

    /// Spatial action `r 𝒯_h` (phase ignored).
    pub fn matrix(&self) -> Mat8 {
        self.perm.matrix() * f64::from(self.sign)
    }

    /// Applies `r 𝒯_h` to `x` without forming the matrix.
    pub fn act(&self, x: &Vec8) -> Vec8 {
        let mut y = Vec8::zeros();
        let r = f64::from(self.sign);
        for j in 0..N {
            y[self.perm.apply(j)] = r * x[j];
        }
        y
    }

    pub fn spatial_key(&self) -> (i8, Permutation) {
        (self.sign, self.perm)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+},{},{})", self.sign, self.perm, self.phase)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A finite set of elements closed under the product, i.e. the graph of a
/// phase homomorphism on a subgroup of `Z2 × O4`.
#[derive(Debug, Clone, Serialize)]
pub struct SymGroup {
    pub name: Option<String>,
    elements: Vec<GroupElement>,
}

impl SymGroup {
    /// Builds a group from its elements, dropping duplicates and checking the
    /// group axioms exhaustively.
    pub fn new(name: Option<String>, elements: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let mut seen = HashSet::new();
        let elements: Vec<_> = elements.into_iter().filter(|g| seen.insert(*g)).collect();
        let g = SymGroup { name, elements };
        g.check()?;
        Ok(g)
    }

    fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "<unnamed>".into())
    }

    fn check(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::NotClosed(format!("{} is empty", self.label())));
        }
        let set: HashSet<_> = self.elements.iter().copied().collect();
        if !set.contains(&GroupElement::identity()) {
            return Err(Error::NotClosed(format!("{} lacks the identity", self.label())));
        }
        let mut spatial = HashSet::new();
        for g in &self.elements {
            if !spatial.insert(g.spatial_key()) {
                return Err(Error::NotClosed(format!(
                    "{}: spatial part of {g} carries two phases",
                    self.label()
                )));
            }
            if !set.contains(&g.inverse()) {
                return Err(Error::NotClosed(format!("{}: no inverse of {g}", self.label())));
            }
            for h in &self.elements {
                let gh = g.mul(h);
                if !set.contains(&gh) {
                    return Err(Error::NotClosed(format!("{}: {g}·{h} = {gh}", self.label())));
                }
            }
        }
        Ok(())
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.contains(g)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Same element set, ignoring order and names.
    pub fn same_elements(&self, other: &SymGroup) -> bool {
        let a: HashSet<_> = self.elements.iter().collect();
        let b: HashSet<_> = other.elements.iter().collect();
        a == b
    }
}

/// All pairwise products `hk`, deduplicated.
pub fn product_group(h: &SymGroup, k: &SymGroup) -> Result<SymGroup> {
    let elems = h
        .elements()
        .iter()
        .flat_map(|a| k.elements().iter().map(move |b| a.mul(b)));
    SymGroup::new(None, elems)
}

/// The kernel of the phase homomorphism.
pub fn kernel(h: &SymGroup) -> SymGroup {
    let elems: Vec<_> = h.elements().iter().filter(|g| g.phase.is_zero()).copied().collect();
    SymGroup {
        name: h.name.as_ref().map(|n| format!("ker {n}")),
        elements: elems,
    }
}

/// Smallest nonzero phase attained in `h`.
pub fn t_zero(h: &SymGroup) -> Result<Phase> {
    h.elements()
        .iter()
        .map(|g| g.phase)
        .filter(|p| !p.is_zero())
        .min()
        .ok_or(Error::TemporalPartTrivial)
}

/// Elements whose phase equals [`t_zero`].
pub fn level_set(h: &SymGroup) -> Result<Vec<GroupElement>> {
    let t0 = t_zero(h)?;
    Ok(h.elements().iter().filter(|g| g.phase == t0).copied().collect())
}

/// Orthonormal basis of `{x ∈ R⁸ : r𝒯_h x = x for all (r,h,·) ∈ set}`.
pub fn fixed_subspace(set: &[GroupElement]) -> Vec<Vec8> {
    let mut gram = Mat8::zeros();
    for g in set {
        let d = g.matrix() - Mat8::identity();
        gram += d.transpose() * d;
    }
    let eig = gram.symmetric_eigen();
    let scale = 1.0 + set.len() as f64;
    let mut basis: Vec<(usize, Vec8)> = (0..N)
        .filter(|&i| eig.eigenvalues[i].abs() < 1e-10 * scale)
        .map(|i| (i, eig.eigenvectors.column(i).into_owned()))
        .collect();
    basis.sort_by_key(|(i, _)| *i);
    basis.into_iter().map(|(_, v)| v).collect()
}

/// Projector onto the fixed subspace, independent of basis choice.
pub fn fixed_projector(set: &[GroupElement]) -> Mat8 {
    let mut p = Mat8::zeros();
    for v in fixed_subspace(set) {
        p += v * v.transpose();
    }
    p
}

/// Dense output of a trajectory in the `(x, ẋ)` ordering; only `x` is used
/// by the symmetry checks.
pub trait DenseOutput {
    fn t_start(&self) -> f64;
    fn t_end(&self) -> f64;
    /// Position `x(t) ∈ R⁸`.
    fn position(&self, t: f64) -> Vec8;
}

/// `max_{g, t} ‖r𝒯_h x(t − θT) − x(t)‖∞` over the final period of `traj`,
/// using `samples` equally spaced times. Delayed arguments that fall before
/// the final period are wrapped by `T`, which is exact for `T`-periodic data.
pub fn symmetry_residual<D: DenseOutput + ?Sized>(
    traj: &D,
    elements: &[GroupElement],
    period: f64,
    samples: usize,
) -> Result<f64> {
    let span = traj.t_end() - traj.t_start();
    if !(period > 0.0) || span + 1e-12 < period {
        return Err(Error::TrajectoryTooShort {
            needed: period,
            available: span,
        });
    }
    let t1 = traj.t_end();
    let lo = t1 - period;
    let mut worst = 0.0f64;
    for k in 0..samples.max(1) {
        let t = lo + period * (k as f64 + 0.5) / samples.max(1) as f64;
        let x = traj.position(t);
        for g in elements {
            let mut td = t - g.phase.to_f64() * period;
            if td < lo {
                td += period;
            }
            let y = g.act(&traj.position(td.min(t1)));
            worst = worst.max((y - x).amax());
        }
    }
    Ok(worst)
}

/// Packs a list of column vectors into an `8 × k` matrix.
pub fn basis_matrix(cols: &[Vec8]) -> nalgebra::DMatrix<f64> {
    let mut m = nalgebra::DMatrix::zeros(N, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(sign: i8, cycles: &str, num: i64, den: i64) -> GroupElement {
        GroupElement::new(sign, cycles.parse().unwrap(), Phase::new(num, den).unwrap()).unwrap()
    }

    #[test]
    fn phase_is_reduced_mod_one() {
        assert!(Phase::new(1, 1).unwrap().is_zero());
        assert_eq!(Phase::new(5, 4).unwrap(), Phase::new(1, 4).unwrap());
        assert_eq!(Phase::new(-1, 6).unwrap(), Phase::new(5, 6).unwrap());
        assert_eq!(Phase::new(2, 4).unwrap().to_string(), "1/2");
    }

    #[test]
    fn product_with_trivial_group() {
        let h = named_group("Z4c").unwrap();
        let e = SymGroup::new(None, [GroupElement::identity()]).unwrap();
        assert!(product_group(&h, &e).unwrap().same_elements(&h));
    }

    #[test]
    fn non_closed_set_rejected() {
        let bad = [GroupElement::identity(), el(1, "(1234)(5678)", 0, 1)];
        assert!(matches!(SymGroup::new(None, bad), Err(Error::NotClosed(_))));
    }

    #[test]
    fn two_phases_on_one_spatial_part_rejected() {
        // closed, but not the graph of a map on spatial parts
        let bad = [GroupElement::identity(), el(1, "()", 1, 2)];
        assert!(matches!(SymGroup::new(None, bad), Err(Error::NotClosed(_))));
    }

    #[test]
    fn kernel_of_spatial_group_is_whole() {
        let s4 = named_group("S4").unwrap();
        assert_eq!(kernel(&s4).len(), s4.len());
    }

    #[test]
    fn t_zero_cases() {
        assert_eq!(t_zero(&named_group("Z3t").unwrap()).unwrap(), Phase::new(1, 3).unwrap());
        assert_eq!(t_zero(&named_group("-Z3t").unwrap()).unwrap(), Phase::new(1, 6).unwrap());
        assert_eq!(t_zero(&named_group("-Z4c").unwrap()).unwrap(), Phase::new(1, 4).unwrap());
        assert_eq!(t_zero(&named_group("+S4").unwrap()).unwrap(), Phase::new(1, 2).unwrap());
        assert_eq!(t_zero(&named_group("S4").unwrap()), Err(Error::TemporalPartTrivial));
    }

    #[test]
    fn level_sets() {
        let l = level_set(&named_group("-Z3t").unwrap()).unwrap();
        let expect = [el(-1, "(254)(368)", 1, 6), el(1, "(17)(234856)", 1, 6)];
        assert_eq!(l.len(), 2);
        for e in &expect {
            assert!(l.contains(e), "{e}");
        }
        let l4 = level_set(&named_group("-Z4c").unwrap()).unwrap();
        assert_eq!(l4.len(), 4);
        assert!(l4.iter().all(|g| g.phase == Phase::new(1, 4).unwrap()));
        // cyclic group with a unique generator of minimal phase
        assert_eq!(level_set(&named_group("Z4c").unwrap()).unwrap().len(), 1);
    }

    #[test]
    fn fixed_subspaces() {
        assert_eq!(fixed_subspace(&[GroupElement::identity()]).len(), 8);
        let k = kernel(&named_group("+S4").unwrap());
        assert_eq!(fixed_subspace(k.elements()).len(), 1);
        let k = kernel(&named_group("-Z3t").unwrap());
        assert_eq!(fixed_subspace(k.elements()).len(), 4);
        for g in named_group("-D2d").unwrap().elements() {
            for v in fixed_subspace(kernel(&named_group("-D2d").unwrap()).elements()) {
                if g.phase.is_zero() {
                    assert!((g.matrix() * v - v).norm() < 1e-12);
                }
            }
        }
    }

    struct Zero;
    impl DenseOutput for Zero {
        fn t_start(&self) -> f64 {
            0.0
        }
        fn t_end(&self) -> f64 {
            10.0
        }
        fn position(&self, _t: f64) -> Vec8 {
            Vec8::zeros()
        }
    }

    #[test]
    fn residual_of_zero_and_short() {
        let h = named_group("-Z3t").unwrap();
        assert_eq!(symmetry_residual(&Zero, h.elements(), 6.0, 50).unwrap(), 0.0);
        assert!(matches!(
            symmetry_residual(&Zero, h.elements(), 11.0, 50),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }
}
