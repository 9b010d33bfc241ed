use std::fmt;
use std::str::FromStr;

use nalgebra::SMatrix;

use crate::error::{Error, Result};

/// Number of oscillators (cube vertices).
pub const N: usize = 8;

pub type Mat8 = SMatrix<f64, N, N>;

/// A permutation of the vertex labels `1..=8`, stored zero-based as the image
/// of each vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation([u8; N]);

impl Permutation {
    pub fn identity() -> Self {
        let mut img = [0u8; N];
        for (i, v) in img.iter_mut().enumerate() {
            *v = i as u8;
        }
        Permutation(img)
    }

    pub fn from_images(img: [u8; N]) -> Result<Self> {
        let mut seen = [false; N];
        for &v in &img {
            let v = v as usize;
            if v >= N || seen[v] {
                return Err(Error::Parse(format!("not a bijection: {img:?}")));
            }
            seen[v] = true;
        }
        Ok(Permutation(img))
    }

    /// Zero-based image of zero-based vertex `j`.
    #[inline]
    pub fn apply(&self, j: usize) -> usize {
        self.0[j] as usize
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        let mut img = [0u8; N];
        for (j, v) in img.iter_mut().enumerate() {
            *v = self.0[other.0[j] as usize];
        }
        Permutation(img)
    }

    pub fn inverse(&self) -> Permutation {
        let mut img = [0u8; N];
        for j in 0..N {
            img[self.0[j] as usize] = j as u8;
        }
        Permutation(img)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v as usize)
    }

    /// Permutation matrix with `M e_j = e_{g(j)}`, so that `(M x)_{g(j)} = x_j`.
    pub fn matrix(&self) -> Mat8 {
        let mut m = Mat8::zeros();
        for j in 0..N {
            m[(self.apply(j), j)] = 1.0;
        }
        m
    }

    /// Disjoint cycles of length ≥ 2, each starting at its smallest vertex.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = [false; N];
        let mut out = Vec::new();
        for start in 0..N {
            if seen[start] {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut j = self.apply(start);
            while j != start {
                seen[j] = true;
                cyc.push(j);
                j = self.apply(j);
            }
            if cyc.len() > 1 {
                out.push(cyc);
            }
        }
        out
    }
}

impl Default for Permutation {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            write!(f, "(")?;
            for v in c {
                write!(f, "{}", v + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses cycle notation such as `(17)(265843)` or `()`. Symbols are the
    /// single digits `1..=8`; cycles need not be disjoint and are composed
    /// right to left.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty cycle notation".into()));
        }
        let mut perm = Permutation::identity();
        let mut rest = s;
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected `(` in `{s}`")))?;
            let close = body
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unclosed cycle in `{s}`")))?;
            let mut cyc = Vec::with_capacity(close);
            for ch in body[..close].chars() {
                let d = ch
                    .to_digit(10)
                    .filter(|d| (1..=N as u32).contains(d))
                    .ok_or_else(|| Error::Parse(format!("bad symbol `{ch}` in `{s}`")))?;
                let v = d as usize - 1;
                if cyc.contains(&v) {
                    return Err(Error::Parse(format!("repeated symbol in cycle of `{s}`")));
                }
                cyc.push(v);
            }
            cycles.push(cyc);
            rest = &body[close + 1..];
        }
        for cyc in cycles.iter().rev() {
            let mut img: [u8; N] = Permutation::identity().0;
            for (k, &v) in cyc.iter().enumerate() {
                img[v] = cyc[(k + 1) % cyc.len()] as u8;
            }
            perm = Permutation(img).compose(&perm);
        }
        Ok(perm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn identity_matrix() {
        assert_eq!(p("()").matrix(), Mat8::identity());
    }

    #[test]
    fn worked_example_matrix() {
        // Row i has its single 1 in column cols[i] (1-based).
        let cols = [7, 3, 4, 8, 6, 2, 1, 5];
        let m = p("(17)(265843)").matrix();
        for (i, &c) in cols.iter().enumerate() {
            for j in 0..N {
                let expect = if j + 1 == c { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)], expect, "entry ({}, {})", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn square_of_four_cycle() {
        let g = p("(1234)(5678)");
        assert_eq!(g.matrix() * g.matrix(), p("(13)(24)(57)(68)").matrix());
        assert_eq!(g.compose(&g), p("(13)(24)(57)(68)"));
    }

    #[test]
    fn display_round_trip() {
        for s in ["()", "(17)(265843)", "(17)(234856)", "(1234)(5678)", "(13)(57)"] {
            assert_eq!(p(s).to_string(), s);
        }
    }

    #[test]
    fn malformed() {
        for s in ["", "(19)", "(12", "12", "(11)", "(1a)"] {
            assert!(s.parse::<Permutation>().is_err(), "{s}");
        }
    }

    #[test]
    fn inverse_is_transpose() {
        let g = p("(17)(265843)");
        assert_eq!(g.inverse().matrix(), g.matrix().transpose());
        assert!(g.compose(&g.inverse()).is_identity());
    }
}
