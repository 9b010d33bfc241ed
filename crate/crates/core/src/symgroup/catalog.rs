use std::collections::HashMap;
use std::sync::OnceLock;

use super::{product_group, GroupElement, Permutation, Phase, SymGroup};
use crate::error::{Error, Result};

/// Transcribed group tables, see `data/groups.txt`.
pub const GROUP_DATA: &str = include_str!("../../data/groups.txt");

/// Parses the group data format into `(section, elements)` pairs.
///
/// Lines are `<sign> <cycle-notation> <p>/<q>`; `[name]` starts a section and
/// `#` starts a comment.
pub fn parse_elements(text: &str) -> Result<Vec<(String, Vec<GroupElement>)>> {
    let mut out: Vec<(String, Vec<GroupElement>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.push((name.trim().to_string(), Vec::new()));
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("line {}: {msg}: `{raw}`", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [sign, cycles, phase] = fields[..] else {
            return Err(err("expected three fields"));
        };
        let sign: i8 = match sign {
            "+1" | "1" => 1,
            "-1" => -1,
            _ => return Err(err("bad sign")),
        };
        let perm: Permutation = cycles.parse()?;
        let (p, q) = phase.split_once('/').ok_or_else(|| err("phase must be p/q"))?;
        let p: i64 = p.parse().map_err(|_| err("bad phase numerator"))?;
        let q: i64 = q.parse().map_err(|_| err("bad phase denominator"))?;
        let el = GroupElement::new(sign, perm, Phase::new(p, q)?)?;
        match out.last_mut() {
            Some((_, elems)) => elems.push(el),
            None => return Err(err("element before any [section]")),
        }
    }
    Ok(out)
}

/// Base groups that can carry a `+`/`-` decoration.
pub const BASE_GROUPS: [&str; 9] = ["S4", "D4z", "D3z", "D2d", "Z4c", "Z3t", "D4d", "D3", "S4-"];

fn catalog() -> &'static HashMap<String, SymGroup> {
    static CATALOG: OnceLock<HashMap<String, SymGroup>> = OnceLock::new();
    CATALOG.get_or_init(|| build_catalog().expect("bundled group data is valid"))
}

fn build_catalog() -> Result<HashMap<String, SymGroup>> {
    let mut map = HashMap::new();
    for (name, elems) in parse_elements(GROUP_DATA)? {
        let g = SymGroup::new(Some(name.clone()), elems)?;
        map.insert(name, g);
    }
    let o = map.get("o").cloned().ok_or_else(|| Error::UnknownGroup("o".into()))?;
    let oz = map.get("oz").cloned().ok_or_else(|| Error::UnknownGroup("oz".into()))?;
    for base in BASE_GROUPS {
        let h = map.get(base).cloned().ok_or_else(|| Error::UnknownGroup(base.into()))?;
        let plus = product_group(&h, &o)?.with_name(format!("+{base}"));
        let minus = product_group(&h, &oz)?.with_name(format!("-{base}"));
        map.insert(plus.name.clone().unwrap(), plus);
        map.insert(minus.name.clone().unwrap(), minus);
    }
    Ok(map)
}

/// Looks up a group by its ASCII label: a base name such as `Z3t` or `S4-`,
/// optionally prefixed by `+` or `-`, or one of `o`, `oz`.
pub fn named_group(label: &str) -> Result<SymGroup> {
    catalog()
        .get(label.trim())
        .cloned()
        .ok_or_else(|| Error::UnknownGroup(label.to_string()))
}

/// Which reduction of the fixed-point system applies to a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ReductionCase {
    /// One Van der Pol oscillator with shifted parameter.
    SingleOscillator,
    /// Two uncoupled oscillators.
    UncoupledPair,
    /// Two asymmetrically coupled oscillators.
    CoupledPair,
    /// Two oscillators with delayed self-coupling.
    DelayedPair,
}

/// A branch of periodic solutions born at `α₀ = hopf_index · a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Branch {
    pub label: &'static str,
    pub hopf_index: usize,
    pub case: ReductionCase,
}

pub const BRANCHES: [Branch; 12] = {
    use ReductionCase::*;
    [
        Branch { label: "+S4", hopf_index: 0, case: SingleOscillator },
        Branch { label: "-D4z", hopf_index: 1, case: SingleOscillator },
        Branch { label: "-D3z", hopf_index: 1, case: CoupledPair },
        Branch { label: "-D2d", hopf_index: 1, case: SingleOscillator },
        Branch { label: "-Z4c", hopf_index: 1, case: UncoupledPair },
        Branch { label: "-Z3t", hopf_index: 1, case: DelayedPair },
        Branch { label: "+D4d", hopf_index: 2, case: SingleOscillator },
        Branch { label: "+D3", hopf_index: 2, case: CoupledPair },
        Branch { label: "+D2d", hopf_index: 2, case: SingleOscillator },
        Branch { label: "+Z4c", hopf_index: 2, case: UncoupledPair },
        Branch { label: "+Z3t", hopf_index: 2, case: DelayedPair },
        Branch { label: "-S4-", hopf_index: 3, case: SingleOscillator },
    ]
};

pub fn branch(label: &str) -> Result<Branch> {
    BRANCHES
        .iter()
        .find(|b| b.label == label.trim())
        .copied()
        .ok_or_else(|| Error::NotABranch(label.to_string()))
}
