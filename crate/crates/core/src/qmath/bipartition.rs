use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register handled anywhere in the crate (covers `rho (x) sigma` at six qubits).
pub const MAX_QUBITS: usize = 12;

/// Which side of a [`Bipartition`] an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Split of qubit slots `0..n_qubits` into two nonempty parts.
///
/// Slot 0 is the leftmost symbol of a ket string, i.e. the most significant
/// bit of a basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BipartitionRepr", into = "BipartitionRepr")]
pub struct Bipartition {
    n_qubits: usize,
    a: Vec<usize>,
    b: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct BipartitionRepr {
    n_qubits: usize,
    a_qubits: Vec<usize>,
    b_qubits: Vec<usize>,
}

impl TryFrom<BipartitionRepr> for Bipartition {
    type Error = Error;

    fn try_from(r: BipartitionRepr) -> Result<Self> {
        Bipartition::from_sets(r.n_qubits, r.a_qubits, r.b_qubits)
    }
}

impl From<Bipartition> for BipartitionRepr {
    fn from(b: Bipartition) -> Self {
        BipartitionRepr { n_qubits: b.n_qubits, a_qubits: b.a, b_qubits: b.b }
    }
}

impl Bipartition {
    /// `a` plus its complement.
    pub fn new(n_qubits: usize, a: impl IntoIterator<Item = usize>) -> Result<Self> {
        let a: Vec<usize> = a.into_iter().collect();
        let b = (0..n_qubits).filter(|q| !a.contains(q)).collect();
        Self::from_sets(n_qubits, a, b)
    }

    pub fn from_sets(n_qubits: usize, mut a: Vec<usize>, mut b: Vec<usize>) -> Result<Self> {
        a.sort_unstable();
        b.sort_unstable();
        if a.is_empty() || b.is_empty() {
            return Err(Error::invariant("bipartition_nonempty", "both subsystems need at least one qubit"));
        }
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        if all != (0..n_qubits).collect::<Vec<_>>() {
            return Err(Error::invariant(
                "bipartition_cover",
                format!("{a:?} and {b:?} must be disjoint and cover 0..{n_qubits}"),
            ));
        }
        Ok(Bipartition { n_qubits, a, b })
    }

    /// First `n_a` slots as A, the rest as B.
    pub fn leading(n_qubits: usize, n_a: usize) -> Result<Self> {
        Self::new(n_qubits, 0..n_a)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn a_qubits(&self) -> &[usize] {
        &self.a
    }

    pub fn b_qubits(&self) -> &[usize] {
        &self.b
    }

    pub fn n_a(&self) -> usize {
        self.a.len()
    }

    pub fn n_b(&self) -> usize {
        self.b.len()
    }

    pub fn qubits(&self, side: Subsystem) -> &[usize] {
        match side {
            Subsystem::A => &self.a,
            Subsystem::B => &self.b,
        }
    }

    pub fn contains_a(&self, q: usize) -> bool {
        self.a.contains(&q)
    }

    /// Basis-index bit mask covering the slots of `side`.
    pub fn mask(&self, side: Subsystem) -> usize {
        self.qubits(side).iter().fold(0, |m, &q| m | slot_bit(self.n_qubits, q))
    }

    /// For every basis index, its (A index, B index) under this split.
    pub fn split_indices(&self) -> Vec<(usize, usize)> {
        (0..1usize << self.n_qubits)
            .map(|i| (gather_bits(i, self.n_qubits, &self.a), gather_bits(i, self.n_qubits, &self.b)))
            .collect()
    }
}

/// Basis-index bit for slot `q` of an `n`-qubit register.
#[inline]
pub fn slot_bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Reads the bits of `index` at `slots` (in order) into a compact index.
pub fn gather_bits(index: usize, n: usize, slots: &[usize]) -> usize {
    slots.iter().fold(0, |acc, &q| (acc << 1) | ((index >> (n - 1 - q)) & 1))
}

impl fmt::Display for Bipartition {
    /// `0/12` style; slots are comma separated when any index exceeds 9.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.n_qubits > 10 { "," } else { "" };
        let join = |v: &[usize]| v.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(sep);
        write!(f, "{}/{}", join(&self.a), join(&self.b))
    }
}

impl FromStr for Bipartition {
    type Err = Error;

    /// Parses `A/B` such as `0/12` or `0,1/2,3`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) =
            s.split_once('/').ok_or_else(|| Error::Parse(format!("split `{s}` must look like `0/12`")))?;
        let parse_side = |side: &str| -> Result<Vec<usize>> {
            let side = side.trim();
            if side.contains(',') {
                side.split(',')
                    .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad qubit index `{t}`"))))
                    .collect()
            } else {
                side.chars()
                    .map(|c| {
                        c.to_digit(10)
                            .map(|d| d as usize)
                            .ok_or_else(|| Error::Parse(format!("bad qubit index `{c}`")))
                    })
                    .collect()
            }
        };
        let a = parse_side(a)?;
        let b = parse_side(b)?;
        let n = a.len() + b.len();
        Self::from_sets(n, a, b)
    }
}
