use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Reduced word in a free group on at most four letters, three bits per
/// symbol (`2·letter + inverse`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FreeWord {
    len: u8,
    bits: u128,
}

impl FreeWord {
    pub const MAX_LEN: usize = 42;
    const LETTERS: [char; 4] = ['a', 'b', 'c', 'd'];

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn symbol(&self, i: usize) -> u8 {
        ((self.bits >> (3 * i)) & 0b111) as u8
    }

    /// Symbols from left to right.
    pub fn symbols(&self) -> impl Iterator<Item = (u8, bool)> + '_ {
        (0..self.len()).map(|i| {
            let s = self.symbol(i);
            (s >> 1, s & 1 == 1)
        })
    }

    /// `g·w` for the letter `g` (or its inverse), freely reduced.
    pub fn left_mul(self, letter: u8, inverse: bool) -> Option<Self> {
        let code = (letter << 1) | u8::from(inverse);
        if self.len > 0 && self.symbol(0) == code ^ 1 {
            return Some(Self {
                len: self.len - 1,
                bits: self.bits >> 3,
            });
        }
        if self.len() >= Self::MAX_LEN {
            return None;
        }
        Some(Self {
            len: self.len + 1,
            bits: (self.bits << 3) | u128::from(code),
        })
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("e");
        }
        for (letter, inv) in self.symbols() {
            let c = Self::LETTERS[letter as usize];
            let c = if inv { c.to_ascii_uppercase() } else { c };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A point of the fiber, i.e. a coset of the covering's subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coset {
    Index(u32),
    Int(i64),
    Lattice(i32, i32),
    Word(FreeWord),
}

impl fmt::Display for Coset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coset::Index(i) => write!(f, "{}", i + 1),
            Coset::Int(n) => write!(f, "{n}"),
            Coset::Lattice(i, j) => write!(f, "({i},{j})"),
            Coset::Word(w) => write!(f, "{w}"),
        }
    }
}

/// How one generator moves fiber points.
#[derive(Clone, Debug, PartialEq)]
pub enum Move {
    Identity,
    /// Finite permutation, `forward[i]` is the image of point `i`.
    Perm {
        forward: Arc<Vec<u32>>,
        backward: Arc<Vec<u32>>,
    },
    ZShift,
    Z2ShiftA,
    Z2ShiftB,
    FreeLeftMult(u8),
}

impl Move {
    pub fn perm(forward: Vec<u32>) -> Result<Self> {
        let n = forward.len();
        let mut backward = vec![u32::MAX; n];
        for (i, &j) in forward.iter().enumerate() {
            let j = j as usize;
            if j >= n || backward[j] != u32::MAX {
                return Err(Error::Voltage(format!("{forward:?} is not a permutation")));
            }
            backward[j] = i as u32;
        }
        Ok(Move::Perm {
            forward: Arc::new(forward),
            backward: Arc::new(backward),
        })
    }

    /// Permutation of `{0..n-1}` from 1-based cycle notation, e.g. `(1 2 3)(4 5)`.
    pub fn from_cycles(n: usize, text: &str) -> Result<Self> {
        let mut forward: Vec<u32> = (0..n as u32).collect();
        let mut rest = text.trim();
        let mut touched = vec![false; n];
        while !rest.is_empty() {
            let body_start = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Voltage(format!("bad cycle notation `{text}`")))?;
            let end = body_start
                .find(')')
                .ok_or_else(|| Error::Voltage(format!("unclosed cycle in `{text}`")))?;
            let cycle: Vec<usize> = body_start[..end]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .ok()
                        .filter(|&k| (1..=n).contains(&k))
                        .map(|k| k - 1)
                        .ok_or_else(|| Error::Voltage(format!("bad point `{s}` in `{text}`")))
                })
                .collect::<Result<_>>()?;
            for (i, &p) in cycle.iter().enumerate() {
                if touched[p] {
                    return Err(Error::Voltage(format!("point {} repeated in `{text}`", p + 1)));
                }
                touched[p] = true;
                forward[p] = cycle[(i + 1) % cycle.len()] as u32;
            }
            rest = body_start[end + 1..].trim_start();
        }
        Self::perm(forward)
    }

    fn kind(&self) -> Option<&'static str> {
        match self {
            Move::Identity => None,
            Move::Perm { .. } => Some("perm"),
            Move::ZShift => Some("z"),
            Move::Z2ShiftA | Move::Z2ShiftB => Some("z2"),
            Move::FreeLeftMult(_) => Some("free"),
        }
    }

    pub fn apply(&self, x: Coset, inverse: bool) -> Result<Coset> {
        let step = if inverse { -1 } else { 1 };
        let out = match (self, x) {
            (Move::Identity, x) => Some(x),
            (Move::Perm { forward, backward }, Coset::Index(i)) => {
                let table = if inverse { backward } else { forward };
                table.get(i as usize).map(|&j| Coset::Index(j))
            }
            (Move::ZShift, Coset::Int(n)) => Some(Coset::Int(n + step)),
            (Move::Z2ShiftA, Coset::Lattice(i, j)) => Some(Coset::Lattice(i + step as i32, j)),
            (Move::Z2ShiftB, Coset::Lattice(i, j)) => Some(Coset::Lattice(i, j + step as i32)),
            (Move::FreeLeftMult(l), Coset::Word(w)) => w.left_mul(*l, inverse).map(Coset::Word),
            _ => None,
        };
        out.ok_or_else(|| Error::Voltage(format!("move {self:?} cannot act on {x}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub name: String,
    pub action: Move,
}

/// A word in the generators: `(generator index, inverted)` from left to right,
/// acting on fiber points one letter at a time.
pub type Word = Vec<(usize, bool)>;

/// Formal inverse of a word.
pub fn inverse_word(word: &[(usize, bool)]) -> Word {
    word.iter().rev().map(|&(g, inv)| (g, !inv)).collect()
}

/// Free reduction of a word.
pub fn reduce_word(word: &[(usize, bool)]) -> Word {
    let mut out: Word = Vec::with_capacity(word.len());
    for &(g, inv) in word {
        if out.last() == Some(&(g, !inv)) {
            out.pop();
        } else {
            out.push((g, inv));
        }
    }
    out
}

/// Named generators acting on a common fiber, one per chord of the base.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberAction {
    generators: Vec<Generator>,
    finite: Option<usize>,
    basepoint: Coset,
}

impl FiberAction {
    pub fn new(generators: Vec<Generator>) -> Result<Self> {
        let mut kind: Option<&'static str> = None;
        let mut size: Option<usize> = None;
        for g in &generators {
            if let Some(k) = g.action.kind() {
                if kind.is_some_and(|prev| prev != k) {
                    return Err(Error::Voltage(format!(
                        "generator `{}` acts on a different fiber type",
                        g.name
                    )));
                }
                kind = Some(k);
            }
            if let Move::Perm { forward, .. } = &g.action {
                if size.is_some_and(|s| s != forward.len()) {
                    return Err(Error::Voltage("permutations of different sizes".into()));
                }
                size = Some(forward.len());
            }
            if let Move::FreeLeftMult(l) = g.action {
                if l >= 4 {
                    return Err(Error::Voltage("free groups of rank above 4".into()));
                }
            }
        }
        let (finite, basepoint) = match kind {
            None => (Some(1), Coset::Index(0)),
            Some("perm") => (size, Coset::Index(0)),
            Some("z") => (None, Coset::Int(0)),
            Some("z2") => (None, Coset::Lattice(0, 0)),
            Some(_) => (None, Coset::Word(FreeWord::identity())),
        };
        let mut seen = std::collections::HashSet::new();
        for g in &generators {
            if !seen.insert(g.name.as_str()) {
                return Err(Error::Voltage(format!("generator `{}` defined twice", g.name)));
            }
        }
        Ok(Self {
            generators,
            finite,
            basepoint,
        })
    }

    /// ℤ acting on itself by the shift `a`.
    pub fn z_shift() -> Self {
        Self::from_moves(&[("a", Move::ZShift)])
    }

    /// ℤ² acting on itself by the shifts `a` and `b`.
    pub fn z2_shifts() -> Self {
        Self::from_moves(&[("a", Move::Z2ShiftA), ("b", Move::Z2ShiftB)])
    }

    /// Free group of rank `rank` acting on itself.
    pub fn free(rank: usize) -> Self {
        let names = ["a", "b", "c", "d"];
        let moves: Vec<(&str, Move)> = (0..rank.min(4))
            .map(|l| (names[l], Move::FreeLeftMult(l as u8)))
            .collect();
        Self::from_moves(&moves)
    }

    fn from_moves(moves: &[(&str, Move)]) -> Self {
        Self::new(
            moves
                .iter()
                .map(|(n, m)| Generator {
                    name: n.to_string(),
                    action: m.clone(),
                })
                .collect(),
        )
        .expect("consistent builtin action")
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    /// Fiber cardinality for permutation actions.
    pub fn finite_size(&self) -> Option<usize> {
        self.finite
    }

    pub fn is_finite(&self) -> bool {
        self.finite.is_some()
    }

    pub fn basepoint(&self) -> Coset {
        self.basepoint
    }

    pub fn apply(&self, g: usize, x: Coset, inverse: bool) -> Result<Coset> {
        self.generators[g].action.apply(x, inverse)
    }

    pub fn apply_word(&self, word: &[(usize, bool)], mut x: Coset) -> Result<Coset> {
        for &(g, inv) in word {
            x = self.apply(g, x, inv)?;
        }
        Ok(x)
    }

    pub fn word_name(&self, word: &[(usize, bool)]) -> String {
        if word.is_empty() {
            return "e".into();
        }
        word.iter()
            .map(|&(g, inv)| {
                let n = &self.generators[g].name;
                if inv {
                    format!("{n}^-1")
                } else {
                    n.clone()
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Every fiber point of a finite action.
    pub fn all_points(&self) -> Option<Vec<Coset>> {
        self.finite.map(|n| (0..n as u32).map(Coset::Index).collect())
    }

    pub fn describe(&self) -> String {
        self.generators
            .iter()
            .map(|g| g.name.clone())
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_word_reduction() {
        let w = FreeWord::identity().left_mul(0, false).unwrap();
        let w2 = w.left_mul(1, false).unwrap();
        assert_eq!(w2.to_string(), "ba");
        assert_eq!(w2.left_mul(1, true).unwrap(), w);
        assert_eq!(w.left_mul(0, true).unwrap(), FreeWord::identity());
    }

    #[test]
    fn cycle_notation() {
        let m = Move::from_cycles(3, "(1 2 3)").unwrap();
        assert_eq!(m.apply(Coset::Index(0), false).unwrap(), Coset::Index(1));
        assert_eq!(m.apply(Coset::Index(0), true).unwrap(), Coset::Index(2));
        assert!(Move::from_cycles(3, "(1 1)").is_err());
        assert!(Move::from_cycles(3, "(1 4)").is_err());
    }

    #[test]
    fn mixed_fiber_types_rejected() {
        let gens = vec![
            Generator {
                name: "a".into(),
                action: Move::ZShift,
            },
            Generator {
                name: "b".into(),
                action: Move::Z2ShiftA,
            },
        ];
        assert!(FiberAction::new(gens).is_err());
    }
}
