//! Alphabets, plain words over `X` and mixed relative words over `X ∪ 𝒫`.

use std::fmt;

use crate::error::{Error, Result};
use crate::parabolics::Payload;

/// A letter of the symmetric generating set `X`.
///
/// Ids come in inverse pairs: `2k` is the k-th named generator and `2k + 1`
/// its formal inverse, so inversion is `id ^ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenId(pub u32);

impl GenId {
    pub fn inverse(self) -> GenId {
        GenId(self.0 ^ 1)
    }

    pub fn base(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn from_base(base: usize, inverse: bool) -> GenId {
        GenId((base as u32) << 1 | inverse as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

const INVERSE_SUFFIXES: [&str; 3] = ["^-1", "⁻¹", "'"];

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty()
                || n.starts_with('P') && n[1..].starts_with(|c: char| c.is_ascii_digit())
                || n.contains(|c: char| c.is_whitespace() || "[]^'⁻".contains(c))
            {
                return Err(Error::Malformed(format!("invalid generator name {n:?}")));
            }
            if names[..i].contains(n) {
                return Err(Error::Malformed(format!("duplicate generator name {n:?}")));
            }
        }
        Ok(Alphabet { names })
    }

    /// Number of letters of the symmetric set (twice the number of names).
    pub fn len(&self) -> usize {
        2 * self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn base_names(&self) -> &[String] {
        &self.names
    }

    pub fn letters(&self) -> impl Iterator<Item = GenId> + '_ {
        (0..self.len() as u32).map(GenId)
    }

    pub fn contains(&self, g: GenId) -> bool {
        (g.0 as usize) < self.len()
    }

    pub fn name(&self, g: GenId) -> String {
        let base = &self.names[g.base()];
        if g.is_inverse() {
            format!("{base}^-1")
        } else {
            base.clone()
        }
    }

    pub fn lookup(&self, token: &str) -> Result<GenId> {
        let (stem, inverse) = INVERSE_SUFFIXES
            .iter()
            .find_map(|s| token.strip_suffix(s).map(|t| (t, true)))
            .unwrap_or((token, false));
        self.names
            .iter()
            .position(|n| n == stem)
            .map(|b| GenId::from_base(b, inverse))
            .ok_or_else(|| Error::Malformed(format!("unknown generator {token:?}")))
    }

    /// Parses a space-separated word. `1` and the empty string denote the
    /// empty word.
    pub fn parse_word(&self, text: &str) -> Result<Vec<GenId>> {
        let text = text.trim();
        if text == "1" || text == "ε" {
            return Ok(Vec::new());
        }
        text.split_whitespace().map(|t| self.lookup(t)).collect()
    }

    pub fn format_word(&self, w: &[GenId]) -> String {
        w.iter().map(|&g| self.name(g)).collect::<Vec<_>>().join(" ")
    }

    pub fn checked_free_reduce(&self, w: &[GenId]) -> Result<Vec<GenId>> {
        if let Some(bad) = w.iter().find(|g| !self.contains(**g)) {
            return Err(Error::Malformed(format!("unknown symbol id {}", bad.0)));
        }
        Ok(free_reduce(w))
    }
}

pub fn free_reduce(w: &[GenId]) -> Vec<GenId> {
    let mut out: Vec<GenId> = Vec::with_capacity(w.len());
    for &g in w {
        if out.last() == Some(&g.inverse()) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    out
}

pub fn invert_word(w: &[GenId]) -> Vec<GenId> {
    w.iter().rev().map(|g| g.inverse()).collect()
}

/// Every contiguous non-empty subword of length at most `max_len`, ordered
/// by start index and then by length.
pub fn subwords<T>(w: &[T], max_len: usize) -> impl Iterator<Item = &[T]> {
    (0..w.len()).flat_map(move |start| {
        let end = w.len().min(start + max_len);
        (start + 1..=end).map(move |stop| &w[start..stop])
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Gen(GenId),
    /// A nontrivial element of the peripheral subgroup with this 0-based index.
    Para { index: usize, payload: Payload },
}

impl Letter {
    pub fn para_index(&self) -> Option<usize> {
        match self {
            Letter::Para { index, .. } => Some(*index),
            Letter::Gen(_) => None,
        }
    }
}

/// A word over `X ∪ 𝒫`. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelWord(pub Vec<Letter>);

impl RelWord {
    pub fn new() -> Self {
        RelWord(Vec::new())
    }

    pub fn from_gens(w: &[GenId]) -> Self {
        RelWord(w.iter().map(|&g| Letter::Gen(g)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn concat(&self, other: &RelWord) -> RelWord {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        RelWord(v)
    }
}

impl From<Vec<Letter>> for RelWord {
    fn from(v: Vec<Letter>) -> Self {
        RelWord(v)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Gen(g) => write!(f, "x{}", g.0),
            Letter::Para { index, payload } => write!(f, "P{}[{}]", index + 1, payload),
        }
    }
}
