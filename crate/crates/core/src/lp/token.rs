use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::lp::error::LpError;
use crate::num;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenClass {
    Free,
    Minted,
}

/// A token type. Minted tokens remember the symbol of their underlying free token,
/// so a minted id can only ever be derived from a free one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId {
    symbol: Arc<str>,
    underlying: Option<Arc<str>>,
}

impl TokenId {
    pub fn free(symbol: &str) -> Self {
        TokenId {
            symbol: Arc::from(symbol),
            underlying: None,
        }
    }

    /// The minted counterpart of a free token (`ETH` -> `ETH'`).
    ///
    /// Minting a minted token returns it unchanged.
    pub fn minted_of(free: &TokenId) -> Self {
        match &free.underlying {
            Some(_) => free.clone(),
            None => TokenId {
                symbol: Arc::from(format!("{}'", free.symbol)),
                underlying: Some(free.symbol.clone()),
            },
        }
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn class(&self) -> TokenClass {
        if self.underlying.is_some() {
            TokenClass::Minted
        } else {
            TokenClass::Free
        }
    }

    pub fn is_free(&self) -> bool {
        self.underlying.is_none()
    }

    pub fn is_minted(&self) -> bool {
        self.underlying.is_some()
    }

    /// Underlying free token of a minted token.
    pub fn underlying(&self) -> Option<TokenId> {
        self.underlying.as_deref().map(TokenId::free)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)
    }
}

impl fmt::Debug for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)
    }
}

/// Agent identifier, ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(Arc<str>);

impl AgentId {
    pub fn new(name: &str) -> Self {
        AgentId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId::new(s)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binary operation lifted onto token maps by [`TokenMap::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapOp {
    Add,
    Sub,
}

/// Partial map from tokens to non-negative amounts.
///
/// Absent keys read as zero, but presence is kept: `apply` inserts on a missing
/// key instead of combining, exactly like the point-wise update it models.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TokenMap {
    entries: BTreeMap<TokenId, f64>,
}

impl TokenMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, token: &TokenId) -> f64 {
        self.entries.get(token).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, token: &TokenId) -> bool {
        self.entries.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TokenId, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &TokenId> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `f ∘ v : τ` as a new map.
    pub fn apply(&self, op: MapOp, v: f64, token: &TokenId) -> Result<TokenMap, LpError> {
        let mut out = self.clone();
        out.apply_in_place(op, v, token)?;
        Ok(out)
    }

    /// In-place `f ∘ v : τ`. On error the map is left untouched.
    ///
    /// A subtraction that overshoots zero by no more than the relative tolerance
    /// lands on exactly zero.
    pub fn apply_in_place(&mut self, op: MapOp, v: f64, token: &TokenId) -> Result<(), LpError> {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(LpError::UndefinedResult {
                token: token.to_string(),
                detail: format!("operand {v} is not a non-negative real"),
            });
        }
        match self.entries.get_mut(token) {
            None => {
                self.entries.insert(token.clone(), v);
            }
            Some(current) => {
                let next = match op {
                    MapOp::Add => *current + v,
                    MapOp::Sub => {
                        let diff = *current - v;
                        if diff >= 0.0 {
                            diff
                        } else if num::approx_ge(*current, v) {
                            0.0
                        } else {
                            return Err(LpError::UndefinedResult {
                                token: token.to_string(),
                                detail: format!("{} - {} leaves the non-negative reals", current, v),
                            });
                        }
                    }
                };
                *current = next;
            }
        }
        Ok(())
    }

    /// Direct write, used by state construction.
    pub(crate) fn set(&mut self, token: TokenId, v: f64) {
        self.entries.insert(token, v);
    }

    pub(crate) fn scale_all(&mut self, factor: f64) {
        for v in self.entries.values_mut() {
            *v *= factor;
        }
    }
}

impl FromIterator<(TokenId, f64)> for TokenMap {
    fn from_iter<I: IntoIterator<Item = (TokenId, f64)>>(iter: I) -> Self {
        TokenMap {
            entries: iter.into_iter().collect(),
        }
    }
}
