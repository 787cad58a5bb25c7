//! System types and their resolution to backend dimensions.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A system type: an ordered tensor product of atomic system labels.
///
/// The empty product is the tensor unit `I`, which has dimension 1 in every
/// backend. Tensoring concatenates labels, so `A ⊗ I = A` holds
/// structurally.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SystemType {
    factors: Vec<String>,
}

impl SystemType {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn atom(label: impl Into<String>) -> Self {
        Self { factors: vec![label.into()] }
    }

    pub fn from_factors<I, S>(factors: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { factors: factors.into_iter().map(Into::into).collect() }
    }

    pub fn tensor(&self, other: &SystemType) -> SystemType {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        SystemType { factors }
    }

    /// `n`-fold tensor power; `power(0)` is the unit.
    pub fn power(&self, n: usize) -> SystemType {
        let mut out = SystemType::unit();
        for _ in 0..n {
            out = out.tensor(self);
        }
        out
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        f.write_str(&self.factors.join("*"))
    }
}

/// Largest total dimension any single wire bundle may resolve to.
pub const MAX_DIMENSION: usize = 1 << 20;

/// Declared atomic systems and their dimensions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    dims: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: impl Into<String>, dim: usize) -> Self {
        self.declare(label, dim);
        self
    }

    pub fn declare(&mut self, label: impl Into<String>, dim: usize) {
        self.dims.insert(label.into(), dim);
    }

    pub fn contains(&self, label: &str) -> bool {
        self.dims.contains_key(label)
    }

    pub fn atom_dim(&self, label: &str) -> Result<usize> {
        self.dims.get(label).copied().ok_or_else(|| Error::UnknownSystem(label.to_string()))
    }

    /// Product of the factor dimensions.
    pub fn dim(&self, ty: &SystemType) -> Result<usize> {
        ty.factors.iter().try_fold(1usize, |acc, label| {
            let d = self.atom_dim(label)?;
            acc.checked_mul(d)
                .filter(|&v| v <= MAX_DIMENSION)
                .ok_or_else(|| Error::DimensionOverflow(format!("type {ty} exceeds {MAX_DIMENSION}")))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.dims.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
