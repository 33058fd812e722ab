use std::fmt;

use crate::error::{Error, Result};
use crate::tol::{stable_sum, MASS_TOL};

/// Probability mass function over ordered atom identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<A> {
    entries: Vec<(A, f64)>,
}

impl<A: Ord + Clone> Pmf<A> {
    /// Duplicate atoms are summed, zero entries dropped; total must be one.
    pub fn new(mut entries: Vec<(A, f64)>) -> Result<Self> {
        if let Some((_, p)) = entries.iter().find(|(_, p)| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidPmf(format!("probability {p} is not in [0, 1]")));
        }
        let total = stable_sum(entries.iter().map(|e| e.1));
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(A, f64)> = Vec::with_capacity(entries.len());
        for (a, p) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += p,
                _ => merged.push((a, p)),
            }
        }
        merged.retain(|e| e.1 > 0.0);
        Ok(Self { entries: merged })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(entries: Vec<(A, f64)>) -> Result<Self> {
        let total = stable_sum(entries.iter().map(|e| e.1));
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        Self::new(entries.into_iter().map(|(a, w)| (a, w / total)).collect())
    }

    pub fn entries(&self) -> &[(A, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prob(&self, atom: &A) -> f64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(atom))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    /// Image under a map of atoms; colliding images are summed.
    pub fn map_atoms<B: Ord + Clone>(&self, f: impl Fn(&A) -> B) -> Pmf<B> {
        let mut entries: Vec<(B, f64)> = self.entries.iter().map(|(a, p)| (f(a), *p)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(B, f64)> = Vec::with_capacity(entries.len());
        for (b, p) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += p,
                _ => merged.push((b, p)),
            }
        }
        Pmf { entries: merged }
    }
}

/// A quantity in bits, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfoValue {
    Finite(f64),
    Infinite,
}

impl InfoValue {
    /// Information quantity; rounding noise below zero is clamped.
    pub fn bits(v: f64) -> Self {
        if v < 0.0 && v > -1e-9 {
            InfoValue::Finite(0.0)
        } else {
            InfoValue::Finite(v)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, InfoValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            InfoValue::Finite(v) => Some(*v),
            InfoValue::Infinite => None,
        }
    }

    /// `self - beta * other`; Infinite absorbs.
    pub fn minus_scaled(self, beta: f64, other: InfoValue) -> InfoValue {
        match (self, other) {
            (InfoValue::Finite(a), InfoValue::Finite(b)) => InfoValue::Finite(a - beta * b),
            _ => InfoValue::Infinite,
        }
    }
}

impl fmt::Display for InfoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfoValue::Infinite => f.write_str("inf"),
            InfoValue::Finite(v) => {
                // Avoid printing "-0.000000".
                let v = if v.abs() < 5e-7 { 0.0 } else { *v };
                write!(f, "{v:.6}")
            }
        }
    }
}
