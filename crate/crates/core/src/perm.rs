//! Permutations of block indices and finite permutation groups.
//!
//! Convention used throughout the crate: `σ[i]` is the image of the source
//! index `i`, and `a.compose(&b)` is the map `i ↦ a[b[i]]`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(k: usize) -> Self {
        Perm((0..k).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &j in &images {
            if j >= k || seen[j] {
                return Err(Error::InvalidPermutation(format!(
                    "{images:?} is not a permutation of 0..{k}"
                )));
            }
            seen[j] = true;
        }
        Ok(Perm(images))
    }

    /// Parses a 1-based image list as written in instance files.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation(
                "block indices are 1-based".to_string(),
            ));
        }
        Self::from_images(images.iter().map(|&j| j - 1).collect())
    }

    pub fn transposition(k: usize, i: usize, j: usize) -> Self {
        let mut p = Self::identity(k);
        p.0.swap(i, j);
        p
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|j| j + 1).collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Perm(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// True when `v[σ(i)] == v[i]` for every `i`.
    pub fn preserves<V: PartialEq>(&self, v: &[V]) -> bool {
        v.len() == self.len() && (0..self.len()).all(|i| v[self.0[i]] == v[i])
    }

    /// Sign of the permutation, `+1` or `-1`.
    pub fn sign(&self) -> i32 {
        let mut seen = vec![false; self.len()];
        let mut sign = 1;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.0[i];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        sign
    }

    /// All permutations of `0..k` in lexicographic order.
    pub fn all(k: usize) -> Vec<Perm> {
        let mut cur: Vec<usize> = (0..k).collect();
        let mut out = vec![Perm(cur.clone())];
        while next_permutation(&mut cur) {
            out.push(Perm(cur.clone()));
        }
        out
    }

    /// Cycle notation with 1-based labels, e.g. `(1 2)(3 4)`; `()` for the identity.
    pub fn cycle_string(&self) -> String {
        let mut seen = vec![false; self.len()];
        let mut out = String::new();
        for start in 0..self.len() {
            if seen[start] || self.0[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push((i + 1).to_string());
                i = self.0[i];
            }
            out.push('(');
            out.push_str(&cycle.join(" "));
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.cycle_string())
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A finite set of permutations of a common degree, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermGroup {
    degree: usize,
    elements: Vec<Perm>,
}

impl PermGroup {
    /// Wraps a set of permutations; duplicates are removed and the order is
    /// normalized. Closure is not assumed; see [`PermGroup::is_group`].
    pub fn from_elements(degree: usize, elements: impl IntoIterator<Item = Perm>) -> Self {
        let set: BTreeSet<Perm> = elements.into_iter().collect();
        debug_assert!(set.iter().all(|p| p.len() == degree));
        PermGroup { degree, elements: set.into_iter().collect() }
    }

    pub fn trivial(degree: usize) -> Self {
        Self::from_elements(degree, [Perm::identity(degree)])
    }

    pub fn symmetric(degree: usize) -> Self {
        Self::from_elements(degree, Perm::all(degree))
    }

    /// Subgroup generated by `gens`.
    pub fn generated_by(degree: usize, gens: &[Perm]) -> Self {
        let mut set: BTreeSet<Perm> = BTreeSet::new();
        set.insert(Perm::identity(degree));
        let mut frontier: Vec<Perm> = vec![Perm::identity(degree)];
        while let Some(p) = frontier.pop() {
            for g in gens {
                let q = g.compose(&p);
                if set.insert(q.clone()) {
                    frontier.push(q);
                }
            }
        }
        PermGroup { degree, elements: set.into_iter().collect() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    /// Identity present, closed under composition and inverse.
    pub fn is_group(&self) -> bool {
        if !self.contains(&Perm::identity(self.degree)) {
            return false;
        }
        self.elements.iter().all(|a| {
            self.contains(&a.inverse())
                && self.elements.iter().all(|b| self.contains(&a.compose(b)))
        })
    }

    pub fn is_subset_of(&self, other: &PermGroup) -> bool {
        self.degree == other.degree && self.elements.iter().all(|p| other.contains(p))
    }

    pub fn is_normal_in(&self, other: &PermGroup) -> bool {
        self.is_subset_of(other)
            && other.elements.iter().all(|g| {
                let gi = g.inverse();
                self.elements.iter().all(|h| self.contains(&g.compose(h).compose(&gi)))
            })
    }

    /// A small generating set, chosen greedily in sorted order.
    pub fn generators(&self) -> Vec<Perm> {
        let mut gens: Vec<Perm> = Vec::new();
        let mut span = PermGroup::trivial(self.degree);
        for p in &self.elements {
            if !span.contains(p) {
                gens.push(p.clone());
                span = PermGroup::generated_by(self.degree, &gens);
            }
        }
        gens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_and_inverse() {
        let a = Perm::from_images(vec![1, 2, 0]).unwrap();
        let b = Perm::transposition(3, 0, 1);
        // (a∘b)(0) = a(1) = 2
        assert_eq!(a.compose(&b).apply(0), 2);
        assert!(a.compose(&a.inverse()).is_identity());
        assert_eq!(a.sign(), 1);
        assert_eq!(b.sign(), -1);
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(Perm::from_images(vec![0, 0]).is_err());
        assert!(Perm::from_images(vec![2, 0]).is_err());
        assert!(Perm::from_one_based(&[0, 1]).is_err());
    }

    #[test]
    fn enumerates_symmetric_group() {
        assert_eq!(Perm::all(0).len(), 1);
        assert_eq!(Perm::all(4).len(), 24);
        let s3 = PermGroup::symmetric(3);
        assert!(s3.is_group());
        assert_eq!(s3.generators().len(), 2);
        let gen = PermGroup::generated_by(3, &s3.generators());
        assert_eq!(gen, s3);
    }

    #[test]
    fn cycle_notation() {
        assert_eq!(Perm::identity(3).cycle_string(), "()");
        assert_eq!(Perm::transposition(3, 0, 2).cycle_string(), "(1 3)");
    }

    #[test]
    fn normal_subgroups() {
        let s3 = PermGroup::symmetric(3);
        let a3 = PermGroup::from_elements(3, Perm::all(3).into_iter().filter(|p| p.sign() == 1));
        assert!(a3.is_group());
        assert!(a3.is_normal_in(&s3));
        let t = PermGroup::generated_by(3, &[Perm::transposition(3, 0, 1)]);
        assert!(t.is_group());
        assert!(!t.is_normal_in(&s3));
    }
}
