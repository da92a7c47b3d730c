use serde::{Deserialize, Serialize};

/// A set of forbidden states, stored as a membership mask over row-major
/// state indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    mask: Vec<bool>,
}

impl ConstraintSet {
    pub fn empty(num_states: usize) -> Self {
        Self { mask: vec![false; num_states] }
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(num_states: usize, states: I) -> Self {
        let mut set = Self::empty(num_states);
        for s in states {
            set.insert(s);
        }
        set
    }

    #[inline]
    pub fn contains(&self, s: usize) -> bool {
        self.mask[s]
    }

    /// Returns `true` if the state was not already present.
    pub fn insert(&mut self, s: usize) -> bool {
        !std::mem::replace(&mut self.mask[s], true)
    }

    pub fn remove(&mut self, s: usize) -> bool {
        std::mem::replace(&mut self.mask[s], false)
    }

    pub fn with(&self, s: usize) -> Self {
        let mut out = self.clone();
        out.insert(s);
        out
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn num_states(&self) -> usize {
        self.mask.len()
    }

    /// Members in ascending row-major order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(s, &b)| b.then_some(s))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn intersection_len(&self, other: &ConstraintSet) -> usize {
        self.mask.iter().zip(&other.mask).filter(|(a, b)| **a && **b).count()
    }

    pub fn symmetric_difference_len(&self, other: &ConstraintSet) -> usize {
        self.mask.iter().zip(&other.mask).filter(|(a, b)| a != b).count()
    }
}
