use std::collections::BTreeMap;

use num_complex::Complex;

use crate::geometry::{IndexSet, LatticePoint};
use crate::real::{czero, is_zero, norm2, Real};

/// Finitely supported vector on `Z^N`. Only nonzero entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportedVector<T: Real> {
    dimension: usize,
    entries: BTreeMap<LatticePoint, Complex<T>>,
}

impl<T: Real> SupportedVector<T> {
    pub fn zeros(dimension: usize) -> Self {
        Self { dimension, entries: BTreeMap::new() }
    }

    /// The delta vector `e_point`.
    pub fn unit(point: LatticePoint) -> Self {
        let mut v = Self::zeros(point.dimension());
        v.entries.insert(point, Complex::new(T::one(), T::zero()));
        v
    }

    /// Collects entries, summing duplicates and dropping zeros.
    pub fn from_entries(dimension: usize, entries: impl IntoIterator<Item = (LatticePoint, Complex<T>)>) -> Self {
        let mut v = Self::zeros(dimension);
        for (p, z) in entries {
            v.add_at(p, z);
        }
        v
    }

    /// Vector with the given values on the points of `index`, in order.
    pub fn from_dense(index: &IndexSet, values: &[Complex<T>]) -> Self {
        assert_eq!(index.len(), values.len(), "value count must match index set");
        Self::from_entries(index.dimension(), index.iter().cloned().zip(values.iter().copied()))
    }

    /// Samples `f` on every point of `index`.
    pub fn from_fn(index: &IndexSet, f: impl Fn(&LatticePoint) -> Complex<T>) -> Self {
        Self::from_entries(index.dimension(), index.iter().map(|p| (p.clone(), f(p))))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, point: &LatticePoint) -> Complex<T> {
        self.entries.get(point).copied().unwrap_or_else(czero)
    }

    pub fn add_at(&mut self, point: LatticePoint, value: Complex<T>) {
        debug_assert_eq!(point.dimension(), self.dimension);
        use std::collections::btree_map::Entry;
        match self.entries.entry(point) {
            Entry::Vacant(slot) => {
                if !is_zero(value) {
                    slot.insert(value);
                }
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += value;
                if is_zero(*slot.get()) {
                    slot.remove();
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &Complex<T>)> {
        self.entries.iter()
    }

    /// Number of stored (nonzero) entries.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm2(&self) -> T {
        let values: Vec<Complex<T>> = self.entries.values().copied().collect();
        norm2(&values)
    }

    /// `P_U v` for the index set `U`.
    pub fn restrict(&self, index: &IndexSet) -> Self {
        Self {
            dimension: self.dimension,
            entries: self
                .entries
                .iter()
                .filter(|(p, _)| index.contains(p))
                .map(|(p, z)| (p.clone(), *z))
                .collect(),
        }
    }

    /// Values on `index`, in index order.
    pub fn to_dense(&self, index: &IndexSet) -> Vec<Complex<T>> {
        index.iter().map(|p| self.get(p)).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (p, z) in &other.entries {
            out.add_at(p.clone(), -*z);
        }
        out
    }
}
