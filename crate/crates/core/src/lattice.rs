//! Dense d-dimensional index spaces and boolean masks over them.
//!
//! Linear indices run with axis 0 fastest, so a 2D mask is stored row by row
//! with `x` varying inside each row.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc = 1usize;
        for &n in dims {
            strides.push(acc);
            acc *= n;
        }
        Shape {
            dims: dims.to_vec(),
            strides,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    #[inline]
    pub fn coords_into(&self, mut index: usize, out: &mut [usize]) {
        for (axis, &n) in self.dims.iter().enumerate() {
            out[axis] = index % n;
            index /= n;
        }
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        self.coords_into(index, &mut out);
        out
    }
}

/// Boolean field over a [`Shape`]. `wrap` marks periodic boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    shape: Shape,
    wrap: bool,
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(shape: Shape, wrap: bool) -> Self {
        let n = shape.len();
        Mask {
            shape,
            wrap,
            cells: vec![false; n],
        }
    }

    pub fn filled(shape: Shape, wrap: bool, value: bool) -> Self {
        let n = shape.len();
        Mask {
            shape,
            wrap,
            cells: vec![value; n],
        }
    }

    pub fn from_cells(shape: Shape, wrap: bool, cells: Vec<bool>) -> Self {
        assert_eq!(shape.len(), cells.len(), "mask length does not match shape");
        Mask { shape, wrap, cells }
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn wraps(&self) -> bool {
        self.wrap
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.cells[index]
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        self.cells[index] = value;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn fraction(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.cells.len() as f64
    }

    pub fn complement(&self) -> Mask {
        Mask {
            shape: self.shape.clone(),
            wrap: self.wrap,
            cells: self.cells.iter().map(|&c| !c).collect(),
        }
    }

    /// Indices set in `self` but not in `other`.
    pub fn not_contained_in(&self, other: &Mask) -> Vec<usize> {
        assert_eq!(self.shape, other.shape, "masks have different shapes");
        self.cells
            .iter()
            .zip(&other.cells)
            .enumerate()
            .filter(|(_, (&a, &b))| a && !b)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.shape == other.shape
            && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let s = Shape::new(&[3, 4, 5]);
        assert_eq!(s.len(), 60);
        for k in 0..60 {
            assert_eq!(s.index(&s.coords(k)), k);
        }
        assert_eq!(s.index(&[1, 0, 0]), 1);
        assert_eq!(s.index(&[0, 1, 0]), 3);
    }

    #[test]
    fn subset_and_complement() {
        let s = Shape::new(&[2, 2]);
        let a = Mask::from_cells(s.clone(), false, vec![true, false, false, false]);
        let b = Mask::from_cells(s, false, vec![true, true, false, false]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(b.not_contained_in(&a), vec![1]);
        assert_eq!(a.complement().count(), 3);
    }
}
