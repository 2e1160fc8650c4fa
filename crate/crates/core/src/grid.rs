//! Dense frame-major time-frequency grids.

use std::ops::{Index, IndexMut};

/// A `frames × bins` array of values stored frame-major, so that one frame's
/// bins are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T = f64> {
    frames: usize,
    bins: usize,
    data: Vec<T>,
}

impl<T: Clone + Default> Grid<T> {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Grid {
            frames,
            bins,
            data: vec![T::default(); frames * bins],
        }
    }
}

impl<T> Grid<T> {
    /// Wraps an existing buffer. Returns `None` if the length does not match.
    pub fn from_vec(frames: usize, bins: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == frames * bins).then_some(Grid { frames, bins, data })
    }

    pub fn from_fn(frames: usize, bins: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(frames * bins);
        for t in 0..frames {
            for k in 0..bins {
                data.push(f(t, k));
            }
        }
        Grid { frames, bins, data }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.bins)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn frame(&self, t: usize) -> &[T] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            frames: self.frames,
            bins: self.bins,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Swaps the roles of the two axes.
    pub fn transposed(&self) -> Grid<T>
    where
        T: Clone,
    {
        Grid::from_fn(self.bins, self.frames, |t, k| self[(k, t)].clone())
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    #[inline]
    fn index(&self, (t, k): (usize, usize)) -> &T {
        debug_assert!(t < self.frames && k < self.bins);
        &self.data[t * self.bins + k]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    #[inline]
    fn index_mut(&mut self, (t, k): (usize, usize)) -> &mut T {
        debug_assert!(t < self.frames && k < self.bins);
        &mut self.data[t * self.bins + k]
    }
}
