//! Lebesgue norms by grid quadrature.
//!
//! The rectangle rule on a periodic uniform grid integrates band-limited
//! functions exactly, so these norms are spectrally accurate for smooth
//! fields. Pointwise magnitudes are Euclidean for vectors and Frobenius for
//! tensors. Sums are compensated so the 1e-12 relative contracts survive
//! large grids.

use ndarray::Array2;

use crate::field::{PhysicalTensorField, PhysicalVectorField};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Anything with a pointwise squared magnitude on a uniform torus grid.
pub trait GridFunction {
    fn cell_measure(&self) -> f64;
    fn for_each_magnitude_sq(&self, f: impl FnMut(f64));
}

impl GridFunction for Array2<f64> {
    fn cell_measure(&self) -> f64 {
        1.0 / self.len() as f64
    }

    fn for_each_magnitude_sq(&self, mut f: impl FnMut(f64)) {
        for x in self.iter() {
            f(x * x);
        }
    }
}

impl GridFunction for PhysicalVectorField {
    fn cell_measure(&self) -> f64 {
        self.grid().cell_measure()
    }

    fn for_each_magnitude_sq(&self, mut f: impl FnMut(f64)) {
        let [a, b] = &self.components;
        for (x, y) in a.iter().zip(b.iter()) {
            f(x * x + y * y);
        }
    }
}

impl GridFunction for PhysicalTensorField {
    fn cell_measure(&self) -> f64 {
        self.grid().cell_measure()
    }

    fn for_each_magnitude_sq(&self, mut f: impl FnMut(f64)) {
        let [[a, b], [c, d]] = &self.components;
        for (((x, y), z), w) in a.iter().zip(b.iter()).zip(c.iter()).zip(d.iter()) {
            f(x * x + y * y + z * z + w * w);
        }
    }
}

pub fn l1_norm<T: GridFunction>(f: &T) -> f64 {
    let mut acc = Compensated::new();
    f.for_each_magnitude_sq(|m2| acc.add(m2.sqrt()));
    acc.value() * f.cell_measure()
}

pub fn l2_norm<T: GridFunction>(f: &T) -> f64 {
    let mut acc = Compensated::new();
    f.for_each_magnitude_sq(|m2| acc.add(m2));
    (acc.value() * f.cell_measure()).sqrt()
}

pub fn linf_norm<T: GridFunction>(f: &T) -> f64 {
    let mut max = 0.0_f64;
    f.for_each_magnitude_sq(|m2| max = max.max(m2));
    max.sqrt()
}
