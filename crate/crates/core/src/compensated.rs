//! Neumaier-compensated accumulation.

use std::ops::AddAssign;

use num_complex::Complex64;

/// Running sum with a separate compensation term for the low-order bits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new(value: f64) -> Self {
        Self {
            sum: value,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated sum of an iterator.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<NeumaierSum>().total()
}

/// Complex running sum; real and imaginary parts are compensated independently.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    #[inline]
    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}

impl AddAssign<Complex64> for ComplexSum {
    #[inline]
    fn add_assign(&mut self, rhs: Complex64) {
        self.add(rhs);
    }
}

/// A mesh field accumulated point-by-point with compensation.
///
/// Holds small increments to a large base field apart from the base so they
/// are not rounded away step after step.
#[derive(Clone, Debug)]
pub struct CompensatedField {
    cells: Vec<ComplexSum>,
}

impl CompensatedField {
    pub fn zeros(n: usize) -> Self {
        Self {
            cells: vec![ComplexSum::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Adds `increments` elementwise.
    pub fn accumulate(&mut self, increments: &[Complex64]) {
        debug_assert_eq!(increments.len(), self.cells.len());
        for (cell, &inc) in self.cells.iter_mut().zip(increments) {
            cell.add(inc);
        }
    }

    /// Writes the current totals into `out`.
    pub fn totals_into(&self, out: &mut [Complex64]) {
        for (o, cell) in out.iter_mut().zip(&self.cells) {
            *o = cell.total();
        }
    }

    pub fn totals(&self) -> Vec<Complex64> {
        self.cells.iter().map(ComplexSum::total).collect()
    }
}
