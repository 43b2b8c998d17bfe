//! Scalar fields on `R^d` that the operators and moduli can sample.

use crate::lattice::MultiIndex;

/// A real-valued function of `d` variables that can be sampled concurrently.
pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// `D^lambda f(x)` when an exact derivative is available.
    fn derivative(&self, _lambda: &MultiIndex, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// Adapts a closure to [`Field`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        (**self).derivative(lambda, x)
    }
}

impl<T: Field + ?Sized + Send> Field for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        (**self).derivative(lambda, x)
    }
}

/// `D^lambda f` exposed as a field; panics on evaluation if `f` has no oracle.
pub struct DerivativeField<'a, F: ?Sized> {
    pub f: &'a F,
    pub lambda: MultiIndex,
}

impl<F: Field + ?Sized> Field for DerivativeField<'_, F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if self.lambda.sum() == 0 {
            return self.f.eval(x);
        }
        self.f
            .derivative(&self.lambda, x)
            .expect("field has no derivative oracle")
    }
}
