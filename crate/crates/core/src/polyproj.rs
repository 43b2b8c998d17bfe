//! Tensor polynomials of coordinate degree `<= l` and the L2-orthogonal
//! projection onto them over an axis-aligned cell.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{IndexBox, MultiIndex, MAX_DIM};
use crate::quadrature::for_each_tensor_node;

/// Largest supported per-axis polynomial degree.
pub const MAX_DEGREE: usize = 31;

/// The open cell `x0 + delta * (0,1)^d`.
#[derive(Clone, Copy, PartialEq)]
pub struct Cell {
    dim: u8,
    x0: [f64; MAX_DIM],
    delta: [f64; MAX_DIM],
}

impl Cell {
    pub fn new(x0: &[f64], delta: &[f64]) -> Result<Self> {
        if x0.len() != delta.len() {
            return Err(Error::DimensionMismatch {
                expected: x0.len(),
                found: delta.len(),
            });
        }
        if x0.is_empty() || x0.len() > MAX_DIM {
            return Err(Error::InvalidDimension {
                found: x0.len(),
                max: MAX_DIM,
            });
        }
        if let Some(bad) = delta.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "cell edge lengths must be positive, got {bad}"
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("cell corner must be finite".into()));
        }
        let mut c = Self {
            dim: x0.len() as u8,
            x0: [0.0; MAX_DIM],
            delta: [0.0; MAX_DIM],
        };
        c.x0[..x0.len()].copy_from_slice(x0);
        c.delta[..x0.len()].copy_from_slice(delta);
        Ok(c)
    }

    /// The unit cube `(0,1)^d`.
    pub fn unit(d: usize) -> Self {
        Self::new(&vec![0.0; d], &vec![1.0; d]).expect("dimension out of range")
    }

    /// Dyadic cube `Q_{kappa,nu} = 2^{-kappa} nu + 2^{-kappa} I^d`.
    pub fn dyadic(kappa: &MultiIndex, nu: &MultiIndex) -> Self {
        let d = kappa.dim();
        let mut c = Self {
            dim: d as u8,
            x0: [0.0; MAX_DIM],
            delta: [0.0; MAX_DIM],
        };
        for j in 0..d {
            let h = (2.0f64).powi(-(kappa[j] as i32));
            c.x0[j] = nu[j] as f64 * h;
            c.delta[j] = h;
        }
        c
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn x0(&self) -> &[f64] {
        &self.x0[..self.dim()]
    }

    #[inline]
    pub fn delta(&self) -> &[f64] {
        &self.delta[..self.dim()]
    }

    pub fn volume(&self) -> f64 {
        self.delta().iter().product()
    }

    pub fn hi(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.x0[j] + self.delta[j]).collect()
    }

    /// Closed-cell membership.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|j| x[j] >= self.x0[j] && x[j] <= self.x0[j] + self.delta[j])
    }
}

impl std::fmt::Debug for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cell {{ x0: {:?}, delta: {:?} }}", self.x0(), self.delta())
    }
}

/// Orthonormal shifted Legendre values `phi_k^{(r)}(x)` for `k = 0..=n` on
/// `[a, a + h]`, written into `out[..=n]`.
#[inline]
fn basis_values(n: usize, r: usize, a: f64, h: f64, x: f64, out: &mut [f64]) {
    let t = 2.0 * (x - a) / h - 1.0;
    // p_k[s] = P_k^{(s)}(t), rolled over k
    let mut p_km1 = [0.0f64; MAX_DEGREE + 2];
    let mut p_k = [0.0f64; MAX_DEGREE + 2];
    p_k[0] = 1.0;
    let scale_r = (2.0 / h).powi(r as i32);
    let norm = |k: usize| ((2 * k + 1) as f64 / h).sqrt();
    out[0] = if r == 0 { norm(0) } else { 0.0 };
    if n == 0 {
        return;
    }
    for k in 0..n {
        // P_{k+1}^{(s)} = ((2k+1)(t P_k^{(s)} + s P_k^{(s-1)}) - k P_{k-1}^{(s)}) / (k+1)
        let mut next = [0.0f64; MAX_DEGREE + 2];
        let kf = k as f64;
        for s in 0..=r.min(k + 1) {
            let lower = if s > 0 { p_k[s - 1] } else { 0.0 };
            next[s] = ((2.0 * kf + 1.0) * (t * p_k[s] + s as f64 * lower) - kf * p_km1[s])
                / (kf + 1.0);
        }
        p_km1 = p_k;
        p_k = next;
        out[k + 1] = norm(k + 1) * scale_r * p_k[r];
    }
}

/// A polynomial of coordinate degree `<= degree`, expanded in the tensor
/// orthonormal Legendre basis of `cell`. Coefficients are row-major over
/// `Z_+^d(degree)` with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorPolynomial {
    pub degree: MultiIndex,
    pub cell: Cell,
    pub coeffs: Vec<f64>,
}

fn check_degree(l: &MultiIndex) -> Result<()> {
    l.require_nonnegative("polynomial degree")?;
    if l.max_entry() as usize > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "polynomial degree {l} exceeds {MAX_DEGREE}"
        )));
    }
    Ok(())
}

fn coeff_len(l: &MultiIndex) -> usize {
    l.as_slice().iter().map(|&k| k as usize + 1).product()
}

impl TensorPolynomial {
    pub fn new(degree: MultiIndex, cell: Cell, coeffs: Vec<f64>) -> Result<Self> {
        check_degree(&degree)?;
        if degree.dim() != cell.dim() {
            return Err(Error::DimensionMismatch {
                expected: cell.dim(),
                found: degree.dim(),
            });
        }
        if coeffs.len() != coeff_len(&degree) {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} needs {} coefficients, got {}",
                coeff_len(&degree),
                coeffs.len()
            )));
        }
        Ok(Self {
            degree,
            cell,
            coeffs,
        })
    }

    pub fn zero(degree: MultiIndex, cell: Cell) -> Self {
        let n = coeff_len(&degree);
        Self::new(degree, cell, vec![0.0; n]).expect("valid degree")
    }

    /// The constant polynomial `c`.
    pub fn constant(c: f64, degree: MultiIndex, cell: Cell) -> Self {
        let mut p = Self::zero(degree, cell);
        p.coeffs[0] = c * cell.volume().sqrt();
        p
    }

    pub fn dim(&self) -> usize {
        self.degree.dim()
    }

    /// Multi-indices `k` in coefficient order.
    pub fn index_set(&self) -> IndexBox {
        IndexBox::new(MultiIndex::zeros(self.dim()), self.degree).expect("same dimension")
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval_derivative(&MultiIndex::zeros(self.dim()), x)
    }

    /// `D^lambda p(x)`; zero when some `lambda_j` exceeds the degree.
    pub fn eval_derivative(&self, lambda: &MultiIndex, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut b = [[0.0f64; MAX_DEGREE + 1]; MAX_DIM];
        for j in 0..d {
            let n = self.degree[j] as usize;
            let r = lambda[j];
            if r < 0 {
                return 0.0;
            }
            if r as usize > n {
                return 0.0;
            }
            basis_values(n, r as usize, self.cell.x0[j], self.cell.delta[j], x[j], &mut b[j]);
        }
        contract(&self.degree, &self.coeffs, &b[..d])
    }
}

/// `sum_k c_k prod_j b[j][k_j]` over row-major `k`.
#[inline]
fn contract(degree: &MultiIndex, coeffs: &[f64], b: &[[f64; MAX_DEGREE + 1]]) -> f64 {
    let d = b.len();
    if d == 1 {
        return coeffs
            .iter()
            .zip(&b[0][..coeffs.len()])
            .map(|(c, v)| c * v)
            .sum();
    }
    // sum over the last axis first, then accumulate with the leading products
    let last = degree[d - 1] as usize + 1;
    let mut idx = [0usize; MAX_DIM];
    let mut total = 0.0;
    for chunk in coeffs.chunks_exact(last) {
        let inner: f64 = chunk.iter().zip(&b[d - 1][..last]).map(|(c, v)| c * v).sum();
        let mut w = 1.0;
        for j in 0..d - 1 {
            w *= b[j][idx[j]];
        }
        total += w * inner;
        let mut j = d - 1;
        while j > 0 {
            j -= 1;
            idx[j] += 1;
            if idx[j] <= degree[j] as usize {
                break;
            }
            idx[j] = 0;
        }
    }
    total
}

impl Field for TensorPolynomial {
    fn dim(&self) -> usize {
        self.degree.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.value(x)
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        Some(self.eval_derivative(lambda, x))
    }
}

/// Convenience form of [`TensorPolynomial::eval_derivative`].
pub fn eval_tensor_poly(p: &TensorPolynomial, lambda: &MultiIndex, x: &[f64]) -> f64 {
    p.eval_derivative(lambda, x)
}

/// Default number of Gauss points per axis for degree `l`.
pub fn default_quad_order(l: &MultiIndex) -> usize {
    l.max_entry() as usize + 3
}

/// L2(cell)-orthogonal projection of `f` onto polynomials of degree `<= l`,
/// by `quad_order`-point Gauss–Legendre quadrature per axis.
pub fn project<F: Field + ?Sized>(
    f: &F,
    cell: &Cell,
    l: &MultiIndex,
    quad_order: usize,
) -> Result<TensorPolynomial> {
    check_degree(l)?;
    let d = cell.dim();
    if l.dim() != d || f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if l.dim() != d { l.dim() } else { f.dim() },
        });
    }
    let min = l.max_entry() as usize + 1;
    if quad_order < min {
        return Err(Error::QuadratureOrder {
            given: quad_order,
            min,
        });
    }
    let mut coeffs = vec![0.0; coeff_len(l)];
    let mut bad: Option<(f64, Vec<f64>)> = None;
    let mut b = [[0.0f64; MAX_DEGREE + 1]; MAX_DIM];
    let orders = vec![quad_order; d];
    for_each_tensor_node(cell.x0(), cell.delta(), &orders, |x, w| {
        if bad.is_some() {
            return;
        }
        let v = f.eval(x);
        if !v.is_finite() {
            bad = Some((v, x.to_vec()));
            return;
        }
        for j in 0..d {
            basis_values(l[j] as usize, 0, cell.x0[j], cell.delta[j], x[j], &mut b[j]);
        }
        accumulate(l, &mut coeffs, &b[..d], w * v);
    });
    if let Some((value, point)) = bad {
        return Err(Error::NonFinite { value, point });
    }
    TensorPolynomial::new(*l, *cell, coeffs)
}

/// `coeffs[k] += s * prod_j b[j][k_j]` for every `k`.
fn accumulate(l: &MultiIndex, coeffs: &mut [f64], b: &[[f64; MAX_DEGREE + 1]], s: f64) {
    let d = b.len();
    let last = l[d - 1] as usize + 1;
    let mut idx = [0usize; MAX_DIM];
    for chunk in coeffs.chunks_exact_mut(last) {
        let mut w = s;
        for j in 0..d - 1 {
            w *= b[j][idx[j]];
        }
        for (c, v) in chunk.iter_mut().zip(&b[d - 1][..last]) {
            *c += w * v;
        }
        let mut j = d - 1;
        while j > 0 {
            j -= 1;
            idx[j] += 1;
            if idx[j] <= l[j] as usize {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// `||f||_{L_p(cell)}` by tensor Gauss–Legendre quadrature of `|f|^p`.
pub fn cell_lp_norm<F: Field + ?Sized>(f: &F, cell: &Cell, p: f64, order: usize) -> f64 {
    let orders = vec![order; cell.dim()];
    let mut s = 0.0;
    for_each_tensor_node(cell.x0(), cell.delta(), &orders, |x, w| {
        s += w * f.eval(x).abs().powf(p);
    });
    s.powf(1.0 / p)
}

/// Ratios controlling the local projection on one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionDiagnostics {
    /// `||P f||_p / ||f||_p`.
    pub stability_ratio: f64,
    /// `||f - P f||_{L_p(cell)}`.
    pub jackson_lhs: f64,
    /// Sum over axes of `delta_j^{-1/p}` times the `L_p` norm of the
    /// `(l_j+1)`-th difference along `e_j`, integrated over steps `|xi| < delta_j`.
    pub jackson_rhs: f64,
}

/// Gauss points per axis used by [`projection_diagnostics`].
pub const DIAGNOSTIC_ORDER: usize = 12;

pub fn projection_diagnostics<F: Field + ?Sized>(
    f: &F,
    cell: &Cell,
    l: &MultiIndex,
    p: f64,
) -> Result<ProjectionDiagnostics> {
    projection_diagnostics_with_order(f, cell, l, p, DIAGNOSTIC_ORDER)
}

pub fn projection_diagnostics_with_order<F: Field + ?Sized>(
    f: &F,
    cell: &Cell,
    l: &MultiIndex,
    p: f64,
    order: usize,
) -> Result<ProjectionDiagnostics> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf), got {p}")));
    }
    let pf = project(f, cell, l, order.max(default_quad_order(l)))?;
    let d = cell.dim();
    let fnorm = cell_lp_norm(f, cell, p, order);
    let pnorm = cell_lp_norm(&pf, cell, p, order);
    let resid = crate::field::FnField::new(d, |x: &[f64]| f.eval(x) - pf.value(x));
    let jackson_lhs = cell_lp_norm(&resid, cell, p, order);

    let mut jackson_rhs = 0.0;
    let rules = crate::quadrature::GaussRule::cached(order);
    for j in 0..d {
        let r = l[j] as usize + 1;
        let dj = cell.delta[j];
        // steps beyond delta_j / r leave an empty shrunken cell
        let reach = dj / r as f64;
        let mut integral = 0.0;
        for sign in [-1.0, 1.0] {
            for (t, wt) in rules.nodes.iter().zip(&rules.weights) {
                let xi = sign * reach * t;
                let span = r as f64 * xi.abs();
                let mut x0 = cell.x0().to_vec();
                let mut delta = cell.delta().to_vec();
                delta[j] -= span;
                if xi < 0.0 {
                    x0[j] += span;
                }
                let shrunk = Cell::new(&x0, &delta)?;
                let diff = crate::field::FnField::new(d, |x: &[f64]| {
                    let mut y = x.to_vec();
                    let mut acc = 0.0;
                    for k in 0..=r {
                        y[j] = x[j] + k as f64 * xi;
                        let c = crate::lattice::binomial(r as u64, k as u64) as f64;
                        let s = if (r - k) % 2 == 0 { c } else { -c };
                        acc += s * f.eval(&y);
                    }
                    acc
                });
                let n = cell_lp_norm(&diff, &shrunk, p, order);
                integral += wt * reach * n.powf(p);
            }
        }
        jackson_rhs += dj.powf(-1.0 / p) * integral.powf(1.0 / p);
    }
    Ok(ProjectionDiagnostics {
        stability_ratio: pnorm / fnorm,
        jackson_lhs,
        jackson_rhs,
    })
}
