//! Named separable test functions with exact derivatives.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::MultiIndex;

/// Names accepted by [`TestFunction::parse`]; `mono` and `sinpi` take optional
/// per-axis parameters as `mono:1,2` or `sinpi:1,2`.
pub const REGISTRY: [&str; 5] = ["const", "mono", "sinpi", "gauss", "rough"];

/// Centre and sharpness of the Gaussian bump `exp(-s (x - c)^2)`.
const GAUSS_CENTER: f64 = 0.5;
const GAUSS_SHARPNESS: f64 = 8.0;
/// Exponent of the one-axis cusp `|x_1 - 1/2|^ROUGH_EXPONENT`.
pub const ROUGH_EXPONENT: f64 = 0.6;

#[derive(Clone, Debug, PartialEq)]
enum Factor {
    One,
    Power(u32),
    SinPi(f64),
    Gauss,
    Cusp,
}

impl Factor {
    fn derivative(&self, r: u32, x: f64) -> f64 {
        match *self {
            Factor::One => (r == 0) as u8 as f64,
            Factor::Power(a) => {
                if r > a {
                    return 0.0;
                }
                let c: f64 = (0..r).map(|i| (a - i) as f64).product();
                c * x.powi((a - r) as i32)
            }
            Factor::SinPi(a) => {
                let w = PI * a;
                let phase = (w * x) + r as f64 * PI / 2.0;
                w.powi(r as i32) * phase.sin()
            }
            Factor::Gauss => {
                // d^r/dx^r exp(-s y^2) = (-sqrt s)^r H_r(sqrt(s) y) exp(-s y^2)
                let s = GAUSS_SHARPNESS;
                let y = x - GAUSS_CENTER;
                let z = s.sqrt() * y;
                let (mut h0, mut h1) = (1.0, 2.0 * z);
                let h = if r == 0 {
                    1.0
                } else {
                    for n in 1..r {
                        let h2 = 2.0 * z * h1 - 2.0 * n as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                (-s.sqrt()).powi(r as i32) * h * (-s * y * y).exp()
            }
            Factor::Cusp => {
                let y = x - 0.5;
                let a = ROUGH_EXPONENT;
                let c: f64 = (0..r).map(|i| a - i as f64).product();
                let sign = if y < 0.0 && r % 2 == 1 { -1.0 } else { 1.0 };
                sign * c * y.abs().powf(a - r as f64)
            }
        }
    }
}

/// A product `f(x) = prod_j f_j(x_j)` of one-dimensional factors.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    name: String,
    factors: Vec<Factor>,
}

impl TestFunction {
    /// Resolves a registry name for dimension `d`.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        if d == 0 || d > crate::lattice::MAX_DIM {
            return Err(Error::InvalidDimension {
                found: d,
                max: crate::lattice::MAX_DIM,
            });
        }
        let (head, args) = match text.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a)),
            None => (text.trim(), None),
        };
        let params = |default: f64| -> Result<Vec<f64>> {
            match args {
                None => Ok(vec![default; d]),
                Some(a) => {
                    let v = a
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Parse(format!("bad parameter `{t}` in `{text}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if v.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: v.len(),
                        });
                    }
                    Ok(v)
                }
            }
        };
        let factors = match head {
            "const" => vec![Factor::One; d],
            "mono" => params(1.0)?
                .into_iter()
                .map(|a| {
                    if a < 0.0 || a.fract() != 0.0 {
                        Err(Error::Parse(format!("monomial exponents must be whole, got {a}")))
                    } else if a == 0.0 {
                        Ok(Factor::One)
                    } else {
                        Ok(Factor::Power(a as u32))
                    }
                })
                .collect::<Result<_>>()?,
            "sinpi" => params(1.0)?.into_iter().map(Factor::SinPi).collect(),
            "gauss" => vec![Factor::Gauss; d],
            "rough" => {
                let mut v = vec![Factor::One; d];
                v[0] = Factor::Cusp;
                v
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown function `{text}`; available: {}",
                    REGISTRY.join(", ")
                )))
            }
        };
        Ok(Self {
            name: text.trim().to_string(),
            factors,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether every factor is a polynomial.
    pub fn is_polynomial(&self) -> bool {
        self.factors
            .iter()
            .all(|f| matches!(f, Factor::One | Factor::Power(_)))
    }

    pub fn eval_derivative(&self, lambda: &MultiIndex, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (j, f) in self.factors.iter().enumerate() {
            let r = lambda[j];
            if r < 0 {
                return 0.0;
            }
            v *= f.derivative(r as u32, x[j]);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Field for TestFunction {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (j, f) in self.factors.iter().enumerate() {
            v *= f.derivative(0, x[j]);
        }
        v
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        Some(self.eval_derivative(lambda, x))
    }
}
