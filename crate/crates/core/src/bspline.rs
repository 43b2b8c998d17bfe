//! Cardinal B-splines `psi^m` supported on `[0, m+1]`, their tensor products and
//! the dilated, shifted basis `g_{kappa,nu}(x) = psi(2^kappa x - nu)`.

use crate::domain::Dyadic;
use crate::error::{Error, Result};
use crate::lattice::{binomial, MultiIndex, PartialIndex};

/// Largest supported per-axis spline order.
pub const MAX_ORDER: i64 = 16;

/// `psi^m(y)` via the cardinal recurrence, starting from the indicator of `[0,1)`.
fn cardinal(m: usize, y: f64) -> f64 {
    if !(0.0..(m as f64 + 1.0)).contains(&y) {
        return 0.0;
    }
    // n[i] holds N_j(y - i) for the current j, i = 0..=m
    let mut n = [0.0f64; MAX_ORDER as usize + 2];
    let cell = y.floor() as usize;
    n[cell] = 1.0;
    for j in 1..=m {
        for i in 0..=m {
            let yi = y - i as f64;
            let right = if i + 1 <= m { n[i + 1] } else { 0.0 };
            // N_j(yi) = (yi N_{j-1}(yi) + (j+1-yi) N_{j-1}(yi-1)) / j
            n[i] = (yi * n[i] + (j as f64 + 1.0 - yi) * right) / j as f64;
        }
    }
    n[0]
}

/// `D^r psi^m(x)`. Discontinuous derivatives take their right-hand limit.
pub fn eval_psi(m: i64, r: i64, x: f64) -> Result<f64> {
    if m < 0 || r < 0 {
        return Err(Error::Negative {
            what: "spline order and derivative order",
            value: format!("m={m}, r={r}"),
        });
    }
    if m > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "spline order {m} exceeds {MAX_ORDER}"
        )));
    }
    if r > m {
        return Err(Error::DerivativeOrder {
            order: r.to_string(),
            max: m.to_string(),
        });
    }
    Ok(psi_unchecked(m as usize, r as usize, x))
}

/// `sum_i (-1)^i C(r,i) psi^{m-r}(x - i)`. Requires `r <= m <= MAX_ORDER`.
#[inline]
pub(crate) fn psi_unchecked(m: usize, r: usize, x: f64) -> f64 {
    if r == 0 {
        return cardinal(m, x);
    }
    let mut acc = 0.0;
    for i in 0..=r {
        let c = binomial(r as u64, i as u64) as f64;
        let s = if i % 2 == 0 { c } else { -c };
        acc += s * cardinal(m - r, x - i as f64);
    }
    acc
}

/// Two-scale weights `a_mu = 2^{-m} C(m+1, mu)` for `mu = 0..=m+1`.
pub fn refinement_coeffs(m: i64) -> Result<Vec<f64>> {
    if !(0..=MAX_ORDER).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "spline order {m} outside 0..={MAX_ORDER}"
        )));
    }
    let scale = (2.0f64).powi(-(m as i32));
    Ok((0..=m + 1)
        .map(|mu| binomial(m as u64 + 1, mu as u64) as f64 * scale)
        .collect())
}

/// Product weight `A_mu = prod_{j in s(eps)} a_{mu_j}^{m_j}`.
pub fn product_weight(mu: &PartialIndex, m: &MultiIndex) -> f64 {
    let mut w = 1.0;
    for j in mu.mask.iter() {
        let mj = m[j] as u64;
        let k = mu.values[j] as u64;
        w *= binomial(mj + 1, k) as f64 * (2.0f64).powi(-(mj as i32));
    }
    w
}

fn check_order(m: &MultiIndex) -> Result<()> {
    m.require_nonnegative("spline order")?;
    if m.max_entry() > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "spline order {m} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// `D^lambda g_{kappa,nu}(x) = prod_j 2^{kappa_j lambda_j} psi^{(lambda_j)}(2^{kappa_j} x_j - nu_j)`.
pub fn eval_g(
    kappa: &MultiIndex,
    nu: &MultiIndex,
    m: &MultiIndex,
    lambda: &MultiIndex,
    x: &[f64],
) -> Result<f64> {
    let d = m.dim();
    if kappa.dim() != d || nu.dim() != d || lambda.dim() != d || x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len().min(kappa.dim()).min(nu.dim()).min(lambda.dim()),
        });
    }
    check_order(m)?;
    lambda.require_nonnegative("derivative order")?;
    if !lambda.le(m) {
        return Err(Error::DerivativeOrder {
            order: lambda.to_string(),
            max: m.to_string(),
        });
    }
    Ok(g_unchecked(kappa, nu, m, lambda, x))
}

#[inline]
pub(crate) fn g_unchecked(
    kappa: &MultiIndex,
    nu: &MultiIndex,
    m: &MultiIndex,
    lambda: &MultiIndex,
    x: &[f64],
) -> f64 {
    let mut v = 1.0;
    for j in 0..m.dim() {
        let s = (2.0f64).powi(kappa[j] as i32);
        let y = s * x[j] - nu[j] as f64;
        let f = psi_unchecked(m[j] as usize, lambda[j] as usize, y);
        if f == 0.0 {
            return 0.0;
        }
        v *= f * s.powi(lambda[j] as i32);
    }
    v
}

/// Closed support box `[2^{-kappa} nu, 2^{-kappa}(nu + m + e)]`, per axis.
pub fn support_g(kappa: &MultiIndex, nu: &MultiIndex, m: &MultiIndex) -> Vec<(Dyadic, Dyadic)> {
    (0..m.dim())
        .map(|j| {
            let e = kappa[j] as u32;
            (
                Dyadic::new(nu[j], e),
                Dyadic::new(nu[j] + m[j] + 1, e),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{even_shift_decompositions, SubsetMask};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    /// Closed-form pieces of the low-order B-splines.
    fn closed_form(m: i64, x: f64) -> f64 {
        match m {
            0 => (0.0..1.0).contains(&x) as i32 as f64,
            1 => (1.0 - (x - 1.0).abs()).max(0.0),
            2 => {
                if (0.0..1.0).contains(&x) {
                    x * x / 2.0
                } else if (1.0..2.0).contains(&x) {
                    0.75 - (x - 1.5).powi(2)
                } else if (2.0..3.0).contains(&x) {
                    (3.0 - x).powi(2) / 2.0
                } else {
                    0.0
                }
            }
            3 => {
                let t = x;
                if (0.0..1.0).contains(&t) {
                    t.powi(3) / 6.0
                } else if (1.0..2.0).contains(&t) {
                    (-3.0 * t.powi(3) + 12.0 * t * t - 12.0 * t + 4.0) / 6.0
                } else if (2.0..3.0).contains(&t) {
                    (3.0 * t.powi(3) - 24.0 * t * t + 60.0 * t - 44.0) / 6.0
                } else if (3.0..4.0).contains(&t) {
                    (4.0 - t).powi(3) / 6.0
                } else {
                    0.0
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn point_values() {
        assert_eq!(eval_psi(0, 0, 0.5).unwrap(), 1.0);
        assert_eq!(eval_psi(1, 0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(eval_psi(2, 0, 1.5).unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(eval_psi(3, 0, -0.1).unwrap(), 0.0);
        assert!(eval_psi(1, 2, 0.3).is_err());
    }

    #[test]
    fn matches_closed_forms() {
        for m in 0..=3 {
            for i in 0..=400 {
                let x = -0.5 + i as f64 * 0.0125;
                assert_abs_diff_eq!(
                    eval_psi(m, 0, x).unwrap(),
                    closed_form(m, x),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn right_continuous_at_knots() {
        // derivative of the hat jumps from 1 to -1 at x = 1
        assert_eq!(eval_psi(1, 1, 1.0).unwrap(), -1.0);
        assert_eq!(eval_psi(1, 1, 0.0).unwrap(), 1.0);
        assert_eq!(eval_psi(1, 1, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn weights() {
        assert_eq!(refinement_coeffs(1).unwrap(), vec![0.5, 1.0, 0.5]);
        assert_eq!(refinement_coeffs(2).unwrap(), vec![0.25, 0.75, 0.75, 0.25]);
        assert_eq!(refinement_coeffs(0).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn parity_sums_are_exact() {
        for m in 0..=MAX_ORDER {
            let a = refinement_coeffs(m).unwrap();
            let even: f64 = a.iter().step_by(2).sum();
            let odd: f64 = a.iter().skip(1).step_by(2).sum();
            assert_eq!(even, 1.0);
            assert_eq!(odd, 1.0);
        }
    }

    #[test]
    fn product_weights_sum_to_one() {
        for d in 1..=3 {
            for mm in 1..=4 {
                let m = MultiIndex::splat(d, mm);
                for eps in SubsetMask::all(d) {
                    for nu in crate::lattice::IndexBox::new(
                        MultiIndex::splat(d, -3),
                        MultiIndex::splat(d, 3),
                    )
                    .unwrap()
                    .iter()
                    {
                        let s: f64 = even_shift_decompositions(&nu, &eps, &m)
                            .iter()
                            .map(|dec| product_weight(&dec.mu, &m))
                            .sum();
                        assert_eq!(s, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn two_scale_relation() {
        for m in 0..=4i64 {
            let a = refinement_coeffs(m).unwrap();
            for i in 0..1000 {
                let x = -1.0 + (m as f64 + 3.0) * i as f64 / 999.0;
                let rhs: f64 = a
                    .iter()
                    .enumerate()
                    .map(|(mu, w)| w * eval_psi(m, 0, 2.0 * x - mu as f64).unwrap())
                    .sum();
                assert!((eval_psi(m, 0, x).unwrap() - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn g_examples() {
        let v = eval_g(&mi(&[1]), &mi(&[1]), &mi(&[1]), &mi(&[0]), &[1.0]).unwrap();
        assert_eq!(v, 1.0);
        let v = eval_g(&mi(&[2, 0]), &mi(&[4, 0]), &mi(&[1, 1]), &mi(&[0, 0]), &[1.6, 0.5])
            .unwrap();
        assert_eq!(v, 0.0);
        let x = [0.7, 1.3];
        let g = eval_g(&mi(&[0, 0]), &mi(&[0, 0]), &mi(&[2, 1]), &mi(&[0, 0]), &x).unwrap();
        let psi = eval_psi(2, 0, 0.7).unwrap() * eval_psi(1, 0, 1.3).unwrap();
        assert_eq!(g, psi);
        assert!(eval_g(&mi(&[0]), &mi(&[0]), &mi(&[1]), &mi(&[2]), &[0.5]).is_err());
    }

    #[test]
    fn support_examples() {
        let s = support_g(&mi(&[0]), &mi(&[0]), &mi(&[2]));
        assert_eq!((s[0].0.to_f64(), s[0].1.to_f64()), (0.0, 3.0));
        let s = support_g(&mi(&[2]), &mi(&[4]), &mi(&[1]));
        assert_eq!((s[0].0.to_f64(), s[0].1.to_f64()), (1.0, 1.5));
        let s = support_g(&mi(&[0]), &mi(&[-1]), &mi(&[0]));
        assert_eq!((s[0].0.to_f64(), s[0].1.to_f64()), (-1.0, 0.0));
    }

    proptest! {
        #[test]
        fn partition_of_unity(m in 0i64..=4, x in -20.0f64..20.0) {
            let base = x.floor() as i64;
            let s: f64 = (base - m - 1..=base + 1)
                .map(|nu| eval_psi(m, 0, x - nu as f64).unwrap())
                .sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn positive_exactly_inside_support(m in 0i64..=6, x in -2.0f64..9.0) {
            let v = eval_psi(m, 0, x).unwrap();
            if x > 0.0 && x < m as f64 + 1.0 {
                prop_assert!(v > 0.0);
            } else if x >= m as f64 + 1.0 || x < 0.0 {
                prop_assert_eq!(v, 0.0);
            }
        }

        #[test]
        fn derivative_matches_central_difference(m in 2i64..=5, x in 0.0f64..6.0) {
            let h = 1e-4;
            // stay away from knots where the difference quotient straddles a kink
            prop_assume!((x - x.round()).abs() > 10.0 * h);
            let fd = (eval_psi(m, 0, x + h).unwrap() - eval_psi(m, 0, x - h).unwrap()) / (2.0 * h);
            let d1 = eval_psi(m, 1, x).unwrap();
            prop_assert!((fd - d1).abs() < 1e-6, "fd={} d1={}", fd, d1);
        }
    }
}
