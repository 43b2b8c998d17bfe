use std::collections::BTreeSet;
use std::sync::Arc;

use mixext_core::bspline::{eval_psi, product_weight, refinement_coeffs};
use mixext_core::domain::{validate_mtype, Domain};
use mixext_core::field::Field;
use mixext_core::lattice::{even_shift_decompositions, sigma, IndexBox, MultiIndex, SubsetMask};
use mixext_core::operators::{extend, quasi_interpolant, ExtensionParams};
use mixext_core::polyproj::{project, Cell, TensorPolynomial};
use mixext_core::pwpoly::{PolySum, SplineExpansion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Context;
use crate::error::CliError;
use crate::report::{ints, num, Report};

pub struct Check {
    pub name: &'static str,
    pub params: String,
    pub max_error: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.max_error <= self.tol
    }
}

fn points(domain: &Domain, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = (0..domain.dim()).map(|j| rng.gen_range(lo[j]..hi[j])).collect();
        if domain.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn random_poly(degree: MultiIndex, cell: Cell, rng: &mut ChaCha8Rng) -> TensorPolynomial {
    let n: usize = degree.as_slice().iter().map(|&k| k as usize + 1).product();
    let coeffs = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    TensorPolynomial::new(degree, cell, coeffs).expect("valid degree")
}

fn levels_upto(d: usize, k: i64) -> IndexBox {
    IndexBox::new(MultiIndex::zeros(d), MultiIndex::splat(d, k)).expect("same dimension")
}

fn two_scale(ctx: &Context) -> Result<Vec<Check>, CliError> {
    let orders: BTreeSet<i64> = ctx.m.as_slice().iter().copied().collect();
    let mut out = Vec::new();
    for m in orders {
        let a = refinement_coeffs(m)?;
        let mut worst = 0.0f64;
        for i in 0..1000 {
            let x = -0.5 + (m as f64 + 2.0) * (i as f64 + 0.5) / 1000.0;
            let lhs = eval_psi(m, 0, x)?;
            let mut rhs = 0.0;
            for (mu, w) in a.iter().enumerate() {
                rhs += w * eval_psi(m, 0, 2.0 * x - mu as f64)?;
            }
            worst = worst.max((lhs - rhs).abs());
        }
        out.push(Check {
            name: "two-scale",
            params: format!("m={m}"),
            max_error: worst,
            tol: 1e-12,
        });
    }
    Ok(out)
}

fn coefficient_sum(ctx: &Context) -> Result<Check, CliError> {
    let d = ctx.m.dim();
    let mut worst = 0.0f64;
    for &m in ctx.m.as_slice() {
        let a = refinement_coeffs(m)?;
        let even: f64 = a.iter().step_by(2).sum();
        let odd: f64 = a.iter().skip(1).step_by(2).sum();
        worst = worst.max((even - 1.0).abs()).max((odd - 1.0).abs());
    }
    let nus = IndexBox::new(MultiIndex::splat(d, -3), MultiIndex::splat(d, 3)).expect("same dimension");
    for nu in nus.iter() {
        for eps in SubsetMask::all(d) {
            let s: f64 = even_shift_decompositions(&nu, &eps, &ctx.m)
                .iter()
                .map(|dec| product_weight(&dec.mu, &ctx.m))
                .sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    Ok(Check {
        name: "coefficient-sum",
        params: format!("m={}", ints(ctx.m.as_slice())),
        max_error: worst,
        tol: 0.0,
    })
}

fn partition_of_unity(ctx: &Context, pts: &[Vec<f64>]) -> Result<Check, CliError> {
    let d = ctx.domain.dim();
    let mut worst = 0.0f64;
    for kappa in levels_upto(d, ctx.config.levels).iter() {
        let level = ctx.domain.kappa0().checked_add(&kappa)?;
        let one = SplineExpansion::constant(ctx.domain.clone(), level, ctx.m, MultiIndex::zeros(d), 1.0)?;
        for x in pts {
            worst = worst.max((one.eval(x) - 1.0).abs());
        }
    }
    Ok(Check {
        name: "partition-of-unity",
        params: format!("m={} kappa<={}", ints(ctx.m.as_slice()), ctx.config.levels),
        max_error: worst,
        tol: 1e-12,
    })
}

fn projection_reproduction(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let d = ctx.domain.dim();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let degree = MultiIndex::new(&(0..d).map(|_| rng.gen_range(0..=3)).collect::<Vec<_>>())?;
        let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let delta: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..3.0)).collect();
        let a = Cell::new(&x0, &delta)?;
        // a sub-cell with at least half the extent per axis keeps the round trip well conditioned
        let frac: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..1.0)).collect();
        let off: Vec<f64> = (0..d)
            .map(|j| x0[j] + rng.gen_range(0.0..1.0 - frac[j]) * delta[j])
            .collect();
        let b = Cell::new(&off, &(0..d).map(|j| frac[j] * delta[j]).collect::<Vec<_>>())?;
        let p = random_poly(degree, a, rng);
        let back = project(&project(&p, &b, &degree, 6)?, &a, &degree, 6)?;
        for (x, y) in p.coeffs.iter().zip(&back.coeffs) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(Check {
        name: "projection-reproduction",
        params: "degree<=3 cases=100".into(),
        max_error: worst,
        tol: 1e-10,
    })
}

fn restriction_identity(ctx: &Context, pts: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let d = ctx.domain.dim();
    let degree = MultiIndex::splat(d, 1);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for kappa in levels_upto(d, ctx.config.levels).iter() {
        let fine = ctx.domain.kappa0().checked_add(&kappa)?;
        for eps in sigma(&kappa).subsets() {
            let coarse = fine.checked_sub(&eps.chi())?;
            let seed: u64 = rng.gen();
            let e = SplineExpansion::from_fn(ctx.domain.clone(), coarse, ctx.m, degree, |nu| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                for &v in nu.as_slice() {
                    r = ChaCha8Rng::seed_from_u64(r.gen::<u64>() ^ v as u64);
                }
                Ok(PolySum::single(Arc::new(random_poly(degree, Cell::dyadic(&coarse, nu), &mut r))))
            })?;
            let h = e.refine(&eps)?;
            for x in pts {
                worst = worst.max((e.eval(x) - h.eval(x)).abs());
            }
            cases += 1;
        }
    }
    Ok(Check {
        name: "restriction-identity",
        params: format!("m={} kappa<={} cases={cases}", ints(ctx.m.as_slice()), ctx.config.levels),
        max_error: worst,
        tol: 1e-10,
    })
}

fn telescoping(ctx: &Context, pts: &[Vec<f64>]) -> Result<Check, CliError> {
    let d = ctx.domain.dim();
    // l(alpha) must not exceed m; smaller orders keep the check meaningful
    let alpha: Vec<f64> = (0..d)
        .map(|j| ctx.config.alpha[j].min(ctx.m[j] as f64 - 0.5))
        .collect();
    let k = ctx.config.levels;
    let params = ExtensionParams::new(alpha.clone(), ctx.config.p, ctx.theta, ctx.m, k)?;
    let ext = extend(&ctx.function, &ctx.domain, &params)?;
    let top = ctx.domain.kappa0().checked_add(&MultiIndex::splat(d, k))?;
    let e = quasi_interpolant(&ctx.function, &ctx.domain, &top, &params.degree(), &ctx.m, params.quad_order())?;
    let worst = pts
        .iter()
        .map(|x| (ext.eval(x) - e.eval(x)).abs())
        .fold(0.0, f64::max);
    Ok(Check {
        name: "telescoping",
        params: format!(
            "f={} alpha={} K={k}",
            ctx.function,
            alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
        ),
        max_error: worst,
        tol: 1e-9,
    })
}

fn mtype_validation(ctx: &Context) -> Check {
    let rep = validate_mtype(&ctx.domain, &ctx.m, ctx.config.levels);
    Check {
        name: "m-type-validation",
        params: format!(
            "m={} K={} indices={} tuples={}",
            ints(ctx.m.as_slice()),
            ctx.config.levels,
            rep.indices_checked,
            rep.tuples_checked
        ),
        max_error: rep.failures as f64,
        tol: 0.0,
    }
}

pub fn checks(ctx: &Context) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let pts = points(&ctx.domain, 200, &mut rng);
    let mut out = two_scale(ctx)?;
    out.push(coefficient_sum(ctx)?);
    out.push(partition_of_unity(ctx, &pts)?);
    out.push(projection_reproduction(ctx, &mut rng)?);
    out.push(restriction_identity(ctx, &pts, &mut rng)?);
    out.push(telescoping(ctx, &pts)?);
    out.push(mtype_validation(ctx));
    if let Some(t) = ctx.config.tol {
        out.iter_mut().for_each(|c| c.tol = t);
    }
    Ok(out)
}

/// The report and whether every check passed.
pub fn run(ctx: &Context) -> Result<(Report, bool), CliError> {
    let mut report = Report::new(ctx.header(), &["check", "parameters", "max_error", "tolerance", "pass"]);
    let mut all = true;
    for c in checks(ctx)? {
        all &= c.pass();
        report.push(vec![
            c.name.to_string(),
            c.params.clone(),
            num(c.max_error),
            num(c.tol),
            c.pass().to_string(),
        ]);
    }
    Ok((report, all))
}
