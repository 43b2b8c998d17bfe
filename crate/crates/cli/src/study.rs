use std::fs;

use mixext_core::domain::{validate_mtype, Domain, Dyadic, DyadicBox};
use mixext_core::field::{Field, FnField};
use mixext_core::lattice::MultiIndex;
use mixext_core::moduli::{prime_modulus_table, ModuliConfig};
use mixext_core::operators::{cells_lq_norm, domain_cells, extend, quasi_interpolant, ExtensionParams};
use mixext_core::pwpoly::MultiLevelExpansion;

use crate::config::Context;
use crate::error::CliError;
use crate::report::{ints, num, Report};

/// Gauss-Legendre points per axis for error integrals.
const ERROR_QUAD: usize = 6;
/// Resolution at which the support box is snapped to dyadic corners.
const BOX_LEVEL: u32 = 6;

fn params(ctx: &Context, k: i64) -> Result<ExtensionParams, CliError> {
    Ok(ExtensionParams::new(ctx.config.alpha.clone(), ctx.config.p, ctx.theta, ctx.m, k)?)
}

fn moduli_config(ctx: &Context, x_level: u32) -> ModuliConfig {
    ModuliConfig::default()
        .with_t_max_exp(ctx.config.kt)
        .with_x_level(x_level)
}

pub fn converge(ctx: &Context) -> Result<Report, CliError> {
    let d = ctx.domain.dim();
    let p = params(ctx, 0)?;
    let mut report = Report::new(ctx.header(), &["k", "level", "error", "order"]);
    let mut prev: Option<f64> = None;
    for k in 0..=ctx.config.kmax {
        let level = ctx.domain.kappa0().checked_add(&MultiIndex::splat(d, k))?;
        let e = quasi_interpolant(&ctx.function, &ctx.domain, &level, &p.degree(), &ctx.m, p.quad_order())?;
        let diff = FnField::new(d, |x: &[f64]| ctx.function.eval(x) - e.eval(x));
        let fine = level.checked_add(&MultiIndex::splat(d, 2))?;
        let err = cells_lq_norm(&diff, &MultiIndex::zeros(d), &fine, &domain_cells(&ctx.domain, &fine), ctx.config.p, ERROR_QUAD);
        if !err.is_finite() {
            return Err(CliError::Core(mixext_core::Error::InvalidArgument(format!(
                "non-finite error at level {level}"
            ))));
        }
        let order = prev.map_or(String::new(), |e0| num((e0 / err).log2()));
        report.push(vec![k.to_string(), ints(level.as_slice()), num(err), order]);
        prev = Some(err);
    }
    Ok(report)
}

fn extension(ctx: &Context, k: i64) -> Result<MultiLevelExpansion, CliError> {
    Ok(extend(&ctx.function, &ctx.domain, &params(ctx, k)?)?)
}

pub fn extend_grid(ctx: &Context) -> Result<Report, CliError> {
    let d = ctx.domain.dim();
    let ext = extension(ctx, ctx.config.k)?;
    if let Some(path) = &ctx.config.expansion_out {
        fs::write(path, ext.to_text())?;
    }
    let (lo, hi) = ext.support_box();
    let mut cols: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    cols.push("value".into());
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut report = Report::new(ctx.header(), &col_refs);
    let n = ctx.config.grid;
    let total = n.pow(d as u32);
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for j in (0..d).rev() {
            let i = rem % n;
            rem /= n;
            x[j] = lo[j] + (i as f64 + 0.5) * (hi[j] - lo[j]) / n as f64;
        }
        let v = ext.evaluate(&ctx.lambda, &x)?;
        let mut row: Vec<String> = x.iter().map(|&v| num(v)).collect();
        row.push(num(v));
        report.push(row);
    }
    Ok(report)
}

/// The support box of `ext`, snapped outward to dyadic corners.
fn enclosing_box(ext: &MultiLevelExpansion) -> Result<Domain, CliError> {
    let (lo, hi) = ext.support_box();
    let scale = f64::from(1u32 << BOX_LEVEL);
    let lo = lo.iter().map(|x| Dyadic::new((x * scale).floor() as i64, BOX_LEVEL)).collect();
    let hi = hi.iter().map(|x| Dyadic::new((x * scale).ceil() as i64, BOX_LEVEL)).collect();
    Ok(Domain::from_boxes("support-box", vec![DyadicBox::new(lo, hi)?])?)
}

pub fn norms(ctx: &Context) -> Result<Report, CliError> {
    let alpha = &ctx.config.alpha;
    let p = ctx.config.p;
    let on_d = moduli_config(ctx, ctx.config.x_level);
    let on_box = moduli_config(ctx, ctx.config.x_level.saturating_sub(1));
    let base = prime_modulus_table(&ctx.function, &ctx.domain, alpha, p, &on_d)?.norm(ctx.theta)?;
    let mut report = Report::new(
        ctx.header(),
        &["K", "theta", "norm_f_domain", "norm_ext_box", "ratio", "box_lo", "box_hi"],
    );
    for k in 0..=ctx.config.k {
        let ext = extension(ctx, k)?;
        let bx = enclosing_box(&ext)?;
        let compiled = ext.compile()?;
        let v = prime_modulus_table(&compiled, &bx, alpha, p, &on_box)?.norm(ctx.theta)?;
        let (lo, hi) = bx.bounding_box();
        let join = |v: &[f64]| v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",");
        report.push(vec![
            k.to_string(),
            ctx.config.theta.clone(),
            num(base),
            num(v),
            num(v / base),
            join(&lo),
            join(&hi),
        ]);
    }
    Ok(report)
}

/// The report and whether validation passed.
pub fn validate_domain(ctx: &Context) -> Result<(Report, bool), CliError> {
    let rep = validate_mtype(&ctx.domain, &ctx.m, ctx.config.k);
    let mut report = Report::new(
        ctx.header(),
        &[
            "domain", "m", "K", "kappa0", "pass", "indices", "tuples", "failures", "gamma0", "gamma1", "c15",
            "witness",
        ],
    );
    let join = |v: &[f64]| v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",");
    report.push(vec![
        ctx.domain.name().to_string(),
        ints(ctx.m.as_slice()),
        ctx.config.k.to_string(),
        ints(ctx.domain.kappa0().as_slice()),
        rep.pass.to_string(),
        rep.indices_checked.to_string(),
        rep.tuples_checked.to_string(),
        rep.failures.to_string(),
        join(&rep.gamma0),
        join(&rep.gamma1),
        join(&rep.c15),
        rep.witness.clone().unwrap_or_default(),
    ]);
    Ok((report, rep.pass))
}
