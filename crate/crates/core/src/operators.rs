//! Local projections, quasi-interpolants, telescoped blocks and the truncated
//! extension operator.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bspline::product_weight;
use crate::domain::{validate_mtype, Domain};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{even_shift_decompositions, sigma, IndexBox, MultiIndex, SubsetMask};
use crate::moduli::{modulus_order, ModuliConfig, ModulusEngine, ModulusQuery};
use crate::polyproj::{default_quad_order, project, Cell, TensorPolynomial};
use crate::pwpoly::{MultiLevelExpansion, PolySum, SplineExpansion};
use crate::quadrature::for_each_tensor_node;

/// Parameters of the extension operator. The operator itself depends only on
/// `alpha` (through `l`), `m` and `k`; `p` and `theta` select the norms.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionParams {
    pub alpha: Vec<f64>,
    pub p: f64,
    pub theta: f64,
    pub m: MultiIndex,
    /// Blocks `kappa <= k e` are kept.
    pub k: i64,
    pub quad_order: Option<usize>,
}

impl ExtensionParams {
    pub fn new(alpha: Vec<f64>, p: f64, theta: f64, m: MultiIndex, k: i64) -> Result<Self> {
        let params = Self {
            alpha,
            p,
            theta,
            m,
            k,
            quad_order: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.m.dim();
        if self.alpha.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.alpha.len(),
            });
        }
        let l = modulus_order(&self.alpha)?;
        l.require_le(&self.m, "modulus order l(alpha) within spline order")?;
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must lie in [1, inf), got {}", self.p)));
        }
        if !(self.theta >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in [1, inf], got {}",
                self.theta
            )));
        }
        if self.k < 0 {
            return Err(Error::Negative {
                what: "truncation K",
                value: self.k.to_string(),
            });
        }
        if let Some(q) = self.quad_order {
            let min = self.degree().max_entry() as usize + 1;
            if q < min {
                return Err(Error::QuadratureOrder { given: q, min });
            }
        }
        Ok(())
    }

    /// `l(alpha)`, with `l_j - 1 <= alpha_j < l_j`.
    pub fn l(&self) -> MultiIndex {
        modulus_order(&self.alpha).expect("validated")
    }

    /// Polynomial degree of the local projections, `l(alpha) - e`.
    pub fn degree(&self) -> MultiIndex {
        self.l().map(|v| v - 1)
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
            .unwrap_or_else(|| default_quad_order(&self.degree()))
    }
}

/// Projection of `f` onto polynomials of degree `degree` over `Q_{level,nu}`,
/// which must lie in `D`.
pub fn local_projection_s<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    level: &MultiIndex,
    nu: &MultiIndex,
    degree: &MultiIndex,
    quad_order: usize,
) -> Result<TensorPolynomial> {
    if !domain.cube_inside(level, nu) {
        return Err(Error::CubeOutsideDomain {
            level: level.to_string(),
            index: nu.to_string(),
            domain: domain.name().to_string(),
        });
    }
    project(f, &Cell::dyadic(level, nu), degree, quad_order)
}

/// Projections over every cube selected at `level`, keyed by cube index.
pub type Projections = HashMap<MultiIndex, Arc<TensorPolynomial>>;

pub fn level_projections<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    level: &MultiIndex,
    degree: &MultiIndex,
    m: &MultiIndex,
    quad_order: usize,
) -> Result<Projections> {
    check_level(domain, level)?;
    let mut cubes: Vec<MultiIndex> = domain
        .active_indices(level, m)
        .iter()
        .map(|nu| domain.maps().nu_map(level, nu))
        .collect();
    cubes.sort();
    cubes.dedup();
    cubes
        .par_iter()
        .map(|c| {
            local_projection_s(f, domain, level, c, degree, quad_order).map(|p| (*c, Arc::new(p)))
        })
        .collect()
}

fn check_level(domain: &Domain, level: &MultiIndex) -> Result<()> {
    if level.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: level.dim(),
        });
    }
    domain
        .kappa0()
        .require_le(level, "base level of the domain below the requested level")
}

fn selected<'a>(
    domain: &Domain,
    proj: &'a Projections,
    level: &MultiIndex,
    nu: &MultiIndex,
) -> Result<&'a Arc<TensorPolynomial>> {
    let c = domain.maps().nu_map(level, nu);
    proj.get(&c).ok_or_else(|| Error::CubeOutsideDomain {
        level: level.to_string(),
        index: c.to_string(),
        domain: domain.name().to_string(),
    })
}

/// `E_level f = sum_nu (S_{level, nu_map(nu)} f) g_{level,nu}`.
pub fn quasi_interpolant<F: Field + ?Sized>(
    f: &F,
    domain: &Arc<Domain>,
    level: &MultiIndex,
    degree: &MultiIndex,
    m: &MultiIndex,
    quad_order: usize,
) -> Result<SplineExpansion> {
    let proj = level_projections(f, domain, level, degree, m, quad_order)?;
    qi_from_projections(domain, &proj, level, degree, m)
}

fn qi_from_projections(
    domain: &Arc<Domain>,
    proj: &Projections,
    level: &MultiIndex,
    degree: &MultiIndex,
    m: &MultiIndex,
) -> Result<SplineExpansion> {
    SplineExpansion::from_fn(domain.clone(), *level, *m, *degree, |nu| {
        Ok(PolySum::single(selected(domain, proj, level, nu)?.clone()))
    })
}

/// Block `kappa` assembled coefficientwise:
/// `U_nu = sum_{eps in s(kappa)} (-1)^|eps| sum_mu A_mu S_{L-eps, nu_map(n_eps(nu, mu))} f`
/// with `L = kappa0 + kappa`; coarse indices outside the active set carry no
/// basis function and are skipped.
fn block_from_projections(
    domain: &Arc<Domain>,
    tables: &HashMap<MultiIndex, Projections>,
    kappa: &MultiIndex,
    degree: &MultiIndex,
    m: &MultiIndex,
) -> Result<SplineExpansion> {
    let level = domain.kappa0().checked_add(kappa)?;
    let epsilons: Vec<SubsetMask> = sigma(kappa).subsets().collect();
    SplineExpansion::from_fn(domain.clone(), level, *m, *degree, |nu| {
        let mut acc = PolySum::zero();
        for eps in &epsilons {
            let coarse_level = level.checked_sub(&eps.chi())?;
            let proj = tables.get(&coarse_level).ok_or_else(|| Error::LevelMismatch {
                expected: "projections for every coarse level".into(),
                found: coarse_level.to_string(),
            })?;
            for dec in even_shift_decompositions(nu, eps, m) {
                if !domain.is_active(&coarse_level, m, &dec.coarse) {
                    continue;
                }
                let w = eps.sign() * product_weight(&dec.mu, m);
                acc.push(w, selected(domain, proj, &coarse_level, &dec.coarse)?);
            }
        }
        Ok(acc)
    })
}

fn projection_tables<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    levels: impl IntoIterator<Item = MultiIndex>,
    degree: &MultiIndex,
    m: &MultiIndex,
    quad_order: usize,
) -> Result<HashMap<MultiIndex, Projections>> {
    let mut tables = HashMap::new();
    for level in levels {
        if let std::collections::hash_map::Entry::Vacant(e) = tables.entry(level) {
            e.insert(level_projections(f, domain, &level, degree, m, quad_order)?);
        }
    }
    Ok(tables)
}

/// The telescoped block `sum_{eps in s(kappa)} (-1)^|eps| H E_{kappa0+kappa-eps} f`
/// at level `kappa0 + kappa`, by the coefficient formula.
pub fn telescope_block<F: Field + ?Sized>(
    f: &F,
    domain: &Arc<Domain>,
    kappa: &MultiIndex,
    degree: &MultiIndex,
    m: &MultiIndex,
    quad_order: usize,
) -> Result<SplineExpansion> {
    kappa.require_nonnegative("block index")?;
    let level = domain.kappa0().checked_add(kappa)?;
    let mut levels = Vec::new();
    for eps in sigma(kappa).subsets() {
        levels.push(level.checked_sub(&eps.chi())?);
    }
    let tables = projection_tables(f, domain, levels, degree, m, quad_order)?;
    block_from_projections(domain, &tables, kappa, degree, m)
}

/// The same block by refining each coarse quasi-interpolant and summing.
pub fn telescope_block_composed<F: Field + ?Sized>(
    f: &F,
    domain: &Arc<Domain>,
    kappa: &MultiIndex,
    degree: &MultiIndex,
    m: &MultiIndex,
    quad_order: usize,
) -> Result<SplineExpansion> {
    kappa.require_nonnegative("block index")?;
    let level = domain.kappa0().checked_add(kappa)?;
    let mut out: Option<SplineExpansion> = None;
    for eps in sigma(kappa).subsets() {
        let coarse = level.checked_sub(&eps.chi())?;
        let e = quasi_interpolant(f, domain, &coarse, degree, m, quad_order)?.refine(&eps)?;
        out = Some(match out {
            None => e.add_scaled(&e, eps.sign() - 1.0)?,
            Some(acc) => acc.add_scaled(&e, eps.sign())?,
        });
    }
    Ok(out.expect("the empty set is always a subset"))
}

/// `sum_{kappa <= K e} E_{kappa0, kappa} f`, blocks in row-major order of `kappa`.
pub fn extend<F: Field + ?Sized>(
    f: &F,
    domain: &Arc<Domain>,
    params: &ExtensionParams,
) -> Result<MultiLevelExpansion> {
    params.validate()?;
    let d = domain.dim();
    if params.m.dim() != d || f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if params.m.dim() != d { params.m.dim() } else { f.dim() },
        });
    }
    let degree = params.degree();
    let kappas = block_indices(d, params.k);
    let k0 = domain.kappa0();
    let levels = kappas
        .iter()
        .map(|k| k0.checked_add(k))
        .collect::<Result<Vec<_>>>()?;
    let tables = projection_tables(f, domain, levels, &degree, &params.m, params.quad_order())?;
    let blocks = kappas
        .iter()
        .map(|k| block_from_projections(domain, &tables, k, &degree, &params.m))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiLevelExpansion::new(blocks))
}

/// `{kappa : 0 <= kappa <= K e}` in row-major order.
pub fn block_indices(d: usize, k: i64) -> Vec<MultiIndex> {
    IndexBox::new(MultiIndex::zeros(d), MultiIndex::splat(d, k.max(0)))
        .expect("valid dimension")
        .iter()
        .collect()
}

/// `||D^lambda g||_{L_q}` over the union of the given cells at `level`, by
/// Gauss–Legendre quadrature with `order` points per axis on each cell.
pub fn cells_lq_norm<G: Field + ?Sized>(
    g: &G,
    lambda: &MultiIndex,
    level: &MultiIndex,
    cells: &[MultiIndex],
    q: f64,
    order: usize,
) -> f64 {
    let d = level.dim();
    let zero = lambda.sum() == 0;
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|nu| {
            let c = Cell::dyadic(level, nu);
            let mut acc = 0.0f64;
            for_each_tensor_node(c.x0(), c.delta(), &vec![order; d], |x, w| {
                let v = if zero {
                    g.eval(x)
                } else {
                    g.derivative(lambda, x).expect("derivative oracle required")
                };
                if q.is_infinite() {
                    acc = acc.max(v.abs());
                } else {
                    acc += w * v.abs().powf(q);
                }
            });
            acc
        })
        .collect();
    if q.is_infinite() {
        parts.into_iter().fold(0.0, f64::max)
    } else {
        parts.iter().sum::<f64>().powf(1.0 / q)
    }
}

/// Level cells inside `D`; every level at or above the base level resolves `D`.
pub fn domain_cells(domain: &Domain, level: &MultiIndex) -> Vec<MultiIndex> {
    let (lo, hi) = domain.bounding_box();
    let d = domain.dim();
    let mut a = MultiIndex::zeros(d);
    let mut b = MultiIndex::zeros(d);
    for j in 0..d {
        let s = 2f64.powi(level[j] as i32);
        a = a.with(j, (lo[j] * s).floor() as i64);
        b = b.with(j, (hi[j] * s).ceil() as i64 - 1);
    }
    IndexBox::new(a, b)
        .expect("same dimension")
        .iter()
        .filter(|nu| domain.cube_inside(level, nu))
        .collect()
}

/// Level cells covering the supports of an expansion.
pub fn support_cells(e: &SplineExpansion) -> Vec<MultiIndex> {
    let level = e.level();
    let (lo, hi) = e.support_box();
    let d = e.dim();
    if lo.iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }
    let mut a = MultiIndex::zeros(d);
    let mut b = MultiIndex::zeros(d);
    for j in 0..d {
        let s = 2f64.powi(level[j] as i32);
        a = a.with(j, (lo[j] * s).round() as i64);
        b = b.with(j, (hi[j] * s).round() as i64 - 1);
    }
    IndexBox::new(a, b).expect("same dimension").iter().collect()
}

/// Gauss points per axis that integrate `|D^lambda e|^2` exactly on each cell.
fn expansion_order(e: &SplineExpansion) -> usize {
    (e.degree().max_entry() + e.order().max_entry()) as usize + 2
}

/// `||D^lambda e||_{L_q(R^d)}` of a single-level expansion.
pub fn expansion_lq_norm(e: &SplineExpansion, lambda: &MultiIndex, q: f64) -> f64 {
    cells_lq_norm(e, lambda, &e.level(), &support_cells(e), q, expansion_order(e))
}

/// The multiplier `c` in the modulus step `t_j = c_j 2^{-(kappa0_j + kappa_j)}`:
/// the measured reach of the hull cells, in level units, over levels up to `k`.
pub fn default_c15(domain: &Domain, m: &MultiIndex, k: i64) -> Vec<f64> {
    validate_mtype(domain, m, k).c15.iter().map(|c| c.max(1.0)).collect()
}

/// One row of [`operator_diagnostics`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub kappa: MultiIndex,
    /// `||D^lambda E_{kappa0,kappa} f||_{L_q(R^d)}`.
    pub block_norm: f64,
    /// `Omega'^{l chi_{s(kappa)}}(f, c 2^{-kappa0-kappa})_{L_p(D)}`; zero for `kappa = 0`.
    pub modulus: f64,
    /// `block_norm / (2^{(kappa, lambda + (1/p - 1/q)_+ e)} modulus)`, absent for
    /// `kappa = 0` or a vanishing modulus.
    pub jackson_ratio: Option<f64>,
    /// `||D^lambda E_{kappa0+kappa} f||_{L_q(R^d)}`.
    pub qi_norm: f64,
    /// `qi_norm / (2^{(kappa, lambda + (1/p - 1/q)_+ e)} ||f||_{L_p(D)})`.
    pub stability_ratio: f64,
}

/// Moduli below this fraction of `||f||_p` count as vanishing.
pub const VANISHING_MODULUS: f64 = 1e-11;

/// Jackson and stability ratios for every block `kappa <= K e`.
pub fn operator_diagnostics<F: Field + ?Sized>(
    f: &F,
    domain: &Arc<Domain>,
    params: &ExtensionParams,
    lambda: &MultiIndex,
    q: f64,
    c15: &[f64],
    cfg: &ModuliConfig,
) -> Result<Vec<DiagnosticsRow>> {
    params.validate()?;
    let d = domain.dim();
    lambda.require_nonnegative("derivative order")?;
    if !lambda.le(&params.m) {
        return Err(Error::DerivativeOrder {
            order: lambda.to_string(),
            max: params.m.to_string(),
        });
    }
    if c15.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: c15.len(),
        });
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("q must lie in [1, inf], got {q}")));
    }
    let degree = params.degree();
    let l = params.l();
    let k0 = domain.kappa0();
    let kappas = block_indices(d, params.k);
    let levels = kappas
        .iter()
        .map(|k| k0.checked_add(k))
        .collect::<Result<Vec<_>>>()?;
    let tables = projection_tables(f, domain, levels.clone(), &degree, &params.m, params.quad_order())?;

    let queries: Vec<Option<ModulusQuery>> = kappas
        .iter()
        .zip(&levels)
        .map(|(kappa, level)| {
            let axes = sigma(kappa);
            if axes.is_empty() {
                return Ok(None);
            }
            let t = (0..d)
                .map(|j| c15[j] * 2f64.powi(-(level[j] as i32)))
                .collect();
            ModulusQuery::new(l, axes, t, params.p).map(Some)
        })
        .collect::<Result<_>>()?;
    let live: Vec<ModulusQuery> = queries.iter().flatten().cloned().collect();
    let engine = ModulusEngine::for_queries(f, domain, cfg, &live)?;
    let fnorm = engine.lp_norm(params.p);
    let gap = (1.0 / params.p - 1.0 / q).max(0.0);

    let mut rows = Vec::with_capacity(kappas.len());
    for ((kappa, level), query) in kappas.iter().zip(&levels).zip(&queries) {
        let block = block_from_projections(domain, &tables, kappa, &degree, &params.m)?;
        let block_norm = expansion_lq_norm(&block, lambda, q);
        let qi = qi_from_projections(domain, &tables[level], level, &degree, &params.m)?;
        let qi_norm = expansion_lq_norm(&qi, lambda, q);
        let scale = 2f64.powf((0..d).map(|j| kappa[j] as f64 * (lambda[j] as f64 + gap)).sum());
        let modulus = query.as_ref().map_or(0.0, |qq| engine.omega_avg(qq));
        let jackson_ratio = (query.is_some() && modulus > VANISHING_MODULUS * fnorm.max(1e-300))
            .then(|| block_norm / (scale * modulus));
        rows.push(DiagnosticsRow {
            kappa: *kappa,
            block_norm,
            modulus,
            jackson_ratio,
            qi_norm,
            stability_ratio: qi_norm / (scale * fnorm),
        });
    }
    Ok(rows)
}
