//! Mixed differences, mixed moduli of continuity and the mixed-smoothness norms.
//!
//! Integrals in `x` are midpoint Riemann sums on the cells of level `x_level`
//! whose centres lie in `D`. When every difference step is a multiple of a
//! dyadic lattice spacing, `f` is tabulated once on that lattice and shrunken-set
//! membership becomes an exact count of lattice points outside `D`
//! (a closed lattice-aligned box lies in the open union of dyadic boxes iff all
//! of its lattice points do, once the lattice resolves every box corner).

use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::{DerivativeField, Field};
use crate::lattice::{tensor_binomial, IndexBox, MultiIndex, SubsetMask};

#[derive(Clone, Debug, PartialEq)]
pub struct ModuliConfig {
    /// Midpoint nodes per active `xi` axis on `[-t, t]`; must be even.
    pub xi_nodes: usize,
    /// The `x` grid has spacing `2^-x_level`.
    pub x_level: u32,
    /// Dyadic `t = 2^-k` for `k` in `t_min_exp..=t_max_exp`.
    pub t_min_exp: i64,
    pub t_max_exp: i64,
    /// Largest tabulation before falling back to direct evaluation.
    pub max_lattice_points: usize,
}

impl Default for ModuliConfig {
    fn default() -> Self {
        Self {
            xi_nodes: 8,
            x_level: 7,
            t_min_exp: -2,
            t_max_exp: 6,
            max_lattice_points: 1 << 25,
        }
    }
}

impl ModuliConfig {
    pub fn with_t_max_exp(mut self, k: i64) -> Self {
        self.t_max_exp = k;
        self
    }

    pub fn with_x_level(mut self, q: u32) -> Self {
        self.x_level = q;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.xi_nodes < 2 || self.xi_nodes % 2 == 1 {
            return Err(Error::InvalidArgument(format!(
                "xi_nodes must be even and at least 2, got {}",
                self.xi_nodes
            )));
        }
        if self.t_max_exp < self.t_min_exp {
            return Err(Error::InvalidArgument(format!(
                "empty t range {}..={}",
                self.t_min_exp, self.t_max_exp
            )));
        }
        if self.x_level > 24 {
            return Err(Error::InvalidArgument(format!("x_level {} too fine", self.x_level)));
        }
        Ok(())
    }

    /// The dyadic `t` nodes, largest first.
    pub fn t_nodes(&self) -> Vec<f64> {
        (self.t_min_exp..=self.t_max_exp)
            .map(|k| 2f64.powi(-k as i32))
            .collect()
    }
}

/// `Delta_h^l f(x) = sum_{k <= l} (-1)^{|l-k|} C_l^k f(x + k h)`.
pub fn mixed_difference<F: Field + ?Sized>(f: &F, l: &MultiIndex, h: &[f64], x: &[f64]) -> f64 {
    let d = l.dim();
    let stencil = IndexBox::new(MultiIndex::zeros(d), *l).expect("same dimension");
    let mut y = vec![0.0; d];
    let mut acc = 0.0;
    for k in stencil.iter() {
        for j in 0..d {
            y[j] = x[j] + k[j] as f64 * h[j];
        }
        let c = tensor_binomial(l, &k).expect("k <= l") as f64;
        let sign = if (l.sum() - k.sum()) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * c * f.eval(&y);
    }
    acc
}

/// Difference order `l` restricted to the axes `J`, step bounds `t_j` for
/// `j` in `J` (ignored elsewhere) and integrability exponent `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusQuery {
    pub l: MultiIndex,
    pub axes: SubsetMask,
    pub t: Vec<f64>,
    pub p: f64,
}

impl ModulusQuery {
    pub fn new(l: MultiIndex, axes: SubsetMask, t: Vec<f64>, p: f64) -> Result<Self> {
        let d = l.dim();
        if axes.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: axes.dim(),
            });
        }
        if t.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: t.len(),
            });
        }
        l.require_nonnegative("difference order")?;
        for j in axes.iter() {
            if !(t[j] > 0.0 && t[j].is_finite()) {
                return Err(Error::Negative {
                    what: "step bound",
                    value: t[j].to_string(),
                });
            }
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("p must be in [1, inf], got {p}")));
        }
        Ok(Self { l, axes, t, p })
    }

    /// A query on every axis with a common bound `t`.
    pub fn uniform(l: MultiIndex, t: f64, p: f64) -> Result<Self> {
        let d = l.dim();
        Self::new(l, SubsetMask::full(d), vec![t; d], p)
    }

    fn order(&self) -> MultiIndex {
        let chi = self.axes.chi();
        MultiIndex::new(
            &(0..self.l.dim())
                .map(|j| self.l[j] * chi[j])
                .collect::<Vec<_>>(),
        )
        .expect("same dimension")
    }
}

/// One axis of a `xi` grid: the positive nodes only, by evenness of
/// `||Delta_xi f||` in each `xi_j`. The sup grid contains the midpoint nodes,
/// so the averaged modulus never exceeds the sup modulus.
fn axis_nodes(t: f64, n: usize, averaged: bool) -> Vec<f64> {
    if averaged {
        (0..n / 2).map(|i| (2 * i + 1) as f64 * t / n as f64).collect()
    } else {
        (1..=n).map(|i| i as f64 * t / n as f64).collect()
    }
}

/// Sup nodes for `t`, `t/2`, `t/4`, ... down to `floor`; the union is nested
/// under doubling of `t`, so the resulting modulus is monotone in `t`.
fn nested_axis_nodes(t: f64, n: usize, floor: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut s = t;
    loop {
        v.extend(axis_nodes(s, n, false));
        s /= 2.0;
        if s < floor {
            break;
        }
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

fn xi_grid(q: &ModulusQuery, nodes: impl Fn(f64) -> Vec<f64>) -> Vec<Vec<f64>> {
    let d = q.l.dim();
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            if q.axes.contains(j) && q.l[j] > 0 {
                nodes(q.t[j])
            } else {
                vec![0.0]
            }
        })
        .collect();
    let lens: Vec<i64> = axes.iter().map(|a| a.len() as i64 - 1).collect();
    let b = IndexBox::new(MultiIndex::zeros(d), MultiIndex::new(&lens).expect("dim")).expect("dim");
    b.iter()
        .map(|i| (0..d).map(|j| axes[j][i[j] as usize]).collect())
        .collect()
}

struct Lattice {
    level: i64,
    shape: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<f64>,
    pad_strides: Vec<usize>,
    /// Counts of lattice points outside `D` with every index below the key.
    outside: Vec<u32>,
}

impl Lattice {
    fn scale(&self) -> f64 {
        2f64.powi(self.level as i32)
    }

    fn steps(&self, h: &[f64]) -> Option<Vec<usize>> {
        let s = self.scale();
        h.iter()
            .map(|&v| {
                let u = v * s;
                (u.fract() == 0.0 && u >= 0.0 && u < 1e15).then_some(u as usize)
            })
            .collect()
    }
}

struct Point {
    x: Vec<f64>,
    cell: Vec<usize>,
    flat: usize,
    pad: usize,
}

/// Samples of `f` on the `x` grid of `D`, optionally backed by a lattice,
/// answering many modulus queries from one tabulation.
pub struct ModulusEngine<'a, F: ?Sized> {
    f: &'a F,
    domain: &'a Domain,
    xi_nodes: usize,
    floor: f64,
    cell_volume: f64,
    points: Vec<Point>,
    lattice: Option<Lattice>,
}

fn dyadic_level(v: f64) -> Option<i64> {
    (0..=52i64).find(|&r| (v * 2f64.powi(r as i32)).fract() == 0.0)
}

impl<'a, F: Field + ?Sized> ModulusEngine<'a, F> {
    /// `steps` lists every difference step that will be queried; the lattice is
    /// built only if all of them share a dyadic level small enough to tabulate.
    pub fn new(f: &'a F, domain: &'a Domain, cfg: &ModuliConfig, steps: &[f64]) -> Result<Self> {
        cfg.validate()?;
        let d = domain.dim();
        if f.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: f.dim(),
            });
        }
        let (lo, hi) = domain.bounding_box();
        let q = cfg.x_level as i32;
        let h = 2f64.powi(-q);
        let counts: Vec<usize> = (0..d).map(|j| ((hi[j] - lo[j]) / h).ceil() as usize).collect();

        let mut level = Some((q + 1) as i64);
        for v in steps.iter().chain(lo.iter()).chain(hi.iter()) {
            level = match (level, dyadic_level(*v)) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        let lattice = level.and_then(|r| {
            let s = 2f64.powi(r as i32);
            let shape: Vec<usize> = (0..d).map(|j| ((hi[j] - lo[j]) * s) as usize + 1).collect();
            let total = shape.iter().try_fold(1usize, |a, &n| a.checked_mul(n))?;
            if total > cfg.max_lattice_points {
                log::debug!("lattice of {total} points exceeds the cap, sampling directly");
                return None;
            }
            Some(build_lattice(f, domain, r, &lo, shape))
        });

        let mut points = Vec::new();
        let cells = IndexBox::new(
            MultiIndex::zeros(d),
            MultiIndex::new(&counts.iter().map(|&c| c as i64 - 1).collect::<Vec<_>>())?,
        )?;
        for i in cells.iter() {
            let x: Vec<f64> = (0..d).map(|j| lo[j] + (i[j] as f64 + 0.5) * h).collect();
            if !domain.contains(&x) {
                continue;
            }
            let cell: Vec<usize> = match &lattice {
                Some(lat) => {
                    let s = lat.scale();
                    (0..d).map(|j| ((x[j] - lo[j]) * s) as usize).collect()
                }
                None => vec![0; d],
            };
            let (flat, pad) = match &lattice {
                Some(lat) => (
                    (0..d).map(|j| cell[j] * lat.strides[j]).sum(),
                    (0..d).map(|j| cell[j] * lat.pad_strides[j]).sum(),
                ),
                None => (0, 0),
            };
            points.push(Point { x, cell, flat, pad });
        }
        Ok(Self {
            f,
            domain,
            xi_nodes: cfg.xi_nodes,
            floor: h,
            cell_volume: h.powi(d as i32),
            points,
            lattice,
        })
    }

    /// An engine whose lattice, if any, resolves every node of `queries`.
    pub fn for_queries(
        f: &'a F,
        domain: &'a Domain,
        cfg: &ModuliConfig,
        queries: &[ModulusQuery],
    ) -> Result<Self> {
        let floor = 2f64.powi(-(cfg.x_level as i32));
        let mut steps = Vec::new();
        for q in queries {
            steps.extend(query_steps(xi_grid(q, |t| axis_nodes(t, cfg.xi_nodes, true))));
            steps.extend(query_steps(xi_grid(q, |t| nested_axis_nodes(t, cfg.xi_nodes, floor))));
        }
        steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        steps.dedup();
        Self::new(f, domain, cfg, &steps)
    }

    pub fn uses_lattice(&self) -> bool {
        self.lattice.is_some()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let vals = self.points.iter().map(|pt| match &self.lattice {
            Some(lat) => lat.values[pt.flat],
            None => self.f.eval(&pt.x),
        });
        if p.is_infinite() {
            vals.fold(0.0, |m, v| m.max(v.abs()))
        } else {
            (vals.map(|v| v.abs().powf(p)).sum::<f64>() * self.cell_volume).powf(1.0 / p)
        }
    }

    /// `||Delta_h^l f||_{L_p(D_h^l)}` for `h >= 0`.
    pub fn difference_norm(&self, l: &MultiIndex, h: &[f64], p: f64) -> f64 {
        let d = l.dim();
        let acc = match self.lattice.as_ref().and_then(|lat| lat.steps(h).map(|s| (lat, s))) {
            Some((lat, s)) => {
                let stencil = IndexBox::new(MultiIndex::zeros(d), *l).expect("dim");
                let terms: Vec<(usize, f64)> = stencil
                    .iter()
                    .map(|k| {
                        let off: usize = (0..d).map(|j| k[j] as usize * s[j] * lat.strides[j]).sum();
                        let c = tensor_binomial(l, &k).expect("k <= l") as f64;
                        let sign = if (l.sum() - k.sum()) % 2 == 0 { 1.0 } else { -1.0 };
                        (off, sign * c)
                    })
                    .collect();
                let span: Vec<usize> = (0..d).map(|j| l[j] as usize * s[j]).collect();
                let corners: Vec<(usize, i64)> = (0..1usize << d)
                    .map(|c| {
                        let off = (0..d)
                            .filter(|&j| c >> j & 1 == 1)
                            .map(|j| (span[j] + 1) * lat.pad_strides[j])
                            .sum();
                        let sign = if (d - (c as u32).count_ones() as usize) % 2 == 0 { 1 } else { -1 };
                        (off, sign)
                    })
                    .collect();
                let mut acc = 0.0;
                for pt in &self.points {
                    if (0..d).any(|j| pt.cell[j] + span[j] >= lat.shape[j]) {
                        continue;
                    }
                    let outside: i64 = corners
                        .iter()
                        .map(|&(off, sign)| sign * lat.outside[pt.pad + off] as i64)
                        .sum();
                    if outside != 0 {
                        continue;
                    }
                    let v: f64 = terms.iter().map(|&(off, c)| c * lat.values[pt.flat + off]).sum();
                    acc = accumulate(acc, v, p);
                }
                acc
            }
            None => {
                let mut acc = 0.0;
                for pt in &self.points {
                    if self.domain.shrunken_contains(&pt.x, l, h) {
                        acc = accumulate(acc, mixed_difference(self.f, l, h, &pt.x), p);
                    }
                }
                acc
            }
        };
        if p.is_infinite() {
            acc
        } else {
            (acc * self.cell_volume).powf(1.0 / p)
        }
    }

    /// The averaged modulus; the sup modulus when `p = inf`.
    pub fn omega_avg(&self, q: &ModulusQuery) -> f64 {
        let n = self.xi_nodes;
        if q.p.is_infinite() {
            return self.omega_sup(q);
        }
        let l = q.order();
        let grid = xi_grid(q, |t| axis_nodes(t, n, true));
        let parts: Vec<f64> = grid
            .par_iter()
            .map(|xi| self.difference_norm(&l, xi, q.p).powf(q.p))
            .collect();
        (parts.iter().sum::<f64>() / grid.len() as f64).powf(1.0 / q.p)
    }

    /// The sup modulus over dyadically refined grids, monotone in `t`.
    pub fn omega_sup(&self, q: &ModulusQuery) -> f64 {
        let (n, floor) = (self.xi_nodes, self.floor);
        self.omega_sup_on(q, |t| nested_axis_nodes(t, n, floor))
    }

    fn omega_sup_on(&self, q: &ModulusQuery, nodes: impl Fn(f64) -> Vec<f64>) -> f64 {
        let l = q.order();
        let grid = xi_grid(q, nodes);
        let parts: Vec<f64> = grid
            .par_iter()
            .map(|xi| self.difference_norm(&l, xi, q.p))
            .collect();
        parts.into_iter().fold(0.0, f64::max)
    }
}

fn accumulate(acc: f64, v: f64, p: f64) -> f64 {
    if p.is_infinite() {
        acc.max(v.abs())
    } else if p == 1.0 {
        acc + v.abs()
    } else if p == 2.0 {
        acc + v * v
    } else {
        acc + v.abs().powf(p)
    }
}

fn build_lattice<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    level: i64,
    origin: &[f64],
    shape: Vec<usize>,
) -> Lattice {
    let d = shape.len();
    let s = 2f64.powi(-(level as i32));
    let mut strides = vec![1usize; d];
    let mut pad_strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
        pad_strides[j] = pad_strides[j + 1] * (shape[j + 1] + 1);
    }
    let total: usize = shape.iter().product();
    let pad_total: usize = shape.iter().map(|n| n + 1).product();
    // one row (last axis) per task
    let row = shape[d - 1];
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..total / row)
        .into_par_iter()
        .map(|r| {
            let mut x = vec![0.0; d];
            let mut rem = r * row;
            for j in 0..d {
                x[j] = origin[j] + (rem / strides[j]) as f64 * s;
                rem %= strides[j];
            }
            let mut vals = Vec::with_capacity(row);
            let mut inside = Vec::with_capacity(row);
            for i in 0..row {
                x[d - 1] = origin[d - 1] + i as f64 * s;
                let inn = domain.contains(&x);
                inside.push(inn);
                vals.push(if inn { f.eval(&x) } else { 0.0 });
            }
            (vals, inside)
        })
        .collect();
    let mut values = Vec::with_capacity(total);
    let mut outside = vec![0u32; pad_total];
    for (r, (vals, inside)) in rows.into_iter().enumerate() {
        let base = r * row;
        for (i, inn) in inside.into_iter().enumerate() {
            if !inn {
                let mut rem = base + i;
                let mut pad = 0;
                for j in 0..d {
                    pad += (rem / strides[j] + 1) * pad_strides[j];
                    rem %= strides[j];
                }
                outside[pad] = 1;
            }
        }
        values.extend(vals);
    }
    // prefix sums along each axis
    for j in 0..d {
        let n = shape[j] + 1;
        let st = pad_strides[j];
        for idx in 0..pad_total {
            if (idx / st) % n != 0 {
                outside[idx] += outside[idx - st];
            }
        }
    }
    Lattice {
        level,
        shape,
        strides,
        values,
        pad_strides,
        outside,
    }
}

fn query_steps(grid: Vec<Vec<f64>>) -> Vec<f64> {
    let mut steps: Vec<f64> = grid.into_iter().flatten().collect();
    steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    steps.dedup();
    steps
}

/// `Omega^{l chi_J}(f, t)_{L_p(D)}`: the largest difference norm over a grid
/// of steps in `[0, t]^J`, refined dyadically towards zero down to the `x`
/// grid spacing.
pub fn omega_sup<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    query: &ModulusQuery,
    cfg: &ModuliConfig,
) -> Result<f64> {
    let floor = 2f64.powi(-(cfg.x_level as i32));
    let nodes = |t: f64| nested_axis_nodes(t, cfg.xi_nodes, floor);
    let engine = ModulusEngine::new(f, domain, cfg, &query_steps(xi_grid(query, nodes)))?;
    Ok(engine.omega_sup(query))
}

/// `Omega'^{l chi_J}(f, t)_{L_p(D)}`, the `xi`-averaged modulus; equals
/// [`omega_sup`] for `p = inf`.
pub fn omega_avg<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    query: &ModulusQuery,
    cfg: &ModuliConfig,
) -> Result<f64> {
    if query.p.is_infinite() {
        return omega_sup(f, domain, query, cfg);
    }
    let nodes = |t: f64| axis_nodes(t, cfg.xi_nodes, true);
    let engine = ModulusEngine::new(f, domain, cfg, &query_steps(xi_grid(query, nodes)))?;
    Ok(engine.omega_avg(query))
}

pub fn lp_norm<F: Field + ?Sized>(f: &F, domain: &Domain, p: f64, cfg: &ModuliConfig) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be in [1, inf], got {p}")));
    }
    Ok(ModulusEngine::new(f, domain, cfg, &[])?.lp_norm(p))
}

/// `||Delta_h^l f||_{L_p(D_h^l)}`.
pub fn difference_norm<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    l: &MultiIndex,
    h: &[f64],
    p: f64,
    cfg: &ModuliConfig,
) -> Result<f64> {
    let abs: Vec<f64> = h.iter().map(|v| v.abs()).collect();
    // the norm is even in each h_j, so work with |h|
    let sampler = ModulusEngine::new(f, domain, cfg, &abs)?;
    Ok(sampler.difference_norm(l, &abs, p))
}

/// `l(alpha)_j = floor(alpha_j) + 1`, the smallest order exceeding `alpha`.
pub fn modulus_order(alpha: &[f64]) -> Result<MultiIndex> {
    for &a in alpha {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("smoothness must be positive, got {a}")));
        }
    }
    MultiIndex::new(&alpha.iter().map(|a| a.floor() as i64 + 1).collect::<Vec<_>>())
}

/// Moduli of one function sampled on the dyadic `t` grid, from which the
/// Besov-type norm for any `theta` follows without resampling.
#[derive(Clone, Debug)]
pub struct ModulusTable {
    pub p: f64,
    /// Effective smoothness per axis (`alpha`, or `alpha - ell`).
    pub exponent: Vec<f64>,
    /// Decay rate of the modulus in `t_j` past the sampled range.
    pub decay: f64,
    pub t: Vec<f64>,
    /// `log t` trapezoid weights without the tail.
    pub lp: f64,
    /// For each nonempty `J`, moduli over the `t` grid on `J`, row-major.
    pub moduli: Vec<(SubsetMask, Vec<f64>)>,
}

impl ModulusTable {
    fn weights(&self, j: usize, theta: f64) -> Vec<f64> {
        let h = std::f64::consts::LN_2;
        let n = self.t.len();
        (0..n)
            .map(|i| {
                let mut w = if i == 0 || i + 1 == n { h / 2.0 } else { h };
                if n == 1 {
                    w = 0.0;
                }
                if i == 0 {
                    // closed-form tail beyond the largest t: the modulus decays
                    // like t^-decay once the shrunken sets are empty
                    w += 1.0 / (theta * (self.exponent[j] + self.decay));
                }
                w
            })
            .collect()
    }

    /// The `J` term of the norm: a `log t` trapezoid sum with a closed-form tail
    /// for finite `theta`, the grid supremum for `theta = inf`.
    pub fn axis_term(&self, axes: &SubsetMask, theta: f64) -> Result<f64> {
        let (_, values) = self
            .moduli
            .iter()
            .find(|(a, _)| a == axes)
            .ok_or_else(|| Error::InvalidArgument(format!("no moduli for axes {axes}")))?;
        let js: Vec<usize> = axes.iter().collect();
        let n = self.t.len();
        let ws: Vec<Vec<f64>> = if theta.is_finite() {
            js.iter().map(|&j| self.weights(j, theta)).collect()
        } else {
            Vec::new()
        };
        let mut acc: f64 = 0.0;
        let mut idx = vec![0usize; js.len()];
        for v in values {
            let mut scale = 1.0;
            for (a, &j) in js.iter().enumerate() {
                scale *= self.t[idx[a]].powf(-self.exponent[j]);
            }
            if theta.is_finite() {
                let w: f64 = (0..js.len()).map(|a| ws[a][idx[a]]).product();
                acc += w * (scale * v).powf(theta);
            } else {
                acc = acc.max(scale * v);
            }
            for a in (0..js.len()).rev() {
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(if theta.is_finite() { acc.powf(1.0 / theta) } else { acc })
    }

    /// `max(||f||_p, max_J term_J)`.
    pub fn norm(&self, theta: f64) -> Result<f64> {
        if !(theta >= 1.0) {
            return Err(Error::InvalidArgument(format!("theta must be in [1, inf], got {theta}")));
        }
        let mut v = self.lp;
        for (axes, _) in &self.moduli {
            v = v.max(self.axis_term(axes, theta)?);
        }
        Ok(v)
    }
}

fn validate_norm_args(d: usize, alpha: &[f64], p: f64) -> Result<MultiIndex> {
    if alpha.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: alpha.len(),
        });
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be in [1, inf], got {p}")));
    }
    modulus_order(alpha)
}

fn dyadic_steps(cfg: &ModuliConfig, averaged: bool) -> Vec<f64> {
    let mut steps: Vec<f64> = cfg
        .t_nodes()
        .into_iter()
        .flat_map(|t| axis_nodes(t, cfg.xi_nodes, averaged))
        .collect();
    steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    steps.dedup();
    steps
}

/// Moduli over the `t` grid on `J`, row-major with the largest `t` first. Sup
/// moduli take a running maximum towards larger `t`, which keeps them
/// monotone and includes the nodes of every smaller grid.
fn grid_moduli<F: Field + ?Sized>(
    sampler: &ModulusEngine<'_, F>,
    l: &MultiIndex,
    axes: &SubsetMask,
    t: &[f64],
    p: f64,
    averaged: bool,
    n: usize,
) -> Result<Vec<f64>> {
    let d = l.dim();
    let k = axes.len();
    let b = IndexBox::new(
        MultiIndex::zeros(k),
        MultiIndex::splat(k, t.len() as i64 - 1),
    )?;
    let mut values = b
        .iter()
        .map(|i| {
            let mut tv = vec![1.0; d];
            for (a, j) in axes.iter().enumerate() {
                tv[j] = t[i[a] as usize];
            }
            let q = ModulusQuery::new(*l, *axes, tv, p)?;
            Ok(if averaged {
                sampler.omega_avg(&q)
            } else {
                sampler.omega_sup_on(&q, |s| axis_nodes(s, n, false))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if !averaged {
        let len = t.len();
        let mut stride = 1;
        for _ in 0..k {
            for idx in (0..values.len()).rev() {
                if (idx / stride) % len + 1 < len {
                    values[idx] = values[idx].max(values[idx + stride]);
                }
            }
            stride *= len;
        }
    }
    Ok(values)
}

/// Samples `Omega'^{l(alpha) chi_J}(f, t)` for every nonempty `J` on the dyadic grid.
pub fn prime_modulus_table<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    alpha: &[f64],
    p: f64,
    cfg: &ModuliConfig,
) -> Result<ModulusTable> {
    let d = domain.dim();
    let l = validate_norm_args(d, alpha, p)?;
    let sampler = ModulusEngine::new(f, domain, cfg, &dyadic_steps(cfg, p.is_finite()))?;
    let t = cfg.t_nodes();
    let mut moduli = Vec::new();
    for axes in SubsetMask::all(d).filter(|a| !a.is_empty()) {
        moduli.push((axes, grid_moduli(&sampler, &l, &axes, &t, p, p.is_finite(), cfg.xi_nodes)?));
    }
    Ok(ModulusTable {
        p,
        exponent: alpha.to_vec(),
        decay: if p.is_finite() { 1.0 / p } else { 0.0 },
        t,
        lp: sampler.lp_norm(p),
        moduli,
    })
}

/// `||f||_{(S^alpha_{p,theta} B)'(D)}`; `theta = inf` gives the Nikolskii norm.
pub fn besov_prime_norm<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    alpha: &[f64],
    p: f64,
    theta: f64,
    cfg: &ModuliConfig,
) -> Result<f64> {
    prime_modulus_table(f, domain, alpha, p, cfg)?.norm(theta)
}

/// `||f||_{(S^alpha_p H)'(D)}`.
pub fn nikolskii_prime_norm<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    alpha: &[f64],
    p: f64,
    cfg: &ModuliConfig,
) -> Result<f64> {
    besov_prime_norm(f, domain, alpha, p, f64::INFINITY, cfg)
}

/// Samples `Omega^{(l - ell) chi_J}(D^{ell chi_J} f, t)` for every nonempty `J`.
pub fn ell_modulus_table<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    alpha: &[f64],
    p: f64,
    ell: &MultiIndex,
    cfg: &ModuliConfig,
) -> Result<ModulusTable> {
    let d = domain.dim();
    let l = validate_norm_args(d, alpha, p)?;
    if ell.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: ell.dim(),
        });
    }
    ell.require_nonnegative("derivative order")?;
    if (0..d).any(|j| ell[j] as f64 >= alpha[j]) {
        return Err(Error::NotDominated {
            what: "derivative order below smoothness",
            lower: ell.to_string(),
            upper: format!("{alpha:?}"),
        });
    }
    let probe = domain.bounding_box().0;
    if ell.sum() > 0 && f.derivative(ell, &probe).is_none() {
        return Err(Error::DerivativeOrder {
            order: ell.to_string(),
            max: "no derivative oracle".into(),
        });
    }
    let steps = dyadic_steps(cfg, false);
    let t = cfg.t_nodes();
    let order = l.checked_sub_nonneg(ell)?;
    let mut moduli = Vec::new();
    for axes in SubsetMask::all(d).filter(|a| !a.is_empty()) {
        let chi = axes.chi();
        let lambda = MultiIndex::new(&(0..d).map(|j| ell[j] * chi[j]).collect::<Vec<_>>())?;
        let g = DerivativeField { f, lambda };
        let sampler = ModulusEngine::new(&g, domain, cfg, &steps)?;
        moduli.push((axes, grid_moduli(&sampler, &order, &axes, &t, p, false, cfg.xi_nodes)?));
    }
    Ok(ModulusTable {
        p,
        exponent: (0..d).map(|j| alpha[j] - ell[j] as f64).collect(),
        decay: 0.0,
        t,
        lp: lp_norm(f, domain, p, cfg)?,
        moduli,
    })
}

/// `||f||_{(S^alpha_{p,theta} B)^ell(D)}`.
pub fn besov_ell_norm<F: Field + ?Sized>(
    f: &F,
    domain: &Domain,
    alpha: &[f64],
    p: f64,
    theta: f64,
    ell: &MultiIndex,
    cfg: &ModuliConfig,
) -> Result<f64> {
    ell_modulus_table(f, domain, alpha, p, ell, cfg)?.norm(theta)
}

/// `prod_j 2^{2 + alpha_j}`, the constant bounding the Nikolskii norm by any
/// Besov norm of the same smoothness.
pub fn nikolskii_besov_constant(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| 2f64.powf(2.0 + a)).product()
}
