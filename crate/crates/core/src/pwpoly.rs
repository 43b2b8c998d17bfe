//! Spline expansions `sum_nu f_nu g_{kappa,nu}` with polynomial coefficients,
//! their derivatives, two-scale refinement and multilevel sums.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bspline::{g_unchecked, product_weight};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{even_shift_decompositions, tensor_binomial, IndexBox, MultiIndex, SubsetMask};
use crate::polyproj::{project, Cell, TensorPolynomial};

/// A lazy linear combination of polynomials, possibly on different cells.
#[derive(Clone, Debug, Default)]
pub struct PolySum {
    terms: Vec<(f64, Arc<TensorPolynomial>)>,
}

impl PolySum {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn single(p: Arc<TensorPolynomial>) -> Self {
        Self {
            terms: vec![(1.0, p)],
        }
    }

    pub fn terms(&self) -> &[(f64, Arc<TensorPolynomial>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(w, _)| *w == 0.0)
    }

    /// `self += w * other`, merging terms that share a polynomial.
    pub fn add_scaled(&mut self, other: &PolySum, w: f64) {
        for (v, p) in &other.terms {
            self.push(w * v, p);
        }
    }

    pub fn push(&mut self, w: f64, p: &Arc<TensorPolynomial>) {
        if let Some(t) = self.terms.iter_mut().find(|(_, q)| Arc::ptr_eq(q, p)) {
            t.0 += w;
        } else {
            self.terms.push((w, p.clone()));
        }
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(v, p)| (w * v, p.clone())).collect(),
        }
    }

    #[inline]
    pub fn eval_derivative(&self, lambda: &MultiIndex, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(w, p)| w * p.eval_derivative(lambda, x))
            .sum()
    }

    /// The same polynomial expressed on `cell` with degree `degree`.
    pub fn rebase(&self, cell: &Cell, degree: &MultiIndex) -> TensorPolynomial {
        if let [(w, p)] = self.terms.as_slice() {
            if p.cell == *cell && p.degree == *degree {
                let mut out = (**p).clone();
                out.coeffs.iter_mut().for_each(|c| *c *= w);
                return out;
            }
        }
        let f = crate::field::FnField::new(degree.dim(), |x: &[f64]| {
            self.eval_derivative(&MultiIndex::zeros(degree.dim()), x)
        });
        project(&f, cell, degree, degree.max_entry() as usize + 1)
            .expect("rebasing a polynomial cannot fail")
    }
}

/// `sum_{nu in N_kappa} f_nu g_{kappa,nu}` with coefficients stored densely over
/// the bounding box of the active set.
#[derive(Clone, Debug)]
pub struct SplineExpansion {
    level: MultiIndex,
    m: MultiIndex,
    degree: MultiIndex,
    domain: Arc<Domain>,
    bounds: IndexBox,
    coeffs: Vec<Option<PolySum>>,
}

fn check_order(m: &MultiIndex) -> Result<()> {
    m.require_nonnegative("spline order")?;
    if m.max_entry() > crate::bspline::MAX_ORDER {
        return Err(Error::InvalidArgument(format!("spline order {m} too large")));
    }
    Ok(())
}

impl SplineExpansion {
    /// Builds the expansion with `coeff(nu)` for every active `nu`, in parallel.
    pub fn from_fn<F>(
        domain: Arc<Domain>,
        level: MultiIndex,
        m: MultiIndex,
        degree: MultiIndex,
        coeff: F,
    ) -> Result<Self>
    where
        F: Fn(&MultiIndex) -> Result<PolySum> + Sync,
    {
        let d = domain.dim();
        for (what, v) in [("level", &level), ("order", &m), ("degree", &degree)] {
            if v.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.dim(),
                });
            }
            v.require_nonnegative(what)?;
        }
        check_order(&m)?;
        let bounds = domain.active_bounds(&level, &m);
        let active = domain.active_indices(&level, &m);
        let values: Vec<(MultiIndex, PolySum)> = active
            .par_iter()
            .map(|nu| coeff(nu).map(|c| (*nu, c)))
            .collect::<Result<_>>()?;
        let mut coeffs = vec![None; bounds.len()];
        for (nu, c) in values {
            coeffs[bounds.offset(&nu).expect("active index inside bounds")] = Some(c);
        }
        Ok(Self {
            level,
            m,
            degree,
            domain,
            bounds,
            coeffs,
        })
    }

    /// Every coefficient equal to the constant `c`.
    pub fn constant(
        domain: Arc<Domain>,
        level: MultiIndex,
        m: MultiIndex,
        degree: MultiIndex,
        c: f64,
    ) -> Result<Self> {
        let cell = Cell::unit(domain.dim());
        let p = Arc::new(TensorPolynomial::constant(c, degree, cell));
        Self::from_fn(domain, level, m, degree, |_| Ok(PolySum::single(p.clone())))
    }

    pub fn level(&self) -> MultiIndex {
        self.level
    }

    pub fn order(&self) -> MultiIndex {
        self.m
    }

    pub fn degree(&self) -> MultiIndex {
        self.degree
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.level.dim()
    }

    pub fn get(&self, nu: &MultiIndex) -> Option<&PolySum> {
        self.bounds
            .offset(nu)
            .and_then(|i| self.coeffs[i].as_ref())
    }

    /// Replaces an existing coefficient.
    pub fn set(&mut self, nu: &MultiIndex, c: PolySum) -> Result<()> {
        let slot = self
            .bounds
            .offset(nu)
            .and_then(|i| self.coeffs[i].as_mut())
            .ok_or_else(|| Error::InactiveIndex {
                index: nu.to_string(),
                level: self.level.to_string(),
                domain: self.domain.name().to_string(),
            })?;
        *slot = c;
        Ok(())
    }

    /// Active indices in sorted order with their coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, &PolySum)> {
        self.bounds
            .iter()
            .zip(&self.coeffs)
            .filter_map(|(nu, c)| c.as_ref().map(|c| (nu, c)))
    }

    pub fn indices(&self) -> Vec<MultiIndex> {
        self.iter().map(|(nu, _)| nu).collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Closed support box of `g_{level,nu}`.
    pub fn support_cell(&self, nu: &MultiIndex) -> Cell {
        let d = self.dim();
        let mut x0 = vec![0.0; d];
        let mut delta = vec![0.0; d];
        for j in 0..d {
            let h = (2.0f64).powi(-(self.level[j] as i32));
            x0[j] = nu[j] as f64 * h;
            delta[j] = (self.m[j] + 1) as f64 * h;
        }
        Cell::new(&x0, &delta).expect("valid support")
    }

    /// `D^lambda` of the expansion at `x`, by the Leibniz rule over the
    /// basis functions whose support contains `x`.
    pub fn evaluate(&self, lambda: &MultiIndex, x: &[f64]) -> Result<f64> {
        lambda.require_nonnegative("derivative order")?;
        if !lambda.le(&self.m) {
            return Err(Error::DerivativeOrder {
                order: lambda.to_string(),
                max: self.m.to_string(),
            });
        }
        Ok(self.evaluate_unchecked(lambda, x))
    }

    pub(crate) fn evaluate_unchecked(&self, lambda: &MultiIndex, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut base = self.level;
        for j in 0..d {
            let s = (2.0f64).powi(self.level[j] as i32);
            base = base.with(j, (s * x[j]).floor() as i64);
        }
        let lo = base.checked_sub(&self.m).expect("index overflow");
        let cands = IndexBox { lo, hi: base };
        if lambda.sum() == 0 {
            let mut total = 0.0;
            for nu in cands.iter() {
                let Some(c) = self.get(&nu) else { continue };
                let g = g_unchecked(&self.level, &nu, &self.m, lambda, x);
                if g != 0.0 {
                    total += c.eval_derivative(lambda, x) * g;
                }
            }
            return total;
        }
        let leibniz: Vec<(f64, MultiIndex, MultiIndex)> = IndexBox {
            lo: MultiIndex::zeros(d),
            hi: *lambda,
        }
        .iter()
        .map(|mu| {
            let c = tensor_binomial(lambda, &mu).expect("mu <= lambda") as f64;
            (c, mu, lambda.checked_sub(&mu).expect("mu <= lambda"))
        })
        .collect();
        let mut total = 0.0;
        for nu in cands.iter() {
            let Some(c) = self.get(&nu) else { continue };
            for (binom, mu, rest) in &leibniz {
                let g = g_unchecked(&self.level, &nu, &self.m, rest, x);
                if g == 0.0 {
                    continue;
                }
                total += binom * c.eval_derivative(mu, x) * g;
            }
        }
        total
    }

    /// Two-scale refinement to level `level + eps`: coefficient `nu` becomes
    /// `sum_mu A_mu f_{n_eps(nu, mu)}`. Source indices outside the active set
    /// contribute zero and are logged.
    pub fn refine(&self, eps: &SubsetMask) -> Result<SplineExpansion> {
        if eps.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: eps.dim(),
            });
        }
        if eps.is_empty() {
            return Ok(self.clone());
        }
        let level = self.level.checked_add(&eps.chi())?;
        SplineExpansion::from_fn(self.domain.clone(), level, self.m, self.degree, |nu| {
            let mut acc = PolySum::zero();
            for dec in even_shift_decompositions(nu, eps, &self.m) {
                match self.get(&dec.coarse) {
                    Some(src) => acc.add_scaled(src, product_weight(&dec.mu, &self.m)),
                    None => log::warn!(
                        "refinement source {} missing at level {} for target {} at level {}",
                        dec.coarse,
                        self.level,
                        nu,
                        level
                    ),
                }
            }
            Ok(acc)
        })
    }

    /// Refines to `target`, which must exceed the current level by some `eps`.
    pub fn refine_to(&self, target: &MultiIndex) -> Result<SplineExpansion> {
        let diff = target.checked_sub(&self.level)?;
        if !(0..self.dim()).all(|j| diff[j] == 0 || diff[j] == 1) {
            return Err(Error::LevelMismatch {
                expected: format!("{} + eps", self.level),
                found: target.to_string(),
            });
        }
        let bits: Vec<usize> = (0..self.dim()).filter(|&j| diff[j] == 1).collect();
        self.refine(&SubsetMask::from_indices(self.dim(), &bits)?)
    }

    /// `self + w * other` for expansions on the same level, order and domain.
    pub fn add_scaled(&self, other: &SplineExpansion, w: f64) -> Result<SplineExpansion> {
        if self.level != other.level || self.m != other.m {
            return Err(Error::LevelMismatch {
                expected: format!("{} / order {}", self.level, self.m),
                found: format!("{} / order {}", other.level, other.m),
            });
        }
        let mut out = self.clone();
        for (slot, src) in out.coeffs.iter_mut().zip(&other.coeffs) {
            if let (Some(a), Some(b)) = (slot.as_mut(), src.as_ref()) {
                a.add_scaled(b, w);
            }
        }
        Ok(out)
    }

    /// Coefficient of `nu` as a single polynomial on the support of `g_{level,nu}`.
    pub fn rebased_coeff(&self, nu: &MultiIndex) -> Option<TensorPolynomial> {
        self.get(nu)
            .map(|c| c.rebase(&self.support_cell(nu), &self.degree))
    }

    /// Lowest and highest corner of the union of supports.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for nu in self.indices() {
            let c = self.support_cell(&nu);
            for j in 0..d {
                lo[j] = lo[j].min(c.x0()[j]);
                hi[j] = hi[j].max(c.x0()[j] + c.delta()[j]);
            }
        }
        (lo, hi)
    }

    /// Flat text form: `level`, `order`, `degree` and `domain` header lines,
    /// then one line per active `nu` holding the index and the coefficient
    /// rebased to the support of `g_{level,nu}`, row-major.
    pub fn to_text(&self) -> String {
        let join = |v: &MultiIndex| {
            v.as_slice().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        let mut out = format!(
            "level {}\norder {}\ndegree {}\ndomain {}\n",
            join(&self.level),
            join(&self.m),
            join(&self.degree),
            self.domain.name()
        );
        for nu in self.indices() {
            let p = self.rebased_coeff(&nu).expect("active index");
            out.push_str(&join(&nu));
            for c in &p.coeffs {
                out.push_str(&format!(" {c:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`SplineExpansion::to_text`]; the listed indices must be
    /// exactly the active set of `domain`.
    pub fn from_text(text: &str, domain: Arc<Domain>) -> Result<Self> {
        let mut header: HashMap<&str, MultiIndex> = HashMap::new();
        let mut rows: HashMap<MultiIndex, Vec<f64>> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: String| Error::Parse(format!("line {}: {what}", lineno + 1));
            let mut words = line.split_whitespace();
            let head = words.next().expect("nonempty line");
            match head {
                "level" | "order" | "degree" => {
                    let v = words.next().ok_or_else(|| bad(format!("missing {head}")))?;
                    header.insert(head, v.parse().map_err(|e: Error| bad(e.to_string()))?);
                }
                "domain" => {}
                _ => {
                    let nu: MultiIndex = head.parse().map_err(|e: Error| bad(e.to_string()))?;
                    let coeffs = words
                        .map(|w| w.parse::<f64>().map_err(|e| bad(format!("`{w}`: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    if rows.insert(nu, coeffs).is_some() {
                        return Err(bad(format!("duplicate index {nu}")));
                    }
                }
            }
        }
        let get = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("missing `{k}` header")))
        };
        let (level, m, degree) = (get("level")?, get("order")?, get("degree")?);
        let active = domain.active_indices(&level, &m);
        if active.len() != rows.len() || active.iter().any(|nu| !rows.contains_key(nu)) {
            return Err(Error::Parse(format!(
                "indices do not match the {} active indices at level {level} on `{}`",
                active.len(),
                domain.name()
            )));
        }
        let proto = Self::constant(domain.clone(), level, m, degree, 0.0)?;
        Self::from_fn(domain, level, m, degree, |nu| {
            let p = TensorPolynomial::new(degree, proto.support_cell(nu), rows[nu].clone())?;
            Ok(PolySum::single(Arc::new(p)))
        })
    }
}

impl Field for SplineExpansion {
    fn dim(&self) -> usize {
        self.level.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.evaluate_unchecked(&MultiIndex::zeros(self.dim()), x)
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        self.evaluate(lambda, x).ok()
    }
}

/// A finite sum of expansions on different levels.
#[derive(Clone, Debug, Default)]
pub struct MultiLevelExpansion {
    pub blocks: Vec<SplineExpansion>,
}

impl MultiLevelExpansion {
    pub fn new(blocks: Vec<SplineExpansion>) -> Self {
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.dim())
    }

    /// Blocks in [`SplineExpansion::to_text`] form, each opened by a `block` line.
    pub fn to_text(&self) -> String {
        self.blocks.iter().map(|b| format!("block\n{}", b.to_text())).collect()
    }

    pub fn from_text(text: &str, domain: Arc<Domain>) -> Result<Self> {
        let mut sections: Vec<String> = Vec::new();
        for line in text.lines() {
            if line.trim() == "block" {
                sections.push(String::new());
            } else if let Some(cur) = sections.last_mut() {
                cur.push_str(line);
                cur.push('\n');
            } else if !line.split('#').next().unwrap().trim().is_empty() {
                return Err(Error::Parse("content before the first `block` line".into()));
            }
        }
        let blocks = sections
            .iter()
            .map(|s| SplineExpansion::from_text(s, domain.clone()))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn evaluate(&self, lambda: &MultiIndex, x: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for b in &self.blocks {
            s += b.evaluate(lambda, x)?;
        }
        Ok(s)
    }

    /// Union of the block support boxes.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for b in &self.blocks {
            let (l, h) = b.support_box();
            for j in 0..d {
                lo[j] = lo[j].min(l[j]);
                hi[j] = hi[j].max(h[j]);
            }
        }
        (lo, hi)
    }

    /// Exact piecewise-polynomial form on the grid of the finest block level.
    pub fn compile(&self) -> Result<PiecewisePolynomial> {
        let first = self
            .blocks
            .first()
            .ok_or_else(|| Error::InvalidArgument("no blocks to compile".into()))?;
        let d = first.dim();
        let mut level = first.level();
        let mut degree = first.degree();
        let m = first.order();
        for b in &self.blocks {
            for j in 0..d {
                level = level.with(j, level[j].max(b.level()[j]));
                degree = degree.with(j, degree[j].max(b.degree()[j]));
            }
        }
        let poly_degree = degree.checked_add(&m)?;
        PiecewisePolynomial::from_field(self, level, poly_degree, self.support_box())
    }
}

impl Field for MultiLevelExpansion {
    fn dim(&self) -> usize {
        MultiLevelExpansion::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let zero = MultiIndex::zeros(self.dim());
        self.blocks.iter().map(|b| b.evaluate_unchecked(&zero, x)).sum()
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        self.evaluate(lambda, x).ok()
    }
}

/// One polynomial per cell of a uniform dyadic grid, zero off the grid.
/// Points on interior cell faces belong to the cell on their right.
#[derive(Clone, Debug)]
pub struct PiecewisePolynomial {
    level: MultiIndex,
    cells: IndexBox,
    polys: Vec<TensorPolynomial>,
}

impl PiecewisePolynomial {
    /// Projects `f` onto degree `degree` on every level cell meeting `support`.
    /// Exact when `f` is piecewise polynomial of that degree on the grid.
    pub fn from_field<F: Field + ?Sized>(
        f: &F,
        level: MultiIndex,
        degree: MultiIndex,
        support: (Vec<f64>, Vec<f64>),
    ) -> Result<Self> {
        let d = level.dim();
        let mut lo = level;
        let mut hi = level;
        for j in 0..d {
            let s = (2.0f64).powi(level[j] as i32);
            lo = lo.with(j, (support.0[j] * s).floor() as i64);
            hi = hi.with(j, (support.1[j] * s).ceil() as i64 - 1);
        }
        let cells = IndexBox::new(lo, hi)?;
        let order = degree.max_entry() as usize + 1;
        let idx: Vec<MultiIndex> = cells.iter().collect();
        let polys = idx
            .par_iter()
            .map(|i| project(f, &Cell::dyadic(&level, i), &degree, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            level,
            cells,
            polys,
        })
    }

    pub fn level(&self) -> MultiIndex {
        self.level
    }

    pub fn cells(&self) -> &IndexBox {
        &self.cells
    }

    /// Polynomial on the grid cell `i`, if inside the grid.
    pub fn piece(&self, i: &MultiIndex) -> Option<&TensorPolynomial> {
        self.cells.offset(i).map(|k| &self.polys[k])
    }

    pub fn eval_derivative(&self, lambda: &MultiIndex, x: &[f64]) -> f64 {
        let d = self.level.dim();
        let mut i = self.level;
        for j in 0..d {
            let s = (2.0f64).powi(self.level[j] as i32);
            i = i.with(j, (x[j] * s).floor() as i64);
        }
        match self.piece(&i) {
            Some(p) => p.eval_derivative(lambda, x),
            None => 0.0,
        }
    }
}

impl Field for PiecewisePolynomial {
    fn dim(&self) -> usize {
        self.level.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_derivative(&MultiIndex::zeros(self.level.dim()), x)
    }

    fn derivative(&self, lambda: &MultiIndex, x: &[f64]) -> Option<f64> {
        Some(self.eval_derivative(lambda, x))
    }
}
