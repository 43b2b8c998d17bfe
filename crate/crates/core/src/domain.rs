//! Bounded domains given as finite unions of open axis-aligned boxes with
//! dyadic corners, the dyadic-cube geometry on them, and the index maps that
//! pick interior cubes for boundary basis functions.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{even_shift_decompositions, sigma, IndexBox, MultiIndex, SubsetMask};
use crate::polyproj::Cell;

/// The dyadic rational `num / 2^exp`.
///
/// Equality and ordering are by value. Every value with `|num| <= 2^53`
/// converts to `f64` without rounding, so box and cube comparisons done in
/// floating point on converted values stay exact.
#[derive(Clone, Copy)]
pub struct Dyadic {
    pub num: i64,
    pub exp: u32,
}

impl Dyadic {
    pub fn new(num: i64, exp: u32) -> Self {
        Self { num, exp }
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n, exp: 0 }
    }

    /// Same value with an odd numerator or zero exponent.
    pub fn reduced(self) -> Self {
        let (mut num, mut exp) = (self.num, self.exp);
        while exp > 0 && num % 2 == 0 {
            num /= 2;
            exp -= 1;
        }
        if num == 0 {
            exp = 0;
        }
        Self { num, exp }
    }

    pub fn to_f64(self) -> f64 {
        debug_assert!(self.num.unsigned_abs() <= 1 << 53);
        self.num as f64 * (2.0f64).powi(-(self.exp as i32))
    }

    /// `floor(self * 2^level)`.
    pub fn floor_at(self, level: i64) -> i64 {
        let shift = level - self.exp as i64;
        if shift >= 0 {
            self.num << shift
        } else {
            self.num.div_euclid(1i64 << (-shift))
        }
    }

    /// `ceil(self * 2^level)`.
    pub fn ceil_at(self, level: i64) -> i64 {
        -Dyadic::new(-self.num, self.exp).floor_at(level)
    }

    fn key(self, other: Self) -> (i128, i128) {
        let e = self.exp.max(other.exp);
        (
            (self.num as i128) << (e - self.exp),
            (other.num as i128) << (e - other.exp),
        )
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.key(*other);
        a == b
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.key(*other);
        a.cmp(&b)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if r.exp == 0 {
            write!(f, "{}", r.num)
        } else {
            write!(f, "{}/2^{}", r.num, r.exp)
        }
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p` or `p/2^q`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("`{s}` is not of the form p/2^q"));
        let t = s.trim();
        let (p, q) = match t.split_once('/') {
            None => (t, 0u32),
            Some((p, rest)) => {
                let q = rest.trim().strip_prefix("2^").ok_or_else(bad)?;
                (p, q.trim().parse::<u32>().map_err(|_| bad())?)
            }
        };
        let num = p.trim().parse::<i64>().map_err(|_| bad())?;
        if q > 60 || num.unsigned_abs() > 1 << 53 {
            return Err(Error::Parse(format!("`{s}` is out of the supported range")));
        }
        Ok(Dyadic::new(num, q))
    }
}

/// An open box `(lo, hi)` with dyadic corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicBox {
    pub lo: Vec<Dyadic>,
    pub hi: Vec<Dyadic>,
}

impl DyadicBox {
    pub fn new(lo: Vec<Dyadic>, hi: Vec<Dyadic>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidArgument(format!(
                "box {lo:?} .. {hi:?} is empty"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_ints(lo: &[i64], hi: &[i64]) -> Result<Self> {
        Self::new(
            lo.iter().map(|&v| Dyadic::integer(v)).collect(),
            hi.iter().map(|&v| Dyadic::integer(v)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn to_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.lo.iter().map(|v| v.to_f64()).collect(),
            self.hi.iter().map(|v| v.to_f64()).collect(),
        )
    }
}

/// Index maps selecting, for an active basis index at a given level, the
/// interior cubes used by the quasi-interpolant (`nu_map`) and the hull
/// construction (`n_map`).
pub trait MTypeMaps: Send + Sync {
    fn nu_map(&self, level: &MultiIndex, nu: &MultiIndex) -> MultiIndex;

    fn n_map(&self, level: &MultiIndex, nu: &MultiIndex) -> MultiIndex {
        self.nu_map(level, nu)
    }

    fn name(&self) -> &str;
}

/// Clamps each coordinate into the cube-index range of the bounding box. On
/// domains whose bounding box starts at the origin this is `nu_+` for every
/// active index.
#[derive(Clone, Debug)]
pub struct ClampMaps {
    lo: Vec<Dyadic>,
    hi: Vec<Dyadic>,
}

impl ClampMaps {
    pub fn new(lo: Vec<Dyadic>, hi: Vec<Dyadic>) -> Self {
        Self { lo, hi }
    }
}

impl MTypeMaps for ClampMaps {
    fn nu_map(&self, level: &MultiIndex, nu: &MultiIndex) -> MultiIndex {
        let mut out = *nu;
        for j in 0..nu.dim() {
            let a = self.lo[j].ceil_at(level[j]);
            let b = self.hi[j].ceil_at(level[j]) - 1;
            out = out.with(j, nu[j].clamp(a, b.max(a)));
        }
        out
    }

    fn name(&self) -> &str {
        "clamp"
    }
}

/// `nu -> nu`; selects exterior cubes near the boundary. Only useful as a
/// negative control for the validator.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMaps;

impl MTypeMaps for IdentityMaps {
    fn nu_map(&self, _level: &MultiIndex, nu: &MultiIndex) -> MultiIndex {
        *nu
    }

    fn name(&self) -> &str {
        "identity"
    }
}

/// Names accepted by [`Domain::builtin`].
pub const BUILTIN_DOMAINS: [&str; 5] = ["cube1d", "cube2d", "cube3d", "lshape2d", "lshape3d"];

/// A bounded open set `D = union of boxes`, with its base level and index maps.
#[derive(Clone)]
pub struct Domain {
    name: String,
    dim: usize,
    boxes: Vec<DyadicBox>,
    boxes_f64: Vec<(Vec<f64>, Vec<f64>)>,
    bbox: (Vec<Dyadic>, Vec<Dyadic>),
    kappa0: MultiIndex,
    maps: Arc<dyn MTypeMaps>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("name", &self.name)
            .field("boxes", &self.boxes)
            .field("kappa0", &self.kappa0)
            .field("maps", &self.maps.name())
            .finish()
    }
}

impl Domain {
    /// Builds a domain with clamping maps and base level equal, per axis, to
    /// the largest exponent among the reduced box corners.
    pub fn from_boxes(name: impl Into<String>, boxes: Vec<DyadicBox>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::InvalidArgument("a domain needs at least one box".into()))?;
        let d = first.dim();
        if d == 0 || d > crate::lattice::MAX_DIM {
            return Err(Error::InvalidDimension {
                found: d,
                max: crate::lattice::MAX_DIM,
            });
        }
        if let Some(b) = boxes.iter().find(|b| b.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: b.dim(),
            });
        }
        let mut k0 = vec![0i64; d];
        for b in &boxes {
            for j in 0..d {
                k0[j] = k0[j]
                    .max(b.lo[j].reduced().exp as i64)
                    .max(b.hi[j].reduced().exp as i64);
            }
        }
        let lo: Vec<Dyadic> = (0..d).map(|j| boxes.iter().map(|b| b.lo[j]).min().unwrap()).collect();
        let hi: Vec<Dyadic> = (0..d).map(|j| boxes.iter().map(|b| b.hi[j]).max().unwrap()).collect();
        let maps = Arc::new(ClampMaps::new(lo.clone(), hi.clone()));
        Ok(Self {
            name: name.into(),
            dim: d,
            boxes_f64: boxes.iter().map(|b| b.to_f64()).collect(),
            boxes,
            bbox: (lo, hi),
            kappa0: MultiIndex::new(&k0)?,
            maps,
        })
    }

    /// One of [`BUILTIN_DOMAINS`]: the unit cube `(0,1)^d` or the L-shape
    /// `(0,2)^d` minus `[1,2]^d`.
    pub fn builtin(name: &str) -> Result<Self> {
        let cube = |d: usize| DyadicBox::from_ints(&vec![0; d], &vec![1; d]);
        let lshape = |d: usize| -> Result<Vec<DyadicBox>> {
            (0..d)
                .map(|j| {
                    let mut hi = vec![2; d];
                    hi[j] = 1;
                    DyadicBox::from_ints(&vec![0; d], &hi)
                })
                .collect()
        };
        let boxes = match name {
            "cube1d" => vec![cube(1)?],
            "cube2d" => vec![cube(2)?],
            "cube3d" => vec![cube(3)?],
            "lshape2d" => lshape(2)?,
            "lshape3d" => lshape(3)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown domain `{name}`; available: {}",
                    BUILTIN_DOMAINS.join(", ")
                )))
            }
        };
        Self::from_boxes(name, boxes)
    }

    /// Parses one box per line, `lo_1 .. lo_d hi_1 .. hi_d`, each entry `p/2^q`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse_boxes(text: &str) -> Result<Vec<DyadicBox>> {
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(Dyadic::from_str)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if vals.is_empty() || vals.len() % 2 != 0 {
                return Err(Error::Parse(format!(
                    "line {}: expected 2d entries, got {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            let d = vals.len() / 2;
            out.push(
                DyadicBox::new(vals[..d].to_vec(), vals[d..].to_vec())
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
            );
        }
        if out.is_empty() {
            return Err(Error::Parse("no boxes found".into()));
        }
        Ok(out)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let name = path.as_ref().display().to_string();
        Self::from_boxes(name, Self::parse_boxes(&text)?)
    }

    /// A built-in name or, failing that, a path to a box file.
    pub fn resolve(name: &str) -> Result<Self> {
        if BUILTIN_DOMAINS.contains(&name) {
            return Self::builtin(name);
        }
        if Path::new(name).is_file() {
            return Self::from_file(name);
        }
        Self::builtin(name)
    }

    /// Replaces the index maps and base level.
    pub fn with_maps(mut self, maps: Arc<dyn MTypeMaps>, kappa0: MultiIndex) -> Result<Self> {
        if kappa0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: kappa0.dim(),
            });
        }
        kappa0.require_nonnegative("base level")?;
        self.maps = maps;
        self.kappa0 = kappa0;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[DyadicBox] {
        &self.boxes
    }

    pub fn kappa0(&self) -> MultiIndex {
        self.kappa0
    }

    pub fn maps(&self) -> &dyn MTypeMaps {
        self.maps.as_ref()
    }

    /// Closed bounding box as floats.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.bbox.0.iter().map(|v| v.to_f64()).collect(),
            self.bbox.1.iter().map(|v| v.to_f64()).collect(),
        )
    }

    pub fn bounding_box_dyadic(&self) -> (&[Dyadic], &[Dyadic]) {
        (&self.bbox.0, &self.bbox.1)
    }

    /// Lebesgue measure by inclusion–exclusion over the boxes.
    pub fn measure(&self) -> f64 {
        let n = self.boxes_f64.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut lo = vec![f64::MIN; self.dim];
            let mut hi = vec![f64::MAX; self.dim];
            for i in (0..n).filter(|i| mask >> i & 1 == 1) {
                for j in 0..self.dim {
                    lo[j] = lo[j].max(self.boxes_f64[i].0[j]);
                    hi[j] = hi[j].min(self.boxes_f64[i].1[j]);
                }
            }
            let vol: f64 = (0..self.dim).map(|j| (hi[j] - lo[j]).max(0.0)).product();
            total += if mask.count_ones() % 2 == 1 { vol } else { -vol };
        }
        total
    }

    /// Membership in the open set `D`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes_f64
            .iter()
            .any(|(lo, hi)| (0..self.dim).all(|j| lo[j] < x[j] && x[j] < hi[j]))
    }

    /// Whether `lo..hi` lies in `D`. With `closed` the box includes its
    /// boundary; a degenerate axis (`lo_j == hi_j`) is a single coordinate.
    pub fn box_inside(&self, lo: &[f64], hi: &[f64], closed: bool) -> bool {
        let d = self.dim;
        // per axis: representative points of every piece on which membership
        // in each box is constant
        let mut reps: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let (a, b) = (lo[j], hi[j]);
            if a > b {
                return true;
            }
            if a == b {
                if !closed {
                    return true;
                }
                reps.push(vec![a]);
                continue;
            }
            let mut cuts: Vec<f64> = vec![a, b];
            for (blo, bhi) in &self.boxes_f64 {
                for v in [blo[j], bhi[j]] {
                    if v > a && v < b {
                        cuts.push(v);
                    }
                }
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            cuts.dedup();
            let mut r = Vec::with_capacity(2 * cuts.len());
            for (i, w) in cuts.windows(2).enumerate() {
                if i > 0 || closed {
                    r.push(w[0]);
                }
                r.push(0.5 * (w[0] + w[1]));
            }
            if closed {
                r.push(b);
            }
            reps.push(r);
        }
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        loop {
            for j in 0..d {
                x[j] = reps[j][idx[j]];
            }
            if !self.contains(&x) {
                return false;
            }
            let mut j = d;
            loop {
                if j == 0 {
                    return true;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < reps[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    /// Whether the open dyadic cube `Q_{level,nu}` lies in `D`.
    pub fn cube_inside(&self, level: &MultiIndex, nu: &MultiIndex) -> bool {
        let c = Cell::dyadic(level, nu);
        self.box_inside(c.x0(), &c.hi(), false)
    }

    /// Membership in `D_h^l = {x in D : x + t l h in D for all t in [0,1]^d}`.
    pub fn shrunken_contains(&self, x: &[f64], l: &MultiIndex, h: &[f64]) -> bool {
        let d = self.dim;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for j in 0..d {
            let end = x[j] + l[j] as f64 * h[j];
            lo[j] = x[j].min(end);
            hi[j] = x[j].max(end);
        }
        self.box_inside(&lo, &hi, true)
    }

    /// Per-box inclusive ranges of `nu` whose support meets that box.
    fn active_ranges(&self, level: &MultiIndex, m: &MultiIndex) -> Vec<IndexBox> {
        self.boxes
            .iter()
            .map(|b| {
                let lo: Vec<i64> = (0..self.dim)
                    .map(|j| b.lo[j].floor_at(level[j]) - m[j])
                    .collect();
                let hi: Vec<i64> = (0..self.dim)
                    .map(|j| b.hi[j].ceil_at(level[j]) - 1)
                    .collect();
                IndexBox::new(
                    MultiIndex::new(&lo).expect("valid dimension"),
                    MultiIndex::new(&hi).expect("valid dimension"),
                )
                .expect("same dimension")
            })
            .collect()
    }

    /// Smallest index box containing every active index.
    pub fn active_bounds(&self, level: &MultiIndex, m: &MultiIndex) -> IndexBox {
        let ranges = self.active_ranges(level, m);
        let mut lo = ranges[0].lo;
        let mut hi = ranges[0].hi;
        for r in &ranges[1..] {
            for j in 0..self.dim {
                lo = lo.with(j, lo[j].min(r.lo[j]));
                hi = hi.with(j, hi[j].max(r.hi[j]));
            }
        }
        IndexBox { lo, hi }
    }

    /// Whether the support of `g_{level,nu}` meets `D`.
    pub fn is_active(&self, level: &MultiIndex, m: &MultiIndex, nu: &MultiIndex) -> bool {
        self.active_ranges(level, m).iter().any(|r| r.contains(nu))
    }

    /// All `nu` whose basis support meets `D`, sorted.
    pub fn active_indices(&self, level: &MultiIndex, m: &MultiIndex) -> Vec<MultiIndex> {
        let ranges = self.active_ranges(level, m);
        let bounds = self.active_bounds(level, m);
        bounds
            .iter()
            .filter(|nu| ranges.iter().any(|r| r.contains(nu)))
            .collect()
    }

    /// `(nu_map(nu), n_map(nu))` at `level`, for active `nu`.
    pub fn mtype_maps(
        &self,
        level: &MultiIndex,
        m: &MultiIndex,
        nu: &MultiIndex,
    ) -> Result<(MultiIndex, MultiIndex)> {
        if !self.is_active(level, m, nu) {
            return Err(Error::InactiveIndex {
                index: nu.to_string(),
                level: level.to_string(),
                domain: self.name.clone(),
            });
        }
        Ok((self.maps.nu_map(level, nu), self.maps.n_map(level, nu)))
    }

    /// The cell spanning `Q_{L, n_map(nu)}` and
    /// `Q_{L-eps, nu_map(n_eps(nu, mu))}` where `L = kappa0 + kappa`.
    pub fn hull_cell(
        &self,
        kappa: &MultiIndex,
        nu: &MultiIndex,
        eps: &SubsetMask,
        coarse: &MultiIndex,
    ) -> HullCell {
        let level = self.kappa0.checked_add(kappa).expect("level overflow");
        let coarse_level = level.checked_sub(&eps.chi()).expect("level overflow");
        let fine = self.maps.n_map(&level, nu);
        let sel = self.maps.nu_map(&coarse_level, coarse);
        let d = self.dim;
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for j in 0..d {
            let (lf, lc) = (level[j] as u32, coarse_level[j] as u32);
            let a = Dyadic::new(fine[j], lf).min(Dyadic::new(sel[j], lc));
            let b = Dyadic::new(fine[j] + 1, lf).max(Dyadic::new(sel[j] + 1, lc));
            lo.push(a);
            hi.push(b);
        }
        HullCell { lo, hi }
    }
}

/// The cell `x + delta * I^d` spanning two designated cubes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HullCell {
    pub lo: Vec<Dyadic>,
    pub hi: Vec<Dyadic>,
}

impl HullCell {
    pub fn x(&self) -> Vec<f64> {
        self.lo.iter().map(|v| v.to_f64()).collect()
    }

    pub fn delta(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b.to_f64() - a.to_f64())
            .collect()
    }

    pub fn cell(&self) -> Cell {
        Cell::new(&self.x(), &self.delta()).expect("hull cells are nondegenerate")
    }

    /// Whether the open cube `Q_{level,nu}` lies inside this cell.
    pub fn contains_cube(&self, level: &MultiIndex, nu: &MultiIndex) -> bool {
        (0..self.lo.len()).all(|j| {
            let e = level[j] as u32;
            self.lo[j] <= Dyadic::new(nu[j], e) && Dyadic::new(nu[j] + 1, e) <= self.hi[j]
        })
    }
}

/// Outcome of [`validate_mtype`].
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub pass: bool,
    /// Number of `(kappa, nu)` pairs visited.
    pub indices_checked: usize,
    /// Number of `(kappa, nu, eps, mu)` tuples visited.
    pub tuples_checked: usize,
    pub failures: usize,
    /// Smallest radius, in level units, of the box around `2^{-L} nu` holding
    /// both selected cubes.
    pub gamma0: Vec<f64>,
    /// Largest hull edge in level units.
    pub gamma1: Vec<f64>,
    /// Largest distance of a hull corner from `2^{-L} nu`, in level units.
    pub c15: Vec<f64>,
    /// Description of the first violated condition.
    pub witness: Option<String>,
}

/// Exhaustively checks the interior-cube, hull and compatibility conditions
/// for all levels `kappa0 + kappa` with `kappa <= K e`.
pub fn validate_mtype(domain: &Domain, m: &MultiIndex, max_level: i64) -> ValidationReport {
    let d = domain.dim();
    let mut rep = ValidationReport {
        pass: true,
        indices_checked: 0,
        tuples_checked: 0,
        failures: 0,
        gamma0: vec![0.0; d],
        gamma1: vec![0.0; d],
        c15: vec![0.0; d],
        witness: None,
    };
    let fail = |rep: &mut ValidationReport, what: String| {
        rep.pass = false;
        rep.failures += 1;
        if rep.witness.is_none() {
            rep.witness = Some(what);
        }
    };
    let k0 = domain.kappa0();
    let maps = domain.maps();
    let kappas = IndexBox::new(MultiIndex::zeros(d), MultiIndex::splat(d, max_level.max(0)))
        .expect("same dimension");
    for kappa in kappas.iter() {
        let level = k0.checked_add(&kappa).expect("level overflow");
        let active = domain.active_indices(&level, m);
        if active.is_empty() {
            fail(&mut rep, format!("no active indices at level {level}"));
            continue;
        }
        for nu in &active {
            rep.indices_checked += 1;
            let sel = maps.nu_map(&level, nu);
            let n = maps.n_map(&level, nu);
            for (label, c) in [("nu_map", sel), ("n_map", n)] {
                if !domain.cube_inside(&level, &c) {
                    fail(
                        &mut rep,
                        format!("level {level}, nu {nu}: {label} cube {c} is not inside the domain"),
                    );
                }
                for j in 0..d {
                    let r = (c[j] - nu[j]).abs().max((c[j] + 1 - nu[j]).abs()) as f64;
                    rep.gamma0[j] = rep.gamma0[j].max(r);
                }
            }
            for eps in sigma(&kappa).subsets() {
                let coarse_level = level.checked_sub(&eps.chi()).expect("level overflow");
                for dec in even_shift_decompositions(nu, &eps, m) {
                    rep.tuples_checked += 1;
                    if !domain.is_active(&coarse_level, m, &dec.coarse) {
                        fail(
                            &mut rep,
                            format!(
                                "level {level}, nu {nu}, eps {eps}: coarse index {} is not active at level {coarse_level}",
                                dec.coarse
                            ),
                        );
                        continue;
                    }
                    let coarse_sel = maps.nu_map(&coarse_level, &dec.coarse);
                    for j in (0..d).filter(|&j| !eps.contains(j)) {
                        if coarse_sel[j] != sel[j] {
                            fail(
                                &mut rep,
                                format!(
                                    "level {level}, nu {nu}, eps {eps}, mu {}: coarse selection {coarse_sel} differs from {sel} on axis {}",
                                    dec.mu.values,
                                    j + 1
                                ),
                            );
                        }
                    }
                    let hull = domain.hull_cell(&kappa, nu, &eps, &dec.coarse);
                    let x = hull.x();
                    let delta = hull.delta();
                    let hi: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
                    if !domain.box_inside(&x, &hi, false) {
                        fail(
                            &mut rep,
                            format!(
                                "level {level}, nu {nu}, eps {eps}, mu {}: hull {:?}..{:?} leaves the domain",
                                dec.mu.values, hull.lo, hull.hi
                            ),
                        );
                    }
                    if !hull.contains_cube(&level, &n) || !hull.contains_cube(&coarse_level, &coarse_sel) {
                        fail(
                            &mut rep,
                            format!("level {level}, nu {nu}, eps {eps}: hull misses a generating cube"),
                        );
                    }
                    for j in 0..d {
                        let scale = (2.0f64).powi(level[j] as i32);
                        let edge = delta[j] * scale;
                        if edge < 1.0 {
                            fail(&mut rep, format!("level {level}, nu {nu}: hull edge below cube size"));
                        }
                        rep.gamma1[j] = rep.gamma1[j].max(edge);
                        let a = (x[j] * scale - nu[j] as f64).abs();
                        let b = (hi[j] * scale - nu[j] as f64).abs();
                        rep.c15[j] = rep.c15[j].max(a.max(b));
                    }
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    #[test]
    fn dyadic_arithmetic() {
        let a: Dyadic = "3/2^2".parse().unwrap();
        assert_eq!(a.to_f64(), 0.75);
        assert_eq!(a, Dyadic::new(6, 3));
        assert!(Dyadic::new(1, 1) < a);
        assert_eq!(a.floor_at(1), 1);
        assert_eq!(a.ceil_at(1), 2);
        assert_eq!(Dyadic::new(-3, 2).floor_at(1), -2);
        assert_eq!(Dyadic::new(-3, 2).ceil_at(1), -1);
        assert_eq!(Dyadic::new(6, 3).reduced().exp, 2);
        assert_eq!("5".parse::<Dyadic>().unwrap(), Dyadic::integer(5));
        assert!("1/3".parse::<Dyadic>().is_err());
        assert_eq!(Dyadic::new(-4, 3).to_string(), "-1/2^1");
    }

    #[test]
    fn membership() {
        let sq = Domain::builtin("cube2d").unwrap();
        assert!(sq.contains(&[0.5, 0.5]));
        assert!(!sq.contains(&[0.0, 0.5]));
        let l = Domain::builtin("lshape2d").unwrap();
        assert!(!l.contains(&[1.5, 1.5]));
        assert!(l.contains(&[0.5, 1.5]));
        assert!(l.contains(&[0.5, 1.0]));
        assert!(!l.contains(&[1.0, 1.0]));
        assert!((l.measure() - 3.0).abs() < 1e-15);
        let l3 = Domain::builtin("lshape3d").unwrap();
        assert!((l3.measure() - 7.0).abs() < 1e-15);
        assert!(Domain::builtin("disk").is_err());
    }

    #[test]
    fn active_index_examples() {
        let sq = Domain::builtin("cube2d").unwrap();
        let a = sq.active_indices(&mi(&[0, 0]), &mi(&[1, 1]));
        assert_eq!(a, vec![mi(&[-1, -1]), mi(&[-1, 0]), mi(&[0, -1]), mi(&[0, 0])]);
        let line = Domain::builtin("cube1d").unwrap();
        let a = line.active_indices(&mi(&[1]), &mi(&[1]));
        assert_eq!(a, vec![mi(&[-1]), mi(&[0]), mi(&[1])]);
        for k in 0..5 {
            for mm in 1..4 {
                let a = sq.active_indices(&mi(&[k, k + 1]), &mi(&[mm, mm]));
                assert_eq!(a.len() as i64, ((1 << k) + mm) * ((1 << (k + 1)) + mm));
            }
        }
    }

    #[test]
    fn active_indices_monotone_in_domain() {
        let sq = Domain::builtin("cube2d").unwrap();
        let l = Domain::builtin("lshape2d").unwrap();
        for k in 0..4 {
            let level = mi(&[k, k]);
            let m = mi(&[2, 1]);
            let big: std::collections::HashSet<_> = l.active_indices(&level, &m).into_iter().collect();
            for nu in sq.active_indices(&level, &m) {
                assert!(big.contains(&nu));
            }
        }
    }

    #[test]
    fn maps_are_positive_part_on_builtins() {
        let sq = Domain::builtin("cube2d").unwrap();
        let (a, b) = sq.mtype_maps(&mi(&[0, 0]), &mi(&[1, 1]), &mi(&[-1, 0])).unwrap();
        assert_eq!((a, b), (mi(&[0, 0]), mi(&[0, 0])));
        let (a, _) = sq.mtype_maps(&mi(&[2, 2]), &mi(&[1, 1]), &mi(&[3, 2])).unwrap();
        assert_eq!(a, mi(&[3, 2]));
        assert!(sq.mtype_maps(&mi(&[0, 0]), &mi(&[1, 1]), &mi(&[3, 0])).is_err());
        for name in BUILTIN_DOMAINS {
            let dom = Domain::builtin(name).unwrap();
            let d = dom.dim();
            for k in 0..4 {
                let level = MultiIndex::splat(d, k);
                let m = MultiIndex::splat(d, 2);
                for nu in dom.active_indices(&level, &m) {
                    assert_eq!(dom.maps().nu_map(&level, &nu), nu.positive_part());
                }
            }
        }
    }

    #[test]
    fn hull_cell_cases() {
        let sq = Domain::builtin("cube2d").unwrap();
        let kappa = mi(&[2, 2]);
        let nu = mi(&[1, 2]);
        let h = sq.hull_cell(&kappa, &nu, &SubsetMask::empty(2), &nu);
        assert_eq!(h.x(), vec![0.25, 0.5]);
        assert_eq!(h.delta(), vec![0.25, 0.25]);
        // eps = {1}, mu_1 = 1 gives the coarse index (0, 2) at level (1, 2)
        let eps = SubsetMask::from_indices(2, &[0]).unwrap();
        let h = sq.hull_cell(&kappa, &nu, &eps, &mi(&[0, 2]));
        assert_eq!(h.x(), vec![0.0, 0.5]);
        assert_eq!(h.delta(), vec![0.5, 0.25]);
        // a cube and its parent
        let line = Domain::builtin("cube1d").unwrap();
        let eps = SubsetMask::full(1);
        let h = line.hull_cell(&mi(&[1]), &mi(&[0]), &eps, &mi(&[0]));
        assert_eq!((h.x(), h.delta()), (vec![0.0], vec![1.0]));
    }

    #[test]
    fn shrunken_examples() {
        let line = Domain::builtin("cube1d").unwrap();
        let l = mi(&[1]);
        assert!(line.shrunken_contains(&[0.5], &l, &[0.3]));
        assert!(!line.shrunken_contains(&[0.8], &l, &[0.3]));
        assert!(line.shrunken_contains(&[0.69], &l, &[0.3]));
        assert!(!line.shrunken_contains(&[0.7], &l, &[0.3]));
        assert!(line.shrunken_contains(&[0.99], &l, &[0.0]));
        assert!(line.shrunken_contains(&[0.99], &mi(&[0]), &[0.5]));
        let lsh = Domain::builtin("lshape2d").unwrap();
        // a horizontal sweep through the notch leaves the domain
        assert!(!lsh.shrunken_contains(&[0.5, 1.5], &mi(&[1, 0]), &[1.0, 0.0]));
        assert!(lsh.shrunken_contains(&[0.5, 0.5], &mi(&[1, 0]), &[1.0, 0.0]));
        assert!(!lsh.shrunken_contains(&[0.5, 0.5], &mi(&[1, 1]), &[1.0, 1.0]));
    }

    #[test]
    fn builtins_validate() {
        for (name, m) in [("cube2d", 2), ("lshape2d", 1), ("lshape2d", 2), ("cube1d", 3)] {
            let dom = Domain::builtin(name).unwrap();
            let d = dom.dim();
            let rep = validate_mtype(&dom, &MultiIndex::splat(d, m), 3);
            assert!(rep.pass, "{name}: {:?}", rep.witness);
            assert!(rep.gamma1.iter().all(|&g| g >= 1.0));
        }
    }

    #[test]
    fn identity_maps_fail_with_witness() {
        let dom = Domain::builtin("cube2d")
            .unwrap()
            .with_maps(Arc::new(IdentityMaps), mi(&[0, 0]))
            .unwrap();
        let rep = validate_mtype(&dom, &mi(&[1, 1]), 2);
        assert!(!rep.pass);
        assert!(rep.witness.unwrap().contains("not inside"));
    }

    #[test]
    fn parses_box_files() {
        let text = "# two overlapping boxes\n0 0 1 1/2^1\n1/2^2 0 3/2^2 1\n";
        let boxes = Domain::parse_boxes(text).unwrap();
        assert_eq!(boxes.len(), 2);
        let dom = Domain::from_boxes("t", boxes).unwrap();
        assert_eq!(dom.kappa0(), mi(&[2, 1]));
        assert!(dom.contains(&[0.5, 0.75]));
        assert!(!dom.contains(&[0.9, 0.75]));
        assert!(Domain::parse_boxes("0 0 1").is_err());
        assert!(Domain::parse_boxes("1 0 0 1").is_err());
    }

    proptest! {
        #[test]
        fn box_inside_matches_sampling(x in 0.0f64..2.0, y in 0.0f64..2.0, w in 0.0f64..1.0, h in 0.0f64..1.0) {
            let dom = Domain::builtin("lshape2d").unwrap();
            let lo = [x, y];
            let hi = [x + w, y + h];
            let inside = dom.box_inside(&lo, &hi, true);
            if inside {
                for i in 0..=8 {
                    for j in 0..=8 {
                        let p = [x + w * i as f64 / 8.0, y + h * j as f64 / 8.0];
                        prop_assert!(dom.contains(&p));
                    }
                }
            }
        }
    }
}
