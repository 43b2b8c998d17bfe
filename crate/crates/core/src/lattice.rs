//! Multi-indices, coordinate subsets and the index combinatorics used by the
//! refinement and telescoping formulas.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// A lattice vector in `Z^d` with `1 <= d <= MAX_DIM`.
///
/// Unused slots are kept at zero so that the derived comparisons only see the
/// first `dim` entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dim: u8,
    v: [i64; MAX_DIM],
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidDimension {
            found: d,
            max: MAX_DIM,
        });
    }
    Ok(())
}

impl MultiIndex {
    pub fn new(entries: &[i64]) -> Result<Self> {
        check_dim(entries.len())?;
        let mut v = [0; MAX_DIM];
        v[..entries.len()].copy_from_slice(entries);
        Ok(Self {
            dim: entries.len() as u8,
            v,
        })
    }

    pub fn zeros(d: usize) -> Self {
        Self::splat(d, 0)
    }

    /// All entries equal to `value`. Panics if `d` is out of range.
    pub fn splat(d: usize, value: i64) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "dimension {d} out of range");
        let mut v = [0; MAX_DIM];
        v[..d].iter_mut().for_each(|e| *e = value);
        Self { dim: d as u8, v }
    }

    /// The coordinate vector `e_j` (0-based `j`).
    pub fn unit(d: usize, j: usize) -> Self {
        let mut out = Self::zeros(d);
        out.v[j] = 1;
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[i64] {
        &self.v[..self.dim as usize]
    }

    #[inline]
    pub fn get(&self, j: usize) -> i64 {
        self.as_slice()[j]
    }

    /// Returns a copy with entry `j` replaced.
    pub fn with(mut self, j: usize, value: i64) -> Self {
        assert!(j < self.dim());
        self.v[j] = value;
        self
    }

    pub fn is_nonnegative(&self) -> bool {
        self.as_slice().iter().all(|&x| x >= 0)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self
                .as_slice()
                .iter()
                .zip(other.as_slice())
                .all(|(a, b)| a <= b)
    }

    pub fn sum(&self) -> i64 {
        self.as_slice().iter().sum()
    }

    pub fn max_entry(&self) -> i64 {
        *self.as_slice().iter().max().unwrap()
    }

    pub fn min_entry(&self) -> i64 {
        *self.as_slice().iter().min().unwrap()
    }

    /// Componentwise `max(x, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|x| x.max(0))
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        let mut out = *self;
        for e in out.v[..self.dim()].iter_mut() {
            *e = f(*e);
        }
        out
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = *self;
        for j in 0..self.dim() {
            out.v[j] = self.v[j].checked_add(other.v[j]).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = *self;
        for j in 0..self.dim() {
            out.v[j] = self.v[j].checked_sub(other.v[j]).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    /// `self - other`, additionally requiring the result to be nonnegative.
    pub fn checked_sub_nonneg(&self, other: &Self) -> Result<Self> {
        let out = self.checked_sub(other)?;
        if !out.is_nonnegative() {
            return Err(Error::Negative {
                what: "difference",
                value: out.to_string(),
            });
        }
        Ok(out)
    }

    /// Errors unless every entry is nonnegative.
    pub fn require_nonnegative(&self, what: &'static str) -> Result<()> {
        if self.is_nonnegative() {
            Ok(())
        } else {
            Err(Error::Negative {
                what,
                value: self.to_string(),
            })
        }
    }

    /// Errors unless `self <= upper` componentwise.
    pub fn require_le(&self, upper: &Self, what: &'static str) -> Result<()> {
        self.same_dim(upper)?;
        if self.le(upper) {
            Ok(())
        } else {
            Err(Error::NotDominated {
                what,
                lower: self.to_string(),
                upper: upper.to_string(),
            })
        }
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = i64;
    fn index(&self, j: usize) -> &i64 {
        &self.as_slice()[j]
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.as_slice().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Parses `2,2`, `(2,2)` or a single integer.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let entries = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::Parse(format!("`{t}` in `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&entries)
    }
}

/// A subset `J` of `{1, ..., d}`, also used for the sign vectors `eps` in `{0,1}^d`.
///
/// Coordinates are 0-based in the API.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    dim: u8,
    bits: u8,
}

impl SubsetMask {
    pub fn new(d: usize, bits: u8) -> Result<Self> {
        check_dim(d)?;
        if d < 8 && (bits >> d) != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {bits:#b} has bits beyond dimension {d}"
            )));
        }
        Ok(Self { dim: d as u8, bits })
    }

    pub fn empty(d: usize) -> Self {
        Self::new(d, 0).expect("dimension out of range")
    }

    pub fn full(d: usize) -> Self {
        let bits = if d == 8 { u8::MAX } else { (1u8 << d) - 1 };
        Self::new(d, bits).expect("dimension out of range")
    }

    pub fn from_indices(d: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &j in indices {
            if j >= d {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {j} out of range for dimension {d}"
                )));
            }
            bits |= 1 << j;
        }
        Self::new(d, bits)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn bits(&self) -> u8 {
        self.bits
    }

    #[inline]
    pub fn contains(&self, j: usize) -> bool {
        j < self.dim() && (self.bits >> j) & 1 == 1
    }

    /// Cardinality `|J|`.
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// `(-1)^{|J|}`.
    pub fn sign(&self) -> f64 {
        if self.len() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dim == other.dim && self.bits & !other.bits == 0
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits & other.bits == 0
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            bits: self.bits | other.bits,
        }
    }

    /// Member coordinates in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(move |&j| self.contains(j))
    }

    /// The indicator vector `chi_J`.
    pub fn chi(&self) -> MultiIndex {
        let mut out = MultiIndex::zeros(self.dim());
        for j in self.iter() {
            out.v[j] = 1;
        }
        out
    }

    /// Every subset of `{0, ..., d-1}`, i.e. all `2^d` sign vectors.
    pub fn all(d: usize) -> impl Iterator<Item = SubsetMask> {
        Self::full(d).subsets()
    }

    /// Every subset of `self`, starting with the empty set.
    pub fn subsets(&self) -> impl Iterator<Item = SubsetMask> {
        let (dim, full) = (self.dim, self.bits);
        let mut next = Some(0u8);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(SubsetMask { dim, bits: cur })
        })
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

/// Support `s(x)`: the coordinates where `x` is nonzero.
pub fn sigma(x: &MultiIndex) -> SubsetMask {
    let mut bits = 0u8;
    for (j, &v) in x.as_slice().iter().enumerate() {
        if v != 0 {
            bits |= 1 << j;
        }
    }
    SubsetMask {
        dim: x.dim,
        bits,
    }
}

/// Inclusive box `{nu : lo <= nu <= hi}` of lattice points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: MultiIndex,
    pub hi: MultiIndex,
}

impl IndexBox {
    pub fn new(lo: MultiIndex, hi: MultiIndex) -> Result<Self> {
        lo.same_dim(&hi)?;
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim()).any(|j| self.hi[j] < self.lo[j])
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        (0..self.dim())
            .map(|j| (self.hi[j] - self.lo[j] + 1) as usize)
            .product()
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.lo.le(nu) && nu.le(&self.hi)
    }

    /// Row-major position of `nu` (last coordinate fastest).
    pub fn offset(&self, nu: &MultiIndex) -> Option<usize> {
        if !self.contains(nu) {
            return None;
        }
        let mut off = 0usize;
        for j in 0..self.dim() {
            let extent = (self.hi[j] - self.lo[j] + 1) as usize;
            off = off * extent + (nu[j] - self.lo[j]) as usize;
        }
        Some(off)
    }

    /// Lattice points in row-major order.
    pub fn iter(&self) -> IndexBoxIter {
        IndexBoxIter {
            b: *self,
            next: if self.is_empty() { None } else { Some(self.lo) },
        }
    }
}

pub struct IndexBoxIter {
    b: IndexBox,
    next: Option<MultiIndex>,
}

impl Iterator for IndexBoxIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.next?;
        let mut n = cur;
        let mut j = self.b.dim();
        loop {
            if j == 0 {
                self.next = None;
                break;
            }
            j -= 1;
            if n.v[j] < self.b.hi.v[j] {
                n.v[j] += 1;
                self.next = Some(n);
                break;
            }
            n.v[j] = self.b.lo.v[j];
        }
        Some(cur)
    }
}

/// The binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// `C_l^k = prod_j C(l_j, k_j)` for `0 <= k <= l`.
pub fn tensor_binomial(l: &MultiIndex, k: &MultiIndex) -> Result<u64> {
    k.require_nonnegative("k")?;
    k.require_le(l, "binomial lower index")?;
    let mut out: u64 = 1;
    for j in 0..l.dim() {
        out = out
            .checked_mul(binomial(l[j] as u64, k[j] as u64))
            .ok_or(Error::Overflow)?;
    }
    Ok(out)
}

/// Entries on a coordinate subset, stored full-length with the unused slots
/// zeroed. The mask decides which entries are meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PartialIndex {
    pub mask: SubsetMask,
    pub values: MultiIndex,
}

/// One admissible shift `mu` on `s(eps)` together with the coarse index it
/// lands on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftDecomposition {
    pub mu: PartialIndex,
    pub coarse: MultiIndex,
}

/// The coarse index `n_eps(nu, mu)`: halved on `s(eps)`, copied elsewhere.
///
/// Requires `nu_j - mu_j` even on `s(eps)`.
pub fn coarse_index(nu: &MultiIndex, mu: &PartialIndex) -> Result<MultiIndex> {
    let mut out = *nu;
    for j in mu.mask.iter() {
        let diff = nu[j] - mu.values[j];
        if diff.rem_euclid(2) != 0 {
            return Err(Error::InvalidArgument(format!(
                "nu_{} - mu_{} = {diff} is odd",
                j + 1,
                j + 1
            )));
        }
        out.v[j] = diff / 2;
    }
    Ok(out)
}

/// Enumerates every `mu` with `mu_j in [0, m_j + 1]` and `nu_j - mu_j` even for
/// `j in s(eps)`, paired with the coarse index `n_eps(nu, mu)`.
///
/// The order is row-major in `mu` over the coordinates of `eps`.
pub fn even_shift_decompositions(
    nu: &MultiIndex,
    eps: &SubsetMask,
    m: &MultiIndex,
) -> Vec<ShiftDecomposition> {
    let d = nu.dim();
    let coords: Vec<usize> = eps.iter().collect();
    // admissible values per coordinate of eps
    let choices: Vec<Vec<i64>> = coords
        .iter()
        .map(|&j| {
            (0..=m[j] + 1)
                .filter(|mu| (nu[j] - mu).rem_euclid(2) == 0)
                .collect()
        })
        .collect();
    if choices.iter().any(|c| c.is_empty()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut pos = vec![0usize; coords.len()];
    loop {
        let mut mu = MultiIndex::zeros(d);
        let mut coarse = *nu;
        for (c, &j) in coords.iter().enumerate() {
            let v = choices[c][pos[c]];
            mu.v[j] = v;
            coarse.v[j] = (nu[j] - v) / 2;
        }
        out.push(ShiftDecomposition {
            mu: PartialIndex {
                mask: *eps,
                values: mu,
            },
            coarse,
        });
        // odometer over the choice lists
        let mut c = coords.len();
        loop {
            if c == 0 {
                return out;
            }
            c -= 1;
            pos[c] += 1;
            if pos[c] < choices[c].len() {
                break;
            }
            pos[c] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&mi(&[0, 3, 0])).iter().collect::<Vec<_>>(), vec![1]);
        assert!(sigma(&mi(&[0, 0])).is_empty());
        assert_eq!(sigma(&mi(&[1, -2, 5])).len(), 3);
    }

    #[test]
    fn chi_round_trip() {
        for d in 1..=MAX_DIM {
            for mask in SubsetMask::all(d) {
                assert_eq!(sigma(&mask.chi()), mask);
            }
        }
    }

    #[test]
    fn upsilon_has_two_to_the_d_distinct_masks() {
        for d in 1..=MAX_DIM {
            let all: std::collections::HashSet<_> = SubsetMask::all(d).collect();
            assert_eq!(all.len(), 1 << d);
            let alternating: f64 = SubsetMask::all(d).map(|e| e.sign()).sum();
            assert_eq!(alternating, 0.0);
        }
    }

    #[test]
    fn subsets_of_mask() {
        let m = SubsetMask::from_indices(4, &[0, 2]).unwrap();
        let subs: Vec<_> = m.subsets().map(|s| s.bits()).collect();
        assert_eq!(subs, vec![0b0000, 0b0001, 0b0100, 0b0101]);
        let empty: Vec<_> = SubsetMask::empty(3).subsets().collect();
        assert_eq!(empty.len(), 1);
    }

    #[test]
    fn tensor_binomial_examples() {
        assert_eq!(tensor_binomial(&mi(&[2, 2]), &mi(&[1, 1])).unwrap(), 4);
        assert_eq!(tensor_binomial(&mi(&[3]), &mi(&[0])).unwrap(), 1);
        assert_eq!(tensor_binomial(&mi(&[2, 1]), &mi(&[2, 1])).unwrap(), 1);
        assert!(tensor_binomial(&mi(&[2, 1]), &mi(&[3, 0])).is_err());
        assert!(tensor_binomial(&mi(&[2, 1]), &mi(&[-1, 0])).is_err());
    }

    #[test]
    fn index_box_counts() {
        let b = IndexBox::new(mi(&[-1, 0]), mi(&[1, 3])).unwrap();
        assert_eq!(b.len(), 12);
        assert_eq!(b.iter().count(), 12);
        let pts: Vec<_> = b.iter().collect();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(b.offset(p), Some(i));
        }
        let empty = IndexBox::new(mi(&[2]), mi(&[1])).unwrap();
        assert_eq!(empty.len(), 0);
        assert_eq!(empty.iter().count(), 0);
    }

    #[test]
    fn decompositions_examples() {
        let one = SubsetMask::full(1);
        let got = even_shift_decompositions(&mi(&[4]), &one, &mi(&[1]));
        let pairs: Vec<_> = got
            .iter()
            .map(|s| (s.mu.values[0], s.coarse[0]))
            .collect();
        assert_eq!(pairs, vec![(0, 2), (2, 1)]);

        let got = even_shift_decompositions(&mi(&[5]), &one, &mi(&[1]));
        let pairs: Vec<_> = got
            .iter()
            .map(|s| (s.mu.values[0], s.coarse[0]))
            .collect();
        assert_eq!(pairs, vec![(1, 2)]);

        let got = even_shift_decompositions(&mi(&[4, 7]), &SubsetMask::empty(2), &mi(&[1, 1]));
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].coarse, mi(&[4, 7]));
        assert!(got[0].mu.mask.is_empty());
    }

    #[test]
    fn negative_indices_halve_exactly() {
        let got = even_shift_decompositions(&mi(&[-3]), &SubsetMask::full(1), &mi(&[2]));
        let pairs: Vec<_> = got
            .iter()
            .map(|s| (s.mu.values[0], s.coarse[0]))
            .collect();
        assert_eq!(pairs, vec![(1, -2), (3, -3)]);
        for s in &got {
            assert_eq!(coarse_index(&mi(&[-3]), &s.mu).unwrap(), s.coarse);
        }
    }

    #[test]
    fn checked_arithmetic() {
        let a = mi(&[i64::MAX, 0]);
        assert!(matches!(a.checked_add(&mi(&[1, 0])), Err(Error::Overflow)));
        assert!(mi(&[1, 2]).checked_sub_nonneg(&mi(&[2, 0])).is_err());
        assert_eq!(mi(&[3, 2]).checked_sub_nonneg(&mi(&[1, 2])).unwrap(), mi(&[2, 0]));
        assert!(mi(&[1]).checked_add(&mi(&[1, 1])).is_err());
        assert!(MultiIndex::new(&[0; 9]).is_err());
        assert!(MultiIndex::new(&[]).is_err());
    }

    #[test]
    fn parse_and_display() {
        let m: MultiIndex = "2,2".parse().unwrap();
        assert_eq!(m, mi(&[2, 2]));
        let m: MultiIndex = "(-1, 0, 3)".parse().unwrap();
        assert_eq!(m.to_string(), "(-1,0,3)");
        assert!("1,x".parse::<MultiIndex>().is_err());
    }
}
