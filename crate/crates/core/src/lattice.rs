//! Integer lattice algebra for the second cohomology of 4-dimensional reduced spaces.
//!
//! The global orientation convention is `L·L = +1`, `E_i·E_i = -1`, with canonical
//! class `K = -3L + ΣE_i` on `CP²#k`. The only other normal form the walk engine
//! produces is the hyperbolic plane of `S²×S²` (`F1·F2 = 1`, `K = -2F1 - 2F2`).

#![allow(clippy::needless_range_loop)]

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

/// Coefficient box used wherever a bounded search stands in for a closed form.
pub const SEARCH_BOX: i64 = 3;

/// Largest blow-up count for which exceptional enumeration is certified.
pub const CERTIFIED_MAX_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("rank mismatch: lattice has rank {expected}, class has length {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("gram matrix is not square")]
    NotSquare,
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("gram matrix is not unimodular (determinant {0})")]
    NotUnimodular(i128),
    #[error("expected {expected} labels, got {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("duplicate basis label {0:?}")]
    DuplicateLabel(String),
    #[error("lattice has no recorded canonical class")]
    NoCanonicalClass,
    #[error("unsupported move: {0}")]
    UnsupportedMove(String),
    #[error("invalid blow-down of {class}: {reason}")]
    InvalidBlowDown { class: String, reason: String },
    #[error("bounded search exhausted (coefficient box |a| <= {bound}) while looking for {target}")]
    SearchExhausted { bound: i64, target: String },
    #[error("matrix does not preserve the intersection pairing")]
    NotAnIsometry,
    #[error("class is not in the image of the basis change")]
    NotIntegral,
}

/// An integral cohomology class, as coordinates in a lattice basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeClass(Vec<i64>);

impl LatticeClass {
    pub fn new(coeffs: Vec<i64>) -> Self {
        LatticeClass(coeffs)
    }

    pub fn zero(rank: usize) -> Self {
        LatticeClass(vec![0; rank])
    }

    pub fn basis(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        LatticeClass(v)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0)
    }

    pub fn scaled(&self, factor: i64) -> Self {
        LatticeClass(self.0.iter().map(|c| c * factor).collect())
    }

    /// The class with a zero appended (stabilisation under blow-up).
    pub fn extended(&self) -> Self {
        let mut v = self.0.clone();
        v.push(0);
        LatticeClass(v)
    }

    pub fn to_rational(&self) -> RationalClass {
        RationalClass(self.0.iter().map(|c| Rational::from_integer(*c as i128)).collect())
    }

    /// Descending lexicographic order, used for every deterministic tie-break.
    pub fn cmp_descending(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }

    fn checked_add(&self, other: &Self) -> Self {
        LatticeClass(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl std::ops::Add for &LatticeClass {
    type Output = LatticeClass;

    fn add(self, rhs: &LatticeClass) -> LatticeClass {
        assert_eq!(self.rank(), rhs.rank(), "class rank mismatch");
        self.checked_add(rhs)
    }
}

impl std::ops::Sub for &LatticeClass {
    type Output = LatticeClass;

    fn sub(self, rhs: &LatticeClass) -> LatticeClass {
        assert_eq!(self.rank(), rhs.rank(), "class rank mismatch");
        LatticeClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl std::ops::Neg for &LatticeClass {
    type Output = LatticeClass;

    fn neg(self) -> LatticeClass {
        self.scaled(-1)
    }
}

/// A real (rational) class, e.g. a reduced symplectic class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RationalClass(#[serde(with = "crate::rational::serde_string_vec")] Vec<Rational>);

impl RationalClass {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        RationalClass(coeffs)
    }

    pub fn zero(rank: usize) -> Self {
        RationalClass(vec![Rational::zero(); rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn extended(&self) -> Self {
        let mut v = self.0.clone();
        v.push(Rational::zero());
        RationalClass(v)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: Rational, other: &LatticeClass) -> Self {
        assert_eq!(self.rank(), other.rank(), "class rank mismatch");
        RationalClass(
            self.0
                .iter()
                .zip(other.coeffs())
                .map(|(a, b)| a + factor * Rational::from_integer(*b as i128))
                .collect(),
        )
    }

    pub fn add(&self, other: &RationalClass) -> Self {
        assert_eq!(self.rank(), other.rank(), "class rank mismatch");
        RationalClass(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Exact integral class if every coordinate is an integer.
    pub fn to_integral(&self) -> Option<LatticeClass> {
        self.0
            .iter()
            .map(|c| c.is_integer().then(|| *c.numer() as i64))
            .collect::<Option<Vec<_>>>()
            .map(LatticeClass)
    }

    /// If `self = a·direction` for some rational `a`, returns `a`.
    pub fn proportionality(&self, direction: &LatticeClass) -> Option<Rational> {
        let pivot = direction.coeffs().iter().position(|c| *c != 0)?;
        let a = self.0[pivot] / Rational::from_integer(direction.coeffs()[pivot] as i128);
        self.0
            .iter()
            .zip(direction.coeffs())
            .all(|(x, d)| *x == a * Rational::from_integer(*d as i128))
            .then_some(a)
    }
}

/// Which normal form a lattice (with its canonical class) is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeForm {
    /// `CP²#k` in the basis `(L, E1, …, Ek)`.
    BlowupPlane { k: usize },
    /// `S²×S²` in the basis `(F1, F2)`.
    Hyperbolic,
    /// Anything else: declared data taken at face value.
    General,
}

/// A unimodular symmetric integer lattice with optional canonical class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionLattice {
    gram: Vec<Vec<i64>>,
    labels: Vec<String>,
    canonical: Option<LatticeClass>,
}

impl IntersectionLattice {
    /// `CP²#k` in the default basis.
    pub fn blowup_plane(k: usize) -> Self {
        let rank = k + 1;
        let mut gram = vec![vec![0; rank]; rank];
        gram[0][0] = 1;
        for (i, row) in gram.iter_mut().enumerate().skip(1) {
            row[i] = -1;
        }
        let mut labels = vec!["L".to_string()];
        labels.extend((1..=k).map(|i| format!("E{i}")));
        IntersectionLattice {
            gram,
            labels,
            canonical: Some(canonical_class(k)),
        }
    }

    /// `S²×S²` with hyperbolic gram.
    pub fn hyperbolic() -> Self {
        IntersectionLattice {
            gram: vec![vec![0, 1], vec![1, 0]],
            labels: vec!["F1".to_string(), "F2".to_string()],
            canonical: Some(LatticeClass::new(vec![-2, -2])),
        }
    }

    /// Arbitrary unimodular symmetric lattice.
    pub fn general(
        gram: Vec<Vec<i64>>,
        labels: Option<Vec<String>>,
        canonical: Option<LatticeClass>,
    ) -> Result<Self, LatticeError> {
        let rank = gram.len();
        if rank == 0 || gram.iter().any(|row| row.len() != rank) {
            return Err(LatticeError::NotSquare);
        }
        for i in 0..rank {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(LatticeError::NotSymmetric);
                }
            }
        }
        let det = determinant(&gram);
        if det.abs() != 1 {
            return Err(LatticeError::NotUnimodular(det));
        }
        let labels = labels.unwrap_or_else(|| (1..=rank).map(|i| format!("X{i}")).collect());
        if labels.len() != rank {
            return Err(LatticeError::LabelCount {
                expected: rank,
                found: labels.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(LatticeError::DuplicateLabel(l.clone()));
            }
        }
        if let Some(k) = &canonical {
            if k.rank() != rank {
                return Err(LatticeError::RankMismatch {
                    expected: rank,
                    found: k.rank(),
                });
            }
        }
        Ok(IntersectionLattice {
            gram,
            labels,
            canonical,
        })
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn canonical(&self) -> Option<&LatticeClass> {
        self.canonical.as_ref()
    }

    pub fn form(&self) -> LatticeForm {
        let rank = self.rank();
        let default = IntersectionLattice::blowup_plane(rank - 1);
        if self.gram == default.gram && self.canonical == default.canonical {
            return LatticeForm::BlowupPlane { k: rank - 1 };
        }
        let hyp = IntersectionLattice::hyperbolic();
        if self.gram == hyp.gram && self.canonical == hyp.canonical {
            return LatticeForm::Hyperbolic;
        }
        LatticeForm::General
    }

    /// Number of blow-ups in the sense of `b₂ - 1`.
    pub fn k(&self) -> usize {
        self.rank() - 1
    }

    pub fn check_rank(&self, x: &LatticeClass) -> Result<(), LatticeError> {
        if x.rank() != self.rank() {
            return Err(LatticeError::RankMismatch {
                expected: self.rank(),
                found: x.rank(),
            });
        }
        Ok(())
    }

    /// Intersection pairing `xᵀ·G·y`.
    pub fn pair(&self, x: &LatticeClass, y: &LatticeClass) -> Result<i64, LatticeError> {
        self.check_rank(x)?;
        self.check_rank(y)?;
        Ok(self.pair_unchecked(x.coeffs(), y.coeffs()))
    }

    pub(crate) fn pair_unchecked(&self, x: &[i64], y: &[i64]) -> i64 {
        let mut total = 0;
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0 {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                total += xi * self.gram[i][j] * yj;
            }
        }
        total
    }

    /// Pairing of a rational class with an integral one.
    pub fn pair_rational(&self, x: &RationalClass, y: &LatticeClass) -> Result<Rational, LatticeError> {
        if x.rank() != self.rank() {
            return Err(LatticeError::RankMismatch {
                expected: self.rank(),
                found: x.rank(),
            });
        }
        self.check_rank(y)?;
        let mut total = Rational::zero();
        for (i, xi) in x.coeffs().iter().enumerate() {
            let row: i64 = (0..self.rank()).map(|j| self.gram[i][j] * y.coeffs()[j]).sum();
            total += xi * Rational::from_integer(row as i128);
        }
        Ok(total)
    }

    pub fn square_rational(&self, x: &RationalClass) -> Result<Rational, LatticeError> {
        if x.rank() != self.rank() {
            return Err(LatticeError::RankMismatch {
                expected: self.rank(),
                found: x.rank(),
            });
        }
        let mut total = Rational::zero();
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                total += x.coeffs()[i] * x.coeffs()[j] * Rational::from_integer(self.gram[i][j] as i128);
            }
        }
        Ok(total)
    }

    /// `(positive, negative)` inertia, computed by exact congruence diagonalisation.
    pub fn signature(&self) -> (usize, usize) {
        inertia(&self.gram)
    }

    pub fn is_even(&self) -> bool {
        (0..self.rank()).all(|i| self.gram[i][i] % 2 == 0)
    }

    pub fn class(&self, coeffs: &[i64]) -> Result<LatticeClass, LatticeError> {
        let c = LatticeClass::new(coeffs.to_vec());
        self.check_rank(&c)?;
        Ok(c)
    }

    /// Basis vector by label.
    pub fn named(&self, label: &str) -> Option<LatticeClass> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| LatticeClass::basis(self.rank(), i))
    }

    /// Human-readable name such as `2L-E1-E2-E3`.
    pub fn class_name(&self, x: &LatticeClass) -> String {
        format_combination(x.coeffs(), &self.labels)
    }

    /// All classes with `x·x = square` and `x·K = canonical_pairing`.
    ///
    /// `CP²#k` with `k < 9` uses the degree enumeration, which is exact; all
    /// other lattices fall back to the coefficient box `|a| <= SEARCH_BOX`.
    pub fn classes_with(&self, square: i64, canonical_pairing: i64) -> Result<Vec<LatticeClass>, LatticeError> {
        let canonical = self.canonical.as_ref().ok_or(LatticeError::NoCanonicalClass)?;
        let mut out = match self.form() {
            LatticeForm::BlowupPlane { k } if k < 9 => enumerate_by_degree(k, square, canonical_pairing),
            _ => box_search(self, canonical, square, canonical_pairing, SEARCH_BOX),
        };
        out.sort();
        Ok(out)
    }

    /// Classes with `C² = -1` and `C·K = -1`.
    pub fn exceptional(&self) -> Result<Vec<LatticeClass>, LatticeError> {
        self.classes_with(-1, -1)
    }

    pub fn is_exceptional(&self, c: &LatticeClass) -> Result<bool, LatticeError> {
        let canonical = self.canonical.as_ref().ok_or(LatticeError::NoCanonicalClass)?;
        Ok(self.pair(c, c)? == -1 && self.pair(c, canonical)? == -1)
    }
}

impl fmt::Display for IntersectionLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.form() {
            LatticeForm::BlowupPlane { k: 0 } => f.write_str("CP2"),
            LatticeForm::BlowupPlane { k } => write!(f, "CP2#{k}"),
            LatticeForm::Hyperbolic => f.write_str("S2xS2"),
            LatticeForm::General => {
                let (p, n) = self.signature();
                write!(f, "lattice(rank {}, signature ({p},{n}))", self.rank())
            }
        }
    }
}

/// `K = (-3, 1, …, 1)` in the basis `(L, E1, …, Ek)`.
pub fn canonical_class(k: usize) -> LatticeClass {
    let mut v = vec![1; k + 1];
    v[0] = -3;
    LatticeClass::new(v)
}

/// Exceptional classes of `CP²#k` together with whether the result is certified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExceptionalSet {
    pub k: usize,
    pub classes: Vec<LatticeClass>,
    pub certified: bool,
}

/// Exceptional classes of `CP²#k` in the default basis.
pub fn exceptional_classes(k: usize) -> ExceptionalSet {
    let lattice = IntersectionLattice::blowup_plane(k);
    let classes = lattice
        .exceptional()
        .expect("default lattice always carries a canonical class");
    ExceptionalSet {
        k,
        classes,
        certified: k <= CERTIFIED_MAX_K,
    }
}

/// Classes `dL + Σ c_i E_i` of `CP²#k` with prescribed square and canonical pairing.
///
/// With `x² = d² - Σc²` and `x·K = -3d - Σc`, the constraints become
/// `Σc = -3d - κ`, `Σc² = d² - s`; Cauchy-Schwarz bounds `d` whenever `k < 9`.
fn enumerate_by_degree(k: usize, square: i64, kappa: i64) -> Vec<LatticeClass> {
    let mut out = Vec::new();
    let kk = k as i64;
    // f(d) = (9 - k) d² + 6κd + κ² + k·s <= 0 is necessary.
    let f = |d: i64| (9 - kk) * d * d + 6 * kappa * d + kappa * kappa + kk * square;
    let (lo, hi) = if k == 0 {
        (-(square.abs() + 1), square.abs() + 1)
    } else {
        let a = 9 - kk;
        let vertex = -3 * kappa / a;
        let start = [vertex - 1, vertex, vertex + 1]
            .into_iter()
            .min_by_key(|d| f(*d))
            .unwrap();
        if f(start) > 0 {
            return out;
        }
        let mut lo = start;
        while f(lo - 1) <= 0 {
            lo -= 1;
        }
        let mut hi = start;
        while f(hi + 1) <= 0 {
            hi += 1;
        }
        (lo, hi)
    };
    for d in lo..=hi {
        let sum_sq = d * d - square;
        if sum_sq < 0 {
            continue;
        }
        let sum = -3 * d - kappa;
        let mut rest = Vec::with_capacity(k);
        fill_coeffs(k, sum, sum_sq, &mut rest, &mut |c| {
            let mut v = Vec::with_capacity(k + 1);
            v.push(d);
            v.extend_from_slice(c);
            out.push(LatticeClass::new(v));
        });
    }
    out
}

fn fill_coeffs(slots: usize, sum: i64, sum_sq: i64, prefix: &mut Vec<i64>, emit: &mut impl FnMut(&[i64])) {
    if slots == 0 {
        if sum == 0 && sum_sq == 0 {
            emit(prefix);
        }
        return;
    }
    let bound = isqrt(sum_sq);
    for c in -bound..=bound {
        let rem_sq = sum_sq - c * c;
        let rem_sum = sum - c;
        // Cauchy-Schwarz on the remaining slots.
        let n = (slots - 1) as i64;
        if rem_sum * rem_sum > n * rem_sq {
            continue;
        }
        prefix.push(c);
        fill_coeffs(slots - 1, rem_sum, rem_sq, prefix, emit);
        prefix.pop();
    }
}

fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn box_search(
    lattice: &IntersectionLattice,
    canonical: &LatticeClass,
    square: i64,
    kappa: i64,
    bound: i64,
) -> Vec<LatticeClass> {
    let rank = lattice.rank();
    let mut out = Vec::new();
    let mut v = vec![-bound; rank];
    loop {
        if lattice.pair_unchecked(&v, &v) == square && lattice.pair_unchecked(&v, canonical.coeffs()) == kappa {
            out.push(LatticeClass::new(v.clone()));
        }
        let mut i = 0;
        loop {
            if i == rank {
                return out;
            }
            if v[i] < bound {
                v[i] += 1;
                break;
            }
            v[i] = -bound;
            i += 1;
        }
    }
}

pub(crate) fn format_combination(coeffs: &[i64], labels: &[String]) -> String {
    let mut s = String::new();
    for (c, label) in coeffs.iter().zip(labels) {
        if *c == 0 {
            continue;
        }
        if *c < 0 {
            s.push('-');
        } else if !s.is_empty() {
            s.push('+');
        }
        if c.abs() != 1 {
            s.push_str(&c.abs().to_string());
        }
        s.push_str(label);
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// Bareiss fraction-free determinant.
pub(crate) fn determinant(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|x| *x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Inertia of a symmetric integer matrix via symmetric Gaussian elimination over ℚ.
fn inertia(m: &[Vec<i64>]) -> (usize, usize) {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .map(|r| r.iter().map(|x| Rational::from_integer(*x as i128)).collect())
        .collect();
    let (mut pos, mut neg) = (0, 0);
    for k in 0..n {
        if a[k][k].is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !a[j][j].is_zero()) {
                a.swap(k, j);
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                // Replace e_k by e_k + e_j: the new diagonal entry is 2·a[k][j] ≠ 0.
                for c in 0..n {
                    let v = a[j][c];
                    a[k][c] += v;
                }
                for r in 0..n {
                    let v = a[r][j];
                    a[r][k] += v;
                }
            } else {
                continue;
            }
        }
        let pivot = a[k][k];
        if pivot.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        for i in k + 1..n {
            let factor = a[i][k] / pivot;
            if factor.is_zero() {
                continue;
            }
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= factor * v;
            }
        }
        for j in k + 1..n {
            a[k][j] = Rational::zero();
        }
        for i in k + 1..n {
            a[i][k] = Rational::zero();
        }
    }
    (pos, neg)
}

/// Inverse of a unimodular integer matrix.
pub(crate) fn unimodular_inverse(m: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Rational> = r.iter().map(|x| Rational::from_integer(*x as i128)).collect();
            row.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        let pivot = a[col][col];
        for v in a[col].iter_mut() {
            *v /= pivot;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for c in 0..2 * n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
    }
    a.iter()
        .map(|row| {
            row[n..]
                .iter()
                .map(|v| v.is_integer().then(|| *v.numer() as i64))
                .collect::<Option<Vec<_>>>()
        })
        .collect()
}

/// An integral matrix acting on coefficient vectors that preserves the pairing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeIsometry {
    /// Column `j` is the image of basis vector `j`.
    matrix: Vec<Vec<i64>>,
    preserves_canonical: bool,
}

impl LatticeIsometry {
    pub fn new(lattice: &IntersectionLattice, matrix: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let n = lattice.rank();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(LatticeError::RankMismatch {
                expected: n,
                found: matrix.len(),
            });
        }
        let iso = LatticeIsometry {
            matrix,
            preserves_canonical: false,
        };
        for i in 0..n {
            for j in 0..n {
                let ci = iso.apply_raw(&LatticeClass::basis(n, i));
                let cj = iso.apply_raw(&LatticeClass::basis(n, j));
                if lattice.pair_unchecked(ci.coeffs(), cj.coeffs()) != lattice.gram[i][j] {
                    return Err(LatticeError::NotAnIsometry);
                }
            }
        }
        let preserves_canonical = lattice.canonical().is_some_and(|k| iso.apply_raw(k) == *k);
        Ok(LatticeIsometry {
            preserves_canonical,
            ..iso
        })
    }

    pub fn identity(rank: usize) -> Self {
        let matrix = (0..rank)
            .map(|i| (0..rank).map(|j| i64::from(i == j)).collect())
            .collect();
        LatticeIsometry {
            matrix,
            preserves_canonical: true,
        }
    }

    /// Permutation of the exceptional generators `E1..Ek`; `perm[i]` is the
    /// image index (0-based within the exceptional block) of `E_{i+1}`.
    pub fn permute_exceptionals(lattice: &IntersectionLattice, perm: &[usize]) -> Result<Self, LatticeError> {
        let n = lattice.rank();
        if perm.len() + 1 != n {
            return Err(LatticeError::RankMismatch {
                expected: n - 1,
                found: perm.len(),
            });
        }
        let mut matrix = vec![vec![0; n]; n];
        matrix[0][0] = 1;
        for (i, p) in perm.iter().enumerate() {
            matrix[p + 1][i + 1] = 1;
        }
        LatticeIsometry::new(lattice, matrix)
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn preserves_canonical(&self) -> bool {
        self.preserves_canonical
    }

    fn apply_raw(&self, x: &LatticeClass) -> LatticeClass {
        let n = self.matrix.len();
        LatticeClass::new(
            (0..n)
                .map(|i| (0..n).map(|j| self.matrix[i][j] * x.coeffs()[j]).sum())
                .collect(),
        )
    }

    pub fn apply(&self, x: &LatticeClass) -> Result<LatticeClass, LatticeError> {
        if x.rank() != self.matrix.len() {
            return Err(LatticeError::RankMismatch {
                expected: self.matrix.len(),
                found: x.rank(),
            });
        }
        Ok(self.apply_raw(x))
    }

    pub fn apply_rational(&self, x: &RationalClass) -> RationalClass {
        let n = self.matrix.len();
        RationalClass::new(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| Rational::from_integer(self.matrix[i][j] as i128) * x.coeffs()[j])
                        .sum()
                })
                .collect(),
        )
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LatticeIsometry) -> LatticeIsometry {
        let n = self.matrix.len();
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|l| self.matrix[i][l] * other.matrix[l][j]).sum())
                    .collect()
            })
            .collect();
        LatticeIsometry {
            matrix,
            preserves_canonical: self.preserves_canonical && other.preserves_canonical,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == LatticeIsometry::identity(self.matrix.len())
            || self
                .matrix
                .iter()
                .enumerate()
                .all(|(i, r)| r.iter().enumerate().all(|(j, v)| *v == i64::from(i == j)))
    }
}

/// The standard quadratic Cremona involution on `E_i, E_j, E_m` (1-based indices).
pub fn cremona_standard(
    lattice: &IntersectionLattice,
    i: usize,
    j: usize,
    m: usize,
) -> Result<LatticeIsometry, LatticeError> {
    let k = match lattice.form() {
        LatticeForm::BlowupPlane { k } => k,
        _ => {
            return Err(LatticeError::UnsupportedMove(
                "Cremona move needs the default CP2#k basis".into(),
            ))
        }
    };
    if k < 3 {
        return Err(LatticeError::UnsupportedMove(format!(
            "Cremona move needs at least 3 blow-ups, lattice has k={k}"
        )));
    }
    let idx = [i, j, m];
    if idx.iter().any(|&x| x == 0 || x > k) || i == j || j == m || i == m {
        return Err(LatticeError::UnsupportedMove(format!(
            "indices ({i},{j},{m}) must be distinct and within 1..={k}"
        )));
    }
    let n = k + 1;
    let mut matrix: Vec<Vec<i64>> = (0..n).map(|r| (0..n).map(|c| i64::from(r == c)).collect()).collect();
    // Column 0: L ↦ 2L - Ei - Ej - Em.
    matrix[0][0] = 2;
    for &x in &idx {
        matrix[x][0] = -1;
    }
    // Column x: E_x ↦ L - (the other two).
    for &x in &idx {
        for r in 0..n {
            matrix[r][x] = 0;
        }
        matrix[0][x] = 1;
        for &y in &idx {
            if y != x {
                matrix[y][x] = -1;
            }
        }
    }
    LatticeIsometry::new(lattice, matrix)
}

/// Stabilising inclusion into the blown-up lattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inclusion {
    pub source_rank: usize,
}

impl Inclusion {
    pub fn apply(&self, x: &LatticeClass) -> LatticeClass {
        assert_eq!(x.rank(), self.source_rank, "class rank mismatch");
        x.extended()
    }

    pub fn apply_rational(&self, x: &RationalClass) -> RationalClass {
        x.extended()
    }

    /// The new exceptional class.
    pub fn new_class(&self) -> LatticeClass {
        LatticeClass::basis(self.source_rank + 1, self.source_rank)
    }
}

/// Rank `r+1` lattice with one more `-1` generator.
pub fn blow_up_lattice(lattice: &IntersectionLattice) -> (IntersectionLattice, Inclusion) {
    let r = lattice.rank();
    let mut gram: Vec<Vec<i64>> = lattice
        .gram
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.push(0);
            row
        })
        .collect();
    let mut last = vec![0; r + 1];
    last[r] = -1;
    gram.push(last);
    let mut labels = lattice.labels.clone();
    let next = match lattice.form() {
        LatticeForm::BlowupPlane { k } => format!("E{}", k + 1),
        _ => {
            let mut n = 1;
            while labels.contains(&format!("E{n}")) {
                n += 1;
            }
            format!("E{n}")
        }
    };
    labels.push(next);
    // K_{k+1} = inc(K_k) + E_{k+1}
    let canonical = lattice.canonical.as_ref().map(|k| {
        let mut v = k.extended();
        v.0[r] = 1;
        v
    });
    (
        IntersectionLattice {
            gram,
            labels,
            canonical,
        },
        Inclusion { source_rank: r },
    )
}

/// A change to a normal-form basis of a (sub)lattice.
///
/// `basis[j]` is the `j`-th new basis vector in old coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisChange {
    pub target: IntersectionLattice,
    pub basis: Vec<LatticeClass>,
    target_gram_inverse: Vec<Vec<i64>>,
}

impl BasisChange {
    fn new(target: IntersectionLattice, basis: Vec<LatticeClass>) -> Self {
        let target_gram_inverse = unimodular_inverse(target.gram()).expect("normal-form lattices are unimodular");
        BasisChange {
            target,
            basis,
            target_gram_inverse,
        }
    }

    /// New coordinates of an old class lying in the span of `basis`.
    fn coordinates(&self, source: &IntersectionLattice, x: &LatticeClass) -> LatticeClass {
        let pairings: Vec<i64> = self
            .basis
            .iter()
            .map(|b| source.pair_unchecked(x.coeffs(), b.coeffs()))
            .collect();
        let n = self.basis.len();
        LatticeClass::new(
            (0..n)
                .map(|i| (0..n).map(|j| self.target_gram_inverse[i][j] * pairings[j]).sum())
                .collect(),
        )
    }

    fn coordinates_rational(&self, source: &IntersectionLattice, x: &RationalClass) -> RationalClass {
        let pairings: Vec<Rational> = self
            .basis
            .iter()
            .map(|b| source.pair_rational(x, b).expect("rank checked by caller"))
            .collect();
        let n = self.basis.len();
        RationalClass::new(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| Rational::from_integer(self.target_gram_inverse[i][j] as i128) * pairings[j])
                        .sum()
                })
                .collect(),
        )
    }

    /// Old coordinates of a new class.
    pub fn to_source(&self, x: &LatticeClass) -> LatticeClass {
        let rank = self.basis.first().map_or(0, LatticeClass::rank);
        self.basis
            .iter()
            .zip(x.coeffs())
            .fold(LatticeClass::zero(rank), |acc, (b, c)| &acc + &b.scaled(*c))
    }
}

/// Finds a normal-form basis of the orthogonal complement of `avoid` with the given
/// canonical class. Odd complements get `(line, exceptional…)`, even rank-2
/// complements get the hyperbolic pair. Ties break in descending lexicographic order.
fn find_normal_basis(
    lattice: &IntersectionLattice,
    avoid: Option<&LatticeClass>,
    target_canonical: &LatticeClass,
) -> Result<BasisChange, LatticeError> {
    let orth = |x: &LatticeClass| avoid.is_none_or(|c| lattice.pair_unchecked(x.coeffs(), c.coeffs()) == 0);
    let target_rank = lattice.rank() - usize::from(avoid.is_some());
    let kpair = |x: &LatticeClass| lattice.pair_unchecked(x.coeffs(), target_canonical.coeffs());

    let mut lines: Vec<LatticeClass> = lattice
        .classes_with(1, -3)?
        .into_iter()
        .filter(|x| orth(x) && kpair(x) == -3)
        .collect();
    lines.sort_by(LatticeClass::cmp_descending);
    let exceptional: Vec<LatticeClass> = lattice
        .exceptional()?
        .into_iter()
        .filter(|x| orth(x) && kpair(x) == -1)
        .collect();
    for line in &lines {
        let mut candidates: Vec<&LatticeClass> = exceptional
            .iter()
            .filter(|e| lattice.pair_unchecked(e.coeffs(), line.coeffs()) == 0)
            .collect();
        candidates.sort_by(|a, b| a.cmp_descending(b));
        let mut chosen: Vec<LatticeClass> = Vec::new();
        for c in candidates {
            if chosen
                .iter()
                .all(|d| lattice.pair_unchecked(d.coeffs(), c.coeffs()) == 0)
            {
                chosen.push(c.clone());
            }
        }
        if chosen.len() + 1 != target_rank {
            continue;
        }
        let mut basis = vec![line.clone()];
        basis.extend(chosen);
        let target = IntersectionLattice::blowup_plane(target_rank - 1);
        let change = BasisChange::new(target, basis);
        if change.to_source(target_canonical_in(&change.target)) == *target_canonical {
            return Ok(change);
        }
    }

    if target_rank == 2 {
        let mut fibers: Vec<LatticeClass> = lattice
            .classes_with(0, -2)?
            .into_iter()
            .filter(|x| orth(x) && kpair(x) == -2)
            .collect();
        fibers.sort_by(LatticeClass::cmp_descending);
        for (a, f1) in fibers.iter().enumerate() {
            for f2 in &fibers[a + 1..] {
                if lattice.pair_unchecked(f1.coeffs(), f2.coeffs()) != 1 {
                    continue;
                }
                let change = BasisChange::new(IntersectionLattice::hyperbolic(), vec![f1.clone(), f2.clone()]);
                if change.to_source(target_canonical_in(&change.target)) == *target_canonical {
                    return Ok(change);
                }
            }
        }
    }

    Err(LatticeError::SearchExhausted {
        bound: SEARCH_BOX,
        target: format!("a normal-form basis of rank {target_rank}"),
    })
}

fn target_canonical_in(lattice: &IntersectionLattice) -> &LatticeClass {
    lattice.canonical().expect("normal forms carry a canonical class")
}

/// Re-expresses a lattice with canonical class in a normal form (`CP²#k` or `S²×S²`).
pub fn normalize_lattice(lattice: &IntersectionLattice) -> Result<BasisChange, LatticeError> {
    let canonical = lattice.canonical().ok_or(LatticeError::NoCanonicalClass)?.clone();
    find_normal_basis(lattice, None, &canonical)
}

impl BasisChange {
    pub fn apply(&self, source: &IntersectionLattice, x: &LatticeClass) -> Result<LatticeClass, LatticeError> {
        source.check_rank(x)?;
        Ok(self.coordinates(source, x))
    }

    pub fn apply_rational(&self, source: &IntersectionLattice, x: &RationalClass) -> RationalClass {
        self.coordinates_rational(source, x)
    }
}

/// Blow-down of an exceptional class `C`: downstairs lattice, pullbacks, pushforward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowDownMap {
    pub upstairs: IntersectionLattice,
    pub class: LatticeClass,
    change: BasisChange,
}

impl BlowDownMap {
    pub fn downstairs(&self) -> &IntersectionLattice {
        &self.change.target
    }

    /// Pullbacks of the downstairs basis, in upstairs coordinates.
    pub fn pullbacks(&self) -> &[LatticeClass] {
        &self.change.basis
    }

    pub fn pullback(&self, x: &LatticeClass) -> Result<LatticeClass, LatticeError> {
        self.downstairs().check_rank(x)?;
        Ok(self.change.to_source(x))
    }

    /// `x ↦ x + (x·C)·C`, in downstairs coordinates.
    pub fn pushforward(&self, x: &LatticeClass) -> Result<LatticeClass, LatticeError> {
        let xc = self.upstairs.pair(x, &self.class)?;
        let projected = x + &self.class.scaled(xc);
        Ok(self.change.coordinates(&self.upstairs, &projected))
    }

    pub fn pushforward_rational(&self, x: &RationalClass) -> Result<RationalClass, LatticeError> {
        let xc = self.upstairs.pair_rational(x, &self.class)?;
        let projected = x.add_scaled(xc, &self.class);
        Ok(self.change.coordinates_rational(&self.upstairs, &projected))
    }
}

pub fn blow_down_data(lattice: &IntersectionLattice, class: &LatticeClass) -> Result<BlowDownMap, LatticeError> {
    lattice.check_rank(class)?;
    let canonical = lattice.canonical().ok_or(LatticeError::NoCanonicalClass)?;
    let sq = lattice.pair(class, class)?;
    let kc = lattice.pair(class, canonical)?;
    if sq != -1 || kc != -1 {
        return Err(LatticeError::InvalidBlowDown {
            class: lattice.class_name(class),
            reason: format!("not exceptional (C·C = {sq}, C·K = {kc})"),
        });
    }
    if lattice.rank() < 2 {
        return Err(LatticeError::InvalidBlowDown {
            class: lattice.class_name(class),
            reason: "rank-1 lattice cannot be blown down".into(),
        });
    }
    let downstairs_canonical = canonical - class;
    let change = find_normal_basis(lattice, Some(class), &downstairs_canonical)?;
    Ok(BlowDownMap {
        upstairs: lattice.clone(),
        class: class.clone(),
        change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cls(v: &[i64]) -> LatticeClass {
        LatticeClass::new(v.to_vec())
    }

    #[test]
    fn pairing_examples() {
        let lat = IntersectionLattice::blowup_plane(2);
        assert_eq!(lat.pair(&cls(&[1, 0, 0]), &cls(&[1, 0, 0])).unwrap(), 1);
        assert_eq!(lat.pair(&cls(&[0, 1, 0]), &cls(&[0, 1, 0])).unwrap(), -1);
        assert_eq!(lat.pair(&cls(&[1, -1, -1]), &cls(&[1, -1, -1])).unwrap(), -1);
        assert!(matches!(
            lat.pair(&cls(&[1, 0]), &cls(&[1, 0, 0])),
            Err(LatticeError::RankMismatch { .. })
        ));
    }

    #[test]
    fn canonical_class_examples() {
        assert_eq!(canonical_class(0), cls(&[-3]));
        assert_eq!(canonical_class(3), cls(&[-3, 1, 1, 1]));
        let lat = IntersectionLattice::blowup_plane(3);
        let k = canonical_class(3);
        assert_eq!(lat.pair(&k, &k).unwrap(), 6);
    }

    #[test]
    fn exceptional_small_k() {
        assert!(exceptional_classes(0).classes.is_empty());
        assert_eq!(exceptional_classes(1).classes, vec![cls(&[0, 1])]);
        let two = exceptional_classes(2);
        assert!(two.certified);
        assert_eq!(two.classes.len(), 3);
        assert!(two.classes.contains(&cls(&[1, -1, -1])));
        assert_eq!(exceptional_classes(3).classes.len(), 6);
    }

    #[test]
    fn exceptional_counts_for_del_pezzo_range() {
        // Classical counts of lines on del Pezzo surfaces.
        let expected = [0, 1, 3, 6, 10, 16, 27, 56, 240];
        for (k, n) in expected.iter().enumerate() {
            let set = exceptional_classes(k);
            assert_eq!(set.classes.len(), *n, "k={k}");
            assert_eq!(set.certified, k <= 3);
        }
    }

    #[test]
    fn signature_and_parity() {
        assert_eq!(IntersectionLattice::blowup_plane(3).signature(), (1, 3));
        let h = IntersectionLattice::hyperbolic();
        assert_eq!(h.signature(), (1, 1));
        assert!(h.is_even());
        assert!(!IntersectionLattice::blowup_plane(1).is_even());
    }

    #[test]
    fn general_lattice_validation() {
        assert!(matches!(
            IntersectionLattice::general(vec![vec![2, 0], vec![0, 1]], None, None),
            Err(LatticeError::NotUnimodular(2))
        ));
        assert!(matches!(
            IntersectionLattice::general(vec![vec![0, 1], vec![2, 0]], None, None),
            Err(LatticeError::NotSymmetric)
        ));
        assert!(matches!(
            IntersectionLattice::general(vec![vec![0, 1], vec![1, 0]], Some(vec!["A".into(), "A".into()]), None),
            Err(LatticeError::DuplicateLabel(_))
        ));
        let g = IntersectionLattice::general(vec![vec![0, 1], vec![1, 0]], None, None).unwrap();
        assert_eq!(g.form(), LatticeForm::General);
        assert!(matches!(g.exceptional(), Err(LatticeError::NoCanonicalClass)));
    }

    #[test]
    fn cremona_images() {
        let lat = IntersectionLattice::blowup_plane(3);
        let s = cremona_standard(&lat, 1, 2, 3).unwrap();
        assert_eq!(s.apply(&cls(&[1, 0, 0, 0])).unwrap(), cls(&[2, -1, -1, -1]));
        assert_eq!(s.apply(&cls(&[0, 1, 0, 0])).unwrap(), cls(&[1, 0, -1, -1]));
        assert!(s.compose(&s).is_identity());
        assert!(s.preserves_canonical());
        let small = IntersectionLattice::blowup_plane(2);
        assert!(matches!(
            cremona_standard(&small, 1, 2, 3),
            Err(LatticeError::UnsupportedMove(_))
        ));
    }

    #[test]
    fn blow_up_extends_canonical() {
        let (lat1, inc) = blow_up_lattice(&IntersectionLattice::blowup_plane(0));
        assert_eq!(lat1, IntersectionLattice::blowup_plane(1));
        assert_eq!(inc.apply(&cls(&[1])), cls(&[1, 0]));
        let k1 = &inc.apply(&canonical_class(0)) + &inc.new_class();
        assert_eq!(&k1, lat1.canonical().unwrap());
    }

    #[test]
    fn blow_down_coordinate_drop() {
        let lat = IntersectionLattice::blowup_plane(2);
        let map = blow_down_data(&lat, &cls(&[0, 0, 1])).unwrap();
        assert_eq!(map.downstairs(), &IntersectionLattice::blowup_plane(1));
        assert_eq!(map.pullbacks(), &[cls(&[1, 0, 0]), cls(&[0, 1, 0])]);
    }

    #[test]
    fn blow_down_of_conic_line_in_three_point_blowup() {
        let lat = IntersectionLattice::blowup_plane(3);
        let c = cls(&[1, -1, -1, 0]);
        let map = blow_down_data(&lat, &c).unwrap();
        assert_eq!(
            map.pullbacks(),
            &[cls(&[2, -1, -1, -1]), cls(&[1, 0, -1, -1]), cls(&[1, -1, 0, -1])]
        );
        assert_eq!(map.pushforward(&cls(&[0, 0, 0, 1])).unwrap(), cls(&[1, -1, -1]));
        assert!(map.pushforward(&c).unwrap().is_zero());
    }

    #[test]
    fn blow_down_to_s2xs2() {
        let lat = IntersectionLattice::blowup_plane(2);
        let map = blow_down_data(&lat, &cls(&[1, -1, -1])).unwrap();
        assert_eq!(map.downstairs().form(), LatticeForm::Hyperbolic);
        assert_eq!(map.pullbacks(), &[cls(&[1, 0, -1]), cls(&[1, -1, 0])]);
    }

    #[test]
    fn blow_down_rejects_non_exceptional() {
        let lat = IntersectionLattice::blowup_plane(2);
        assert!(matches!(
            blow_down_data(&lat, &cls(&[1, 0, 0])),
            Err(LatticeError::InvalidBlowDown { .. })
        ));
    }

    #[test]
    fn blown_up_hyperbolic_normalizes_to_two_point_blowup() {
        let (up, _) = blow_up_lattice(&IntersectionLattice::hyperbolic());
        assert_eq!(up.form(), LatticeForm::General);
        let change = normalize_lattice(&up).unwrap();
        assert_eq!(change.target, IntersectionLattice::blowup_plane(2));
        assert_eq!(change.basis[0], cls(&[1, 1, -1]));
    }

    #[test]
    fn class_names() {
        let lat = IntersectionLattice::blowup_plane(3);
        assert_eq!(lat.class_name(&cls(&[2, -1, -1, -1])), "2L-E1-E2-E3");
        assert_eq!(lat.class_name(&cls(&[-1, 1, 0, 0])), "-L+E1");
        assert_eq!(lat.class_name(&cls(&[0, 0, 0, 0])), "0");
    }
}
