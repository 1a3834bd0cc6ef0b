//! Arithmetic in a prime field `F_q` and polynomials over it.
//!
//! Elements are plain values ([`Fe`]); every operation goes through the
//! [`PrimeField`] that owns the modulus, so one process can work with several
//! fields at once (the exhaustive privacy checks run over `F_5` next to the
//! protocol's `F_{2^31 - 1}`).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

/// Serialized width of one field element, in bytes.
pub const ELEMENT_BYTES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("interpolation nodes must be distinct")]
    DuplicateNode,
    #[error("interpolation needs at least one point")]
    NoPoints,
    #[error("value {value} is not a canonical residue modulo {modulus}")]
    NotCanonical { value: u64, modulus: u64 },
}

/// A field element, stored as its least nonnegative residue.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    /// Caller guarantees `v` is already reduced for the field it will be used in.
    #[inline]
    pub(crate) fn from_canonical(v: u64) -> Fe {
        Fe(v)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// 8-byte little-endian encoding of the canonical residue.
    #[inline]
    pub fn to_le_bytes(self) -> [u8; ELEMENT_BYTES] {
        self.0.to_le_bytes()
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The prime field `F_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    /// `2^31 - 1`, the default protocol modulus.
    pub const MERSENNE_31: u64 = 2_147_483_647;

    pub fn new(q: u64) -> Result<Self, FieldError> {
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(PrimeField { q })
    }

    pub fn mersenne31() -> Self {
        PrimeField { q: Self::MERSENNE_31 }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn element(&self, v: u64) -> Fe {
        Fe(v % self.q)
    }

    pub fn from_i64(&self, v: i64) -> Fe {
        let r = (v as i128).rem_euclid(self.q as i128);
        Fe(r as u64)
    }

    /// Accepts `v` only if it is already a canonical residue.
    pub fn try_element(&self, v: u64) -> Result<Fe, FieldError> {
        if v < self.q {
            Ok(Fe(v))
        } else {
            Err(FieldError::NotCanonical { value: v, modulus: self.q })
        }
    }

    pub fn decode(&self, bytes: [u8; ELEMENT_BYTES]) -> Result<Fe, FieldError> {
        self.try_element(u64::from_le_bytes(bytes))
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let s = a.0 as u128 + b.0 as u128;
        Fe((s % self.q as u128) as u64)
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        if a.0 >= b.0 {
            Fe(a.0 - b.0)
        } else {
            Fe(self.q - (b.0 - a.0))
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if a.0 == 0 {
            a
        } else {
            Fe(self.q - a.0)
        }
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe(((a.0 as u128 * b.0 as u128) % self.q as u128) as u64)
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let (mut old_r, mut r) = (a.0 as i128, self.q as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let quot = old_r / r;
            (old_r, r) = (r, old_r - quot * r);
            (old_s, s) = (s, old_s - quot * s);
        }
        debug_assert_eq!(old_r, 1);
        Ok(Fe(old_s.rem_euclid(self.q as i128) as u64))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, mut base: Fe, mut exp: u64) -> Fe {
        let mut acc = Fe(1 % self.q);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Uniform sample by rejection from the top partial block of `u64`.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> Fe {
        // largest v such that [0, v] holds a whole number of residue blocks
        let zone = u64::MAX - ((u64::MAX % self.q + 1) % self.q);
        loop {
            let v = rng.next_u64();
            if v <= zone {
                return Fe(v % self.q);
            }
        }
    }

    pub fn random_vec<R: RngCore + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<Fe> {
        (0..len).map(|_| self.random(rng)).collect()
    }

    /// Every element of the field in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> + Clone {
        (0..self.q).map(Fe)
    }

    /// Elementwise `acc += x`.
    pub fn add_assign_vec(&self, acc: &mut [Fe], x: &[Fe]) {
        debug_assert_eq!(acc.len(), x.len());
        for (a, &b) in acc.iter_mut().zip(x) {
            *a = self.add(*a, b);
        }
    }

    /// Elementwise `acc += c * x`.
    pub fn axpy(&self, acc: &mut [Fe], c: Fe, x: &[Fe]) {
        debug_assert_eq!(acc.len(), x.len());
        for (a, &b) in acc.iter_mut().zip(x) {
            *a = self.add(*a, self.mul(c, b));
        }
    }

    /// Rank of a dense matrix (rows of equal length) by Gaussian elimination.
    pub fn rank(&self, rows: &[Vec<Fe>]) -> usize {
        let mut m: Vec<Vec<Fe>> = rows.to_vec();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(rank, p);
            let inv = self.inv(m[rank][c]).expect("pivot is nonzero");
            let pivot = m[rank].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != rank && !row[c].is_zero() {
                    let factor = self.mul(row[c], inv);
                    for (x, &y) in row[c..cols].iter_mut().zip(&pivot[c..cols]) {
                        *x = self.sub(*x, self.mul(factor, y));
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in WITNESSES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Univariate polynomial, coefficients lowest degree first.
///
/// The leading coefficient is nonzero unless the polynomial is zero, in which
/// case the coefficient list is empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Fe>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    /// Builds from canonical coefficients, trimming trailing zeros.
    pub fn from_coeffs(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, field: &PrimeField, x: Fe) -> Fe {
        self.coeffs
            .iter()
            .rev()
            .fold(Fe::ZERO, |acc, &c| field.add(field.mul(acc, x), c))
    }

    /// The unique polynomial of degree `< points.len()` through `points`.
    ///
    /// Newton divided differences, then expansion to monomial form.
    pub fn interpolate(field: &PrimeField, points: &[(Fe, Fe)]) -> Result<Self, FieldError> {
        if points.is_empty() {
            return Err(FieldError::NoPoints);
        }
        check_distinct(points.iter().map(|p| p.0))?;
        let n = points.len();
        let xs: Vec<Fe> = points.iter().map(|p| p.0).collect();
        let mut dd: Vec<Fe> = points.iter().map(|p| p.1).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                let num = field.sub(dd[i], dd[i - 1]);
                let den = field.sub(xs[i], xs[i - level]);
                dd[i] = field.div(num, den)?;
            }
        }
        // p(x) = dd[n-1]; p = p * (x - x_k) + dd[k] for k = n-2 .. 0
        let mut coeffs = vec![Fe::ZERO; n];
        coeffs[0] = dd[n - 1];
        for (len, k) in (1..).zip((0..n - 1).rev()) {
            let shift = field.neg(xs[k]);
            for i in (0..=len).rev() {
                let hi = if i > 0 { coeffs[i - 1] } else { Fe::ZERO };
                let lo = if i < len { field.mul(coeffs[i], shift) } else { Fe::ZERO };
                coeffs[i] = field.add(hi, lo);
            }
            coeffs[0] = field.add(coeffs[0], dd[k]);
        }
        Ok(Polynomial::from_coeffs(coeffs))
    }
}

/// Lagrange basis values `ℓ_k(x) = ∏_{l≠k} (x - x_l)/(x_k - x_l)` for every node.
pub fn lagrange_weights(field: &PrimeField, nodes: &[Fe], x: Fe) -> Result<Vec<Fe>, FieldError> {
    if nodes.is_empty() {
        return Err(FieldError::NoPoints);
    }
    check_distinct(nodes.iter().copied())?;
    nodes
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let mut num = Fe(1 % field.modulus());
            let mut den = num;
            for (l, &xl) in nodes.iter().enumerate() {
                if l != k {
                    num = field.mul(num, field.sub(x, xl));
                    den = field.mul(den, field.sub(xk, xl));
                }
            }
            field.div(num, den)
        })
        .collect()
}

fn check_distinct(xs: impl Iterator<Item = Fe>) -> Result<(), FieldError> {
    let mut seen: Vec<Fe> = xs.collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(FieldError::DuplicateNode);
    }
    Ok(())
}
