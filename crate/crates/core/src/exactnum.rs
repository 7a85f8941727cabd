//! Exact arithmetic in cyclotomic fields `Q(ζ_N)`.
//!
//! Elements are kept in a canonical form: the conductor is the smallest
//! admissible `N` (never `N ≡ 2 mod 4`), and the coefficients are expressed
//! in the basis of powers `ζ_N^k` whose `p`-digit (the leading base-`p` digit
//! of `k mod p^a`) is nonzero for odd `p | N` and zero for `p = 2`.
//! Equality of canonical forms is equality of values.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational numbers.
pub type Rational = BigRational;

/// Errors raised by exact arithmetic.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("conductor {from} does not divide {to}")]
    NonDivisibleConductor { from: u64, to: u64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// Builds the rational `a/b`.
#[must_use]
pub fn rat(a: i64, b: i64) -> Rational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Builds an integer-valued rational.
#[must_use]
pub fn rint(a: i64) -> Rational {
    BigRational::from_integer(BigInt::from(a))
}

/// Prime factorization as `(p, a)` pairs in increasing order of `p`.
#[must_use]
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut a = 0;
            while n % p == 0 {
                n /= p;
                a += 1;
            }
            out.push((p, a));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Euler's totient.
#[must_use]
pub fn totient(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

fn pow_u64(b: u64, e: u32) -> u64 {
    b.pow(e)
}

/// Whether exponent `k` is a basis exponent at the prime power `p^a || n`.
fn digit_is_good(k: u64, p: u64, a: u32) -> bool {
    let pa = pow_u64(p, a);
    let pa1 = pa / p;
    let digit = (k % pa) / pa1;
    if p == 2 {
        digit == 0
    } else {
        digit != 0
    }
}

/// Rewrites `terms` (exponent mod `n` to coefficient) into the canonical basis.
fn reduce_terms<T>(n: u64, terms: &mut BTreeMap<u64, T>)
where
    T: Clone + Zero + Neg<Output = T> + for<'a> std::ops::AddAssign<&'a T>,
{
    for (p, a) in factorize(n) {
        let step = n / p;
        let bad: Vec<u64> = terms
            .keys()
            .copied()
            .filter(|&k| !digit_is_good(k, p, a))
            .collect();
        for k in bad {
            let c = terms.remove(&k).expect("present");
            if c.is_zero() {
                continue;
            }
            let minus = -c;
            if p == 2 {
                let k2 = (k + step) % n;
                add_term(terms, k2, &minus);
            } else {
                for i in 1..p {
                    let k2 = (k + i * step) % n;
                    add_term(terms, k2, &minus);
                }
            }
        }
    }
    terms.retain(|_, c| !c.is_zero());
}

fn add_term<T>(terms: &mut BTreeMap<u64, T>, k: u64, c: &T)
where
    T: Clone + Zero + for<'a> std::ops::AddAssign<&'a T>,
{
    match terms.get_mut(&k) {
        Some(v) => *v += c,
        None => {
            terms.insert(k, c.clone());
        }
    }
}

/// Canonical integer combination of `n`-th roots of unity.
///
/// Input terms may repeat exponents and use any representative mod `n`;
/// the result is sorted, reduced to the canonical basis at conductor `n`
/// (no conductor minimization), with zero coefficients dropped.
#[must_use]
pub fn canonical_int_terms(n: u64, terms: &[(u64, i64)]) -> Vec<(u64, i64)> {
    let mut map: BTreeMap<u64, i64> = BTreeMap::new();
    for &(k, c) in terms {
        *map.entry(k % n).or_insert(0) += c;
    }
    map.retain(|_, c| *c != 0);
    reduce_terms(n, &mut map);
    map.into_iter().collect()
}

/// Dense accumulator of integer multiples of `n`-th roots of unity.
#[derive(Clone, Debug)]
pub struct RootHistogram {
    n: u64,
    counts: Vec<i64>,
}

impl RootHistogram {
    #[must_use]
    pub fn new(n: u64) -> Self {
        Self {
            n,
            counts: vec![0; n as usize],
        }
    }

    #[must_use]
    pub fn modulus(&self) -> u64 {
        self.n
    }

    /// Adds `c · ζ_n^k`.
    #[inline]
    pub fn add(&mut self, k: u64, c: i64) {
        self.counts[(k % self.n) as usize] += c;
    }

    /// Merges another histogram with the same modulus.
    pub fn merge(&mut self, other: &RootHistogram) {
        assert_eq!(self.n, other.n, "histogram moduli differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
    }

    /// The exact sum as a cyclotomic number.
    #[must_use]
    pub fn to_cyclo(&self) -> Cyclo {
        let terms: Vec<(u64, i64)> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(k, c)| (k as u64, *c))
            .collect();
        Cyclo::from_int_terms(self.n, &terms)
    }
}

/// An exact element of a cyclotomic field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclo {
    n: u64,
    terms: BTreeMap<u64, Rational>,
}

impl Cyclo {
    #[must_use]
    pub fn zero() -> Self {
        Self {
            n: 1,
            terms: BTreeMap::new(),
        }
    }

    #[must_use]
    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    #[must_use]
    pub fn from_rational(r: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(0, r);
        }
        Self { n: 1, terms }
    }

    #[must_use]
    pub fn from_int(a: i64) -> Self {
        Self::from_rational(rint(a))
    }

    /// `ζ_n^k`.
    #[must_use]
    pub fn root_of_unity(n: u64, k: i64) -> Self {
        assert!(n > 0, "conductor must be positive");
        let k = k.rem_euclid(n as i64) as u64;
        let mut terms = BTreeMap::new();
        terms.insert(k, Rational::one());
        Self::build(n, terms)
    }

    /// `Σ c · ζ_n^k` over integer terms.
    #[must_use]
    pub fn from_int_terms(n: u64, terms: &[(u64, i64)]) -> Self {
        let mut map = BTreeMap::new();
        for &(k, c) in terms {
            if c != 0 {
                add_term(&mut map, k % n, &rint(c));
            }
        }
        Self::build(n, map)
    }

    /// `Σ c · ζ_n^k` over rational terms.
    #[must_use]
    pub fn from_terms(n: u64, terms: &[(u64, Rational)]) -> Self {
        let mut map = BTreeMap::new();
        for (k, c) in terms {
            add_term(&mut map, k % n, c);
        }
        Self::build(n, map)
    }

    fn build(n: u64, mut terms: BTreeMap<u64, Rational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        reduce_terms(n, &mut terms);
        let mut z = Self { n, terms };
        z.minimize();
        z
    }

    /// Exact `√p` for an odd prime `p`, via the quadratic Gauss sum.
    #[must_use]
    pub fn sqrt_prime(p: u64) -> Self {
        if p == 2 {
            // ζ_8 + ζ_8^{-1}
            return Self::from_int_terms(8, &[(1, 1), (7, 1)]);
        }
        let terms: Vec<(u64, i64)> = (1..p).map(|t| (t, legendre(t as i64, p as i64))).collect();
        let g = Self::from_int_terms(p, &terms);
        if p % 4 == 1 {
            g
        } else {
            // g = i·√p
            &g * &Self::root_of_unity(4, 3)
        }
    }

    /// `p^{k/2}` for a prime `p` and any integer `k`.
    #[must_use]
    pub fn prime_half_power(p: u64, k: i64) -> Self {
        let whole = k.div_euclid(2);
        let half = k.rem_euclid(2);
        let base = if whole >= 0 {
            Rational::from_integer(BigInt::from(p).pow(whole as u32))
        } else {
            Rational::one() / Rational::from_integer(BigInt::from(p).pow((-whole) as u32))
        };
        let z = Self::from_rational(base);
        if half == 1 {
            &z * &Self::sqrt_prime(p)
        } else {
            z
        }
    }

    #[must_use]
    pub fn conductor(&self) -> u64 {
        self.n
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical coefficients `(k, c)` of `Σ c ζ_N^k`.
    pub fn coeffs(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    /// The value as a rational number when it is one.
    #[must_use]
    pub fn to_rational(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.n == 1 {
            return self.terms.get(&0).cloned();
        }
        None
    }

    #[must_use]
    pub fn is_rational(&self) -> bool {
        self.to_rational().is_some()
    }

    /// The same value expressed at conductor `m` (canonical at `m`).
    ///
    /// The returned value is not minimized; it is meant for inspection and
    /// coefficient-level comparison at a fixed conductor.
    pub fn rebase_terms(&self, m: u64) -> Result<Vec<(u64, Rational)>, ExactError> {
        if m % self.n != 0 {
            return Err(ExactError::NonDivisibleConductor {
                from: self.n,
                to: m,
            });
        }
        let s = m / self.n;
        let mut map = BTreeMap::new();
        for (k, c) in &self.terms {
            add_term(&mut map, (k * s) % m, c);
        }
        reduce_terms(m, &mut map);
        Ok(map.into_iter().collect())
    }

    /// Checks that `m` is a multiple of the conductor and returns the value;
    /// canonical forms are conductor-minimal, so the value is unchanged.
    pub fn rebase(&self, m: u64) -> Result<Cyclo, ExactError> {
        let terms = self.rebase_terms(m)?;
        Ok(Self::from_terms(m, &terms))
    }

    fn minimize(&mut self) {
        loop {
            if self.terms.is_empty() {
                self.n = 1;
                return;
            }
            let mut changed = false;
            for (p, a) in factorize(self.n) {
                if let Some(smaller) = self.project_down(p, a) {
                    *self = smaller;
                    changed = true;
                    break;
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Returns the element re-expressed at conductor `n/p` when it lies in
    /// that subfield.
    fn project_down(&self, p: u64, a: u32) -> Option<Cyclo> {
        let n = self.n;
        let m = n / p;
        if a >= 2 {
            if self.terms.keys().all(|k| k % p == 0) {
                let mut map = BTreeMap::new();
                for (k, c) in &self.terms {
                    map.insert(k / p, c.clone());
                }
                reduce_terms(m, &mut map);
                return Some(Self { n: m, terms: map });
            }
            return None;
        }
        // p exactly divides n: ζ_n = ζ_m^u ζ_p^v with u p + v m = 1.
        let (u, v) = bezout(p as i64, m as i64);
        let mut map: BTreeMap<u64, Rational> = BTreeMap::new();
        let minus = -Rational::one() / rint(p as i64 - 1);
        for (k, c) in &self.terms {
            let x = ((*k as i64 * u).rem_euclid(m.max(1) as i64)) as u64;
            let y = (*k as i64 * v).rem_euclid(p as i64);
            let coeff = if y == 0 { c.clone() } else { c * &minus };
            add_term(&mut map, if m == 0 { 0 } else { x % m.max(1) }, &coeff);
        }
        let candidate = Self::build_unminimized(m.max(1), map);
        // compare by rebasing the candidate back to n
        let back = candidate.rebase_terms(n).ok()?;
        let mine: Vec<(u64, Rational)> = self.terms.iter().map(|(k, c)| (*k, c.clone())).collect();
        if back == mine {
            Some(candidate)
        } else {
            None
        }
    }

    fn build_unminimized(n: u64, mut terms: BTreeMap<u64, Rational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        reduce_terms(n, &mut terms);
        Self { n, terms }
    }

    /// Complex conjugate (`ζ^k ↦ ζ^{-k}`).
    #[must_use]
    pub fn conj(&self) -> Cyclo {
        self.galois(self.n - 1)
    }

    /// Applies the automorphism `ζ_N ↦ ζ_N^a` for `a` prime to `N`.
    #[must_use]
    pub fn galois(&self, a: u64) -> Cyclo {
        let n = self.n;
        let mut map = BTreeMap::new();
        for (k, c) in &self.terms {
            add_term(&mut map, (k * a) % n, c);
        }
        Self::build(n, map)
    }

    /// `z · conj(z)`.
    #[must_use]
    pub fn abs_square(&self) -> Cyclo {
        self * &self.conj()
    }

    /// Multiplies by a rational scalar.
    #[must_use]
    pub fn scale(&self, r: &Rational) -> Cyclo {
        if r.is_zero() {
            return Cyclo::zero();
        }
        let terms = self.terms.iter().map(|(k, c)| (*k, c * r)).collect();
        Self { n: self.n, terms }
    }

    /// Integer power (negative exponents invert).
    pub fn pow(&self, e: i64) -> Result<Cyclo, ExactError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Cyclo::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Cyclo, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        if let Some(r) = self.to_rational() {
            return Ok(Cyclo::from_rational(Rational::one() / r));
        }
        let a2 = self.abs_square();
        if let Some(r) = a2.to_rational() {
            return Ok(self.conj().scale(&(Rational::one() / r)));
        }
        // product of the other Galois conjugates over the (rational) norm
        let n = self.n;
        let mut others = Cyclo::one();
        for a in 2..n {
            if a.gcd(&n) == 1 {
                others = &others * &self.galois(a);
            }
        }
        let norm = (self * &others)
            .to_rational()
            .expect("norm of a cyclotomic number is rational");
        Ok(others.scale(&(Rational::one() / norm)))
    }

    /// Exact division.
    pub fn div(&self, other: &Cyclo) -> Result<Cyclo, ExactError> {
        Ok(self * &other.inv()?)
    }

    /// Floating-point value `(re, im)`.
    #[must_use]
    pub fn as_float(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in &self.terms {
            let cf = rational_to_f64(c);
            let ang = 2.0 * std::f64::consts::PI * (*k as f64) / n;
            re += cf * ang.cos();
            im += cf * ang.sin();
        }
        (re, im)
    }

    /// Root-of-unity test: returns `k/N` data `(N, k)` when the value is a
    /// single root of unity `ζ_N^k`.
    #[must_use]
    pub fn as_root_of_unity(&self) -> Option<(u64, u64)> {
        // try all roots of unity at conductor lcm(2, n)
        let m = if self.n % 2 == 1 { 2 * self.n } else { self.n };
        for k in 0..m {
            if *self == Cyclo::root_of_unity(m, k as i64) {
                let g = k.gcd(&m);
                return Some((m / g, k / g));
            }
        }
        None
    }

    /// Exact rendering: rationals as `a/b`, other values as a 12-digit decimal.
    #[must_use]
    pub fn render(&self) -> String {
        if let Some(r) = self.to_rational() {
            return render_rational(&r);
        }
        let (re, im) = self.as_float();
        render_complex(re, im)
    }
}

fn bezout(a: i64, b: i64) -> (i64, i64) {
    let e = a.extended_gcd(&b);
    assert_eq!(e.gcd, 1, "coprime inputs expected");
    (e.x, e.y)
}

/// Converts a rational to `f64`.
#[must_use]
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Legendre symbol `(a/p)` for an odd prime `p`.
#[must_use]
pub fn legendre(a: i64, p: i64) -> i64 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    let mut r: i64 = 1;
    let mut b = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Formats a real number with 12 significant digits.
#[must_use]
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0".to_string()
        } else {
            format!("{x}")
        };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn render_complex(re: f64, im: f64) -> String {
    let re = if re.abs() < 1e-13 { 0.0 } else { re };
    let im = if im.abs() < 1e-13 { 0.0 } else { im };
    if im == 0.0 {
        return sig12(re);
    }
    let sign = if im < 0.0 { "-" } else { "+" };
    format!("{}{}{}i", sig12(re), sign, sig12(im.abs()))
}

/// Renders a rational as `a` or `a/b`.
#[must_use]
pub fn render_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact square root of a nonnegative rational, when it is a square.
#[must_use]
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo[N={}](", self.n)?;
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})ζ^{}", render_rational(c), k)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn common_conductor(a: &Cyclo, b: &Cyclo) -> u64 {
    a.n.lcm(&b.n)
}

fn lifted(z: &Cyclo, m: u64) -> BTreeMap<u64, Rational> {
    let s = m / z.n;
    z.terms
        .iter()
        .map(|(k, c)| ((k * s) % m, c.clone()))
        .collect()
}

impl Add for &Cyclo {
    type Output = Cyclo;
    fn add(self, rhs: &Cyclo) -> Cyclo {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let m = common_conductor(self, rhs);
        let mut map = lifted(self, m);
        for (k, c) in lifted(rhs, m) {
            add_term(&mut map, k, &c);
        }
        Cyclo::build(m, map)
    }
}

impl Sub for &Cyclo {
    type Output = Cyclo;
    fn sub(self, rhs: &Cyclo) -> Cyclo {
        self + &(-rhs)
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo {
            n: self.n,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

impl Neg for Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        -&self
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, rhs: &Cyclo) -> Cyclo {
        if self.is_zero() || rhs.is_zero() {
            return Cyclo::zero();
        }
        let m = common_conductor(self, rhs);
        let a = lifted(self, m);
        let b = lifted(rhs, m);
        let mut map = BTreeMap::new();
        for (ka, ca) in &a {
            for (kb, cb) in &b {
                add_term(&mut map, (ka + kb) % m, &(ca * cb));
            }
        }
        Cyclo::build(m, map)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Cyclo {
            type Output = Cyclo;
            fn $m(self, rhs: Cyclo) -> Cyclo {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Cyclo> for Cyclo {
            type Output = Cyclo;
            fn $m(self, rhs: &Cyclo) -> Cyclo {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl From<Rational> for Cyclo {
    fn from(r: Rational) -> Self {
        Cyclo::from_rational(r)
    }
}

impl From<i64> for Cyclo {
    fn from(a: i64) -> Self {
        Cyclo::from_int(a)
    }
}
