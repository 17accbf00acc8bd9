//! Exact arithmetic in `Q` and in the cyclotomic field `Q(mu_c)`.
//!
//! `Q(mu_c)` is realised as `Q[x]/Phi_c(x)`: every element is stored as its
//! unique remainder of degree `< phi(c)`, so structural equality is field
//! equality. The class of `x` is the fixed primitive root `zeta`.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn euler_phi(c: u64) -> u64 {
    let mut n = c;
    let mut result = c;
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            while n.is_multiple_of(q) {
                n /= q;
            }
            result -= result / q;
        }
        q += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Multiplicative order of `a` modulo `c` (`gcd(a, c) = 1`).
pub fn multiplicative_order(a: u64, c: u64) -> u64 {
    if c == 1 {
        return 1;
    }
    let a = a % c;
    let mut x = a;
    let mut k = 1;
    while x != 1 {
        x = (x as u128 * a as u128 % c as u128) as u64;
        k += 1;
        assert!(k <= c, "{a} is not invertible modulo {c}");
    }
    k
}

/// Inverse of `a` modulo `c`, if it exists.
pub fn mod_inverse(a: i64, c: u64) -> Option<u64> {
    if c == 1 {
        return Some(0);
    }
    let g = num_integer::Integer::extended_gcd(&a.rem_euclid(c as i64), &(c as i64));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(c as i64) as u64)
}

static CYCLOTOMIC_POLYS: Lazy<RwLock<HashMap<u64, Arc<Vec<BigInt>>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// `Phi_c` as integer coefficients, lowest degree first.
///
/// Computed as `x^c - 1` divided by the product of `Phi_d` over the proper
/// divisors `d` of `c`.
pub fn cyclotomic_polynomial(c: u64) -> Vec<BigInt> {
    assert!(c >= 1, "conductor must be positive");
    if let Some(p) = CYCLOTOMIC_POLYS.read().get(&c) {
        return p.as_ref().clone();
    }
    let mut num = vec![BigInt::zero(); c as usize + 1];
    num[0] = BigInt::from(-1);
    num[c as usize] = BigInt::one();
    for d in 1..c {
        if c.is_multiple_of(d) {
            let phi_d = cyclotomic_polynomial(d);
            num = int_exact_div(&num, &phi_d);
        }
    }
    CYCLOTOMIC_POLYS.write().insert(c, Arc::new(num.clone()));
    num
}

/// Exact division by a monic integer polynomial.
fn int_exact_div(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let db = b.len() - 1;
    debug_assert!(b[db].is_one());
    let mut rem = a.to_vec();
    let mut q = vec![BigInt::zero(); a.len() - db];
    for k in (db..a.len()).rev() {
        let coef = rem[k].clone();
        if coef.is_zero() {
            continue;
        }
        q[k - db] = coef.clone();
        for (i, bi) in b.iter().enumerate() {
            rem[k - db + i] -= &coef * bi;
        }
    }
    debug_assert!(rem.iter().all(|x| x.is_zero()));
    q
}

/// Multiplies integer polynomials (lowest degree first).
pub fn int_poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

type QPoly = Vec<Rational>;

fn qtrim(p: &mut QPoly) {
    while p.last().is_some_and(|x| x.is_zero()) {
        p.pop();
    }
}

fn qsub(a: &[Rational], b: &[Rational]) -> QPoly {
    let n = a.len().max(b.len());
    let mut out: QPoly = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x - y
        })
        .collect();
    qtrim(&mut out);
    out
}

fn qmul(a: &[Rational], b: &[Rational]) -> QPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    qtrim(&mut out);
    out
}

fn qdivrem(a: &[Rational], b: &[Rational]) -> (QPoly, QPoly) {
    let mut rem: QPoly = a.to_vec();
    qtrim(&mut rem);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if rem.len() <= db {
        return (Vec::new(), rem);
    }
    let mut q = vec![Rational::zero(); rem.len() - db];
    for k in (db..rem.len()).rev() {
        if rem[k].is_zero() {
            continue;
        }
        let coef = &rem[k] / &lead;
        for (i, bi) in b.iter().enumerate() {
            let t = &coef * bi;
            rem[k - db + i] -= t;
        }
        q[k - db] = coef;
    }
    qtrim(&mut rem);
    qtrim(&mut q);
    (q, rem)
}

/// Returns `(g, s)` with `s*a == g (mod b)` and `g = gcd(a, b)`.
fn qgcd_inverse(a: &[Rational], b: &[Rational]) -> (QPoly, QPoly) {
    let mut r0: QPoly = b.to_vec();
    let mut r1: QPoly = a.to_vec();
    qtrim(&mut r0);
    qtrim(&mut r1);
    let mut s0: QPoly = Vec::new();
    let mut s1: QPoly = vec![Rational::one()];
    while !r1.is_empty() {
        let (q, r) = qdivrem(&r0, &r1);
        let s2 = qsub(&s0, &qmul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    (r0, s0)
}

/// Context for `Q(mu_c)`: the modulus `Phi_c` and the reductions of
/// `x^k` for `0 <= k < c`.
#[derive(Debug)]
pub struct CyclotomicField {
    c: u64,
    phi: usize,
    modulus: Vec<BigInt>,
    root_powers: Vec<Vec<BigInt>>,
}

static FIELDS: Lazy<RwLock<HashMap<u64, Arc<CyclotomicField>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// Shared field context for conductor `c`.
pub fn field(c: u64) -> Arc<CyclotomicField> {
    assert!(c >= 1, "conductor must be positive");
    if let Some(f) = FIELDS.read().get(&c) {
        return f.clone();
    }
    let modulus = cyclotomic_polynomial(c);
    let phi = modulus.len() - 1;
    let mut root_powers = Vec::with_capacity(c as usize);
    let mut cur = vec![BigInt::zero(); phi];
    cur[0] = BigInt::one();
    for _ in 0..c {
        root_powers.push(cur.clone());
        // multiply by x and reduce
        let top = cur[phi - 1].clone();
        let mut next = vec![BigInt::zero(); phi];
        for i in (1..phi).rev() {
            next[i] = cur[i - 1].clone();
        }
        if !top.is_zero() {
            for i in 0..phi {
                next[i] -= &top * &modulus[i];
            }
        }
        cur = next;
    }
    let f = Arc::new(CyclotomicField {
        c,
        phi,
        modulus,
        root_powers,
    });
    FIELDS.write().insert(c, f.clone());
    f
}

impl CyclotomicField {
    pub fn conductor(&self) -> u64 {
        self.c
    }

    pub fn degree(&self) -> usize {
        self.phi
    }

    pub fn modulus(&self) -> &[BigInt] {
        &self.modulus
    }

    /// Coefficients of `zeta^k` in the power basis.
    pub fn root_power(&self, k: u64) -> &[BigInt] {
        &self.root_powers[(k % self.c) as usize]
    }

    fn reduce(&self, mut a: QPoly) -> Vec<Rational> {
        let phi = self.phi;
        for k in (phi..a.len()).rev() {
            if a[k].is_zero() {
                continue;
            }
            let coef = std::mem::take(&mut a[k]);
            for i in 0..phi {
                if !self.modulus[i].is_zero() {
                    a[k - phi + i] -= &coef * Rational::from_integer(self.modulus[i].clone());
                }
            }
        }
        a.resize(phi, Rational::zero());
        a
    }
}

/// Exact element of `Q(mu_c)`.
#[derive(Clone)]
pub struct CyclotomicNumber {
    field: Arc<CyclotomicField>,
    coeffs: Vec<Rational>,
}

impl CyclotomicNumber {
    pub fn zero(c: u64) -> Self {
        let field = field(c);
        let coeffs = vec![Rational::zero(); field.phi];
        CyclotomicNumber { field, coeffs }
    }

    pub fn one(c: u64) -> Self {
        Self::from_rational(c, Rational::one())
    }

    pub fn from_rational(c: u64, q: Rational) -> Self {
        let mut x = Self::zero(c);
        x.coeffs[0] = q;
        x
    }

    pub fn from_int(c: u64, n: i64) -> Self {
        Self::from_rational(c, rat_int(n))
    }

    /// Element with the given power-basis coefficients (any length; reduced
    /// modulo `Phi_c`).
    pub fn from_coeffs(c: u64, coeffs: Vec<Rational>) -> Self {
        let field = field(c);
        let coeffs = field.reduce(coeffs);
        CyclotomicNumber { field, coeffs }
    }

    /// `sum_k a[k] zeta^k` for a vector indexed by exponents modulo `c`.
    pub fn from_group_ring(c: u64, a: &[Rational]) -> Self {
        let field = field(c);
        let mut coeffs = vec![Rational::zero(); field.phi];
        for (k, q) in a.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            for (i, b) in field.root_power(k as u64).iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i] += q * Rational::from_integer(b.clone());
                }
            }
        }
        CyclotomicNumber { field, coeffs }
    }

    /// `zeta^(a mod c)`.
    pub fn root_of_unity(c: u64, a: i64) -> Self {
        let field = field(c);
        let k = a.rem_euclid(c as i64) as u64;
        let coeffs = field
            .root_power(k)
            .iter()
            .map(|b| Rational::from_integer(b.clone()))
            .collect();
        CyclotomicNumber { field, coeffs }
    }

    pub fn conductor(&self) -> u64 {
        self.field.c
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|x| x.is_zero())
    }

    /// The rational value, if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs[1..].iter().all(|x| x.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.field.c != other.field.c {
            return Err(Error::ConductorMismatch {
                left: self.field.c,
                right: other.field.c,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CyclotomicNumber {
            field: self.field.clone(),
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CyclotomicNumber {
            field: self.field.clone(),
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        if self.field.phi == 1 {
            return Ok(CyclotomicNumber {
                field: self.field.clone(),
                coeffs: vec![&self.coeffs[0] * &other.coeffs[0]],
            });
        }
        let mut prod = vec![Rational::zero(); 2 * self.field.phi - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Ok(CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.field.reduce(prod),
        })
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against
    /// `Phi_c`.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.field.phi == 1 {
            return Ok(CyclotomicNumber {
                field: self.field.clone(),
                coeffs: vec![self.coeffs[0].recip()],
            });
        }
        let modulus: QPoly = self
            .field
            .modulus
            .iter()
            .map(|b| Rational::from_integer(b.clone()))
            .collect();
        let (g, s) = qgcd_inverse(&self.coeffs, &modulus);
        debug_assert_eq!(g.len(), 1, "Phi_c is irreducible");
        let ginv = g[0].recip();
        let s: QPoly = s.into_iter().map(|x| x * &ginv).collect();
        Ok(CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.field.reduce(s),
        })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        self.try_mul(&other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one(self.conductor());
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            e >>= 1;
            if e > 0 {
                b = &b * &b;
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, q: &Rational) -> Self {
        CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|a| a * q).collect(),
        }
    }

    /// The automorphism `zeta -> zeta^t`.
    pub fn galois_apply(&self, t: i64) -> Result<Self> {
        let c = self.conductor();
        if mod_inverse(t, c).is_none() {
            return Err(Error::NotCoprime { t, c });
        }
        let t = t.rem_euclid(c as i64) as u64;
        let mut acc = vec![Rational::zero(); c as usize];
        for (k, q) in self.coeffs.iter().enumerate() {
            if !q.is_zero() {
                acc[((k as u64 * t) % c) as usize] += q;
            }
        }
        Ok(Self::from_group_ring(c, &acc))
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denominator(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
    }
}

impl PartialEq for CyclotomicNumber {
    fn eq(&self, other: &Self) -> bool {
        self.field.c == other.field.c && self.coeffs == other.coeffs
    }
}

impl Eq for CyclotomicNumber {}

impl Hash for CyclotomicNumber {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.c.hash(state);
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CyclotomicNumber(c={}, {})", self.field.c, self)
    }
}

impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, q) in self.coeffs.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            let neg = q.is_negative();
            let mag = q.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "z")?;
                    } else {
                        write!(f, "z^{k}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl<'a> $tr<&'a CyclotomicNumber> for &'a CyclotomicNumber {
            type Output = CyclotomicNumber;
            fn $m(self, rhs: &'a CyclotomicNumber) -> CyclotomicNumber {
                self.$try(rhs).expect("conductor mismatch")
            }
        }
        impl $tr<CyclotomicNumber> for CyclotomicNumber {
            type Output = CyclotomicNumber;
            fn $m(self, rhs: CyclotomicNumber) -> CyclotomicNumber {
                self.$try(&rhs).expect("conductor mismatch")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl AddAssign<&CyclotomicNumber> for CyclotomicNumber {
    fn add_assign(&mut self, rhs: &CyclotomicNumber) {
        assert_eq!(self.field.c, rhs.field.c, "conductor mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl Neg for CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        -&self
    }
}

/// Accumulator in the group ring `Q[x]/(x^c - 1)`; multiplying by a root of
/// unity is an index shift. Reduced to `Q(mu_c)` on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRingAccumulator {
    c: u64,
    coeffs: Vec<Rational>,
}

impl GroupRingAccumulator {
    pub fn new(c: u64) -> Self {
        GroupRingAccumulator {
            c,
            coeffs: vec![Rational::zero(); c as usize],
        }
    }

    /// Adds `q * zeta^exp`.
    pub fn add_term(&mut self, exp: u64, q: &Rational) {
        self.coeffs[(exp % self.c) as usize] += q;
    }

    /// Adds `zeta^shift * other`.
    pub fn add_shifted(&mut self, shift: u64, other: &GroupRingAccumulator) {
        for (k, q) in other.coeffs.iter().enumerate() {
            if !q.is_zero() {
                self.coeffs[((k as u64 + shift) % self.c) as usize] += q;
            }
        }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn to_number(&self) -> CyclotomicNumber {
        CyclotomicNumber::from_group_ring(self.c, &self.coeffs)
    }
}

/// A `c`-th root of unity `zeta^exp`, stored by its exponent.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct RootOfUnity {
    c: u64,
    exp: u64,
}

impl RootOfUnity {
    pub fn new(c: u64, a: i64) -> Self {
        assert!(c >= 1, "conductor must be positive");
        RootOfUnity {
            c,
            exp: a.rem_euclid(c as i64) as u64,
        }
    }

    pub fn one(c: u64) -> Self {
        RootOfUnity { c, exp: 0 }
    }

    /// All `c` roots, ordered by exponent.
    pub fn all(c: u64) -> impl Iterator<Item = RootOfUnity> {
        (0..c).map(move |exp| RootOfUnity { c, exp })
    }

    /// The roots different from 1.
    pub fn nontrivial(c: u64) -> impl Iterator<Item = RootOfUnity> {
        (1..c).map(move |exp| RootOfUnity { c, exp })
    }

    pub fn conductor(self) -> u64 {
        self.c
    }

    pub fn exponent(self) -> u64 {
        self.exp
    }

    pub fn is_one(self) -> bool {
        self.exp == 0
    }

    pub fn mul(self, other: RootOfUnity) -> RootOfUnity {
        assert_eq!(self.c, other.c, "conductor mismatch");
        RootOfUnity {
            c: self.c,
            exp: (self.exp + other.exp) % self.c,
        }
    }

    pub fn inv(self) -> RootOfUnity {
        RootOfUnity {
            c: self.c,
            exp: (self.c - self.exp) % self.c,
        }
    }

    pub fn div(self, other: RootOfUnity) -> RootOfUnity {
        self.mul(other.inv())
    }

    pub fn pow(self, e: i64) -> RootOfUnity {
        let c = self.c as i128;
        let exp = ((self.exp as i128 * e as i128) % c + c) % c;
        RootOfUnity {
            c: self.c,
            exp: exp as u64,
        }
    }

    /// Order of the root in `mu_c`.
    pub fn order(self) -> u64 {
        self.c / num_integer::gcd(self.c, self.exp).max(1)
    }

    pub fn to_number(self) -> CyclotomicNumber {
        CyclotomicNumber::root_of_unity(self.c, self.exp as i64)
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}^{}", self.c, self.exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn small_cyclotomic_polynomials() {
        assert_eq!(cyclotomic_polynomial(1), ints(&[-1, 1]));
        assert_eq!(cyclotomic_polynomial(2), ints(&[1, 1]));
        assert_eq!(cyclotomic_polynomial(6), ints(&[1, -1, 1]));
        assert_eq!(cyclotomic_polynomial(12), ints(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn divisor_product_is_x_c_minus_one() {
        for c in 1..=60u64 {
            let mut prod = ints(&[1]);
            for d in 1..=c {
                if c % d == 0 {
                    prod = int_poly_mul(&prod, &cyclotomic_polynomial(d));
                }
            }
            let mut expected = vec![BigInt::zero(); c as usize + 1];
            expected[0] = BigInt::from(-1);
            expected[c as usize] = BigInt::one();
            assert_eq!(prod, expected, "c = {c}");
            assert_eq!(cyclotomic_polynomial(c).len() as u64 - 1, euler_phi(c));
        }
    }

    #[test]
    fn zeta4_squared_is_minus_one() {
        let z = CyclotomicNumber::root_of_unity(4, 1);
        assert_eq!(&z * &z, CyclotomicNumber::from_int(4, -1));
    }

    #[test]
    fn invert_one_minus_zeta3() {
        let one = CyclotomicNumber::one(3);
        let z = CyclotomicNumber::root_of_unity(3, 1);
        let x = &one - &z;
        let inv = x.inv().unwrap();
        let z2 = CyclotomicNumber::root_of_unity(3, 2);
        let expected = (&one - &z2).scale(&rat(1, 3));
        assert_eq!(inv, expected);
        assert!((&inv * &x).is_one());
    }

    #[test]
    fn odd_power_of_minus_one() {
        let m = CyclotomicNumber::from_int(2, -1);
        assert_eq!(m.pow(5).unwrap(), m);
        assert_eq!(m.pow(-3).unwrap(), m);
    }

    #[test]
    fn roots_of_unity() {
        assert_eq!(
            CyclotomicNumber::root_of_unity(2, 1),
            CyclotomicNumber::from_int(2, -1)
        );
        assert_eq!(
            CyclotomicNumber::root_of_unity(4, 2),
            CyclotomicNumber::from_int(4, -1)
        );
        assert_eq!(
            CyclotomicNumber::root_of_unity(3, 4),
            CyclotomicNumber::root_of_unity(3, 1)
        );
        for c in 1..=12u64 {
            for a in 0..c as i64 {
                let r = CyclotomicNumber::root_of_unity(c, a);
                assert!(r.pow(c as i64).unwrap().is_one());
            }
        }
    }

    #[test]
    fn galois_examples() {
        let z3 = CyclotomicNumber::root_of_unity(3, 1);
        assert_eq!(
            z3.galois_apply(2).unwrap(),
            CyclotomicNumber::root_of_unity(3, 2)
        );
        assert_eq!(z3.galois_apply(1).unwrap(), z3);
        let one = CyclotomicNumber::one(4);
        let z4 = CyclotomicNumber::root_of_unity(4, 1);
        assert_eq!((&one - &z4).galois_apply(3).unwrap(), &one + &z4);
        assert_eq!(
            z4.galois_apply(2),
            Err(Error::NotCoprime { t: 2, c: 4 })
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            CyclotomicNumber::zero(5).inv(),
            Err(Error::DivisionByZero)
        );
        assert_eq!(
            CyclotomicNumber::one(3).try_add(&CyclotomicNumber::one(4)),
            Err(Error::ConductorMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn display() {
        let z = CyclotomicNumber::root_of_unity(3, 2);
        assert_eq!(z.to_string(), "-1 - z");
        assert_eq!(CyclotomicNumber::from_rational(2, rat(3, 2)).to_string(), "3/2");
        assert_eq!(CyclotomicNumber::zero(5).to_string(), "0");
    }

    #[test]
    fn root_arithmetic() {
        let a = RootOfUnity::new(6, 5);
        let b = RootOfUnity::new(6, -1);
        assert_eq!(a, b);
        assert_eq!(a.mul(a.inv()), RootOfUnity::one(6));
        assert_eq!(a.pow(3).exponent(), 3);
        assert_eq!(RootOfUnity::new(6, 2).order(), 3);
        assert_eq!(a.to_number().pow(6).unwrap(), CyclotomicNumber::one(6));
    }
}
