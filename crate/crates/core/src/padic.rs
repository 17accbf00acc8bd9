//! Precision-tracked arithmetic in `Q_p` and in the unramified extension
//! `Q_p(mu_c)` for `p` not dividing `c`.
//!
//! `Q_p(mu_c)` is realised as `Q_p[y]/h(y)` where `h` is a Hensel lift of an
//! irreducible factor of `Phi_c` modulo `p`. Since `h` divides `Phi_c` over
//! `Z_p`, the class `theta` of `y` is a primitive `c`-th root of unity, and
//! `Z_p[y]/h` is the valuation ring, so the valuation of an element is the
//! minimum valuation of its coefficients.
//!
//! An element is `p^shift * sum(digits[i] * y^i)` known modulo `p^abs`. The
//! digit vector is reduced modulo `p^(abs - shift)` and, unless the element
//! is zero to its precision, some digit is prime to `p`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{
    cyclotomic_polynomial, mod_inverse, multiplicative_order, CyclotomicNumber, Rational,
};
use crate::error::{Error, Result};
use crate::fpoly;

/// Number of `p`-adic digits to which the defining polynomial is lifted.
pub const CONTEXT_CAP: u32 = 256;

const INF: i64 = i64::MAX;

const EDF_SEED: u64 = 0x5eed;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&q| is_prime(q)).collect()
}

fn bigint_mod(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

/// `v_p(a)` and `a / p^v` for a nonzero integer.
fn split_p(a: &BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut v = 0;
    let mut a = a.clone();
    loop {
        let (q, r) = a.div_rem(p);
        if !r.is_zero() {
            return (v, a);
        }
        a = q;
        v += 1;
    }
}

/// Context for `Q_p(mu_c)`.
#[derive(Debug)]
pub struct PadicContext {
    p: u64,
    c: u64,
    f: usize,
    residue: Vec<u64>,
    h: Vec<BigInt>,
    pows: Vec<BigInt>,
    theta_powers: Vec<Vec<BigInt>>,
    frob_inv: u64,
}

static CONTEXTS: Lazy<RwLock<HashMap<(u64, u64), Arc<PadicContext>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// Shared context for `(p, c)`; `c = 1` gives `Q_p` itself.
pub fn context(p: u64, c: u64) -> Result<Arc<PadicContext>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if c == 0 {
        return Err(Error::InvalidArgument("conductor must be positive".into()));
    }
    if c.is_multiple_of(p) {
        return Err(Error::PrimeDividesConductor { p, c });
    }
    if let Some(ctx) = CONTEXTS.read().get(&(p, c)) {
        return Ok(ctx.clone());
    }
    let ctx = Arc::new(PadicContext::build(p, c));
    CONTEXTS.write().insert((p, c), ctx.clone());
    Ok(ctx)
}

/// The chosen irreducible factor of `Phi_c` modulo `p`: the one with the
/// lexicographically smallest coefficient vector (lowest degree first).
pub fn residue_factor(p: u64, c: u64) -> Result<Vec<u64>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if c.is_multiple_of(p) {
        return Err(Error::PrimeDividesConductor { p, c });
    }
    let phi: Vec<u64> = cyclotomic_polynomial(c)
        .iter()
        .map(|a| bigint_mod(a, &BigInt::from(p)).to_u64().unwrap())
        .collect();
    let f = multiplicative_order(p, c) as usize;
    let factors = fpoly::equal_degree_factor(&phi, f, p, EDF_SEED);
    Ok(factors.into_iter().next().expect("Phi_c has a factor"))
}

/// Monic `h` of degree `ord_c(p)` dividing `Phi_c` in `(Z/p^n)[y]`.
pub fn hensel_factor(p: u64, c: u64, n: u32) -> Result<Vec<BigInt>> {
    let hbar = residue_factor(p, c)?;
    Ok(hensel_lift(p, c, &hbar, n))
}

fn hensel_lift(p: u64, c: u64, hbar: &[u64], n: u32) -> Vec<BigInt> {
    let phi = cyclotomic_polynomial(c);
    let (gbar, r) = fpoly::divrem(&reduce_p(&phi, p), hbar, p);
    debug_assert!(r.is_empty());
    let (_, s, _) = fpoly::ext_gcd(&gbar, hbar, p);
    let pb = BigInt::from(p);
    let mut h: Vec<BigInt> = hbar.iter().map(|&a| BigInt::from(a)).collect();
    let mut g: Vec<BigInt> = gbar.iter().map(|&a| BigInt::from(a)).collect();
    let mut pk = pb.clone();
    for _ in 1..n {
        let prod = crate::cyclotomic::int_poly_mul(&g, &h);
        let e: Vec<BigInt> = phi
            .iter()
            .enumerate()
            .map(|(i, a)| a - prod.get(i).cloned().unwrap_or_else(BigInt::zero))
            .collect();
        debug_assert!(e.iter().all(|x| (x % &pk).is_zero()));
        let ebar: Vec<u64> = e
            .iter()
            .map(|x| bigint_mod(&(x / &pk), &pb).to_u64().unwrap())
            .collect();
        let dh = fpoly::rem(&fpoly::mul(&ebar, &s, p), hbar, p);
        let rest = fpoly::sub(&ebar, &fpoly::mul(&dh, &gbar, p), p);
        let (dg, r) = fpoly::divrem(&rest, hbar, p);
        debug_assert!(r.is_empty());
        for (i, &d) in dh.iter().enumerate() {
            h[i] += &pk * d;
        }
        for (i, &d) in dg.iter().enumerate() {
            g[i] += &pk * d;
        }
        pk *= &pb;
    }
    h.iter().map(|a| bigint_mod(a, &pk)).collect()
}

fn reduce_p(a: &[BigInt], p: u64) -> Vec<u64> {
    let pb = BigInt::from(p);
    let mut v: Vec<u64> = a
        .iter()
        .map(|x| bigint_mod(x, &pb).to_u64().unwrap())
        .collect();
    fpoly::trim(&mut v);
    v
}

impl PadicContext {
    fn build(p: u64, c: u64) -> Self {
        let residue = residue_factor(p, c).expect("validated");
        let f = residue.len() - 1;
        let h = hensel_lift(p, c, &residue, CONTEXT_CAP);
        let pb = BigInt::from(p);
        let mut pows = Vec::with_capacity(CONTEXT_CAP as usize + 1);
        let mut acc = BigInt::one();
        for _ in 0..=CONTEXT_CAP {
            pows.push(acc.clone());
            acc *= &pb;
        }
        let modulus = &pows[CONTEXT_CAP as usize];
        let mut theta_powers = Vec::with_capacity(c as usize);
        let mut cur = vec![BigInt::zero(); f];
        cur[0] = BigInt::one();
        for _ in 0..c {
            theta_powers.push(cur.clone());
            let mut next = vec![BigInt::zero(); f + 1];
            for i in 0..f {
                next[i + 1] = cur[i].clone();
            }
            let top = next[f].clone();
            for i in 0..f {
                next[i] = bigint_mod(&(&next[i] - &top * &h[i]), modulus);
            }
            next.truncate(f);
            cur = next;
        }
        let frob_inv = mod_inverse(p as i64, c).expect("p prime to c");
        PadicContext {
            p,
            c,
            f,
            residue,
            h,
            pows,
            theta_powers,
            frob_inv,
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn conductor(&self) -> u64 {
        self.c
    }

    /// Residue degree `f`, the order of `p` modulo `c`.
    pub fn degree(&self) -> usize {
        self.f
    }

    /// `h` modulo `p^n`.
    pub fn modulus(&self, n: u32) -> Vec<BigInt> {
        let m = &self.pows[n as usize];
        self.h.iter().map(|a| a % m).collect()
    }

    /// Identifies the root choice: the residue factor's coefficients.
    pub fn root_tag(&self) -> String {
        let parts: Vec<String> = self.residue.iter().map(|a| a.to_string()).collect();
        format!("p={},c={},h=[{}]", self.p, self.c, parts.join(","))
    }

    /// `p^{-1} mod c`.
    pub fn frobenius_inverse_exponent(&self) -> u64 {
        self.frob_inv
    }

    fn pk(&self, k: i64) -> &BigInt {
        assert!(
            (0..=CONTEXT_CAP as i64).contains(&k),
            "precision {k} exceeds the context cap"
        );
        &self.pows[k as usize]
    }

    fn reduce_poly(&self, mut a: Vec<BigInt>, k: i64) -> Vec<BigInt> {
        let f = self.f;
        let m = self.pk(k);
        for d in (f..a.len()).rev() {
            if a[d].is_zero() {
                continue;
            }
            let top = std::mem::take(&mut a[d]);
            for i in 0..f {
                a[d - f + i] -= &top * &self.h[i];
            }
        }
        a.resize(f, BigInt::zero());
        a.iter().map(|x| bigint_mod(x, m)).collect()
    }

    fn mul_digits(&self, a: &[BigInt], b: &[BigInt], k: i64) -> Vec<BigInt> {
        let m = self.pk(k);
        if self.f == 1 {
            return vec![bigint_mod(&(&a[0] * &b[0]), m)];
        }
        let mut prod = vec![BigInt::zero(); 2 * self.f - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        self.reduce_poly(prod, k)
    }

    /// Inverse of a unit digit vector modulo `p^k`, by Newton iteration from
    /// the inverse in `F_p[y]/h`.
    fn inv_digits(&self, a: &[BigInt], k: i64) -> Vec<BigInt> {
        let p = self.p;
        let mut abar = reduce_p(a, p);
        fpoly::trim(&mut abar);
        let (g, s, _) = fpoly::ext_gcd(&abar, &self.residue, p);
        assert_eq!(g, vec![1], "not a unit");
        let mut z: Vec<BigInt> = (0..self.f)
            .map(|i| BigInt::from(s.get(i).copied().unwrap_or(0)))
            .collect();
        let mut prec = 1;
        while prec < k {
            prec = (2 * prec).min(k);
            let az = self.mul_digits(a, &z, prec);
            let mut two_minus: Vec<BigInt> = az.iter().map(|x| -x).collect();
            two_minus[0] += 2;
            z = self.mul_digits(&z, &two_minus, prec);
        }
        let m = self.pk(k);
        z.iter().map(|x| bigint_mod(x, m)).collect()
    }

    /// `theta^e` modulo `p^k`.
    fn theta_pow(&self, e: u64, k: i64) -> Vec<BigInt> {
        let m = self.pk(k);
        self.theta_powers[(e % self.c) as usize]
            .iter()
            .map(|x| x % m)
            .collect()
    }
}

/// Element of `Q_p(mu_c)` with tracked precision.
#[derive(Clone)]
pub struct PadicCycElement {
    ctx: Arc<PadicContext>,
    shift: i64,
    abs: i64,
    digits: Vec<BigInt>,
}

/// Element of `Q_p` with tracked precision.
#[derive(Clone, PartialEq, Eq)]
pub struct PadicElement(PadicCycElement);

impl PartialEq for PadicCycElement {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.p == other.ctx.p
            && self.ctx.c == other.ctx.c
            && self.shift == other.shift
            && self.abs == other.abs
            && self.digits == other.digits
    }
}

impl Eq for PadicCycElement {}

impl PadicCycElement {
    fn build(ctx: Arc<PadicContext>, shift: i64, abs: i64, digits: Vec<BigInt>) -> Self {
        if abs == INF {
            assert!(digits.iter().all(|d| d.is_zero()), "only zero is exact");
            return Self::zero(&ctx);
        }
        if shift >= abs {
            return Self::zero_to(&ctx, abs);
        }
        let rel = abs - shift;
        let m = ctx.pk(rel).clone();
        let mut digits: Vec<BigInt> = digits.iter().map(|d| bigint_mod(d, &m)).collect();
        digits.resize(ctx.f, BigInt::zero());
        let pb = BigInt::from(ctx.p);
        let mut v = INF;
        for d in &digits {
            if !d.is_zero() {
                v = v.min(split_p(d, &pb).0);
            }
        }
        if v == INF {
            return Self::zero_to(&ctx, abs);
        }
        let pv = ctx.pk(v).clone();
        let rel2 = rel - v;
        let m2 = ctx.pk(rel2).clone();
        let digits = digits.iter().map(|d| bigint_mod(&(d / &pv), &m2)).collect();
        PadicCycElement {
            ctx,
            shift: shift + v,
            abs,
            digits,
        }
    }

    /// Exact zero.
    pub fn zero(ctx: &Arc<PadicContext>) -> Self {
        PadicCycElement {
            ctx: ctx.clone(),
            shift: INF,
            abs: INF,
            digits: vec![BigInt::zero(); ctx.f],
        }
    }

    /// Zero known modulo `p^abs`.
    pub fn zero_to(ctx: &Arc<PadicContext>, abs: i64) -> Self {
        PadicCycElement {
            ctx: ctx.clone(),
            shift: abs,
            abs,
            digits: vec![BigInt::zero(); ctx.f],
        }
    }

    pub fn from_int(ctx: &Arc<PadicContext>, n: i64, rel: u32) -> Self {
        Self::from_rational(ctx, &Rational::from_integer(BigInt::from(n)), rel)
            .expect("integers embed")
    }

    /// A rational number known to `rel` significant digits.
    pub fn from_rational(ctx: &Arc<PadicContext>, q: &Rational, rel: u32) -> Result<Self> {
        if rel > CONTEXT_CAP {
            return Err(Error::Precision(format!(
                "requested {rel} digits, cap is {CONTEXT_CAP}"
            )));
        }
        if q.is_zero() {
            return Ok(Self::zero(ctx));
        }
        let pb = BigInt::from(ctx.p);
        let (vn, un) = split_p(q.numer(), &pb);
        let (vd, ud) = split_p(q.denom(), &pb);
        let m = ctx.pk(rel as i64);
        let inv = ud.modinv(m).expect("unit denominator");
        let u = bigint_mod(&(un * inv), m);
        let mut digits = vec![BigInt::zero(); ctx.f];
        digits[0] = u;
        let shift = vn - vd;
        Ok(Self::build(ctx.clone(), shift, shift + rel as i64, digits))
    }

    /// `p^shift * sum(digits[i] * theta^i)` known modulo `p^abs`.
    pub fn from_digits(
        ctx: &Arc<PadicContext>,
        shift: i64,
        abs: i64,
        digits: Vec<BigInt>,
    ) -> Self {
        Self::build(ctx.clone(), shift, abs, digits)
    }

    /// `theta^e`, the embedded `zeta^e`, to `rel` digits.
    pub fn theta_pow(ctx: &Arc<PadicContext>, e: i64, rel: u32) -> Self {
        let e = e.rem_euclid(ctx.c as i64) as u64;
        Self::build(ctx.clone(), 0, rel as i64, ctx.theta_pow(e, rel as i64))
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn prime(&self) -> u64 {
        self.ctx.p
    }

    pub fn conductor(&self) -> u64 {
        self.ctx.c
    }

    /// `None` for exact zero; for a zero known modulo `p^N` this is `N`.
    pub fn valuation(&self) -> Option<i64> {
        (self.shift != INF).then_some(self.shift)
    }

    /// Absolute precision `N`: the element is known modulo `p^N`.
    pub fn precision(&self) -> Option<i64> {
        (self.abs != INF).then_some(self.abs)
    }

    pub fn relative_precision(&self) -> i64 {
        if self.abs == INF {
            INF
        } else {
            self.abs - self.shift
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.abs == INF
    }

    /// True when no significant digit is known.
    pub fn is_indistinguishable_from_zero(&self) -> bool {
        self.shift >= self.abs
    }

    pub fn unit_digits(&self) -> &[BigInt] {
        &self.digits
    }

    fn compat(&self, other: &Self) -> Result<Arc<PadicContext>> {
        if self.ctx.p != other.ctx.p {
            return Err(Error::PrimeMismatch {
                left: self.ctx.p,
                right: other.ctx.p,
            });
        }
        if self.ctx.c == other.ctx.c {
            return Ok(self.ctx.clone());
        }
        if other.ctx.c == 1 {
            return Ok(self.ctx.clone());
        }
        if self.ctx.c == 1 {
            return Ok(other.ctx.clone());
        }
        Err(Error::ConductorMismatch {
            left: self.ctx.c,
            right: other.ctx.c,
        })
    }

    /// Views an element of `Q_p` inside `ctx`.
    pub fn promote(&self, ctx: &Arc<PadicContext>) -> Self {
        if Arc::ptr_eq(&self.ctx, ctx) {
            return self.clone();
        }
        assert_eq!(self.ctx.p, ctx.p, "prime mismatch");
        assert!(
            self.ctx.c == ctx.c || self.ctx.c == 1,
            "cannot promote across conductors"
        );
        let mut digits = self.digits.clone();
        digits.resize(ctx.f, BigInt::zero());
        PadicCycElement {
            ctx: ctx.clone(),
            shift: self.shift,
            abs: self.abs,
            digits,
        }
    }

    /// Forgets digits beyond `p^abs`.
    pub fn truncate(&self, abs: i64) -> Self {
        if abs >= self.abs {
            return self.clone();
        }
        Self::build(self.ctx.clone(), self.shift, abs, self.digits.clone())
    }

    /// Multiplies by `p^k`.
    pub fn shift_by(&self, k: i64) -> Self {
        if self.abs == INF {
            return self.clone();
        }
        PadicCycElement {
            ctx: self.ctx.clone(),
            shift: self.shift + k,
            abs: self.abs + k,
            digits: self.digits.clone(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let ctx = self.compat(other)?;
        let a = self.promote(&ctx);
        let b = other.promote(&ctx);
        if a.abs == INF {
            return Ok(b);
        }
        if b.abs == INF {
            return Ok(a);
        }
        let abs = a.abs.min(b.abs);
        let s = a.shift.min(b.shift);
        if s >= abs {
            return Ok(Self::zero_to(&ctx, abs));
        }
        let ea = ctx.pk((a.shift - s).min(abs - s));
        let eb = ctx.pk((b.shift - s).min(abs - s));
        let digits = a
            .digits
            .iter()
            .zip(&b.digits)
            .map(|(x, y)| x * ea + y * eb)
            .collect();
        Ok(Self::build(ctx, s, abs, digits))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    fn neg_ref(&self) -> Self {
        if self.is_indistinguishable_from_zero() {
            return self.clone();
        }
        let m = self.ctx.pk(self.abs - self.shift);
        PadicCycElement {
            ctx: self.ctx.clone(),
            shift: self.shift,
            abs: self.abs,
            digits: self.digits.iter().map(|d| bigint_mod(&-d, m)).collect(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        let ctx = self.compat(other)?;
        let a = self.promote(&ctx);
        let b = other.promote(&ctx);
        if a.abs == INF || b.abs == INF {
            return Ok(Self::zero(&ctx));
        }
        let shift = a.shift + b.shift;
        let abs = (a.abs + b.shift).min(b.abs + a.shift);
        if shift >= abs {
            return Ok(Self::zero_to(&ctx, abs));
        }
        let digits = ctx.mul_digits(&a.digits, &b.digits, abs - shift);
        Ok(Self::build(ctx, shift, abs, digits))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_indistinguishable_from_zero() {
            return Err(Error::DivisionByZero);
        }
        let rel = self.abs - self.shift;
        let digits = self.ctx.inv_digits(&self.digits, rel);
        Ok(Self::build(self.ctx.clone(), -self.shift, rel - self.shift, digits))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.try_mul(&other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        Ok(base.pow_big(&BigUint::from(e.unsigned_abs())))
    }

    fn pow_big(&self, e: &BigUint) -> Self {
        if e.is_zero() {
            let rel = if self.abs == INF {
                CONTEXT_CAP as i64
            } else {
                self.relative_precision().max(0)
            };
            return Self::from_int(&self.ctx, 1, rel as u32);
        }
        let mut acc: Option<Self> = None;
        for i in (0..e.bits()).rev() {
            if let Some(a) = acc.as_mut() {
                *a = &*a * &*a;
            }
            if e.bit(i) {
                acc = Some(match acc {
                    None => self.clone(),
                    Some(a) => &a * self,
                });
            }
        }
        acc.expect("nonzero exponent")
    }

    fn require_unit(&self) -> Result<()> {
        if self.is_indistinguishable_from_zero() || self.shift != 0 {
            return Err(Error::NotAUnit);
        }
        Ok(())
    }

    /// Teichmuller representative: the root of unity congruent to `self`
    /// modulo `p`, found by iterating `x -> x^(p^f)`.
    pub fn teichmuller(&self) -> Result<Self> {
        self.require_unit()?;
        let q = BigUint::from(self.ctx.p).pow(self.ctx.f as u32);
        let mut x = self.clone();
        loop {
            let next = x.pow_big(&q);
            if next == x {
                return Ok(x);
            }
            x = next;
        }
    }

    /// `<x> = x / omega(x)`, a principal unit.
    pub fn angle(&self) -> Result<Self> {
        self.try_div(&self.teichmuller()?)
    }

    fn is_principal_unit(&self) -> bool {
        if self.shift != 0 || self.is_indistinguishable_from_zero() {
            return false;
        }
        let pb = BigInt::from(self.ctx.p);
        self.digits
            .iter()
            .enumerate()
            .all(|(i, d)| bigint_mod(&(d - i64::from(i == 0)), &pb).is_zero())
    }

    /// `x^s` for a principal unit `x`.
    pub fn power_st(&self, s: &Exponent) -> Result<Self> {
        if !self.is_principal_unit() {
            return Err(Error::NotPrincipalUnit);
        }
        match s {
            Exponent::Integer(n) => self.pow(*n),
            Exponent::Padic(s) => {
                let s = &s.0;
                if !s.is_exact_zero() && s.shift < 1 {
                    return Err(Error::OutsideConvergenceDisc);
                }
                let one = Self::from_int(&self.ctx, 1, self.abs as u32);
                let t = self.try_sub(&one)?;
                let target = self.abs;
                let tv = t.shift.max(1);
                let mut sum = one.clone();
                let mut coef = one.clone();
                let mut tpow = one;
                let mut j: i64 = 1;
                while j.saturating_mul(tv) < target {
                    let sj = s.try_sub(&Self::from_int(&s.ctx, j - 1, target as u32))?;
                    coef = coef
                        .try_mul(&sj)?
                        .try_div(&Self::from_int(&self.ctx, j, target as u32))?;
                    tpow = &tpow * &t;
                    sum = sum.try_add(&coef.try_mul(&tpow)?)?;
                    j += 1;
                }
                Ok(sum.truncate(target.min(j.saturating_mul(tv))))
            }
        }
    }

    /// The automorphism `theta -> theta^t`.
    pub fn galois(&self, t: u64) -> Self {
        if self.is_indistinguishable_from_zero() || self.ctx.c == 1 {
            return self.clone();
        }
        let rel = self.abs - self.shift;
        let mut acc = vec![BigInt::zero(); self.ctx.f];
        for (i, d) in self.digits.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            let tp = self.ctx.theta_pow(i as u64 * t, rel);
            for (a, b) in acc.iter_mut().zip(tp) {
                *a += d * b;
            }
        }
        Self::build(self.ctx.clone(), self.shift, self.abs, acc)
    }

    /// Frobenius `theta -> theta^p`.
    pub fn frobenius(&self) -> Self {
        self.galois(self.ctx.p % self.ctx.c.max(1))
    }

    /// Inverse Frobenius `theta -> theta^(p^{-1} mod c)`.
    pub fn frobenius_inverse(&self) -> Self {
        self.galois(self.ctx.frob_inv)
    }

    /// Number of leading digits on which `self` and `other` agree, i.e. the
    /// valuation of the difference capped by both precisions.
    pub fn agreement(&self, other: &Self) -> Result<i64> {
        let d = self.try_sub(other)?;
        Ok(d.shift.min(d.abs))
    }

    /// Base-`p` digits of each coefficient, least significant first, over
    /// the known relative precision.
    pub fn digit_table(&self) -> Vec<Vec<u64>> {
        let rel = if self.abs == INF {
            0
        } else {
            self.abs - self.shift
        };
        let pb = BigInt::from(self.ctx.p);
        self.digits
            .iter()
            .map(|d| {
                let mut d = d.clone();
                (0..rel.max(0))
                    .map(|_| {
                        let (q, r) = d.div_rem(&pb);
                        d = q;
                        r.to_u64().unwrap()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_record(&self) -> PadicRecord {
        PadicRecord {
            p: self.ctx.p,
            c: self.ctx.c,
            root_tag: self.ctx.root_tag(),
            valuation: self.valuation(),
            precision: self.precision(),
            digits: self.digit_table(),
        }
    }

    pub fn from_record(rec: &PadicRecord) -> Result<Self> {
        let ctx = context(rec.p, rec.c)?;
        if rec.root_tag != ctx.root_tag() {
            return Err(Error::InvalidArgument(format!(
                "root tag {} does not match {}",
                rec.root_tag,
                ctx.root_tag()
            )));
        }
        let (Some(v), Some(abs)) = (rec.valuation, rec.precision) else {
            return Ok(Self::zero(&ctx));
        };
        let pb = BigInt::from(ctx.p);
        let digits = rec
            .digits
            .iter()
            .map(|ds| {
                ds.iter()
                    .rev()
                    .fold(BigInt::zero(), |acc, &d| acc * &pb + BigInt::from(d))
            })
            .collect();
        Ok(Self::build(ctx, v, abs, digits))
    }

    /// The rational number `q` if this element equals it to full precision.
    pub fn matches_rational(&self, q: &Rational) -> bool {
        if self.abs == INF {
            return q.is_zero();
        }
        let rel = (self.abs - self.shift).clamp(1, CONTEXT_CAP as i64);
        let other = match PadicCycElement::from_rational(&self.ctx, q, rel as u32 + 2) {
            Ok(x) => x,
            Err(_) => return false,
        };
        matches!(self.agreement(&other), Ok(a) if a >= self.abs)
    }
}

/// Exponent for `power_st`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exponent {
    Integer(i64),
    Padic(PadicElement),
}

/// Serialized form of a p-adic element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicRecord {
    pub p: u64,
    pub c: u64,
    pub root_tag: String,
    pub valuation: Option<i64>,
    pub precision: Option<i64>,
    pub digits: Vec<Vec<u64>>,
}

impl fmt::Debug for PadicCycElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PadicCycElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.ctx.p;
        if self.abs == INF {
            return write!(f, "0");
        }
        if self.is_indistinguishable_from_zero() {
            return write!(f, "O({p}^{})", self.abs);
        }
        let table = self.digit_table();
        let coeffs: Vec<String> = table
            .iter()
            .map(|ds| {
                let s: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
                format!("[{}]", s.join(" "))
            })
            .collect();
        write!(
            f,
            "{}*{p}^{} + O({p}^{})",
            coeffs.join("|"),
            self.shift,
            self.abs
        )
    }
}

macro_rules! forward_padic {
    ($tr:ident, $m:ident, $try:ident) => {
        impl<'a> $tr<&'a PadicCycElement> for &'a PadicCycElement {
            type Output = PadicCycElement;
            fn $m(self, rhs: &'a PadicCycElement) -> PadicCycElement {
                self.$try(rhs).expect("incompatible p-adic operands")
            }
        }
        impl $tr<PadicCycElement> for PadicCycElement {
            type Output = PadicCycElement;
            fn $m(self, rhs: PadicCycElement) -> PadicCycElement {
                self.$try(&rhs).expect("incompatible p-adic operands")
            }
        }
    };
}

forward_padic!(Add, add, try_add);
forward_padic!(Sub, sub, try_sub);
forward_padic!(Mul, mul, try_mul);

impl Neg for &PadicCycElement {
    type Output = PadicCycElement;
    fn neg(self) -> PadicCycElement {
        self.neg_ref()
    }
}

impl PadicElement {
    pub fn from_rational(p: u64, q: &Rational, rel: u32) -> Result<Self> {
        let ctx = context(p, 1)?;
        Ok(PadicElement(PadicCycElement::from_rational(&ctx, q, rel)?))
    }

    pub fn from_int(p: u64, n: i64, rel: u32) -> Result<Self> {
        let ctx = context(p, 1)?;
        Ok(PadicElement(PadicCycElement::from_int(&ctx, n, rel)))
    }

    pub fn as_cyc(&self) -> &PadicCycElement {
        &self.0
    }

    pub fn into_cyc(self) -> PadicCycElement {
        self.0
    }

    /// Restricts an element of `Q_p(mu_c)` lying in `Q_p`.
    pub fn from_cyc(x: &PadicCycElement) -> Option<Self> {
        if x.digits[1..].iter().any(|d| !d.is_zero()) {
            return None;
        }
        let ctx = context(x.ctx.p, 1).ok()?;
        Some(PadicElement(PadicCycElement {
            ctx,
            shift: x.shift,
            abs: x.abs,
            digits: vec![x.digits[0].clone()],
        }))
    }

    pub fn prime(&self) -> u64 {
        self.0.prime()
    }

    pub fn valuation(&self) -> Option<i64> {
        self.0.valuation()
    }

    pub fn precision(&self) -> Option<i64> {
        self.0.precision()
    }

    pub fn unit(&self) -> &BigInt {
        &self.0.digits[0]
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.0.try_add(&o.0).map(PadicElement)
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.0.try_sub(&o.0).map(PadicElement)
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.0.try_mul(&o.0).map(PadicElement)
    }

    pub fn try_div(&self, o: &Self) -> Result<Self> {
        self.0.try_div(&o.0).map(PadicElement)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        self.0.pow(e).map(PadicElement)
    }

    pub fn teichmuller(&self) -> Result<Self> {
        self.0.teichmuller().map(PadicElement)
    }

    pub fn angle(&self) -> Result<Self> {
        self.0.angle().map(PadicElement)
    }

    pub fn truncate(&self, abs: i64) -> Self {
        PadicElement(self.0.truncate(abs))
    }

    pub fn agreement(&self, o: &Self) -> Result<i64> {
        self.0.agreement(&o.0)
    }

    pub fn matches_rational(&self, q: &Rational) -> bool {
        self.0.matches_rational(q)
    }

    pub fn to_record(&self) -> PadicRecord {
        self.0.to_record()
    }

    /// The integer in `[0, p^N)` congruent to this element, when it is
    /// integral.
    pub fn residue(&self) -> Option<BigInt> {
        let v = self.valuation()?;
        if v < 0 {
            return None;
        }
        if self.0.is_indistinguishable_from_zero() {
            return Some(BigInt::zero());
        }
        let m = self.0.ctx.pk(self.0.abs);
        Some(bigint_mod(&(self.unit() * self.0.ctx.pk(v)), m))
    }
}

impl fmt::Debug for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Image of `x` under `zeta -> theta`, each coefficient to `rel` digits.
pub fn embed(x: &CyclotomicNumber, ctx: &Arc<PadicContext>, rel: u32) -> Result<PadicCycElement> {
    if x.conductor() != ctx.c {
        return Err(Error::ConductorMismatch {
            left: x.conductor(),
            right: ctx.c,
        });
    }
    let mut acc = PadicCycElement::zero(ctx);
    for (i, q) in x.coeffs().iter().enumerate() {
        if q.is_zero() {
            continue;
        }
        let a = PadicCycElement::from_rational(ctx, q, rel)?;
        let t = PadicCycElement::theta_pow(ctx, i as i64, rel);
        acc = acc.try_add(&a.try_mul(&t)?)?;
    }
    Ok(acc)
}

/// `sum over xi in mu_c, xi != 1, of xi^j / (1 - xi^(p^level))`, exactly.
pub fn measure_weight_exact(c: u64, p: u64, level: u32, j: u64) -> Result<CyclotomicNumber> {
    if c < 2 {
        return Err(Error::InvalidArgument("conductor must be at least 2".into()));
    }
    if c.is_multiple_of(p) {
        return Err(Error::PrimeDividesConductor { p, c });
    }
    let e = crate::fpoly::pow_mod(p, level as u64, c);
    let one = CyclotomicNumber::one(c);
    let mut acc = CyclotomicNumber::zero(c);
    for k in 1..c as i64 {
        let num = CyclotomicNumber::root_of_unity(c, k * (j % c) as i64);
        let den = &one - &CyclotomicNumber::root_of_unity(c, k * e as i64);
        acc = &acc + &num.try_div(&den)?;
    }
    Ok(acc)
}

/// The same weight computed inside `Q_p(mu_c)` from `theta`.
pub fn measure_weight(
    ctx: &Arc<PadicContext>,
    level: u32,
    j: u64,
    rel: u32,
) -> Result<PadicCycElement> {
    let c = ctx.c;
    if c < 2 {
        return Err(Error::InvalidArgument("conductor must be at least 2".into()));
    }
    let e = crate::fpoly::pow_mod(ctx.p, level as u64, c);
    let one = PadicCycElement::from_int(ctx, 1, rel);
    let mut acc = PadicCycElement::zero(ctx);
    for k in 1..c {
        let num = PadicCycElement::theta_pow(ctx, (k * (j % c)) as i64, rel);
        let den = one.try_sub(&PadicCycElement::theta_pow(ctx, (k * e) as i64, rel))?;
        acc = acc.try_add(&num.try_div(&den)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::{rat, rat_int};

    fn qp(p: u64, n: i64, rel: u32) -> PadicCycElement {
        PadicCycElement::from_int(&context(p, 1).unwrap(), n, rel)
    }

    fn residue(x: &PadicCycElement) -> BigInt {
        PadicElement::from_cyc(x).unwrap().residue().unwrap()
    }

    #[test]
    fn hensel_examples() {
        let h = hensel_factor(2, 3, 3).unwrap();
        assert_eq!(h, vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)]);
        let h = hensel_factor(5, 2, 4).unwrap();
        assert_eq!(h, vec![BigInt::from(1), BigInt::from(1)]);
        let h = hensel_factor(7, 3, 2).unwrap();
        // root 18: 18^2 + 18 + 1 = 343
        assert_eq!(h, vec![BigInt::from(49 - 18), BigInt::from(1)]);
        assert_eq!(
            hensel_factor(3, 6, 2),
            Err(Error::PrimeDividesConductor { p: 3, c: 6 })
        );
    }

    #[test]
    fn hensel_factor_divides_phi() {
        for (p, c) in [(2u64, 7u64), (3, 13), (5, 12), (7, 9), (11, 5)] {
            let n = 6;
            let h = hensel_factor(p, c, n).unwrap();
            let phi: Vec<Rational> = cyclotomic_polynomial(c)
                .into_iter()
                .map(Rational::from_integer)
                .collect();
            let hq: Vec<Rational> = h.iter().cloned().map(Rational::from_integer).collect();
            // remainder of Phi_c by h must vanish mod p^n
            let mut rem = phi;
            let d = hq.len() - 1;
            for k in (d..rem.len()).rev() {
                let coef = rem[k].clone();
                for (i, b) in hq.iter().enumerate() {
                    rem[k - d + i] -= &coef * b;
                }
            }
            let m = BigInt::from(p).pow(n);
            for r in &rem[..d] {
                assert!(r.is_integer());
                assert!((r.to_integer() % &m).is_zero(), "p={p} c={c}");
            }
            assert_eq!(d as u64, multiplicative_order(p, c));
        }
    }

    #[test]
    fn embed_examples() {
        let ctx = context(7, 3).unwrap();
        let z = embed(&CyclotomicNumber::root_of_unity(3, 1), &ctx, 2).unwrap();
        assert_eq!(z.unit_digits()[0], BigInt::from(18));
        let ctx5 = context(5, 2).unwrap();
        let m = embed(&CyclotomicNumber::from_int(2, -1), &ctx5, 3).unwrap();
        assert_eq!(m.unit_digits()[0], BigInt::from(124));
        let one = embed(&CyclotomicNumber::one(2), &ctx5, 4).unwrap();
        assert_eq!(one, PadicCycElement::from_int(&ctx5, 1, 4));
    }

    #[test]
    fn teichmuller_examples() {
        let two = qp(5, 2, 2);
        assert_eq!(residue(&two.teichmuller().unwrap()), BigInt::from(7));
        assert_eq!(residue(&two.angle().unwrap()), BigInt::from(11));
        let one = qp(5, 1, 6);
        assert_eq!(one.teichmuller().unwrap(), one);
        let m = qp(3, -1, 3);
        assert_eq!(m.teichmuller().unwrap(), m);
        assert_eq!(m.angle().unwrap(), qp(3, 1, 3));
        assert_eq!(qp(5, 5, 4).teichmuller(), Err(Error::NotAUnit));
    }

    #[test]
    fn power_examples() {
        let x = qp(5, 11, 2);
        let inv = x.power_st(&Exponent::Integer(-1)).unwrap();
        assert_eq!(residue(&inv), BigInt::from(16));
        let y = qp(5, 6, 2);
        assert_eq!(residue(&y.power_st(&Exponent::Integer(2)).unwrap()), BigInt::from(11));
        let one = qp(5, 1, 5);
        let s = PadicElement::from_rational(5, &rat(5, 3), 5).unwrap();
        assert_eq!(one.power_st(&Exponent::Padic(s)).unwrap(), one);
        let bad = PadicElement::from_rational(5, &rat(1, 3), 5).unwrap();
        assert_eq!(
            qp(5, 6, 5).power_st(&Exponent::Padic(bad)),
            Err(Error::OutsideConvergenceDisc)
        );
        assert_eq!(qp(5, 2, 5).power_st(&Exponent::Integer(1)), Err(Error::NotPrincipalUnit));
    }

    #[test]
    fn binomial_series_matches_integer_power() {
        // s = 5 as a p-adic number versus the integer power
        let x = qp(5, 6, 10);
        let s = PadicElement::from_int(5, 5, 10).unwrap();
        let a = x.power_st(&Exponent::Padic(s)).unwrap();
        let b = x.pow(5).unwrap();
        assert!(a.agreement(&b).unwrap() >= a.precision().unwrap());
        // (x^(5/2))^2 = x^5 with 5/2 a p-adic number of valuation 1
        let half = PadicElement::from_rational(5, &rat(5, 2), 10).unwrap();
        let r = x.power_st(&Exponent::Padic(half)).unwrap();
        let sq = &r * &r;
        assert!(sq.agreement(&b).unwrap() >= sq.precision().unwrap().min(8));
    }

    #[test]
    fn frobenius_examples() {
        let ctx = context(2, 3).unwrap();
        let z = embed(&CyclotomicNumber::root_of_unity(3, 1), &ctx, 8).unwrap();
        let z2 = embed(&CyclotomicNumber::root_of_unity(3, 2), &ctx, 8).unwrap();
        assert_eq!(z.frobenius_inverse(), z2);
        assert_eq!(z.frobenius().frobenius_inverse(), z);
        let five = PadicCycElement::from_int(&ctx, 5, 8);
        assert_eq!(five.frobenius_inverse(), five);
        let ctx7 = context(7, 3).unwrap();
        let w = embed(&CyclotomicNumber::root_of_unity(3, 1), &ctx7, 8).unwrap();
        assert_eq!(w.frobenius_inverse(), w);
    }

    #[test]
    fn measure_weight_examples() {
        assert_eq!(
            measure_weight_exact(2, 5, 1, 0).unwrap(),
            CyclotomicNumber::from_rational(2, rat(1, 2))
        );
        assert_eq!(
            measure_weight_exact(2, 5, 1, 1).unwrap(),
            CyclotomicNumber::from_rational(2, rat(-1, 2))
        );
        for (c, p) in [(3u64, 5u64), (4, 3), (5, 7), (6, 5), (2, 3)] {
            let ctx = context(p, c).unwrap();
            for level in 1..3 {
                for j in 0..2 * c {
                    let exact = measure_weight_exact(c, p, level, j).unwrap();
                    let direct = measure_weight(&ctx, level, j, 10).unwrap();
                    let emb = embed(&exact, &ctx, 10).unwrap();
                    assert!(direct.agreement(&emb).unwrap() >= 10, "c={c} p={p}");
                    // the weight is Galois invariant, hence rational
                    assert!(exact.as_rational().is_some());
                }
            }
        }
        assert!(measure_weight_exact(1, 5, 1, 0).is_err());
        assert!(measure_weight_exact(5, 5, 1, 0).is_err());
    }

    #[test]
    fn precision_tracking() {
        let ctx = context(5, 1).unwrap();
        let a = PadicCycElement::from_rational(&ctx, &rat(1, 25), 4).unwrap();
        assert_eq!(a.valuation(), Some(-2));
        assert_eq!(a.precision(), Some(2));
        let b = PadicCycElement::from_rational(&ctx, &rat_int(26), 4).unwrap();
        let d = b.try_sub(&PadicCycElement::from_int(&ctx, 1, 4)).unwrap();
        assert_eq!(d.valuation(), Some(2));
        assert_eq!(d.precision(), Some(4));
        let e = d.inv().unwrap();
        assert_eq!(e.valuation(), Some(-2));
        assert_eq!(e.precision(), Some(0));
    }

    #[test]
    fn record_round_trip() {
        let ctx = context(3, 4).unwrap();
        let x = embed(
            &(&CyclotomicNumber::root_of_unity(4, 1) + &CyclotomicNumber::from_rational(4, rat(3, 2))),
            &ctx,
            7,
        )
        .unwrap();
        let rec = x.to_record();
        assert_eq!(PadicCycElement::from_record(&rec).unwrap(), x);
        assert!(rec.root_tag.contains("h=["));
    }
}
