//! Dense polynomials over `F_p`, coefficients lowest degree first, and
//! equal-degree factorization.

use num_bigint::BigUint;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type FPoly = Vec<u64>;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

pub fn trim(a: &mut FPoly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

pub fn degree(a: &FPoly) -> Option<usize> {
    if a.is_empty() {
        None
    } else {
        Some(a.len() - 1)
    }
}

pub fn add(a: &[u64], b: &[u64], p: u64) -> FPoly {
    let n = a.len().max(b.len());
    let mut out: FPoly = (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p)
        .collect();
    trim(&mut out);
    out
}

pub fn sub(a: &[u64], b: &[u64], p: u64) -> FPoly {
    let n = a.len().max(b.len());
    let mut out: FPoly = (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0)) % p)
        .collect();
    trim(&mut out);
    out
}

pub fn mul(a: &[u64], b: &[u64], p: u64) -> FPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u128; a.len() + b.len() - 1];
    let pp = p as u128;
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u128 * y as u128) % pp;
        }
    }
    let mut out: FPoly = out.into_iter().map(|x| x as u64).collect();
    trim(&mut out);
    out
}

pub fn scale(a: &[u64], s: u64, p: u64) -> FPoly {
    let mut out: FPoly = a.iter().map(|&x| mulmod(x, s, p)).collect();
    trim(&mut out);
    out
}

pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (FPoly, FPoly) {
    let mut b = b.to_vec();
    trim(&mut b);
    assert!(!b.is_empty(), "polynomial division by zero");
    let mut rem = a.to_vec();
    trim(&mut rem);
    let db = b.len() - 1;
    if rem.len() <= db {
        return (Vec::new(), rem);
    }
    let lead_inv = inv_mod(b[db], p);
    let mut q = vec![0u64; rem.len() - db];
    for k in (db..rem.len()).rev() {
        if rem[k] == 0 {
            continue;
        }
        let coef = mulmod(rem[k], lead_inv, p);
        q[k - db] = coef;
        for (i, &bi) in b.iter().enumerate() {
            let t = mulmod(coef, bi, p);
            rem[k - db + i] = (rem[k - db + i] + p - t) % p;
        }
    }
    trim(&mut rem);
    trim(&mut q);
    (q, rem)
}

pub fn rem(a: &[u64], b: &[u64], p: u64) -> FPoly {
    divrem(a, b, p).1
}

pub fn monic(a: &[u64], p: u64) -> FPoly {
    match a.last() {
        None => Vec::new(),
        Some(&lead) => scale(a, inv_mod(lead, p), p),
    }
}

pub fn gcd(a: &[u64], b: &[u64], p: u64) -> FPoly {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(&x, &y, p);
        x = std::mem::replace(&mut y, r);
    }
    monic(&x, p)
}

/// Returns `(g, s, t)` with `s*a + t*b = g`, `g` monic.
pub fn ext_gcd(a: &[u64], b: &[u64], p: u64) -> (FPoly, FPoly, FPoly) {
    let mut r0 = a.to_vec();
    let mut r1 = b.to_vec();
    trim(&mut r0);
    trim(&mut r1);
    let (mut s0, mut s1): (FPoly, FPoly) = (vec![1], Vec::new());
    let (mut t0, mut t1): (FPoly, FPoly) = (Vec::new(), vec![1]);
    while !r1.is_empty() {
        let (q, r) = divrem(&r0, &r1, p);
        let s2 = sub(&s0, &mul(&q, &s1, p), p);
        let t2 = sub(&t0, &mul(&q, &t1, p), p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    let lead = *r0.last().expect("gcd of zero polynomials");
    let li = inv_mod(lead, p);
    (scale(&r0, li, p), scale(&s0, li, p), scale(&t0, li, p))
}

pub fn mulmod_poly(a: &[u64], b: &[u64], m: &[u64], p: u64) -> FPoly {
    rem(&mul(a, b, p), m, p)
}

pub fn powmod_poly(a: &[u64], e: &BigUint, m: &[u64], p: u64) -> FPoly {
    let mut acc: FPoly = rem(&[1], m, p);
    let base = rem(a, m, p);
    for i in (0..e.bits()).rev() {
        acc = mulmod_poly(&acc, &acc, m, p);
        if e.bit(i) {
            acc = mulmod_poly(&acc, &base, m, p);
        }
    }
    acc
}

/// Splits a monic squarefree `g` whose irreducible factors all have degree
/// `f` into those factors, sorted lexicographically by coefficient vector.
pub fn equal_degree_factor(g: &[u64], f: usize, p: u64, seed: u64) -> Vec<FPoly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    edf_rec(&monic(g, p), f, p, &mut rng, &mut out);
    out.sort();
    out
}

fn edf_rec(g: &FPoly, f: usize, p: u64, rng: &mut ChaCha8Rng, out: &mut Vec<FPoly>) {
    let n = g.len() - 1;
    if n == 0 {
        return;
    }
    if n == f {
        out.push(g.clone());
        return;
    }
    loop {
        let mut a: FPoly = (0..n).map(|_| rng.gen_range(0..p)).collect();
        trim(&mut a);
        if a.is_empty() {
            continue;
        }
        let b = if p == 2 {
            // trace to F_2
            let mut t = a.clone();
            let mut acc = a.clone();
            for _ in 1..f {
                t = mulmod_poly(&t, &t, g, p);
                acc = add(&acc, &t, p);
            }
            acc
        } else {
            let e = (BigUint::from(p).pow(f as u32) - 1u32) / 2u32;
            sub(&powmod_poly(&a, &e, g, p), &[1], p)
        };
        let d = gcd(&b, g, p);
        let dd = d.len() - 1;
        if dd > 0 && dd < n {
            let (q, r) = divrem(g, &d, p);
            debug_assert!(r.is_empty());
            edf_rec(&d, f, p, rng, out);
            edf_rec(&monic(&q, p), f, p, rng, out);
            return;
        }
    }
}
