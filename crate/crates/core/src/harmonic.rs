//! Cyclotomic multiple harmonic sums and values, their iterated-integral
//! generating series, the gap-constrained variant sums and their
//! quasi-polynomial coefficient tables.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::combinatorics::{
    enumerate_t, enumerate_u, full_support_cells, weight_word, HarmonicWord, Part, PartitionTriple,
};
use crate::cyclotomic::{rat_int, CyclotomicNumber, GroupRingAccumulator, Rational, RootOfUnity};
use crate::error::{Error, Result};
use crate::padic::{context, embed, PadicContext, PadicCycElement};

static BERNOULLI: Lazy<RwLock<Vec<Rational>>> =
    Lazy::new(|| RwLock::new(vec![Rational::one()]));

/// Bernoulli numbers with `B_1 = -1/2`, from
/// `sum_{k<=n} C(n+1, k) B_k = 0`.
pub fn bernoulli(n: usize) -> Rational {
    if let Some(b) = BERNOULLI.read().get(n) {
        return b.clone();
    }
    let mut table = BERNOULLI.write();
    while table.len() <= n {
        let m = table.len();
        let mut acc = Rational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in table.iter().enumerate() {
            acc += bk * Rational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        table.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    table[n].clone()
}

/// `C(n, k)` for any integer `n`.
pub fn binomial(n: i64, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k as i64 {
        acc *= BigInt::from(n - i);
    }
    let mut fact = BigInt::one();
    for i in 1..=k as i64 {
        fact *= BigInt::from(i);
    }
    acc / fact
}

fn power_rational(base: u64, e: u32) -> Rational {
    Rational::from_integer(BigInt::from(base).pow(e))
}

/// `H_m(w)`: the sum over `0 < m_1 < ... < m_k < m` of
/// `prod (eps_{i+1}/eps_i)^{m_i} / m_i^{n_i}` with `eps_{k+1} = 1`.
pub fn harmonic_sum(m: u64, w: &HarmonicWord) -> CyclotomicNumber {
    let c = w.twists.first().map_or(1, |t| t.conductor());
    let k = w.depth();
    if k == 0 {
        return CyclotomicNumber::one(c);
    }
    let ratios = w.ratios();
    // acc[j]: sums over chains of length j ending below the current index
    let mut acc: Vec<GroupRingAccumulator> = (0..=k).map(|_| GroupRingAccumulator::new(c)).collect();
    acc[0].add_term(0, &Rational::one());
    for t in 1..m {
        for j in (1..=k).rev() {
            if acc[j - 1].coeffs().iter().all(|q| q.is_zero()) {
                continue;
            }
            let scale = power_rational(t, w.exponents[j - 1]).recip();
            let shift = ratios[j - 1].pow(t as i64).exponent();
            let mut term = GroupRingAccumulator::new(c);
            for (e, q) in acc[j - 1].coeffs().iter().enumerate() {
                if !q.is_zero() {
                    term.add_term(e as u64, &(q * &scale));
                }
            }
            acc[j].add_shifted(shift, &term);
        }
    }
    acc[k].to_number()
}

static HARMONIC_CACHE: Lazy<RwLock<HashMap<(u64, HarmonicWord), CyclotomicNumber>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// `harmonic_sum` with a shared cache.
pub fn harmonic_sum_cached(m: u64, w: &HarmonicWord) -> CyclotomicNumber {
    let key = (m, w.clone());
    if let Some(v) = HARMONIC_CACHE.read().get(&key) {
        return v.clone();
    }
    let v = harmonic_sum(m, w);
    HARMONIC_CACHE.write().insert(key, v.clone());
    v
}

static CMHV_CHECKS: AtomicU64 = AtomicU64::new(0);

/// Number of multiple harmonic values whose valuation has been checked
/// against their weight.
pub fn cmhv_checks() -> u64 {
    CMHV_CHECKS.load(Ordering::Relaxed)
}

/// `p^{weight} H_p(w)` in `Q_p(mu_c)`, each coefficient of `H_p` embedded to
/// `rel` digits. Panics if the valuation falls below the weight.
pub fn cmhv(w: &HarmonicWord, ctx: &Arc<PadicContext>, rel: u32) -> Result<PadicCycElement> {
    let c = w.twists.first().map_or(ctx.conductor(), |t| t.conductor());
    if c != ctx.conductor() {
        return Err(Error::ConductorMismatch {
            left: c,
            right: ctx.conductor(),
        });
    }
    let h = harmonic_sum_cached(ctx.prime(), w);
    let v = embed(&h, ctx, rel)?.shift_by(w.weight() as i64);
    if let Some(val) = v.valuation() {
        assert!(
            val >= w.weight() as i64,
            "valuation {val} below weight {} for {w} at p = {}",
            w.weight(),
            ctx.prime()
        );
    }
    CMHV_CHECKS.fetch_add(1, Ordering::Relaxed);
    Ok(v)
}

/// A form `dz/z` or `dz/(z - eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Zero,
    Pole(RootOfUnity),
}

/// The forms whose iterated integral generates `H_m(w) / m^l` for `l >= 1`,
/// up to the sign `(-1)^{r+1}`.
pub fn generating_forms(word: &HarmonicWord, l: u32) -> Vec<Form> {
    let c = word.twists[0].conductor();
    let mut forms = vec![Form::Zero; l as usize - 1];
    forms.push(Form::Pole(RootOfUnity::one(c)));
    for i in (0..word.depth()).rev() {
        forms.extend(std::iter::repeat_n(Form::Zero, word.exponents[i] as usize - 1));
        forms.push(Form::Pole(word.twists[i]));
    }
    forms
}

/// Coefficients of `z^0..=z^order` of `I(eta_n, ..., eta_1)`, the forms
/// listed outermost first; `eta_1` is integrated first.
pub fn iterated_integral_coeffs(
    forms: &[Form],
    c: u64,
    order: usize,
) -> Result<Vec<CyclotomicNumber>> {
    if forms.last() == Some(&Form::Zero) {
        return Err(Error::InvalidArgument("innermost form must not be dz/z".into()));
    }
    let mut f: Vec<CyclotomicNumber> = (0..=order).map(|_| CyclotomicNumber::zero(c)).collect();
    f[0] = CyclotomicNumber::one(c);
    for form in forms.iter().rev() {
        let mut g: Vec<CyclotomicNumber> = (0..=order).map(|_| CyclotomicNumber::zero(c)).collect();
        match form {
            Form::Zero => {
                for m in 1..=order {
                    g[m] = f[m].scale(&Rational::new(BigInt::one(), BigInt::from(m)));
                }
            }
            Form::Pole(eps) => {
                if eps.conductor() != c {
                    return Err(Error::ConductorMismatch {
                        left: eps.conductor(),
                        right: c,
                    });
                }
                // 1/(z - eps) = -sum_k eps^{-k-1} z^k
                let mut prod: Vec<GroupRingAccumulator> =
                    (0..order).map(|_| GroupRingAccumulator::new(c)).collect();
                for (a, fa) in f.iter().enumerate().take(order) {
                    if fa.is_zero() {
                        continue;
                    }
                    let mut fa_ring = GroupRingAccumulator::new(c);
                    for (e, q) in fa.coeffs().iter().enumerate() {
                        if !q.is_zero() {
                            fa_ring.add_term(e as u64, &(-q));
                        }
                    }
                    for k in 0..order - a {
                        let shift = eps.pow(-(k as i64) - 1).exponent();
                        prod[a + k].add_shifted(shift, &fa_ring);
                    }
                }
                for m in 0..order {
                    g[m + 1] = prod[m]
                        .to_number()
                        .scale(&Rational::new(BigInt::one(), BigInt::from(m + 1)));
                }
            }
        }
        f = g;
    }
    Ok(f)
}

/// Direct evaluation of the gap-constrained sum over `u_1 < h` and
/// `u_{i-1} + kappa_{i-1} h < u_i < u_{i-1} + (kappa_{i-1} + 1) h` of
/// `prod (eps_{i+1}/eps_i)^{u_i} u_i^{l_i}` with `eps_{r+1} = 1`.
pub fn s_variant_bruteforce(kappa: &[u64], h: u64, l: &[u32], eps: &[RootOfUnity]) -> CyclotomicNumber {
    let r = l.len();
    assert_eq!(eps.len(), r);
    assert_eq!(kappa.len() + 1, r);
    let c = eps[0].conductor();
    let ratios: Vec<u64> = (0..r)
        .map(|i| {
            let next = if i + 1 < r { eps[i + 1] } else { RootOfUnity::one(c) };
            next.div(eps[i]).exponent()
        })
        .collect();
    struct Walk<'a> {
        h: u64,
        c: u64,
        kappa: &'a [u64],
        l: &'a [u32],
        ratios: &'a [u64],
        acc: Vec<BigInt>,
    }
    fn rec(w: &mut Walk<'_>, i: usize, prev: u64, term: &BigInt, e: u64) {
        let range = if i == 0 {
            0..w.h
        } else {
            prev + w.kappa[i - 1] * w.h + 1..prev + (w.kappa[i - 1] + 1) * w.h
        };
        let last = i + 1 == w.l.len();
        for u in range {
            let t = term * BigInt::from(u).pow(w.l[i]);
            let e2 = (e + w.ratios[i] * (u % w.c)) % w.c;
            if last {
                w.acc[e2 as usize] += t;
            } else {
                rec(w, i + 1, u, &t, e2);
            }
        }
    }
    let mut walk = Walk {
        h,
        c,
        kappa,
        l,
        ratios: &ratios,
        acc: vec![BigInt::zero(); c as usize],
    };
    rec(&mut walk, 0, 0, &BigInt::one(), 0);
    let coeffs: Vec<Rational> = walk.acc.into_iter().map(Rational::from_integer).collect();
    CyclotomicNumber::from_group_ring(c, &coeffs)
}

/// Coefficients `B_{l,xi}` with `S(h) = sum B_{l,xi} h^l xi^h` for all
/// `h >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BTable {
    pub l: Vec<u32>,
    pub eps: Vec<RootOfUnity>,
    pub kappa: Vec<u64>,
    c: u64,
    entries: BTreeMap<(u32, u64), CyclotomicNumber>,
}

impl BTable {
    fn from_terms(
        l: &[u32],
        eps: &[RootOfUnity],
        kappa: &[u64],
        c: u64,
        terms: BTreeMap<(u32, u64), CyclotomicNumber>,
    ) -> Self {
        BTable {
            l: l.to_vec(),
            eps: eps.to_vec(),
            kappa: kappa.to_vec(),
            c,
            entries: terms.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn conductor(&self) -> u64 {
        self.c
    }

    /// Nonzero entries keyed by `(l, exponent of xi)`.
    pub fn entries(&self) -> &BTreeMap<(u32, u64), CyclotomicNumber> {
        &self.entries
    }

    pub fn get(&self, l: u32, xi: RootOfUnity) -> CyclotomicNumber {
        self.entries
            .get(&(l, xi.exponent()))
            .cloned()
            .unwrap_or_else(|| CyclotomicNumber::zero(self.c))
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.entries.keys().map(|&(l, _)| l).max()
    }

    pub fn eval(&self, h: u64) -> CyclotomicNumber {
        let mut acc = GroupRingAccumulator::new(self.c);
        for ((l, xi), b) in &self.entries {
            let hl = power_rational(h, *l);
            let shift = (xi * (h % self.c)) % self.c;
            let mut term = GroupRingAccumulator::new(self.c);
            let scaled = b.scale(&hl);
            for (e, q) in scaled.coeffs().iter().enumerate() {
                if !q.is_zero() {
                    term.add_term(e as u64, q);
                }
            }
            acc.add_shifted(shift, &term);
        }
        acc.to_number()
    }
}

type QuasiPoly = BTreeMap<(u32, u64), CyclotomicNumber>;

fn qp_add(acc: &mut QuasiPoly, key: (u32, u64), v: &CyclotomicNumber) {
    match acc.get_mut(&key) {
        Some(x) => *x += v,
        None => {
            acc.insert(key, v.clone());
        }
    }
}

static POLY_P: Lazy<RwLock<Vec<BTreeMap<(u32, u32, u32), BigInt>>>> = Lazy::new(|| {
    let mut p0 = BTreeMap::new();
    p0.insert((0, 0, 0), BigInt::one());
    p0.insert((0, 1, 0), BigInt::from(-1));
    RwLock::new(vec![p0])
});

/// `P_l(x, y, E)` with `sum_{u<h} u^l E^u = P_l(h, E^h, E) / (1 - E)^{l+1}`,
/// keyed by `(deg_x, deg_y, deg_E)`.
fn geometric_numerator(l: usize) -> BTreeMap<(u32, u32, u32), BigInt> {
    if let Some(p) = POLY_P.read().get(l) {
        return p.clone();
    }
    let mut table = POLY_P.write();
    while table.len() <= l {
        let k = table.len() - 1;
        let prev = &table[k];
        // D = x y d/dy + E d/dE
        let mut d: BTreeMap<(u32, u32, u32), BigInt> = BTreeMap::new();
        for (&(a, b, e), v) in prev {
            if b > 0 {
                *d.entry((a + 1, b, e)).or_default() += v * BigInt::from(b);
            }
            if e > 0 {
                *d.entry((a, b, e)).or_default() += v * BigInt::from(e);
            }
        }
        let mut next: BTreeMap<(u32, u32, u32), BigInt> = BTreeMap::new();
        for (&(a, b, e), v) in &d {
            *next.entry((a, b, e)).or_default() += v;
            *next.entry((a, b, e + 1)).or_default() -= v;
        }
        for (&(a, b, e), v) in prev {
            *next.entry((a, b, e + 1)).or_default() += v * BigInt::from(k + 1);
        }
        next.retain(|_, v| !v.is_zero());
        table.push(next);
    }
    table[l].clone()
}

/// Depth-one table: `sum_{u<h} eps^{-u} u^l`.
fn base_table(l: u32, eps: RootOfUnity) -> QuasiPoly {
    let c = eps.conductor();
    let mut out = QuasiPoly::new();
    if eps.is_one() {
        let inv = Rational::new(BigInt::one(), BigInt::from(l + 1));
        for k in 1..=l + 1 {
            let b = bernoulli((l + 1 - k) as usize);
            if b.is_zero() {
                continue;
            }
            let coef = &inv * Rational::from_integer(binomial(l as i64 + 1, k)) * b;
            out.insert((k, 0), CyclotomicNumber::from_rational(c, coef));
        }
        return out;
    }
    let e = eps.inv();
    let poly = geometric_numerator(l as usize);
    let mut alpha = GroupRingAccumulator::new(c);
    let mut beta: BTreeMap<u32, GroupRingAccumulator> = BTreeMap::new();
    for (&(a, b, k), v) in &poly {
        let q = Rational::from_integer(v.clone());
        let shift = e.pow(k as i64).exponent();
        if b == 0 {
            alpha.add_term(shift, &q);
        } else {
            beta.entry(a)
                .or_insert_with(|| GroupRingAccumulator::new(c))
                .add_term(shift, &q);
        }
    }
    let one = CyclotomicNumber::one(c);
    let den = (&one - &e.to_number())
        .pow(l as i64 + 1)
        .expect("nonzero")
        .inv()
        .expect("nonzero");
    out.insert((0, 0), &alpha.to_number() * &den);
    for (a, acc) in beta {
        out.insert((a, e.exponent()), &acc.to_number() * &den);
    }
    out.retain(|_, v| !v.is_zero());
    out
}

type BKey = (u64, Vec<u32>, Vec<u64>, Vec<u64>);

static B_CACHE: Lazy<RwLock<HashMap<BKey, Arc<BTable>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// The table of `B_{l,xi}` for the gap-constrained sum with exponents `l`,
/// twists `eps` and gaps `kappa` (`kappa.len() + 1 == l.len()`), built by
/// peeling off the last variable.
pub fn b_coefficients(l: &[u32], eps: &[RootOfUnity], kappa: &[u64]) -> Arc<BTable> {
    let r = l.len();
    assert!(r >= 1 && eps.len() == r && kappa.len() + 1 == r, "shape mismatch");
    let c = eps[0].conductor();
    let key: BKey = (
        c,
        l.to_vec(),
        eps.iter().map(|e| e.exponent()).collect(),
        kappa.to_vec(),
    );
    if let Some(t) = B_CACHE.read().get(&key) {
        return t.clone();
    }
    let terms = if r == 1 {
        base_table(l[0], eps[0])
    } else {
        induction_step(l, eps, kappa, c)
    };
    let table = Arc::new(BTable::from_terms(l, eps, kappa, c, terms));
    B_CACHE.write().insert(key, table.clone());
    table
}

fn induction_step(l: &[u32], eps: &[RootOfUnity], kappa: &[u64], c: u64) -> QuasiPoly {
    let r = l.len() - 1;
    let (last_l, last_eps, last_k) = (l[r], eps[r], kappa[r - 1]);
    let inner = base_table(last_l, last_eps);
    let mut out = QuasiPoly::new();
    let mut head_l = l[..r].to_vec();
    let head_kappa = &kappa[..r - 1];
    let base_l = head_l[r - 1];
    // F(u_r + (kappa+1) h) - F(u_r + kappa h)
    for (&(deg, xi_e), b) in &inner {
        let xi = RootOfUnity::new(c, xi_e as i64);
        let twists: Vec<RootOfUnity> = eps[..r]
            .iter()
            .map(|e| e.div(last_eps).div(xi))
            .collect();
        for lt in 0..=deg {
            head_l[r - 1] = base_l + lt;
            let sub = b_coefficients(&head_l, &twists, head_kappa);
            let binom = Rational::from_integer(binomial(deg as i64, lt));
            let d = deg - lt;
            for (shift_k, sign) in [(last_k + 1, 1i64), (last_k, -1i64)] {
                let coef = &binom * power_rational(shift_k, d) * rat_int(sign);
                if coef.is_zero() {
                    continue;
                }
                let root = xi.pow(shift_k as i64).exponent();
                let factor = b.scale(&coef);
                for (&(sl, sx), sv) in sub.entries() {
                    let key = (sl + d, (sx + root) % c);
                    qp_add(&mut out, key, &(&factor * sv));
                }
            }
        }
    }
    // the point u_r + kappa h
    let root = last_eps.pow(-(last_k as i64)).exponent();
    for lt in 0..=last_l {
        head_l[r - 1] = base_l + lt;
        let sub = b_coefficients(&head_l, &eps[..r], head_kappa);
        let d = last_l - lt;
        let coef = -Rational::from_integer(binomial(last_l as i64, lt)) * power_rational(last_k, d);
        if coef.is_zero() {
            continue;
        }
        for (&(sl, sx), sv) in sub.entries() {
            let key = (sl + d, (sx + root) % c);
            qp_add(&mut out, key, &sv.scale(&coef));
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// The same table by solving `sum B_{l,xi} h^l xi^h = S(h)`, `h = 1..=samples`,
/// exactly over `Q(mu_c)`, with `S` evaluated by direct summation.
pub fn b_coefficients_oracle(
    l: &[u32],
    eps: &[RootOfUnity],
    kappa: &[u64],
    samples: u64,
) -> Result<BTable> {
    let r = l.len();
    let c = eps[0].conductor();
    let deg = l.iter().sum::<u32>() + r as u32;
    let unknowns: Vec<(u32, u64)> = (0..=deg).flat_map(|a| (0..c).map(move |x| (a, x))).collect();
    let n = unknowns.len();
    if (samples as usize) < n {
        return Err(Error::InvalidArgument(format!(
            "need at least {n} samples, got {samples}"
        )));
    }
    let mut rows: Vec<Vec<CyclotomicNumber>> = Vec::with_capacity(samples as usize);
    for h in 1..=samples {
        let mut row: Vec<CyclotomicNumber> = unknowns
            .iter()
            .map(|&(a, x)| {
                CyclotomicNumber::root_of_unity(c, (x * (h % c)) as i64).scale(&power_rational(h, a))
            })
            .collect();
        row.push(s_variant_bruteforce(kappa, h, l, eps));
        rows.push(row);
    }
    let solution = solve_linear(rows, n)?;
    let terms: QuasiPoly = unknowns.into_iter().zip(solution).collect();
    Ok(BTable::from_terms(l, eps, kappa, c, terms))
}

/// Gaussian elimination on an augmented system with `n` unknowns; extra
/// rows must be consistent.
fn solve_linear(mut rows: Vec<Vec<CyclotomicNumber>>, n: usize) -> Result<Vec<CyclotomicNumber>> {
    let m = rows.len();
    let mut pivot_row = 0;
    for col in 0..n {
        let Some(pr) = (pivot_row..m).find(|&i| !rows[i][col].is_zero()) else {
            return Err(Error::SingularSystem);
        };
        rows.swap(pivot_row, pr);
        let inv = rows[pivot_row][col].inv()?;
        for x in rows[pivot_row].iter_mut().skip(col) {
            *x = &*x * &inv;
        }
        let pivot = rows[pivot_row].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == pivot_row || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot).skip(col) {
                *x = &*x - &(&f * y);
            }
        }
        pivot_row += 1;
    }
    for row in &rows[n..] {
        if !row[n].is_zero() {
            return Err(Error::SingularSystem);
        }
    }
    Ok(rows[..n].iter().map(|row| row[n].clone()).collect())
}

/// Lower bound `-r (1 + log(sum l + r) / log p)` for the valuations.
pub fn b_valuation_bound(l_total: u32, r: usize, p: u64) -> f64 {
    let r = r as f64;
    -r * (1.0 + (l_total as f64 + r).ln() / (p as f64).ln())
}

/// Exact `p`-adic valuation of a nonzero element of `Q(mu_c)` in the chosen
/// embedding.
pub fn valuation_at(x: &CyclotomicNumber, ctx: &Arc<PadicContext>) -> Result<Option<i64>> {
    if x.is_zero() {
        return Ok(None);
    }
    let mut rel = 16;
    loop {
        let e = embed(x, ctx, rel)?;
        if !e.is_indistinguishable_from_zero() {
            return Ok(e.valuation());
        }
        rel *= 2;
        if rel > crate::padic::CONTEXT_CAP {
            return Err(Error::Precision("valuation beyond context cap".into()));
        }
    }
}

/// Whether every entry meets the valuation bound at `p`.
pub fn b_valuation_check(table: &BTable, p: u64) -> Result<bool> {
    let ctx = context(p, table.c)?;
    let bound = b_valuation_bound(table.l.iter().sum(), table.l.len(), p);
    for v in table.entries.values() {
        if let Some(val) = valuation_at(v, &ctx)? {
            if (val as f64) < bound - 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Index bookkeeping for a partition triple in the merged convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexHelpers {
    /// Indices of `P2`, increasing; the first is 1.
    pub p2: Vec<usize>,
    /// For each index, the next index of `P2 u P3` (or `r + 1`).
    pub next23: Vec<usize>,
    /// For `j` in `P3`: position in `p2` of the last `P2` index below `j`.
    pub group: Vec<Option<usize>>,
    /// For `j` in `P3`: the number of `P3` indices in `(j_(P2), j]`.
    pub kappa_j: Vec<u64>,
    /// For consecutive `P2` indices: the number of `P3` indices between.
    pub gaps: Vec<u64>,
}

impl IndexHelpers {
    pub fn new(j: &PartitionTriple) -> Result<Self> {
        let r = j.depth();
        if r == 0 || j.class(1) != Part::P2 {
            return Err(Error::InvalidPartition("expects 1 in P2".into()));
        }
        let p2: Vec<usize> = (1..=r).filter(|&i| j.class(i) == Part::P2).collect();
        let mut next23 = vec![r + 1; r + 1];
        let mut nxt = r + 1;
        for i in (1..=r).rev() {
            next23[i] = nxt;
            if j.class(i) != Part::P1 {
                nxt = i;
            }
        }
        let mut group = vec![None; r + 1];
        let mut kappa_j = vec![0; r + 1];
        let mut gaps = vec![0; p2.len().saturating_sub(1)];
        let mut s = 0;
        let mut count = 0;
        for i in 1..=r {
            match j.class(i) {
                Part::P2 => {
                    if i > 1 {
                        gaps[s] = count;
                        s += 1;
                    }
                    count = 0;
                }
                Part::P3 => {
                    count += 1;
                    group[i] = Some(s);
                    kappa_j[i] = count;
                }
                Part::P1 => {}
            }
        }
        Ok(IndexHelpers {
            p2,
            next23,
            group,
            kappa_j,
            gaps,
        })
    }

    /// `l^(P23)_j`: the exponents summed over `j` and the following `P1` run.
    pub fn run_exponent(&self, l: &[u32], j: usize) -> u32 {
        (j..self.next23[j]).map(|k| l[k - 1]).sum()
    }

    /// `eps^(P23)_j`: the twist at the next `P2 u P3` index (`1` past `r`).
    pub fn next_twist(&self, eps: &[RootOfUnity], j: usize) -> RootOfUnity {
        let k = self.next23[j];
        if k > eps.len() {
            RootOfUnity::one(eps[0].conductor())
        } else {
            eps[k - 1]
        }
    }

    pub fn p3(&self) -> Vec<usize> {
        (1..self.group.len()).filter(|&i| self.group[i].is_some()).collect()
    }
}

/// One term of the reduction of a `U`-sum to gap-constrained sums: a
/// coefficient, a root power `rho^h` (`h = p^{M-1}`), and the parameters of
/// the remaining sum over the `P2` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UTerm {
    pub coefficient: Rational,
    /// Exponent of `h` multiplying the term.
    pub h_power: u32,
    /// Root raised to `h`.
    pub root: RootOfUnity,
    pub exponents: Vec<u32>,
    pub twists: Vec<RootOfUnity>,
    pub gaps: Vec<u64>,
}

/// Expansion of the `U`-sum as a combination of gap-constrained sums, one
/// term per choice of `l~_j` for `j` in `P3`.
pub fn u_terms(j: &PartitionTriple, l: &[u32], eps: &[RootOfUnity]) -> Result<Vec<UTerm>> {
    let ih = IndexHelpers::new(j)?;
    let c = eps[0].conductor();
    let p3 = ih.p3();
    let base_exps: Vec<u32> = ih.p2.iter().map(|&i| ih.run_exponent(l, i)).collect();
    let twists: Vec<RootOfUnity> = ih.p2.iter().map(|&i| eps[i - 1]).collect();
    let mut out = Vec::new();
    let mut choice = vec![0u32; p3.len()];
    loop {
        let mut coef = Rational::one();
        let mut h_power = 0;
        let mut root = RootOfUnity::one(c);
        let mut exps = base_exps.clone();
        for (idx, &jj) in p3.iter().enumerate() {
            let lj = ih.run_exponent(l, jj);
            let lt = choice[idx];
            let k = ih.kappa_j[jj];
            coef *= Rational::from_integer(binomial(lj as i64, lt)) * power_rational(k, lj - lt);
            h_power += lj - lt;
            root = root.mul(ih.next_twist(eps, jj).div(eps[jj - 1]).pow(k as i64));
            exps[ih.group[jj].expect("P3 index")] += lt;
        }
        if !coef.is_zero() {
            out.push(UTerm {
                coefficient: coef,
                h_power,
                root,
                exponents: exps,
                twists: twists.clone(),
                gaps: ih.gaps.clone(),
            });
        }
        // next choice
        let mut idx = 0;
        loop {
            if idx == p3.len() {
                return Ok(out);
            }
            let lj = ih.run_exponent(l, p3[idx]);
            if choice[idx] < lj {
                choice[idx] += 1;
                break;
            }
            choice[idx] = 0;
            idx += 1;
        }
    }
}

/// The `U`-sum `sum prod (eps_{i+1}/eps_i)^{u_i} u_i^{l_i}` over
/// `U_{r,p^M,J}` (merged convention), through `u_terms` and the coefficient
/// tables.
pub fn sum_over_u(
    j: &PartitionTriple,
    m: u32,
    l: &[u32],
    eps: &[RootOfUnity],
    p: u64,
) -> Result<CyclotomicNumber> {
    let c = eps[0].conductor();
    let h = p.pow(m - 1);
    let mut acc = CyclotomicNumber::zero(c);
    for t in u_terms(j, l, eps)? {
        let table = b_coefficients(&t.exponents, &t.twists, &t.gaps);
        let s = table.eval(h);
        let factor = CyclotomicNumber::root_of_unity(c, (t.root.exponent() * (h % c)) as i64)
            .scale(&(&t.coefficient * power_rational(h, t.h_power)));
        acc = &acc + &(&factor * &s);
    }
    Ok(acc)
}

/// The same sum by enumerating `U_{r,p^M,J}`.
pub fn sum_over_u_direct(
    j: &PartitionTriple,
    m: u32,
    l: &[u32],
    eps: &[RootOfUnity],
    p: u64,
) -> CyclotomicNumber {
    let c = eps[0].conductor();
    let r = l.len();
    let mut acc = GroupRingAccumulator::new(c);
    for u in enumerate_u(p, m, j) {
        let mut q = Rational::one();
        let mut e = 0;
        for i in 0..r {
            let next = if i + 1 < r { eps[i + 1] } else { RootOfUnity::one(c) };
            e += next.div(eps[i]).pow(u[i] as i64).exponent();
            q *= power_rational(u[i], l[i]);
        }
        acc.add_term(e % c, &q);
    }
    acc.to_number()
}

/// `sum over T_{r,J} of prod xi_i^{t_i - t_{i-1}} / t_i^{m_i}` with
/// `t_0 = 0`, by enumeration.
pub fn sum_over_t_direct(j: &PartitionTriple, m: &[u32], xi: &[RootOfUnity], p: u64) -> CyclotomicNumber {
    let c = xi[0].conductor();
    let mut acc = GroupRingAccumulator::new(c);
    for t in enumerate_t(p, j) {
        let mut q = Rational::one();
        let mut e = 0i64;
        let mut prev = 0i64;
        for i in 0..t.len() {
            q /= power_rational(t[i], m[i]);
            e += xi[i].exponent() as i64 * (t[i] as i64 - prev);
            prev = t[i] as i64;
        }
        acc.add_term(e.rem_euclid(c as i64) as u64, &q);
    }
    acc.to_number()
}

/// The words `w(l)_delta`, one per full-support cell of `T_{r,J}`.
pub fn t_words(
    j: &PartitionTriple,
    n: &[u32],
    l: &[u32],
    xi: &[RootOfUnity],
) -> Result<Vec<HarmonicWord>> {
    full_support_cells(j)
        .cells()
        .iter()
        .map(|d| weight_word(d, n, l, xi))
        .collect()
}

/// The same sum as `sum_over_t_direct`, as harmonic sums `H_p` over the
/// cells of `T_{r,J}`.
pub fn sum_over_t(
    j: &PartitionTriple,
    n: &[u32],
    l: &[u32],
    xi: &[RootOfUnity],
    p: u64,
) -> Result<CyclotomicNumber> {
    let c = xi[0].conductor();
    let mut acc = CyclotomicNumber::zero(c);
    for w in t_words(j, n, l, xi)? {
        acc += &harmonic_sum_cached(p, &w);
    }
    Ok(acc)
}

/// One row of a harmonic table.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicRow {
    /// `m` for a sum, `p` for a value.
    pub index: u64,
    pub word: HarmonicWord,
    pub value: String,
    pub valuation: Option<i64>,
}

/// CSV with columns `index,word,value,valuation`.
pub fn harmonic_csv(rows: &[HarmonicRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "word", "value", "valuation"]).expect("in-memory write");
    for row in rows {
        let val = row.valuation.map_or_else(|| "inf".to_string(), |v| v.to_string());
        w.write_record([
            row.index.to_string(),
            row.word.to_string(),
            row.value.clone(),
            val,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Checks `sum B h^l xi^h = S(h)` for `h = 1..=hmax`.
pub fn b_identity_holds(table: &BTable, hmax: u64) -> bool {
    (1..=hmax).all(|h| table.eval(h) == s_variant_bruteforce(&table.kappa, h, &table.l, &table.eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::rat;

    fn roots(c: u64, e: &[i64]) -> Vec<RootOfUnity> {
        e.iter().map(|&a| RootOfUnity::new(c, a)).collect()
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0), rat(1, 1));
        assert_eq!(bernoulli(1), rat(-1, 2));
        assert_eq!(bernoulli(2), rat(1, 6));
        assert_eq!(bernoulli(3), rat(0, 1));
        assert_eq!(bernoulli(12), rat(-691, 2730));
    }

    #[test]
    fn harmonic_examples() {
        let w = HarmonicWord::untwisted(1, vec![1]);
        assert!(harmonic_sum(1, &w).is_zero());
        assert_eq!(harmonic_sum(3, &w), CyclotomicNumber::from_rational(1, rat(3, 2)));
        let w2 = HarmonicWord::untwisted(1, vec![1, 1]);
        assert_eq!(harmonic_sum(3, &w2), CyclotomicNumber::from_rational(1, rat(1, 2)));
        let wm = HarmonicWord::new(vec![1], roots(2, &[1])).unwrap();
        assert_eq!(harmonic_sum(3, &wm), CyclotomicNumber::from_rational(2, rat(-1, 2)));
    }

    #[test]
    fn cmhv_examples() {
        let ctx = context(5, 1).unwrap();
        let w = HarmonicWord::untwisted(1, vec![1]);
        let v = cmhv(&w, &ctx, 10).unwrap();
        assert!(v.matches_rational(&rat(125, 12)));
        assert_eq!(v.valuation(), Some(3));
        let ctx3 = context(3, 1).unwrap();
        let v = cmhv(&HarmonicWord::untwisted(1, vec![1, 1]), &ctx3, 10).unwrap();
        assert!(v.matches_rational(&rat(9, 2)));
        assert_eq!(v.valuation(), Some(2));
    }

    #[test]
    fn iterated_integral_examples() {
        let one = RootOfUnity::one(1);
        let log = iterated_integral_coeffs(&[Form::Pole(one)], 1, 5).unwrap();
        for m in 1..=5 {
            assert_eq!(log[m], CyclotomicNumber::from_rational(1, rat(-1, m as i64)));
        }
        let sq = iterated_integral_coeffs(&[Form::Pole(one), Form::Pole(one)], 1, 4).unwrap();
        assert_eq!(sq[2], CyclotomicNumber::from_rational(1, rat(1, 2)));
        assert!(iterated_integral_coeffs(&[Form::Pole(one), Form::Zero], 1, 4).is_err());
    }

    #[test]
    fn s_variant_examples() {
        let one = roots(1, &[0]);
        assert_eq!(s_variant_bruteforce(&[], 3, &[1], &one), CyclotomicNumber::from_int(1, 3));
        assert!(s_variant_bruteforce(&[], 4, &[0], &roots(2, &[1])).is_zero());
        assert_eq!(
            s_variant_bruteforce(&[0], 2, &[0, 0], &roots(1, &[0, 0])),
            CyclotomicNumber::from_int(1, 2)
        );
    }

    #[test]
    fn b_table_examples() {
        let t = b_coefficients(&[0], &roots(1, &[0]), &[]);
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.get(1, RootOfUnity::one(1)), CyclotomicNumber::one(1));
        let t = b_coefficients(&[1], &roots(1, &[0]), &[]);
        assert_eq!(t.get(2, RootOfUnity::one(1)), CyclotomicNumber::from_rational(1, rat(1, 2)));
        assert_eq!(t.get(1, RootOfUnity::one(1)), CyclotomicNumber::from_rational(1, rat(-1, 2)));
        let t = b_coefficients(&[0], &roots(2, &[1]), &[]);
        assert_eq!(t.get(0, RootOfUnity::one(2)), CyclotomicNumber::from_rational(2, rat(1, 2)));
        assert_eq!(
            t.get(0, RootOfUnity::new(2, 1)),
            CyclotomicNumber::from_rational(2, rat(-1, 2))
        );
    }

    #[test]
    fn b_table_matches_oracle() {
        let cases: Vec<(Vec<u32>, Vec<RootOfUnity>, Vec<u64>)> = vec![
            (vec![1], roots(1, &[0]), vec![]),
            (vec![0, 0], roots(2, &[1, 1]), vec![0]),
            (vec![1, 0], roots(3, &[1, 2]), vec![1]),
            (vec![3], roots(4, &[1]), vec![]),
            (vec![2, 1], roots(3, &[0, 2]), vec![2]),
        ];
        for (l, eps, kappa) in cases {
            let c = eps[0].conductor();
            let deg = l.iter().sum::<u32>() + l.len() as u32;
            let samples = c * (deg as u64 + 1);
            let t = b_coefficients(&l, &eps, &kappa);
            let o = b_coefficients_oracle(&l, &eps, &kappa, samples).unwrap();
            assert_eq!(*t, o, "l={l:?} kappa={kappa:?}");
            assert!(b_identity_holds(&t, 10));
            assert!(t.max_degree().unwrap_or(0) <= deg);
        }
    }

    #[test]
    fn valuation_bound_examples() {
        let t = b_coefficients(&[1], &roots(1, &[0]), &[]);
        assert!(b_valuation_check(&t, 5).unwrap());
        let t = b_coefficients(&[3], &roots(1, &[0]), &[]);
        assert!(b_valuation_check(&t, 5).unwrap());
        assert!((b_valuation_bound(1, 1, 5) + 1.0 + 2f64.ln() / 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn u_sum_examples() {
        let j = PartitionTriple::new(1, &[], &[1], &[]).unwrap().merged().unwrap();
        assert_eq!(
            sum_over_u(&j, 2, &[1], &roots(1, &[0]), 3).unwrap(),
            CyclotomicNumber::from_int(1, 3)
        );
        let j = PartitionTriple::new(2, &[], &[1, 2], &[]).unwrap().merged().unwrap();
        assert_eq!(
            sum_over_u(&j, 2, &[0, 0], &roots(1, &[0, 0]), 3).unwrap(),
            CyclotomicNumber::from_int(1, 6)
        );
        let j = PartitionTriple::new(2, &[], &[1], &[2]).unwrap().merged().unwrap();
        for l in [[0u32, 0], [1, 2], [2, 0]] {
            let eps = roots(2, &[1, 0]);
            assert_eq!(
                sum_over_u(&j, 2, &l, &eps, 3).unwrap(),
                sum_over_u_direct(&j, 2, &l, &eps, 3)
            );
        }
    }

    #[test]
    fn generating_series_matches_harmonic_sums() {
        let order = 7;
        for (word, l) in [
            (HarmonicWord::new(vec![1], roots(3, &[1])).unwrap(), 1),
            (HarmonicWord::new(vec![2], roots(2, &[1])).unwrap(), 2),
            (HarmonicWord::new(vec![1, 2], roots(3, &[1, 2])).unwrap(), 1),
            (HarmonicWord::new(vec![1, 1], roots(4, &[3, 1])).unwrap(), 2),
            (HarmonicWord::new(vec![1, 1, 1], roots(2, &[1, 0, 1])).unwrap(), 1),
        ] {
            let c = word.twists[0].conductor();
            let coeffs = iterated_integral_coeffs(&generating_forms(&word, l), c, order).unwrap();
            let sign = if word.depth() % 2 == 1 { 1 } else { -1 };
            for (m, got) in coeffs.iter().enumerate().skip(1) {
                let want = harmonic_sum(m as u64, &word)
                    .scale(&(power_rational(m as u64, l).recip() * rat_int(sign)));
                assert_eq!(*got, want, "{word} l={l} m={m}");
            }
        }
    }

    #[test]
    fn u_sums_depth_three() {
        for j in PartitionTriple::all_merged(3) {
            for eps in [roots(3, &[1, 2, 0]), roots(2, &[0, 1, 1])] {
                for l in [[0u32, 1, 0], [1, 0, 2]] {
                    assert_eq!(
                        sum_over_u(&j, 2, &l, &eps, 3).unwrap(),
                        sum_over_u_direct(&j, 2, &l, &eps, 3),
                        "{j} {l:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn t_sums_match_enumeration() {
        for r in 1..=3usize {
            for j in PartitionTriple::all_merged(r).into_iter().chain(PartitionTriple::all(r)) {
                for xi in [roots(2, &[1, 1, 1]), roots(3, &[1, 2, 1])] {
                    let xi = &xi[..r];
                    let n = [1u32, 2, 1];
                    let l = [1u32, 0, 2];
                    let m: Vec<u32> = (0..r).map(|i| n[i] + l[i]).collect();
                    assert_eq!(
                        sum_over_t(&j, &n[..r], &l[..r], xi, 5).unwrap(),
                        sum_over_t_direct(&j, &m, xi, 5),
                        "{j}"
                    );
                }
            }
        }
    }

    #[test]
    fn csv_quotes_words() {
        let rows = vec![HarmonicRow {
            index: 3,
            word: HarmonicWord::untwisted(1, vec![1, 1]),
            value: "1/2".into(),
            valuation: Some(0),
        }];
        let s = harmonic_csv(&rows);
        assert!(s.starts_with("index,word,value,valuation\n"));
        assert!(s.contains("\"1,1;"));
    }
}
