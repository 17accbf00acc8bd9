//! Verification suites shared by the command-line driver and the acceptance
//! tests. Each suite compares two independent routes to the same quantity.

use std::collections::BTreeSet;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    div_map, enumerate_d, enumerate_t, enumerate_u, full_support_cells, HarmonicWord, PartitionTriple,
};
use crate::cyclotomic::{rat_int, CyclotomicNumber, RootOfUnity};
use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::harmonic::{
    b_coefficients, b_coefficients_oracle, b_identity_holds, b_valuation_check, cmhv, cmhv_checks,
    generating_forms, harmonic_sum, iterated_integral_coeffs, sum_over_t, sum_over_t_direct, sum_over_u,
    sum_over_u_direct,
};
use crate::lvalue::{
    choose_l_max, field_context, guaranteed_precision, interpolation_value, kubota_leopoldt_from_r1,
    l_direct_level, l_direct_until, l_series_at, level_sum_from_a, max_feasible_level, washington_series,
    LSpec, Side, ValueRecord,
};
use crate::padic::{embed, Exponent, PadicElement};

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub checks: u64,
    pub failures: Vec<String>,
    pub details: Vec<String>,
    /// Wall time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

struct Tally {
    checks: u64,
    failures: Vec<String>,
    details: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checks: 0,
            failures: Vec::new(),
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn result<T>(&mut self, r: Result<T>, what: impl FnOnce() -> String) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.failures.push(format!("{}: {e}", what()));
                None
            }
        }
    }

    fn absorb(&mut self, other: Tally) {
        self.checks += other.checks;
        self.failures.extend(other.failures);
        self.details.extend(other.details);
    }

    fn finish(self, name: &str, start: Instant) -> SuiteReport {
        SuiteReport {
            name: name.to_string(),
            passed: self.failures.is_empty(),
            checks: self.checks,
            failures: self.failures,
            details: self.details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// The available suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Bijection,
    Decomposition,
    Bcoeff,
    Valuation,
    Usum,
    Tsum,
    GeneratingSeries,
    Interpolation,
    FixedLevel,
    Central,
    Washington,
    Cmhv,
    Precision,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Bijection,
        Suite::Decomposition,
        Suite::Bcoeff,
        Suite::Valuation,
        Suite::Usum,
        Suite::Tsum,
        Suite::GeneratingSeries,
        Suite::Interpolation,
        Suite::FixedLevel,
        Suite::Central,
        Suite::Washington,
        Suite::Cmhv,
        Suite::Precision,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bijection => "bijection",
            Suite::Decomposition => "decomposition",
            Suite::Bcoeff => "bcoeff",
            Suite::Valuation => "valuation",
            Suite::Usum => "usum",
            Suite::Tsum => "tsum",
            Suite::GeneratingSeries => "generating-series",
            Suite::Interpolation => "interpolation",
            Suite::FixedLevel => "fixed-level",
            Suite::Central => "central",
            Suite::Washington => "washington",
            Suite::Cmhv => "cmhv",
            Suite::Precision => "precision",
        }
    }

    pub fn run(self, grid: &Grid) -> SuiteReport {
        match self {
            Suite::Bijection => bijection(grid),
            Suite::Decomposition => decomposition(grid),
            Suite::Bcoeff => bcoeff(grid),
            Suite::Valuation => valuation(grid),
            Suite::Usum => usum(grid),
            Suite::Tsum => tsum(grid),
            Suite::GeneratingSeries => generating_series(grid),
            Suite::Interpolation => interpolation(grid),
            Suite::FixedLevel => fixed_level(grid),
            Suite::Central => central(grid),
            Suite::Washington => washington(grid),
            Suite::Cmhv => cmhv_suite(grid),
            Suite::Precision => precision(grid),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// Restrictions applied to each suite's default grid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub r: Option<usize>,
    pub p: Option<u64>,
    pub level: Option<u32>,
    /// Random parameter sets for the coefficient suites.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub strategy: Strategy,
}

impl Grid {
    fn depths(&self, default: &[usize]) -> Vec<usize> {
        self.r.map_or_else(|| default.to_vec(), |r| vec![r])
    }

    fn primes(&self, default: &[u64]) -> Vec<u64> {
        self.p.map_or_else(|| default.to_vec(), |p| vec![p])
    }

    fn levels(&self, default: &[u32]) -> Vec<u32> {
        self.level.map_or_else(|| default.to_vec(), |m| vec![m])
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(20_241_015)
    }
}

/// Runs the given suites in order.
pub fn run_suites(suites: &[Suite], grid: &Grid) -> Vec<SuiteReport> {
    suites.iter().map(|s| s.run(grid)).collect()
}

fn roots(c: u64, e: &[i64]) -> Vec<RootOfUnity> {
    e.iter().map(|&a| RootOfUnity::new(c, a)).collect()
}

fn tuples(c: u64, r: usize) -> Vec<Vec<RootOfUnity>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|t| {
                RootOfUnity::all(c).map(move |x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

fn int_tuples(r: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|t: Vec<u32>| {
                (lo..=hi).map(move |a| {
                    let mut t = t.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

/// `div_map` sends `D_{r,p^M}` bijectively onto the disjoint union of
/// `U_{r,p^M,J} x T_{r,J}` over all partition triples.
pub fn bijection(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    for r in grid.depths(&[1, 2, 3]) {
        for p in grid.primes(&[3, 5]) {
            for m in grid.levels(&[1, 2]) {
                let image: Vec<(Vec<u64>, Vec<u64>)> = enumerate_d(r, p, m).map(|x| div_map(&x, p)).collect();
                let image_set: BTreeSet<_> = image.iter().cloned().collect();
                t.check(image_set.len() == image.len(), || {
                    format!("r={r} p={p} M={m}: div_map is not injective")
                });
                let mut union = Vec::new();
                for j in PartitionTriple::all(r) {
                    let ts = enumerate_t(p, &j);
                    for u in enumerate_u(p, m, &j) {
                        union.extend(ts.iter().map(|tt| (u.clone(), tt.clone())));
                    }
                }
                let union_set: BTreeSet<_> = union.iter().cloned().collect();
                t.check(union_set.len() == union.len(), || {
                    format!("r={r} p={p} M={m}: the pieces U x T overlap")
                });
                t.check(union_set == image_set, || {
                    format!("r={r} p={p} M={m}: image and union differ")
                });
                t.details
                    .push(format!("r={r} p={p} M={m}: |D|={} |union|={}", image.len(), union.len()));
            }
        }
    }
    t.finish("bijection", start)
}

/// The cells of `T_{r,J}` partition it, with the expected cell sizes.
pub fn decomposition(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    for r in grid.depths(&[1, 2, 3]) {
        for p in grid.primes(&[3, 5, 7]) {
            for j in PartitionTriple::all(r).into_iter().chain(PartitionTriple::all_merged(r)) {
                let cells = full_support_cells(&j);
                let mut points = Vec::new();
                let mut sizes = 0u64;
                for cell in cells.cells() {
                    let pts = cell.points(p, r);
                    t.check(pts.len() as u64 == cell.cell_size(p), || {
                        format!("{j} p={p}: cell {cell} has the wrong size")
                    });
                    sizes += cell.cell_size(p);
                    points.extend(pts);
                }
                let set: BTreeSet<Vec<u64>> = points.iter().cloned().collect();
                let want: BTreeSet<Vec<u64>> = enumerate_t(p, &j).into_iter().collect();
                t.check(set.len() == points.len(), || format!("{j} p={p}: cells overlap"));
                t.check(set == want, || format!("{j} p={p}: cells do not cover T"));
                t.check(sizes == want.len() as u64, || format!("{j} p={p}: size count"));
            }
        }
    }
    t.finish("decomposition", start)
}

/// Random `(l, eps, kappa)` with `r <= 3`, `sum l <= 4`, `c` in `{2, 3, 4}`
/// and `kappa_i <= 2`.
pub fn random_b_parameters(count: usize, seed: u64) -> Vec<(Vec<u32>, Vec<RootOfUnity>, Vec<u64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = rng.gen_range(1..=3usize);
            let c = [2u64, 3, 4][rng.gen_range(0..3)];
            let mut budget = rng.gen_range(0..=4u32);
            let mut l = vec![0u32; r];
            while budget > 0 {
                l[rng.gen_range(0..r)] += 1;
                budget -= 1;
            }
            let eps = (0..r).map(|_| RootOfUnity::new(c, rng.gen_range(0..c) as i64)).collect();
            let kappa = (1..r).map(|_| rng.gen_range(0..=2u64)).collect();
            (l, eps, kappa)
        })
        .collect()
}

fn b_samples(grid: &Grid) -> Vec<(Vec<u32>, Vec<RootOfUnity>, Vec<u64>)> {
    random_b_parameters(grid.samples.unwrap_or(60), grid.seed())
        .into_iter()
        .filter(|(l, _, _)| grid.r.is_none_or(|r| r == l.len()))
        .collect()
}

/// Coefficient tables from the recursion against the linear-solve oracle,
/// and the defining identity for `h <= 10`.
pub fn bcoeff(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let sets = b_samples(grid);
    let n = sets.len();
    let parts = grid.strategy.map(sets, |(l, eps, kappa)| {
        let mut t = Tally::new();
        let c = eps[0].conductor();
        let deg = l.iter().sum::<u32>() + l.len() as u32;
        let table = b_coefficients(&l, &eps, &kappa);
        let tag = || format!("l={l:?} eps={eps:?} kappa={kappa:?}");
        if let Some(o) = t.result(b_coefficients_oracle(&l, &eps, &kappa, c * (deg as u64 + 1)), tag) {
            t.check(*table == o, tag);
        }
        t.check(b_identity_holds(&table, 10), tag);
        t
    });
    let mut t = Tally::new();
    for part in parts {
        t.absorb(part);
    }
    t.details.push(format!("{n} random parameter sets"));
    t.finish("bcoeff", start)
}

/// Every coefficient of every table meets the valuation bound.
pub fn valuation(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let sets = b_samples(grid);
    let primes = grid.primes(&[3, 5, 7, 11]);
    let parts = grid.strategy.map(sets, |(l, eps, kappa)| {
        let mut t = Tally::new();
        let c = eps[0].conductor();
        let table = b_coefficients(&l, &eps, &kappa);
        for &p in primes.iter().filter(|&&p| c % p != 0) {
            let tag = || format!("p={p} l={l:?} eps={eps:?} kappa={kappa:?}");
            if let Some(ok) = t.result(b_valuation_check(&table, p), tag) {
                t.check(ok, tag);
            }
        }
        t
    });
    let mut t = Tally::new();
    for part in parts {
        t.absorb(part);
    }
    t.finish("valuation", start)
}

/// Sums over `U_{r,p^M,J}` from the coefficient tables against enumeration,
/// for every merged triple.
pub fn usum(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut jobs = Vec::new();
    for r in grid.depths(&[1, 2, 3]) {
        for p in grid.primes(&[3, 5]) {
            for m in grid.levels(&[1, 2]) {
                for j in PartitionTriple::all_merged(r) {
                    jobs.push((r, p, m, j));
                }
            }
        }
    }
    let parts = grid.strategy.map(jobs, |(r, p, m, j)| {
        let mut t = Tally::new();
        let ls = [[0u32, 0, 0], [1, 0, 2], [2, 1, 0], [0, 3, 1]];
        let epss = [roots(2, &[1, 0, 1]), roots(3, &[1, 2, 0]), roots(4, &[3, 1, 2]), roots(1, &[0, 0, 0])];
        for l in &ls {
            for eps in &epss {
                let (l, eps) = (&l[..r], &eps[..r]);
                let tag = || format!("{j} p={p} M={m} l={l:?} eps={eps:?}");
                if let Some(v) = t.result(sum_over_u(&j, m, l, eps, p), tag) {
                    t.check(v == sum_over_u_direct(&j, m, l, eps, p), tag);
                }
            }
        }
        t
    });
    let mut t = Tally::new();
    for part in parts {
        t.absorb(part);
    }
    t.finish("usum", start)
}

/// Sums over `T_{r,J}` as harmonic sums over the cells against enumeration,
/// for every triple, `c = 2` and `m_i <= 3`.
pub fn tsum(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut jobs = Vec::new();
    for r in grid.depths(&[1, 2, 3]) {
        for p in grid.primes(&[5, 7]) {
            for j in PartitionTriple::all(r).into_iter().chain(PartitionTriple::all_merged(r)) {
                jobs.push((r, p, j));
            }
        }
    }
    let parts = grid.strategy.map(jobs, |(r, p, j)| {
        let mut t = Tally::new();
        for xi in tuples(2, r) {
            for m in int_tuples(r, 1, 3) {
                let direct = sum_over_t_direct(&j, &m, &xi, p);
                let ones = vec![1u32; r];
                let lower: Vec<u32> = m.iter().map(|&a| a - 1).collect();
                let zeros = vec![0u32; r];
                for (n, l) in [(&ones, &lower), (&m, &zeros)] {
                    let tag = || format!("{j} p={p} n={n:?} l={l:?} xi={xi:?}");
                    if let Some(v) = t.result(sum_over_t(&j, n, l, &xi, p), tag) {
                        t.check(v == direct, tag);
                    }
                }
            }
        }
        t
    });
    let mut t = Tally::new();
    for part in parts {
        t.absorb(part);
    }
    t.finish("tsum", start)
}

/// Taylor coefficients of the iterated integrals against
/// `(-1)^{r+1} H_m(w) / m^l`, to order 30.
pub fn generating_series(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let order = 30;
    let mut t = Tally::new();
    for r in grid.depths(&[1, 2]) {
        for c in [1u64, 2, 3] {
            for twists in tuples(c, r) {
                for n in int_tuples(r, 1, 2) {
                    for l in 1..=2u32 {
                        let Some(word) = t.result(HarmonicWord::new(n.clone(), twists.clone()), || {
                            format!("word {n:?}")
                        }) else {
                            continue;
                        };
                        let sign = rat_int(if r % 2 == 1 { 1 } else { -1 });
                        let Some(coeffs) =
                            t.result(iterated_integral_coeffs(&generating_forms(&word, l), c, order), || {
                                format!("{word} l={l}")
                            })
                        else {
                            continue;
                        };
                        let mut ok = coeffs[0].is_zero();
                        for (m, got) in coeffs.iter().enumerate().skip(1) {
                            let scale = sign.clone() / rat_int((m as i64).pow(l));
                            ok &= *got == harmonic_sum(m as u64, &word).scale(&scale);
                        }
                        t.check(ok, || format!("{word} l={l}"));
                    }
                }
            }
        }
    }
    t.finish("generating-series", start)
}

/// Digits of agreement past the valuation of `want`; absolute digits when
/// `want` vanishes to its precision.
fn relative_agreement(value: &PadicElement, want: &PadicElement) -> Result<i64> {
    let a = value.agreement(want)?;
    if is_zero(want) {
        return Ok(a);
    }
    Ok(a - want.valuation().unwrap_or(0).max(0))
}

fn is_zero(x: &PadicElement) -> bool {
    x.valuation() >= x.precision()
}

/// The depth-one function at `s = 1 - n`, twist `omega^{n-1}`, against
/// `(c^n - 1)` times the Bernoulli value, to 4 digits.
pub fn interpolation(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let digits = 4;
    let mut jobs = Vec::new();
    for n in [2u32, 4] {
        for p in grid.primes(&[5, 7]) {
            for c in [2u64, 3] {
                jobs.push((n, p, c));
            }
        }
    }
    let parts = Strategy::Sequential.map(jobs, |(n, p, c)| {
        let mut t = Tally::new();
        let spec = LSpec {
            c,
            p,
            s: vec![Exponent::Integer(1 - n as i64)],
            k: vec![n as i64 - 1],
            precision: 12,
            m_max: max_feasible_level(c, p, 1).min(9),
        };
        let want = interpolation_value(n, c, p);
        let tag = || format!("n={n} p={p} c={c}");
        let Some(st) = t.result(l_direct_until(&spec, digits + 2, grid.strategy), tag) else {
            return t;
        };
        let Some(target) = t.result(PadicElement::from_rational(p, &want, 20), tag) else {
            return t;
        };
        if let Some(a) = t.result(relative_agreement(&st.value, &target), tag) {
            t.check(a >= digits, || format!("{}: {a} digits", tag()));
            t.details
                .push(format!("n={n} p={p} c={c}: target {want}, {a} digits at M={}", st.levels.len()));
        }
        t
    });
    let mut t = Tally::new();
    for part in parts {
        t.absorb(part);
    }
    t.finish("interpolation", start)
}

/// The fixed-level identity: `p^{sum n}` times the level-`M` Riemann sum,
/// reassembled from the `A`-coefficients, against the direct evaluator.
pub fn fixed_level(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    let want = 6;
    for n in [vec![1u32], vec![2], vec![1, 1]] {
        let r = n.len();
        if grid.r.is_some_and(|x| x != r) {
            continue;
        }
        for p in grid.primes(&[3, 5]) {
            let sn: u32 = n.iter().sum();
            let l_max = choose_l_max(&n, r, p, sn as i64 + want);
            let g = guaranteed_precision(&n, l_max, r, p);
            for m in grid.levels(&[1, 2]) {
                let tag = || format!("n={n:?} p={p} M={m}");
                let spec = LSpec::at_positive(&n, 2, p, 16, m.max(2));
                let Some(d) = t.result(l_direct_level(&spec, m, grid.strategy), tag) else {
                    continue;
                };
                let d = d.as_cyc().shift_by(sn as i64);
                let Some(a) = t.result(level_sum_from_a(&n, 2, p, m, l_max, (g + 24) as u32), tag) else {
                    continue;
                };
                if let Some(agree) = t.result(a.agreement(&d), tag) {
                    let need = g.min(sn as i64 + 16);
                    t.check(agree >= need, || format!("{}: {agree} < {need}", tag()));
                }
            }
        }
    }
    t.finish("fixed-level", start)
}

/// One row of the central comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentralRow {
    pub n: Vec<u32>,
    pub c: u64,
    pub p: u64,
    pub levels: u32,
    pub direct_digits: i64,
    pub l_max: u32,
    pub guaranteed_precision: i64,
    /// Digits of agreement beyond the valuation `sum n`.
    pub matched: i64,
    pub required: i64,
    /// `p^{sum n}` times the direct value.
    pub direct: ValueRecord,
    pub series: ValueRecord,
}

/// Compares `p^{sum n}` times the direct value with the series at one
/// prime, requiring `min(digits, guaranteed)` digits beyond `sum n`. The
/// direct side runs up to `m_max` levels, by default the largest feasible.
pub fn central_row(
    n: &[u32],
    c: u64,
    p: u64,
    digits: i64,
    m_max: Option<u32>,
    strategy: Strategy,
) -> Result<CentralRow> {
    let r = n.len();
    let sn: i64 = n.iter().sum::<u32>() as i64;
    let m_max = m_max.unwrap_or_else(|| max_feasible_level(c, p, r));
    let spec = LSpec::at_positive(n, c, p, 12, m_max);
    let st = l_direct_until(&spec, digits + 1, strategy)?;
    let l_max = choose_l_max(n, r, p, sn + digits + 1);
    let series = l_series_at(n, c, p, l_max, sn + digits + 1, strategy)?;
    let direct = st.value.as_cyc().shift_by(sn);
    let matched = series.value.agreement(&direct)? - sn;
    let levels = st.levels.len() as u32;
    Ok(CentralRow {
        n: n.to_vec(),
        c,
        p,
        levels,
        direct_digits: st.digits,
        l_max,
        guaranteed_precision: series.guaranteed_precision,
        matched,
        required: digits.min(series.guaranteed_precision - sn),
        direct: ValueRecord::new(&direct, c, n, Side::Direct, sn + st.digits, (None, Some(levels)))?,
        series: ValueRecord::new(
            &series.value,
            c,
            n,
            Side::Series,
            series.guaranteed_precision,
            (Some(l_max), None),
        )?,
    })
}

/// The headline identity on the acceptance grid.
pub fn central(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    let cases: Vec<Vec<u32>> = vec![vec![1], vec![2], vec![3], vec![1, 1], vec![1, 2]];
    for n in cases {
        if grid.r.is_some_and(|x| x != n.len()) {
            continue;
        }
        for p in grid.primes(&[3, 5, 7]) {
            let tag = || format!("n={n:?} p={p}");
            if let Some(row) = t.result(central_row(&n, 2, p, 4, None, grid.strategy), tag) {
                t.check(row.matched >= row.required, || {
                    format!("{}: {} digits matched, {} required", tag(), row.matched, row.required)
                });
                t.details.push(format!(
                    "n={n:?} p={p}: matched {} (required {}), direct stable {} at M={}, L_max={} guaranteed {}",
                    row.matched, row.required, row.direct_digits, row.levels, row.l_max, row.guaranteed_precision
                ));
            }
        }
    }
    t.finish("central", start)
}

/// Washington's series against `p^m` times the Kubota-Leopoldt value
/// obtained from the depth-one function.
pub fn washington(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    let digits = 3;
    let mut cases: Vec<(u32, u64)> = grid.primes(&[5, 7]).into_iter().map(|p| (2, p)).collect();
    if grid.p.is_none() {
        cases.extend([(3, 5), (3, 7)]);
    }
    for (m, p) in cases {
        let tag = || format!("m={m} p={p}");
        let Some((w, g)) = t.result(washington_series(m, p, 14, 24), tag) else {
            continue;
        };
        let m_max = max_feasible_level(2, p, 1).min(7);
        let Some(kl) = t.result(
            kubota_leopoldt_from_r1(&Exponent::Integer(m as i64), 1 - m as i64, 2, p, 10, m_max, grid.strategy),
            tag,
        ) else {
            continue;
        };
        let Some(lhs) = PadicElement::from_cyc(&kl.as_cyc().shift_by(m as i64)) else {
            t.check(false, tag);
            continue;
        };
        if let Some(a) = t.result(relative_agreement(&w, &lhs), tag) {
            t.check(a >= digits, || format!("{}: {a} digits", tag()));
            let vanish = if is_zero(&lhs) && is_zero(&w) { ", both sides vanish" } else { "" };
            t.details.push(format!("m={m} p={p}: {a} digits, series guaranteed {g}{vanish}"));
        }
    }
    t.finish("washington", start)
}

/// Computes multiple harmonic values over a sweep of words; each one is
/// asserted to have valuation at least its weight.
pub fn cmhv_suite(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let before = cmhv_checks();
    let mut t = Tally::new();
    for r in grid.depths(&[1, 2]) {
        for c in [1u64, 2, 3, 4] {
            for p in grid.primes(&[3, 5, 7, 11]) {
                if c % p == 0 {
                    continue;
                }
                let Some(ctx) = t.result(field_context(p, c), || format!("p={p} c={c}")) else {
                    continue;
                };
                for twists in tuples(c, r) {
                    for n in int_tuples(r, 1, 3) {
                        let Ok(word) = HarmonicWord::new(n, twists.clone()) else {
                            continue;
                        };
                        let run = catch_unwind(AssertUnwindSafe(|| cmhv(&word, &ctx, 8)));
                        match run {
                            Ok(Ok(_)) => t.check(true, String::new),
                            Ok(Err(e)) => t.check(false, || format!("{word} p={p}: {e}")),
                            Err(_) => t.check(false, || format!("{word} p={p}: valuation below weight")),
                        }
                    }
                }
            }
        }
    }
    t.details.push(format!(
        "{} values checked in this suite, {} in this process",
        cmhv_checks() - before,
        cmhv_checks()
    ));
    t.finish("cmhv", start)
}

/// Reruns pipelines with two more digits and compares after truncation.
pub fn precision(grid: &Grid) -> SuiteReport {
    let start = Instant::now();
    let mut t = Tally::new();
    let s = grid.strategy;

    for (n, c, p, m) in [(vec![1u32], 2u64, 5u64, 3u32), (vec![1, 2], 3, 5, 2), (vec![2], 4, 7, 2)] {
        let tag = || format!("direct n={n:?} c={c} p={p} M={m}");
        for prec in [6u32, 9] {
            let lo = l_direct_level(&LSpec::at_positive(&n, c, p, prec, m), m, s);
            let hi = l_direct_level(&LSpec::at_positive(&n, c, p, prec + 2, m), m, s);
            if let (Some(lo), Some(hi)) = (t.result(lo, tag), t.result(hi, tag)) {
                t.check(hi.truncate(lo.precision().unwrap_or(i64::MAX)) == lo, tag);
            }
        }
    }

    for (n, c, p) in [(vec![1u32], 2u64, 5u64), (vec![2], 3, 7), (vec![1, 1], 2, 5)] {
        let tag = || format!("series n={n:?} c={c} p={p}");
        let sn = n.iter().sum::<u32>() as i64;
        let l_max = choose_l_max(&n, n.len(), p, sn + 3);
        let lo = l_series_at(&n, c, p, l_max, sn + 3, s);
        let hi = l_series_at(&n, c, p, l_max, sn + 5, s);
        if let (Some(lo), Some(hi)) = (t.result(lo, tag), t.result(hi, tag)) {
            t.check(hi.value.truncate(lo.guaranteed_precision) == lo.value, tag);
        }
    }

    for (c, p) in [(1u64, 5u64), (3, 7), (4, 3)] {
        let Ok(ctx) = field_context(p, c) else {
            t.check(false, || format!("context p={p} c={c}"));
            continue;
        };
        for word in [
            HarmonicWord::new(vec![1], roots(c, &[c as i64 - 1])),
            HarmonicWord::new(vec![2, 1], roots(c, &[0, 1])),
        ] {
            let Some(word) = t.result(word, || format!("word c={c}")) else {
                continue;
            };
            let tag = || format!("cmhv {word} p={p}");
            let (lo, hi) = (cmhv(&word, &ctx, 6), cmhv(&word, &ctx, 8));
            if let (Some(lo), Some(hi)) = (t.result(lo, tag), t.result(hi, tag)) {
                t.check(hi.truncate(lo.precision().unwrap_or(i64::MAX)) == lo, tag);
            }
        }
        let x = CyclotomicNumber::root_of_unity(c, 1).scale(&rat_int(7)) - CyclotomicNumber::one(c);
        let tag = || format!("embed c={c} p={p}");
        let (lo, hi) = (embed(&x, &ctx, 5), embed(&x, &ctx, 7));
        if let (Some(lo), Some(hi)) = (t.result(lo, tag), t.result(hi, tag)) {
            t.check(hi.truncate(lo.precision().unwrap_or(i64::MAX)) == lo, tag);
        }
    }

    {
        let tag = || "washington m=2 p=5".to_string();
        let (lo, hi) = (washington_series(2, 5, 10, 14), washington_series(2, 5, 10, 16));
        if let (Some((lo, _)), Some((hi, _))) = (t.result(lo, tag), t.result(hi, tag)) {
            t.check(hi.truncate(lo.precision().unwrap_or(i64::MAX)) == lo, tag);
        }
    }

    {
        let tag = || "kubota-leopoldt n=2 p=5".to_string();
        let run = |prec| kubota_leopoldt_from_r1(&Exponent::Integer(-1), 2, 2, 5, prec, 4, s);
        if let (Some(lo), Some(hi)) = (t.result(run(6), tag), t.result(run(8), tag)) {
            t.check(hi.truncate(lo.precision().unwrap_or(i64::MAX)) == lo, tag);
        }
    }
    t.finish("precision", start)
}
