use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;

use mlv_core::combinatorics::{quasi_shuffle, QuasiSimplex, QuasiSimplexUnion};
use mlv_core::cyclotomic::{cyclotomic_polynomial, int_poly_mul, mod_inverse, rat, CyclotomicNumber};
use mlv_core::harmonic::binomial;
use mlv_core::padic::{context, embed, PadicCycElement, PadicElement};

const CONDUCTORS: [u64; 7] = [2, 3, 4, 5, 6, 8, 12];

fn element(c: u64) -> impl Strategy<Value = CyclotomicNumber> {
    prop::collection::vec((-20i64..=20, 1i64..=6), c as usize)
        .prop_map(move |v| {
            let q: Vec<_> = v.into_iter().map(|(n, d)| rat(n, d)).collect();
            CyclotomicNumber::from_group_ring(c, &q)
        })
}

fn conductor_and_pair() -> impl Strategy<Value = (u64, CyclotomicNumber, CyclotomicNumber)> {
    prop::sample::select(CONDUCTORS.to_vec()).prop_flat_map(|c| (Just(c), element(c), element(c)))
}

fn unit_exponent(c: u64) -> impl Strategy<Value = i64> {
    (1..c as i64).prop_filter("coprime", move |&t| t.gcd(&(c as i64)) == 1)
}

#[test]
fn cyclotomic_polynomials_multiply_to_x_c_minus_one() {
    for c in 1..=60u64 {
        let mut prod = vec![BigInt::from(1)];
        for d in (1..=c).filter(|d| c % d == 0) {
            prod = int_poly_mul(&prod, &cyclotomic_polynomial(d));
        }
        let mut want = vec![BigInt::from(0); c as usize + 1];
        want[0] = BigInt::from(-1);
        want[c as usize] = BigInt::from(1);
        assert_eq!(prod, want, "c = {c}");
    }
}

#[test]
fn roots_of_unity_have_order_dividing_c() {
    for c in CONDUCTORS {
        for a in 0..c as i64 {
            let z = CyclotomicNumber::root_of_unity(c, a);
            assert!(z.pow(c as i64).unwrap().is_one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_is_two_sided((_c, a, _b) in conductor_and_pair()) {
        prop_assume!(!a.is_zero());
        let inv = a.inv().unwrap();
        prop_assert!((&a * &inv).is_one());
        prop_assert!((&inv * &a).is_one());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn galois_is_a_field_automorphism(
        (c, a, b, t, u) in prop::sample::select(CONDUCTORS.to_vec())
            .prop_flat_map(|c| (Just(c), element(c), element(c), unit_exponent(c), unit_exponent(c)))
    ) {
        let g = |x: &CyclotomicNumber| x.galois_apply(t).unwrap();
        prop_assert_eq!(g(&(&a + &b)), &g(&a) + &g(&b));
        prop_assert_eq!(g(&(&a * &b)), &g(&a) * &g(&b));
        prop_assert_eq!(g(&a).galois_apply(u).unwrap(), a.galois_apply(t * u % c as i64).unwrap());
    }

    #[test]
    fn teichmuller_is_multiplicative_and_idempotent(
        p in prop::sample::select(vec![3u64, 5, 7]),
        x in 1i64..100_000,
        y in 1i64..100_000,
    ) {
        let (x, y) = (x * p as i64 + 1 + (x % (p as i64 - 1)), y * p as i64 + 1 + (y % (p as i64 - 1)));
        let n = 12;
        let px = PadicElement::from_int(p, x, n).unwrap();
        let py = PadicElement::from_int(p, y, n).unwrap();
        let wx = px.teichmuller().unwrap();
        let wy = py.teichmuller().unwrap();
        prop_assert!(wx.teichmuller().unwrap().agreement(&wx).unwrap() >= n as i64);
        let wxy = px.try_mul(&py).unwrap().teichmuller().unwrap();
        prop_assert!(wxy.agreement(&wx.try_mul(&wy).unwrap()).unwrap() >= n as i64);
        let back = px.angle().unwrap().try_mul(&wx).unwrap();
        prop_assert!(back.agreement(&px).unwrap() >= n as i64);
    }

    #[test]
    fn embedding_is_a_ring_homomorphism(
        (c, p, a, b) in prop::sample::select(vec![(3u64, 7u64), (4, 7), (5, 11), (8, 13), (12, 7)])
            .prop_flat_map(|(c, p)| (Just(c), Just(p), element(c), element(c)))
    ) {
        let ctx = context(p, c).unwrap();
        let rel = 10;
        let ea = embed(&a, &ctx, rel).unwrap();
        let eb = embed(&b, &ctx, rel).unwrap();
        let sum = embed(&(&a + &b), &ctx, rel).unwrap();
        let prod = embed(&(&a * &b), &ctx, rel).unwrap();
        let s2 = ea.try_add(&eb).unwrap();
        let p2 = ea.try_mul(&eb).unwrap();
        prop_assert!(sum.agreement(&s2).unwrap() >= s2.precision().unwrap_or(i64::MAX).min(sum.precision().unwrap_or(i64::MAX)));
        prop_assert!(prod.agreement(&p2).unwrap() >= p2.precision().unwrap_or(i64::MAX).min(prod.precision().unwrap_or(i64::MAX)));
    }
}

#[test]
fn frobenius_inverse_undoes_frobenius_on_roots() {
    for (c, p) in [(3u64, 7u64), (4, 3), (5, 3), (8, 5), (12, 5), (7, 3)] {
        let ctx = context(p, c).unwrap();
        let pinv = mod_inverse(p as i64, c).unwrap();
        for a in 0..c as i64 {
            let z = PadicCycElement::theta_pow(&ctx, a, 12);
            assert_eq!(z.frobenius().frobenius_inverse(), z);
            assert_eq!(z.frobenius_inverse(), PadicCycElement::theta_pow(&ctx, a * pinv as i64, 12));
            let e = embed(&CyclotomicNumber::root_of_unity(c, a), &ctx, 12).unwrap();
            assert_eq!(e.pow(c as i64).unwrap().agreement(&PadicCycElement::from_int(&ctx, 1, 12)).unwrap(), 12);
        }
    }
}

fn chain(indices: impl IntoIterator<Item = usize>) -> QuasiSimplexUnion {
    let blocks: Vec<Vec<usize>> = indices.into_iter().map(|i| vec![i]).collect();
    if blocks.is_empty() {
        return QuasiSimplexUnion::unit();
    }
    QuasiSimplexUnion::from_simplex(QuasiSimplex::new(blocks).unwrap())
}

fn delannoy(j: u32, k: u32) -> i64 {
    let a: BigInt = (0..=j.min(k))
        .map(|i| binomial(j as i64, i) * binomial(k as i64, i) * BigInt::from(2).pow(i))
        .sum();
    let b: BigInt = (0..=j.min(k))
        .map(|i| binomial((j + k - i) as i64, j) * binomial(j as i64, i))
        .sum();
    assert_eq!(a, b);
    i64::try_from(a).unwrap()
}

#[test]
fn quasi_shuffle_cell_counts() {
    for j in 0..=3usize {
        for k in 0..=3usize {
            let a = chain(1..=j);
            let b = chain(j + 1..=j + k);
            let prod = quasi_shuffle(&a, &b);
            assert_eq!(prod.len() as i64, delannoy(j as u32, k as u32), "j={j} k={k}");
            let r = j + k;
            if r == 0 {
                continue;
            }
            let p = r as u64 + 2;
            let support: BTreeSet<usize> = (1..=r).collect();
            let mut patterns = BTreeSet::new();
            let mut t = vec![1u64; r];
            loop {
                let first_ok = t[..j].windows(2).all(|w| w[0] < w[1]);
                let second_ok = t[j..].windows(2).all(|w| w[0] < w[1]);
                if first_ok && second_ok {
                    patterns.insert(QuasiSimplex::pattern_of(&support, &t));
                }
                let mut i = 0;
                while i < r && t[i] == p - 1 {
                    t[i] = 1;
                    i += 1;
                }
                if i == r {
                    break;
                }
                t[i] += 1;
            }
            let cells: BTreeSet<QuasiSimplex> = prod.cells().iter().cloned().collect();
            assert_eq!(cells, patterns, "j={j} k={k}");
        }
    }
}

#[test]
fn decomposition_is_unique() {
    for (j, k) in [(1usize, 2usize), (2, 2), (3, 1), (2, 3)] {
        let r = j + k;
        let prod = quasi_shuffle(&chain(1..=j), &chain(j + 1..=r));
        let p = r as u64 + 1;
        let points: BTreeSet<Vec<u64>> = prod.cells().iter().flat_map(|c| c.points(p, r)).collect();
        let back = QuasiSimplexUnion::from_points(prod.support().clone(), &points, p, r).unwrap();
        assert_eq!(back.sorted(), prod.clone().sorted());
        assert_eq!(QuasiSimplexUnion::parse(&prod.dump()).unwrap(), prod);
    }
}
