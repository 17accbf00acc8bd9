use mlv_core::lvalue::{
    kubota_leopoldt_from_r1, kubota_leopoldt_value, l_direct, l_direct_level, l_series_at, LSpec,
};
use mlv_core::padic::Exponent;
use mlv_core::verify::{self, Grid};
use mlv_core::Strategy;

fn levels_for(p: u64) -> u32 {
    match p {
        5 => 7,
        7 => 6,
        _ => 5,
    }
}

#[test]
fn kubota_leopoldt_values_at_negative_integers() {
    for n in [2u32, 4, 6] {
        for p in [5u64, 7, 11] {
            for c in [2u64, 3] {
                let s = Exponent::Integer(1 - n as i64);
                let v = kubota_leopoldt_from_r1(&s, n as i64, c, p, 12, levels_for(p), Strategy::Parallel).unwrap();
                let want = kubota_leopoldt_value(n, p);
                let digits = v.precision().unwrap() - v.valuation().unwrap_or(0).min(v.precision().unwrap());
                assert!(digits >= 3, "n={n} p={p} c={c}: {digits} digits");
                assert!(v.matches_rational(&want), "n={n} p={p} c={c}: expected {want}");
            }
        }
    }
}

#[test]
fn kubota_leopoldt_does_not_depend_on_c() {
    for n in [2u32, 4] {
        let s = Exponent::Integer(1 - n as i64);
        let a = kubota_leopoldt_from_r1(&s, n as i64, 2, 7, 12, 6, Strategy::Parallel).unwrap();
        let b = kubota_leopoldt_from_r1(&s, n as i64, 3, 7, 12, 6, Strategy::Parallel).unwrap();
        let need = a.precision().unwrap().min(b.precision().unwrap());
        assert!(a.agreement(&b).unwrap() >= need, "n={n}");
        assert!(need >= 3);
    }
}

#[test]
fn stable_digits_are_never_lost_after_the_first_level() {
    for (n, c, p, m) in [
        (vec![1u32], 2u64, 5u64, 6u32),
        (vec![2], 3, 7, 5),
        (vec![1, 1], 2, 3, 7),
        (vec![1, 2], 2, 5, 5),
        (vec![1, 1], 3, 5, 6),
    ] {
        let st = l_direct(&LSpec::at_positive(&n, c, p, 14, m), Strategy::Parallel).unwrap();
        assert!(st.stable[1..].windows(2).all(|w| w[0] <= w[1]), "n={n:?} p={p}: {:?}", st.stable);
    }
}

#[test]
fn first_two_levels_can_agree_by_accident() {
    let st = l_direct(&LSpec::at_positive(&[1, 1], 3, 5, 14, 4), Strategy::Parallel).unwrap();
    assert_eq!(st.stable, vec![4, 2, 4]);
    assert!(!st.monotone);
}

#[test]
fn strategies_give_identical_values() {
    let spec = LSpec::at_positive(&[1, 2], 3, 5, 10, 5);
    for m in 1..=5 {
        assert_eq!(
            l_direct_level(&spec, m, Strategy::Sequential).unwrap(),
            l_direct_level(&spec, m, Strategy::Parallel).unwrap()
        );
    }
    let a = l_series_at(&[1, 1], 3, 5, 6, 7, Strategy::Sequential).unwrap();
    let b = l_series_at(&[1, 1], 3, 5, 6, 7, Strategy::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cells_partition_the_t_sets() {
    let rep = verify::decomposition(&Grid::default());
    assert!(rep.passed, "{:?}", rep.failures);
}

#[test]
fn fixed_level_reassembly() {
    let rep = verify::fixed_level(&Grid::default());
    assert!(rep.passed, "{:?}", rep.failures);
}

#[test]
fn central_identity_at_conductor_three() {
    for (n, p) in [(vec![1u32], 5u64), (vec![2], 7), (vec![1, 1], 5)] {
        let row = verify::central_row(&n, 3, p, 3, None, Strategy::Parallel).unwrap();
        assert!(row.matched >= row.required, "n={n:?} p={p}: {row:?}");
    }
}
