use proptest::prelude::*;

use relbc_core::field::{check_axioms, Field};
use relbc_core::Error;

/// Schoolbook product of two index-encoded elements: base-p digits are
/// polynomial coefficients, reduced by the monic modulus (constant first).
fn oracle_mul(p: u64, modulus: &[u32], a: u64, b: u64) -> u64 {
    let n = modulus.len() - 1;
    let digits = |mut v: u64| {
        let mut out = vec![0u64; n];
        for d in out.iter_mut() {
            *d = v % p;
            v /= p;
        }
        out
    };
    let (da, db) = (digits(a), digits(b));
    let mut prod = vec![0u64; 2 * n];
    for i in 0..n {
        for j in 0..n {
            prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
        }
    }
    for deg in (n..2 * n).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        for (k, &m) in modulus.iter().enumerate() {
            let idx = deg - n + k;
            prod[idx] = (prod[idx] + p * p - c * u64::from(m) % p) % p;
        }
    }
    prod[..n].iter().rev().fold(0, |acc, &d| acc * p + d)
}

#[test]
fn products_match_schoolbook_oracle() {
    for q in [2u32, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49] {
        let f = Field::with_order(q).unwrap();
        let p = u64::from(f.p());
        for a in f.elements() {
            for b in f.elements() {
                let want = oracle_mul(p, f.modulus(), u64::from(a.index()), u64::from(b.index()));
                assert_eq!(u64::from(f.mul(a, b).index()), want, "GF({q}) {a:?}*{b:?}");
            }
        }
    }
}

#[test]
fn sums_are_digitwise() {
    let f = Field::with_order(9).unwrap();
    for a in f.elements() {
        for b in f.elements() {
            let (ia, ib) = (a.index(), b.index());
            let want = (ia % 3 + ib % 3) % 3 + 3 * ((ia / 3 + ib / 3) % 3);
            assert_eq!(f.add(a, b).index(), want);
        }
    }
}

#[test]
fn gf4_multiplication_table() {
    // t^2 = t + 1
    let f = Field::with_order(4).unwrap();
    let table = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(f.mul(f.elem(i as u32), f.elem(j as u32)).index(), v);
        }
    }
}

#[test]
fn custom_modulus_changes_representation_not_structure() {
    // t^3 + t^2 + 1 instead of the canonical t^3 + t + 1
    let f = Field::new(2, 3, Some(vec![1, 0, 1, 1])).unwrap();
    assert!(check_axioms(&f, 2000, 1).passed());
    assert_ne!(f.tag(), Field::with_order(8).unwrap().tag());
}

#[test]
fn rejected_parameters() {
    assert!(matches!(Field::new(4, 1, None), Err(Error::NotPrime(4))));
    assert!(matches!(Field::new(2, 2, Some(vec![1, 0, 1])), Err(Error::ReducibleModulus { .. })));
    assert!(matches!(Field::new(2, 21, None), Err(Error::FieldTooLarge { .. })));
    assert!(Field::new(3, 2, Some(vec![1, 0, 2])).is_err());
}

#[test]
fn largest_supported_field_works() {
    let f = Field::new(2, 20, None).unwrap();
    let rep = check_axioms(&f, 2000, 9);
    assert!(rep.passed(), "{:?}", rep.violations);
}

fn orders() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![2u32, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 32, 49, 64, 81, 121, 125, 128, 243, 256, 1024, 3125])
}

proptest! {
    #[test]
    fn field_axioms_hold(q in orders(), seed in any::<u64>(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let f = Field::with_order(q).unwrap();
        let (a, b, c) = (f.elem(a % q), f.elem(b % q), f.elem(c % q));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(a, b), f.mul_reference(a, b));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        prop_assert_eq!(f.pow(a, u64::from(q)), a);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
            prop_assert_eq!(f.pow(a, u64::from(q) - 1), f.one());
        }
        prop_assert!(check_axioms(&f, 16, seed).passed());
    }

    #[test]
    fn coefficient_round_trip(q in orders(), i in any::<u32>()) {
        let f = Field::with_order(q).unwrap();
        let a = f.elem(i % q);
        prop_assert_eq!(f.from_coeffs(&f.coeffs(a)).unwrap(), a);
    }
}
