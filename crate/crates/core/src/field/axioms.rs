use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Field;

/// Outcome of [`check_axioms`].
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub field: String,
    pub triples: usize,
    pub violations: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the field axioms on `triples` random triples, the Frobenius
/// identity `a^Q = a`, the table multiplication against the schoolbook
/// route, and the index/element bijection.
pub fn check_axioms(f: &Field, triples: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut fail = |what: &str, detail: String| {
        if violations.len() < 32 {
            violations.push(format!("{what}: {detail}"));
        }
    };
    let (zero, one) = (f.zero(), f.one());

    for _ in 0..triples {
        let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
        let show = || format!("a={a:?} b={b:?} c={c:?}");
        if f.add(f.add(a, b), c) != f.add(a, f.add(b, c)) {
            fail("additive associativity", show());
        }
        if f.mul(f.mul(a, b), c) != f.mul(a, f.mul(b, c)) {
            fail("multiplicative associativity", show());
        }
        if f.add(a, b) != f.add(b, a) || f.mul(a, b) != f.mul(b, a) {
            fail("commutativity", show());
        }
        if f.mul(a, f.add(b, c)) != f.add(f.mul(a, b), f.mul(a, c)) {
            fail("distributivity", show());
        }
        if f.add(a, zero) != a || f.mul(a, one) != a || f.mul(a, zero) != zero {
            fail("identities", show());
        }
        if f.add(a, f.neg(a)) != zero || f.sub(a, b) != f.add(a, f.neg(b)) {
            fail("additive inverse", show());
        }
        if !a.is_zero() && f.mul(a, f.inv(a).expect("nonzero")) != one {
            fail("multiplicative inverse", show());
        }
        if f.mul(a, b) != f.mul_reference(a, b) {
            fail("table product differs from schoolbook product", show());
        }
    }

    let q = u64::from(f.order());
    let frobenius = |a| f.pow(a, q) == a;
    if f.order() <= 1 << 16 {
        for a in f.elements() {
            if !frobenius(a) {
                fail("Frobenius a^Q = a", format!("a={a:?}"));
            }
        }
    } else {
        for _ in 0..triples {
            let a = f.random(&mut rng);
            if !frobenius(a) {
                fail("Frobenius a^Q = a", format!("a={a:?}"));
            }
        }
    }

    let mut seen = vec![false; f.order() as usize];
    for (i, a) in f.elements().enumerate() {
        let back = f.from_coeffs(&f.coeffs(a)).expect("coefficients are reduced");
        if back != a || a.index() as usize != i || seen[i] {
            fail("enumeration bijection", format!("index {i}"));
        }
        seen[i] = true;
    }

    AxiomReport {
        field: f.to_string(),
        triples,
        violations,
    }
}
