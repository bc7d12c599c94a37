//! Exact arithmetic in GF(p^n), polynomial basis.
//!
//! Elements are stored as their canonical index `sum c_i * p^i`, where `c_i`
//! is the coefficient of `t^i`. Enumeration order is therefore `0, 1, ..,
//! p-1, t, t+1, ..`. Multiplication goes through discrete log tables built
//! once from a primitive element; the schoolbook route in [`poly`] is kept
//! as an independent reference.

mod axioms;
pub(crate) mod poly;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use axioms::{check_axioms, AxiomReport};

/// Largest supported field order.
pub const MAX_ORDER: u32 = 1 << 20;

const ADD_TABLE_MAX: u32 = 256;

/// A value of some `Field`. Carries a tag identifying the field so that
/// values from different fields are never combined.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    index: u32,
    tag: u64,
}

impl FieldElement {
    /// Canonical index of the element.
    #[inline]
    pub fn index(self) -> u32 {
        self.index
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.index == 0
    }

    /// Tag of the owning field.
    pub fn field_tag(self) -> u64 {
        self.tag
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.index)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u32(self.index)
    }
}

/// Serializable description of a field: enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescription {
    pub p: u32,
    pub n: u32,
    /// Monic reduction polynomial, constant term first.
    pub modulus: Vec<u32>,
}

/// The field GF(p^n) together with its lookup tables. Immutable after
/// construction.
pub struct Field {
    p: u32,
    n: u32,
    order: u32,
    modulus: Vec<u32>,
    tag: u64,
    // exp has length 2(q-1) so that log a + log b never needs a reduction.
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    add: Option<Vec<u32>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("modulus", &poly::format(&self.modulus))
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag
    }
}

impl Eq for Field {}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{}) mod {}", self.p, self.n, poly::format(&self.modulus))
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= x {
        if x.is_multiple_of(d) {
            out.push(d);
            while x.is_multiple_of(d) {
                x /= d;
            }
        }
        d += 1;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

/// Reduction polynomial used when the caller does not supply one.
pub fn canonical_modulus(p: u32, n: u32) -> Vec<u32> {
    match (p, n) {
        (_, 1) => vec![0, 1],
        (2, 2) => vec![1, 1, 1],
        (2, 3) => vec![1, 1, 0, 1],
        (3, 2) => vec![1, 0, 1],
        (2, 4) => vec![1, 1, 0, 0, 1],
        (5, 2) => vec![2, 0, 1],
        _ => {
            // smallest monic irreducible in index order
            let count = u64::from(p).pow(n);
            (0..count)
                .map(|i| {
                    let mut m = poly::digits(i, p, n as usize);
                    m.push(1);
                    m
                })
                .find(|m| m[0] != 0 && poly::find_divisor(m, p).is_none())
                .expect("an irreducible polynomial exists in every degree")
        }
    }
}

fn fnv1a(words: impl IntoIterator<Item = u32>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl Field {
    /// Builds GF(p^n). With `modulus = None` the canonical polynomial is used;
    /// a supplied modulus must be monic of degree `n` and irreducible.
    pub fn new(p: u32, n: u32, modulus: Option<Vec<u32>>) -> Result<Arc<Field>> {
        if !is_prime(u64::from(p)) {
            return Err(Error::NotPrime(u64::from(p)));
        }
        if n == 0 {
            return Err(Error::InvalidModulus("extension degree must be at least 1".into()));
        }
        let order = u128::from(p).pow(n);
        if order > u128::from(MAX_ORDER) {
            return Err(Error::FieldTooLarge { order });
        }
        let order = order as u32;
        let modulus = match modulus {
            None => canonical_modulus(p, n),
            Some(m) => {
                if m.len() != n as usize + 1 {
                    return Err(Error::InvalidModulus(format!(
                        "expected {} coefficients for degree {n}, got {}",
                        n + 1,
                        m.len()
                    )));
                }
                if let Some(c) = m.iter().find(|&&c| c >= p) {
                    return Err(Error::InvalidModulus(format!("coefficient {c} not reduced mod {p}")));
                }
                if m[n as usize] != 1 {
                    return Err(Error::InvalidModulus(format!("{} is not monic", poly::format(&m))));
                }
                if let Some(w) = poly::find_divisor(&m, p) {
                    return Err(Error::ReducibleModulus {
                        p,
                        modulus: poly::format(&m),
                        witness: poly::format(&w),
                    });
                }
                m
            }
        };
        Ok(Arc::new(Self::build(p, n, order, modulus)))
    }

    /// Builds the field of order `q` (a prime power) with its canonical modulus.
    pub fn with_order(q: u32) -> Result<Arc<Field>> {
        let factors = prime_factors(u64::from(q));
        if q < 2 || factors.len() != 1 {
            return Err(Error::InvalidParameter(format!("{q} is not a prime power")));
        }
        let p = factors[0] as u32;
        let mut n = 0;
        let mut rest = q;
        while rest > 1 {
            rest /= p;
            n += 1;
        }
        Field::new(p, n, None)
    }

    pub fn from_description(desc: &FieldDescription) -> Result<Arc<Field>> {
        Field::new(desc.p, desc.n, Some(desc.modulus.clone()))
    }

    fn build(p: u32, n: u32, order: u32, modulus: Vec<u32>) -> Field {
        let tag = fnv1a(std::iter::once(p).chain(modulus.iter().copied()));
        let nn = n as usize;
        let coeffs = |i: u32| poly::digits(u64::from(i), p, nn);
        let index_of = |c: &[u32]| c.iter().rev().fold(0u32, |acc, &d| acc * p + d);

        let neg: Vec<u32> = (0..order)
            .map(|i| {
                let c: Vec<u32> = coeffs(i).into_iter().map(|d| (p - d) % p).collect();
                index_of(&c)
            })
            .collect();

        // primitive element: g^((q-1)/r) != 1 for every prime r | q-1
        let group = u64::from(order - 1);
        let factors = prime_factors(group);
        let pow_ref = |g: &[u32], mut e: u64| {
            let mut acc = coeffs(1);
            let mut base = g.to_vec();
            while e > 0 {
                if e & 1 == 1 {
                    acc = poly::mul_mod(&acc, &base, &modulus, p);
                }
                base = poly::mul_mod(&base, &base, &modulus, p);
                e >>= 1;
            }
            acc
        };
        let one = coeffs(1);
        let generator = (1..order)
            .find(|&g| {
                let gc = coeffs(g);
                factors.iter().all(|&r| pow_ref(&gc, group / r) != one)
            })
            .expect("multiplicative group is cyclic");

        let qm1 = (order - 1) as usize;
        let mut exp = vec![0u32; 2 * qm1.max(1)];
        let mut log = vec![0u32; order as usize];
        let gc = coeffs(generator);
        let mut cur = one.clone();
        for (i, slot) in exp.iter_mut().take(qm1).enumerate() {
            let idx = index_of(&cur);
            *slot = idx;
            log[idx as usize] = i as u32;
            cur = poly::mul_mod(&cur, &gc, &modulus, p);
        }
        for i in qm1..2 * qm1 {
            exp[i] = exp[i - qm1];
        }

        let mut field = Field {
            p,
            n,
            order,
            modulus,
            tag,
            exp,
            log,
            neg,
            add: None,
        };
        if order <= ADD_TABLE_MAX {
            let mut table = Vec::with_capacity((order * order) as usize);
            for a in 0..order {
                for b in 0..order {
                    table.push(field.add_digits(a, b));
                }
            }
            field.add = Some(table);
        }
        field
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Q = p^n.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn describe(&self) -> FieldDescription {
        FieldDescription {
            p: self.p,
            n: self.n,
            modulus: self.modulus.clone(),
        }
    }

    #[inline]
    fn wrap(&self, index: u32) -> FieldElement {
        FieldElement { index, tag: self.tag }
    }

    #[inline]
    fn check(&self, a: FieldElement) {
        assert!(a.tag == self.tag, "usage error: element belongs to a different field");
    }

    pub fn zero(&self) -> FieldElement {
        self.wrap(0)
    }

    pub fn one(&self) -> FieldElement {
        self.wrap(1)
    }

    /// Embeds a bit as `0` or `1`.
    pub fn from_bit(&self, bit: bool) -> FieldElement {
        self.wrap(u32::from(bit))
    }

    /// Element with the given canonical index.
    pub fn element(&self, index: u64) -> Result<FieldElement> {
        if index >= u64::from(self.order) {
            return Err(Error::ElementOutOfRange {
                index,
                order: self.order,
            });
        }
        Ok(self.wrap(index as u32))
    }

    /// Like [`Field::element`] but panics on an out-of-range index.
    #[inline]
    pub fn elem(&self, index: u32) -> FieldElement {
        assert!(index < self.order, "index {index} out of range for {self}");
        self.wrap(index)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() > self.n as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidParameter(format!(
                "coefficients {coeffs:?} do not describe an element of {self}"
            )));
        }
        Ok(self.wrap(coeffs.iter().rev().fold(0, |acc, &d| acc * self.p + d)))
    }

    /// Polynomial-basis coordinates, constant term first, length `n`.
    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        self.check(a);
        poly::digits(u64::from(a.index), self.p, self.n as usize)
    }

    /// Human-readable polynomial form, e.g. `t + 1`.
    pub fn format(&self, a: FieldElement) -> String {
        poly::format(&self.coeffs(a))
    }

    /// All Q elements in canonical order.
    pub fn elements(&self) -> impl ExactSizeIterator<Item = FieldElement> + '_ {
        (0..self.order).map(move |i| self.wrap(i))
    }

    /// Uniform sample.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        self.wrap(rng.random_range(0..self.order))
    }

    fn add_digits(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            return a ^ b;
        }
        if self.n == 1 {
            return (a + b) % self.p;
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.n {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * scale;
            scale *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        let idx = match &self.add {
            Some(t) => t[(a.index * self.order + b.index) as usize],
            None => self.add_digits(a.index, b.index),
        };
        self.wrap(idx)
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        self.check(a);
        self.wrap(self.neg[a.index as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        if a.index == 0 || b.index == 0 {
            return self.zero();
        }
        let e = self.log[a.index as usize] + self.log[b.index as usize];
        self.wrap(self.exp[e as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        self.check(a);
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let qm1 = self.order - 1;
        let l = self.log[a.index as usize];
        Ok(self.wrap(self.exp[((qm1 - l) % qm1) as usize]))
    }

    /// `a^k` with `0^0 = 1`.
    pub fn pow(&self, a: FieldElement, k: u64) -> FieldElement {
        self.check(a);
        if k == 0 {
            return self.one();
        }
        if a.is_zero() {
            return self.zero();
        }
        let qm1 = u64::from(self.order - 1);
        let e = u64::from(self.log[a.index as usize]) * (k % qm1) % qm1;
        self.wrap(self.exp[e as usize])
    }

    /// Product by schoolbook polynomial multiplication and reduction; slow,
    /// independent of the log tables.
    pub fn mul_reference(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let c = poly::mul_mod(&self.coeffs(a), &self.coeffs(b), &self.modulus, self.p);
        self.from_coeffs(&c).expect("reduced product is an element")
    }

    fn same(&self, a: FieldElement) -> Result<()> {
        if a.tag == self.tag {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn try_add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.same(a)?;
        self.same(b)?;
        Ok(self.add(a, b))
    }

    pub fn try_sub(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.same(a)?;
        self.same(b)?;
        Ok(self.sub(a, b))
    }

    pub fn try_mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.same(a)?;
        self.same(b)?;
        Ok(self.mul(a, b))
    }

    /// Product of a sequence; `1` for the empty sequence.
    pub fn product(&self, items: impl IntoIterator<Item = FieldElement>) -> FieldElement {
        items.into_iter().fold(self.one(), |acc, x| self.mul(acc, x))
    }
}
