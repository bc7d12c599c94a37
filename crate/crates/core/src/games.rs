//! CHSH_Q and its zero-biased variant CHSH_Q^gamma.
//!
//! Two players receive `x` and `y` from F_Q and answer `a` and `b`; they win
//! iff `a + b = x * y`. Values are computed exactly over integer input
//! weights and reported as rationals.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldDescription, FieldElement};
use crate::rational::{self, Rational};

/// Largest Q accepted by [`brute_force_value`].
pub const BRUTE_FORCE_MAX_Q: u32 = 9;

const PRODUCT_TABLE_MAX_Q: u32 = 1024;

/// Input distribution of CHSH_Q^gamma: each player independently gets `0`
/// with probability gamma and every nonzero element with probability
/// `(1 - gamma) / (Q - 1)`.
#[derive(Debug, Clone)]
pub struct GameDist {
    field: Arc<Field>,
    gamma: Rational,
    // integer weights proportional to the per-player input probabilities
    w_zero: u64,
    w_nonzero: u64,
    total: u64,
}

impl GameDist {
    /// The uniform CHSH_Q distribution (gamma = 1/Q).
    pub fn uniform(field: Arc<Field>) -> Self {
        let q = u128::from(field.order());
        Self::biased(field, rational::ratio(1, q)).expect("1/Q is a valid bias")
    }

    pub fn biased(field: Arc<Field>, gamma: Rational) -> Result<Self> {
        if !rational::in_unit_interval(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma {} outside [0, 1]",
                rational::format(&gamma)
            )));
        }
        let too_fine = || Error::InvalidParameter("gamma denominator too large".into());
        let num = gamma.numer().to_u64().ok_or_else(too_fine)?;
        let den = gamma.denom().to_u64().ok_or_else(too_fine)?;
        let qm1 = u64::from(field.order() - 1);
        let mut w_zero = num.checked_mul(qm1).ok_or_else(too_fine)?;
        let mut w_nonzero = den - num;
        let mut total = den.checked_mul(qm1).ok_or_else(too_fine)?;
        let g = w_zero.gcd(&w_nonzero).gcd(&total);
        if g > 1 {
            w_zero /= g;
            w_nonzero /= g;
            total /= g;
        }
        Ok(Self {
            field,
            gamma,
            w_zero,
            w_nonzero,
            total,
        })
    }

    /// The distribution of a product of `rho / 2` independent uniform
    /// elements: gamma = 1 - (1 - 1/Q)^(rho/2).
    pub fn for_propagation(field: Arc<Field>, rho: usize) -> Result<Self> {
        if rho < 2 || !rho.is_multiple_of(2) {
            return Err(Error::InvalidPropagation(rho));
        }
        let q = u128::from(field.order());
        let miss = rational::pow(&rational::ratio(q - 1, q), rho / 2);
        Self::biased(field, Rational::one() - miss)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn is_uniform(&self) -> bool {
        self.w_zero == self.w_nonzero
    }

    #[inline]
    fn weight(&self, x: u32) -> u64 {
        if x == 0 {
            self.w_zero
        } else {
            self.w_nonzero
        }
    }

    /// Probability of a single player's input.
    pub fn prob(&self, x: FieldElement) -> Rational {
        rational::ratio(u128::from(self.weight(x.index())), u128::from(self.total))
    }

    fn joint_total(&self) -> u128 {
        u128::from(self.total) * u128::from(self.total)
    }
}

/// A deterministic strategy: answer tables for both players, indexed by the
/// canonical index of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetStrategy {
    field: Arc<Field>,
    s1: Vec<FieldElement>,
    s2: Vec<FieldElement>,
}

/// Serializable form of a [`DetStrategy`]: two arrays of element indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub field: FieldDescription,
    pub s1: Vec<u32>,
    pub s2: Vec<u32>,
}

impl DetStrategy {
    pub fn new(field: Arc<Field>, s1: Vec<FieldElement>, s2: Vec<FieldElement>) -> Result<Self> {
        let q = field.order() as usize;
        if s1.len() != q || s2.len() != q {
            return Err(Error::InvalidParameter(format!(
                "strategy tables must have {q} entries"
            )));
        }
        if s1.iter().chain(&s2).any(|e| e.field_tag() != field.tag()) {
            return Err(Error::FieldMismatch);
        }
        Ok(Self { field, s1, s2 })
    }

    pub fn from_indices(field: Arc<Field>, s1: &[u32], s2: &[u32]) -> Result<Self> {
        let conv = |v: &[u32]| -> Result<Vec<FieldElement>> {
            v.iter().map(|&i| field.element(u64::from(i))).collect()
        };
        let (s1, s2) = (conv(s1)?, conv(s2)?);
        Self::new(field, s1, s2)
    }

    /// Both players always answer `0`.
    pub fn zeros(field: Arc<Field>) -> Self {
        let q = field.order() as usize;
        let z = field.zero();
        Self {
            s1: vec![z; q],
            s2: vec![z; q],
            field,
        }
    }

    pub fn random<R: Rng + ?Sized>(field: Arc<Field>, rng: &mut R) -> Self {
        let s1 = field.elements().map(|_| field.random(rng)).collect();
        let s2 = field.elements().map(|_| field.random(rng)).collect();
        Self { field, s1, s2 }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    /// First player's answer on input `x`.
    #[inline]
    pub fn answer1(&self, x: FieldElement) -> FieldElement {
        self.s1[x.index() as usize]
    }

    /// Second player's answer on input `y`.
    #[inline]
    pub fn answer2(&self, y: FieldElement) -> FieldElement {
        self.s2[y.index() as usize]
    }

    pub fn wins(&self, x: FieldElement, y: FieldElement) -> bool {
        let f = &self.field;
        f.add(self.answer1(x), self.answer2(y)) == f.mul(x, y)
    }

    pub fn to_record(&self) -> StrategyRecord {
        StrategyRecord {
            field: self.field.describe(),
            s1: self.s1.iter().map(|e| e.index()).collect(),
            s2: self.s2.iter().map(|e| e.index()).collect(),
        }
    }

    pub fn from_record(rec: &StrategyRecord) -> Result<Self> {
        let field = Field::from_description(&rec.field)?;
        Self::from_indices(field, &rec.s1, &rec.s2)
    }

    fn indices(&self) -> (Vec<u32>, Vec<u32>) {
        (
            self.s1.iter().map(|e| e.index()).collect(),
            self.s2.iter().map(|e| e.index()).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMethod {
    BruteForce,
    BestResponseSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchMeta {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Every restart reached a best-response fixed point within the budget.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GameValueResult {
    pub value: Rational,
    pub strategy: DetStrategy,
    pub method: ValueMethod,
    pub meta: Option<SearchMeta>,
}

#[derive(Serialize)]
pub struct GameValueRecord {
    #[serde(serialize_with = "rational::serialize")]
    pub value: Rational,
    pub value_f64: f64,
    pub method: ValueMethod,
    pub strategy: StrategyRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchMeta>,
}

impl GameValueResult {
    pub fn to_record(&self) -> GameValueRecord {
        GameValueRecord {
            value: self.value.clone(),
            value_f64: rational::to_f64(&self.value),
            method: self.method,
            strategy: self.strategy.to_record(),
            search: self.meta.clone(),
        }
    }
}

/// Index arithmetic on small fields without going through `FieldElement`.
struct Kernel {
    field: Arc<Field>,
    q: u32,
    prod: Option<Vec<u32>>,
}

impl Kernel {
    fn new(field: &Arc<Field>) -> Self {
        let q = field.order();
        let prod = (q <= PRODUCT_TABLE_MAX_Q).then(|| {
            let mut t = Vec::with_capacity((q * q) as usize);
            for x in field.elements() {
                for y in field.elements() {
                    t.push(field.mul(x, y).index());
                }
            }
            t
        });
        Self {
            field: field.clone(),
            q,
            prod,
        }
    }

    #[inline]
    fn prod(&self, x: u32, y: u32) -> u32 {
        match &self.prod {
            Some(t) => t[(x * self.q + y) as usize],
            None => self.field.mul(self.field.elem(x), self.field.elem(y)).index(),
        }
    }

    #[inline]
    fn sub(&self, a: u32, b: u32) -> u32 {
        self.field.sub(self.field.elem(a), self.field.elem(b)).index()
    }

    #[inline]
    fn add(&self, a: u32, b: u32) -> u32 {
        self.field.add(self.field.elem(a), self.field.elem(b)).index()
    }
}

fn check_same(s: &DetStrategy, dist: &GameDist) -> Result<()> {
    if s.field.tag() == dist.field.tag() {
        Ok(())
    } else {
        Err(Error::FieldMismatch)
    }
}

fn win_weight(k: &Kernel, s1: &[u32], s2: &[u32], dist: &GameDist) -> u128 {
    let mut acc = 0u128;
    for x in 0..k.q {
        let wx = u128::from(dist.weight(x));
        if wx == 0 {
            continue;
        }
        for y in 0..k.q {
            let wy = u128::from(dist.weight(y));
            if wy != 0 && k.add(s1[x as usize], s2[y as usize]) == k.prod(x, y) {
                acc += wx * wy;
            }
        }
    }
    acc
}

/// Exact winning probability of `s` under `dist`, by enumerating all Q^2
/// input pairs.
pub fn win_probability(s: &DetStrategy, dist: &GameDist) -> Result<Rational> {
    check_same(s, dist)?;
    let k = Kernel::new(&s.field);
    let (s1, s2) = s.indices();
    Ok(rational::ratio(win_weight(&k, &s1, &s2, dist), dist.joint_total()))
}

/// Optimal answers of the second player against the fixed first-player
/// table `s1`. Ties go to the smallest element index. Returns the table and
/// the resulting (unnormalized) winning weight.
fn best_response_2(k: &Kernel, s1: &[u32], dist: &GameDist, counts: &mut [u64]) -> (Vec<u32>, u128) {
    let mut s2 = vec![0u32; k.q as usize];
    let mut total = 0u128;
    for y in 0..k.q {
        counts.iter_mut().for_each(|c| *c = 0);
        for x in 0..k.q {
            let b = k.sub(k.prod(x, y), s1[x as usize]);
            counts[b as usize] += dist.weight(x);
        }
        let (best_b, best) = argmax(counts);
        s2[y as usize] = best_b;
        total += u128::from(dist.weight(y)) * u128::from(best);
    }
    (s2, total)
}

/// Mirror of [`best_response_2`] for the first player.
fn best_response_1(k: &Kernel, s2: &[u32], dist: &GameDist, counts: &mut [u64]) -> (Vec<u32>, u128) {
    let mut s1 = vec![0u32; k.q as usize];
    let mut total = 0u128;
    for x in 0..k.q {
        counts.iter_mut().for_each(|c| *c = 0);
        for y in 0..k.q {
            let a = k.sub(k.prod(x, y), s2[y as usize]);
            counts[a as usize] += dist.weight(y);
        }
        let (best_a, best) = argmax(counts);
        s1[x as usize] = best_a;
        total += u128::from(dist.weight(x)) * u128::from(best);
    }
    (s1, total)
}

fn argmax(counts: &[u64]) -> (u32, u64) {
    let mut best = (0u32, counts[0]);
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > best.1 {
            best = (i as u32, c);
        }
    }
    best
}

/// Exact game value by enumerating every first-player table with `s1(0) = 0`
/// and answering each with the per-input optimal second-player table.
///
/// Restricting to `s1(0) = 0` loses nothing: adding `c` to every answer of
/// the first player and subtracting it from the second preserves all wins.
/// The first optimal table in lexicographic order is returned.
pub fn brute_force_value(dist: &GameDist) -> Result<GameValueResult> {
    let q = dist.field.order();
    if q > BRUTE_FORCE_MAX_Q {
        return Err(Error::CapExceeded {
            what: "brute-force game value (use best-response search)",
            needed: u128::from(q),
            cap: u128::from(BRUTE_FORCE_MAX_Q),
        });
    }
    let k = Kernel::new(&dist.field);
    let qs = q as usize;

    // leading free digit s1[1] splits the work; s1[0] is fixed to 0
    let chunks: Vec<u32> = if q == 1 { vec![0] } else { (0..q).collect() };
    let best = chunks
        .into_par_iter()
        .map(|lead| {
            let mut s1 = vec![0u32; qs];
            if qs > 1 {
                s1[1] = lead;
            }
            let mut counts = vec![0u64; qs];
            let mut best: Option<(u128, Vec<u32>)> = None;
            loop {
                let (_, v) = best_response_2(&k, &s1, dist, &mut counts);
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, s1.clone()));
                }
                // odometer over s1[2..], last position fastest
                let mut pos = qs;
                loop {
                    if pos <= 2 {
                        return (lead, best.expect("at least one table"));
                    }
                    pos -= 1;
                    s1[pos] += 1;
                    if s1[pos] < q {
                        break;
                    }
                    s1[pos] = 0;
                }
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(u128, Vec<u32>)>, |acc, (_, (v, t))| match acc {
            Some((bv, bt)) if bv >= v => Some((bv, bt)),
            _ => Some((v, t)),
        })
        .expect("nonempty");

    let (_, s1) = best;
    let mut counts = vec![0u64; qs];
    let (s2, v) = best_response_2(&k, &s1, dist, &mut counts);
    let strategy = DetStrategy::from_indices(dist.field.clone(), &s1, &s2)?;
    Ok(GameValueResult {
        value: rational::ratio(v, dist.joint_total()),
        strategy,
        method: ValueMethod::BruteForce,
        meta: None,
    })
}

/// Alternating best-response dynamics from random starting tables.
///
/// Each restart alternates exact best responses of the two players until
/// the value stops increasing; the best fixed point over all restarts is
/// returned. The value is that of a concrete strategy, hence a lower bound
/// on the game value.
pub fn best_response_search(
    dist: &GameDist,
    restarts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<GameValueResult> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let k = Kernel::new(&dist.field);
    let q = k.q;
    let qs = q as usize;

    let runs: Vec<(u128, Vec<u32>, Vec<u32>, usize, bool)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut s1: Vec<u32> = (0..qs).map(|_| rng.random_range(0..q)).collect();
            let mut s2: Vec<u32> = (0..qs).map(|_| rng.random_range(0..q)).collect();
            let mut counts = vec![0u64; qs];
            let mut value = win_weight(&k, &s1, &s2, dist);
            let mut iters = 0;
            let mut converged = false;
            while iters < max_iters {
                iters += 1;
                let (n2, _) = best_response_2(&k, &s1, dist, &mut counts);
                let (n1, v) = best_response_1(&k, &n2, dist, &mut counts);
                // normalize s2(0) = 0
                let c = n2[0];
                s2 = n2.iter().map(|&b| k.sub(b, c)).collect();
                s1 = n1.iter().map(|&a| k.add(a, c)).collect();
                if v <= value {
                    value = value.max(v);
                    converged = true;
                    break;
                }
                value = v;
            }
            debug_assert_eq!(value, win_weight(&k, &s1, &s2, dist));
            (value, s1, s2, iters, converged)
        })
        .collect();

    let iterations = runs.iter().map(|r| r.3).sum();
    let converged = runs.iter().all(|r| r.4);
    let (value, s1, s2, _, _) = runs
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("restarts >= 1");
    Ok(GameValueResult {
        value: rational::ratio(value, dist.joint_total()),
        strategy: DetStrategy::from_indices(dist.field.clone(), &s1, &s2)?,
        method: ValueMethod::BestResponseSearch,
        meta: Some(SearchMeta {
            restarts,
            iterations,
            seed,
            converged,
        }),
    })
}

/// Translates the winning set of `s` by `(-u, -v)`:
/// `s'1(x) = s1(x+u) - x v`, `s'2(y) = s2(y+v) - y u - u v`.
pub fn shift_strategy(s: &DetStrategy, u: FieldElement, v: FieldElement) -> Result<DetStrategy> {
    let f = &s.field;
    f.try_add(u, v)?;
    let s1 = f
        .elements()
        .map(|x| f.sub(s.answer1(f.add(x, u)), f.mul(x, v)))
        .collect();
    let uv = f.mul(u, v);
    let s2 = f
        .elements()
        .map(|y| f.sub(f.sub(s.answer2(f.add(y, v)), f.mul(y, u)), uv))
        .collect();
    DetStrategy::new(f.clone(), s1, s2)
}

#[derive(Debug, Clone)]
pub struct ShiftResult {
    pub u: FieldElement,
    pub v: FieldElement,
    pub strategy: DetStrategy,
    pub value: Rational,
}

/// Values `Z_{u,v}` of every shift of `s` under `dist`, row-major in `(u, v)`.
pub fn shift_values(s: &DetStrategy, dist: &GameDist) -> Result<Vec<Rational>> {
    check_same(s, dist)?;
    let f = &s.field;
    let k = Kernel::new(f);
    let mut out = Vec::with_capacity((k.q * k.q) as usize);
    for u in f.elements() {
        for v in f.elements() {
            let (s1, s2) = shift_strategy(s, u, v)?.indices();
            out.push(rational::ratio(win_weight(&k, &s1, &s2, dist), dist.joint_total()));
        }
    }
    Ok(out)
}

/// The shift of `s` that does best under `dist`; first in canonical `(u, v)`
/// order on ties.
pub fn best_shift(s: &DetStrategy, dist: &GameDist) -> Result<ShiftResult> {
    let values = shift_values(s, dist)?;
    let f = &s.field;
    let q = f.order() as usize;
    let (best, value) = values
        .into_iter()
        .enumerate()
        .fold((0usize, Rational::zero()), |acc, (i, v)| if i == 0 || v > acc.1 { (i, v) } else { acc });
    let (u, v) = (f.elem((best / q) as u32), f.elem((best % q) as u32));
    Ok(ShiftResult {
        u,
        v,
        strategy: shift_strategy(s, u, v)?,
        value,
    })
}
