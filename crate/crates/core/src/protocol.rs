//! Honest execution and verification of the F_Q commitment protocols.
//!
//! `Standard` with `m >= 2` rounds is the multi-round protocol P_m: Bob sends
//! challenges `x_1..x_{m-1}`, Alice answers `y_1 = d x_1 + a_1`,
//! `y_k = x_k a_{k-1} + a_k`, and opens with `y_m = a_{m-1}`. Bob accepts iff
//! `y_m = alpha_{m-1}` where `alpha_0 = d` and `alpha_i = y_i - x_i alpha_{i-1}`.
//!
//! `Symmetrized` is P'_m: one more challenge `x_m`, final answer
//! `y_m = x_m a_{m-1}`, acceptance iff `y_m = x_m alpha_{m-1}`.
//!
//! `Standard` with one round is the single-round protocol: challenge `x`,
//! commitment `y = a + d x`, opening `a`. Its transcript has one challenge and
//! two responses `(y, a)` and is checked by the same recursion.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldDescription, FieldElement};
use crate::rational::{self, Rational};

/// Enumeration cap for [`hiding_distribution`].
pub const HIDING_STATE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    Symmetrized,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Symmetrized => "symmetrized",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolParams {
    field: Arc<Field>,
    rounds: usize,
    variant: Variant,
}

impl ProtocolParams {
    pub fn new(field: Arc<Field>, rounds: usize, variant: Variant) -> Result<Self> {
        let min = match variant {
            Variant::Standard => 1,
            Variant::Symmetrized => 2,
        };
        if rounds < min {
            return Err(Error::InvalidParameter(format!(
                "the {} protocol needs at least {min} rounds",
                variant.name()
            )));
        }
        Ok(Self {
            field,
            rounds,
            variant,
        })
    }

    pub fn standard(field: Arc<Field>, rounds: usize) -> Result<Self> {
        Self::new(field, rounds, Variant::Standard)
    }

    pub fn symmetrized(field: Arc<Field>, rounds: usize) -> Result<Self> {
        Self::new(field, rounds, Variant::Symmetrized)
    }

    pub fn single_round(field: Arc<Field>) -> Self {
        Self {
            field,
            rounds: 1,
            variant: Variant::Standard,
        }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn is_single_round(&self) -> bool {
        self.variant == Variant::Standard && self.rounds == 1
    }

    pub fn challenge_count(&self) -> usize {
        match self.variant {
            Variant::Standard => self.rounds.saturating_sub(1).max(1),
            Variant::Symmetrized => self.rounds,
        }
    }

    /// Number of field elements Alice sends, the opening included.
    pub fn response_count(&self) -> usize {
        if self.is_single_round() {
            2
        } else {
            self.rounds
        }
    }
}

/// Pre-shared values fixed before round 1: Alice's `a_i` and Bob's challenges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HonestSharedRandomness {
    pub a: Vec<FieldElement>,
    pub x: Vec<FieldElement>,
}

impl HonestSharedRandomness {
    pub fn sample<R: rand::Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Self {
        let f = &params.field;
        let a = (0..params.rounds).map(|_| f.random(rng)).collect();
        let x = (0..params.challenge_count()).map(|_| f.random(rng)).collect();
        Self { a, x }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub d: bool,
    pub challenges: Vec<FieldElement>,
    pub responses: Vec<FieldElement>,
    pub accepted: bool,
}

/// Honest answer for round `k` (1-based). For the single-round protocol,
/// `k = 2` is the opening of `a`.
pub fn honest_response(
    params: &ProtocolParams,
    k: usize,
    d: bool,
    randomness: &HonestSharedRandomness,
) -> Result<FieldElement> {
    if k == 0 || k > params.response_count() {
        return Err(Error::InvalidParameter(format!(
            "round {k} outside 1..={}",
            params.response_count()
        )));
    }
    let f = &params.field;
    let (a, x) = (&randomness.a, &randomness.x);
    if a.len() < params.response_count().min(params.rounds) || x.len() != params.challenge_count() {
        return Err(Error::InvalidParameter("shared randomness has the wrong shape".into()));
    }
    let m = params.response_count();
    Ok(if k == 1 {
        f.add(f.mul(f.from_bit(d), x[0]), a[0])
    } else if k < m {
        f.add(f.mul(x[k - 1], a[k - 2]), a[k - 1])
    } else {
        match params.variant {
            Variant::Standard => a[m - 2],
            Variant::Symmetrized => f.mul(x[m - 1], a[m - 2]),
        }
    })
}

fn check_shape(t: &Transcript, params: &ProtocolParams) -> Result<()> {
    if t.challenges.len() != params.challenge_count() || t.responses.len() != params.response_count() {
        return Err(Error::MalformedTranscript(format!(
            "expected {} challenges and {} responses, got {} and {}",
            params.challenge_count(),
            params.response_count(),
            t.challenges.len(),
            t.responses.len()
        )));
    }
    let tag = params.field.tag();
    if t.challenges.iter().chain(&t.responses).any(|e| e.field_tag() != tag) {
        return Err(Error::FieldMismatch);
    }
    Ok(())
}

/// `alpha_0 = d`, `alpha_i = y_i - x_i alpha_{i-1}` for every response but the last.
pub fn alpha_chain(field: &Field, d: bool, challenges: &[FieldElement], responses: &[FieldElement]) -> Vec<FieldElement> {
    let mut alpha = vec![field.from_bit(d)];
    for i in 1..responses.len() {
        let prev = alpha[i - 1];
        alpha.push(field.sub(responses[i - 1], field.mul(challenges[i - 1], prev)));
    }
    alpha
}

fn verify_recursive(params: &ProtocolParams, t: &Transcript) -> bool {
    accepts(params, t.d, &t.challenges, &t.responses)
}

/// Bob's verdict by the alpha recursion alone, without shape checks.
/// Slices must have the lengths the parameters call for.
pub fn accepts(params: &ProtocolParams, d: bool, challenges: &[FieldElement], responses: &[FieldElement]) -> bool {
    let f = &params.field;
    let last = responses.len();
    let mut alpha = f.from_bit(d);
    for i in 0..last - 1 {
        alpha = f.sub(responses[i], f.mul(challenges[i], alpha));
    }
    let y_m = responses[last - 1];
    match params.variant {
        Variant::Standard => y_m == alpha,
        Variant::Symmetrized => y_m == f.mul(challenges[params.rounds - 1], alpha),
    }
}

/// The acceptance condition written out as a signed sum:
/// `y_m = sum_i (-1)^(m-1-i) y_i prod_{j>i} x_j + (-1)^(m-1) d prod_j x_j`,
/// with the products running to `x_{m-1}` (standard) or `x_m` (symmetrized).
pub fn verify_expanded(t: &Transcript, params: &ProtocolParams) -> Result<bool> {
    check_shape(t, params)?;
    let f = &params.field;
    let m = t.responses.len();
    let top = match params.variant {
        Variant::Standard => m - 1,
        Variant::Symmetrized => m,
    };
    let x = |j: usize| t.challenges[j - 1];
    let sign = |e: usize, v: FieldElement| if e.is_multiple_of(2) { v } else { f.neg(v) };
    let mut rhs = f.zero();
    for i in 1..m {
        let prod = f.product((i + 1..=top).map(x));
        rhs = f.add(rhs, sign(m - 1 - i, f.mul(t.responses[i - 1], prod)));
    }
    let dprod = f.mul(f.from_bit(t.d), f.product((1..=top).map(x)));
    rhs = f.add(rhs, sign(m - 1, dprod));
    Ok(t.responses[m - 1] == rhs)
}

/// `y~_i = (-1)^(i+1) y_i`. An involution.
pub fn tilde_transform(field: &Field, responses: &[FieldElement]) -> Vec<FieldElement> {
    responses
        .iter()
        .enumerate()
        .map(|(i, &y)| if i % 2 == 0 { y } else { field.neg(y) })
        .collect()
}

/// Acceptance in sign-free form on tilde responses:
/// `sum_i y~_i prod_{j=i+1}^{top} x_j = d prod_{j=1}^{top} x_j`.
pub fn verify_compact(t: &Transcript, params: &ProtocolParams) -> Result<bool> {
    check_shape(t, params)?;
    let f = &params.field;
    let m = t.responses.len();
    let top = match params.variant {
        Variant::Standard => m - 1,
        Variant::Symmetrized => m,
    };
    let tilde = tilde_transform(f, &t.responses);
    let x = |j: usize| t.challenges[j - 1];
    let lhs = (1..=m).fold(f.zero(), |acc, i| {
        f.add(acc, f.mul(tilde[i - 1], f.product((i + 1..=top).map(x))))
    });
    let rhs = f.mul(f.from_bit(t.d), f.product((1..=top).map(x)));
    Ok(lhs == rhs)
}

/// Bob's verdict. The recursive and expanded forms are both evaluated and
/// must agree.
pub fn verify(t: &Transcript, params: &ProtocolParams) -> Result<bool> {
    check_shape(t, params)?;
    let recursive = verify_recursive(params, t);
    let expanded = verify_expanded(t, params)?;
    assert_eq!(recursive, expanded, "acceptance forms disagree on {t:?}");
    Ok(recursive)
}

/// Plays every round honestly with the given randomness.
pub fn play_honest(params: &ProtocolParams, d: bool, randomness: &HonestSharedRandomness) -> Result<Transcript> {
    let responses = (1..=params.response_count())
        .map(|k| honest_response(params, k, d, randomness))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Transcript {
        d,
        challenges: randomness.x.clone(),
        responses,
        accepted: false,
    };
    t.accepted = verify(&t, params)?;
    Ok(t)
}

/// Samples shared randomness from `seed` and runs the protocol honestly.
pub fn run_honest(params: &ProtocolParams, d: bool, seed: u64) -> Result<Transcript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randomness = HonestSharedRandomness::sample(params, &mut rng);
    play_honest(params, d, &randomness)
}

/// JSON form of a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub schema: u32,
    pub field: FieldDescription,
    pub variant: Variant,
    pub rounds: usize,
    pub d: u8,
    pub challenges: Vec<u32>,
    pub responses: Vec<u32>,
    pub accepted: bool,
}

impl Transcript {
    pub fn to_record(&self, params: &ProtocolParams) -> TranscriptRecord {
        TranscriptRecord {
            schema: 1,
            field: params.field.describe(),
            variant: params.variant,
            rounds: params.rounds,
            d: u8::from(self.d),
            challenges: self.challenges.iter().map(|e| e.index()).collect(),
            responses: self.responses.iter().map(|e| e.index()).collect(),
            accepted: self.accepted,
        }
    }

    /// Rebuilds a transcript and its parameters. The stored verdict must
    /// match a fresh verification.
    pub fn from_record(rec: &TranscriptRecord) -> Result<(Transcript, ProtocolParams)> {
        let field = Field::from_description(&rec.field)?;
        let params = ProtocolParams::new(field.clone(), rec.rounds, rec.variant)?;
        if rec.d > 1 {
            return Err(Error::MalformedTranscript(format!("d = {} is not a bit", rec.d)));
        }
        let conv = |v: &[u32]| -> Result<Vec<FieldElement>> {
            v.iter().map(|&i| field.element(u64::from(i))).collect()
        };
        let t = Transcript {
            d: rec.d == 1,
            challenges: conv(&rec.challenges)?,
            responses: conv(&rec.responses)?,
            accepted: rec.accepted,
        };
        if verify(&t, &params)? != rec.accepted {
            return Err(Error::MalformedTranscript("stored verdict does not match verification".into()));
        }
        Ok((t, params))
    }
}

/// Bob's view after a number of rounds: exact distributions for both bits.
#[derive(Debug, Clone)]
pub struct HidingComparison {
    pub upto_round: usize,
    /// The final (opening) message is included in the view.
    pub includes_opening: bool,
    /// Equally likely randomness assignments enumerated per bit.
    pub states: u64,
    /// View (challenge indices followed by response indices) to count.
    pub counts: [BTreeMap<Vec<u32>, u64>; 2],
}

impl HidingComparison {
    pub fn identical(&self) -> bool {
        self.counts[0] == self.counts[1]
    }

    pub fn probability(&self, d: bool, view: &[u32]) -> Rational {
        let c = self.counts[usize::from(d)].get(view).copied().unwrap_or(0);
        rational::ratio(u128::from(c), u128::from(self.states))
    }
}

/// Calls `visit` on every tuple in `[0, q)^len` in lexicographic order.
pub(crate) fn for_each_tuple(q: u32, len: usize, mut visit: impl FnMut(&[u32])) {
    let mut t = vec![0u32; len];
    loop {
        visit(&t);
        let mut pos = len;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            t[pos] += 1;
            if t[pos] < q {
                break;
            }
            t[pos] = 0;
        }
    }
}

/// Exact distribution of Bob's observations (his challenges and Alice's
/// answers through `upto_round`) for `d = 0` and `d = 1`, marginalized over
/// uniform challenges and Alice's uniform `a_i`.
pub fn hiding_distribution(params: &ProtocolParams, upto_round: usize) -> Result<HidingComparison> {
    let last = params.response_count();
    if upto_round == 0 || upto_round > last {
        return Err(Error::InvalidParameter(format!("round {upto_round} outside 1..={last}")));
    }
    let f = &params.field;
    let q = f.order();
    let n_x = upto_round.min(params.challenge_count());
    let n_a = upto_round.min(last - 1);
    let states = u128::from(q).pow((n_x + n_a) as u32);
    if states > HIDING_STATE_CAP {
        return Err(Error::CapExceeded {
            what: "hiding enumeration",
            needed: states,
            cap: HIDING_STATE_CAP,
        });
    }
    let mut counts: [BTreeMap<Vec<u32>, u64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for (slot, d) in [false, true].into_iter().enumerate() {
        for_each_tuple(q, n_x + n_a, |tuple| {
            let mut x: Vec<FieldElement> = tuple[..n_x].iter().map(|&i| f.elem(i)).collect();
            x.resize(params.challenge_count(), f.zero());
            let mut a: Vec<FieldElement> = tuple[n_x..].iter().map(|&i| f.elem(i)).collect();
            a.resize(params.rounds.max(1), f.zero());
            let randomness = HonestSharedRandomness { a, x };
            let mut view: Vec<u32> = tuple[..n_x].to_vec();
            for k in 1..=upto_round {
                let y = honest_response(params, k, d, &randomness).expect("round in range");
                view.push(y.index());
            }
            *counts[slot].entry(view).or_insert(0) += 1;
        });
    }
    Ok(HidingComparison {
        upto_round,
        includes_opening: upto_round == last,
        states: states as u64,
        counts,
    })
}
