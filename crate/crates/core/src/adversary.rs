//! Cheating strategies for a committer split into two agents.
//!
//! A strategy is a list of per-round functions. Each function receives the
//! whole history so far (`RoundContext`); what it is *allowed* to read is
//! fixed by a [`CausalModel`] and enforced by [`causality_check`].
//!
//! The towers are built in tilde space (`y~_i = (-1)^(i+1) y_i`), where the
//! accumulated error after `k` rounds is
//! `eta_k = d prod_{j<=k} x_j - sum_{i<=k} y~_i prod_{i<j<=k} x_j`,
//! equivalently `eta_0 = d`, `eta_k = x_k eta_{k-1} - y~_k`.
//! P'_m accepts iff `eta_m = 0`; P_m accepts iff `y~_m = eta_{m-1}`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldDescription, FieldElement};
use crate::games::{DetStrategy, StrategyRecord};
use crate::protocol::{ProtocolParams, Variant};

/// Propagation time and decision time of the cheating agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalModel {
    rho: usize,
    k0: usize,
}

impl CausalModel {
    pub fn new(rho: usize, k0: usize) -> Result<Self> {
        if rho < 2 || !rho.is_multiple_of(2) {
            return Err(Error::InvalidPropagation(rho));
        }
        Ok(Self { rho, k0 })
    }

    /// Two-round propagation, bit known from the start.
    pub fn base() -> Self {
        Self { rho: 2, k0: 0 }
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn is_base(&self) -> bool {
        self.rho == 2 && self.k0 == 0
    }

    /// Whether the agent answering round `k` may read round `j`'s challenge
    /// (or response, for `j < k`). Agents alternate, so same-parity rounds
    /// share a location.
    pub fn sees(&self, k: usize, j: usize) -> bool {
        j == k || j + self.rho <= k || (j < k && (k - j).is_multiple_of(2))
    }

    /// `d` behaves like a challenge sent before round 1: never usable in
    /// round 1, and not before the decision round has passed.
    pub fn knows_d(&self, k: usize) -> bool {
        k >= (self.k0 + 1).max(2)
    }

    pub fn view(&self, params: &ProtocolParams, k: usize) -> CausalView {
        let visible = params.challenge_count().min(k);
        CausalView {
            round: k,
            challenges: (1..=visible).filter(|&j| self.sees(k, j)).collect(),
            responses: (1..k).filter(|&j| self.sees(k, j)).collect(),
            d_known: self.knows_d(k),
        }
    }
}

impl fmt::Display for CausalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rho={} k0={}", self.rho, self.k0)
    }
}

/// Inputs the agent answering a round may depend on (1-based indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CausalView {
    pub round: usize,
    pub challenges: Vec<usize>,
    pub responses: Vec<usize>,
    pub d_known: bool,
}

/// Everything that has happened before an answer is due.
#[derive(Clone, Copy)]
pub struct RoundContext<'a> {
    pub field: &'a Field,
    pub round: usize,
    pub d: bool,
    /// `x_1..x_k`, or `x_1..x_{m-1}` for the opening of P_m.
    pub challenges: &'a [FieldElement],
    /// `y_1..y_{k-1}`.
    pub responses: &'a [FieldElement],
}

impl RoundContext<'_> {
    pub fn x(&self, j: usize) -> FieldElement {
        self.challenges[j - 1]
    }

    pub fn y(&self, j: usize) -> FieldElement {
        self.responses[j - 1]
    }

    pub fn y_tilde(&self, j: usize) -> FieldElement {
        signed(self.field, j, self.y(j))
    }

    /// `eta_k` over the first `k` rounds.
    pub fn eta(&self, k: usize) -> FieldElement {
        let f = self.field;
        (1..=k).fold(f.from_bit(self.d), |eta, i| f.sub(f.mul(self.x(i), eta), self.y_tilde(i)))
    }
}

/// `(-1)^(i+1) v`: maps between `y_i` and `y~_i` in both directions.
pub(crate) fn signed(f: &Field, i: usize, v: FieldElement) -> FieldElement {
    if i % 2 == 1 {
        v
    } else {
        f.neg(v)
    }
}

/// `eta_k = d prod x_j - sum y~_i prod_{j>i} x_j` for a complete prefix.
pub fn compute_eta(field: &Field, d: bool, challenges: &[FieldElement], tilde: &[FieldElement]) -> Result<FieldElement> {
    if challenges.len() != tilde.len() {
        return Err(Error::InvalidParameter(format!(
            "incomplete prefix: {} challenges, {} responses",
            challenges.len(),
            tilde.len()
        )));
    }
    let k = challenges.len();
    let mut eta = field.mul(field.from_bit(d), field.product(challenges.iter().copied()));
    for i in 0..k {
        let tail = field.product(challenges[i + 1..].iter().copied());
        eta = field.sub(eta, field.mul(tilde[i], tail));
    }
    Ok(eta)
}

pub type RoundFn = Arc<dyn Fn(&RoundContext) -> FieldElement + Send + Sync>;

/// One step in the construction history of a strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lineage {
    Zero,
    Honest { d_hat: u8, seed: u64 },
    Random { seed: u64 },
    BaseTower { steps: usize },
    GeneralTower { rho: usize, k0: usize, steps: usize },
    PaddedTower { rho: usize, k0: usize, steps: usize, padding: usize },
    SymmetrizedUp,
    Desymmetrized,
    NonCausalMutant { round: usize, reads: usize },
    Custom { label: String },
}

/// Serializable description from which a strategy can be rebuilt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyMeta {
    pub field: FieldDescription,
    pub variant: Variant,
    pub rounds: usize,
    pub causal: CausalModel,
    pub lineage: Vec<Lineage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<StrategyRecord>,
}

#[derive(Clone)]
pub struct CheatStrategy {
    params: ProtocolParams,
    causal: CausalModel,
    rounds: Vec<RoundFn>,
    lineage: Vec<Lineage>,
    game: Option<DetStrategy>,
}

impl fmt::Debug for CheatStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CheatStrategy")
            .field("variant", &self.params.variant())
            .field("rounds", &self.params.rounds())
            .field("causal", &self.causal)
            .field("lineage", &self.lineage)
            .finish()
    }
}

impl CheatStrategy {
    /// A strategy from explicit round functions, one per response.
    pub fn from_rounds(
        params: ProtocolParams,
        causal: CausalModel,
        rounds: Vec<RoundFn>,
        label: &str,
    ) -> Result<Self> {
        if rounds.len() != params.response_count() {
            return Err(Error::InvalidParameter(format!(
                "{} round functions for {} responses",
                rounds.len(),
                params.response_count()
            )));
        }
        Ok(Self {
            params,
            causal,
            rounds,
            lineage: vec![Lineage::Custom { label: label.into() }],
            game: None,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn field(&self) -> &Arc<Field> {
        self.params.field()
    }

    pub fn causal(&self) -> CausalModel {
        self.causal
    }

    pub fn lineage(&self) -> &[Lineage] {
        &self.lineage
    }

    pub fn game(&self) -> Option<&DetStrategy> {
        self.game.as_ref()
    }

    /// Answer for round `k` given the context.
    #[inline]
    pub fn respond(&self, ctx: &RoundContext) -> FieldElement {
        (self.rounds[ctx.round - 1])(ctx)
    }

    /// Plays every round against the given challenges and returns the answers.
    pub fn play(&self, d: bool, challenges: &[FieldElement]) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(self.rounds.len());
        self.play_into(d, challenges, &mut out);
        out
    }

    pub(crate) fn play_into(&self, d: bool, challenges: &[FieldElement], out: &mut Vec<FieldElement>) {
        debug_assert_eq!(challenges.len(), self.params.challenge_count());
        out.clear();
        let f = self.params.field();
        for k in 1..=self.rounds.len() {
            let y = {
                let ctx = RoundContext {
                    field: f,
                    round: k,
                    d,
                    challenges: &challenges[..k.min(challenges.len())],
                    responses: out,
                };
                self.respond(&ctx)
            };
            out.push(y);
        }
    }

    pub fn meta(&self) -> StrategyMeta {
        StrategyMeta {
            field: self.field().describe(),
            variant: self.params.variant(),
            rounds: self.params.rounds(),
            causal: self.causal,
            lineage: self.lineage.clone(),
            game: self.game.as_ref().map(DetStrategy::to_record),
        }
    }

    /// Rebuilds a strategy from its construction history.
    pub fn from_meta(meta: &StrategyMeta) -> Result<Self> {
        let field = Field::from_description(&meta.field)?;
        let game = meta.game.as_ref().map(DetStrategy::from_record).transpose()?;
        let need_game = || game.clone().ok_or_else(|| Error::InvalidParameter("lineage needs a game strategy".into()));
        let mut steps = meta.lineage.iter();
        let first = steps
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty lineage".into()))?;
        // transforms change the round count, so recover the starting shape
        let transforms: Vec<&Lineage> = steps.collect();
        let (mut variant, mut rounds) = (meta.variant, meta.rounds);
        for t in transforms.iter().rev() {
            match t {
                Lineage::SymmetrizedUp => variant = Variant::Standard,
                Lineage::Desymmetrized => {
                    variant = Variant::Symmetrized;
                    rounds -= 1;
                }
                _ => {}
            }
        }
        let params = ProtocolParams::new(field.clone(), rounds, variant)?;
        let mut s = match first {
            Lineage::Zero => zero_strategy(params, meta.causal),
            Lineage::Honest { d_hat, seed } => honest_strategy(params, meta.causal, *d_hat == 1, *seed),
            Lineage::Random { seed } => random_strategy(params, meta.causal, *seed),
            Lineage::BaseTower { .. } => attack_base(&params, need_game()?)?,
            Lineage::GeneralTower { .. } => attack_general(&params, meta.causal, need_game()?)?,
            Lineage::PaddedTower { .. } => padded_attack(&params, meta.causal, need_game()?)?,
            other => {
                return Err(Error::InvalidParameter(format!("cannot rebuild a strategy starting from {other:?}")))
            }
        };
        for t in transforms {
            s = match t {
                Lineage::SymmetrizedUp => symmetrize_up(&s)?,
                Lineage::Desymmetrized => desymmetrize(&s)?,
                Lineage::NonCausalMutant { round, reads } => non_causal_mutant(&s, *round, *reads)?,
                other => return Err(Error::InvalidParameter(format!("{other:?} is not a transform"))),
            };
        }
        Ok(s)
    }
}

fn zero_fn() -> RoundFn {
    Arc::new(|ctx: &RoundContext| ctx.field.zero())
}

/// Answers `0` in every round. On P_m this wins iff `d = 0` or some
/// challenge before the opening is `0`.
pub fn zero_strategy(params: ProtocolParams, causal: CausalModel) -> CheatStrategy {
    CheatStrategy {
        rounds: vec![zero_fn(); params.response_count()],
        params,
        causal,
        lineage: vec![Lineage::Zero],
        game: None,
    }
}

/// Honest play for a fixed guess `d_hat`, with Alice's `a_i` drawn from
/// `seed`. Accepted with certainty when `d = d_hat`.
pub fn honest_strategy(params: ProtocolParams, causal: CausalModel, d_hat: bool, seed: u64) -> CheatStrategy {
    let f = params.field().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Arc<Vec<FieldElement>> = Arc::new((0..params.rounds()).map(|_| f.random(&mut rng)).collect());
    let m = params.response_count();
    let variant = params.variant();
    let rounds = (1..=m)
        .map(|k| -> RoundFn {
            let a = a.clone();
            Arc::new(move |ctx: &RoundContext| {
                let f = ctx.field;
                if k == 1 {
                    f.add(f.mul(f.from_bit(d_hat), ctx.x(1)), a[0])
                } else if k < m {
                    f.add(f.mul(ctx.x(k), a[k - 2]), a[k - 1])
                } else {
                    match variant {
                        Variant::Standard => a[m - 2],
                        Variant::Symmetrized => f.mul(ctx.x(m), a[m - 2]),
                    }
                }
            })
        })
        .collect();
    CheatStrategy {
        params,
        causal,
        rounds,
        lineage: vec![Lineage::Honest {
            d_hat: u8::from(d_hat),
            seed,
        }],
        game: None,
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A pseudo-random function of each round's causal view. Causal by
/// construction; used as a generic test subject.
pub fn random_strategy(params: ProtocolParams, causal: CausalModel, seed: u64) -> CheatStrategy {
    let rounds = (1..=params.response_count())
        .map(|k| -> RoundFn {
            let view = causal.view(&params, k);
            Arc::new(move |ctx: &RoundContext| {
                let mut h = splitmix(seed ^ (k as u64).wrapping_mul(0x1000_0000_01b3));
                if view.d_known {
                    h = splitmix(h ^ u64::from(ctx.d));
                }
                for &j in &view.challenges {
                    h = splitmix(h ^ ((j as u64) << 32 | u64::from(ctx.x(j).index())));
                }
                for &j in &view.responses {
                    h = splitmix(h ^ ((j as u64) << 40 | u64::from(ctx.y(j).index())));
                }
                ctx.field.elem((h % u64::from(ctx.field.order())) as u32)
            })
        })
        .collect();
    CheatStrategy {
        params,
        causal,
        rounds,
        lineage: vec![Lineage::Random { seed }],
        game: None,
    }
}

/// Adds `x_reads` to the output of `round`. Reading a challenge outside the
/// round's view makes the strategy signal faster than allowed.
pub fn non_causal_mutant(s: &CheatStrategy, round: usize, reads: usize) -> Result<CheatStrategy> {
    if round == 0 || round > s.rounds.len() || reads == 0 || reads > s.params.challenge_count().min(round) {
        return Err(Error::InvalidParameter(format!("round {round} cannot read x_{reads}")));
    }
    let mut out = s.clone();
    let inner = s.rounds[round - 1].clone();
    out.rounds[round - 1] = Arc::new(move |ctx: &RoundContext| ctx.field.add(inner(ctx), ctx.x(reads)));
    out.lineage.push(Lineage::NonCausalMutant { round, reads });
    Ok(out)
}

/// Product of the window challenges `x_j`, `k < j <= k + rho`, with the
/// parity of `round`.
fn window_product(ctx: &RoundContext, k: usize, rho: usize, round: usize) -> FieldElement {
    let f = ctx.field;
    f.product((k + 1..=k + rho).filter(|j| j % 2 == round % 2).map(|j| ctx.x(j)))
}

fn tower_step_rounds(rounds: &mut [RoundFn], k: usize, rho: usize, game: &Arc<DetStrategy>) {
    let (r1, r2) = (k + rho, k + rho + 1);
    let g = game.clone();
    rounds[r1 - 1] = Arc::new(move |ctx: &RoundContext| {
        let f = ctx.field;
        let eta = ctx.eta(k);
        let a = g.answer1(window_product(ctx, k, rho, r1));
        signed(f, r1, f.mul(eta, a))
    });
    let g = game.clone();
    rounds[r2 - 1] = Arc::new(move |ctx: &RoundContext| {
        let f = ctx.field;
        let eta = ctx.eta(k);
        let b = g.answer2(window_product(ctx, k, rho, r2));
        signed(f, r2, f.mul(f.mul(eta, b), ctx.x(r2)))
    });
}

fn tower_steps(m: usize, causal: CausalModel) -> std::result::Result<usize, Error> {
    let (rho, k0) = (causal.rho, causal.k0);
    let step = rho + 1;
    if m > k0 && (m - k0).is_multiple_of(step) {
        return Ok((m - k0) / step);
    }
    let nearest = if m >= k0 + step {
        Some(k0 + (m - k0) / step * step)
    } else {
        Some(k0 + step)
    };
    Err(Error::NotTowerForm { m, nearest })
}

fn check_game(params: &ProtocolParams, game: &DetStrategy) -> Result<()> {
    if game.field().tag() != params.field().tag() {
        Err(Error::FieldMismatch)
    } else {
        Ok(())
    }
}

fn expect_variant(found: Variant, expected: Variant) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::VariantMismatch {
            expected: expected.name(),
            found: found.name(),
        })
    }
}

/// The recursive tower on P'_m for a general causal model: zero answers up
/// to round `k0`, then `t` steps of `rho + 1` rounds. Each step answers zero
/// for `rho - 1` rounds and then plays the game on the two window products,
/// scaled by the error `eta` of the prefix.
pub fn attack_general(params: &ProtocolParams, causal: CausalModel, game: DetStrategy) -> Result<CheatStrategy> {
    expect_variant(params.variant(), Variant::Symmetrized)?;
    check_game(params, &game)?;
    let m = params.rounds();
    let steps = tower_steps(m, causal)?;
    let mut rounds = vec![zero_fn(); m];
    let game_arc = Arc::new(game.clone());
    for s in 0..steps {
        tower_step_rounds(&mut rounds, causal.k0 + s * (causal.rho + 1), causal.rho, &game_arc);
    }
    Ok(CheatStrategy {
        params: params.clone(),
        causal,
        rounds,
        lineage: vec![Lineage::GeneralTower {
            rho: causal.rho,
            k0: causal.k0,
            steps,
        }],
        game: Some(game),
    })
}

/// The three-round tower on P'_{3t} with two-round propagation.
pub fn attack_base(params: &ProtocolParams, game: DetStrategy) -> Result<CheatStrategy> {
    let mut s = attack_general(params, CausalModel::base(), game)?;
    let steps = params.rounds() / 3;
    s.lineage = vec![Lineage::BaseTower { steps }];
    Ok(s)
}

/// Tower for P_m with any `m`: the longest tower that fits before the
/// opening, followed by zero answers. Zero answers keep a vanished error at
/// zero and shrink it further whenever a later challenge is `0`. With no
/// room for a tower step this is the all-zero strategy.
pub fn padded_attack(params: &ProtocolParams, causal: CausalModel, game: DetStrategy) -> Result<CheatStrategy> {
    expect_variant(params.variant(), Variant::Standard)?;
    check_game(params, &game)?;
    let m = params.response_count();
    let step = causal.rho + 1;
    let usable = params.challenge_count();
    let steps = if usable > causal.k0 { (usable - causal.k0) / step } else { 0 };
    let tower_len = if steps == 0 { 0 } else { causal.k0 + steps * step };
    let mut rounds = vec![zero_fn(); m];
    let game_arc = Arc::new(game.clone());
    for s in 0..steps {
        tower_step_rounds(&mut rounds, causal.k0 + s * step, causal.rho, &game_arc);
    }
    Ok(CheatStrategy {
        params: params.clone(),
        causal,
        rounds,
        lineage: vec![Lineage::PaddedTower {
            rho: causal.rho,
            k0: causal.k0,
            steps,
            padding: m - tower_len,
        }],
        game: Some(game),
    })
}

/// P_m strategy to P'_m: same answers, the opening multiplied by the new
/// challenge `x_m`.
pub fn symmetrize_up(s: &CheatStrategy) -> Result<CheatStrategy> {
    expect_variant(s.params.variant(), Variant::Standard)?;
    if s.params.is_single_round() {
        return Err(Error::InvalidParameter("the single-round protocol has no symmetrized form".into()));
    }
    let m = s.params.rounds();
    let params = ProtocolParams::symmetrized(s.field().clone(), m)?;
    let mut rounds = s.rounds.clone();
    let last = s.rounds[m - 1].clone();
    rounds[m - 1] = Arc::new(move |ctx: &RoundContext| {
        let inner = RoundContext {
            challenges: &ctx.challenges[..m - 1],
            ..*ctx
        };
        ctx.field.mul(ctx.x(m), last(&inner))
    });
    let mut lineage = s.lineage.clone();
    lineage.push(Lineage::SymmetrizedUp);
    Ok(CheatStrategy {
        params,
        causal: s.causal,
        rounds,
        lineage,
        game: s.game.clone(),
    })
}

/// P'_m strategy to P_{m+1}: same answers, then open with `0`.
pub fn desymmetrize(s: &CheatStrategy) -> Result<CheatStrategy> {
    expect_variant(s.params.variant(), Variant::Symmetrized)?;
    let params = ProtocolParams::standard(s.field().clone(), s.params.rounds() + 1)?;
    let mut rounds = s.rounds.clone();
    rounds.push(zero_fn());
    let mut lineage = s.lineage.clone();
    lineage.push(Lineage::Desymmetrized);
    Ok(CheatStrategy {
        params,
        causal: s.causal,
        rounds,
        lineage,
        game: s.game.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub round: usize,
    /// `"d"` or `"x_j"`.
    pub input: String,
    pub trial: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CausalityReport {
    pub causal: CausalModel,
    pub rounds: usize,
    pub trials: usize,
    pub perturbations: u64,
    pub violation_count: u64,
    /// The first violations found, capped.
    pub violations: Vec<Violation>,
}

impl CausalityReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

const MAX_REPORTED_VIOLATIONS: usize = 64;

/// For random transcripts, changes one input that round `k` must not see,
/// replays the whole game and checks that `y_k` is unchanged. Done for every
/// round and every hidden input, `trials` times.
pub fn causality_check(s: &CheatStrategy, causal: CausalModel, trials: usize, seed: u64) -> CausalityReport {
    let f = s.field().clone();
    let q = f.order();
    let n_x = s.params.challenge_count();
    let n_y = s.params.response_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CausalityReport {
        causal,
        rounds: n_y,
        trials,
        perturbations: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    let record = |report: &mut CausalityReport, v: Violation| {
        report.violation_count += 1;
        if report.violations.len() < MAX_REPORTED_VIOLATIONS {
            report.violations.push(v);
        }
    };
    let mut alt = Vec::with_capacity(n_y);
    for trial in 0..trials {
        let d = rng.random_bool(0.5);
        let xs: Vec<FieldElement> = (0..n_x).map(|_| f.random(&mut rng)).collect();
        let ys = s.play(d, &xs);
        for k in 1..=n_y {
            if !causal.knows_d(k) {
                report.perturbations += 1;
                s.play_into(!d, &xs, &mut alt);
                if alt[k - 1] != ys[k - 1] {
                    record(&mut report, Violation { round: k, input: "d".into(), trial });
                }
            }
            if q < 2 {
                continue;
            }
            for j in 1..=n_x.min(k) {
                if causal.sees(k, j) {
                    continue;
                }
                let mut px = xs.clone();
                let shift = rng.random_range(1..q);
                px[j - 1] = f.elem((xs[j - 1].index() + shift) % q);
                report.perturbations += 1;
                s.play_into(d, &px, &mut alt);
                if alt[k - 1] != ys[k - 1] {
                    record(&mut report, Violation { round: k, input: format!("x_{j}"), trial });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol;

    fn gf(q: u32) -> Arc<Field> {
        Field::with_order(q).unwrap()
    }

    #[test]
    fn causal_model_validation() {
        assert!(matches!(CausalModel::new(3, 0), Err(Error::InvalidPropagation(3))));
        assert!(CausalModel::new(0, 0).is_err());
        assert!(CausalModel::new(4, 2).is_ok());
    }

    #[test]
    fn base_view() {
        let c = CausalModel::base();
        let params = ProtocolParams::symmetrized(gf(2), 5).unwrap();
        let v = c.view(&params, 4);
        assert_eq!(v.challenges, vec![1, 2, 4]);
        assert_eq!(v.responses, vec![1, 2]);
        assert!(v.d_known);
        assert!(!c.view(&params, 1).d_known);
    }

    #[test]
    fn slow_propagation_view() {
        let c = CausalModel::new(4, 3).unwrap();
        let params = ProtocolParams::symmetrized(gf(2), 8).unwrap();
        let v = c.view(&params, 7);
        assert_eq!(v.challenges, vec![1, 2, 3, 5, 7]);
        assert!(!c.knows_d(3));
        assert!(c.knows_d(4));
    }

    #[test]
    fn eta_by_hand() {
        let f = gf(2);
        let (o, z) = (f.one(), f.zero());
        assert_eq!(compute_eta(&f, true, &[o, o, o], &[z, o, z]).unwrap(), z);
        assert_eq!(compute_eta(&f, false, &[o, z], &[z, z]).unwrap(), z);
        assert!(compute_eta(&f, true, &[o], &[]).is_err());
    }

    #[test]
    fn eta_recursion_matches_closed_form() {
        let f = gf(5);
        let params = ProtocolParams::symmetrized(f.clone(), 4).unwrap();
        let s = random_strategy(params, CausalModel::base(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let xs: Vec<_> = (0..4).map(|_| f.random(&mut rng)).collect();
            let ys = s.play(true, &xs);
            let tilde = protocol::tilde_transform(&f, &ys);
            let ctx = RoundContext {
                field: &f,
                round: 4,
                d: true,
                challenges: &xs,
                responses: &ys,
            };
            for k in 0..=4 {
                assert_eq!(ctx.eta(k), compute_eta(&f, true, &xs[..k], &tilde[..k]).unwrap());
            }
        }
    }

    #[test]
    fn base_tower_needs_multiple_of_three() {
        let f = gf(2);
        let game = DetStrategy::zeros(f.clone());
        let params = ProtocolParams::symmetrized(f.clone(), 5).unwrap();
        match attack_base(&params, game.clone()) {
            Err(Error::NotTowerForm { m: 5, nearest: Some(3) }) => {}
            other => panic!("{other:?}"),
        }
        let params = ProtocolParams::standard(f, 6).unwrap();
        assert!(matches!(attack_base(&params, game), Err(Error::VariantMismatch { .. })));
    }

    #[test]
    fn bit_zero_always_accepted_by_tower() {
        let f = gf(3);
        let params = ProtocolParams::symmetrized(f.clone(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = attack_base(&params, DetStrategy::random(f.clone(), &mut rng)).unwrap();
        protocol::for_each_tuple(3, 6, |t| {
            let xs: Vec<_> = t.iter().map(|&i| f.elem(i)).collect();
            let ys = s.play(false, &xs);
            assert!(ys.iter().all(|y| y.is_zero()));
        });
    }

    #[test]
    fn transforms_check_variant() {
        let f = gf(2);
        let sym = zero_strategy(ProtocolParams::symmetrized(f.clone(), 3).unwrap(), CausalModel::base());
        let std = zero_strategy(ProtocolParams::standard(f, 3).unwrap(), CausalModel::base());
        assert!(symmetrize_up(&sym).is_err());
        assert!(desymmetrize(&std).is_err());
        assert_eq!(desymmetrize(&sym).unwrap().params().rounds(), 4);
        assert_eq!(symmetrize_up(&std).unwrap().params().variant(), Variant::Symmetrized);
    }

    #[test]
    fn mutant_detected_at_its_round() {
        let f = gf(3);
        let params = ProtocolParams::standard(f, 4).unwrap();
        let s = zero_strategy(params, CausalModel::base());
        assert!(causality_check(&s, CausalModel::base(), 50, 0).passed());
        let bad = non_causal_mutant(&s, 3, 2).unwrap();
        let report = causality_check(&bad, CausalModel::base(), 50, 0);
        assert!(!report.passed());
        assert!(report.violations.iter().all(|v| v.round == 3 && v.input == "x_2"));
    }

    #[test]
    fn lineage_round_trip() {
        let f = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let game = DetStrategy::random(f.clone(), &mut rng);
        let params = ProtocolParams::symmetrized(f.clone(), 3).unwrap();
        let s = desymmetrize(&attack_base(&params, game).unwrap()).unwrap();
        let meta = s.meta();
        let json = serde_json::to_string(&meta).unwrap();
        let back = CheatStrategy::from_meta(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.meta(), meta);
        protocol::for_each_tuple(3, 3, |t| {
            let xs: Vec<_> = t.iter().map(|&i| f.elem(i)).collect();
            for d in [false, true] {
                assert_eq!(back.play(d, &xs), s.play(d, &xs));
            }
        });
    }
}
