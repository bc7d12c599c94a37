//! Success probabilities of cheating strategies: exact, sampled, and the
//! closed-form bounds they are compared against.

use std::io::Write;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::adversary::{self, signed, CausalModel, CheatStrategy, RoundContext};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::games::{self, DetStrategy, GameDist, GameValueResult};
use crate::protocol::{self, ProtocolParams, Variant};
use crate::rational::{self, Rational};

/// Largest number of `(d, challenges)` points enumerated exactly.
pub const EXACT_CAP: u128 = 100_000_000;
pub const MIN_MC_SAMPLES: u64 = 100;
pub const CONFIDENCE: f64 = 0.99;

const MC_BATCH: u64 = 1 << 12;

/// Derives an independent seed for a named purpose.
pub fn substream(seed: u64, name: &str, index: &[u64]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in name.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x1000_0000_01b3);
    }
    for &i in index {
        h = (h ^ i).wrapping_mul(0x1000_0000_01b3);
        h ^= h >> 29;
    }
    h
}

fn enumeration_size(params: &ProtocolParams) -> u128 {
    let q = u128::from(params.field().order());
    q.checked_pow(params.challenge_count() as u32)
        .and_then(|v| v.checked_mul(2))
        .unwrap_or(u128::MAX)
}

pub fn is_enumerable(params: &ProtocolParams) -> bool {
    enumeration_size(params) <= EXACT_CAP
}

struct Walker<'a> {
    s: &'a CheatStrategy,
    field: &'a Field,
    last: usize,
    n_x: usize,
    variant: Variant,
    d: bool,
    xs: Vec<FieldElement>,
    ys: Vec<FieldElement>,
}

impl Walker<'_> {
    fn answer(&self, round: usize) -> FieldElement {
        self.s.respond(&RoundContext {
            field: self.field,
            round,
            d: self.d,
            challenges: &self.xs,
            responses: &self.ys,
        })
    }

    /// Places `x` as the next challenge, answers it, recurses, and undoes.
    fn step(&mut self, x: FieldElement, eta: FieldElement) -> u64 {
        let f = self.field;
        self.xs.push(x);
        let k = self.xs.len();
        let y = self.answer(k);
        self.ys.push(y);
        let eta = f.sub(f.mul(x, eta), signed(f, k, y));
        let wins = self.descend(eta);
        self.ys.pop();
        self.xs.pop();
        wins
    }

    fn descend(&mut self, eta: FieldElement) -> u64 {
        if self.xs.len() == self.n_x {
            return u64::from(match self.variant {
                Variant::Symmetrized => eta.is_zero(),
                Variant::Standard => signed(self.field, self.last, self.answer(self.last)) == eta,
            });
        }
        let mut wins = 0;
        for x in self.field.elements() {
            wins += self.step(x, eta);
        }
        wins
    }
}

/// Exact success probability: the fraction of `(d, x_1, ..)` for which the
/// strategy's transcript is accepted.
///
/// The challenge tree is walked depth first with the running error `eta`,
/// so each strategy round is evaluated once per prefix.
pub fn exact_cheat_probability(s: &CheatStrategy) -> Result<Rational> {
    let params = s.params();
    let size = enumeration_size(params);
    if size > EXACT_CAP {
        return Err(Error::CapExceeded {
            what: "exact enumeration (use Monte Carlo)",
            needed: size,
            cap: EXACT_CAP,
        });
    }
    let f = params.field().clone();
    let roots: Vec<(bool, u32)> = [false, true]
        .into_iter()
        .flat_map(|d| (0..f.order()).map(move |x| (d, x)))
        .collect();
    let wins: u64 = roots
        .into_par_iter()
        .map(|(d, x)| {
            let mut w = Walker {
                s,
                field: &f,
                last: params.response_count(),
                n_x: params.challenge_count(),
                variant: params.variant(),
                d,
                xs: Vec::with_capacity(params.challenge_count()),
                ys: Vec::with_capacity(params.response_count()),
            };
            w.step(f.elem(x), f.from_bit(d))
        })
        .sum();
    Ok(rational::ratio(u128::from(wins), size))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub half_width: f64,
    pub confidence: f64,
    pub samples: u64,
    pub successes: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Inverts a monotone increasing `g` on `[0, 1]` by bisection.
fn bisect(target: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact binomial (Clopper-Pearson) interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        bisect(alpha / 2.0, |p| beta_reg(kf, nf - kf + 1.0, p))
            .max(0.0)
            .min(kf / nf)
    };
    let hi = if k == n {
        1.0
    } else {
        bisect(1.0 - alpha / 2.0, |p| beta_reg(kf + 1.0, nf - kf, p))
            .min(1.0)
            .max(kf / nf)
    };
    (lo, hi)
}

/// Monte Carlo estimate over uniform `(d, challenges)` with a 99% exact
/// binomial interval. Samples are drawn in fixed-size batches, each from
/// its own stream of `seed`, so the result does not depend on scheduling.
pub fn mc_cheat_probability(s: &CheatStrategy, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let params = s.params();
    let f = params.field();
    let batches = samples.div_ceil(MC_BATCH);
    let successes: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = MC_BATCH.min(samples - b * MC_BATCH);
            let mut xs = vec![f.zero(); params.challenge_count()];
            let mut ys = Vec::with_capacity(params.response_count());
            let mut wins = 0;
            for _ in 0..n {
                let d: bool = rng.random();
                for x in xs.iter_mut() {
                    *x = f.random(&mut rng);
                }
                s.play_into(d, &xs, &mut ys);
                wins += u64::from(protocol::accepts(params, d, &xs, &ys));
            }
            wins
        })
        .sum();
    let (ci_low, ci_high) = clopper_pearson(successes, samples, CONFIDENCE);
    Ok(McEstimate {
        mean: successes as f64 / samples as f64,
        ci_low,
        ci_high,
        half_width: 0.5 * (ci_high - ci_low),
        confidence: CONFIDENCE,
        samples,
        successes,
        seed,
    })
}

/// Plays `s` against `count` random commitments and challenge sequences.
pub fn sample_transcripts(s: &CheatStrategy, count: usize, seed: u64) -> Vec<protocol::Transcript> {
    let params = s.params();
    let f = params.field();
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, "transcripts", &[]));
    (0..count)
        .map(|_| {
            let d: bool = rng.random();
            let challenges: Vec<_> = (0..params.challenge_count()).map(|_| f.random(&mut rng)).collect();
            let responses = s.play(d, &challenges);
            let accepted = protocol::accepts(params, d, &challenges, &responses);
            protocol::Transcript {
                d,
                challenges,
                responses,
                accepted,
            }
        })
        .collect()
}

/// Number of guaranteed game attempts in the lower bound for `m` rounds.
pub fn bound_exponent(m: usize, rho: usize, k0: usize) -> Result<usize> {
    if rho < 2 || !rho.is_multiple_of(2) {
        return Err(Error::InvalidPropagation(rho));
    }
    if rho == 2 && k0 == 0 {
        if m < 3 {
            return Err(Error::Domain(format!("the bound needs m >= 3, got {m}")));
        }
        Ok((m - 1) / 3)
    } else {
        if m < k0 + 2 {
            return Err(Error::Domain(format!("the bound needs m >= k0 + 2 = {}, got {m}", k0 + 2)));
        }
        Ok((m - k0 - 1) / (rho + 1))
    }
}

fn check_unit(w: &Rational) -> Result<()> {
    if rational::in_unit_interval(w) {
        Ok(())
    } else {
        Err(Error::Domain(format!("game value {} outside [0, 1]", rational::format(w))))
    }
}

/// `1 - (1/2) ((1 - 1/Q)(1 - w))^e` with `e` from [`bound_exponent`].
pub fn theory_lower_bound(m: usize, q: u32, w: &Rational, rho: usize, k0: usize) -> Result<Rational> {
    check_unit(w)?;
    let e = bound_exponent(m, rho, k0)?;
    let r = rational::ratio(u128::from(q) - 1, u128::from(q)) * (Rational::one() - w);
    Ok(Rational::one() - rational::half() * rational::pow(&r, e))
}

/// `min(1, 1/2 + c m / sqrt(Q))`.
pub fn theory_upper_bound(m: usize, q: u32, c: f64) -> f64 {
    (0.5 + c * m as f64 / f64::from(q).sqrt()).min(1.0)
}

/// `1 - (1/2) exp(-t/3)` with `t = m / sqrt(Q)`.
pub fn corollary_value(m: usize, q: u32) -> f64 {
    let t = m as f64 / f64::from(q).sqrt();
    1.0 - 0.5 * (-t / 3.0).exp()
}

/// Binding constant a measured probability `g` would require:
/// `(g - 1/2) sqrt(Q) / m`.
pub fn required_constant(g: f64, m: usize, q: u32) -> f64 {
    (g - 0.5) * f64::from(q).sqrt() / m as f64
}

/// Closed form of [`adversary::padded_attack`] on P_m when the plugged
/// strategy wins the window game with probability `w`:
/// the attack fails iff `d = 1`, the game is lost at every step, and every
/// challenge not inside a game window is nonzero.
pub fn padded_attack_value(m: usize, q: u32, w: &Rational, causal: CausalModel) -> Result<Rational> {
    check_unit(w)?;
    let n_x = if m <= 1 { 1 } else { m - 1 };
    let step = causal.rho() + 1;
    let steps = if n_x > causal.k0() { (n_x - causal.k0()) / step } else { 0 };
    let nonzero = rational::ratio(u128::from(q) - 1, u128::from(q));
    let fail = rational::half()
        * rational::pow(&nonzero, n_x - steps * causal.rho())
        * rational::pow(&(Rational::one() - w), steps);
    Ok(Rational::one() - fail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mc,
    /// Exact when under the enumeration cap, otherwise Monte Carlo.
    Auto,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheatReport {
    #[serde(serialize_with = "rational::serialize_opt")]
    pub exact: Option<Rational>,
    pub exact_f64: Option<f64>,
    pub estimate: Option<McEstimate>,
    #[serde(serialize_with = "rational::serialize_opt")]
    pub theory_lower: Option<Rational>,
    pub theory_upper: f64,
    pub c: f64,
    /// Measured probability minus 1/2.
    pub epsilon: f64,
    pub required_c: f64,
}

/// Evaluates `s` and sets it against the bounds. `w` is the value of the
/// game strategy the attack plugs in; without it no lower bound is given.
pub fn cheat_report(s: &CheatStrategy, method: Method, samples: u64, seed: u64, w: Option<&Rational>, c: f64) -> Result<CheatReport> {
    let params = s.params();
    let run_exact = match method {
        Method::Exact => true,
        Method::Mc => false,
        Method::Auto => is_enumerable(params),
    };
    let (exact, estimate) = if run_exact {
        (Some(exact_cheat_probability(s)?), None)
    } else {
        (None, Some(mc_cheat_probability(s, samples, seed)?))
    };
    let g = match (&exact, &estimate) {
        (Some(e), _) => rational::to_f64(e),
        (None, Some(est)) => est.mean,
        _ => unreachable!(),
    };
    let causal = s.causal();
    let m = params.rounds();
    let q = params.field().order();
    let theory_lower = match w {
        Some(w) => match theory_lower_bound(m, q, w, causal.rho(), causal.k0()) {
            Ok(v) => Some(v),
            Err(Error::Domain(_)) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    Ok(CheatReport {
        exact_f64: exact.as_ref().map(rational::to_f64),
        exact,
        estimate,
        theory_lower,
        theory_upper: theory_upper_bound(m, q, c),
        c,
        epsilon: g - 0.5,
        required_c: required_constant(g, m, q),
    })
}

#[derive(Debug, Clone)]
pub enum StrategySource {
    BruteForce,
    Search { restarts: usize, max_iters: usize },
    /// A fixed strategy, for its own field only.
    Fixed(DetStrategy),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub qs: Vec<u32>,
    pub ms: Vec<usize>,
    pub causal: CausalModel,
    pub source: StrategySource,
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
    pub c: f64,
}

/// Game strategy for the window game of `causal` over `field`, and its exact
/// value there.
pub fn window_game_strategy(
    field: &Arc<Field>,
    causal: CausalModel,
    source: &StrategySource,
    seed: u64,
) -> Result<GameValueResult> {
    let dist = GameDist::for_propagation(field.clone(), causal.rho())?;
    match source {
        StrategySource::BruteForce => games::brute_force_value(&dist),
        StrategySource::Search { restarts, max_iters } => games::best_response_search(
            &dist,
            *restarts,
            *max_iters,
            substream(seed, "search", &[u64::from(field.order())]),
        ),
        StrategySource::Fixed(s) => {
            if s.field().tag() != field.tag() {
                return Err(Error::InvalidParameter(format!(
                    "fixed strategy is over {}, sweep asks for {}",
                    s.field(),
                    field
                )));
            }
            Ok(GameValueResult {
                value: games::win_probability(s, &dist)?,
                strategy: s.clone(),
                method: games::ValueMethod::BruteForce,
                meta: None,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub q: u32,
    pub m: usize,
    pub rho: usize,
    pub k0: usize,
    #[serde(serialize_with = "rational::serialize")]
    pub w: Rational,
    #[serde(serialize_with = "rational::serialize_opt")]
    pub exact: Option<Rational>,
    pub mc: Option<McEstimate>,
    #[serde(serialize_with = "rational::serialize_opt")]
    pub lower_bound: Option<Rational>,
    pub upper_bound_c: f64,
    pub t: f64,
    pub corollary: f64,
}

impl SweepRow {
    /// Interval known to contain the attack probability (a point when exact).
    pub fn interval(&self) -> (f64, f64) {
        match (&self.exact, &self.mc) {
            (Some(e), _) => {
                let v = rational::to_f64(e);
                (v, v)
            }
            (None, Some(mc)) => (mc.ci_low, mc.ci_high),
            _ => (f64::NAN, f64::NAN),
        }
    }

    pub fn point(&self) -> f64 {
        match (&self.exact, &self.mc) {
            (Some(e), _) => rational::to_f64(e),
            (None, Some(mc)) => mc.mean,
            _ => f64::NAN,
        }
    }

    /// Attack probability is at least the lower bound: exactly, or with the
    /// bound below the upper end of the interval.
    pub fn meets_lower_bound(&self) -> bool {
        match (&self.lower_bound, &self.exact) {
            (None, _) => true,
            (Some(lb), Some(e)) => e >= lb,
            (Some(lb), None) => self.interval().1 >= rational::to_f64(lb),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub c: f64,
    /// Smallest constant `c` consistent with every measured row.
    pub c_star: Option<f64>,
    pub monotone: bool,
    pub above_lower_bound: bool,
}

/// `next` is not below `prev`: exactly for exact pairs, otherwise the
/// intervals must be compatible.
fn non_decreasing(prev: &SweepRow, next: &SweepRow) -> bool {
    match (&prev.exact, &next.exact) {
        (Some(a), Some(b)) => b >= a,
        _ => next.interval().1 >= prev.interval().0,
    }
}

/// Padded attacks on P_m over the grid, each row compared with the lower
/// bound, the `c m / sqrt(Q)` upper bound and the `1 - e^{-t/3}/2` trend.
pub fn corollary_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    if cfg.samples < MIN_MC_SAMPLES && cfg.method != Method::Exact {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {}",
            cfg.samples
        )));
    }
    let mut ms = cfg.ms.clone();
    ms.sort_unstable();
    ms.dedup();
    let mut rows = Vec::new();
    let mut monotone = true;
    for &q in &cfg.qs {
        let field = Field::with_order(q)?;
        if ms.is_empty() {
            continue;
        }
        let game = window_game_strategy(&field, cfg.causal, &cfg.source, cfg.seed)?;
        let w = game.value.clone();
        let first = rows.len();
        for &m in &ms {
            let params = ProtocolParams::standard(field.clone(), m)?;
            let s = adversary::padded_attack(&params, cfg.causal, game.strategy.clone())?;
            let run_exact = match cfg.method {
                Method::Exact => true,
                Method::Mc => false,
                Method::Auto => is_enumerable(&params),
            };
            let (exact, mc) = if run_exact {
                (Some(exact_cheat_probability(&s)?), None)
            } else {
                let seed = substream(cfg.seed, "mc", &[u64::from(q), m as u64]);
                (None, Some(mc_cheat_probability(&s, cfg.samples, seed)?))
            };
            let lower_bound = match theory_lower_bound(m, q, &w, cfg.causal.rho(), cfg.causal.k0()) {
                Ok(v) => Some(v),
                Err(Error::Domain(_)) => None,
                Err(e) => return Err(e),
            };
            rows.push(SweepRow {
                q,
                m,
                rho: cfg.causal.rho(),
                k0: cfg.causal.k0(),
                w: w.clone(),
                exact,
                mc,
                lower_bound,
                upper_bound_c: theory_upper_bound(m, q, cfg.c),
                t: m as f64 / f64::from(q).sqrt(),
                corollary: corollary_value(m, q),
            });
        }
        monotone &= rows[first..].windows(2).all(|p| non_decreasing(&p[0], &p[1]));
    }
    let above_lower_bound = rows.iter().all(SweepRow::meets_lower_bound);
    let c_star = rows
        .iter()
        .map(|r| required_constant(r.point(), r.m, r.q))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(SweepTable {
        rows,
        c: cfg.c,
        c_star,
        monotone,
        above_lower_bound,
    })
}

/// One CSV line of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub q: u32,
    pub m: usize,
    pub rho: usize,
    pub k0: usize,
    pub w_num: String,
    pub w_den: String,
    pub g_num: Option<String>,
    pub g_den: Option<String>,
    pub mc_mean: Option<f64>,
    pub mc_ci_low: Option<f64>,
    pub mc_ci_high: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound_c: f64,
    pub t: f64,
    pub corollary: f64,
}

impl From<&SweepRow> for SweepRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            q: r.q,
            m: r.m,
            rho: r.rho,
            k0: r.k0,
            w_num: r.w.numer().to_string(),
            w_den: r.w.denom().to_string(),
            g_num: r.exact.as_ref().map(|g| g.numer().to_string()),
            g_den: r.exact.as_ref().map(|g| g.denom().to_string()),
            mc_mean: r.mc.as_ref().map(|e| e.mean),
            mc_ci_low: r.mc.as_ref().map(|e| e.ci_low),
            mc_ci_high: r.mc.as_ref().map(|e| e.ci_high),
            lower_bound: r.lower_bound.as_ref().map(rational::to_f64),
            upper_bound_c: r.upper_bound_c,
            t: r.t,
            corollary: r.corollary,
        }
    }
}

pub const SWEEP_COLUMNS: [&str; 15] = [
    "q", "m", "rho", "k0", "w_num", "w_den", "g_num", "g_den", "mc_mean", "mc_ci_low", "mc_ci_high",
    "lower_bound", "upper_bound_c", "t", "corollary",
];

pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for r in &table.rows {
        w.serialize(SweepRecord::from(r)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(format!("csv output: {e}")))?;
    Ok(())
}

/// JSON form of a sweep with flat records.
pub fn sweep_json(table: &SweepTable) -> serde_json::Value {
    let records: Vec<SweepRecord> = table.rows.iter().map(SweepRecord::from).collect();
    serde_json::json!({
        "columns": SWEEP_COLUMNS,
        "rows": records,
        "c": table.c,
        "c_star": table.c_star,
        "monotone": table.monotone,
        "above_lower_bound": table.above_lower_bound,
    })
}

/// Zero is a valid value for `w`; this is the bound with no game wins.
pub fn luck_only_bound(m: usize, q: u32) -> Result<Rational> {
    theory_lower_bound(m, q, &Rational::zero(), 2, 0)
}
