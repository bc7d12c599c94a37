//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relbc_core::adversary::{
    attack_base, attack_general, causality_check, desymmetrize, honest_strategy, non_causal_mutant,
    padded_attack, random_strategy, symmetrize_up, CausalModel, CheatStrategy,
};
use relbc_core::analysis::{self, exact_cheat_probability, mc_cheat_probability, Method, StrategySource, SweepConfig};
use relbc_core::field::check_axioms;
use relbc_core::games::{self, brute_force_value, best_response_search, win_probability, DetStrategy, GameDist};
use relbc_core::protocol::{self, hiding_distribution, ProtocolParams, Transcript};
use relbc_core::rational::{self, Rational};
use relbc_core::Field;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gf(q: u32) -> Arc<Field> {
    Field::with_order(q).expect("supported order")
}

fn r(n: u128, d: u128) -> Rational {
    rational::ratio(n, d)
}

/// Calls `visit` on every vector in `[0, q)^len`.
fn tuples(q: u32, len: usize, mut visit: impl FnMut(&[u32])) {
    let mut t = vec![0u32; len];
    'outer: loop {
        visit(&t);
        for pos in (0..len).rev() {
            t[pos] += 1;
            if t[pos] < q {
                continue 'outer;
            }
            t[pos] = 0;
        }
        return;
    }
}

/// Success probability by playing every `(d, challenges)` point and asking
/// the verifier.
fn naive_probability(s: &CheatStrategy) -> Rational {
    let params = s.params();
    let f = params.field();
    let n = params.challenge_count();
    let (mut wins, mut total) = (0u128, 0u128);
    for d in [false, true] {
        tuples(f.order(), n, |t| {
            let xs: Vec<_> = t.iter().map(|&i| f.elem(i)).collect();
            let ys = s.play(d, &xs);
            let tr = Transcript {
                d,
                challenges: xs,
                responses: ys,
                accepted: false,
            };
            total += 1;
            wins += u128::from(protocol::verify(&tr, params).expect("well formed"));
        });
    }
    r(wins, total)
}

/// Value of CHSH over Z_p by trying every pair of answer tables.
fn pair_enumeration_value(p: u32) -> Rational {
    let q = p as usize;
    let mut tables = Vec::new();
    tuples(p, q, |t| tables.push(t.to_vec()));
    let mut best = 0u128;
    for s1 in &tables {
        for s2 in &tables {
            let mut wins = 0u128;
            for x in 0..q {
                for y in 0..q {
                    if (s1[x] + s2[y]) % p == (x as u32 * y as u32) % p {
                        wins += 1;
                    }
                }
            }
            best = best.max(wins);
        }
    }
    r(best, (q * q) as u128)
}

fn criterion_1() -> Check {
    let orders = [2, 3, 4, 5, 8, 9, 16, 25];
    for (i, q) in orders.into_iter().enumerate() {
        let rep = check_axioms(&gf(q), 10_000, 1000 + i as u64);
        ensure(rep.passed(), || format!("GF({q}): {:?}", rep.violations))?;
    }
    Ok(format!("10^4 triples on GF({orders:?})"))
}

fn criterion_2() -> Check {
    let t = Instant::now();
    let v2 = brute_force_value(&GameDist::uniform(gf(2))).map_err(|e| e.to_string())?.value;
    ensure(v2 == r(3, 4), || format!("Q=2 value {v2}"))?;
    ensure(t.elapsed() < Duration::from_secs(1), || "Q=2 over 1 s".into())?;

    let t = Instant::now();
    let v3 = brute_force_value(&GameDist::uniform(gf(3))).map_err(|e| e.to_string())?.value;
    let oracle3 = pair_enumeration_value(3);
    ensure(v3 == oracle3, || format!("Q=3 brute {v3} vs pairs {oracle3}"))?;
    ensure(t.elapsed() < Duration::from_secs(1), || "Q=3 over 1 s".into())?;

    let t = Instant::now();
    let dist4 = GameDist::uniform(gf(4));
    let v4 = brute_force_value(&dist4).map_err(|e| e.to_string())?.value;
    let s4 = best_response_search(&dist4, 64, 1000, 42).map_err(|e| e.to_string())?.value;
    ensure(v4 == s4, || format!("Q=4 brute {v4} vs search {s4}"))?;
    ensure(t.elapsed() < Duration::from_secs(30), || "Q=4 over 30 s".into())?;
    Ok(format!("Q=2 {v2}, Q=3 {v3} (= 27x27 pairs), Q=4 {v4} (= search, 64 restarts)"))
}

fn criterion_3() -> Check {
    let mut lines = Vec::new();
    for q in [2, 3] {
        let f = gf(q);
        let uniform = brute_force_value(&GameDist::uniform(f.clone())).map_err(|e| e.to_string())?.value;
        for gamma in [r(1, 2), r(3, 4)] {
            let dist = GameDist::biased(f.clone(), gamma.clone()).map_err(|e| e.to_string())?;
            let biased = brute_force_value(&dist).map_err(|e| e.to_string())?.value;
            ensure(biased >= uniform, || format!("Q={q} gamma={gamma}: {biased} < {uniform}"))?;
            lines.push(format!("Q={q} g={gamma}: {biased} >= {uniform}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in [2, 3, 4, 5] {
        let f = gf(q);
        for gamma in [r(1, 2), r(3, 4)] {
            let dist = GameDist::biased(f.clone(), gamma).map_err(|e| e.to_string())?;
            for _ in 0..20 {
                let s = DetStrategy::random(f.clone(), &mut rng);
                let z = games::shift_values(&s, &dist).map_err(|e| e.to_string())?;
                let mean = z.iter().fold(Rational::from_integer(0.into()), |a, v| a + v) / r(u128::from(q * q), 1);
                let uniform = win_probability(&s, &GameDist::uniform(f.clone())).map_err(|e| e.to_string())?;
                ensure(mean == uniform, || format!("Q={q}: shift mean {mean} vs uniform {uniform}"))?;
            }
        }
    }
    Ok(format!("{}; shift averages exact for 20 strategies x Q in 2..5 x 2 gammas", lines.join(", ")))
}

fn criterion_4() -> Check {
    let f = gf(2);
    let opt = brute_force_value(&GameDist::uniform(f.clone())).map_err(|e| e.to_string())?;
    let w = opt.value.clone();
    ensure(w == r(3, 4), || format!("optimal value {w}"))?;
    let factor = r(1, 2) * (r(1, 1) - &w);
    let mut expected = r(1, 1) - r(1, 2) * &factor;
    let targets = [r(15, 16), r(127, 128), r(1023, 1024)];
    let mut prev: Option<Rational> = None;
    for (i, m) in [3, 6, 9].into_iter().enumerate() {
        let params = ProtocolParams::symmetrized(f.clone(), m).map_err(|e| e.to_string())?;
        let s = attack_base(&params, opt.strategy.clone()).map_err(|e| e.to_string())?;
        let g = exact_cheat_probability(&s).map_err(|e| e.to_string())?;
        ensure(g == expected, || format!("P'_{m}: {g} vs recurrence {expected}"))?;
        ensure(g == targets[i], || format!("P'_{m}: {g} vs {}", targets[i]))?;
        let naive = naive_probability(&s);
        ensure(naive == g, || format!("P'_{m}: verifier enumeration {naive} vs {g}"))?;
        if let Some(p) = prev {
            let lhs = r(1, 1) - &g;
            let rhs = &factor * (r(1, 1) - p);
            ensure(lhs == rhs, || format!("step P'_{m}: {lhs} vs {rhs}"))?;
        }
        prev = Some(g);
        expected = r(1, 1) - &factor * (r(1, 1) - &expected);
    }
    Ok("P'_3 = 15/16, P'_6 = 127/128, P'_9 = 1023/1024".into())
}

/// Pointwise winning-set inclusions along `s -> s' -> S`, and the exact
/// probability chain.
fn chain_holds(s: &CheatStrategy) -> std::result::Result<(), String> {
    let params = s.params().clone();
    let f = params.field().clone();
    let q = f.order();
    let m = params.rounds();
    let up = symmetrize_up(s).map_err(|e| e.to_string())?;
    let down = desymmetrize(&up).map_err(|e| e.to_string())?;
    let accepts = |st: &CheatStrategy, d: bool, xs: &[relbc_core::FieldElement]| {
        let ys = st.play(d, xs);
        protocol::accepts(st.params(), d, xs, &ys)
    };
    let mut err = None;
    for d in [false, true] {
        tuples(q, m, |t| {
            let xs: Vec<_> = t.iter().map(|&i| f.elem(i)).collect();
            let s_wins = accepts(s, d, &xs[..m - 1]);
            let up_wins = accepts(&up, d, &xs);
            let down_wins = accepts(&down, d, &xs);
            if (s_wins && !up_wins) || (up_wins && !down_wins) {
                err.get_or_insert(format!("inclusion fails at d={d} x={t:?}"));
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    let g = exact_cheat_probability(s).map_err(|e| e.to_string())?;
    let g_up = exact_cheat_probability(&up).map_err(|e| e.to_string())?;
    let g_down = exact_cheat_probability(&down).map_err(|e| e.to_string())?;
    ensure(g <= g_up && g_up <= g_down, || format!("{g} <= {g_up} <= {g_down} fails"))
}

fn criterion_5() -> Check {
    for (q, m) in [(2, 4), (3, 3)] {
        for seed in 0..20 {
            let params = ProtocolParams::standard(gf(q), m).map_err(|e| e.to_string())?;
            let s = random_strategy(params, CausalModel::base(), seed);
            chain_holds(&s).map_err(|e| format!("Q={q} m={m} seed={seed}: {e}"))?;
        }
    }
    Ok("20 random strategies at (Q=2, m=4) and (Q=3, m=3)".into())
}

fn criterion_6() -> Check {
    let f = gf(2);
    let causal = CausalModel::new(4, 0).map_err(|e| e.to_string())?;
    let dist = GameDist::for_propagation(f.clone(), 4).map_err(|e| e.to_string())?;
    ensure(*dist.gamma() == r(3, 4), || format!("gamma {}", dist.gamma()))?;
    let game = brute_force_value(&dist).map_err(|e| e.to_string())?.strategy;
    let w_gamma = win_probability(&game, &dist).map_err(|e| e.to_string())?;
    let params = ProtocolParams::symmetrized(f.clone(), 5).map_err(|e| e.to_string())?;
    let s = attack_general(&params, causal, game).map_err(|e| e.to_string())?;
    let g = exact_cheat_probability(&s).map_err(|e| e.to_string())?;
    let expected = r(1, 1) - r(1, 2) * r(1, 2) * (r(1, 1) - &w_gamma);
    ensure(g == expected, || format!("g = {g}, closed form {expected}"))?;
    let naive = naive_probability(&s);
    ensure(naive == g, || format!("verifier enumeration {naive} vs {g}"))?;

    // rho = 2, k0 = 0 is the base tower
    for q in [2, 3] {
        let f = gf(q);
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from(q));
        let game = DetStrategy::random(f.clone(), &mut rng);
        for m in [3, 6] {
            let params = ProtocolParams::symmetrized(f.clone(), m).map_err(|e| e.to_string())?;
            let base = attack_base(&params, game.clone()).map_err(|e| e.to_string())?;
            let general = attack_general(&params, CausalModel::new(2, 0).unwrap(), game.clone()).map_err(|e| e.to_string())?;
            let mut same = true;
            for d in [false, true] {
                tuples(q, m, |t| {
                    let xs: Vec<_> = t.iter().map(|&i| f.elem(i)).collect();
                    same &= base.play(d, &xs) == general.play(d, &xs);
                });
            }
            ensure(same, || format!("rho=2 tower differs from base tower at Q={q} m={m}"))?;
        }
    }
    Ok(format!("g'_5 = {g} = 1 - (1/2)(1/2)(1 - {w_gamma}); rho=2 matches base outputs"))
}

fn criterion_7() -> Check {
    let mut checked = 0;
    for (q, max_m) in [(2, 4), (3, 3)] {
        for m in 1..=max_m {
            let params = if m == 1 {
                ProtocolParams::single_round(gf(q))
            } else {
                ProtocolParams::standard(gf(q), m).map_err(|e| e.to_string())?
            };
            for upto in 1..params.response_count() {
                let h = hiding_distribution(&params, upto).map_err(|e| e.to_string())?;
                ensure(h.identical(), || format!("Q={q} m={m}: views differ after round {upto}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} pre-opening prefixes identical for d=0 and d=1"))
}

fn criterion_8() -> Check {
    let trials = 1000;
    let mut subjects: Vec<(String, CheatStrategy)> = Vec::new();
    let f2 = gf(2);
    let f3 = gf(3);
    let opt2 = brute_force_value(&GameDist::uniform(f2.clone())).unwrap().strategy;
    let opt3 = brute_force_value(&GameDist::uniform(f3.clone())).unwrap().strategy;
    for m in [3, 6, 9] {
        let p = ProtocolParams::symmetrized(f2.clone(), m).unwrap();
        subjects.push((format!("base P'_{m} Q=2"), attack_base(&p, opt2.clone()).unwrap()));
    }
    let p = ProtocolParams::symmetrized(f3.clone(), 6).unwrap();
    let base3 = attack_base(&p, opt3.clone()).unwrap();
    subjects.push(("desymmetrized base P_7 Q=3".into(), desymmetrize(&base3).unwrap()));
    subjects.push(("base P'_6 Q=3".into(), base3));
    for (rho, k0, m) in [(4, 0, 5), (4, 2, 7), (6, 1, 15)] {
        let c = CausalModel::new(rho, k0).unwrap();
        let dist = GameDist::for_propagation(f2.clone(), rho).unwrap();
        let g = brute_force_value(&dist).unwrap().strategy;
        let p = ProtocolParams::symmetrized(f2.clone(), m).unwrap();
        subjects.push((format!("general rho={rho} k0={k0} P'_{m}"), attack_general(&p, c, g.clone()).unwrap()));
        let p = ProtocolParams::standard(f2.clone(), m + 3).unwrap();
        subjects.push((format!("padded rho={rho} k0={k0} P_{}", m + 3), padded_attack(&p, c, g).unwrap()));
    }
    let p = ProtocolParams::standard(f3.clone(), 5).unwrap();
    subjects.push(("padded base P_5 Q=3".into(), padded_attack(&p, CausalModel::base(), opt3).unwrap()));
    let honest = honest_strategy(p.clone(), CausalModel::base(), true, 9);
    subjects.push(("symmetrized honest P'_5".into(), symmetrize_up(&honest).unwrap()));
    subjects.push(("honest P_5".into(), honest));

    for (name, s) in &subjects {
        let rep = causality_check(s, s.causal(), trials, 17);
        ensure(rep.passed(), || format!("{name}: {:?}", rep.violations.first()))?;
    }

    let p = ProtocolParams::symmetrized(f2.clone(), 6).unwrap();
    let base = attack_base(&p, opt2).unwrap();
    let mutant = non_causal_mutant(&base, 5, 4).unwrap();
    let rep = causality_check(&mutant, mutant.causal(), trials, 17);
    ensure(!rep.passed(), || "mutant reading x_4 in round 5 not flagged".into())?;
    ensure(rep.violations.iter().all(|v| v.round == 5 && v.input == "x_4"), || {
        format!("unexpected violations {:?}", rep.violations.first())
    })?;
    Ok(format!(
        "{} constructed strategies clean over {trials} trials/round; mutant flagged {} times",
        subjects.len(),
        rep.violation_count
    ))
}

fn criterion_9() -> Check {
    let f = gf(2);
    let opt = brute_force_value(&GameDist::uniform(f.clone())).unwrap().strategy;
    let p = ProtocolParams::symmetrized(f, 6).unwrap();
    let s = attack_base(&p, opt).unwrap();
    let exact = rational::to_f64(&r(127, 128));
    let mut covered = 0;
    for seed in 0..200 {
        let est = mc_cheat_probability(&s, 10_000, seed).map_err(|e| e.to_string())?;
        covered += u32::from(est.covers(exact));
    }
    ensure(covered >= 195, || format!("only {covered}/200 intervals cover 127/128"))?;
    Ok(format!("{covered}/200 99% intervals cover 127/128"))
}

fn criterion_10() -> Check {
    let q = 16;
    let f = gf(q);
    let game = analysis::window_game_strategy(
        &f,
        CausalModel::base(),
        &StrategySource::Search {
            restarts: 256,
            max_iters: 1000,
        },
        2024,
    )
    .map_err(|e| e.to_string())?;
    let w = game.value.clone();
    ensure(w >= r(31, 256), || format!("searched value {w} below 31/256"))?;
    let cfg = SweepConfig {
        qs: vec![q],
        ms: (4..=31).collect(),
        causal: CausalModel::base(),
        source: StrategySource::Fixed(game.strategy),
        method: Method::Auto,
        samples: 200_000,
        seed: 2024,
        c: 1.0,
    };
    let table = analysis::corollary_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure(table.rows.len() == 28, || format!("{} rows", table.rows.len()))?;
    for row in &table.rows {
        ensure(row.meets_lower_bound(), || {
            format!("m={}: attack {:?} below bound {:?}", row.m, row.interval(), row.lower_bound.as_ref().map(rational::to_f64))
        })?;
    }
    ensure(table.monotone, || {
        let pts: Vec<_> = table.rows.iter().map(|r| (r.m, r.interval())).collect();
        format!("not monotone: {pts:?}")
    })?;
    let exact_rows = table.rows.iter().filter(|r| r.exact.is_some()).count();
    let last = table.rows.last().unwrap();
    Ok(format!(
        "w = {} ({:.4}); {exact_rows} exact + {} MC rows monotone and above bound; g_31 ~ {:.4} vs bound {:.4}",
        rational::format(&w),
        rational::to_f64(&w),
        table.rows.len() - exact_rows,
        last.point(),
        rational::to_f64(last.lower_bound.as_ref().unwrap())
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 10] = [
        ("field axioms", 5, criterion_1),
        ("game value ground truth", 32, criterion_2),
        ("biased game and shift averaging", 10, criterion_3),
        ("attack tower exactness", 1, criterion_4),
        ("symmetrization chain", 30, criterion_5),
        ("generalized attack", 5, criterion_6),
        ("perfect hiding", 30, criterion_7),
        ("causality compliance", 10, criterion_8),
        ("Monte Carlo soundness", 60, criterion_9),
        ("corollary trend at Q=16", 600, criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(d) if secs >= limit as f64 => Err(format!("{d}; took {secs:.2}s, limit {limit}s")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s < {limit}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
