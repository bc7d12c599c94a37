use std::fs;
use std::path::Path;
use std::sync::Arc;

use relbc_core::adversary::{self, CausalModel};
use relbc_core::analysis::{self, StrategySource};
use relbc_core::field::check_axioms;
use relbc_core::games::{self, StrategyRecord};
use relbc_core::protocol::{self, TranscriptRecord};
use relbc_core::rational;
use relbc_core::{DetStrategy, Field, GameDist, ProtocolParams, Transcript, Variant};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, Source};
use crate::{write_output, CliError, Outcome};

fn report(command: &str, cfg: &RunConfig, body: Value) -> Value {
    let mut out = json!({ "schema": 1, "command": command, "config": cfg });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    out
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    if cfg.format != Format::Json {
        return Err(CliError::Config(format!("{command} writes json only")));
    }
    Ok(())
}

fn load_strategy(cfg: &RunConfig, field: &Arc<Field>) -> Result<DetStrategy, CliError> {
    let path = cfg
        .strategy_file
        .as_ref()
        .ok_or_else(|| CliError::Config("strategy = file needs strategy_file".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let rec: StrategyRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: not a strategy file: {e}", path.display())))?;
    let s = DetStrategy::from_record(&rec)?;
    if s.field().tag() != field.tag() {
        return Err(CliError::Config(format!("strategy file is over {}, run is over {field}", s.field())));
    }
    Ok(s)
}

fn source(cfg: &RunConfig, field: &Arc<Field>) -> Result<StrategySource, CliError> {
    Ok(match cfg.strategy {
        Source::Brute => StrategySource::BruteForce,
        Source::Search => StrategySource::Search {
            restarts: cfg.restarts,
            max_iters: cfg.max_iters,
        },
        Source::File => StrategySource::Fixed(load_strategy(cfg, field)?),
    })
}

fn save_strategy(cfg: &RunConfig, s: &DetStrategy) -> Result<(), CliError> {
    if let Some(path) = &cfg.strategy_out {
        let text = serde_json::to_string_pretty(&s.to_record())? + "\n";
        write_output(Some(path), text.as_bytes())?;
    }
    Ok(())
}

pub fn field_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    json_only(cfg, "field-check")?;
    let f = cfg.field()?;
    let r = check_axioms(&f, cfg.triples, analysis::substream(cfg.seed, "field", &[]));
    let passed = r.passed();
    let summary = vec![format!("{}: {}", r.field, if passed { "pass" } else { "FAIL" })];
    Ok(Outcome {
        report: report(
            "field-check",
            cfg,
            json!({ "field": f.describe(), "name": r.field, "order": f.order(), "passed": passed, "axioms": r }),
        ),
        passed,
        summary,
        written: false,
    })
}

pub fn game_value(cfg: &RunConfig) -> Result<Outcome, CliError> {
    json_only(cfg, "game-value")?;
    let f = cfg.field()?;
    let dist = match cfg.gamma()? {
        None => GameDist::uniform(f.clone()),
        Some(g) => GameDist::biased(f.clone(), g)?,
    };
    let (value, strategy, method, search) = match cfg.strategy {
        Source::Brute | Source::Search => {
            let r = if cfg.strategy == Source::Brute {
                games::brute_force_value(&dist)?
            } else {
                games::best_response_search(
                    &dist,
                    cfg.restarts,
                    cfg.max_iters,
                    analysis::substream(cfg.seed, "search", &[u64::from(f.order())]),
                )?
            };
            let method = serde_json::to_value(r.method)?;
            (r.value, r.strategy, method, r.meta)
        }
        Source::File => {
            let s = load_strategy(cfg, &f)?;
            (games::win_probability(&s, &dist)?, s, json!("file"), None)
        }
    };
    save_strategy(cfg, &strategy)?;
    let summary = vec![format!(
        "value {} = {:.6}",
        rational::format(&value),
        rational::to_f64(&value)
    )];
    Ok(Outcome {
        report: report(
            "game-value",
            cfg,
            json!({
                "field": f.describe(),
                "gamma": rational::format(dist.gamma()),
                "value": rational::format(&value),
                "value_f64": rational::to_f64(&value),
                "method": method,
                "strategy": strategy.to_record(),
                "search": search,
            }),
        ),
        passed: true,
        summary,
        written: false,
    })
}

fn transcript_lines(ts: &[Transcript], params: &ProtocolParams) -> Result<String, CliError> {
    let mut out = String::new();
    for t in ts {
        out += &serde_json::to_string(&t.to_record(params))?;
        out.push('\n');
    }
    Ok(out)
}

pub fn attack(cfg: &RunConfig) -> Result<Outcome, CliError> {
    json_only(cfg, "attack")?;
    let f = cfg.field()?;
    let causal = CausalModel::new(cfg.rho, cfg.k0)?;
    let params = ProtocolParams::new(f.clone(), cfg.m, cfg.variant)?;
    let game = analysis::window_game_strategy(&f, causal, &source(cfg, &f)?, cfg.seed)?;
    save_strategy(cfg, &game.strategy)?;
    let s = match cfg.variant {
        Variant::Symmetrized if causal.is_base() => adversary::attack_base(&params, game.strategy.clone())?,
        Variant::Symmetrized => adversary::attack_general(&params, causal, game.strategy.clone())?,
        Variant::Standard => adversary::padded_attack(&params, causal, game.strategy.clone())?,
    };
    let r = analysis::cheat_report(
        &s,
        cfg.method,
        cfg.samples,
        analysis::substream(cfg.seed, "mc", &[]),
        Some(&game.value),
        cfg.c,
    )?;

    if cfg.transcripts > 0 {
        let path = cfg
            .transcripts_out
            .as_ref()
            .ok_or_else(|| CliError::Config("transcripts needs transcripts_out".into()))?;
        let ts = analysis::sample_transcripts(&s, cfg.transcripts, cfg.seed);
        write_output(Some(path), transcript_lines(&ts, &params)?.as_bytes())?;
    }

    let mut summary = Vec::new();
    match (&r.exact, &r.estimate) {
        (Some(e), _) => summary.push(format!("g = {} = {:.6}", rational::format(e), rational::to_f64(e))),
        (None, Some(est)) => summary.push(format!(
            "g ~ {:.6} (99% CI [{:.6}, {:.6}], {} samples)",
            est.mean, est.ci_low, est.ci_high, est.samples
        )),
        _ => {}
    }
    if let Some(lb) = &r.theory_lower {
        summary.push(format!("lower bound {} = {:.6}", rational::format(lb), rational::to_f64(lb)));
    }
    Ok(Outcome {
        report: report(
            "attack",
            cfg,
            json!({
                "field": f.describe(),
                "w": rational::format(&game.value),
                "w_f64": rational::to_f64(&game.value),
                "strategy": s.meta(),
                "report": r,
            }),
        ),
        passed: true,
        summary,
        written: false,
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let causal = CausalModel::new(cfg.rho, cfg.k0)?;
    let src = match cfg.strategy {
        Source::File => {
            let f = cfg.field()?;
            if cfg.qs.iter().any(|&q| q != f.order()) {
                return Err(CliError::Config("a strategy file fixes the field; set qs to its order".into()));
            }
            source(cfg, &f)?
        }
        _ => source(cfg, &Field::with_order(2)?)?,
    };
    let table = analysis::corollary_sweep(&analysis::SweepConfig {
        qs: cfg.qs.clone(),
        ms: cfg.ms.clone(),
        causal,
        source: src,
        method: cfg.method,
        samples: cfg.samples,
        seed: cfg.seed,
        c: cfg.c,
    })?;
    let passed = table.monotone && table.above_lower_bound;
    let mut summary = vec![match table.c_star {
        Some(c) => format!("c* = {c:.6} over {} rows", table.rows.len()),
        None => "c* undefined: no rows".to_string(),
    }];
    if !table.monotone {
        summary.push("attack column is not monotone in m".into());
    }
    if !table.above_lower_bound {
        summary.push("some rows fall below the lower bound".into());
    }
    let body = analysis::sweep_json(&table);
    let written = match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            analysis::write_sweep_csv(&table, &mut buf)?;
            write_output(cfg.output.as_deref(), &buf)?;
            true
        }
        Format::Json => false,
    };
    Ok(Outcome {
        report: report("sweep", cfg, body),
        passed,
        summary,
        written,
    })
}

pub fn hiding(cfg: &RunConfig) -> Result<Outcome, CliError> {
    json_only(cfg, "hiding")?;
    let f = cfg.field()?;
    let params = ProtocolParams::new(f.clone(), cfg.m, cfg.variant)?;
    let last = params.response_count();
    let rounds: Vec<usize> = match cfg.upto {
        Some(u) => vec![u],
        None => (1..last).collect(),
    };
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    for r in rounds {
        let h = protocol::hiding_distribution(&params, r)?;
        let identical = h.identical();
        let note = if h.includes_opening {
            "reveal discloses d"
        } else if identical {
            "identical"
        } else {
            passed = false;
            "DIFFERENT"
        };
        summary.push(format!("round {r}: {note}"));
        entries.push(json!({
            "upto_round": r,
            "includes_opening": h.includes_opening,
            "states": h.states,
            "views": [h.counts[0].len(), h.counts[1].len()],
            "identical": identical,
            "note": note,
        }));
    }
    Ok(Outcome {
        report: report(
            "hiding",
            cfg,
            json!({ "field": f.describe(), "rounds": entries, "passed": passed }),
        ),
        passed,
        summary,
        written: false,
    })
}

pub fn replay(cfg: &RunConfig, path: &Path) -> Result<Outcome, CliError> {
    json_only(cfg, "replay")?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut results = Vec::new();
    let mut accepted = 0;
    for (no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: TranscriptRecord = serde_json::from_str(line)
            .map_err(|e| CliError::Config(format!("line {}: not a transcript: {e}", no + 1)))?;
        let (t, _) = Transcript::from_record(&rec)
            .map_err(|e| CliError::Property(format!("line {}: {e}", no + 1)))?;
        accepted += usize::from(t.accepted);
        results.push(json!({ "line": no + 1, "d": rec.d, "accepted": t.accepted }));
    }
    let summary = vec![format!("{} transcripts verified, {accepted} accepted", results.len())];
    Ok(Outcome {
        report: report(
            "replay",
            cfg,
            json!({ "file": path, "transcripts": results, "accepted": accepted }),
        ),
        passed: true,
        summary,
        written: false,
    })
}
