//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::checks::{cluster_clique, focus_order_contract, matrix_properties, selection_properties};
use common::{
    brute_force_links, fixture_insights, fixture_selection, fixture_spec, hand_case, random_insights, snapshot_diff,
    snapshot_of, snapshot_path, value_scores_oracle, PlainLink, QUOTED_SENTENCES, TITLE_HALLUCINATION,
};
use insightloom::pipeline::{run_pipeline, BackendChoice, PipelineOptions};
use insightloom_core::insight::{Insight, InsightId};
use insightloom_core::llm::{
    generate_summary, verify_grounding, LlmParams, RecordingBackend, RetryPolicy, RunMode, StubBackend,
};
use insightloom_core::narrative::{
    build_prompt, concat_baseline, PromptOptions, SelectionOptions, SelectionStrategy, DEFAULT_INSTRUCTION,
};
use insightloom_core::network::{build_network, cluster_grid, DateMatch, LinkKind, NetworkConfig};
use insightloom_core::scoring::{priorities, rank_by, score_cards, value_scores, ValueScoreOptions};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TOL: f64 = 1e-9;
const VALUE_ORACLE_LIMIT: Duration = Duration::from_secs(1);
const NETWORK_LIMIT: Duration = Duration::from_secs(5);
const END_TO_END_LIMIT: Duration = Duration::from_secs(10);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(got: f64, want: f64, what: &str) -> Result<(), String> {
    if (got - want).abs() < TOL {
        Ok(())
    } else {
        Err(format!("{what}: {got} vs {want}"))
    }
}

fn score_formulas() -> Outcome {
    let (insights, grid) = hand_case();
    let (_, cards) = score_cards(&insights, grid, ValueScoreOptions::default());
    // Layout: 0.25 row + 0.25 col + 0.5 table column, each 1 - index/(n - 1).
    // Value: mean mention count per distinct value, min-max normalized.
    // Priority: 0.3 layout + 0.7 value.
    let layout = [
        1.0,
        0.25 * 1.0 + 0.25 * (1.0 - 1.0 / 2.0) + 0.5 * (1.0 - 1.0 / 3.0),
        0.25 * 0.0 + 0.25 * 0.0 + 0.5 * 1.0,
    ];
    let raw = [(2.0 + 2.0) / 2.0, 2.0 / 1.0, (2.0 + 1.0) / 2.0];
    let (lo, hi) = (1.5, 2.0);
    for (i, c) in cards.iter().enumerate() {
        let value = (raw[i] - lo) / (hi - lo);
        close(c.layout_score, layout[i], &format!("{} layout", c.insight_id))?;
        close(c.value_score, value, &format!("{} value", c.insight_id))?;
        close(
            c.priority,
            0.3 * layout[i] + 0.7 * value,
            &format!("{} priority", c.insight_id),
        )?;
    }

    let started = Instant::now();
    for seed in 0..200u64 {
        let set = random_insights(seed, 1 + (seed as usize * 7) % 40);
        let (_, got) = value_scores(&set, ValueScoreOptions::default());
        for (id, want) in value_scores_oracle(&set) {
            close(got[&id], want, &format!("seed {seed} {id}"))?;
        }
    }
    let took = started.elapsed();
    ensure!(took < VALUE_ORACLE_LIMIT, "200 oracle sets took {took:?}");
    Ok(format!(
        "hand case within {TOL:e}; 200 oracle sets in {took:.2?} (< {VALUE_ORACLE_LIMIT:?})"
    ))
}

fn plain_links(insights: &[Insight], config: &NetworkConfig) -> Result<BTreeSet<PlainLink>, String> {
    let net = build_network(insights, config).map_err(|e| e.to_string())?;
    let links: Vec<PlainLink> = net
        .links
        .iter()
        .map(|l| (l.kind, l.a.clone(), l.b.clone(), l.key.clone()))
        .collect();
    let set: BTreeSet<PlainLink> = links.iter().cloned().collect();
    ensure!(set.len() == links.len(), "duplicate links");
    Ok(set)
}

fn network_oracle() -> Outcome {
    let started = Instant::now();
    let mut sets = 0;
    let mut links = 0;
    for seed in 0..40u64 {
        let insights = random_insights(1000 + seed, (seed as usize * 13) % 61);
        for dm in [DateMatch::Overlap, DateMatch::Exact] {
            for kind in LinkKind::undirected() {
                let kinds = BTreeSet::from([kind]);
                let config = NetworkConfig {
                    kinds: Some(vec![kind.name().to_string()]),
                    date_match: dm,
                };
                let got = plain_links(&insights, &config)?;
                let want = brute_force_links(&insights, &kinds, dm);
                ensure!(
                    got == want,
                    "seed {seed} {kind} {dm:?}: {} links vs oracle {}",
                    got.len(),
                    want.len()
                );
                links += got.len();
            }
        }
        let all: BTreeSet<LinkKind> = LinkKind::ALL.into_iter().collect();
        ensure!(
            plain_links(&insights, &NetworkConfig::default())?
                == brute_force_links(&insights, &all, DateMatch::Overlap),
            "seed {seed}: all-kind network differs from oracle"
        );
        sets += 1;
    }
    let took = started.elapsed();
    ensure!(took < NETWORK_LIMIT, "network oracle took {took:?}");
    Ok(format!(
        "{sets} sets of <= 60 insights, 13 kinds x 2 date modes, {links} links in {took:.2?} (< {NETWORK_LIMIT:?})"
    ))
}

fn matrix_properties_hold() -> Outcome {
    let insights = fixture_insights();
    let net = build_network(&insights, &NetworkConfig::default()).map_err(|e| e.to_string())?;
    matrix_properties(&net)?;
    for seed in 0..20 {
        let random =
            build_network(&random_insights(2000 + seed, 30), &NetworkConfig::default()).map_err(|e| e.to_string())?;
        matrix_properties(&random).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let (_, cards) = score_cards(&insights, fixture_spec().grid(), ValueScoreOptions::default());
    let prio = priorities(&cards);
    let ranked = rank_by(&prio);
    for take in [2, 7, 12, insights.len()] {
        let mut ids: Vec<InsightId> = ranked.iter().take(take).cloned().collect();
        ids.reverse();
        let m = focus_order_contract(&net, &ids, &prio)?;
        ensure!(
            m.order[0] == ranked[0],
            "focus order does not lead with the top insight"
        );
    }
    Ok(format!(
        "fixture ({} nodes) and 20 random networks; focus ordering on 4 subsets",
        insights.len()
    ))
}

fn cluster_cliques() -> Outcome {
    let insights = fixture_insights();
    let kinds: Vec<LinkKind> = LinkKind::undirected().collect();
    let mut grids = 0;
    for dm in [DateMatch::Overlap, DateMatch::Exact] {
        for &r in &kinds {
            cluster_clique(&insights, &[r], &[], dm)?;
            grids += 1;
            for &c in &kinds {
                cluster_clique(&insights, &[r], &[c], dm).map_err(|e| format!("{r} x {c}: {e}"))?;
                grids += 1;
            }
        }
    }
    let grid =
        cluster_grid(&insights, &[LinkKind::SharedDimension], &[], DateMatch::Overlap).map_err(|e| e.to_string())?;
    let mut duplicated = 0;
    for n in &insights {
        let cells = grid.cells_of(&n.id).count();
        ensure!(cells == n.fact.dimensions.len(), "{} appears in {cells} cells", n.id);
        if cells > 1 {
            duplicated += 1;
        }
    }
    ensure!(duplicated > 0, "no multi-dimension insight in the fixture");
    Ok(format!(
        "{grids} grids sound and complete; {duplicated} multi-dimension insights duplicated"
    ))
}

fn selection_bounds() -> Outcome {
    let mut rng = StdRng::seed_from_u64(42);
    let mut truncated = 0;
    for case in 0..1000 {
        let n = rng.gen_range(0..40);
        let levels = rng.gen_range(1..=6);
        let scores: BTreeMap<InsightId, f64> = (0..n)
            .map(|i| {
                let id =
                    InsightId::parse(&format!("BC{}{}MX", (b'A' + (i / 10) as u8) as char, i % 10)).expect("valid id");
                (id, rng.gen_range(0..levels) as f64 / 5.0)
            })
            .collect();
        let opts = SelectionOptions {
            strategy: if case % 2 == 0 {
                SelectionStrategy::Earliest
            } else {
                SelectionStrategy::Fill
            },
            ..Default::default()
        };
        let picked = insightloom_core::narrative::select_top(&scores, opts);
        selection_properties(&scores, opts, &picked).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            picked.len() >= 4.min(n) && picked.len() <= 15,
            "case {case}: size {}",
            picked.len()
        );
        let boundary = picked.last().map(|x| scores[x]);
        if boundary.is_some_and(|b| scores.iter().any(|(k, v)| *v == b && !picked.contains(k))) {
            truncated += 1;
        }
    }
    Ok(format!(
        "1000 score vectors, both strategies; {truncated} first-group truncations"
    ))
}

fn prompt_contract() -> Outcome {
    let (spec, insights, sel) = fixture_selection();
    let chosen: Vec<&Insight> = sel
        .reading_order
        .iter()
        .map(|x| insights.iter().find(|n| &n.id == x).expect("selected insight exists"))
        .collect();
    let prompt = build_prompt(&sel.reading_order, &insights, &spec, &PromptOptions::default());
    let panels: BTreeSet<&str> = chosen.iter().map(|n| n.fact.panel_id.as_str()).collect();
    ensure!(
        prompt.paragraphs.len() == panels.len(),
        "{} paragraphs for {} panels",
        prompt.paragraphs.len(),
        panels.len()
    );
    let sentences: Vec<String> = prompt.paragraphs.iter().flat_map(|p| p.sentences.clone()).collect();
    let texts: Vec<String> = chosen.iter().map(|n| format!("{}.", n.text)).collect();
    ensure!(sentences == texts, "sentences are not the insight texts verbatim");
    let body = prompt.body();
    for p in &spec.panels {
        ensure!(!body.contains(&p.title), "title '{}' in default prompt", p.title);
    }

    let backend = RecordingBackend::new(StubBackend::default());
    generate_summary(
        &prompt,
        &LlmParams::new(prompt.token_budget),
        &backend,
        RunMode::Live,
        RetryPolicy::immediate(),
    )
    .map_err(|e| e.to_string())?;
    let payloads = backend.payloads();
    ensure!(payloads.len() == 1, "{} requests recorded", payloads.len());
    let p = &payloads[0];
    let estimate = chosen.iter().map(|n| n.text.chars().count()).sum::<usize>().div_ceil(4);
    ensure!(
        p["temperature"] == serde_json::json!(0.5),
        "temperature {}",
        p["temperature"]
    );
    ensure!(
        p["max_tokens"] == serde_json::json!(estimate),
        "max_tokens {} vs estimate {estimate}",
        p["max_tokens"]
    );
    ensure!(
        p["messages"][0]["content"] == DEFAULT_INSTRUCTION,
        "system message is not the instruction"
    );
    ensure!(
        p["messages"][1]["content"] == body.as_str(),
        "user message is not the body"
    );
    Ok(format!(
        "{} paragraphs for {} panels, {} verbatim sentences, temperature 0.5, max_tokens {estimate}",
        prompt.paragraphs.len(),
        panels.len(),
        sentences.len()
    ))
}

fn grounding() -> Outcome {
    let (spec, insights, sel) = fixture_selection();
    let chosen: Vec<Insight> = sel
        .reading_order
        .iter()
        .filter_map(|x| insights.iter().find(|n| &n.id == x).cloned())
        .collect();
    let opts = PromptOptions {
        include_titles: true,
        ..Default::default()
    };
    let prompt = build_prompt(&sel.reading_order, &insights, &spec, &opts);
    let backend = StubBackend::default().with_response(&prompt.text(), TITLE_HALLUCINATION);
    let r = generate_summary(
        &prompt,
        &LlmParams::new(prompt.token_budget),
        &backend,
        RunMode::Live,
        RetryPolicy::immediate(),
    )
    .map_err(|e| e.to_string())?;
    let report = verify_grounding(&r.summary_text, &chosen);
    let flagged: Vec<&str> = report.unsupported().map(|c| c.token.as_str()).collect();
    ensure!(flagged == ["'Average Duration'"], "flagged {flagged:?}");

    let baseline = concat_baseline(&sel.reading_order, &insights);
    let base = verify_grounding(&baseline, &chosen);
    ensure!(
        base.unsupported_count() == 0,
        "baseline has {} unsupported claims",
        base.unsupported_count()
    );
    ensure!(!base.claims.is_empty(), "baseline yielded no claims");
    Ok(format!(
        "title claim flagged; baseline {} claims, 0 unsupported",
        base.claims.len()
    ))
}

fn end_to_end() -> Outcome {
    let spec = common::fixture_path();
    let opts = PipelineOptions {
        backend: BackendChoice::Stub { script: None },
        ..Default::default()
    };
    let started = Instant::now();
    let a = run_pipeline(&spec, &opts).map_err(|e| e.to_string())?;
    let b = run_pipeline(&spec, &opts).map_err(|e| e.to_string())?;
    let took = started.elapsed() / 2;
    ensure!(a.content_json() == b.content_json(), "bundles differ between runs");
    let want = std::fs::read_to_string(snapshot_path()).map_err(|e| e.to_string())?;
    if let Some(d) = snapshot_diff(&snapshot_of(&a.insights), &want) {
        return Err(format!("snapshot mismatch at {d}"));
    }
    for (id, text) in QUOTED_SENTENCES {
        let found = a.insights.iter().find(|n| n.id.as_str() == id).map(|n| n.text.as_str());
        ensure!(found == Some(text), "{id}: {found:?}");
    }
    ensure!(
        a.summary.is_some() && a.grounding.is_some(),
        "stub run produced no summary"
    );
    ensure!(took < END_TO_END_LIMIT, "run took {took:?}");
    Ok(format!(
        "{} insights pinned, 3 quoted sentences, identical bundles, {took:.2?} per run (< {END_TO_END_LIMIT:?})",
        a.insights.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("score-formulas", score_formulas),
        ("network-oracle", network_oracle),
        ("matrix-properties", matrix_properties_hold),
        ("cluster-cliques", cluster_cliques),
        ("selection", selection_bounds),
        ("prompt-contract", prompt_contract),
        ("grounding", grounding),
        ("fixture-end-to-end", end_to_end),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name:<20} {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name:<20} {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
