//! Shared fixtures, random insight sets and brute-force oracles.

#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::NaiveDate;
use insightloom_core::dashboard::{load_dashboard, ChartType, DashboardSpec, Segment};
use insightloom_core::insight::{
    generate_insights, ChartCategory, ComparisonType, DateRef, DetectorConfig, Fact, Insight, InsightId, InsightType,
    PanelPlacement, TableColumn,
};
use insightloom_core::network::{DateMatch, LinkKind};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/callcenter.json")
}

pub fn fixture_spec() -> DashboardSpec {
    let doc = std::fs::read_to_string(fixture_path()).expect("fixture readable");
    load_dashboard(&doc).expect("fixture parses")
}

pub fn fixture_insights() -> Vec<Insight> {
    generate_insights(&fixture_spec(), &DetectorConfig::default()).expect("fixture insights")
}

pub fn id(s: &str) -> InsightId {
    InsightId::parse(s).expect("valid test id")
}

pub fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 10, d).expect("valid day")
}

/// A bare bar-chart insight on panel A at the top-left, to be adjusted by
/// the caller.
pub fn blank(raw_id: &str) -> Insight {
    let id = id(raw_id);
    Insight {
        text: format!("insight {raw_id}"),
        chart_category: ChartCategory::BarLike,
        fact: Fact {
            panel_id: "A".into(),
            insight_type: id.insight_type(),
            comparison_type: ComparisonType::None,
            metrics: vec![],
            dimensions: vec![],
            filter_segment: None,
            dimension_values: vec![],
            date_refs: vec![],
            numbers: vec![],
            percentage: None,
            table_column: TableColumn::Whole,
            subjects: vec![],
            split: None,
        },
        placement: PanelPlacement {
            row: 0,
            col: 0,
            sort: None,
            table_columns: 1,
            chart_type: ChartType::Bar,
        },
        id,
    }
}

fn subset<T: Clone>(rng: &mut StdRng, pool: &[T], max: usize) -> Vec<T> {
    let k = rng.gen_range(0..=max.min(pool.len()));
    pool.choose_multiple(rng, k).cloned().collect()
}

const COMPARISONS: [ComparisonType; 6] = [
    ComparisonType::Total,
    ComparisonType::VsAverage,
    ComparisonType::RelativeChange,
    ComparisonType::MoreThan,
    ComparisonType::LessThan,
    ComparisonType::None,
];

const CATEGORIES: [ChartCategory; 3] = [
    ChartCategory::BarLike,
    ChartCategory::LineLike,
    ChartCategory::MultiLineLike,
];

/// `n` insights with fields drawn from small pools so that every link kind
/// fires often.
pub fn random_insights(seed: u64, n: usize) -> Vec<Insight> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|i| random_insight(&mut rng, i)).collect()
}

fn random_insight(rng: &mut StdRng, i: usize) -> Insight {
    let t = *InsightType::ALL.choose(rng).expect("non-empty");
    let letter = (b'A' + (i % 26) as u8) as char;
    let mut n = blank(&format!("BC{letter}-{}~{}", t.code(), i + 2));
    n.chart_category = *CATEGORIES.choose(rng).expect("non-empty");
    let f = &mut n.fact;
    f.panel_id = ["A", "B", "C", "D"].choose(rng).expect("non-empty").to_string();
    f.comparison_type = *COMPARISONS.choose(rng).expect("non-empty");
    f.metrics = subset(rng, &["Calls".to_string(), "Duration".into(), "Revenue".into()], 2);
    f.dimensions = subset(rng, &["Weekday".to_string(), "Sentiment".into(), "Reason".into()], 2);
    if rng.gen_bool(0.4) {
        f.filter_segment = Some(Segment {
            column: "Reason".into(),
            value: ["Billing", "Outage"].choose(rng).expect("non-empty").to_string(),
        });
    }
    f.dimension_values = subset(
        rng,
        &[
            "Mon".to_string(),
            "Tue".into(),
            "Wed".into(),
            "Negative".into(),
            "Positive".into(),
        ],
        3,
    );
    for _ in 0..rng.gen_range(0..=2) {
        let start = rng.gen_range(1..=20);
        let d = if rng.gen_bool(0.5) {
            DateRef::Point(day(start))
        } else {
            DateRef::Range {
                start: day(start),
                end: day(start + rng.gen_range(1..=5)),
            }
        };
        f.date_refs.push(d);
    }
    f.percentage = [None, Some(10), Some(20), Some(34)]
        .choose(rng)
        .copied()
        .expect("non-empty");
    f.table_column = if rng.gen_bool(0.5) {
        TableColumn::Whole
    } else {
        TableColumn::Index(rng.gen_range(0..3))
    };
    n.placement.row = rng.gen_range(0..3);
    n.placement.col = rng.gen_range(0..3);
    n.placement.table_columns = 3;
    n.placement.sort = [None, Some("Date"), Some("Calls")]
        .choose(rng)
        .expect("non-empty")
        .map(str::to_string);
    n
}

/// A link as the oracle sees it: kind, endpoints in ID order, key.
pub type PlainLink = (LinkKind, InsightId, InsightId, String);

fn shared<T: Ord + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let a: BTreeSet<&T> = a.iter().collect();
    let b: BTreeSet<&T> = b.iter().collect();
    a.intersection(&b).map(|x| (*x).clone()).collect()
}

fn date_key(start: NaiveDate, end: NaiveDate) -> String {
    if start == end {
        start.format("%Y-%m-%d").to_string()
    } else {
        format!("{}..{}", start.format("%Y-%m-%d"), end.format("%Y-%m-%d"))
    }
}

/// Keys under which `x` and `y` are linked by `kind`, straight from each
/// kind's predicate over the raw fields.
pub fn pair_keys(kind: LinkKind, x: &Insight, y: &Insight, date_match: DateMatch) -> Vec<String> {
    let (a, b) = (&x.fact, &y.fact);
    let same = |p: bool, key: String| if p { vec![key] } else { vec![] };
    match kind {
        LinkKind::SameInsightType => same(a.insight_type == b.insight_type, a.insight_type.code().into()),
        LinkKind::SameComparisonType => same(
            a.comparison_type == b.comparison_type && a.comparison_type != ComparisonType::None,
            a.comparison_type.name().into(),
        ),
        LinkKind::SameChartCategory => same(x.chart_category == y.chart_category, x.chart_category.name().into()),
        LinkKind::SharedMetric => shared(&a.metrics, &b.metrics),
        LinkKind::SharedDimension => shared(&a.dimensions, &b.dimensions),
        LinkKind::SharedFilterSegment => match (&a.filter_segment, &b.filter_segment) {
            (Some(s), Some(t)) if s == t => vec![format!("{}={}", s.column, s.value)],
            _ => vec![],
        },
        LinkKind::SharedDate => {
            let mut keys = BTreeSet::new();
            for da in &a.date_refs {
                for db in &b.date_refs {
                    match date_match {
                        DateMatch::Exact if da == db => {
                            keys.insert(date_key(da.start(), da.end()));
                        }
                        DateMatch::Exact => {}
                        DateMatch::Overlap => {
                            let s = da.start().max(db.start());
                            let e = da.end().min(db.end());
                            if s <= e {
                                keys.insert(date_key(s, e));
                            }
                        }
                    }
                }
            }
            keys.into_iter().collect()
        }
        LinkKind::SharedPercentage => match (a.percentage, b.percentage) {
            (Some(p), Some(q)) if p == q => vec![p.to_string()],
            _ => vec![],
        },
        LinkKind::SharedDimensionValue => shared(&a.dimension_values, &b.dimension_values),
        LinkKind::SamePanelRow => same(x.placement.row == y.placement.row, format!("row={}", x.placement.row)),
        LinkKind::SamePanelCol => same(x.placement.col == y.placement.col, format!("col={}", x.placement.col)),
        LinkKind::SameTableColumn => {
            let k = match a.table_column {
                TableColumn::Whole => "-".to_string(),
                TableColumn::Index(i) => i.to_string(),
            };
            same(a.table_column == b.table_column, k)
        }
        LinkKind::SameSortAttribute => match (&x.placement.sort, &y.placement.sort) {
            (Some(s), Some(t)) if s == t => vec![s.clone()],
            _ => vec![],
        },
        LinkKind::PriorityChainSuccessor => vec![],
    }
}

/// All-pairs double loop over every kind in `kinds`.
pub fn brute_force_links(
    insights: &[Insight],
    kinds: &BTreeSet<LinkKind>,
    date_match: DateMatch,
) -> BTreeSet<PlainLink> {
    let mut out = BTreeSet::new();
    for (i, x) in insights.iter().enumerate() {
        for y in &insights[i + 1..] {
            let (lo, hi) = if x.id < y.id { (x, y) } else { (y, x) };
            for &k in kinds {
                for key in pair_keys(k, lo, hi, date_match) {
                    out.insert((k, lo.id.clone(), hi.id.clone(), key));
                }
            }
        }
    }
    out
}

/// Counts each insight mentioning a value once, averages per insight and
/// min-max normalizes; all scores are 0.5 when every vScore is equal.
pub fn value_scores_oracle(insights: &[Insight]) -> BTreeMap<InsightId, f64> {
    let mentions = |n: &Insight, v: &String| n.fact.dimension_values.contains(v);
    let mut v_scores = BTreeMap::new();
    for n in insights {
        let mut unique: Vec<&String> = n.fact.dimension_values.iter().collect();
        unique.sort();
        unique.dedup();
        let total: usize = unique
            .iter()
            .map(|v| insights.iter().filter(|m| mentions(m, v)).count())
            .sum();
        let v = if unique.is_empty() {
            0.0
        } else {
            total as f64 / unique.len() as f64
        };
        v_scores.insert(n.id.clone(), v);
    }
    let lo = v_scores.values().cloned().fold(f64::MAX, f64::min);
    let hi = v_scores.values().cloned().fold(f64::MIN, f64::max);
    v_scores
        .into_iter()
        .map(|(k, v)| (k, if hi == lo { 0.5 } else { (v - lo) / (hi - lo) }))
        .collect()
}

/// Three insights on a 2x3 grid: A in the top-left covering the whole
/// table, B top-middle on table column 1 of 4, C bottom-right on column 0
/// of 4. Values A={Tue,Wed}, B={Tue}, C={Wed,Mon}.
pub fn hand_case() -> (Vec<Insight>, insightloom_core::dashboard::LayoutGrid) {
    let mut a = blank("TCA-MX");
    a.fact.dimension_values = vec!["Tue".into(), "Wed".into()];
    let mut b = blank("TCB1MX");
    b.placement.col = 1;
    b.placement.table_columns = 4;
    b.fact.table_column = TableColumn::Index(1);
    b.fact.dimension_values = vec!["Tue".into()];
    let mut c = blank("TCC0MX");
    c.placement.row = 1;
    c.placement.col = 2;
    c.placement.table_columns = 4;
    c.fact.table_column = TableColumn::Index(0);
    c.fact.dimension_values = vec!["Wed".into(), "Mon".into()];
    (
        vec![a, b, c],
        insightloom_core::dashboard::LayoutGrid { rows: 2, cols: 3 },
    )
}

/// The fixture's default selection by priority.
pub fn fixture_selection() -> (DashboardSpec, Vec<Insight>, insightloom_core::narrative::Selection) {
    use insightloom_core::narrative::{build_selection, SelectionOptions};
    use insightloom_core::scoring::{priorities, score_cards, ValueScoreOptions};
    let spec = fixture_spec();
    let insights = fixture_insights();
    let (_, cards) = score_cards(&insights, spec.grid(), ValueScoreOptions::default());
    let sel = build_selection(&priorities(&cards), &insights, SelectionOptions::default());
    (spec, insights, sel)
}

/// The scripted summary that borrows a panel title as if it were a metric.
pub const TITLE_HALLUCINATION: &str = "'Negative' had the highest 'Average Duration' for call reasons and sentiments.";

pub fn snapshot_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/callcenter.insights.tsv")
}

/// One `id<TAB>text` line per insight, in generation order.
pub fn snapshot_of(insights: &[Insight]) -> String {
    insights.iter().map(|n| format!("{}\t{}\n", n.id, n.text)).collect()
}

/// First line where two snapshots disagree, if any.
pub fn snapshot_diff(got: &str, want: &str) -> Option<String> {
    let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    (0..g.len().max(w.len())).find_map(|i| {
        let (a, b) = (
            g.get(i).copied().unwrap_or("<missing>"),
            w.get(i).copied().unwrap_or("<missing>"),
        );
        (a != b).then(|| format!("line {}: got {a:?}, want {b:?}", i + 1))
    })
}

/// Fixture sentences that must render exactly as written.
pub const QUOTED_SENTENCES: [(&str, &str); 3] = [
    (
        "BCW-SK",
        "The values of 'Calls' are highly skewed towards 'Tuesday' and 'Wednesday' (34% in total)",
    ),
    (
        "LC--DE",
        "'Calls' significantly decreased in the span between Oct. 21st and 26th, declining by 10% from 1,170 to 1,054",
    ),
    (
        "MCS-SP",
        "'Sentiment [Negative]' grew significantly between Oct. 7th and 10th, up by 13% from 355 to 400",
    ),
];
