//! Layout, value and priority scores, plus user-defined weighted scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dashboard::LayoutGrid;
use crate::insight::{Insight, InsightId, TableColumn};

pub const PRIORITY_LAYOUT_WEIGHT: f64 = 0.3;
pub const PRIORITY_VALUE_WEIGHT: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("unknown score component '{0}'")]
    UnknownComponent(String),
    #[error("weight of '{0}' is not finite")]
    NonFiniteWeight(String),
    #[error("malformed score spec: {0}")]
    Parse(String),
}

/// `(n-1-i)/(n-1)`, so the first of `n` scores 1 and the last 0; a lone
/// element scores 1.
pub fn normalized_reverse_index(i: usize, n: usize) -> f64 {
    if n <= 1 {
        1.0
    } else {
        (n - 1 - i.min(n - 1)) as f64 / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutComponents {
    pub panel_row: f64,
    pub panel_col: f64,
    pub table_col: f64,
}

pub fn layout_components(insight: &Insight, grid: LayoutGrid) -> LayoutComponents {
    let p = &insight.placement;
    LayoutComponents {
        panel_row: normalized_reverse_index(p.row, grid.rows),
        panel_col: normalized_reverse_index(p.col, grid.cols),
        table_col: match insight.fact.table_column {
            TableColumn::Whole => 1.0,
            TableColumn::Index(i) => normalized_reverse_index(i, p.table_columns),
        },
    }
}

pub fn layout_score(insight: &Insight, grid: LayoutGrid) -> f64 {
    let c = layout_components(insight, grid);
    0.25 * c.panel_row + 0.25 * c.panel_col + 0.5 * c.table_col
}

pub fn priority(layout_score: f64, value_score: f64) -> f64 {
    PRIORITY_LAYOUT_WEIGHT * layout_score + PRIORITY_VALUE_WEIGHT * value_score
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct ValueScoreOptions {
    /// Count every mention of a value instead of once per insight.
    pub count_repeats: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoringContext {
    pub value_counts: BTreeMap<String, usize>,
    pub per_insight_v_score: BTreeMap<InsightId, f64>,
    pub v_score_min: f64,
    pub v_score_max: f64,
}

/// Returns the occurrence context and each insight's normalized valueScore.
pub fn value_scores(insights: &[Insight], opts: ValueScoreOptions) -> (ScoringContext, BTreeMap<InsightId, f64>) {
    let mut value_counts: BTreeMap<String, usize> = BTreeMap::new();
    for n in insights {
        if opts.count_repeats {
            for v in &n.fact.dimension_values {
                *value_counts.entry(v.clone()).or_default() += 1;
            }
        } else {
            let unique: BTreeSet<&String> = n.fact.dimension_values.iter().collect();
            for v in unique {
                *value_counts.entry(v.clone()).or_default() += 1;
            }
        }
    }
    let mut per_insight_v_score = BTreeMap::new();
    for n in insights {
        let unique: BTreeSet<&String> = n.fact.dimension_values.iter().collect();
        let v = if unique.is_empty() {
            0.0
        } else {
            unique.iter().map(|x| value_counts[*x] as f64).sum::<f64>() / unique.len() as f64
        };
        per_insight_v_score.insert(n.id.clone(), v);
    }
    let v_score_min = per_insight_v_score.values().copied().fold(f64::INFINITY, f64::min);
    let v_score_max = per_insight_v_score.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let (v_score_min, v_score_max) = if insights.is_empty() {
        (0.0, 0.0)
    } else {
        (v_score_min, v_score_max)
    };
    let normalized = per_insight_v_score
        .iter()
        .map(|(id, v)| {
            let s = if v_score_max > v_score_min {
                (v - v_score_min) / (v_score_max - v_score_min)
            } else {
                0.5
            };
            (id.clone(), s)
        })
        .collect();
    let ctx = ScoringContext {
        value_counts,
        per_insight_v_score,
        v_score_min,
        v_score_max,
    };
    (ctx, normalized)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreCard {
    pub insight_id: InsightId,
    pub layout_score: f64,
    pub value_score: f64,
    pub priority: f64,
    pub components: LayoutComponents,
    pub custom: BTreeMap<String, f64>,
}

/// Score cards in the order of `insights`.
pub fn score_cards(
    insights: &[Insight],
    grid: LayoutGrid,
    opts: ValueScoreOptions,
) -> (ScoringContext, Vec<ScoreCard>) {
    let (ctx, values) = value_scores(insights, opts);
    let cards = insights
        .iter()
        .map(|n| {
            let layout = layout_score(n, grid);
            let value = values[&n.id];
            ScoreCard {
                insight_id: n.id.clone(),
                layout_score: layout,
                value_score: value,
                priority: priority(layout, value),
                components: layout_components(n, grid),
                custom: BTreeMap::new(),
            }
        })
        .collect();
    (ctx, cards)
}

/// IDs by descending score, ties by ascending ID.
pub fn rank_by(scores: &BTreeMap<InsightId, f64>) -> Vec<InsightId> {
    let mut ids: Vec<InsightId> = scores.keys().cloned().collect();
    ids.sort_by(|a, b| scores[b].total_cmp(&scores[a]).then_with(|| a.cmp(b)));
    ids
}

pub fn priorities(cards: &[ScoreCard]) -> BTreeMap<InsightId, f64> {
    cards.iter().map(|c| (c.insight_id.clone(), c.priority)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScoreComponent {
    LayoutScore,
    ValueScore,
    PanelRow,
    PanelCol,
    TableCol,
    Constant,
}

impl ScoreComponent {
    pub fn parse(s: &str) -> Result<ScoreComponent, ScoringError> {
        Ok(match s {
            "layoutScore" => ScoreComponent::LayoutScore,
            "valueScore" => ScoreComponent::ValueScore,
            "panelRow" => ScoreComponent::PanelRow,
            "panelCol" => ScoreComponent::PanelCol,
            "tableCol" => ScoreComponent::TableCol,
            "constant" => ScoreComponent::Constant,
            other => return Err(ScoringError::UnknownComponent(other.to_string())),
        })
    }

    fn of(self, card: &ScoreCard) -> f64 {
        match self {
            ScoreComponent::LayoutScore => card.layout_score,
            ScoreComponent::ValueScore => card.value_score,
            ScoreComponent::PanelRow => card.components.panel_row,
            ScoreComponent::PanelCol => card.components.panel_col,
            ScoreComponent::TableCol => card.components.table_col,
            ScoreComponent::Constant => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTerm {
    pub component: ScoreComponent,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub name: String,
    pub terms: Vec<ScoreTerm>,
}

#[derive(Deserialize)]
struct RawTerm {
    component: String,
    weight: f64,
}

#[derive(Deserialize)]
struct RawScoreSpec {
    name: String,
    terms: Vec<RawTerm>,
}

/// Parses `{name, terms: [{component, weight}]}`.
pub fn load_score_spec(doc: &str) -> Result<ScoreSpec, ScoringError> {
    let raw: RawScoreSpec = serde_json::from_str(doc).map_err(|e| ScoringError::Parse(e.to_string()))?;
    let mut terms = Vec::with_capacity(raw.terms.len());
    for t in raw.terms {
        if !t.weight.is_finite() {
            return Err(ScoringError::NonFiniteWeight(t.component));
        }
        terms.push(ScoreTerm {
            component: ScoreComponent::parse(&t.component)?,
            weight: t.weight,
        });
    }
    Ok(ScoreSpec { name: raw.name, terms })
}

impl ScoreSpec {
    pub fn priority() -> ScoreSpec {
        ScoreSpec {
            name: "priority".into(),
            terms: vec![
                ScoreTerm {
                    component: ScoreComponent::LayoutScore,
                    weight: PRIORITY_LAYOUT_WEIGHT,
                },
                ScoreTerm {
                    component: ScoreComponent::ValueScore,
                    weight: PRIORITY_VALUE_WEIGHT,
                },
            ],
        }
    }

    /// The weighted sum before clamping; this is what rankings use.
    pub fn raw(&self, card: &ScoreCard) -> f64 {
        self.terms.iter().map(|t| t.weight * t.component.of(card)).sum()
    }
}

/// Unclamped per-insight values of `spec`.
pub fn ranking_keys(spec: &ScoreSpec, cards: &[ScoreCard]) -> BTreeMap<InsightId, f64> {
    cards.iter().map(|c| (c.insight_id.clone(), spec.raw(c))).collect()
}

/// Per-insight values of `spec`, clamped to `[0, 1]`.
pub fn evaluate_score_spec(spec: &ScoreSpec, cards: &[ScoreCard]) -> BTreeMap<InsightId, f64> {
    cards
        .iter()
        .map(|c| (c.insight_id.clone(), spec.raw(c).clamp(0.0, 1.0)))
        .collect()
}
