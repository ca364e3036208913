//! Top-k selection, reading order and prompt assembly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dashboard::DashboardSpec;
use crate::insight::{Insight, InsightId};
use crate::llm::{estimate_tokens, CharsPerToken, TokenEstimator};

pub const DEFAULT_INSTRUCTION: &str = "Summarize the following dashboard insights into a single concise paragraph, using as few sentences as possible while keeping all values accurate.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SelectionStrategy {
    /// Stop at the first tie group boundary at or above `min`.
    #[default]
    Earliest,
    /// Keep adding whole tie groups while the total stays within `max`.
    Fill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct SelectionOptions {
    pub min: usize,
    pub max: usize,
    pub strategy: SelectionStrategy,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            min: 4,
            max: 15,
            strategy: SelectionStrategy::Earliest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Selection {
    pub score_order: Vec<InsightId>,
    pub reading_order: Vec<InsightId>,
    pub min_target: usize,
    pub max_target: usize,
}

/// Tie groups of equal score, best first; members by ascending ID.
pub fn tie_groups(scores: &BTreeMap<InsightId, f64>) -> Vec<Vec<InsightId>> {
    let mut ids: Vec<&InsightId> = scores.keys().collect();
    ids.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then_with(|| a.cmp(b)));
    let mut groups: Vec<Vec<InsightId>> = Vec::new();
    for id in ids {
        match groups.last_mut() {
            Some(g) if scores[&g[0]] == scores[id] => g.push(id.clone()),
            _ => groups.push(vec![id.clone()]),
        }
    }
    groups
}

/// Takes whole tie groups from the top until at least `min` are chosen.
/// A group that would push a still-short selection past `max` is cut to
/// fit, keeping its lowest IDs.
pub fn select_top(scores: &BTreeMap<InsightId, f64>, opts: SelectionOptions) -> Vec<InsightId> {
    let max = opts.max.max(1);
    let min = opts.min.min(max);
    let mut out: Vec<InsightId> = Vec::new();
    for group in tie_groups(scores) {
        if out.len() >= min {
            if opts.strategy == SelectionStrategy::Earliest || out.len() + group.len() > max {
                break;
            }
            out.extend(group);
        } else if out.len() + group.len() <= max {
            out.extend(group);
        } else {
            let room = max - out.len();
            out.extend(group.into_iter().take(room));
            break;
        }
    }
    out
}

/// Sorts by panel row, panel column, table column (whole table first),
/// primary metric, earliest date (undated last) and finally ID.
pub fn order_for_reading(selection: &[InsightId], insights: &[Insight]) -> Vec<InsightId> {
    let by_id: BTreeMap<&InsightId, &Insight> = insights.iter().map(|n| (&n.id, n)).collect();
    let mut items: Vec<&Insight> = selection.iter().filter_map(|id| by_id.get(id).copied()).collect();
    items.sort_by(|a, b| {
        let key = |n: &'_ Insight| {
            (
                n.placement.row,
                n.placement.col,
                n.fact.table_column,
                n.fact.metrics.first().cloned().unwrap_or_default(),
                n.fact.earliest_date().is_none(),
                n.fact.earliest_date(),
            )
        };
        key(a).cmp(&key(b)).then_with(|| a.id.cmp(&b.id))
    });
    items.into_iter().map(|n| n.id.clone()).collect()
}

pub fn build_selection(scores: &BTreeMap<InsightId, f64>, insights: &[Insight], opts: SelectionOptions) -> Selection {
    let score_order = select_top(scores, opts);
    let reading_order = order_for_reading(&score_order, insights);
    Selection {
        score_order,
        reading_order,
        min_target: opts.min,
        max_target: opts.max,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct PromptOptions {
    pub instruction: String,
    pub include_titles: bool,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions {
            instruction: DEFAULT_INSTRUCTION.to_string(),
            include_titles: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptParagraph {
    pub panel_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub sentences: Vec<String>,
}

impl PromptParagraph {
    pub fn text(&self) -> String {
        let body = self.sentences.join(" ");
        match &self.title {
            Some(t) => format!("{t}: {body}"),
            None => body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptDoc {
    pub instruction: String,
    pub paragraphs: Vec<PromptParagraph>,
    pub token_budget: usize,
}

impl PromptDoc {
    pub fn body(&self) -> String {
        self.paragraphs
            .iter()
            .map(PromptParagraph::text)
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    /// The plain-text export: instruction, blank line, body.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.instruction, self.body())
    }
}

fn sentence(text: &str) -> String {
    if text.ends_with('.') {
        text.to_string()
    } else {
        format!("{text}.")
    }
}

pub fn build_prompt(
    reading_order: &[InsightId],
    insights: &[Insight],
    spec: &DashboardSpec,
    opts: &PromptOptions,
) -> PromptDoc {
    build_prompt_with(reading_order, insights, spec, opts, &CharsPerToken)
}

/// One paragraph per panel, in the order panels first appear in
/// `reading_order`.
pub fn build_prompt_with(
    reading_order: &[InsightId],
    insights: &[Insight],
    spec: &DashboardSpec,
    opts: &PromptOptions,
    estimator: &dyn TokenEstimator,
) -> PromptDoc {
    let by_id: BTreeMap<&InsightId, &Insight> = insights.iter().map(|n| (&n.id, n)).collect();
    let mut paragraphs: Vec<PromptParagraph> = Vec::new();
    let mut texts = Vec::new();
    for id in reading_order {
        let Some(n) = by_id.get(id) else { continue };
        texts.push(n.text.clone());
        let panel = &n.fact.panel_id;
        let idx = match paragraphs.iter().position(|p| &p.panel_id == panel) {
            Some(i) => i,
            None => {
                let title = opts
                    .include_titles
                    .then(|| spec.panel(panel).map(|p| p.title.clone()))
                    .flatten();
                paragraphs.push(PromptParagraph {
                    panel_id: panel.clone(),
                    title,
                    sentences: Vec::new(),
                });
                paragraphs.len() - 1
            }
        };
        paragraphs[idx].sentences.push(sentence(&n.text));
    }
    PromptDoc {
        instruction: opts.instruction.clone(),
        paragraphs,
        token_budget: estimate_tokens(estimator, &texts),
    }
}

/// Texts joined as sentences: `t1. t2.`
pub fn concat_baseline(reading_order: &[InsightId], insights: &[Insight]) -> String {
    let by_id: BTreeMap<&InsightId, &Insight> = insights.iter().map(|n| (&n.id, n)).collect();
    reading_order
        .iter()
        .filter_map(|id| by_id.get(id))
        .map(|n| sentence(&n.text))
        .collect::<Vec<_>>()
        .join(" ")
}
