//! The exported bundle: every pipeline artifact in one JSON document.

use std::collections::{BTreeMap, BTreeSet};

use insightloom_core::dashboard::DashboardSpec;
use insightloom_core::insight::{ChartCategory, Insight, InsightId, InsightType};
use insightloom_core::llm::{BackendKind, GroundingReport, LlmParams, SummaryResult};
use insightloom_core::narrative::{PromptDoc, Selection};
use insightloom_core::network::{DateMatch, InsightNetwork, Link, LinkKind};
use insightloom_core::scoring::{ScoreCard, ScoringContext};
use serde::{Deserialize, Serialize};

use crate::story::StoryComponent;

pub const BUNDLE_FORMAT: &str = "insightloom-bundle/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkNode {
    pub id: InsightId,
    pub panel_id: String,
    #[serde(rename = "type")]
    pub insight_type: InsightType,
    pub chart_category: ChartCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkExport {
    pub nodes: Vec<NetworkNode>,
    pub links: Vec<Link>,
    pub scores: BTreeMap<InsightId, ScoreCard>,
    pub enabled_kinds: BTreeSet<LinkKind>,
    pub date_match: DateMatch,
}

impl NetworkExport {
    pub fn new(net: &InsightNetwork, cards: &[ScoreCard]) -> NetworkExport {
        NetworkExport {
            nodes: net
                .nodes
                .iter()
                .map(|n| NetworkNode {
                    id: n.id.clone(),
                    panel_id: n.fact.panel_id.clone(),
                    insight_type: n.fact.insight_type,
                    chart_category: n.chart_category,
                })
                .collect(),
            links: net.links.clone(),
            scores: cards.iter().map(|c| (c.insight_id.clone(), c.clone())).collect(),
            enabled_kinds: net.enabled_kinds.clone(),
            date_match: net.date_match,
        }
    }

    /// Rebuilds the network over the bundle's insights.
    pub fn to_network(&self, insights: &[Insight]) -> InsightNetwork {
        InsightNetwork {
            nodes: insights.to_vec(),
            links: self.links.clone(),
            enabled_kinds: self.enabled_kinds.clone(),
            date_match: self.date_match,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoresExport {
    pub cards: Vec<ScoreCard>,
    pub context: ScoringContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptExport {
    pub doc: PromptDoc,
    pub text: String,
}

/// A summary as stored in the bundle; latency lives in `timing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BundleSummary {
    pub summary_text: String,
    pub prompt_used: String,
    pub params: LlmParams,
    pub backend: BackendKind,
    pub attempts: u32,
}

impl From<&SummaryResult> for BundleSummary {
    fn from(s: &SummaryResult) -> Self {
        BundleSummary {
            summary_text: s.summary_text.clone(),
            prompt_used: s.prompt_used.clone(),
            params: s.params.clone(),
            backend: s.backend,
            attempts: s.attempts,
        }
    }
}

/// Wall-clock facts about a run, kept apart so the rest of the bundle is
/// reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub generated_at: String,
    pub elapsed_ms: u64,
    pub llm_latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bundle {
    pub format: String,
    pub spec: DashboardSpec,
    pub insights: Vec<Insight>,
    pub network: NetworkExport,
    pub scores: ScoresExport,
    pub selection: Selection,
    pub prompt: PromptExport,
    pub summary: Option<BundleSummary>,
    pub grounding: Option<GroundingReport>,
    pub baseline: String,
    pub story_components: Vec<StoryComponent>,
    pub timing: Timing,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported bundle format '{0}'")]
    Format(String),
    #[error("bundle references unknown insight '{0}'")]
    Dangling(String),
}

impl Bundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    /// The bundle without its `timing` section.
    pub fn content_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("bundle serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn from_json(doc: &str) -> Result<Bundle, BundleError> {
        let b: Bundle = serde_json::from_str(doc)?;
        if b.format != BUNDLE_FORMAT {
            return Err(BundleError::Format(b.format));
        }
        b.check_ids()?;
        Ok(b)
    }

    pub fn insight(&self, id: &InsightId) -> Option<&Insight> {
        self.insights.iter().find(|n| &n.id == id)
    }

    /// Every ID mentioned anywhere must name one of the bundle's insights.
    pub fn check_ids(&self) -> Result<(), BundleError> {
        let known: BTreeSet<&InsightId> = self.insights.iter().map(|n| &n.id).collect();
        let mentioned = self
            .network
            .links
            .iter()
            .flat_map(|l| [&l.a, &l.b])
            .chain(self.network.nodes.iter().map(|n| &n.id))
            .chain(self.network.scores.keys())
            .chain(self.scores.cards.iter().map(|c| &c.insight_id))
            .chain(&self.selection.score_order)
            .chain(&self.selection.reading_order)
            .chain(self.story_components.iter().map(|s| &s.insight_id));
        for id in mentioned {
            if !known.contains(id) {
                return Err(BundleError::Dangling(id.to_string()));
            }
        }
        Ok(())
    }
}
