//! Story components: an insight's sentence paired with a highlighted chart.

use std::collections::BTreeSet;

use insightloom_core::dashboard::{derive_table_view, AxisValue, ChartType, DashboardSpec, MetricSeries, ViewError};
use insightloom_core::insight::{DateRef, Insight, InsightId};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const AXIS_FIELD: &str = "axis";
pub const SERIES_FIELD: &str = "series";
pub const VALUE_FIELD: &str = "value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Mark {
    Bar,
    Arc,
    Line,
}

impl Mark {
    pub fn for_chart(chart: ChartType, temporal_axis: bool) -> Mark {
        match chart {
            ChartType::Bar => Mark::Bar,
            ChartType::Donut => Mark::Arc,
            ChartType::Line | ChartType::MultiLine => Mark::Line,
            ChartType::Table if temporal_axis => Mark::Line,
            ChartType::Table => Mark::Bar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineData {
    pub values: Vec<Map<String, Value>>,
}

/// Axis entries to emphasize; drawn at full opacity, the rest faded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub field: String,
    #[serde(rename = "oneOf")]
    pub one_of: Vec<String>,
}

/// A grammar-of-graphics chart description with inline data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub mark: Mark,
    pub data: InlineData,
    pub encoding: Value,
    pub highlight: Highlight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoryComponent {
    pub insight_id: InsightId,
    pub title: String,
    pub text: String,
    pub chart_spec: ChartSpec,
}

fn date_highlights(d: &DateRef) -> Vec<String> {
    match d {
        DateRef::Point(p) => vec![p.to_string()],
        DateRef::Range { start, end } => vec![start.to_string(), end.to_string()],
    }
}

/// Mentioned dimension values and date endpoints, in mention order.
pub fn highlight_set(insight: &Insight) -> Vec<String> {
    let mut seen = BTreeSet::new();
    insight
        .fact
        .mentioned_values()
        .iter()
        .cloned()
        .chain(insight.fact.date_refs.iter().flat_map(date_highlights))
        .filter(|v| seen.insert(v.clone()))
        .collect()
}

fn series_for<'a>(insight: &Insight, all: &'a [MetricSeries]) -> Vec<&'a MetricSeries> {
    let f = &insight.fact;
    let segment = f.split.as_ref().or(f.filter_segment.as_ref());
    let picked: Vec<&MetricSeries> = match segment {
        Some(seg) => all
            .iter()
            .filter(|s| s.group.as_ref().is_some_and(|g| &g.segment == seg))
            .collect(),
        None => all.iter().filter(|s| f.metrics.contains(&s.metric)).collect(),
    };
    if picked.is_empty() {
        all.iter().collect()
    } else {
        picked
    }
}

fn encoding(mark: Mark, axis_type: &str, multi_series: bool) -> Value {
    let opacity = json!({
        "condition": {"test": "highlight", "value": 1.0},
        "value": 0.3
    });
    let mut enc = match mark {
        Mark::Arc => json!({
            "theta": {"field": VALUE_FIELD, "type": "quantitative"},
            "color": {"field": AXIS_FIELD, "type": "nominal"},
        }),
        Mark::Bar | Mark::Line => json!({
            "x": {"field": AXIS_FIELD, "type": axis_type},
            "y": {"field": VALUE_FIELD, "type": "quantitative"},
        }),
    };
    let obj = enc.as_object_mut().expect("object literal");
    if multi_series && mark != Mark::Arc {
        obj.insert("color".into(), json!({"field": SERIES_FIELD, "type": "nominal"}));
    }
    obj.insert("opacity".into(), opacity);
    enc
}

pub fn story_component(insight: &Insight, spec: &DashboardSpec) -> Result<StoryComponent, ViewError> {
    let view = derive_table_view(spec, &insight.fact.panel_id)?;
    let temporal = view.axis.iter().all(|a| matches!(a, AxisValue::Date(_)));
    let mark = Mark::for_chart(view.chart_type, temporal);
    let series = series_for(insight, &view.series);
    let mut values = Vec::new();
    for s in &series {
        for (a, v) in view.axis.iter().zip(&s.values) {
            let mut row = Map::new();
            row.insert(AXIS_FIELD.into(), Value::String(a.to_string()));
            row.insert(SERIES_FIELD.into(), Value::String(s.label.clone()));
            row.insert(VALUE_FIELD.into(), json!(v));
            values.push(row);
        }
    }
    let axis_type = if temporal { "temporal" } else { "nominal" };
    let title = spec
        .panel(&insight.fact.panel_id)
        .map(|p| p.title.clone())
        .unwrap_or_default();
    Ok(StoryComponent {
        insight_id: insight.id.clone(),
        title,
        text: insight.text.clone(),
        chart_spec: ChartSpec {
            mark,
            data: InlineData { values },
            encoding: encoding(mark, axis_type, series.len() > 1),
            highlight: Highlight {
                field: AXIS_FIELD.into(),
                one_of: highlight_set(insight),
            },
        },
    })
}
