//! Typed data facts, their rendered text and short IDs.

mod detect;
mod id;
mod render;
pub mod stats;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dashboard::{derive_table_view, ChartType, DashboardSpec, PanelSpec, Segment, TableView, ViewError};

pub use detect::{detect_facts, DetectorConfig};
pub use id::{assign_id, InsightId, InvalidInsightId};
pub use render::{format_date, format_date_range, format_number, render_text};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InsightError {
    #[error("panel '{0}' has fewer than two data points")]
    TooShort(String),
    #[error("{insight_type} fact is missing '{field}' required by its template")]
    TemplateHole {
        insight_type: InsightType,
        field: &'static str,
    },
    #[error(transparent)]
    View(#[from] ViewError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InsightType {
    Minimum,
    Maximum,
    MaxExtent,
    HighestBar,
    Skew,
    LongTail,
    Seasonality,
    Trend,
    Spike,
    Decline,
    Anomaly,
    Correlation,
}

impl InsightType {
    pub const ALL: [InsightType; 12] = [
        InsightType::Minimum,
        InsightType::Maximum,
        InsightType::MaxExtent,
        InsightType::HighestBar,
        InsightType::Skew,
        InsightType::LongTail,
        InsightType::Seasonality,
        InsightType::Trend,
        InsightType::Spike,
        InsightType::Decline,
        InsightType::Anomaly,
        InsightType::Correlation,
    ];

    pub fn code(self) -> &'static str {
        match self {
            InsightType::Minimum => "MI",
            InsightType::Maximum => "MX",
            InsightType::MaxExtent => "ME",
            InsightType::HighestBar => "HB",
            InsightType::Skew => "SK",
            InsightType::LongTail => "LT",
            InsightType::Seasonality => "SE",
            InsightType::Trend => "TR",
            InsightType::Spike => "SP",
            InsightType::Decline => "DE",
            InsightType::Anomaly => "AN",
            InsightType::Correlation => "CO",
        }
    }

    pub fn from_code(code: &str) -> Option<InsightType> {
        InsightType::ALL.into_iter().find(|t| t.code() == code)
    }
}

impl fmt::Display for InsightType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for InsightType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for InsightType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = String::deserialize(d)?;
        InsightType::from_code(&code).ok_or_else(|| serde::de::Error::custom(format!("unknown insight type '{code}'")))
    }
}

/// Detector family a panel is analyzed as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChartCategory {
    BarLike,
    LineLike,
    MultiLineLike,
}

impl ChartCategory {
    pub fn name(self) -> &'static str {
        match self {
            ChartCategory::BarLike => "BarLike",
            ChartCategory::LineLike => "LineLike",
            ChartCategory::MultiLineLike => "MultiLineLike",
        }
    }
}

pub fn categorize_chart(panel: &PanelSpec, view: &TableView) -> ChartCategory {
    match panel.chart_type {
        ChartType::Bar | ChartType::Donut => ChartCategory::BarLike,
        ChartType::Line => ChartCategory::LineLike,
        ChartType::MultiLine => ChartCategory::MultiLineLike,
        ChartType::Table if view.time_axis.is_some() => ChartCategory::LineLike,
        ChartType::Table => ChartCategory::BarLike,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComparisonType {
    Total,
    VsAverage,
    RelativeChange,
    MoreThan,
    LessThan,
    None,
}

impl ComparisonType {
    pub fn name(self) -> &'static str {
        match self {
            ComparisonType::Total => "Total",
            ComparisonType::VsAverage => "VsAverage",
            ComparisonType::RelativeChange => "RelativeChange",
            ComparisonType::MoreThan => "MoreThan",
            ComparisonType::LessThan => "LessThan",
            ComparisonType::None => "None",
        }
    }
}

/// A calendar point or an inclusive `[start, end]` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DateRef {
    Point(NaiveDate),
    Range { start: NaiveDate, end: NaiveDate },
}

impl DateRef {
    pub fn start(&self) -> NaiveDate {
        match *self {
            DateRef::Point(d) => d,
            DateRef::Range { start, .. } => start,
        }
    }

    pub fn end(&self) -> NaiveDate {
        match *self {
            DateRef::Point(d) => d,
            DateRef::Range { end, .. } => end,
        }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start() <= d && d <= self.end()
    }

    pub fn overlaps(&self, other: &DateRef) -> bool {
        self.start() <= other.end() && other.start() <= self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledNumber {
    pub label: String,
    pub value: f64,
}

impl LabeledNumber {
    pub fn new(label: &str, value: f64) -> Self {
        LabeledNumber {
            label: label.to_string(),
            value,
        }
    }
}

/// Table column an insight is about, or the panel as a whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableColumn {
    Whole,
    Index(usize),
}

impl fmt::Display for TableColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableColumn::Whole => f.write_str("-"),
            TableColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for TableColumn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TableColumn::Whole => s.serialize_str("-"),
            TableColumn::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for TableColumn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "-" => Ok(TableColumn::Whole),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|i| TableColumn::Index(i as usize))
                .ok_or_else(|| serde::de::Error::custom("table column must be a non-negative integer")),
            other => Err(serde::de::Error::custom(format!("bad table column {other}"))),
        }
    }
}

/// One generated data fact, before text rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Fact {
    pub panel_id: String,
    #[serde(rename = "type")]
    pub insight_type: InsightType,
    #[serde(rename = "comparison")]
    pub comparison_type: ComparisonType,
    pub metrics: Vec<String>,
    pub dimensions: Vec<String>,
    pub filter_segment: Option<Segment>,
    #[serde(rename = "values")]
    pub dimension_values: Vec<String>,
    #[serde(rename = "dates")]
    pub date_refs: Vec<DateRef>,
    pub numbers: Vec<LabeledNumber>,
    pub percentage: Option<u32>,
    pub table_column: TableColumn,
    /// Quoted subject phrases of the rendered sentence (series labels).
    pub subjects: Vec<String>,
    /// Dimension value that selects the series this fact is about
    /// (multi-line charts split by a dimension).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Segment>,
}

impl Fact {
    pub fn number(&self, label: &str) -> Option<f64> {
        self.numbers.iter().find(|n| n.label == label).map(|n| n.value)
    }

    pub fn earliest_date(&self) -> Option<NaiveDate> {
        self.date_refs.iter().map(DateRef::start).min()
    }

    /// Dimension values mentioned as positions or categories, i.e. without
    /// the series split value.
    pub fn mentioned_values(&self) -> &[String] {
        let skip = usize::from(self.split.is_some() && !self.dimension_values.is_empty());
        &self.dimension_values[skip..]
    }
}

/// Where the panel behind an insight sits in the dashboard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanelPlacement {
    pub row: usize,
    pub col: usize,
    pub sort: Option<String>,
    pub table_columns: usize,
    pub chart_type: ChartType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Insight {
    pub id: InsightId,
    pub text: String,
    pub chart_category: ChartCategory,
    #[serde(flatten)]
    pub fact: Fact,
    pub placement: PanelPlacement,
}

fn canonical_order(a: &Fact, b: &Fact) -> Ordering {
    a.panel_id
        .cmp(&b.panel_id)
        .then_with(|| a.insight_type.code().cmp(b.insight_type.code()))
        .then_with(|| a.table_column.cmp(&b.table_column))
}

/// Runs every detector over every panel and returns the dashboard's insight
/// set in canonical order (panel, type code, table column).
pub fn generate_insights(spec: &DashboardSpec, config: &DetectorConfig) -> Result<Vec<Insight>, InsightError> {
    let mut facts = Vec::new();
    for panel in &spec.panels {
        let view = derive_table_view(spec, &panel.panel_id)?;
        let category = categorize_chart(panel, &view);
        let placement = PanelPlacement {
            row: panel.row,
            col: panel.col,
            sort: panel.sort.clone(),
            table_columns: view.table_columns,
            chart_type: panel.chart_type,
        };
        for fact in detect_facts(&view, category, config)? {
            facts.push((fact, category, placement.clone()));
        }
    }
    facts.sort_by(|a, b| canonical_order(&a.0, &b.0));

    let mut existing = std::collections::BTreeSet::new();
    let mut insights = Vec::with_capacity(facts.len());
    for (fact, category, placement) in facts {
        let panel = spec.panel(&fact.panel_id).expect("fact from known panel");
        let id = assign_id(&fact, panel, &existing);
        existing.insert(id.clone());
        let text = render_text(&fact)?;
        insights.push(Insight {
            id,
            text,
            chart_category: category,
            fact,
            placement,
        });
    }
    Ok(insights)
}

impl FromStr for ChartCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BarLike" => Ok(ChartCategory::BarLike),
            "LineLike" => Ok(ChartCategory::LineLike),
            "MultiLineLike" => Ok(ChartCategory::MultiLineLike),
            _ => Err(format!("unknown chart category '{s}'")),
        }
    }
}
