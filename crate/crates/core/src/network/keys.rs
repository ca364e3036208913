//! Link kinds and the key values an insight holds for each of them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::insight::{DateRef, Insight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkCategory {
    TypeBased,
    TopicBased,
    ValueBased,
    MetadataBased,
    ScoreBased,
}

impl LinkCategory {
    pub const ALL: [LinkCategory; 5] = [
        LinkCategory::TypeBased,
        LinkCategory::TopicBased,
        LinkCategory::ValueBased,
        LinkCategory::MetadataBased,
        LinkCategory::ScoreBased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkCategory::TypeBased => "TypeBased",
            LinkCategory::TopicBased => "TopicBased",
            LinkCategory::ValueBased => "ValueBased",
            LinkCategory::MetadataBased => "MetadataBased",
            LinkCategory::ScoreBased => "ScoreBased",
        }
    }

    pub fn kinds(self) -> impl Iterator<Item = LinkKind> {
        LinkKind::ALL.into_iter().filter(move |k| k.category() == self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkKind {
    SameInsightType,
    SameComparisonType,
    SameChartCategory,
    SharedMetric,
    SharedDimension,
    SharedFilterSegment,
    SharedDate,
    SharedPercentage,
    SharedDimensionValue,
    SamePanelRow,
    SamePanelCol,
    SameTableColumn,
    SameSortAttribute,
    PriorityChainSuccessor,
}

impl LinkKind {
    pub const ALL: [LinkKind; 14] = [
        LinkKind::SameInsightType,
        LinkKind::SameComparisonType,
        LinkKind::SameChartCategory,
        LinkKind::SharedMetric,
        LinkKind::SharedDimension,
        LinkKind::SharedFilterSegment,
        LinkKind::SharedDate,
        LinkKind::SharedPercentage,
        LinkKind::SharedDimensionValue,
        LinkKind::SamePanelRow,
        LinkKind::SamePanelCol,
        LinkKind::SameTableColumn,
        LinkKind::SameSortAttribute,
        LinkKind::PriorityChainSuccessor,
    ];

    /// Every kind except the directed priority chain.
    pub fn undirected() -> impl Iterator<Item = LinkKind> {
        LinkKind::ALL.into_iter().filter(|k| !k.is_directed())
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::SameInsightType => "SameInsightType",
            LinkKind::SameComparisonType => "SameComparisonType",
            LinkKind::SameChartCategory => "SameChartCategory",
            LinkKind::SharedMetric => "SharedMetric",
            LinkKind::SharedDimension => "SharedDimension",
            LinkKind::SharedFilterSegment => "SharedFilterSegment",
            LinkKind::SharedDate => "SharedDate",
            LinkKind::SharedPercentage => "SharedPercentage",
            LinkKind::SharedDimensionValue => "SharedDimensionValue",
            LinkKind::SamePanelRow => "SamePanelRow",
            LinkKind::SamePanelCol => "SamePanelCol",
            LinkKind::SameTableColumn => "SameTableColumn",
            LinkKind::SameSortAttribute => "SameSortAttribute",
            LinkKind::PriorityChainSuccessor => "PriorityChainSuccessor",
        }
    }

    pub fn category(self) -> LinkCategory {
        use LinkKind::*;
        match self {
            SameInsightType | SameComparisonType | SameChartCategory => LinkCategory::TypeBased,
            SharedMetric | SharedDimension | SharedFilterSegment => LinkCategory::TopicBased,
            SharedDate | SharedPercentage | SharedDimensionValue => LinkCategory::ValueBased,
            SamePanelRow | SamePanelCol | SameTableColumn | SameSortAttribute => LinkCategory::MetadataBased,
            PriorityChainSuccessor => LinkCategory::ScoreBased,
        }
    }

    pub fn is_directed(self) -> bool {
        self == LinkKind::PriorityChainSuccessor
    }

    /// Prefix of gatekeeper node ids, as in `type:SK` or `metric:Calls`.
    pub fn gatekeeper_prefix(self) -> &'static str {
        match self {
            LinkKind::SameInsightType => "type",
            LinkKind::SameComparisonType => "comparison",
            LinkKind::SameChartCategory => "category",
            LinkKind::SharedMetric => "metric",
            LinkKind::SharedDimension => "dimension",
            LinkKind::SharedFilterSegment => "segment",
            LinkKind::SharedDate => "date",
            LinkKind::SharedPercentage => "percentage",
            LinkKind::SharedDimensionValue => "value",
            LinkKind::SamePanelRow => "row",
            LinkKind::SamePanelCol => "col",
            LinkKind::SameTableColumn => "column",
            LinkKind::SameSortAttribute => "sort",
            LinkKind::PriorityChainSuccessor => "rank",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LinkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| s.to_string())
    }
}

impl Serialize for LinkKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LinkKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|s| serde::de::Error::custom(format!("unknown link kind '{s}'")))
    }
}

impl Serialize for LinkCategory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LinkCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        LinkCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown link category '{s}'")))
    }
}

/// How date references are compared for `SharedDate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DateMatch {
    /// Points and ranges link when their day intervals intersect.
    #[default]
    Overlap,
    /// Only identical date references link.
    Exact,
}

pub fn format_date_key(start: NaiveDate, end: NaiveDate) -> String {
    if start == end {
        start.to_string()
    } else {
        format!("{start}..{end}")
    }
}

pub fn date_ref_key(d: &DateRef) -> String {
    format_date_key(d.start(), d.end())
}

/// Raw key values held by `insight` for a kind whose links mean "both
/// hold the same value". `SharedDate` under overlap matching and the
/// priority chain are not of that form and return nothing here.
pub fn held_values(kind: LinkKind, insight: &Insight, date_match: DateMatch) -> BTreeSet<String> {
    let f = &insight.fact;
    let mut out = BTreeSet::new();
    match kind {
        LinkKind::SameInsightType => {
            out.insert(f.insight_type.code().to_string());
        }
        LinkKind::SameComparisonType => {
            if f.comparison_type != crate::insight::ComparisonType::None {
                out.insert(f.comparison_type.name().to_string());
            }
        }
        LinkKind::SameChartCategory => {
            out.insert(insight.chart_category.name().to_string());
        }
        LinkKind::SharedMetric => out.extend(f.metrics.iter().cloned()),
        LinkKind::SharedDimension => out.extend(f.dimensions.iter().cloned()),
        LinkKind::SharedFilterSegment => out.extend(f.filter_segment.iter().map(|s| s.to_string())),
        LinkKind::SharedDate => {
            if date_match == DateMatch::Exact {
                out.extend(f.date_refs.iter().map(date_ref_key));
            }
        }
        LinkKind::SharedPercentage => out.extend(f.percentage.map(|p| p.to_string())),
        LinkKind::SharedDimensionValue => out.extend(f.dimension_values.iter().cloned()),
        LinkKind::SamePanelRow => {
            out.insert(insight.placement.row.to_string());
        }
        LinkKind::SamePanelCol => {
            out.insert(insight.placement.col.to_string());
        }
        LinkKind::SameTableColumn => {
            out.insert(f.table_column.to_string());
        }
        LinkKind::SameSortAttribute => out.extend(insight.placement.sort.iter().cloned()),
        LinkKind::PriorityChainSuccessor => {}
    }
    out
}

/// Link key for a held value; grid positions read `row=0` and `col=1`.
pub fn link_key(kind: LinkKind, value: &str) -> String {
    match kind {
        LinkKind::SamePanelRow => format!("row={value}"),
        LinkKind::SamePanelCol => format!("col={value}"),
        _ => value.to_string(),
    }
}

/// Intersection of two date references as a link key, if they overlap.
pub fn date_overlap_key(a: &DateRef, b: &DateRef) -> Option<String> {
    let start = a.start().max(b.start());
    let end = a.end().min(b.end());
    (start <= end).then(|| format_date_key(start, end))
}
