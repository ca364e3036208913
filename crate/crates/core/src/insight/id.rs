//! Short insight IDs such as `BCW-SK` or `TDX0MX~2`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{Fact, InsightType, TableColumn};
use crate::dashboard::{ChartType, PanelSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid insight id '{0}'")]
pub struct InvalidInsightId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InsightId(String);

impl InsightId {
    pub fn parse(s: &str) -> Result<InsightId, InvalidInsightId> {
        let bad = || InvalidInsightId(s.to_string());
        let (core, suffix) = match s.split_once('~') {
            Some((c, n)) => (c, Some(n)),
            None => (s, None),
        };
        let chars: Vec<char> = core.chars().collect();
        if chars.len() != 6 || ChartType::from_id_char(chars[0]).is_none() {
            return Err(bad());
        }
        let topic_ok = |c: char| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '-' || c == '_';
        if !topic_ok(chars[1]) || !topic_ok(chars[2]) {
            return Err(bad());
        }
        if !(chars[3] == '-' || chars[3] == '+' || chars[3].is_ascii_digit() || chars[3].is_ascii_uppercase()) {
            return Err(bad());
        }
        let code: String = chars[4..].iter().collect();
        if InsightType::from_code(&code).is_none() {
            return Err(bad());
        }
        if let Some(n) = suffix {
            match n.parse::<u32>() {
                Ok(k) if k >= 2 && !n.starts_with('0') => {}
                _ => return Err(bad()),
            }
        }
        Ok(InsightId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The six-character part without any `~n` disambiguator.
    pub fn core(&self) -> &str {
        &self.0[..6]
    }

    pub fn chart_type(&self) -> ChartType {
        ChartType::from_id_char(self.0.chars().next().expect("validated")).expect("validated")
    }

    pub fn insight_type(&self) -> InsightType {
        InsightType::from_code(&self.0[4..6]).expect("validated")
    }
}

impl fmt::Display for InsightId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for InsightId {
    type Err = InvalidInsightId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InsightId::parse(s)
    }
}

impl Serialize for InsightId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for InsightId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        InsightId::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn topic_letter(name: &str) -> char {
    name.chars()
        .find(|c| c.is_alphanumeric())
        .and_then(|c| c.to_uppercase().next())
        .filter(char::is_ascii_alphanumeric)
        .unwrap_or('_')
}

fn column_char(col: TableColumn) -> char {
    match col {
        TableColumn::Whole => '-',
        TableColumn::Index(i) if i < 36 => char::from_digit(i as u32, 36)
            .expect("below radix")
            .to_ascii_uppercase(),
        TableColumn::Index(_) => '+',
    }
}

/// Builds the ID of `fact`, appending `~2`, `~3`, ... until it is not in
/// `existing`.
pub fn assign_id(fact: &Fact, panel: &PanelSpec, existing: &BTreeSet<InsightId>) -> InsightId {
    let metric = fact.metrics.first().map_or('-', |m| topic_letter(m));
    let dimension = match fact.dimensions.as_slice() {
        [] => '-',
        [only] => topic_letter(only),
        _ => 'X',
    };
    let core = format!(
        "{}{}{}{}{}",
        panel.chart_type.id_char(),
        metric,
        dimension,
        column_char(fact.table_column),
        fact.insight_type.code()
    );
    let mut candidate = InsightId(core.clone());
    let mut n = 2;
    while existing.contains(&candidate) {
        candidate = InsightId(format!("{core}~{n}"));
        n += 1;
    }
    candidate
}
