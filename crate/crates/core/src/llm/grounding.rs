//! Checks that every number, date and quoted entity in a summary traces
//! back to the structured facts of the selected insights.

use std::sync::OnceLock;

use chrono::{Datelike, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::insight::{Insight, InsightId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ClaimKind {
    Number,
    Date,
    Entity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Supported,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ClaimValue {
    Number {
        value: f64,
        percent: bool,
    },
    /// Year is absent when the summary did not state one.
    Date {
        year: Option<i32>,
        month: u32,
        day: u32,
    },
    Entity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Claim {
    pub kind: ClaimKind,
    pub token: String,
    /// Byte range in the summary.
    pub span: (usize, usize),
    pub value: ClaimValue,
    pub verdict: Verdict,
    pub supporting_insight_ids: Vec<InsightId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingReport {
    pub claims: Vec<Claim>,
}

impl GroundingReport {
    pub fn unsupported(&self) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(|c| c.verdict == Verdict::Unsupported)
    }

    pub fn unsupported_count(&self) -> usize {
        self.unsupported().count()
    }
}

const MONTH_PATTERN: &str = r"(?i)\b(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\b\.?\s+(\d{1,2})(?:st|nd|rd|th)?\b(?:,\s*(\d{4}))?";

fn month_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(MONTH_PATTERN).expect("valid regex"))
}

fn continuation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s+(?:and|to|-|through)\s+(\d{1,2})(?:st|nd|rd|th)\b(?:,\s*(\d{4}))?").expect("valid regex")
    })
}

fn iso_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(\d{4})-(\d{2})-(\d{2})\b").expect("valid regex"))
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?%?").expect("valid regex"))
}

fn month_index(abbrev: &str) -> u32 {
    const M: [&str; 12] = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ];
    let head = abbrev[..3].to_ascii_lowercase();
    M.iter().position(|m| *m == head).expect("regex month") as u32 + 1
}

struct Raw {
    kind: ClaimKind,
    span: (usize, usize),
    value: ClaimValue,
}

/// Single quotes open after a non-alphanumeric character and close before
/// one, so apostrophes inside words are left alone.
fn quoted_entities(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let opens = c == '\'' && (i == 0 || !chars[i - 1].1.is_alphanumeric());
        if opens {
            let close = (i + 1..chars.len()).find(|&j| {
                chars[j].1 == '\'' && j > i + 1 && chars.get(j + 1).is_none_or(|(_, n)| !n.is_alphanumeric())
            });
            if let Some(j) = close {
                out.push((pos, chars[j].0 + 1));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn overlaps(taken: &[(usize, usize)], s: usize, e: usize) -> bool {
    taken.iter().any(|&(a, b)| s < b && a < e)
}

fn push_date(out: &mut Vec<Raw>, span: (usize, usize), year: Option<i32>, month: u32, day: u32) {
    out.push(Raw {
        kind: ClaimKind::Date,
        span,
        value: ClaimValue::Date { year, month, day },
    });
}

fn raw_claims(text: &str) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for (s, e) in quoted_entities(text) {
        out.push(Raw {
            kind: ClaimKind::Entity,
            span: (s, e),
            value: ClaimValue::Entity,
        });
        taken.push((s, e));
    }
    for m in month_re().captures_iter(text) {
        let whole = m.get(0).expect("match");
        if overlaps(&taken, whole.start(), whole.end()) {
            continue;
        }
        let month = month_index(&m[1]);
        let day: u32 = m[2].parse().unwrap_or(0);
        let year = m.get(3).and_then(|y| y.as_str().parse().ok());
        push_date(&mut out, (whole.start(), whole.end()), year, month, day);
        taken.push((whole.start(), whole.end()));
        if let Some(c) = continuation_re().captures(&text[whole.end()..]) {
            let g = c.get(1).expect("day");
            let (s, e) = (whole.end() + g.start(), whole.end() + c.get(0).expect("match").end());
            let year2 = c.get(2).and_then(|y| y.as_str().parse().ok()).or(year);
            push_date(&mut out, (s, e), year2, month, g.as_str().parse().unwrap_or(0));
            taken.push((whole.end(), e));
        }
    }
    for m in iso_re().captures_iter(text) {
        let whole = m.get(0).expect("match");
        if overlaps(&taken, whole.start(), whole.end()) {
            continue;
        }
        push_date(
            &mut out,
            (whole.start(), whole.end()),
            m[1].parse().ok(),
            m[2].parse().unwrap_or(0),
            m[3].parse().unwrap_or(0),
        );
        taken.push((whole.start(), whole.end()));
    }
    for m in number_re().find_iter(text) {
        if overlaps(&taken, m.start(), m.end()) {
            continue;
        }
        let prev = text[..m.start()].chars().next_back();
        if prev.is_some_and(|c| c.is_alphanumeric() || c == '.' || c == ',') {
            continue;
        }
        let token = m.as_str();
        let percent = token.ends_with('%');
        let cleaned: String = token.trim_end_matches('%').chars().filter(|c| *c != ',').collect();
        let Ok(value) = cleaned.parse::<f64>() else { continue };
        out.push(Raw {
            kind: ClaimKind::Number,
            span: (m.start(), m.end()),
            value: ClaimValue::Number { value, percent },
        });
    }
    out.sort_by_key(|r| r.span);
    out
}

fn number_supported(n: &Insight, value: f64) -> bool {
    let f = &n.fact;
    f.numbers.iter().any(|x| (x.value - value).abs() < 1e-9)
        || f.percentage.is_some_and(|p| (p as f64 - value).abs() < 1e-9)
}

fn date_supported(n: &Insight, year: Option<i32>, month: u32, day: u32) -> bool {
    n.fact.date_refs.iter().any(|d| {
        let years: Vec<i32> = match year {
            Some(y) => vec![y],
            None => (d.start().year()..=d.end().year()).collect(),
        };
        years
            .into_iter()
            .filter_map(|y| NaiveDate::from_ymd_opt(y, month, day))
            .any(|date| d.contains(date))
    })
}

fn entity_supported(n: &Insight, entity: &str) -> bool {
    let f = &n.fact;
    let e = entity.to_lowercase();
    let segments = f.filter_segment.iter().chain(f.split.iter());
    f.metrics
        .iter()
        .chain(&f.dimensions)
        .chain(&f.dimension_values)
        .chain(&f.subjects)
        .chain(segments.flat_map(|s| [&s.column, &s.value]))
        .any(|x| x.to_lowercase() == e)
}

pub fn extract_claims(summary: &str) -> Vec<(ClaimKind, String, (usize, usize))> {
    raw_claims(summary)
        .into_iter()
        .map(|r| (r.kind, summary[r.span.0..r.span.1].to_string(), r.span))
        .collect()
}

/// Gives every extracted claim one verdict against the `selected` insights.
pub fn verify_grounding(summary: &str, selected: &[Insight]) -> GroundingReport {
    let claims = raw_claims(summary)
        .into_iter()
        .map(|r| {
            let token = summary[r.span.0..r.span.1].to_string();
            let entity = token.trim_matches('\'').to_string();
            let supporting: Vec<InsightId> = selected
                .iter()
                .filter(|n| match r.value {
                    ClaimValue::Number { value, .. } => number_supported(n, value),
                    ClaimValue::Date { year, month, day } => date_supported(n, year, month, day),
                    ClaimValue::Entity => entity_supported(n, &entity),
                })
                .map(|n| n.id.clone())
                .collect();
            Claim {
                kind: r.kind,
                token,
                span: r.span,
                value: r.value,
                verdict: if supporting.is_empty() {
                    Verdict::Unsupported
                } else {
                    Verdict::Supported
                },
                supporting_insight_ids: supporting,
            }
        })
        .collect();
    GroundingReport { claims }
}
