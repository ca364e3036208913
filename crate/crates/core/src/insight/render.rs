//! Sentence templates and the number and date formats they use.

use chrono::{Datelike, NaiveDate};

use super::stats::round_to;
use super::{ChartCategory, ComparisonType, DateRef, Fact, InsightError, InsightType};

const MONTHS: [&str; 12] = [
    "Jan.", "Feb.", "Mar.", "Apr.", "May", "Jun.", "Jul.", "Aug.", "Sep.", "Oct.", "Nov.", "Dec.",
];

fn ordinal(day: u32) -> String {
    let suffix = match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{day}{suffix}")
}

/// `Oct. 8th`.
pub fn format_date(d: NaiveDate) -> String {
    format!("{} {}", MONTHS[d.month0() as usize], ordinal(d.day()))
}

/// `Oct. 21st and 26th`, `Sep. 30th and Oct. 2nd`, or with years when the
/// range crosses one.
pub fn format_date_range(start: NaiveDate, end: NaiveDate) -> String {
    if start.year() != end.year() {
        return format!(
            "{}, {} and {}, {}",
            format_date(start),
            start.year(),
            format_date(end),
            end.year()
        );
    }
    if start.month() == end.month() {
        format!("{} and {}", format_date(start), ordinal(end.day()))
    } else {
        format!("{} and {}", format_date(start), format_date(end))
    }
}

/// Thousands separators on the integer part; the fraction is printed as
/// stored (values are already rounded to their column precision).
pub fn format_number(x: f64) -> String {
    let x = round_to(x, 6);
    let raw = format!("{}", x.abs());
    let (int, frac) = match raw.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (raw.as_str(), None),
    };
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    let sign = if x < 0.0 { "-" } else { "" };
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}

fn quote(s: &str) -> String {
    format!("'{s}'")
}

fn list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

struct Slots<'a> {
    fact: &'a Fact,
}

impl<'a> Slots<'a> {
    fn hole(&self, field: &'static str) -> InsightError {
        InsightError::TemplateHole {
            insight_type: self.fact.insight_type,
            field,
        }
    }

    fn number(&self, label: &'static str) -> Result<String, InsightError> {
        self.fact
            .number(label)
            .map(format_number)
            .ok_or_else(|| self.hole(label))
    }

    fn percentage(&self) -> Result<u32, InsightError> {
        self.fact.percentage.ok_or_else(|| self.hole("percentage"))
    }

    fn subject(&self) -> Result<String, InsightError> {
        let s = self.fact.subjects.first().ok_or_else(|| self.hole("subjects"))?;
        let seg = match &self.fact.filter_segment {
            Some(seg) => format!(" of {} for {}", quote(&seg.column), quote(&seg.value)),
            None => String::new(),
        };
        Ok(format!("{}{seg}", quote(s)))
    }

    /// Axis positions mentioned by the fact, categories quoted and dates
    /// spelled out.
    fn positions(&self) -> Vec<String> {
        let mut out: Vec<String> = self.fact.mentioned_values().iter().map(|v| quote(v)).collect();
        for d in &self.fact.date_refs {
            out.push(match *d {
                DateRef::Point(p) => format_date(p),
                DateRef::Range { start, end } => format_date_range(start, end),
            });
        }
        out
    }

    fn position(&self, i: usize) -> Result<String, InsightError> {
        self.positions().get(i).cloned().ok_or_else(|| self.hole("position"))
    }

    /// The two ends of a change, whether given as one date range or as two
    /// categories.
    fn span(&self) -> Result<String, InsightError> {
        let p = self.positions();
        match p.as_slice() {
            [range] if matches!(self.fact.date_refs.as_slice(), [DateRef::Range { .. }]) => Ok(range.clone()),
            [a, b] => Ok(format!("{a} and {b}")),
            _ => Err(self.hole("dates")),
        }
    }

    fn direction(&self, more: &'static str, less: &'static str) -> Result<&'static str, InsightError> {
        match self.fact.comparison_type {
            ComparisonType::MoreThan => Ok(more),
            ComparisonType::LessThan => Ok(less),
            _ => Err(self.hole("comparison")),
        }
    }
}

fn category_of(fact: &Fact) -> ChartCategory {
    match fact.insight_type {
        InsightType::HighestBar | InsightType::Skew | InsightType::LongTail => ChartCategory::BarLike,
        InsightType::Minimum | InsightType::Maximum if fact.comparison_type == ComparisonType::Total => {
            ChartCategory::BarLike
        }
        _ => ChartCategory::LineLike,
    }
}

/// Fills the template of the fact's insight type.
pub fn render_text(fact: &Fact) -> Result<String, InsightError> {
    let s = Slots { fact };
    let bar = category_of(fact) == ChartCategory::BarLike;
    let text = match fact.insight_type {
        InsightType::Minimum | InsightType::Maximum if bar => {
            let word = if fact.insight_type == InsightType::Maximum {
                "highest"
            } else {
                "lowest"
            };
            format!(
                "{} had the {word} value, with {} in {} ({}% in total)",
                s.position(0)?,
                s.number("value")?,
                s.subject()?,
                s.percentage()?
            )
        }
        InsightType::Minimum | InsightType::Maximum => {
            let (word, rel) = if fact.insight_type == InsightType::Maximum {
                ("highest", "more")
            } else {
                ("lowest", "less")
            };
            format!(
                "The {word} amount of {} of {} appeared on {}, {}% {rel} than the average of {}",
                s.subject()?,
                s.number("value")?,
                s.position(0)?,
                s.percentage()?,
                s.number("avg")?
            )
        }
        InsightType::HighestBar => format!(
            "{} had the highest bar of {}, {}% more than the average of {}",
            s.position(0)?,
            s.subject()?,
            s.percentage()?,
            s.number("avg")?
        ),
        InsightType::Skew => {
            let p = s.positions();
            if p.len() < 2 {
                return Err(s.hole("values"));
            }
            format!(
                "The values of {} are highly skewed towards {} ({}% in total)",
                s.subject()?,
                list(&p),
                s.percentage()?
            )
        }
        InsightType::LongTail => {
            let p = s.positions();
            if p.is_empty() {
                return Err(s.hole("values"));
            }
            format!(
                "The {} smallest values of {} ({}) make up only {}% in total",
                s.number("count")?,
                s.subject()?,
                list(&p),
                s.percentage()?
            )
        }
        InsightType::MaxExtent => format!(
            "{} ranged from {} on {} to {} on {}, with the lowest value {}% less than the highest",
            s.subject()?,
            s.number("min")?,
            s.position(0)?,
            s.number("max")?,
            s.position(1)?,
            s.percentage()?
        ),
        InsightType::Trend => {
            let (from, to) = (
                fact.number("from").ok_or_else(|| s.hole("from"))?,
                fact.number("to").ok_or_else(|| s.hole("to"))?,
            );
            let (dir, verb) = if to >= from {
                ("an upward", "increasing")
            } else {
                ("a downward", "decreasing")
            };
            format!(
                "{} shows {dir} trend between {}, {verb} by {}% from {} to {}",
                s.subject()?,
                s.span()?,
                s.percentage()?,
                format_number(from),
                format_number(to)
            )
        }
        InsightType::Spike => format!(
            "{} grew significantly between {}, up by {}% from {} to {}",
            s.subject()?,
            s.span()?,
            s.percentage()?,
            s.number("from")?,
            s.number("to")?
        ),
        InsightType::Decline => format!(
            "{} significantly decreased in the span between {}, declining by {}% from {} to {}",
            s.subject()?,
            s.span()?,
            s.percentage()?,
            s.number("from")?,
            s.number("to")?
        ),
        InsightType::Anomaly => format!(
            "{} had an anomalous value of {} on {}, {}% {} than the average of {}",
            s.subject()?,
            s.number("value")?,
            s.position(0)?,
            s.percentage()?,
            s.direction("more", "less")?,
            s.number("avg")?
        ),
        InsightType::Seasonality => {
            let (k, unit) = match (fact.number("periodDays"), fact.number("period")) {
                (Some(k), _) => (k, "days"),
                (None, Some(k)) => (k, "periods"),
                (None, None) => return Err(s.hole("period")),
            };
            format!(
                "{} shows a repeating pattern every {} {unit}, with peaks up to {}% more than the average of {}",
                s.subject()?,
                format_number(k),
                s.percentage()?,
                s.number("avg")?
            )
        }
        InsightType::Correlation => {
            let [a, b] = fact.subjects.as_slice() else {
                return Err(s.hole("subjects"));
            };
            let r = fact.number("r").ok_or_else(|| s.hole("r"))?;
            let dir = if r >= 0.0 { "positively" } else { "negatively" };
            format!("{} and {} are strongly {dir} correlated", quote(a), quote(b))
        }
    };
    Ok(text)
}
