//! Rule-based detectors for the twelve insight types.

use serde::{Deserialize, Serialize};

use super::stats::{autocorrelation, detrend, mean, pearson, round_half_up, round_to, skewness, slope, std_dev};
use super::{ChartCategory, ComparisonType, DateRef, Fact, InsightError, InsightType, LabeledNumber, TableColumn};
use crate::dashboard::{AxisValue, GroupRole, MetricSeries, Segment, TableView};

/// Detector thresholds. Percent thresholds compare against the rounded
/// integer percentage that ends up in the rendered text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct DetectorConfig {
    /// Minimum moment skewness of the category shares.
    pub skew_min: f64,
    /// Maximum combined share of the bottom half of categories.
    pub long_tail_share: f64,
    /// Minimum autocorrelation of the detrended series at the period.
    pub seasonality_min_acf: f64,
    pub trend_min_pct: u32,
    pub spike_min_pct: u32,
    /// Number of consecutive points a spike or decline may span.
    pub spike_window: usize,
    pub anomaly_z: f64,
    pub correlation_min: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            skew_min: 0.5,
            long_tail_share: 0.20,
            seasonality_min_acf: 0.5,
            trend_min_pct: 10,
            spike_min_pct: 10,
            spike_window: 7,
            anomaly_z: 3.0,
            correlation_min: 0.7,
        }
    }
}

/// Integer percentage of `part / whole`, or `None` outside `[0, 100]`.
fn percent(part: f64, whole: f64) -> Option<u32> {
    if whole <= 0.0 || part < 0.0 {
        return None;
    }
    let p = round_half_up(part / whole * 100.0);
    (p <= 100.0).then_some(p as u32)
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

struct SeriesFacts<'a> {
    view: &'a TableView,
    series: &'a MetricSeries,
}

impl<'a> SeriesFacts<'a> {
    fn base(&self, insight_type: InsightType, comparison_type: ComparisonType) -> Fact {
        let s = self.series;
        let mut dimensions: Vec<String> = self.view.dimension_axis.iter().cloned().collect();
        let mut dimension_values = Vec::new();
        let mut filter_segment = None;
        let mut split = None;
        match &s.group {
            Some(g) => {
                if !dimensions.contains(&g.segment.column) {
                    dimensions.push(g.segment.column.clone());
                }
                match g.role {
                    GroupRole::Split => {
                        dimension_values.push(g.segment.value.clone());
                        split = Some(g.segment.clone());
                    }
                    GroupRole::Segment => filter_segment = Some(g.segment.clone()),
                }
            }
            None => {
                if let [only] = self.view.applied_filters.as_slice() {
                    filter_segment = Some(Segment {
                        column: only.column.clone(),
                        value: only.value.clone(),
                    });
                }
            }
        }
        Fact {
            panel_id: self.view.panel_id.clone(),
            insight_type,
            comparison_type,
            metrics: vec![s.metric.clone()],
            dimensions,
            filter_segment,
            dimension_values,
            date_refs: Vec::new(),
            numbers: Vec::new(),
            percentage: None,
            table_column: s.table_column.map_or(TableColumn::Whole, TableColumn::Index),
            subjects: vec![s.label.clone()],
            split,
        }
    }

    fn display(&self, x: f64) -> f64 {
        round_to(x, self.series.precision)
    }

    fn mention(&self, fact: &mut Fact, idx: usize) {
        match &self.view.axis[idx] {
            AxisValue::Category(c) => fact.dimension_values.push(c.clone()),
            AxisValue::Date(d) => fact.date_refs.push(DateRef::Point(*d)),
        }
    }

    fn mention_span(&self, fact: &mut Fact, from: usize, to: usize) {
        match (&self.view.axis[from], &self.view.axis[to]) {
            (AxisValue::Date(a), AxisValue::Date(b)) => fact.date_refs.push(DateRef::Range { start: *a, end: *b }),
            _ => {
                self.mention(fact, from);
                self.mention(fact, to);
            }
        }
    }

    fn bar_facts(&self, cfg: &DetectorConfig, out: &mut Vec<Fact>) {
        let xs = &self.series.values;
        let n = xs.len();
        let total: f64 = xs.iter().sum();
        let non_negative = xs.iter().all(|x| *x >= 0.0);
        let (imin, imax) = (argmin(xs), argmax(xs));
        let varied = xs[imax] > xs[imin];
        let shares_ok = non_negative && total > 0.0;

        if varied && shares_ok {
            for (t, idx) in [(InsightType::Minimum, imin), (InsightType::Maximum, imax)] {
                if let Some(p) = percent(xs[idx], total) {
                    let mut f = self.base(t, ComparisonType::Total);
                    self.mention(&mut f, idx);
                    f.numbers.push(LabeledNumber::new("value", self.display(xs[idx])));
                    f.percentage = Some(p);
                    out.push(f);
                }
            }
        }

        if varied {
            let avg = mean(xs);
            if let Some(p) = percent(xs[imax] - avg, avg) {
                let mut f = self.base(InsightType::HighestBar, ComparisonType::VsAverage);
                self.mention(&mut f, imax);
                f.numbers.push(LabeledNumber::new("value", self.display(xs[imax])));
                f.numbers.push(LabeledNumber::new("avg", self.display(avg)));
                f.percentage = Some(p);
                out.push(f);
            }
        }

        if n >= 3 && shares_ok {
            let shares: Vec<f64> = xs.iter().map(|x| x / total).collect();
            if skewness(&shares) >= cfg.skew_min {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|a, b| xs[*b].total_cmp(&xs[*a]));
                let mut top = vec![order[0], order[1]];
                top.sort_unstable();
                if let Some(p) = percent(xs[top[0]] + xs[top[1]], total) {
                    let mut f = self.base(InsightType::Skew, ComparisonType::Total);
                    for i in top {
                        self.mention(&mut f, i);
                    }
                    f.percentage = Some(p);
                    out.push(f);
                }
            }
        }

        if n >= 4 && shares_ok {
            let m = n.div_ceil(2);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|a, b| xs[*a].total_cmp(&xs[*b]));
            let mut bottom: Vec<usize> = order[..m].to_vec();
            bottom.sort_unstable();
            let sum: f64 = bottom.iter().map(|i| xs[*i]).sum();
            if sum / total <= cfg.long_tail_share {
                if let Some(p) = percent(sum, total) {
                    let mut f = self.base(InsightType::LongTail, ComparisonType::Total);
                    for i in bottom {
                        self.mention(&mut f, i);
                    }
                    f.numbers.push(LabeledNumber::new("count", m as f64));
                    f.percentage = Some(p);
                    out.push(f);
                }
            }
        }
    }

    fn line_facts(&self, cfg: &DetectorConfig, out: &mut Vec<Fact>) {
        let xs = &self.series.values;
        let n = xs.len();
        let (imin, imax) = (argmin(xs), argmax(xs));
        let (lo, hi) = (xs[imin], xs[imax]);
        let avg = mean(xs);
        let varied = hi > lo;

        if varied {
            let extremes = [
                (InsightType::Minimum, imin, avg - lo),
                (InsightType::Maximum, imax, hi - avg),
            ];
            for (t, idx, diff) in extremes {
                if let Some(p) = percent(diff, avg) {
                    let mut f = self.base(t, ComparisonType::VsAverage);
                    self.mention(&mut f, idx);
                    f.numbers.push(LabeledNumber::new("value", self.display(xs[idx])));
                    f.numbers.push(LabeledNumber::new("avg", self.display(avg)));
                    f.percentage = Some(p);
                    out.push(f);
                }
            }
            if let Some(p) = percent(hi - lo, hi) {
                let mut f = self.base(InsightType::MaxExtent, ComparisonType::LessThan);
                self.mention(&mut f, imin);
                self.mention(&mut f, imax);
                f.numbers.push(LabeledNumber::new("extent", self.display(hi - lo)));
                f.numbers.push(LabeledNumber::new("min", self.display(lo)));
                f.numbers.push(LabeledNumber::new("max", self.display(hi)));
                f.percentage = Some(p);
                out.push(f);
            }
        }

        if n >= 3 {
            let (from, to) = (xs[0], xs[n - 1]);
            let b = slope(xs);
            if from > 0.0 && b != 0.0 && (to - from).signum() == b.signum() {
                if let Some(p) = percent((to - from).abs(), from) {
                    if p >= cfg.trend_min_pct {
                        out.push(self.change_fact(InsightType::Trend, 0, n - 1, p));
                    }
                }
            }
        }

        let w = cfg.spike_window.max(2);
        for (t, sign) in [(InsightType::Spike, 1.0), (InsightType::Decline, -1.0)] {
            let mut best: Option<(usize, usize, f64)> = None;
            for i in 0..n {
                if xs[i] <= 0.0 {
                    continue;
                }
                for j in i + 1..n.min(i + w) {
                    let rel = sign * (xs[j] - xs[i]) / xs[i];
                    if rel > 0.0 && best.is_none_or(|(_, _, r)| rel > r) {
                        best = Some((i, j, rel));
                    }
                }
            }
            if let Some((i, j, _)) = best {
                if let Some(p) = percent((xs[j] - xs[i]).abs(), xs[i]) {
                    if p >= cfg.spike_min_pct {
                        out.push(self.change_fact(t, i, j, p));
                    }
                }
            }
        }

        let sd = std_dev(xs);
        if n >= 5 && sd > 0.0 {
            let idx = (0..n)
                .max_by(|a, b| (xs[*a] - avg).abs().total_cmp(&(xs[*b] - avg).abs()).then(b.cmp(a)))
                .expect("non-empty");
            let z = (xs[idx] - avg) / sd;
            if z.abs() >= cfg.anomaly_z {
                if let Some(p) = percent((xs[idx] - avg).abs(), avg) {
                    let cmp = if z > 0.0 {
                        ComparisonType::MoreThan
                    } else {
                        ComparisonType::LessThan
                    };
                    let mut f = self.base(InsightType::Anomaly, cmp);
                    self.mention(&mut f, idx);
                    f.numbers.push(LabeledNumber::new("value", self.display(xs[idx])));
                    f.numbers.push(LabeledNumber::new("avg", self.display(avg)));
                    f.percentage = Some(p);
                    out.push(f);
                }
            }
        }

        if n >= 8 && varied {
            let resid = detrend(xs);
            let acf: Vec<f64> = (0..=n / 2 + 1).map(|k| autocorrelation(&resid, k)).collect();
            let period = (2..=n / 2).find(|&k| {
                acf[k] >= cfg.seasonality_min_acf && acf[k] >= acf[k - 1] && (k == n / 2 || acf[k] >= acf[k + 1])
            });
            if let Some(k) = period {
                if let Some(p) = percent(hi - avg, avg) {
                    let mut f = self.base(InsightType::Seasonality, ComparisonType::MoreThan);
                    let label = if self.view.is_daily() { "periodDays" } else { "period" };
                    f.numbers.push(LabeledNumber::new(label, k as f64));
                    f.numbers.push(LabeledNumber::new("avg", self.display(avg)));
                    f.percentage = Some(p);
                    out.push(f);
                }
            }
        }
    }

    fn change_fact(&self, t: InsightType, from: usize, to: usize, p: u32) -> Fact {
        let xs = &self.series.values;
        let mut f = self.base(t, ComparisonType::RelativeChange);
        self.mention_span(&mut f, from, to);
        f.numbers.push(LabeledNumber::new("from", xs[from]));
        f.numbers.push(LabeledNumber::new("to", xs[to]));
        f.percentage = Some(p);
        f
    }
}

fn correlation_facts(view: &TableView, cfg: &DetectorConfig, out: &mut Vec<Fact>) {
    for (i, a) in view.series.iter().enumerate() {
        for b in &view.series[i + 1..] {
            let Some(r) = pearson(&a.values, &b.values) else {
                continue;
            };
            if r.abs() < cfg.correlation_min {
                continue;
            }
            let mut metrics = vec![a.metric.clone()];
            if b.metric != a.metric {
                metrics.push(b.metric.clone());
            }
            let mut dimensions: Vec<String> = Vec::new();
            for g in [&a.group, &b.group].into_iter().flatten() {
                if !dimensions.contains(&g.segment.column) {
                    dimensions.push(g.segment.column.clone());
                }
            }
            out.push(Fact {
                panel_id: view.panel_id.clone(),
                insight_type: InsightType::Correlation,
                comparison_type: ComparisonType::None,
                metrics,
                dimensions,
                filter_segment: None,
                dimension_values: Vec::new(),
                date_refs: Vec::new(),
                numbers: vec![LabeledNumber::new("r", round_to(r, 2))],
                percentage: None,
                table_column: TableColumn::Whole,
                subjects: vec![a.label.clone(), b.label.clone()],
                split: None,
            });
        }
    }
}

/// Runs the detectors applicable to `category` over every series of the view.
pub fn detect_facts(
    view: &TableView,
    category: ChartCategory,
    cfg: &DetectorConfig,
) -> Result<Vec<Fact>, InsightError> {
    if view.axis.len() < 2 {
        return Err(InsightError::TooShort(view.panel_id.clone()));
    }
    let mut out = Vec::new();
    for series in &view.series {
        let sf = SeriesFacts { view, series };
        match category {
            ChartCategory::BarLike => sf.bar_facts(cfg, &mut out),
            ChartCategory::LineLike | ChartCategory::MultiLineLike => sf.line_facts(cfg, &mut out),
        }
    }
    if category == ChartCategory::MultiLineLike {
        correlation_facts(view, cfg, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dashboard::ChartType;
    use chrono::NaiveDate;

    fn series(label: &str, values: &[f64]) -> MetricSeries {
        MetricSeries {
            metric: label.to_string(),
            metric_label: label.to_string(),
            label: label.to_string(),
            group: None,
            table_column: None,
            precision: 0,
            values: values.to_vec(),
        }
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 10, d).unwrap()
    }

    fn line_view(values: &[f64]) -> TableView {
        TableView {
            panel_id: "A".into(),
            chart_type: ChartType::Line,
            dimension_axis: None,
            time_axis: Some("Date".into()),
            axis: (1..=values.len() as u32).map(|d| AxisValue::Date(day(d))).collect(),
            series: vec![series("Calls", values)],
            applied_filters: vec![],
            table_columns: 1,
        }
    }

    fn bar_view(cats: &[&str], values: &[f64]) -> TableView {
        TableView {
            panel_id: "B".into(),
            chart_type: ChartType::Bar,
            dimension_axis: Some("Weekday".into()),
            time_axis: None,
            axis: cats.iter().map(|c| AxisValue::Category(c.to_string())).collect(),
            series: vec![series("Calls", values)],
            applied_filters: vec![],
            table_columns: 1,
        }
    }

    fn of_type(facts: &[Fact], t: InsightType) -> Vec<&Fact> {
        facts.iter().filter(|f| f.insight_type == t).collect()
    }

    #[test]
    fn weekday_skew() {
        let view = bar_view(
            &[
                "Monday",
                "Tuesday",
                "Wednesday",
                "Thursday",
                "Friday",
                "Saturday",
                "Sunday",
            ],
            &[4410.0, 5480.0, 5584.0, 4352.0, 4298.0, 4236.0, 4180.0],
        );
        let facts = detect_facts(&view, ChartCategory::BarLike, &DetectorConfig::default()).unwrap();
        let sk = of_type(&facts, InsightType::Skew);
        assert_eq!(sk.len(), 1);
        assert_eq!(sk[0].dimension_values, vec!["Tuesday", "Wednesday"]);
        assert_eq!(sk[0].percentage, Some(34));
        assert_eq!(sk[0].comparison_type, ComparisonType::Total);
        assert!(of_type(&facts, InsightType::Correlation).is_empty());
    }

    #[test]
    fn decline_percentage() {
        let view = line_view(&[1170.0, 1150.0, 1120.0, 1090.0, 1072.0, 1054.0, 1060.0]);
        let facts = detect_facts(&view, ChartCategory::LineLike, &DetectorConfig::default()).unwrap();
        let de = of_type(&facts, InsightType::Decline);
        assert_eq!(de.len(), 1);
        assert_eq!(de[0].percentage, Some(10));
        assert_eq!(de[0].number("from"), Some(1170.0));
        assert_eq!(de[0].number("to"), Some(1054.0));
        assert_eq!(
            de[0].date_refs,
            vec![DateRef::Range {
                start: day(1),
                end: day(6)
            }]
        );
        assert!(of_type(&facts, InsightType::HighestBar).is_empty());
    }

    #[test]
    fn growth_percentage() {
        let view = line_view(&[360.0, 355.0, 371.0, 388.0, 400.0, 398.0]);
        let facts = detect_facts(&view, ChartCategory::LineLike, &DetectorConfig::default()).unwrap();
        let sp = of_type(&facts, InsightType::Spike);
        assert_eq!(sp[0].percentage, Some(13));
        assert_eq!(sp[0].number("from"), Some(355.0));
        assert_eq!(sp[0].number("to"), Some(400.0));
    }

    #[test]
    fn constant_series_has_no_change_facts() {
        let view = line_view(&[5.0; 5]);
        let facts = detect_facts(&view, ChartCategory::LineLike, &DetectorConfig::default()).unwrap();
        for t in [
            InsightType::Trend,
            InsightType::Spike,
            InsightType::Decline,
            InsightType::Anomaly,
        ] {
            assert!(of_type(&facts, t).is_empty(), "{t}");
        }
    }

    #[test]
    fn too_short() {
        let view = line_view(&[5.0]);
        assert!(matches!(
            detect_facts(&view, ChartCategory::LineLike, &DetectorConfig::default()),
            Err(InsightError::TooShort(_))
        ));
    }

    #[test]
    fn anomaly_and_seasonality() {
        let mut xs = vec![100.0; 30];
        xs[12] = 160.0;
        let view = line_view(&xs);
        let facts = detect_facts(&view, ChartCategory::LineLike, &DetectorConfig::default()).unwrap();
        let an = of_type(&facts, InsightType::Anomaly);
        assert_eq!(an.len(), 1);
        assert_eq!(an[0].date_refs, vec![DateRef::Point(day(13))]);
        assert_eq!(an[0].comparison_type, ComparisonType::MoreThan);

        let weekly: Vec<f64> = (0..28).map(|i| if i % 7 < 5 { 120.0 } else { 80.0 }).collect();
        let facts = detect_facts(&line_view(&weekly), ChartCategory::LineLike, &DetectorConfig::default()).unwrap();
        let se = of_type(&facts, InsightType::Seasonality);
        assert_eq!(se.len(), 1);
        assert_eq!(se[0].number("periodDays"), Some(7.0));
    }

    #[test]
    fn correlation_only_for_multiline() {
        let mut view = line_view(&[1.0, 2.0, 3.0, 4.0, 6.0]);
        view.series.push(series("Other", &[2.0, 4.0, 6.0, 8.0, 11.0]));
        let line = detect_facts(&view, ChartCategory::LineLike, &DetectorConfig::default()).unwrap();
        assert!(of_type(&line, InsightType::Correlation).is_empty());
        let multi = detect_facts(&view, ChartCategory::MultiLineLike, &DetectorConfig::default()).unwrap();
        let co = of_type(&multi, InsightType::Correlation);
        assert_eq!(co.len(), 1);
        assert_eq!(co[0].percentage, None);
        assert_eq!(co[0].comparison_type, ComparisonType::None);
    }

    #[test]
    fn long_tail() {
        let view = bar_view(&["a", "b", "c", "d", "e"], &[50.0, 40.0, 5.0, 3.0, 2.0]);
        let facts = detect_facts(&view, ChartCategory::BarLike, &DetectorConfig::default()).unwrap();
        let lt = of_type(&facts, InsightType::LongTail);
        assert_eq!(lt.len(), 1);
        assert_eq!(lt[0].dimension_values, vec!["c", "d", "e"]);
        assert_eq!(lt[0].percentage, Some(10));
    }
}
