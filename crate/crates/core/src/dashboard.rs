//! Dashboard specification model.
//!
//! A dashboard document bundles the panel layout together with the data
//! tables the panels draw from. Loading validates every structural invariant
//! up front so the detectors downstream can assume dense, well-typed series.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DashboardError {
    #[error("malformed dashboard document: {0}")]
    Parse(String),
    #[error("panel '{panel}' references unknown table '{table}'")]
    MissingTable { panel: String, table: String },
    #[error("panels '{first}' and '{second}' both occupy row {row}, col {col}")]
    LayoutCollision {
        first: String,
        second: String,
        row: usize,
        col: usize,
    },
    #[error("layout {axis} indices are not dense from 0: {indices:?}")]
    LayoutGap { axis: &'static str, indices: Vec<usize> },
    #[error("panel '{panel}' names unknown column '{column}' in table '{table}'")]
    BadColumn {
        panel: String,
        table: String,
        column: String,
    },
    #[error("duplicate panel id '{0}'")]
    DuplicatePanel(String),
    #[error("table '{table}' declares column '{column}' more than once")]
    DuplicateColumn { table: String, column: String },
    #[error("table '{table}' row {row} has {found} cells, expected {expected}")]
    RowArity {
        table: String,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("table '{table}' row {row} column '{column}': {reason}")]
    BadCell {
        table: String,
        row: usize,
        column: String,
        reason: String,
    },
    #[error("unknown panel '{0}'")]
    UnknownPanel(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViewError {
    #[error("panel '{0}' has no usable dimension or time column")]
    NoAxis(String),
    #[error("panel '{0}' has no metric column")]
    NoMetric(String),
    #[error("panel '{0}' has no rows left after applying filters")]
    EmptyAfterFilter(String),
    #[error("panel '{panel}' has no value for '{series}' at '{at}'")]
    RaggedSeries { panel: String, series: String, at: String },
    #[error("multi-line panel '{0}' needs a time axis and at least two series")]
    MultiLineShape(String),
    #[error(transparent)]
    Dashboard(#[from] DashboardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ChartType {
    Bar,
    Donut,
    Line,
    MultiLine,
    Table,
}

impl ChartType {
    /// Leading character of insight IDs generated for this chart type.
    pub fn id_char(self) -> char {
        match self {
            ChartType::Bar => 'B',
            ChartType::Donut => 'D',
            ChartType::Line => 'L',
            ChartType::MultiLine => 'M',
            ChartType::Table => 'T',
        }
    }

    pub fn from_id_char(c: char) -> Option<ChartType> {
        Some(match c {
            'B' => ChartType::Bar,
            'D' => ChartType::Donut,
            'L' => ChartType::Line,
            'M' => ChartType::MultiLine,
            'T' => ChartType::Table,
            _ => return None,
        })
    }

    fn prefers_time_axis(self) -> bool {
        matches!(self, ChartType::Line | ChartType::MultiLine | ChartType::Table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ColumnRole {
    Dimension,
    Metric,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    /// Display name used in rendered text; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Column {
    pub fn display_name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Date(NaiveDate),
    Text(String),
}

impl Cell {
    fn key(&self) -> String {
        match self {
            Cell::Number(v) => v.to_string(),
            Cell::Date(d) => d.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Decimal places used by the values of a metric column, capped at 6.
    pub fn native_precision(&self, column: usize) -> u32 {
        self.rows
            .iter()
            .filter_map(|r| match &r[column] {
                Cell::Number(v) => Some(decimals_of(*v)),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

fn decimals_of(v: f64) -> u32 {
    let s = format!("{}", v.abs());
    match s.split_once('.') {
        Some((_, frac)) => (frac.len() as u32).min(6),
        None => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Filter {
    pub column: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanelSpec {
    pub panel_id: String,
    pub chart_type: ChartType,
    pub row: usize,
    pub col: usize,
    pub table_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<Filter>,
    pub title: String,
}

#[derive(Debug, Deserialize)]
struct RawTable {
    columns: Vec<Column>,
    rows: Vec<Vec<serde_json::Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDashboard {
    id: String,
    title: String,
    panels: Vec<PanelSpec>,
    tables: BTreeMap<String, RawTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDashboard")]
pub struct DashboardSpec {
    pub id: String,
    pub title: String,
    pub panels: Vec<PanelSpec>,
    pub tables: BTreeMap<String, DataTable>,
}

/// Number of distinct rows and columns of the dashboard grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutGrid {
    pub rows: usize,
    pub cols: usize,
}

impl TryFrom<RawDashboard> for DashboardSpec {
    type Error = DashboardError;

    fn try_from(raw: RawDashboard) -> Result<Self, Self::Error> {
        let mut tables = BTreeMap::new();
        for (id, table) in raw.tables {
            let table = convert_table(&id, table)?;
            tables.insert(id, table);
        }
        let spec = DashboardSpec {
            id: raw.id,
            title: raw.title,
            panels: raw.panels,
            tables,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn convert_table(id: &str, raw: RawTable) -> Result<DataTable, DashboardError> {
    let mut seen = HashSet::new();
    for c in &raw.columns {
        if !seen.insert(c.name.as_str()) {
            return Err(DashboardError::DuplicateColumn {
                table: id.to_string(),
                column: c.name.clone(),
            });
        }
    }
    let mut rows = Vec::with_capacity(raw.rows.len());
    for (r, row) in raw.rows.into_iter().enumerate() {
        if row.len() != raw.columns.len() {
            return Err(DashboardError::RowArity {
                table: id.to_string(),
                row: r,
                found: row.len(),
                expected: raw.columns.len(),
            });
        }
        let mut cells = Vec::with_capacity(row.len());
        for (value, column) in row.into_iter().zip(&raw.columns) {
            let bad = |reason: &str| DashboardError::BadCell {
                table: id.to_string(),
                row: r,
                column: column.name.clone(),
                reason: reason.to_string(),
            };
            let cell = match (column.role, value) {
                (_, serde_json::Value::Null) => return Err(bad("missing value")),
                (ColumnRole::Metric, serde_json::Value::Number(n)) => {
                    Cell::Number(n.as_f64().ok_or_else(|| bad("number out of range"))?)
                }
                (ColumnRole::Metric, _) => return Err(bad("expected a number")),
                (ColumnRole::Dimension, serde_json::Value::String(s)) => Cell::Text(s),
                (ColumnRole::Dimension, _) => return Err(bad("expected a string")),
                (ColumnRole::Time, serde_json::Value::String(s)) => Cell::Date(
                    NaiveDate::parse_from_str(&s, "%Y-%m-%d").map_err(|_| bad("expected a YYYY-MM-DD date"))?,
                ),
                (ColumnRole::Time, _) => return Err(bad("expected a YYYY-MM-DD date")),
            };
            cells.push(cell);
        }
        rows.push(cells);
    }
    Ok(DataTable {
        columns: raw.columns,
        rows,
    })
}

/// Parses and validates a dashboard document.
pub fn load_dashboard(doc: &str) -> Result<DashboardSpec, DashboardError> {
    let raw: RawDashboard = serde_json::from_str(doc).map_err(|e| DashboardError::Parse(e.to_string()))?;
    DashboardSpec::try_from(raw)
}

impl DashboardSpec {
    fn validate(&self) -> Result<(), DashboardError> {
        let mut ids = HashSet::new();
        let mut cells: BTreeMap<(usize, usize), &str> = BTreeMap::new();
        for p in &self.panels {
            if !ids.insert(p.panel_id.as_str()) {
                return Err(DashboardError::DuplicatePanel(p.panel_id.clone()));
            }
            let table = self
                .tables
                .get(&p.table_id)
                .ok_or_else(|| DashboardError::MissingTable {
                    panel: p.panel_id.clone(),
                    table: p.table_id.clone(),
                })?;
            if let Some(first) = cells.insert((p.row, p.col), &p.panel_id) {
                return Err(DashboardError::LayoutCollision {
                    first: first.to_string(),
                    second: p.panel_id.clone(),
                    row: p.row,
                    col: p.col,
                });
            }
            let names = p.sort.iter().chain(p.filters.iter().map(|f| &f.column));
            for name in names {
                if table.column(name).is_none() {
                    return Err(DashboardError::BadColumn {
                        panel: p.panel_id.clone(),
                        table: p.table_id.clone(),
                        column: name.clone(),
                    });
                }
            }
        }
        check_dense("row", self.panels.iter().map(|p| p.row))?;
        check_dense("col", self.panels.iter().map(|p| p.col))?;
        Ok(())
    }

    pub fn panel(&self, panel_id: &str) -> Option<&PanelSpec> {
        self.panels.iter().find(|p| p.panel_id == panel_id)
    }

    pub fn table_for(&self, panel: &PanelSpec) -> &DataTable {
        // Validated at load time.
        &self.tables[&panel.table_id]
    }

    pub fn grid(&self) -> LayoutGrid {
        let rows = self.panels.iter().map(|p| p.row + 1).max().unwrap_or(0);
        let cols = self.panels.iter().map(|p| p.col + 1).max().unwrap_or(0);
        LayoutGrid { rows, cols }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dashboard serializes")
    }
}

fn check_dense(axis: &'static str, indices: impl Iterator<Item = usize>) -> Result<(), DashboardError> {
    let set: BTreeSet<usize> = indices.collect();
    if set.iter().copied().eq(0..set.len()) {
        Ok(())
    } else {
        Err(DashboardError::LayoutGap {
            axis,
            indices: set.into_iter().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxisValue {
    Category(String),
    Date(NaiveDate),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Category(s) => f.write_str(s),
            AxisValue::Date(d) => write!(f, "{d}"),
        }
    }
}

/// A `column = value` restriction that a series was derived under.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub column: String,
    pub value: String,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.column, self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GroupRole {
    /// One line per dimension value (multi-line charts).
    Split,
    /// One table column per dimension value (pivoted tables).
    Segment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesGroup {
    pub role: GroupRole,
    pub segment: Segment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricSeries {
    pub metric: String,
    pub metric_label: String,
    /// Subject phrase used when the series is quoted in text.
    pub label: String,
    pub group: Option<SeriesGroup>,
    /// Position among the table columns; `None` for non-table charts.
    pub table_column: Option<usize>,
    pub precision: u32,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableView {
    pub panel_id: String,
    pub chart_type: ChartType,
    pub dimension_axis: Option<String>,
    pub time_axis: Option<String>,
    pub axis: Vec<AxisValue>,
    pub series: Vec<MetricSeries>,
    pub applied_filters: Vec<Filter>,
    /// Number of table columns the view spans (1 for non-table charts).
    pub table_columns: usize,
}

impl TableView {
    /// True when every axis step is exactly one day.
    pub fn is_daily(&self) -> bool {
        let dates: Vec<NaiveDate> = self
            .axis
            .iter()
            .filter_map(|a| match a {
                AxisValue::Date(d) => Some(*d),
                _ => None,
            })
            .collect();
        dates.len() == self.axis.len() && dates.len() >= 2 && dates.windows(2).all(|w| (w[1] - w[0]).num_days() == 1)
    }
}

fn row_passes(row: &[Cell], filters: &BTreeMap<usize, BTreeSet<&str>>) -> bool {
    filters
        .iter()
        .all(|(idx, allowed)| allowed.contains(row[*idx].key().as_str()))
}

/// Derives the analyzable view of one panel: filters applied, axis chosen,
/// and metric series aligned to the axis order.
///
/// Filters on the same column are alternatives; filters on different
/// columns must all hold. Duplicate (axis, group) rows are summed.
pub fn derive_table_view(spec: &DashboardSpec, panel_id: &str) -> Result<TableView, ViewError> {
    let panel = spec
        .panel(panel_id)
        .ok_or_else(|| DashboardError::UnknownPanel(panel_id.to_string()))?;
    let table = spec.table_for(panel);

    let mut filter_sets: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for f in &panel.filters {
        let idx = table.column_index(&f.column).expect("validated filter column");
        filter_sets.entry(idx).or_default().insert(f.value.as_str());
    }
    let rows: Vec<&Vec<Cell>> = table.rows.iter().filter(|r| row_passes(r, &filter_sets)).collect();
    if rows.is_empty() {
        return Err(ViewError::EmptyAfterFilter(panel_id.to_string()));
    }

    let by_role = |role| {
        table
            .columns
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.role == role)
            .map(|(i, _)| i)
            .collect::<Vec<_>>()
    };
    let time_cols = by_role(ColumnRole::Time);
    let dim_cols = by_role(ColumnRole::Dimension);
    let metric_cols = by_role(ColumnRole::Metric);
    if metric_cols.is_empty() {
        return Err(ViewError::NoMetric(panel_id.to_string()));
    }

    let chart = panel.chart_type;
    // (axis column, optional grouping column)
    let (axis_col, group_col, axis_is_time) = if chart.prefers_time_axis() && !time_cols.is_empty() {
        let group = match chart {
            ChartType::MultiLine | ChartType::Table => dim_cols.first().copied(),
            _ => None,
        };
        (time_cols[0], group, true)
    } else if let Some(&first_dim) = dim_cols.first() {
        if chart == ChartType::Table && dim_cols.len() >= 2 {
            (dim_cols[1], Some(first_dim), false)
        } else {
            (first_dim, None, false)
        }
    } else if let Some(&t) = time_cols.first() {
        (t, None, true)
    } else {
        return Err(ViewError::NoAxis(panel_id.to_string()));
    };

    let axis_value = |row: &[Cell]| -> AxisValue {
        match &row[axis_col] {
            Cell::Date(d) => AxisValue::Date(*d),
            other => AxisValue::Category(other.key()),
        }
    };
    let mut axis: Vec<AxisValue> = Vec::new();
    for r in &rows {
        let v = axis_value(r);
        if !axis.contains(&v) {
            axis.push(v);
        }
    }
    if axis_is_time {
        axis.sort();
    }

    let mut groups: Vec<Option<String>> = Vec::new();
    match group_col {
        Some(g) => {
            for r in &rows {
                let v = Some(r[g].key());
                if !groups.contains(&v) {
                    groups.push(v);
                }
            }
        }
        None => groups.push(None),
    }

    let role = if chart == ChartType::Table {
        GroupRole::Segment
    } else {
        GroupRole::Split
    };
    let mut series = Vec::new();
    for group in &groups {
        for &m in &metric_cols {
            let metric = &table.columns[m];
            let mut sums: Vec<Option<f64>> = vec![None; axis.len()];
            for r in &rows {
                if let (Some(g), Some(val)) = (group_col, group) {
                    if &r[g].key() != val {
                        continue;
                    }
                }
                let pos = axis
                    .iter()
                    .position(|a| *a == axis_value(r))
                    .expect("axis built from rows");
                if let Cell::Number(x) = r[m] {
                    *sums[pos].get_or_insert(0.0) += x;
                }
            }
            let label_base = metric.display_name().to_string();
            let (label, group_info) = match (group_col, group) {
                (Some(g), Some(val)) => {
                    let column = table.columns[g].name.clone();
                    let display = table.columns[g].display_name();
                    let label = match role {
                        GroupRole::Split => format!("{display} [{val}]"),
                        GroupRole::Segment => label_base.clone(),
                    };
                    (
                        label,
                        Some(SeriesGroup {
                            role,
                            segment: Segment {
                                column,
                                value: val.clone(),
                            },
                        }),
                    )
                }
                _ => (label_base.clone(), None),
            };
            let mut values = Vec::with_capacity(axis.len());
            for (i, s) in sums.into_iter().enumerate() {
                match s {
                    Some(v) => values.push(v),
                    None => {
                        return Err(ViewError::RaggedSeries {
                            panel: panel_id.to_string(),
                            series: label,
                            at: axis[i].to_string(),
                        })
                    }
                }
            }
            series.push(MetricSeries {
                metric: metric.name.clone(),
                metric_label: label_base,
                label,
                group: group_info,
                table_column: None,
                precision: table.native_precision(m),
                values,
            });
        }
    }

    if chart == ChartType::Table {
        for (i, s) in series.iter_mut().enumerate() {
            s.table_column = Some(i);
        }
    }
    if chart == ChartType::MultiLine && (!axis_is_time || series.len() < 2) {
        return Err(ViewError::MultiLineShape(panel_id.to_string()));
    }

    let table_columns = if chart == ChartType::Table { series.len() } else { 1 };
    let axis_name = table.columns[axis_col].name.clone();
    Ok(TableView {
        panel_id: panel_id.to_string(),
        chart_type: chart,
        dimension_axis: (!axis_is_time).then(|| axis_name.clone()),
        time_axis: axis_is_time.then_some(axis_name),
        axis,
        series,
        applied_filters: panel.filters.clone(),
        table_columns,
    })
}
