//! Clique clusters laid out on a grid of up to two link kinds per axis.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{key_groups, link_key, DateMatch, LinkKind, NetworkError};
use crate::insight::{Insight, InsightId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCell {
    /// One key per row kind, in the order of `row_keys`.
    pub row: Vec<String>,
    pub col: Vec<String>,
    pub members: Vec<InsightId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterGrid {
    pub row_keys: Vec<LinkKind>,
    pub col_keys: Vec<LinkKind>,
    pub row_values: Vec<Vec<String>>,
    pub col_values: Vec<Vec<String>>,
    pub cells: Vec<ClusterCell>,
}

impl ClusterGrid {
    /// Cells containing `id`; more than one when the insight holds several
    /// values of a grid key.
    pub fn cells_of<'a>(&'a self, id: &'a InsightId) -> impl Iterator<Item = &'a ClusterCell> + 'a {
        self.cells.iter().filter(move |c| c.members.contains(id))
    }
}

/// Orders keys numerically where both parse as integers.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

fn tuple_cmp(a: &[String], b: &[String]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| natural_cmp(x, y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Every combination of key values `node` holds across `kinds`.
fn axis_tuples(kinds: &[LinkKind], held: &[BTreeMap<usize, Vec<String>>], node: usize) -> Vec<Vec<String>> {
    let mut tuples = vec![Vec::new()];
    for (k, kind) in kinds.iter().enumerate() {
        let values = held[k].get(&node).cloned().unwrap_or_default();
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                values.iter().map(move |v| {
                    let mut t = t.clone();
                    t.push(link_key(*kind, v));
                    t
                })
            })
            .collect();
    }
    tuples
}

fn held_by_node(kind: LinkKind, insights: &[Insight], date_match: DateMatch) -> BTreeMap<usize, Vec<String>> {
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (value, members) in key_groups(kind, insights, date_match) {
        for m in members {
            out.entry(m).or_default().push(value.clone());
        }
    }
    out
}

/// Places each insight in every cell whose row and column keys it holds.
/// Insights lacking a value for some grid kind are left out.
pub fn cluster_grid(
    insights: &[Insight],
    row_kinds: &[LinkKind],
    col_kinds: &[LinkKind],
    date_match: DateMatch,
) -> Result<ClusterGrid, NetworkError> {
    for axis in [row_kinds, col_kinds] {
        if axis.len() > 2 {
            return Err(NetworkError::TooManyKeys(axis.len()));
        }
        if let Some(k) = axis.iter().find(|k| k.is_directed()) {
            return Err(NetworkError::DirectedKind(*k));
        }
    }
    let row_held: Vec<_> = row_kinds
        .iter()
        .map(|k| held_by_node(*k, insights, date_match))
        .collect();
    let col_held: Vec<_> = col_kinds
        .iter()
        .map(|k| held_by_node(*k, insights, date_match))
        .collect();

    let mut cells: Vec<ClusterCell> = Vec::new();
    for (i, n) in insights.iter().enumerate() {
        for row in axis_tuples(row_kinds, &row_held, i) {
            for col in axis_tuples(col_kinds, &col_held, i) {
                match cells.iter_mut().find(|c| c.row == row && c.col == col) {
                    Some(c) => c.members.push(n.id.clone()),
                    None => cells.push(ClusterCell {
                        row: row.clone(),
                        col,
                        members: vec![n.id.clone()],
                    }),
                }
            }
        }
    }
    cells.sort_by(|a, b| tuple_cmp(&a.row, &b.row).then_with(|| tuple_cmp(&a.col, &b.col)));
    for c in &mut cells {
        c.members.sort();
    }
    let mut row_values: Vec<Vec<String>> = Vec::new();
    let mut col_values: Vec<Vec<String>> = Vec::new();
    for c in &cells {
        if !row_values.contains(&c.row) {
            row_values.push(c.row.clone());
        }
        if !col_values.contains(&c.col) {
            col_values.push(c.col.clone());
        }
    }
    row_values.sort_by(|a, b| tuple_cmp(a, b));
    col_values.sort_by(|a, b| tuple_cmp(a, b));
    Ok(ClusterGrid {
        row_keys: row_kinds.to_vec(),
        col_keys: col_kinds.to_vec(),
        row_values,
        col_values,
        cells,
    })
}
