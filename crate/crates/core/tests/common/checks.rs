//! Property checks shared by the integration tests and the acceptance run.

use std::collections::{BTreeMap, BTreeSet};

use insightloom_core::insight::{Insight, InsightId};
use insightloom_core::narrative::{tie_groups, SelectionOptions, SelectionStrategy};
use insightloom_core::network::{
    cluster_grid, focus_order, link_matrix, DateMatch, InsightNetwork, LinkCategory, LinkKind, LinkMatrix,
};

use super::{brute_force_links, pair_keys};

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[allow(clippy::needless_range_loop)]
/// Symmetry, zero diagonal, agreement with brute-force pair counts,
/// additivity over categories and monotonicity under filtering.
pub fn matrix_properties(net: &InsightNetwork) -> Result<(), String> {
    let all: BTreeSet<LinkKind> = LinkKind::undirected().collect();
    let full = link_matrix(net, &all, None);
    let n = full.order.len();
    ensure(n == net.nodes.len(), || "order misses nodes".into())?;
    let oracle = brute_force_links(&net.nodes, &net.enabled_kinds, net.date_match);
    for i in 0..n {
        ensure(full.counts[i][i] == 0, || format!("diagonal {i} nonzero"))?;
        for j in 0..n {
            ensure(full.counts[i][j] == full.counts[j][i], || {
                format!("asymmetric at {i},{j}")
            })?;
            if i < j {
                let (a, b) = (&full.order[i], &full.order[j]);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let want = oracle
                    .iter()
                    .filter(|(k, x, y, _)| !k.is_directed() && x == lo && y == hi)
                    .count() as u32;
                ensure(full.counts[i][j] == want, || {
                    format!("count {a}/{b}: {} vs oracle {want}", full.counts[i][j])
                })?;
            }
        }
    }
    let empty = link_matrix(net, &BTreeSet::new(), None);
    ensure(empty.counts.iter().flatten().all(|&c| c == 0), || {
        "empty filter nonzero".into()
    })?;
    let mut sum = vec![vec![0u32; n]; n];
    for cat in LinkCategory::ALL {
        let kinds: BTreeSet<LinkKind> = cat.kinds().collect();
        let m = link_matrix(net, &kinds, None);
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += m.counts[i][j];
                ensure(m.counts[i][j] <= full.counts[i][j], || {
                    format!("{} filter grew {i},{j}", cat.name())
                })?;
            }
        }
    }
    ensure(sum == full.counts, || "category matrices do not add up".into())?;
    for kind in LinkKind::undirected() {
        let m = link_matrix(net, &BTreeSet::from([kind]), None);
        ensure(
            m.counts
                .iter()
                .flatten()
                .zip(full.counts.iter().flatten())
                .all(|(a, b)| a <= b),
            || format!("{kind} filter grew a cell"),
        )?;
    }
    Ok(())
}

/// Highest priority first, then by link count to it (descending), then
/// priority (descending), then ID, computed from the brute-force links.
pub fn focus_order_oracle(
    net: &InsightNetwork,
    ids: &[InsightId],
    priorities: &BTreeMap<InsightId, f64>,
    kinds: &BTreeSet<LinkKind>,
) -> Vec<InsightId> {
    let p = |x: &InsightId| priorities[x];
    let mut by_priority = ids.to_vec();
    by_priority.sort_by(|a, b| p(b).partial_cmp(&p(a)).unwrap().then(a.cmp(b)));
    let head = by_priority[0].clone();
    let links = brute_force_links(&net.nodes, kinds, net.date_match);
    let to_head = |x: &InsightId| {
        links
            .iter()
            .filter(|(_, a, b, _)| (a == &head && b == x) || (b == &head && a == x))
            .count()
    };
    let mut rest: Vec<InsightId> = by_priority[1..].to_vec();
    rest.sort_by(|a, b| {
        to_head(b)
            .cmp(&to_head(a))
            .then(p(b).partial_cmp(&p(a)).unwrap())
            .then(a.cmp(b))
    });
    std::iter::once(head).chain(rest).collect()
}

pub fn focus_order_contract(
    net: &InsightNetwork,
    ids: &[InsightId],
    priorities: &BTreeMap<InsightId, f64>,
) -> Result<LinkMatrix, String> {
    let kinds: BTreeSet<LinkKind> = LinkKind::undirected().collect();
    let got = focus_order(net, ids, priorities, &kinds);
    let want = focus_order_oracle(net, ids, priorities, &kinds);
    ensure(got == want, || format!("focus order {got:?} vs oracle {want:?}"))?;
    let m = link_matrix(net, &kinds, Some(&got));
    ensure(m.order == got, || "matrix ignores caller order".into())?;
    for w in got[1..].windows(2) {
        let (a, b) = (m.get(&got[0], &w[0]).unwrap(), m.get(&got[0], &w[1]).unwrap());
        ensure(a > b || (a == b && priorities[&w[0]] >= priorities[&w[1]]), || {
            format!("{} before {} breaks the ordering", w[0], w[1])
        })?;
    }
    Ok(m)
}

/// Whether `x` holds the cell value `v` for `kind`, judged from the raw
/// fields: a self-pair carries exactly the values the insight holds.
fn holds(kind: LinkKind, x: &Insight, v: &str, dm: DateMatch) -> bool {
    if kind == LinkKind::SharedDate && dm == DateMatch::Overlap {
        let (s, e) = match v.split_once("..") {
            Some((s, e)) => (s.to_string(), e.to_string()),
            None => (v.to_string(), v.to_string()),
        };
        return x
            .fact
            .date_refs
            .iter()
            .any(|d| d.start().to_string() <= s && e <= d.end().to_string());
    }
    pair_keys(kind, x, x, dm).iter().any(|k| k == v)
}

fn shares_all(kinds: &[LinkKind], x: &Insight, y: &Insight, dm: DateMatch) -> bool {
    kinds.iter().all(|k| !pair_keys(*k, x, y, dm).is_empty())
}

/// Soundness: every member of a cell holds its row and column values, so
/// every pair in it shares every grid key. Completeness: any pair sharing
/// every grid key meets in some cell.
pub fn cluster_clique(insights: &[Insight], rows: &[LinkKind], cols: &[LinkKind], dm: DateMatch) -> Result<(), String> {
    let grid = cluster_grid(insights, rows, cols, dm).map_err(|e| e.to_string())?;
    let by_id: BTreeMap<&InsightId, &Insight> = insights.iter().map(|n| (&n.id, n)).collect();
    let axes: Vec<LinkKind> = rows.iter().chain(cols).copied().collect();
    let mut seen_cells = BTreeSet::new();
    for cell in &grid.cells {
        ensure(seen_cells.insert((cell.row.clone(), cell.col.clone())), || {
            "duplicate cell".into()
        })?;
        let values: Vec<&String> = cell.row.iter().chain(&cell.col).collect();
        for m in &cell.members {
            let n = by_id[m];
            for (k, v) in axes.iter().zip(&values) {
                ensure(holds(*k, n, v, dm), || format!("{m} lacks {k}={v}"))?;
            }
        }
        for (i, a) in cell.members.iter().enumerate() {
            for b in &cell.members[i + 1..] {
                ensure(shares_all(&axes, by_id[a], by_id[b], dm), || {
                    format!("{a} and {b} share a cell but not every key")
                })?;
            }
        }
    }
    if axes.is_empty() {
        return Ok(());
    }
    for (i, x) in insights.iter().enumerate() {
        for y in &insights[i + 1..] {
            if shares_all(&axes, x, y, dm)
                && !grid
                    .cells
                    .iter()
                    .any(|c| c.members.contains(&x.id) && c.members.contains(&y.id))
            {
                return Err(format!("{} and {} share every key but never meet", x.id, y.id));
            }
        }
    }
    Ok(())
}

/// Size bounds, no skipped higher score, and tie groups kept whole except
/// when a group arriving before `min` is reached must be cut to `max`.
pub fn selection_properties(
    scores: &BTreeMap<InsightId, f64>,
    opts: SelectionOptions,
    picked: &[InsightId],
) -> Result<(), String> {
    let n = scores.len();
    let chosen: BTreeSet<&InsightId> = picked.iter().collect();
    ensure(chosen.len() == picked.len(), || "duplicate pick".into())?;
    ensure(picked.len() >= opts.min.min(n) && picked.len() <= opts.max, || {
        format!("size {} outside [{}, {}]", picked.len(), opts.min.min(n), opts.max)
    })?;
    let lowest_in = picked.iter().map(|x| scores[x]).fold(f64::INFINITY, f64::min);
    let highest_out = scores
        .iter()
        .filter(|(k, _)| !chosen.contains(k))
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(highest_out <= lowest_in || picked.is_empty(), || {
        format!("unselected {highest_out} beats selected {lowest_in}")
    })?;
    let mut before = 0;
    for g in tie_groups(scores) {
        let inside = g.iter().filter(|x| chosen.contains(x)).count();
        if inside == 0 {
            break;
        }
        if inside < g.len() {
            ensure(before < opts.min && picked.len() == opts.max, || {
                format!("tie group split with {before} already chosen")
            })?;
            let kept: Vec<&InsightId> = g.iter().filter(|x| chosen.contains(x)).collect();
            let lowest: Vec<&InsightId> = g.iter().take(kept.len()).collect();
            ensure(kept == lowest, || "truncation did not keep the lowest IDs".into())?;
        }
        if opts.strategy == SelectionStrategy::Earliest && before >= opts.min {
            return Err("group added after min was reached".into());
        }
        before += inside;
    }
    Ok(())
}
