//! Link-count matrix over a chosen node order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{InsightNetwork, LinkKind};
use crate::insight::InsightId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkMatrix {
    pub order: Vec<InsightId>,
    pub counts: Vec<Vec<u32>>,
}

impl LinkMatrix {
    pub fn get(&self, a: &InsightId, b: &InsightId) -> Option<u32> {
        let i = self.order.iter().position(|x| x == a)?;
        let j = self.order.iter().position(|x| x == b)?;
        Some(self.counts[i][j])
    }
}

/// Counts links of the `kinds` between every pair of `order` (all nodes
/// by ID when `None`). Directed links never count.
pub fn link_matrix(net: &InsightNetwork, kinds: &BTreeSet<LinkKind>, order: Option<&[InsightId]>) -> LinkMatrix {
    let order: Vec<InsightId> = match order {
        Some(o) => o.to_vec(),
        None => {
            let mut ids: Vec<InsightId> = net.nodes.iter().map(|n| n.id.clone()).collect();
            ids.sort();
            ids
        }
    };
    let index: BTreeMap<&InsightId, usize> = order.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut counts = vec![vec![0u32; order.len()]; order.len()];
    for l in net.links_of(kinds).filter(|l| !l.kind.is_directed()) {
        if let (Some(&i), Some(&j)) = (index.get(&l.a), index.get(&l.b)) {
            counts[i][j] += 1;
            counts[j][i] += 1;
        }
    }
    LinkMatrix { order, counts }
}

/// Orders `ids` with the highest-priority insight first and the rest by
/// their link count to it (descending), then priority (descending), then ID.
pub fn focus_order(
    net: &InsightNetwork,
    ids: &[InsightId],
    priorities: &BTreeMap<InsightId, f64>,
    kinds: &BTreeSet<LinkKind>,
) -> Vec<InsightId> {
    let p = |id: &InsightId| priorities.get(id).copied().unwrap_or(f64::NEG_INFINITY);
    let mut rest: Vec<InsightId> = ids.to_vec();
    rest.sort_by(|a, b| p(b).total_cmp(&p(a)).then_with(|| a.cmp(b)));
    if rest.is_empty() {
        return rest;
    }
    let head = rest.remove(0);
    let full = link_matrix(net, kinds, Some(ids));
    let to_head = |id: &InsightId| full.get(&head, id).unwrap_or(0);
    rest.sort_by(|a, b| {
        to_head(b)
            .cmp(&to_head(a))
            .then_with(|| p(b).total_cmp(&p(a)))
            .then_with(|| a.cmp(b))
    });
    std::iter::once(head).chain(rest).collect()
}
