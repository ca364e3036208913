//! Hub nodes standing in for all pairwise links of one key group.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{key_groups, InsightNetwork, Link, LinkCategory, LinkKind};
use crate::insight::InsightId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gatekeeper {
    /// `type:SK`, `metric:Calls`, ...
    pub id: String,
    pub kind: LinkKind,
    pub key: String,
    pub members: Vec<InsightId>,
}

impl Gatekeeper {
    pub fn degree(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatekeeperEdge {
    pub insight: InsightId,
    pub gatekeeper: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GatekeeperGraph {
    pub insight_nodes: Vec<InsightId>,
    pub gatekeeper_nodes: Vec<Gatekeeper>,
    pub edges: Vec<GatekeeperEdge>,
    /// Links of kinds that were not aggregated.
    pub residual_links: Vec<Link>,
}

/// Replaces the pairwise links of every enabled undirected kind in
/// `categories` with one gatekeeper per key group of two or more insights.
pub fn gatekeeper_graph(net: &InsightNetwork, categories: &BTreeSet<LinkCategory>) -> GatekeeperGraph {
    let aggregated: BTreeSet<LinkKind> = net
        .enabled_kinds
        .iter()
        .copied()
        .filter(|k| !k.is_directed() && categories.contains(&k.category()))
        .collect();
    let mut gatekeeper_nodes = Vec::new();
    let mut edges = Vec::new();
    for &kind in &aggregated {
        for (value, members) in key_groups(kind, &net.nodes, net.date_match) {
            if members.len() < 2 {
                continue;
            }
            let id = format!("{}:{}", kind.gatekeeper_prefix(), value);
            let mut members: Vec<InsightId> = members.iter().map(|&i| net.nodes[i].id.clone()).collect();
            members.sort();
            for m in &members {
                edges.push(GatekeeperEdge {
                    insight: m.clone(),
                    gatekeeper: id.clone(),
                });
            }
            gatekeeper_nodes.push(Gatekeeper {
                id,
                kind,
                key: value,
                members,
            });
        }
    }
    GatekeeperGraph {
        insight_nodes: net.nodes.iter().map(|n| n.id.clone()).collect(),
        gatekeeper_nodes,
        edges,
        residual_links: net
            .links
            .iter()
            .filter(|l| !aggregated.contains(&l.kind))
            .cloned()
            .collect(),
    }
}
