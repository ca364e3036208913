//! The insight network: insights as nodes, typed links between pairs that
//! share a key value, and its matrix, cluster and gatekeeper projections.

mod cluster;
mod gatekeeper;
mod keys;
mod matrix;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::insight::{Insight, InsightId};

pub use cluster::{cluster_grid, ClusterCell, ClusterGrid};
pub use gatekeeper::{gatekeeper_graph, Gatekeeper, GatekeeperEdge, GatekeeperGraph};
pub use keys::{date_overlap_key, date_ref_key, held_values, link_key, DateMatch, LinkCategory, LinkKind};
pub use matrix::{focus_order, link_matrix, LinkMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("unknown link kind '{0}'")]
    UnknownKind(String),
    #[error("duplicate insight id '{0}'")]
    DuplicateId(InsightId),
    #[error("at most two link kinds per axis, got {0}")]
    TooManyKeys(usize),
    #[error("{0} is directed and cannot key a cluster")]
    DirectedKind(LinkKind),
}

/// Parses a comma-separated list of kind names. Category names such as
/// `TopicBased` stand for all of their kinds and `all` for every kind.
pub fn parse_kinds(list: &str) -> Result<BTreeSet<LinkKind>, NetworkError> {
    let mut out = BTreeSet::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(LinkKind::ALL);
        } else if let Some(c) = LinkCategory::ALL.into_iter().find(|c| c.name() == item) {
            out.extend(c.kinds());
        } else {
            out.insert(item.parse().map_err(NetworkError::UnknownKind)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct NetworkConfig {
    /// Enabled kind or category names; `None` enables everything.
    pub kinds: Option<Vec<String>>,
    pub date_match: DateMatch,
}

impl NetworkConfig {
    pub fn enabled_kinds(&self) -> Result<BTreeSet<LinkKind>, NetworkError> {
        match &self.kinds {
            None => Ok(LinkKind::ALL.into_iter().collect()),
            Some(names) => parse_kinds(&names.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub a: InsightId,
    pub b: InsightId,
    pub kind: LinkKind,
    pub category: LinkCategory,
    pub key: String,
}

impl Link {
    /// Undirected links are stored with `a < b`.
    pub fn new(a: &InsightId, b: &InsightId, kind: LinkKind, key: String) -> Link {
        let (a, b) = if kind.is_directed() || a < b { (a, b) } else { (b, a) };
        Link {
            a: a.clone(),
            b: b.clone(),
            kind,
            category: kind.category(),
            key,
        }
    }

    fn sort_key(&self) -> (LinkKind, &InsightId, &InsightId, &str) {
        (self.kind, &self.a, &self.b, &self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InsightNetwork {
    pub nodes: Vec<Insight>,
    pub links: Vec<Link>,
    pub enabled_kinds: BTreeSet<LinkKind>,
    pub date_match: DateMatch,
}

impl InsightNetwork {
    pub fn node(&self, id: &InsightId) -> Option<&Insight> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn links_of<'a>(&'a self, kinds: &'a BTreeSet<LinkKind>) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.iter().filter(move |l| kinds.contains(&l.kind))
    }

    /// Appends the directed successor chain over `ranking` (best first),
    /// if that kind is enabled. Any previous chain is replaced.
    pub fn attach_priority_chain(&mut self, ranking: &[InsightId]) {
        self.links.retain(|l| l.kind != LinkKind::PriorityChainSuccessor);
        if !self.enabled_kinds.contains(&LinkKind::PriorityChainSuccessor) {
            return;
        }
        for (i, w) in ranking.windows(2).enumerate() {
            self.links.push(Link::new(
                &w[0],
                &w[1],
                LinkKind::PriorityChainSuccessor,
                format!("rank={}", i + 1),
            ));
        }
        self.links.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
    }
}

/// Insight indices grouped by a key value of `kind`, keyed by the raw value.
///
/// Under overlap matching, `SharedDate` groups are the maximal sets of
/// insights that all cover a common day, each keyed by the span of days
/// its members all cover.
pub fn key_groups(kind: LinkKind, nodes: &[Insight], date_match: DateMatch) -> BTreeMap<String, Vec<usize>> {
    if kind == LinkKind::SharedDate && date_match == DateMatch::Overlap {
        return day_cliques(nodes);
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        for v in held_values(kind, n, date_match) {
            groups.entry(v).or_default().push(i);
        }
    }
    groups
}

fn day_cliques(nodes: &[Insight]) -> BTreeMap<String, Vec<usize>> {
    let starts: BTreeSet<_> = nodes
        .iter()
        .flat_map(|n| n.fact.date_refs.iter().map(|d| d.start()))
        .collect();
    let mut covers: Vec<(String, Vec<usize>)> = Vec::new();
    let mut seen = BTreeSet::new();
    for day in starts {
        let mut members = Vec::new();
        let mut until = None;
        for (i, n) in nodes.iter().enumerate() {
            let end = n
                .fact
                .date_refs
                .iter()
                .filter(|d| d.contains(day))
                .map(|d| d.end())
                .max();
            if let Some(e) = end {
                members.push(i);
                until = Some(until.map_or(e, |u: chrono::NaiveDate| u.min(e)));
            }
        }
        if seen.insert(members.clone()) {
            covers.push((keys::format_date_key(day, until.expect("day is a start")), members));
        }
    }
    let is_strict_subset = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|x| b.contains(x));
    covers
        .iter()
        .filter(|(_, m)| !covers.iter().any(|(_, o)| is_strict_subset(m, o)))
        .cloned()
        .collect()
}

fn date_overlap_links(nodes: &[Insight], out: &mut BTreeSet<Link>) {
    let mut refs: Vec<(usize, crate::insight::DateRef)> = nodes
        .iter()
        .enumerate()
        .flat_map(|(i, n)| n.fact.date_refs.iter().map(move |d| (i, *d)))
        .collect();
    refs.sort_by_key(|(i, d)| (d.start(), d.end(), *i));
    for (x, (i, di)) in refs.iter().enumerate() {
        for (j, dj) in &refs[x + 1..] {
            if dj.start() > di.end() {
                break;
            }
            if i == j {
                continue;
            }
            if let Some(key) = date_overlap_key(di, dj) {
                out.insert(Link::new(&nodes[*i].id, &nodes[*j].id, LinkKind::SharedDate, key));
            }
        }
    }
}

/// Links every pair of insights once per key value they share, for each
/// enabled kind. The priority chain is added later from the scores.
pub fn build_network(insights: &[Insight], config: &NetworkConfig) -> Result<InsightNetwork, NetworkError> {
    let enabled = config.enabled_kinds()?;
    let mut ids = BTreeSet::new();
    for n in insights {
        if !ids.insert(&n.id) {
            return Err(NetworkError::DuplicateId(n.id.clone()));
        }
    }
    let mut links = BTreeSet::new();
    for &kind in &enabled {
        match kind {
            LinkKind::PriorityChainSuccessor => {}
            LinkKind::SharedDate if config.date_match == DateMatch::Overlap => date_overlap_links(insights, &mut links),
            _ => {
                for (value, members) in key_groups(kind, insights, config.date_match) {
                    let key = link_key(kind, &value);
                    for (x, &i) in members.iter().enumerate() {
                        for &j in &members[x + 1..] {
                            links.insert(Link::new(&insights[i].id, &insights[j].id, kind, key.clone()));
                        }
                    }
                }
            }
        }
    }
    let mut links: Vec<Link> = links.into_iter().collect();
    links.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
    Ok(InsightNetwork {
        nodes: insights.to_vec(),
        links,
        enabled_kinds: enabled,
        date_match: config.date_match,
    })
}

impl PartialOrd for Link {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Link {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}
