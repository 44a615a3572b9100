#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use qkdplan::net_model::{LinkSpec, Node, NodeKind, QkdGraph};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn scenario_path(name: &str) -> PathBuf {
    crate_dir().join("scenarios").join(name)
}

#[derive(Debug, Deserialize)]
pub struct FixtureNode {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Deserialize)]
pub struct FixtureLink {
    pub a: String,
    pub b: String,
    pub pool: u64,
}

#[derive(Debug, Deserialize)]
pub struct FixtureCommodity {
    pub src: String,
    pub dst: String,
    pub demand: u64,
}

#[derive(Debug, Deserialize)]
pub struct FixtureInstance {
    pub nodes: Vec<FixtureNode>,
    pub links: Vec<FixtureLink>,
    pub commodities: Vec<FixtureCommodity>,
    pub gs_relay: bool,
    pub mmd_optimum: f64,
    pub mr_optimum: Option<f64>,
}

impl FixtureInstance {
    pub fn graph(&self) -> QkdGraph {
        QkdGraph::new(
            self.nodes.iter().map(|n| Node::new(n.id.clone(), n.kind)).collect(),
            self.links
                .iter()
                .map(|l| LinkSpec::with_pool(l.a.clone(), l.b.clone(), l.pool))
                .collect(),
        )
        .unwrap()
    }
}

#[derive(Debug, Deserialize)]
struct Fixture {
    instances: Vec<FixtureInstance>,
}

/// Instances with optima from a path-based LP solved by an external solver.
pub fn flow_oracle_fixture() -> Vec<FixtureInstance> {
    let text = std::fs::read_to_string(crate_dir().join("tests/fixtures/flow_oracle.json")).unwrap();
    serde_json::from_str::<Fixture>(&text).unwrap().instances
}

/// Random topology without ground-to-ground links. Node ids sort in
/// creation order within each kind.
pub fn random_graph(rng: &mut StdRng, max_nodes: usize, max_links: usize, max_pool: u64) -> QkdGraph {
    let n = rng.gen_range(3..=max_nodes);
    let n_gs = rng.gen_range(2..=(n - 1).min(5));
    let mut nodes: Vec<Node> = (0..n_gs).map(|i| Node::new(format!("G{i}"), NodeKind::Gs)).collect();
    for i in 0..n - n_gs {
        let kind = if rng.gen_bool(0.7) { NodeKind::Leo } else { NodeKind::Geo };
        nodes.push(Node::new(format!("S{i}"), kind));
    }
    let mut candidates = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !(nodes[a].kind.is_ground() && nodes[b].kind.is_ground()) {
                candidates.push((a, b));
            }
        }
    }
    candidates.shuffle(rng);
    let m = rng.gen_range(2.min(candidates.len())..=max_links.min(candidates.len()));
    let links = candidates[..m]
        .iter()
        .map(|&(a, b)| LinkSpec::with_pool(nodes[a].id.clone(), nodes[b].id.clone(), rng.gen_range(0..=max_pool)))
        .collect();
    QkdGraph::new(nodes, links).unwrap()
}

/// Up to `max` distinct unordered ground-station pairs, randomly oriented.
pub fn random_pairs(rng: &mut StdRng, graph: &QkdGraph, max: usize) -> Vec<(String, String)> {
    let gs: Vec<String> = graph.ground_stations().map(|i| graph.node(i).id.clone()).collect();
    let mut pairs = Vec::new();
    for (i, a) in gs.iter().enumerate() {
        for b in &gs[i + 1..] {
            pairs.push((a.clone(), b.clone()));
        }
    }
    pairs.shuffle(rng);
    let k = rng.gen_range(1..=max.min(pairs.len()));
    pairs.truncate(k);
    for p in &mut pairs {
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut p.0, &mut p.1);
        }
    }
    pairs
}

/// Simple paths between two nodes as link-index lists. Without ground
/// relay, intermediate nodes must be satellites.
pub fn simple_paths(graph: &QkdGraph, src: usize, dst: usize, gs_relay: bool) -> Vec<Vec<usize>> {
    fn walk(
        graph: &QkdGraph,
        cur: usize,
        dst: usize,
        gs_relay: bool,
        visited: &mut Vec<bool>,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur == dst {
            out.push(stack.clone());
            return;
        }
        for (j, link) in graph.links().iter().enumerate() {
            let next = if link.a == cur {
                link.b
            } else if link.b == cur {
                link.a
            } else {
                continue;
            };
            if visited[next] {
                continue;
            }
            if next != dst && !gs_relay && graph.node(next).kind.is_ground() {
                continue;
            }
            visited[next] = true;
            stack.push(j);
            walk(graph, next, dst, gs_relay, visited, stack, out);
            stack.pop();
            visited[next] = false;
        }
    }
    let mut visited = vec![false; graph.nodes().len()];
    visited[src] = true;
    let mut out = Vec::new();
    walk(graph, src, dst, gs_relay, &mut visited, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over integral path routings.
pub struct IntegralOracle {
    paths: Vec<Vec<Vec<usize>>>,
    pools: Vec<u64>,
}

type MemoKey = (usize, u64, usize, Vec<u64>);

impl IntegralOracle {
    pub fn new(graph: &QkdGraph, pairs: &[(usize, usize)], gs_relay: bool) -> Self {
        Self {
            paths: pairs.iter().map(|&(s, t)| simple_paths(graph, s, t, gs_relay)).collect(),
            pools: graph.pools(),
        }
    }

    /// Cheapest total hop count that ships `demands`, or `None`.
    pub fn min_cost(&self, demands: &[u64]) -> Option<u64> {
        let mut memo = HashMap::new();
        self.search(0, demands.first().copied().unwrap_or(0), 0, self.pools.clone(), demands, &mut memo)
    }

    pub fn feasible(&self, demands: &[u64]) -> bool {
        self.min_cost(demands).is_some()
    }

    /// Largest `m` such that every commodity can ship `m` bits at once.
    pub fn max_min_demand(&self) -> u64 {
        let total: u64 = self.pools.iter().sum();
        let mut m = 0;
        while m < total && self.feasible(&vec![m + 1; self.paths.len()]) {
            m += 1;
        }
        m
    }

    // one unit at a time, paths taken in non-decreasing order per commodity
    fn search(
        &self,
        commodity: usize,
        remaining: u64,
        first_path: usize,
        pools: Vec<u64>,
        demands: &[u64],
        memo: &mut HashMap<MemoKey, Option<u64>>,
    ) -> Option<u64> {
        if commodity == self.paths.len() {
            return Some(0);
        }
        if remaining == 0 {
            let next = demands.get(commodity + 1).copied().unwrap_or(0);
            return self.search(commodity + 1, next, 0, pools, demands, memo);
        }
        let key = (commodity, remaining, first_path, pools.clone());
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut best: Option<u64> = None;
        for (p, path) in self.paths[commodity].iter().enumerate().skip(first_path) {
            if path.iter().any(|&j| pools[j] == 0) {
                continue;
            }
            let mut next = pools.clone();
            for &j in path {
                next[j] -= 1;
            }
            if let Some(c) = self.search(commodity, remaining - 1, p, next, demands, memo) {
                let c = c + path.len() as u64;
                best = Some(best.map_or(c, |b| b.min(c)));
            }
        }
        memo.insert(key, best);
        best
    }
}
