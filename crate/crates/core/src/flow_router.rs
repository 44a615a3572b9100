//! Multi-commodity key routing over a [`QkdGraph`].
//!
//! Every undirected link `j` carries two directed flow variables per
//! commodity: directed edge `2j` runs `a -> b` and `2j + 1` runs `b -> a`.
//! Both directions of all commodities draw on the link's single key pool.
//!
//! Routers:
//!
//! * [`route_mmd`] maximises the smallest fulfilled demand over a set of
//!   ground-station pairs.
//! * [`route_mr`] meets fixed demands while consuming as few pool bits as
//!   possible (optionally weighted per link).
//! * [`route_sequential_dijkstra`] serves requests one after another along
//!   fewest-hop paths; the baseline the LP routers are compared against.
//!
//! The LP routers solve the fractional relaxation and then make it integral
//! with [`greedy_round`].

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::lp_core::{self, LinearProgram, LpError, LpStatus, SolverOptions};
use crate::net_model::{NetError, QkdGraph};

/// Values closer than this to the next integer are snapped up when flooring.
const SNAP_TOL: f64 = 1e-6;
const FLOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("commodity endpoint `{0}` is not a ground station")]
    NotGroundStation(String),
    #[error("commodity source and sink are both `{0}`")]
    SameEndpoints(String),
    #[error("minimum-resource routing needs a fixed demand for {src}->{dst}")]
    VariableDemand { src: String, dst: String },
    #[error("invalid edge weights: {0}")]
    BadWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demand {
    Fixed(u64),
    /// Demand is a decision variable (max-min) or "as much as possible"
    /// (sequential baseline).
    Variable,
}

/// A key-exchange request between two ground stations (node indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
    pub demand: Demand,
}

impl Commodity {
    pub fn between(graph: &QkdGraph, src: &str, dst: &str, demand: Demand) -> Result<Self, RouteError> {
        let source = graph.node_index(src)?;
        let sink = graph.node_index(dst)?;
        let c = Self {
            source,
            sink,
            demand,
        };
        c.validate(graph)?;
        Ok(c)
    }

    pub fn fixed(graph: &QkdGraph, src: &str, dst: &str, bits: u64) -> Result<Self, RouteError> {
        Self::between(graph, src, dst, Demand::Fixed(bits))
    }

    pub fn variable(graph: &QkdGraph, src: &str, dst: &str) -> Result<Self, RouteError> {
        Self::between(graph, src, dst, Demand::Variable)
    }

    fn validate(&self, graph: &QkdGraph) -> Result<(), RouteError> {
        for end in [self.source, self.sink] {
            if end >= graph.nodes().len() {
                return Err(NetError::UnknownNode(format!("#{end}")).into());
            }
            let node = graph.node(end);
            if !node.kind.is_ground() {
                return Err(RouteError::NotGroundStation(node.id.clone()));
            }
        }
        if self.source == self.sink {
            return Err(RouteError::SameEndpoints(graph.node(self.source).id.clone()));
        }
        Ok(())
    }

    pub fn fixed_demand(&self) -> Option<u64> {
        match self.demand {
            Demand::Fixed(d) => Some(d),
            Demand::Variable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterOptions {
    /// Whether ground stations may relay keys for other pairs.
    pub gs_relay: bool,
    pub solver: SolverOptions,
}

impl Default for RouterOptions {
    fn default() -> Self {
        Self {
            gs_relay: true,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximise the minimum demand; demands are variables.
    MaxMinDemand,
    /// Minimise total (weighted) flow at fixed demands. Weights are per
    /// link and default to one.
    MinResource { edge_weights: Option<Vec<f64>> },
}

/// Tail and head node of a directed edge.
pub fn edge_endpoints(graph: &QkdGraph, edge: usize) -> (usize, usize) {
    let link = &graph.links()[edge / 2];
    if edge.is_multiple_of(2) {
        (link.a, link.b)
    } else {
        (link.b, link.a)
    }
}

/// Column layout of the flow LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowLayout {
    pub commodities: usize,
    pub links: usize,
    /// Max-min form: column 0 is the dummy `t`, then one demand per commodity.
    pub variable_demands: bool,
}

impl FlowLayout {
    fn prefix(&self) -> usize {
        if self.variable_demands {
            1 + self.commodities
        } else {
            0
        }
    }

    pub fn num_vars(&self) -> usize {
        self.prefix() + self.commodities * 2 * self.links
    }

    pub fn min_demand_var(&self) -> Option<usize> {
        self.variable_demands.then_some(0)
    }

    pub fn demand_var(&self, commodity: usize) -> Option<usize> {
        self.variable_demands.then_some(1 + commodity)
    }

    pub fn flow_var(&self, commodity: usize, edge: usize) -> usize {
        self.prefix() + commodity * 2 * self.links + edge
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowProgram {
    pub lp: LinearProgram,
    pub layout: FlowLayout,
}

fn check_commodities(graph: &QkdGraph, commodities: &[Commodity]) -> Result<(), RouteError> {
    commodities.iter().try_for_each(|c| c.validate(graph))
}

/// May commodity `c` push flow along directed edge `edge`?
fn edge_allowed(graph: &QkdGraph, c: &Commodity, edge: usize, gs_relay: bool) -> bool {
    if gs_relay {
        return true;
    }
    let (tail, head) = edge_endpoints(graph, edge);
    let tail_ok = !graph.node(tail).kind.is_ground() || tail == c.source;
    let head_ok = !graph.node(head).kind.is_ground() || head == c.sink;
    tail_ok && head_ok
}

/// Encodes capacity, non-negativity and conservation constraints as an LP.
pub fn build_lp(
    graph: &QkdGraph,
    commodities: &[Commodity],
    objective: &Objective,
    opts: &RouterOptions,
) -> Result<FlowProgram, RouteError> {
    check_commodities(graph, commodities)?;
    let k = commodities.len();
    let links = graph.links().len();
    let variable_demands = matches!(objective, Objective::MaxMinDemand) && k > 0;
    let layout = FlowLayout {
        commodities: k,
        links,
        variable_demands,
    };
    let n = layout.num_vars();
    let mut lp = LinearProgram::new(n);

    match objective {
        Objective::MaxMinDemand => {
            if let Some(t) = layout.min_demand_var() {
                lp.objective[t] = -1.0;
            }
        }
        Objective::MinResource { edge_weights } => {
            if let Some(w) = edge_weights {
                if w.len() != links {
                    return Err(RouteError::BadWeights(format!(
                        "{} weights for {links} links",
                        w.len()
                    )));
                }
                if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(RouteError::BadWeights(format!("weight {bad} is not a non-negative number")));
                }
            }
            for (i, c) in commodities.iter().enumerate() {
                if c.fixed_demand().is_none() {
                    return Err(RouteError::VariableDemand {
                        src: graph.node(c.source).id.clone(),
                        dst: graph.node(c.sink).id.clone(),
                    });
                }
                for e in 0..2 * links {
                    lp.objective[layout.flow_var(i, e)] = edge_weights.as_ref().map_or(1.0, |w| w[e / 2]);
                }
            }
        }
    }

    // A) one shared pool per undirected link
    for (j, link) in graph.links().iter().enumerate() {
        if k == 0 {
            break;
        }
        let mut row = vec![0.0; n];
        for i in 0..k {
            row[layout.flow_var(i, 2 * j)] = 1.0;
            row[layout.flow_var(i, 2 * j + 1)] = 1.0;
        }
        lp.add_ub(row, link.pool_bits as f64);
    }

    // t <= d_i
    if let Some(t) = layout.min_demand_var() {
        for i in 0..k {
            let mut row = vec![0.0; n];
            row[t] = 1.0;
            row[layout.demand_var(i).unwrap()] = -1.0;
            lp.add_ub(row, 0.0);
        }
    }

    // C) conservation: out - in = d at the source, -d at the sink, 0 elsewhere
    for (i, c) in commodities.iter().enumerate() {
        for v in 0..graph.nodes().len() {
            let mut row = vec![0.0; n];
            let mut touched = false;
            for (_, j) in graph.neighbors(v) {
                let out_edge = if graph.links()[j].a == v { 2 * j } else { 2 * j + 1 };
                let in_edge = out_edge ^ 1;
                row[layout.flow_var(i, out_edge)] += 1.0;
                row[layout.flow_var(i, in_edge)] -= 1.0;
                touched = true;
            }
            let sign = if v == c.source {
                1.0
            } else if v == c.sink {
                -1.0
            } else {
                0.0
            };
            let rhs = match layout.demand_var(i) {
                Some(d) => {
                    row[d] = -sign;
                    0.0
                }
                None => sign * c.fixed_demand().unwrap_or(0) as f64,
            };
            if touched || rhs != 0.0 || row.iter().any(|&x| x != 0.0) {
                lp.add_eq(row, rhs);
            }
        }
    }

    // B) is the default lower bound; forbidden ground relays are pinned to zero
    for (i, c) in commodities.iter().enumerate() {
        for e in 0..2 * links {
            if !edge_allowed(graph, c, e, opts.gs_relay) {
                lp.bounds[layout.flow_var(i, e)] = (0.0, 0.0);
            }
        }
    }

    Ok(FlowProgram { lp, layout })
}

/// Per-commodity flows on directed edges plus fulfilled demands.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub commodities: Vec<Commodity>,
    /// `flows[commodity][directed edge]`, in bits.
    pub flows: Vec<Vec<f64>>,
    /// Fulfilled demand per commodity, in bits.
    pub demands: Vec<f64>,
    /// Max-min: smallest demand. Min-resource: weighted consumption.
    /// Sequential baseline: total delivered bits.
    pub objective: f64,
    pub status: LpStatus,
    /// Objective of the LP relaxation, when one was solved.
    pub relaxation_objective: Option<f64>,
}

impl FlowSolution {
    pub fn empty(graph: &QkdGraph, commodities: &[Commodity], status: LpStatus) -> Self {
        Self {
            commodities: commodities.to_vec(),
            flows: vec![vec![0.0; 2 * graph.links().len()]; commodities.len()],
            demands: vec![0.0; commodities.len()],
            objective: 0.0,
            status,
            relaxation_objective: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Pool bits drawn from `link` by all commodities in both directions.
    pub fn link_usage(&self, link: usize) -> f64 {
        self.flows.iter().map(|f| f[2 * link] + f[2 * link + 1]).sum()
    }

    pub fn commodity_consumed(&self, commodity: usize) -> f64 {
        self.flows[commodity].iter().sum()
    }

    /// Total pool bits consumed.
    pub fn consumed(&self) -> f64 {
        self.flows.iter().flatten().sum()
    }

    pub fn delivered(&self) -> f64 {
        self.demands.iter().sum()
    }

    /// Pool bits spent per delivered bit; zero when nothing was delivered.
    pub fn consumption_rate(&self) -> f64 {
        let delivered = self.delivered();
        if delivered > 0.0 {
            self.consumed() / delivered
        } else {
            0.0
        }
    }

    pub fn min_demand(&self) -> f64 {
        if self.demands.is_empty() {
            return 0.0;
        }
        self.demands.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_integral(&self) -> bool {
        self.flows
            .iter()
            .flatten()
            .chain(&self.demands)
            .all(|v| v.fract() == 0.0)
    }

    /// Pools left after subtracting this solution's usage.
    pub fn residual_pools(&self, graph: &QkdGraph) -> Vec<f64> {
        (0..graph.links().len())
            .map(|j| graph.links()[j].pool_bits as f64 - self.link_usage(j))
            .collect()
    }

    pub fn summary(&self, graph: &QkdGraph) -> Vec<PairSummary> {
        self.commodities
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let fulfilled = self.demands[i];
                let consumed = self.commodity_consumed(i);
                PairSummary {
                    src: graph.node(c.source).id.clone(),
                    dst: graph.node(c.sink).id.clone(),
                    requested: c.fixed_demand(),
                    fulfilled,
                    consumed,
                    consumption_rate: if fulfilled > 0.0 { consumed / fulfilled } else { 0.0 },
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub src: String,
    pub dst: String,
    pub requested: Option<u64>,
    pub fulfilled: f64,
    pub consumed: f64,
    pub consumption_rate: f64,
}

/// Solves the LP relaxation and returns the fractional flows.
pub fn solve_relaxation(
    graph: &QkdGraph,
    commodities: &[Commodity],
    objective: &Objective,
    opts: &RouterOptions,
) -> Result<FlowSolution, RouteError> {
    let program = build_lp(graph, commodities, objective, opts)?;
    let sol = lp_core::solve(&program.lp, &opts.solver)?;
    if sol.status != LpStatus::Optimal {
        return Ok(FlowSolution::empty(graph, commodities, sol.status));
    }
    let layout = program.layout;
    let clean = |v: f64| if v.abs() < FLOW_EPS { 0.0 } else { v };
    let flows: Vec<Vec<f64>> = (0..commodities.len())
        .map(|i| {
            (0..2 * layout.links)
                .map(|e| clean(sol.x[layout.flow_var(i, e)]))
                .collect()
        })
        .collect();
    let demands: Vec<f64> = commodities
        .iter()
        .enumerate()
        .map(|(i, c)| match (layout.demand_var(i), c.demand) {
            (Some(d), _) => clean(sol.x[d]),
            (None, Demand::Fixed(d)) => d as f64,
            (None, Demand::Variable) => 0.0,
        })
        .collect();
    let objective_value = match objective {
        Objective::MaxMinDemand => -sol.objective_value,
        Objective::MinResource { .. } => sol.objective_value,
    };
    Ok(FlowSolution {
        commodities: commodities.to_vec(),
        flows,
        demands,
        objective: objective_value,
        status: LpStatus::Optimal,
        relaxation_objective: Some(objective_value),
    })
}

/// Every unordered pair of ground stations, in node order.
pub fn all_ground_pairs(graph: &QkdGraph) -> Vec<(String, String)> {
    let gs: Vec<usize> = graph.ground_stations().collect();
    let mut out = Vec::new();
    for (x, &a) in gs.iter().enumerate() {
        for &b in &gs[x + 1..] {
            out.push((graph.node(a).id.clone(), graph.node(b).id.clone()));
        }
    }
    out
}

/// Max-min demand routing over the given ground-station pairs.
///
/// Pairs are treated as unordered; repeats are merged. The LP relaxation is
/// solved and then rounded with [`greedy_round`].
pub fn route_mmd<S: AsRef<str>>(
    graph: &QkdGraph,
    pairs: &[(S, S)],
    opts: &RouterOptions,
) -> Result<FlowSolution, RouteError> {
    let mut commodities: Vec<Commodity> = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let c = Commodity::variable(graph, a.as_ref(), b.as_ref())?;
        let dup = commodities
            .iter()
            .any(|o| (o.source, o.sink) == (c.source, c.sink) || (o.source, o.sink) == (c.sink, c.source));
        if !dup {
            commodities.push(c);
        }
    }
    let relaxed = solve_relaxation(graph, &commodities, &Objective::MaxMinDemand, opts)?;
    if !relaxed.is_optimal() {
        return Ok(relaxed);
    }
    let mut rounded = greedy_round(graph, &relaxed, opts);
    rounded.objective = rounded.min_demand();
    Ok(rounded)
}

/// Minimum-resource routing of fixed demands.
///
/// An infeasible request set yields a solution with
/// [`LpStatus::Infeasible`] and no flow.
pub fn route_mr(
    graph: &QkdGraph,
    commodities: &[Commodity],
    edge_weights: Option<&[f64]>,
    opts: &RouterOptions,
) -> Result<FlowSolution, RouteError> {
    let objective = Objective::MinResource {
        edge_weights: edge_weights.map(<[f64]>::to_vec),
    };
    let relaxed = solve_relaxation(graph, commodities, &objective, opts)?;
    if !relaxed.is_optimal() {
        return Ok(relaxed);
    }
    let mut rounded = greedy_round(graph, &relaxed, opts);
    rounded.objective = (0..graph.links().len())
        .map(|j| rounded.link_usage(j) * edge_weights.map_or(1.0, |w| w[j]))
        .sum();
    Ok(rounded)
}

/// Fewest-hop path from `src` to `dst` over links accepted by `usable`.
///
/// Ties between equally short paths go to the lexicographically smallest
/// sequence of node ids. Nodes rejected by `transit` can only appear as
/// endpoints. Returns directed edge indices.
pub fn shortest_path(
    graph: &QkdGraph,
    src: usize,
    dst: usize,
    usable: impl Fn(usize) -> bool,
    transit: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    if src == dst {
        return Some(Vec::new());
    }
    let n = graph.nodes().len();
    let mut dist = vec![usize::MAX; n];
    dist[dst] = 0;
    let mut queue = VecDeque::from([dst]);
    while let Some(u) = queue.pop_front() {
        if u == src {
            break;
        }
        if u != dst && !transit(u) {
            continue;
        }
        for (v, j) in graph.neighbors(u) {
            if dist[v] == usize::MAX && usable(j) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[src] == usize::MAX {
        return None;
    }
    let mut path = Vec::with_capacity(dist[src]);
    let mut cur = src;
    while cur != dst {
        let (next, link) = graph
            .neighbors(cur)
            .filter(|&(v, j)| {
                dist[v] != usize::MAX
                    && dist[v] + 1 == dist[cur]
                    && usable(j)
                    && (v == dst || transit(v))
            })
            .min_by(|x, y| graph.node(x.0).id.cmp(&graph.node(y.0).id))?;
        let forward = graph.links()[link].a == cur;
        path.push(if forward { 2 * link } else { 2 * link + 1 });
        cur = next;
    }
    Some(path)
}

fn transit_rule(graph: &QkdGraph, gs_relay: bool) -> impl Fn(usize) -> bool + '_ {
    move |v| gs_relay || !graph.node(v).kind.is_ground()
}

/// Splits one commodity's flow into source-to-sink paths, returning
/// `(directed edges, amount)` pairs. Circulations are discarded.
fn decompose_paths(graph: &QkdGraph, c: &Commodity, flows: &[f64]) -> Vec<(Vec<usize>, f64)> {
    let mut remaining = flows.to_vec();
    let mut paths = Vec::new();
    let links = graph.links();
    loop {
        // BFS over directed edges that still carry flow
        let n = graph.nodes().len();
        let mut prev_edge = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[c.source] = true;
        let mut queue = VecDeque::from([c.source]);
        while let Some(u) = queue.pop_front() {
            if u == c.sink {
                break;
            }
            for (v, j) in graph.neighbors(u) {
                let e = if links[j].a == u { 2 * j } else { 2 * j + 1 };
                if !seen[v] && remaining[e] > FLOW_EPS {
                    seen[v] = true;
                    prev_edge[v] = e;
                    queue.push_back(v);
                }
            }
        }
        if !seen[c.sink] {
            break;
        }
        let mut path = Vec::new();
        let mut cur = c.sink;
        while cur != c.source {
            let e = prev_edge[cur];
            path.push(e);
            cur = edge_endpoints(graph, e).0;
        }
        path.reverse();
        let amount = path.iter().map(|&e| remaining[e]).fold(f64::INFINITY, f64::min);
        for &e in &path {
            remaining[e] -= amount;
        }
        paths.push((path, amount));
    }
    paths
}

fn snap_floor(v: f64) -> f64 {
    (v + SNAP_TOL).floor().max(0.0)
}

/// Makes a fractional solution integral.
///
/// Each commodity's flow is decomposed into paths whose amounts are rounded
/// down, and the rounded flow is subtracted from the pools. Then, while some
/// commodity can still grow, the one with the smallest demand (lowest index
/// on ties) ships one more bit along the fewest-hop path with spare keys;
/// a commodity with no such path, or whose fixed demand is met, is retired.
pub fn greedy_round(graph: &QkdGraph, fractional: &FlowSolution, opts: &RouterOptions) -> FlowSolution {
    let links = graph.links().len();
    let k = fractional.commodities.len();
    let mut flows = vec![vec![0.0; 2 * links]; k];
    let mut demands = vec![0.0; k];

    for (i, c) in fractional.commodities.iter().enumerate() {
        for (path, amount) in decompose_paths(graph, c, &fractional.flows[i]) {
            let bits = snap_floor(amount);
            if bits == 0.0 {
                continue;
            }
            for e in path {
                flows[i][e] += bits;
            }
            demands[i] += bits;
        }
        if let Some(target) = c.fixed_demand() {
            debug_assert!(demands[i] <= target as f64);
        }
    }

    let mut residual: Vec<i64> = (0..links)
        .map(|j| {
            let used: f64 = flows.iter().map(|f| f[2 * j] + f[2 * j + 1]).sum();
            graph.links()[j].pool_bits as i64 - used as i64
        })
        .collect();
    debug_assert!(residual.iter().all(|&r| r >= 0), "rounded flow exceeds a pool");

    let mut available: Vec<bool> = fractional
        .commodities
        .iter()
        .enumerate()
        .map(|(i, c)| c.fixed_demand().is_none_or(|d| demands[i] < d as f64))
        .collect();
    let transit = transit_rule(graph, opts.gs_relay);
    while let Some(i) = (0..k)
        .filter(|&i| available[i])
        .min_by(|&a, &b| demands[a].total_cmp(&demands[b]).then(a.cmp(&b)))
    {
        let c = fractional.commodities[i];
        match shortest_path(graph, c.source, c.sink, |j| residual[j] >= 1, &transit) {
            Some(path) => {
                for e in path {
                    flows[i][e] += 1.0;
                    residual[e / 2] -= 1;
                }
                demands[i] += 1.0;
                if c.fixed_demand().is_some_and(|d| demands[i] >= d as f64) {
                    available[i] = false;
                }
            }
            None => available[i] = false,
        }
    }

    let mut out = FlowSolution {
        commodities: fractional.commodities.clone(),
        flows,
        demands,
        objective: 0.0,
        status: fractional.status,
        relaxation_objective: fractional.relaxation_objective,
    };
    out.objective = out.min_demand();
    out
}

/// Serves requests strictly in order, each one repeatedly taking the
/// fewest-hop path with keys left on every link and pushing its bottleneck
/// (capped by the unmet demand). `Demand::Variable` means "as much as the
/// network allows".
pub fn route_sequential_dijkstra(
    graph: &QkdGraph,
    requests: &[Commodity],
    opts: &RouterOptions,
) -> Result<FlowSolution, RouteError> {
    check_commodities(graph, requests)?;
    let links = graph.links().len();
    let mut residual: Vec<u64> = graph.pools();
    let mut flows = vec![vec![0.0; 2 * links]; requests.len()];
    let mut demands = vec![0.0; requests.len()];
    let transit = transit_rule(graph, opts.gs_relay);
    for (i, c) in requests.iter().enumerate() {
        let mut unmet = c.fixed_demand().unwrap_or(u64::MAX);
        while unmet > 0 {
            let Some(path) = shortest_path(graph, c.source, c.sink, |j| residual[j] > 0, &transit) else {
                break;
            };
            let bottleneck = path.iter().map(|&e| residual[e / 2]).min().unwrap_or(0);
            let push = bottleneck.min(unmet);
            for &e in &path {
                residual[e / 2] -= push;
                flows[i][e] += push as f64;
            }
            demands[i] += push as f64;
            unmet -= push;
        }
    }
    let delivered = demands.iter().sum();
    Ok(FlowSolution {
        commodities: requests.to_vec(),
        flows,
        demands,
        objective: delivered,
        status: LpStatus::Optimal,
        relaxation_objective: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeFlow {
        commodity: usize,
        from: String,
        to: String,
        bits: f64,
    },
    NegativeDemand {
        commodity: usize,
        bits: f64,
    },
    Capacity {
        a: String,
        b: String,
        used: f64,
        pool: u64,
    },
    Conservation {
        commodity: usize,
        node: String,
        imbalance: f64,
    },
    GroundRelay {
        commodity: usize,
        node: String,
    },
    Shape(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeFlow {
                commodity,
                from,
                to,
                bits,
            } => write!(f, "commodity {commodity}: negative flow {bits} on {from}->{to}"),
            Violation::NegativeDemand { commodity, bits } => {
                write!(f, "commodity {commodity}: negative demand {bits}")
            }
            Violation::Capacity { a, b, used, pool } => {
                write!(f, "link {a}-{b}: uses {used} bits but pool holds {pool}")
            }
            Violation::Conservation {
                commodity,
                node,
                imbalance,
            } => write!(f, "commodity {commodity}: flow not conserved at {node} (off by {imbalance})"),
            Violation::GroundRelay { commodity, node } => {
                write!(f, "commodity {commodity}: relayed through ground station {node}")
            }
            Violation::Shape(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("all constraints hold");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Re-checks capacity, non-negativity and conservation from scratch, with
/// an absolute tolerance of `1e-6` bits.
pub fn verify_solution(graph: &QkdGraph, solution: &FlowSolution) -> VerificationReport {
    verify_solution_with_tol(graph, solution, 1e-6)
}

pub fn verify_solution_with_tol(graph: &QkdGraph, solution: &FlowSolution, tol: f64) -> VerificationReport {
    let mut violations = Vec::new();
    let links = graph.links();
    let k = solution.commodities.len();
    if solution.flows.len() != k || solution.demands.len() != k {
        violations.push(Violation::Shape(format!(
            "{k} commodities but {} flow vectors and {} demands",
            solution.flows.len(),
            solution.demands.len()
        )));
        return VerificationReport { violations };
    }
    if let Some(bad) = solution.flows.iter().position(|f| f.len() != 2 * links.len()) {
        violations.push(Violation::Shape(format!(
            "commodity {bad} has {} directed edges, expected {}",
            solution.flows[bad].len(),
            2 * links.len()
        )));
        return VerificationReport { violations };
    }
    let id = |v: usize| graph.node(v).id.clone();

    for (i, f) in solution.flows.iter().enumerate() {
        for (e, &bits) in f.iter().enumerate() {
            if bits < -tol || bits.is_nan() {
                let (from, to) = edge_endpoints(graph, e);
                violations.push(Violation::NegativeFlow {
                    commodity: i,
                    from: id(from),
                    to: id(to),
                    bits,
                });
            }
        }
        if solution.demands[i] < -tol || solution.demands[i].is_nan() {
            violations.push(Violation::NegativeDemand {
                commodity: i,
                bits: solution.demands[i],
            });
        }
    }

    for (j, link) in links.iter().enumerate() {
        let used: f64 = solution.flows.iter().map(|f| f[2 * j] + f[2 * j + 1]).sum();
        if used > link.pool_bits as f64 + tol {
            violations.push(Violation::Capacity {
                a: id(link.a),
                b: id(link.b),
                used,
                pool: link.pool_bits,
            });
        }
    }

    for (i, c) in solution.commodities.iter().enumerate() {
        let mut net = vec![0.0; graph.nodes().len()];
        for (e, &bits) in solution.flows[i].iter().enumerate() {
            let (tail, head) = edge_endpoints(graph, e);
            net[tail] += bits;
            net[head] -= bits;
        }
        for (v, &out) in net.iter().enumerate() {
            let expected = if v == c.source {
                solution.demands[i]
            } else if v == c.sink {
                -solution.demands[i]
            } else {
                0.0
            };
            if (out - expected).abs() > tol {
                violations.push(Violation::Conservation {
                    commodity: i,
                    node: id(v),
                    imbalance: out - expected,
                });
            }
        }
    }
    VerificationReport { violations }
}

/// Flags commodities that pass through a ground station other than their
/// own endpoints.
pub fn ground_relay_violations(graph: &QkdGraph, solution: &FlowSolution) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, c) in solution.commodities.iter().enumerate() {
        let mut flagged = vec![false; graph.nodes().len()];
        for (e, &bits) in solution.flows[i].iter().enumerate() {
            if bits <= FLOW_EPS {
                continue;
            }
            let (tail, head) = edge_endpoints(graph, e);
            for v in [tail, head] {
                if graph.node(v).kind.is_ground() && v != c.source && v != c.sink && !flagged[v] {
                    flagged[v] = true;
                    out.push(Violation::GroundRelay {
                        commodity: i,
                        node: graph.node(v).id.clone(),
                    });
                }
            }
        }
    }
    out
}
