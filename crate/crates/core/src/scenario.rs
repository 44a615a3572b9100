//! Scenario files, planning runs and their reports.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "nodes": [{"id": "A", "kind": "gs"}, {"id": "L1", "kind": "leo"}],
//!   "links": [
//!     {"a": "A", "b": "L1", "rate_bps": 1000},
//!     {"a": "L1", "b": "B", "preset": "leo-gs", "distance_m": 1.0e6}
//!   ],
//!   "elapsed_seconds": 60,
//!   "requests": [{"src": "A", "dst": "B", "demand_bits": 600}],
//!   "options": {"gs_relay": true}
//! }
//! ```
//!
//! Links give either a key rate directly or a preset plus distance, in
//! which case the rate comes from the link budget and the decoy-state model.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoy_rate::{self, ChannelObservables, DecoyProtocolParams, RateError};
use crate::flow_router::{
    self, edge_endpoints, Commodity, Demand, FlowSolution, PairSummary, RouteError, RouterOptions,
};
use crate::link_budget::{self, LinkError, LinkPreset};
use crate::lp_core::{LpError, LpStatus, SolverOptions};
use crate::net_model::{LinkSpec, NetError, Node, NodeKind, QkdGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
/// A computed solution failed re-verification. Should never happen.
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("{field}: {source}")]
    Domain {
        field: String,
        #[source]
        source: LinkError,
    },
    #[error("invalid protocol parameter: {0}")]
    Protocol(#[from] RateError),
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error("solution failed verification:\n{0}")]
    Verification(String),
    #[error("malformed flow CSV: {0}")]
    Csv(String),
}

impl ScenarioError {
    fn field(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Json { .. } | Self::Field { .. } | Self::Protocol(_) | Self::Csv(_) => EXIT_INPUT,
            Self::Domain { source, .. } => match source {
                LinkError::NearField { .. } | LinkError::Rate(_) => EXIT_DOMAIN,
                _ => EXIT_INPUT,
            },
            Self::Solver(_) => EXIT_DOMAIN,
            Self::Verification(_) => EXIT_INTERNAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub a: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestEntry {
    pub src: String,
    pub dst: String,
    /// Required for min-resource planning; a cap for the sequential
    /// baseline; ignored by max-min planning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_bits: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    #[serde(default = "yes")]
    pub gs_relay: bool,
}

fn yes() -> bool {
    true
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { gs_relay: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
    pub elapsed_seconds: f64,
    #[serde(default)]
    pub requests: Vec<RequestEntry>,
    #[serde(default)]
    pub options: ScenarioOptions,
}

/// Where a link's key rate came from.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    Given,
    Preset { preset: LinkPreset, distance_m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    /// Graph with pools already accumulated over the elapsed time.
    pub graph: QkdGraph,
    pub rate_sources: Vec<RateSource>,
    pub requests: Vec<RequestEntry>,
    pub options: ScenarioOptions,
    pub elapsed_seconds: f64,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks references and fields, computes preset link rates and fills
    /// the key pools.
    pub fn resolve(&self, protocol: &DecoyProtocolParams) -> Result<ResolvedScenario, ScenarioError> {
        protocol.validate()?;
        if !(self.elapsed_seconds.is_finite() && self.elapsed_seconds >= 0.0) {
            return Err(ScenarioError::field(
                "elapsed_seconds",
                format!("must be a non-negative number, got {}", self.elapsed_seconds),
            ));
        }

        let mut kinds = std::collections::HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.is_empty() {
                return Err(ScenarioError::field(format!("nodes[{i}].id"), "empty id"));
            }
            if kinds.insert(n.id.as_str(), n.kind).is_some() {
                return Err(ScenarioError::field(format!("nodes[{i}].id"), format!("duplicate node `{}`", n.id)));
            }
        }

        let mut specs = Vec::with_capacity(self.links.len());
        let mut sources = Vec::with_capacity(self.links.len());
        let mut seen = std::collections::HashSet::new();
        for (i, l) in self.links.iter().enumerate() {
            let at = |f: &str| format!("links[{i}].{f}");
            for (f, end) in [("a", &l.a), ("b", &l.b)] {
                if !kinds.contains_key(end.as_str()) {
                    return Err(ScenarioError::field(at(f), format!("unknown node `{end}`")));
                }
            }
            if l.a == l.b {
                return Err(ScenarioError::field(at("b"), "self-loop"));
            }
            if kinds[l.a.as_str()].is_ground() && kinds[l.b.as_str()].is_ground() {
                return Err(ScenarioError::field(
                    at("b"),
                    format!("ground stations `{}` and `{}` cannot share a link", l.a, l.b),
                ));
            }
            let key = if l.a < l.b { (&l.a, &l.b) } else { (&l.b, &l.a) };
            if !seen.insert(key) {
                return Err(ScenarioError::field(at("b"), format!("duplicate link {}-{}", l.a, l.b)));
            }
            let (rate, source) = match (l.rate_bps, &l.preset, l.distance_m) {
                (Some(r), None, None) => {
                    if !(r.is_finite() && r >= 0.0) {
                        return Err(ScenarioError::field(at("rate_bps"), format!("must be non-negative, got {r}")));
                    }
                    (r, RateSource::Given)
                }
                (None, Some(name), Some(d)) => {
                    let preset = LinkPreset::from_name(name)
                        .map_err(|e| ScenarioError::Domain { field: at("preset"), source: e })?;
                    let rate = link_budget::preset_key_rate(preset, d, protocol)
                        .map_err(|e| ScenarioError::Domain { field: at("distance_m"), source: e })?;
                    (rate, RateSource::Preset { preset, distance_m: d })
                }
                (None, Some(_), None) => return Err(ScenarioError::field(at("distance_m"), "required with `preset`")),
                (None, None, Some(_)) => return Err(ScenarioError::field(at("preset"), "required with `distance_m`")),
                (None, None, None) => {
                    return Err(ScenarioError::field(at("rate_bps"), "give `rate_bps` or `preset` + `distance_m`"))
                }
                (Some(_), _, _) => {
                    return Err(ScenarioError::field(at("rate_bps"), "cannot be combined with `preset`/`distance_m`"))
                }
            };
            specs.push(LinkSpec::new(l.a.clone(), l.b.clone(), rate));
            sources.push(source);
        }

        let mut pairs = std::collections::HashSet::new();
        for (i, r) in self.requests.iter().enumerate() {
            let at = |f: &str| format!("requests[{i}].{f}");
            for (f, end) in [("src", &r.src), ("dst", &r.dst)] {
                match kinds.get(end.as_str()) {
                    None => return Err(ScenarioError::field(at(f), format!("unknown node `{end}`"))),
                    Some(k) if !k.is_ground() => {
                        return Err(ScenarioError::field(at(f), format!("`{end}` is not a ground station")))
                    }
                    _ => {}
                }
            }
            if r.src == r.dst {
                return Err(ScenarioError::field(at("dst"), "source and destination are the same"));
            }
            let key = if r.src < r.dst { (&r.src, &r.dst) } else { (&r.dst, &r.src) };
            if !pairs.insert(key) {
                return Err(ScenarioError::field(
                    at("dst"),
                    format!("pair {}-{} is requested twice", r.src, r.dst),
                ));
            }
        }

        let nodes = self.nodes.iter().map(|n| Node::new(n.id.clone(), n.kind)).collect();
        let graph = QkdGraph::new(nodes, specs)
            .and_then(|g| g.accumulate_pools(self.elapsed_seconds))
            .map_err(|e: NetError| ScenarioError::field("links", e))?;
        Ok(ResolvedScenario {
            graph,
            rate_sources: sources,
            requests: self.requests.clone(),
            options: self.options,
            elapsed_seconds: self.elapsed_seconds,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanObjective {
    Mmd,
    Mr,
    Dijkstra,
}

impl PlanObjective {
    pub const ALL: [PlanObjective; 3] = [Self::Mmd, Self::Mr, Self::Dijkstra];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mmd => "mmd",
            Self::Mr => "mr",
            Self::Dijkstra => "dijkstra",
        }
    }
}

impl fmt::Display for PlanObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlanObjective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown objective `{s}` (expected mmd, mr or dijkstra)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRow {
    pub a: String,
    pub b: String,
    pub rate_bps: f64,
    pub pool_bits: u64,
    pub used_bits: f64,
    pub source: RateSource,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub objective: PlanObjective,
    pub elapsed_seconds: f64,
    pub gs_relay: bool,
    pub graph: QkdGraph,
    pub links: Vec<LinkRow>,
    pub solution: FlowSolution,
    pub pairs: Vec<PairSummary>,
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn status(&self) -> LpStatus {
        self.solution.status
    }

    pub fn exit_code(&self) -> i32 {
        if self.solution.is_optimal() {
            EXIT_OK
        } else {
            EXIT_INFEASIBLE
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let sol = &self.solution;
        let _ = writeln!(s, "# Plan `{}`\n", self.name);
        let _ = writeln!(
            s,
            "objective: {} | status: {} | elapsed: {} s | gs_relay: {}\n",
            self.objective,
            status_word(sol.status),
            self.elapsed_seconds,
            self.gs_relay
        );

        s.push_str("## Links\n\n| link | source | rate (bps) | pool (bits) | used (bits) |\n|---|---|---:|---:|---:|\n");
        for l in &self.links {
            let source = match &l.source {
                RateSource::Given => "given".to_string(),
                RateSource::Preset { preset, distance_m } => format!("{preset} @ {} km", distance_m / 1e3),
            };
            let _ = writeln!(
                s,
                "| {}-{} | {} | {:.3} | {} | {} |",
                l.a,
                l.b,
                source,
                l.rate_bps,
                l.pool_bits,
                fmt_bits(l.used_bits)
            );
        }

        s.push_str("\n## Requests handled\n\n| pair | requested | fulfilled | consumed | consumption rate |\n|---|---:|---:|---:|---:|\n");
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "| {}-{} | {} | {} | {} | {:.3} |",
                p.src,
                p.dst,
                p.requested.map_or_else(|| "-".into(), |d| d.to_string()),
                fmt_bits(p.fulfilled),
                fmt_bits(p.consumed),
                p.consumption_rate
            );
        }

        s.push_str("\n## Totals\n\n| min demand | delivered | consumed | consumption rate |\n|---:|---:|---:|---:|\n");
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.3} |",
            fmt_bits(sol.min_demand()),
            fmt_bits(sol.delivered()),
            fmt_bits(sol.consumed()),
            sol.consumption_rate()
        );
        if let Some(lp) = sol.relaxation_objective {
            let _ = writeln!(s, "\nLP relaxation objective: {lp:.6}");
        }
        if !sol.is_optimal() {
            let _ = writeln!(s, "\nNo routing exists: the requests are {}.", status_word(sol.status));
        }
        s
    }

    /// One row per commodity (its fulfilled demand, no edge) followed by
    /// one row per directed edge that carries flow.
    pub fn flows_csv(&self) -> String {
        write_flow_csv(&self.graph, &self.solution)
    }

    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["pair", "requested_bits", "fulfilled_demand", "consumed", "consumption_rate"])
            .unwrap();
        for p in &self.pairs {
            w.write_record([
                format!("{}-{}", p.src, p.dst),
                p.requested.map_or_else(String::new, |d| d.to_string()),
                p.fulfilled.to_string(),
                p.consumed.to_string(),
                p.consumption_rate.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

fn status_word(status: LpStatus) -> &'static str {
    match status {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
    }
}

fn fmt_bits(v: f64) -> String {
    // folds -0.0 into 0
    let v = v + 0.0;
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

const FLOW_HEADER: [&str; 7] = [
    "commodity",
    "commodity_src",
    "commodity_dst",
    "requested_bits",
    "edge_from",
    "edge_to",
    "bits",
];

pub fn write_flow_csv(graph: &QkdGraph, solution: &FlowSolution) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FLOW_HEADER).unwrap();
    let id = |v: usize| graph.node(v).id.as_str();
    for (i, c) in solution.commodities.iter().enumerate() {
        let requested = c.fixed_demand().map_or_else(String::new, |d| d.to_string());
        let head = [i.to_string(), id(c.source).into(), id(c.sink).into(), requested];
        w.write_record(head.iter().map(String::as_str).chain(["", "", &solution.demands[i].to_string()]))
            .unwrap();
        for (e, &bits) in solution.flows[i].iter().enumerate() {
            if bits == 0.0 {
                continue;
            }
            let (from, to) = edge_endpoints(graph, e);
            let bits = bits.to_string();
            w.write_record(head.iter().map(String::as_str).chain([id(from), id(to), &bits]))
                .unwrap();
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Parses the output of [`write_flow_csv`] back into flows and demands.
/// Status is taken as optimal; objective fields are not stored.
pub fn read_flow_csv(graph: &QkdGraph, text: &str) -> Result<FlowSolution, ScenarioError> {
    let bad = |row: usize, msg: &dyn fmt::Display| ScenarioError::Csv(format!("row {row}: {msg}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| ScenarioError::Csv(e.to_string()))?.clone();
    if header.iter().ne(FLOW_HEADER) {
        return Err(ScenarioError::Csv(format!("unexpected header {:?}", header)));
    }
    let links = graph.links().len();
    let mut commodities: Vec<Commodity> = Vec::new();
    let mut flows: Vec<Vec<f64>> = Vec::new();
    let mut demands: Vec<f64> = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let row = n + 2;
        let rec = rec.map_err(|e| bad(row, &e))?;
        let idx: usize = rec[0].parse().map_err(|e| bad(row, &e))?;
        let bits: f64 = rec[6].parse().map_err(|e| bad(row, &e))?;
        let node = |s: &str| graph.node_index(s).map_err(|e| bad(row, &e));
        if rec[4].is_empty() && rec[5].is_empty() {
            if idx != commodities.len() {
                return Err(bad(row, &format!("commodity {idx} out of order")));
            }
            let demand = if rec[3].is_empty() {
                Demand::Variable
            } else {
                Demand::Fixed(rec[3].parse().map_err(|e| bad(row, &e))?)
            };
            commodities.push(Commodity {
                source: node(&rec[1])?,
                sink: node(&rec[2])?,
                demand,
            });
            flows.push(vec![0.0; 2 * links]);
            demands.push(bits);
        } else {
            if idx + 1 != commodities.len() {
                return Err(bad(row, &format!("flow row for commodity {idx} outside its block")));
            }
            let (from, to) = (node(&rec[4])?, node(&rec[5])?);
            let j = graph
                .find_link(from, to)
                .ok_or_else(|| bad(row, &format!("no link {}-{}", &rec[4], &rec[5])))?;
            let e = if graph.links()[j].a == from { 2 * j } else { 2 * j + 1 };
            flows[idx][e] = bits;
        }
    }
    let mut sol = FlowSolution {
        commodities,
        flows,
        demands,
        objective: 0.0,
        status: LpStatus::Optimal,
        relaxation_objective: None,
    };
    sol.objective = sol.min_demand();
    Ok(sol)
}

/// Loads, routes and verifies a scenario.
pub fn run_plan(
    scenario: &ScenarioFile,
    name: &str,
    objective: PlanObjective,
    protocol: &DecoyProtocolParams,
    solver: &SolverOptions,
) -> Result<RunReport, ScenarioError> {
    let started = Instant::now();
    let resolved = scenario.resolve(protocol)?;
    let graph = &resolved.graph;
    let opts = RouterOptions {
        gs_relay: resolved.options.gs_relay,
        solver: *solver,
    };
    let route_err = |e: RouteError| match e {
        RouteError::Lp(e) => ScenarioError::Solver(e),
        other => ScenarioError::field("requests", other),
    };

    let solution = match objective {
        PlanObjective::Mmd => {
            let pairs: Vec<(String, String)> = if resolved.requests.is_empty() {
                flow_router::all_ground_pairs(graph)
            } else {
                resolved.requests.iter().map(|r| (r.src.clone(), r.dst.clone())).collect()
            };
            flow_router::route_mmd(graph, &pairs, &opts).map_err(route_err)?
        }
        PlanObjective::Mr => {
            let mut commodities = Vec::with_capacity(resolved.requests.len());
            for (i, r) in resolved.requests.iter().enumerate() {
                let bits = r.demand_bits.ok_or_else(|| {
                    ScenarioError::field(
                        format!("requests[{i}].demand_bits"),
                        "required for minimum-resource planning",
                    )
                })?;
                commodities.push(Commodity::fixed(graph, &r.src, &r.dst, bits).map_err(route_err)?);
            }
            flow_router::route_mr(graph, &commodities, None, &opts).map_err(route_err)?
        }
        PlanObjective::Dijkstra => {
            let commodities = resolved
                .requests
                .iter()
                .map(|r| {
                    let demand = r.demand_bits.map_or(Demand::Variable, Demand::Fixed);
                    Commodity::between(graph, &r.src, &r.dst, demand)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(route_err)?;
            flow_router::route_sequential_dijkstra(graph, &commodities, &opts).map_err(route_err)?
        }
    };

    let mut report = flow_router::verify_solution(graph, &solution);
    if !opts.gs_relay {
        report.violations.extend(flow_router::ground_relay_violations(graph, &solution));
    }
    if !report.passed() {
        return Err(ScenarioError::Verification(report.to_string()));
    }

    let links = graph
        .links()
        .iter()
        .enumerate()
        .map(|(j, l)| LinkRow {
            a: graph.node(l.a).id.clone(),
            b: graph.node(l.b).id.clone(),
            rate_bps: l.rate_bps,
            pool_bits: l.pool_bits,
            used_bits: solution.link_usage(j),
            source: resolved.rate_sources[j].clone(),
        })
        .collect();
    let pairs = solution.summary(graph);
    Ok(RunReport {
        name: name.to_string(),
        objective,
        elapsed_seconds: resolved.elapsed_seconds,
        gs_relay: opts.gs_relay,
        graph: resolved.graph.clone(),
        links,
        solution,
        pairs,
        wall_clock: started.elapsed(),
    })
}

/// Reads a scenario file and plans it; the report name is the file stem.
pub fn plan_file(path: &Path, objective: PlanObjective, solver: &SolverOptions) -> Result<RunReport, ScenarioError> {
    let scenario = ScenarioFile::load(path)?;
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    run_plan(&scenario, &name, objective, &DecoyProtocolParams::default(), solver)
}

/// One column of the rate table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub preset: LinkPreset,
    pub wavelength: f64,
    pub distance: f64,
    pub diffraction_db: f64,
    pub total_db: f64,
    pub observables: ChannelObservables,
    /// Whether the gains were supplied rather than computed from the budget.
    pub measured: bool,
    pub key_rate_bps: f64,
}

impl RateReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let o = &self.observables;
        let _ = writeln!(s, "preset        {}", self.preset);
        let _ = writeln!(s, "wavelength    {:.0} nm", self.wavelength * 1e9);
        let _ = writeln!(s, "distance      {} km", self.distance / 1e3);
        let _ = writeln!(s, "diffraction   {:.2} dB", self.diffraction_db);
        let _ = writeln!(s, "total loss    {:.2} dB", self.total_db);
        let tag = if self.measured { " (measured)" } else { "" };
        let _ = writeln!(s, "Q_mu          {:.3e}{tag}", o.q_mu);
        let _ = writeln!(s, "E_mu          {:.2} %", o.e_mu * 100.0);
        let _ = writeln!(s, "Q_nu          {:.3e}{tag}", o.q_nu);
        let _ = writeln!(s, "E_nu          {:.2} %", o.e_nu * 100.0);
        let _ = writeln!(s, "R_bb84        {:.1} bps", self.key_rate_bps);
        s
    }
}

/// Evaluates a preset link. `measured` replaces the modelled gains
/// `(Q_mu, Q_nu)` while the loss figures still describe the budget.
pub fn run_rate(
    preset_name: &str,
    distance: Option<f64>,
    protocol: &DecoyProtocolParams,
    measured: Option<(f64, f64)>,
) -> Result<RateReport, ScenarioError> {
    let preset = LinkPreset::from_name(preset_name).map_err(|e| ScenarioError::Domain {
        field: "preset".into(),
        source: e,
    })?;
    protocol.validate()?;
    let distance = distance.unwrap_or_else(|| preset.default_distance());
    let link = preset.params().with_distance(distance);
    let summary = link_budget::summarize(&link, protocol).map_err(|e| ScenarioError::Domain {
        field: "distance".into(),
        source: e,
    })?;
    let (observables, key_rate_bps) = match measured {
        None => (summary.observables, summary.key_rate_bps),
        Some((q_mu, q_nu)) => {
            let obs = ChannelObservables::from_gains(q_mu, q_nu, protocol)?;
            (obs, decoy_rate::key_rate_from_observables(&obs, protocol)?)
        }
    };
    Ok(RateReport {
        preset,
        wavelength: summary.wavelength,
        distance,
        diffraction_db: summary.diffraction_db,
        total_db: summary.total_db,
        observables,
        measured: measured.is_some(),
        key_rate_bps,
    })
}
