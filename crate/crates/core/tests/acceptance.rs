//! Exit criteria. Runs without the libtest harness so every criterion
//! prints a PASS/FAIL line; the process fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use qkdplan::decoy_rate::{self, qber_from_gain, ChannelObservables, DecoyProtocolParams};
use qkdplan::flow_router::{
    ground_relay_violations, route_mmd, route_mr, route_sequential_dijkstra, solve_relaxation,
    verify_solution, Commodity, FlowSolution, Objective, RouterOptions,
};
use qkdplan::link_budget::{self, LinkPreset};
use qkdplan::lp_core::{LpStatus, SolverOptions};
use qkdplan::net_model::QkdGraph;
use qkdplan::scenario::{run_plan, PlanObjective, RequestEntry, ScenarioFile};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn rate_model_golden() -> Outcome {
    let started = Instant::now();
    let protocol = DecoyProtocolParams::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (preset, tol) in [(LinkPreset::LeoGs, 0.10), (LinkPreset::GeoGs, 0.10), (LinkPreset::LeoLeo, 0.40)] {
        let link = preset.params().with_distance(preset.default_distance());
        let summary = link_budget::summarize(&link, &protocol).unwrap();
        let want = preset.reference().q_mu;
        let err = rel_err(summary.observables.q_mu, want);
        let ok = err <= tol;
        pass &= ok;
        parts.push(format!(
            "{preset} Q_mu {:.3e} vs {want:.2e} ({:+.1}%, tol {:.0}%) {}",
            summary.observables.q_mu,
            (summary.observables.q_mu / want - 1.0) * 100.0,
            tol * 100.0,
            if ok { "ok" } else { "OUT" }
        ));
    }
    let elapsed = started.elapsed();
    let fast = elapsed < Duration::from_secs(1);
    parts.push(format!("runtime {:.1} ms", elapsed.as_secs_f64() * 1e3));
    outcome(pass && fast, parts.join("; "))
}

fn qber_identity() -> Outcome {
    let protocol = DecoyProtocolParams::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in LinkPreset::ALL {
        let r = preset.reference();
        for (label, gain, printed) in [("E_mu", r.q_mu, r.e_mu), ("E_nu", r.q_nu, r.e_nu)] {
            let e = qber_from_gain(gain, &protocol);
            let ok = rel_err(e, printed) <= 0.02;
            pass &= ok;
            parts.push(format!(
                "{preset} {label} {:.4}% vs {:.2}% {}",
                e * 100.0,
                printed * 100.0,
                if ok { "ok" } else { "OUT" }
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn key_rate_magnitudes() -> Outcome {
    let protocol = DecoyProtocolParams::default();
    let bands = [
        (LinkPreset::LeoGs, 500.0, 2000.0),
        (LinkPreset::GeoGs, 5.0, 20.0),
        (LinkPreset::LeoLeo, 20.0, 80.0),
    ];
    let mut pass = protocol.pulse_rate == 1e7;
    let mut parts = Vec::new();
    for (preset, lo, hi) in bands {
        let r = preset.reference();
        let obs = ChannelObservables {
            q_mu: r.q_mu,
            e_mu: r.e_mu,
            q_nu: r.q_nu,
            e_nu: r.e_nu,
        };
        let rate = decoy_rate::key_rate_from_observables(&obs, &protocol).unwrap();
        let ok = (lo..=hi).contains(&rate);
        pass &= ok;
        let modelled = link_budget::preset_key_rate(preset, preset.default_distance(), &protocol).unwrap();
        parts.push(format!(
            "{preset} {rate:.1} bps in [{lo}, {hi}] {} (budget-model gains give {modelled:.1})",
            if ok { "ok" } else { "OUT" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn fixture_commodities(graph: &QkdGraph, inst: &common::FixtureInstance, fixed: bool) -> Vec<Commodity> {
    inst.commodities
        .iter()
        .map(|c| {
            if fixed {
                Commodity::fixed(graph, &c.src, &c.dst, c.demand).unwrap()
            } else {
                Commodity::variable(graph, &c.src, &c.dst).unwrap()
            }
        })
        .collect()
}

fn lp_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let instances = common::flow_oracle_fixture();
    let mut failures = Vec::new();
    let (mut mr_feasible, mut integral_checked) = (0, 0);
    for (n, inst) in instances.iter().enumerate() {
        let graph = inst.graph();
        let opts = RouterOptions {
            gs_relay: inst.gs_relay,
            ..RouterOptions::default()
        };
        let k = inst.commodities.len() as f64;
        let variable = fixture_commodities(&graph, inst, false);
        let fixed = fixture_commodities(&graph, inst, true);
        let pairs: Vec<(usize, usize)> = variable.iter().map(|c| (c.source, c.sink)).collect();
        let oracle = common::IntegralOracle::new(&graph, &pairs, inst.gs_relay);

        let frac = solve_relaxation(&graph, &variable, &Objective::MaxMinDemand, &opts).unwrap();
        if (frac.objective - inst.mmd_optimum).abs() > 1e-6 {
            failures.push(format!("#{n} mmd {} vs {}", frac.objective, inst.mmd_optimum));
        }
        let frac = solve_relaxation(&graph, &fixed, &Objective::MinResource { edge_weights: None }, &opts).unwrap();
        match inst.mr_optimum {
            Some(opt) => {
                mr_feasible += 1;
                if !frac.is_optimal() || (frac.objective - opt).abs() > 1e-6 {
                    failures.push(format!("#{n} mr {:?} {} vs {opt}", frac.status, frac.objective));
                }
            }
            None if frac.status != LpStatus::Infeasible => {
                failures.push(format!("#{n} mr should be infeasible, got {:?}", frac.status))
            }
            None => {}
        }

        let id_pairs: Vec<(&str, &str)> = inst.commodities.iter().map(|c| (c.src.as_str(), c.dst.as_str())).collect();
        let rounded = route_mmd(&graph, &id_pairs, &opts).unwrap();
        let best = oracle.max_min_demand() as f64;
        let got = rounded.min_demand();
        if !verify_solution(&graph, &rounded).passed() || !rounded.is_integral() {
            failures.push(format!("#{n} rounded mmd infeasible"));
        }
        if got > best || best - got > k {
            failures.push(format!("#{n} rounded mmd {got} vs integral optimum {best}"));
        }

        let rounded = route_mr(&graph, &fixed, None, &opts).unwrap();
        if !verify_solution(&graph, &rounded).passed() || !rounded.is_integral() {
            failures.push(format!("#{n} rounded mr infeasible"));
        }
        let demands: Vec<u64> = inst.commodities.iter().map(|c| c.demand).collect();
        if let (true, Some(best)) = (rounded.is_optimal(), oracle.min_cost(&demands)) {
            integral_checked += 1;
            let shortfall: f64 = demands.iter().zip(&rounded.demands).map(|(&d, &f)| d as f64 - f).sum();
            if shortfall > k {
                failures.push(format!("#{n} rounded mr misses {shortfall} bits"));
            }
            if rounded.consumed() > best as f64 + k {
                failures.push(format!("#{n} rounded mr spends {} vs integral optimum {best}", rounded.consumed()));
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = failures.is_empty() && instances.len() >= 200 && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} instances ({mr_feasible} with feasible fixed demands, {integral_checked} integral checks), {} mismatches, {:.1} s{}",
            instances.len(),
            failures.len(),
            elapsed.as_secs_f64(),
            failures.first().map_or(String::new(), |f| format!("; first: {f}"))
        ),
    )
}

struct RandomRun {
    graph: QkdGraph,
    pairs: Vec<(String, String)>,
    gs_relay: bool,
    demands: Vec<u64>,
}

fn random_run(rng: &mut StdRng) -> RandomRun {
    let graph = common::random_graph(rng, 8, 12, 30);
    let pairs = common::random_pairs(rng, &graph, 4);
    let demands = pairs.iter().map(|_| rng.gen_range(0..=15)).collect();
    RandomRun {
        graph,
        pairs,
        gs_relay: rng.gen_bool(0.8),
        demands,
    }
}

fn run_all_routers(run: &RandomRun) -> [FlowSolution; 3] {
    let g = &run.graph;
    let opts = RouterOptions {
        gs_relay: run.gs_relay,
        ..RouterOptions::default()
    };
    let fixed: Vec<Commodity> = run
        .pairs
        .iter()
        .zip(&run.demands)
        .map(|((a, b), &d)| Commodity::fixed(g, a, b, d).unwrap())
        .collect();
    let variable: Vec<Commodity> = run.pairs.iter().map(|(a, b)| Commodity::variable(g, a, b).unwrap()).collect();
    [
        route_mmd(g, &run.pairs, &opts).unwrap(),
        route_mr(g, &fixed, None, &opts).unwrap(),
        route_sequential_dijkstra(g, &variable, &opts).unwrap(),
    ]
}

fn constraint_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_c0de);
    let mut checked = 0;
    let mut failures = Vec::new();
    for n in 0..1000 {
        let run = random_run(&mut rng);
        for (router, sol) in ["mmd", "mr", "dijkstra"].iter().zip(run_all_routers(&run)) {
            let mut report = verify_solution(&run.graph, &sol);
            if !run.gs_relay {
                report.violations.extend(ground_relay_violations(&run.graph, &sol));
            }
            checked += 1;
            if !report.passed() {
                failures.push(format!("run {n} {router}: {}", report.violations[0]));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "1000 runs, {checked} solutions verified, {} violations{}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!("; first: {f}"))
        ),
    )
}

fn load_fig3like() -> ScenarioFile {
    ScenarioFile::load(&common::scenario_path("fig3like.json")).unwrap()
}

fn plan(scenario: &ScenarioFile, objective: PlanObjective) -> FlowSolution {
    run_plan(
        scenario,
        "acceptance",
        objective,
        &DecoyProtocolParams::default(),
        &SolverOptions::default(),
    )
    .unwrap()
    .solution
}

fn with_requests(base: &ScenarioFile, pairs: &[(&str, &str)]) -> ScenarioFile {
    let mut s = base.clone();
    s.requests = pairs
        .iter()
        .map(|(a, b)| RequestEntry {
            src: a.to_string(),
            dst: b.to_string(),
            demand_bits: None,
        })
        .collect();
    s
}

fn consumption_rate_bound() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xc0_5e);
    let mut low = Vec::new();
    let mut pairs_seen = 0;
    for n in 0..200 {
        let run = random_run(&mut rng);
        for sol in run_all_routers(&run) {
            for p in sol.summary(&run.graph) {
                let (a, b) = (run.graph.node_index(&p.src).unwrap(), run.graph.node_index(&p.dst).unwrap());
                if run.graph.find_link(a, b).is_none() && p.fulfilled > 0.0 {
                    pairs_seen += 1;
                    if p.consumption_rate < 2.0 {
                        low.push(format!("run {n} {}-{} rate {}", p.src, p.dst, p.consumption_rate));
                    }
                }
            }
        }
    }

    let fig = load_fig3like();
    let all = plan(&fig, PlanObjective::Mmd);
    let near = plan(&with_requests(&fig, &[("A", "B")]), PlanObjective::Mmd);
    let far = plan(&with_requests(&fig, &[("A", "D")]), PlanObjective::Mmd);
    let pass = low.is_empty()
        && all.consumption_rate() >= 2.0
        && near.consumption_rate() <= far.consumption_rate();
    outcome(
        pass,
        format!(
            "{pairs_seen} served pairs, {} below 2.0; fig3like all-pairs rate {:.3}, A-B {:.3} vs A-D {:.3}",
            low.len(),
            all.consumption_rate(),
            near.consumption_rate(),
            far.consumption_rate()
        ),
    )
}

fn by_pair(graph: &QkdGraph, sol: &FlowSolution) -> BTreeMap<(String, String), f64> {
    sol.summary(graph)
        .into_iter()
        .map(|p| {
            let key = if p.src < p.dst { (p.src, p.dst) } else { (p.dst, p.src) };
            (key, p.fulfilled)
        })
        .collect()
}

fn baseline_dominance() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let fig = load_fig3like();
    let mmd = plan(&fig, PlanObjective::Mmd).min_demand();
    let dij = plan(&fig, PlanObjective::Dijkstra).min_demand();
    pass &= mmd >= dij;
    parts.push(format!("fig3like min demand mmd {mmd} vs dijkstra {dij}"));

    let mut rng = StdRng::seed_from_u64(0xd1_75);
    let mut worse = 0;
    for _ in 0..50 {
        let run = random_run(&mut rng);
        let [mmd, _, dij] = run_all_routers(&run);
        if mmd.min_demand() < dij.min_demand() {
            worse += 1;
        }
    }
    pass &= worse == 0;
    parts.push(format!("random: mmd below dijkstra on {worse}/50"));

    let base = ScenarioFile::load(&common::scenario_path("contention.json")).unwrap();
    let graph = base.resolve(&DecoyProtocolParams::default()).unwrap().graph;
    let mut reversed = base.clone();
    reversed.requests.reverse();
    let dij_changes = by_pair(&graph, &plan(&base, PlanObjective::Dijkstra))
        != by_pair(&graph, &plan(&reversed, PlanObjective::Dijkstra));
    let mmd_stable =
        by_pair(&graph, &plan(&base, PlanObjective::Mmd)) == by_pair(&graph, &plan(&reversed, PlanObjective::Mmd));
    pass &= dij_changes && mmd_stable;
    parts.push(format!(
        "contention reorder: dijkstra changes {dij_changes}, mmd unchanged {mmd_stable}"
    ));
    outcome(pass, parts.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("rate model reproduces signal gains", rate_model_golden),
        ("QBER identity against printed gains", qber_identity),
        ("secret key rate magnitudes", key_rate_magnitudes),
        ("LP optima match oracle, rounding within k bits", lp_oracle_equivalence),
        ("all routers satisfy flow constraints", constraint_suite),
        ("consumption rate bound", consumption_rate_bound),
        ("max-min dominates sequential baseline", baseline_dominance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
