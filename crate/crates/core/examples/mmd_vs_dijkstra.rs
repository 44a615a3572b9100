//! Two stations competing for the same uplinks. The sequential baseline
//! hands everything to whichever pair comes first; max-min splits it.
//!
//! ```bash
//! cargo run --example mmd_vs_dijkstra
//! ```

use std::path::Path;

use qkdplan::flow_router::{route_mmd, route_sequential_dijkstra, Commodity, FlowSolution, RouterOptions};
use qkdplan::net_model::QkdGraph;
use qkdplan::scenario::ScenarioFile;

fn show(g: &QkdGraph, label: &str, sol: &FlowSolution) {
    let parts: Vec<String> = sol
        .summary(g)
        .iter()
        .map(|p| format!("{}-{} {:>6}", p.src, p.dst, p.fulfilled))
        .collect();
    println!("{label:<22} {}", parts.join("   "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/contention.json");
    let g = ScenarioFile::load(&path)?.resolve(&Default::default())?.graph;
    let opts = RouterOptions::default();

    for order in [[("C", "A"), ("B", "A")], [("B", "A"), ("C", "A")]] {
        let uncapped: Vec<Commodity> = order
            .iter()
            .map(|(s, t)| Commodity::variable(&g, s, t))
            .collect::<Result<_, _>>()?;
        let pairs: Vec<(String, String)> = order.iter().map(|(s, t)| (s.to_string(), t.to_string())).collect();
        println!("order {:?}", order);
        show(&g, "  sequential dijkstra", &route_sequential_dijkstra(&g, &uncapped, &opts)?);
        show(&g, "  max-min", &route_mmd(&g, &pairs, &opts)?);
    }
    Ok(())
}
