//! Serve fixed demands with the fewest key bits, then make the inter-satellite
//! links expensive and watch the routing move.
//!
//! ```bash
//! cargo run --example min_resource
//! ```

use std::path::Path;

use qkdplan::flow_router::{edge_endpoints, route_mr, Commodity, FlowSolution, RouterOptions};
use qkdplan::net_model::{NodeKind, QkdGraph};
use qkdplan::scenario::ScenarioFile;

fn routes(g: &QkdGraph, sol: &FlowSolution) {
    for (c, flows) in sol.commodities.iter().zip(&sol.flows) {
        let used: Vec<String> = flows
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > 0.0)
            .map(|(e, f)| {
                let (a, b) = edge_endpoints(g, e);
                format!("{}>{} {f}", g.node(a).id, g.node(b).id)
            })
            .collect();
        println!("  {}-{}: {}", g.node(c.source).id, g.node(c.sink).id, used.join(", "));
    }
    println!("  objective {}  consumed {}", sol.objective, sol.consumed());
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig3like.json");
    let g = ScenarioFile::load(&path)?.resolve(&Default::default())?.graph;
    let opts = RouterOptions::default();
    let wanted = [("A", "C", 2000), ("B", "D", 1500)];
    let commodities: Vec<Commodity> = wanted
        .iter()
        .map(|&(s, t, d)| Commodity::fixed(&g, s, t, d))
        .collect::<Result<_, _>>()?;

    println!("unit weights");
    routes(&g, &route_mr(&g, &commodities, None, &opts)?);

    let weights: Vec<f64> = g
        .links()
        .iter()
        .map(|l| {
            let isl = g.node(l.a).kind == NodeKind::Leo && g.node(l.b).kind == NodeKind::Leo;
            if isl { 5.0 } else { 1.0 }
        })
        .collect();
    println!("inter-satellite links weigh 5");
    routes(&g, &route_mr(&g, &commodities, Some(&weights), &opts)?);

    let greedy = [Commodity::fixed(&g, "A", "C", 100_000)?];
    let sol = route_mr(&g, &greedy, None, &opts)?;
    println!("A-C at 100000 bits: {:?}", sol.status);
    Ok(())
}
