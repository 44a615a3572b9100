//! From a fractional relaxation to an integral key allocation.
//!
//! ```bash
//! cargo run --example greedy_rounding
//! ```

use qkdplan::flow_router::{greedy_round, route_mmd, solve_relaxation, verify_solution, Commodity, Objective, RouterOptions};
use qkdplan::net_model::{LinkSpec, Node, NodeKind, QkdGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // three stations on one satellite; odd pools leave the relaxation at halves
    let g = QkdGraph::new(
        vec![
            Node::new("A", NodeKind::Gs),
            Node::new("B", NodeKind::Gs),
            Node::new("C", NodeKind::Gs),
            Node::new("L", NodeKind::Leo),
        ],
        vec![
            LinkSpec::with_pool("A", "L", 3),
            LinkSpec::with_pool("B", "L", 3),
            LinkSpec::with_pool("C", "L", 3),
        ],
    )?;
    let opts = RouterOptions::default();
    let commodities = vec![
        Commodity::variable(&g, "A", "B")?,
        Commodity::variable(&g, "A", "C")?,
        Commodity::variable(&g, "B", "C")?,
    ];

    let frac = solve_relaxation(&g, &commodities, &Objective::MaxMinDemand, &opts)?;
    println!("relaxation  demands {:?}", frac.demands);
    let rounded = greedy_round(&g, &frac, &opts);
    println!("rounded     demands {:?}", rounded.demands);
    println!("pools left  {:?}", rounded.residual_pools(&g));
    println!("verified    {}", verify_solution(&g, &rounded).passed());

    let pairs = [("A", "B"), ("A", "C"), ("B", "C")].map(|(a, b)| (a.to_string(), b.to_string()));
    let full = route_mmd(&g, &pairs, &opts)?;
    println!("route_mmd   min {} (relaxation {:?})", full.min_demand(), full.relaxation_objective);
    Ok(())
}
