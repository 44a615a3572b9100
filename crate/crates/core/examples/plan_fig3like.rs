//! Plan the bundled five-station network with all three objectives.
//!
//! ```bash
//! cargo run --example plan_fig3like
//! ```

use std::path::Path;

use qkdplan::lp_core::SolverOptions;
use qkdplan::scenario::{plan_file, PlanObjective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig3like.json");
    for objective in PlanObjective::ALL {
        let report = plan_file(&path, objective, &SolverOptions::default())?;
        let sol = &report.solution;
        println!(
            "{:<9} status {:?}  min demand {:>5}  delivered {:>6}  consumed {:>6}  rate {:.3}",
            objective.to_string(),
            sol.status,
            sol.min_demand(),
            sol.delivered(),
            sol.consumed(),
            sol.consumption_rate()
        );
    }

    let mmd = plan_file(&path, PlanObjective::Mmd, &SolverOptions::default())?;
    println!("\n{}", mmd.to_markdown());
    Ok(())
}
