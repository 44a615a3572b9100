//! The simplex solver on its own: a small production-planning LP,
//! an infeasible one and an unbounded one.
//!
//! ```bash
//! cargo run --example lp_solve
//! ```

use qkdplan::lp_core::{solve, LinearProgram, SolverOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = SolverOptions::default();

    // maximise 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18
    let mut lp = LinearProgram::new(2);
    lp.objective = vec![-3.0, -5.0];
    lp.add_ub(vec![1.0, 0.0], 4.0);
    lp.add_ub(vec![0.0, 2.0], 12.0);
    lp.add_ub(vec![3.0, 2.0], 18.0);
    let s = solve(&lp, &opts)?;
    println!("{:?}: x = {:?}, value {} after {} pivots", s.status, s.x, -s.objective_value, s.iterations);

    let mut infeasible = LinearProgram::new(1);
    infeasible.add_ub(vec![1.0], 1.0);
    infeasible.add_eq(vec![1.0], 2.0);
    println!("x <= 1, x = 2: {:?}", solve(&infeasible, &opts)?.status);

    let mut unbounded = LinearProgram::new(2);
    unbounded.objective = vec![-1.0, 0.0];
    unbounded.add_ub(vec![-1.0, 1.0], 1.0);
    println!("max x, y - x <= 1: {:?}", solve(&unbounded, &opts)?.status);
    Ok(())
}
