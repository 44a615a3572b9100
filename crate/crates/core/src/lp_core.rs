//! Dense two-phase primal simplex.
//!
//! Solves
//!
//! ```text
//! minimize    c·x
//! subject to  A_ub x <= b_ub
//!             A_eq x  = b_eq
//!             lower <= x <= upper
//! ```
//!
//! Bounds are folded into the tableau by shifting/reflecting variables, and
//! finite upper bounds become extra inequality rows. Pricing starts with the
//! most negative reduced cost and switches permanently to Bland's rule once
//! a run of degenerate pivots is seen, which rules out cycling.

use thiserror::Error;

const DEGENERATE_STREAK_LIMIT: usize = 50;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {index} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility tolerance, relative to the largest right-hand side.
    pub feasibility_tol: f64,
    /// A reduced cost below `-optimality_tol` is an improving direction.
    pub optimality_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            max_iterations: 200_000,
        }
    }
}

impl SolverOptions {
    /// Environment variable that overrides the feasibility tolerance.
    pub const TOL_ENV: &'static str = "QKDPLAN_LP_TOL";

    /// Defaults, with the feasibility tolerance taken from `QKDPLAN_LP_TOL`
    /// when set. Anything but a positive finite number is an error.
    pub fn from_env() -> Result<Self, String> {
        let mut opts = Self::default();
        if let Ok(raw) = std::env::var(Self::TOL_ENV) {
            match raw.trim().parse::<f64>() {
                Ok(t) if t > 0.0 && t.is_finite() => opts.feasibility_tol = t,
                _ => return Err(format!("{} must be a positive number, got `{raw}`", Self::TOL_ENV)),
            }
        }
        Ok(opts)
    }
}

/// An LP in inequality/equality/bounds form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub ub_rows: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// `(lower, upper)`; either side may be infinite.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// `num_vars` variables, zero cost, bounds `[0, inf)`, no rows.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            ub_rows: Vec::new(),
            ub_rhs: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) {
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Dimension(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.ub_rows.len() != self.ub_rhs.len() {
            return Err(LpError::Dimension(format!(
                "{} inequality rows but {} right-hand sides",
                self.ub_rows.len(),
                self.ub_rhs.len()
            )));
        }
        if self.eq_rows.len() != self.eq_rhs.len() {
            return Err(LpError::Dimension(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_rows.len(),
                self.eq_rhs.len()
            )));
        }
        for (kind, rows) in [("inequality", &self.ub_rows), ("equality", &self.eq_rows)] {
            if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(LpError::Dimension(format!(
                    "{kind} row {i} has {} columns, expected {n}",
                    row.len()
                )));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        let rows_finite = |rows: &[Vec<f64>], rhs: &[f64]| {
            rows.iter().flatten().all(|v| v.is_finite()) && rhs.iter().all(|v| v.is_finite())
        };
        if !rows_finite(&self.ub_rows, &self.ub_rhs) {
            return Err(LpError::NonFinite("inequality rows"));
        }
        if !rows_finite(&self.eq_rows, &self.eq_rhs) {
            return Err(LpError::NonFinite("equality rows"));
        }
        for (index, &(lower, upper)) in self.bounds.iter().enumerate() {
            if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
                return Err(LpError::NonFinite("bounds"));
            }
            if lower > upper {
                return Err(LpError::InvertedBounds { index, lower, upper });
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.ub_rows.iter().zip(&self.ub_rhs) {
            worst = worst.max(dot(row, x) - b);
        }
        for (row, &b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row, x) - b).abs());
        }
        for (&xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is optimal.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

/// How an original variable is rebuilt from tableau columns:
/// `x = offset + sum(sign * y[col])`.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) x (cols + 1)`, last row = reduced costs, last column = rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Columns barred from entering (artificials in phase two).
    blocked: Vec<bool>,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let piv = self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= piv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&c| pivot_row[c] != 0.0).collect();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for &c in &nz {
                row[c] -= factor * pivot_row[c];
                if row[c].abs() < 1e-13 {
                    row[c] = 0.0;
                }
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Sets the cost row to reduced costs of `costs` w.r.t. the current basis.
    fn load_costs(&mut self, costs: &[f64]) {
        let w = self.width();
        let obj = self.rows * w;
        for c in 0..w {
            self.data[obj + c] = if c < self.cols { costs[c] } else { 0.0 };
        }
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for c in 0..w {
                self.data[obj + c] -= cb * self.data[r * w + c];
            }
        }
    }

    fn run(&mut self, opts: &SolverOptions) -> Result<PhaseOutcome, LpError> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(LpError::IterationLimit(opts.max_iterations));
            }
            let obj = self.rows;
            let mut entering = None;
            let mut best = -opts.optimality_tol;
            for c in 0..self.cols {
                if self.blocked[c] {
                    continue;
                }
                let d = self.at(obj, c);
                if bland {
                    if d < -opts.optimality_tol {
                        entering = Some(c);
                        break;
                    }
                } else if d < best {
                    best = d;
                    entering = Some(c);
                }
            }
            let Some(pc) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if (tie && self.basis[r] < self.basis[lr]) || (!tie && ratio < lratio) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leaving else {
                return Ok(PhaseOutcome::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_STREAK_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

/// Solves `lp`. Infeasibility and unboundedness are reported through
/// [`LpSolution::status`]; malformed input is an error.
pub fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();

    // Variable substitution y >= 0.
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        let map = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ny, hi - lo));
            }
            VarMap {
                offset: lo,
                cols: vec![(ny, 1.0)],
            }
        } else if hi.is_finite() {
            VarMap {
                offset: hi,
                cols: vec![(ny, -1.0)],
            }
        } else {
            ny += 1;
            VarMap {
                offset: 0.0,
                cols: vec![(ny - 1, 1.0), (ny, -1.0)],
            }
        };
        ny += 1;
        maps.push(map);
    }

    let substitute = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; ny];
        let mut b = rhs;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            b -= a * maps[j].offset;
            for &(col, sign) in &maps[j].cols {
                out[col] += a * sign;
            }
        }
        (out, b)
    };

    let mut ub: Vec<(Vec<f64>, f64)> = lp
        .ub_rows
        .iter()
        .zip(&lp.ub_rhs)
        .map(|(r, &b)| substitute(r, b))
        .collect();
    for &(col, width) in &bound_rows {
        let mut row = vec![0.0; ny];
        row[col] = 1.0;
        ub.push((row, width));
    }
    let eq: Vec<(Vec<f64>, f64)> = lp
        .eq_rows
        .iter()
        .zip(&lp.eq_rhs)
        .map(|(r, &b)| substitute(r, b))
        .collect();

    let mut costs_y = vec![0.0; ny];
    let mut cost_offset = 0.0;
    for (j, map) in maps.iter().enumerate() {
        cost_offset += lp.objective[j] * map.offset;
        for &(col, sign) in &map.cols {
            costs_y[col] += lp.objective[j] * sign;
        }
    }

    let m = ub.len() + eq.len();
    let n_slack = ub.len();
    let needs_artificial: Vec<bool> = ub
        .iter()
        .map(|(_, b)| *b < 0.0)
        .chain(eq.iter().map(|_| true))
        .collect();
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let cols = ny + n_slack + n_art;
    let w = cols + 1;

    let mut tab = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * w],
        basis: vec![0; m],
        blocked: vec![false; cols],
        iterations: 0,
    };
    let scale = ub
        .iter()
        .chain(&eq)
        .map(|(_, b)| b.abs())
        .fold(1.0f64, f64::max);

    let mut next_art = ny + n_slack;
    for (r, (row, b)) in ub.iter().chain(&eq).enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        let base = r * w;
        for (c, &a) in row.iter().enumerate() {
            tab.data[base + c] = sign * a;
        }
        tab.data[base + cols] = sign * b;
        if r < n_slack {
            tab.data[base + ny + r] = sign;
        }
        if needs_artificial[r] {
            tab.data[base + next_art] = 1.0;
            tab.basis[r] = next_art;
            next_art += 1;
        } else {
            tab.basis[r] = ny + r;
        }
    }

    // Phase one: drive the artificial sum to zero.
    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in ny + n_slack..cols {
            phase1[c] = 1.0;
        }
        tab.load_costs(&phase1);
        tab.run(opts)?;
        let infeasibility: f64 = (0..m)
            .filter(|&r| tab.basis[r] >= ny + n_slack)
            .map(|r| tab.rhs(r))
            .sum();
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective_value: f64::NAN,
                iterations: tab.iterations,
            });
        }
        // Pivot zero-level artificials out of the basis; rows where that is
        // impossible are redundant and get dropped.
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] >= ny + n_slack {
                let pc = (0..ny + n_slack)
                    .filter(|&c| tab.at(r, c).abs() > PIVOT_TOL)
                    .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
                match pc {
                    Some(pc) => tab.pivot(r, pc),
                    None => {
                        drop_row(&mut tab, r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for c in ny + n_slack..cols {
            tab.blocked[c] = true;
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..ny].copy_from_slice(&costs_y);
    tab.load_costs(&phase2);
    let outcome = tab.run(opts)?;

    let mut y = vec![0.0; cols];
    for r in 0..tab.rows {
        y[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| m.offset + m.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
        .collect();
    match outcome {
        PhaseOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            objective_value: f64::NEG_INFINITY,
            iterations: tab.iterations,
        }),
        PhaseOutcome::Optimal => {
            let objective_value = dot(&costs_y, &y[..ny]) + cost_offset;
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective_value,
                iterations: tab.iterations,
            })
        }
    }
}

fn drop_row(tab: &mut Tableau, r: usize) {
    let w = tab.width();
    tab.data.drain(r * w..(r + 1) * w);
    tab.basis.remove(r);
    tab.rows -= 1;
}
