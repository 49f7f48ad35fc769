//! Viscosity-solution probing with quadratic test functions, and discrete
//! comparison-principle audits.
//!
//! The supersolution test at a node builds candidate quadratics from the
//! discrete jet, tilts the gradient by steps of size h, and subtracts the
//! minimal multiple of the identity that makes the quadratic touch the field
//! from below across the 9-point neighborhood; every admissible candidate
//! must satisfy H(x, Dq) F(x, D^2 q) <= f(x, u) + tol. The subsolution test
//! is dual. Violations are data, not errors: genuinely degenerate critical
//! nodes with a positive source admit grid-scale test functions that the
//! continuum excludes, and those margins are reported.

use std::io::Write;

use crate::discretization::jet_at;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::operators::SymMat2;
use crate::solver::{solve, ProblemSpec, SolveReport, SolverConfig};

#[derive(Clone, Debug)]
pub struct ViscosityReport {
    pub checked: usize,
    /// nodes where a from-below quadratic beats f by more than tol
    pub super_violations: Vec<((usize, usize), f64)>,
    /// nodes where a from-above quadratic undershoots f by more than tol
    pub sub_violations: Vec<((usize, usize), f64)>,
    pub tol: f64,
}

impl ViscosityReport {
    pub fn certified(&self) -> bool {
        self.super_violations.is_empty() && self.sub_violations.is_empty()
    }

    /// CSV rows `ix,iy,kind,margin`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "ix,iy,kind,margin")?;
        for ((ix, iy), m) in &self.super_violations {
            writeln!(w, "{ix},{iy},super,{m:.16e}")?;
        }
        for ((ix, iy), m) in &self.sub_violations {
            writeln!(w, "{ix},{iy},sub,{m:.16e}")?;
        }
        Ok(())
    }
}

const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Probe the viscosity inequalities at every interior node.
pub fn check_viscosity(
    u: &ScalarField,
    problem: &ProblemSpec,
    tol: f64,
    jet_perturbations: usize,
) -> Result<ViscosityReport> {
    let g = u.grid();
    let h = g.h();
    let mut report = ViscosityReport {
        checked: 0,
        super_violations: Vec::new(),
        sub_violations: Vec::new(),
        tol,
    };

    // candidate gradient tilts: none, plus jet_perturbations directions of
    // step h
    let mut tilts = vec![[0.0, 0.0]];
    for k in 0..jet_perturbations {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / jet_perturbations.max(1) as f64;
        tilts.push([h * angle.cos(), h * angle.sin()]);
    }

    for (ix, iy) in g.interior_nodes() {
        report.checked += 1;
        let jet = jet_at(u, (ix, iy))?;
        let x = g.pos(ix, iy);
        let u0 = u.get(ix, iy);
        let f_val = problem.source.eval(x, u0);

        let mut worst_super: f64 = f64::NEG_INFINITY;
        let mut worst_sub: f64 = f64::NEG_INFINITY;

        for tilt in &tilts {
            let zeta = [jet.grad[0] + tilt[0], jet.grad[1] + tilt[1]];
            // quadratic value offsets q(d) - u0 relative to the center
            let offset = |d: (f64, f64), m: &SymMat2| {
                zeta[0] * d.0
                    + zeta[1] * d.1
                    + 0.5 * (m.a11 * d.0 * d.0 + 2.0 * m.a12 * d.0 * d.1 + m.a22 * d.1 * d.1)
            };

            // smallest s >= 0 with q - s/2 |d|^2 below u on all neighbors
            let mut s_super: f64 = 0.0;
            // smallest s >= 0 with q + s/2 |d|^2 above u on all neighbors
            let mut s_sub: f64 = 0.0;
            for (dx, dy) in NEIGHBOR_OFFSETS {
                let d = (dx as f64 * h, dy as f64 * h);
                let d2 = d.0 * d.0 + d.1 * d.1;
                let diff = offset(d, &jet.hess)
                    - (u.get((ix as i64 + dx) as usize, (iy as i64 + dy) as usize) - u0);
                // from below: need diff - s/2 d2 <= 0
                s_super = s_super.max(2.0 * diff / d2);
                // from above: need diff + s/2 d2 >= 0
                s_sub = s_sub.max(-2.0 * diff / d2);
            }

            let s_mag = (zeta[0] * zeta[0] + zeta[1] * zeta[1]).sqrt();
            let h_fac = problem.gradient_factor(x, s_mag)?;

            let m_super = jet.hess.add_scaled_identity(-s_super);
            let lhs_super = h_fac * problem.operator.evaluate(x, zeta, &m_super)?;
            worst_super = worst_super.max(lhs_super - f_val);

            let m_sub = jet.hess.add_scaled_identity(s_sub);
            let lhs_sub = h_fac * problem.operator.evaluate(x, zeta, &m_sub)?;
            worst_sub = worst_sub.max(f_val - lhs_sub);
        }

        if worst_super > tol {
            report.super_violations.push(((ix, iy), worst_super));
        }
        if worst_sub > tol {
            report.sub_violations.push(((ix, iy), worst_sub));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub min_difference: f64,
    pub pass: bool,
    pub sub_report: SolveReport,
    pub super_report: SolveReport,
}

/// Solve both problems and report min(u_super - u_sub) over masked nodes.
/// Requires structurally identical operator and degeneracy and ordered ring
/// data g_super >= g_sub.
pub fn comparison_audit(
    problem_sub: &ProblemSpec,
    problem_super: &ProblemSpec,
    grid: &Grid2D,
    cfg: &SolverConfig,
) -> Result<ComparisonReport> {
    if !problem_sub.operator.same_structure(&problem_super.operator) {
        return Err(Error::parameter(
            "comparison audit needs the same operator on both sides",
        ));
    }
    match (&problem_sub.degeneracy, &problem_super.degeneracy) {
        (None, None) => {}
        (Some(a), Some(b)) => {
            if a.p != b.p || a.q != b.q {
                return Err(Error::parameter(
                    "comparison audit needs identical degeneracy exponents",
                ));
            }
        }
        _ => {
            return Err(Error::parameter(
                "comparison audit needs the same degeneracy on both sides",
            ))
        }
    }
    for (ix, iy) in grid.ring_nodes() {
        let x = grid.pos(ix, iy);
        let lo = (problem_sub.boundary)(x);
        let hi = (problem_super.boundary)(x);
        if hi < lo - 1e-14 {
            return Err(Error::parameter(format!(
                "ring data unordered at ({}, {}): {hi} < {lo}",
                x[0], x[1]
            )));
        }
    }

    let (u_sub, sub_report) = solve(problem_sub, grid, cfg)?;
    let (u_super, super_report) = solve(problem_super, grid, cfg)?;
    let mut min_difference = f64::INFINITY;
    for iy in 0..grid.n() {
        for ix in 0..grid.n() {
            if grid.class(ix, iy) != crate::grid::NodeClass::Exterior {
                min_difference = min_difference.min(u_super.get(ix, iy) - u_sub.get(ix, iy));
            }
        }
    }
    Ok(ComparisonReport {
        min_difference,
        pass: min_difference >= -1e-8,
        sub_report,
        super_report,
    })
}
