//! Pseudo-time relaxation for H(x, Du) F(x, D^2 u) = f(x, u) on a masked
//! ball with Dirichlet ring data, plus the frozen-coefficient homogeneous
//! companion solve and the pointwise residual.
//!
//! The iteration is an explicit Jacobi relaxation u <- u + dt * residual
//! with a per-node step
//! `dt_i = dt_safety * h^2 / (N Lambda_i H_i + 2 h K'(s_i) |F_i| + h^2 L)`.
//! The three denominator terms bound the diffusion stiffness, the
//! sensitivity of the gradient factor to the center value, and the source's
//! u-Lipschitz constant L; a single global step sized by max H either stalls
//! (boundary-layer transients collapse it) or is unbounded (flat degenerate
//! nodes), so the step is local. Steps are clamped to an O(h) trust window
//! so exactly-degenerate nodes cannot jump.

use std::sync::Arc;
use std::time::Instant;

use crate::degeneracy::{power, DegeneracyLaw};
use crate::discretization::{median_slope, PucciSign};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, NodeClass, ScalarField};
use crate::operators::{EllipticityPair, OperatorKind, OperatorSpec, SymMat2};

pub type SourceFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
pub type SpatialFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Right-hand side of the equation.
#[derive(Clone)]
pub enum SourceSpec {
    /// f(x, u) = c
    Constant(f64),
    /// bounded continuous f(x, u); set `u_dependent: false` when f ignores u
    /// so the solver can freeze it per node
    Bounded { f: SourceFn, u_dependent: bool },
    /// absorption f(x) * (u^+)^mu with reaction order 0 < mu < p + 1
    DeadCore { f: SpatialFn, mu: f64 },
}

impl std::fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceSpec::Constant(c) => write!(f, "Constant({c})"),
            SourceSpec::Bounded { u_dependent, .. } => {
                write!(f, "Bounded(u_dependent={u_dependent})")
            }
            SourceSpec::DeadCore { mu, .. } => write!(f, "DeadCore(mu={mu})"),
        }
    }
}

impl SourceSpec {
    pub fn bounded(f: SourceFn) -> Self {
        SourceSpec::Bounded {
            f,
            u_dependent: true,
        }
    }

    /// A bounded source that depends on x only.
    pub fn bounded_spatial(f: SpatialFn) -> Self {
        SourceSpec::Bounded {
            f: Arc::new(move |x, _| f(x)),
            u_dependent: false,
        }
    }

    pub fn dead_core(f: SpatialFn, mu: f64) -> Self {
        SourceSpec::DeadCore { f, mu }
    }

    pub fn eval(&self, x: [f64; 2], u: f64) -> f64 {
        match self {
            SourceSpec::Constant(c) => *c,
            SourceSpec::Bounded { f, .. } => f(x, u),
            SourceSpec::DeadCore { f, mu } => f(x) * power(u.max(0.0), *mu),
        }
    }

    pub fn same_structure(&self, other: &SourceSpec) -> bool {
        match (self, other) {
            (SourceSpec::Constant(a), SourceSpec::Constant(b)) => a == b,
            (SourceSpec::Bounded { f: a, .. }, SourceSpec::Bounded { f: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            (
                SourceSpec::DeadCore { f: a, mu: m1 },
                SourceSpec::DeadCore { f: b, mu: m2 },
            ) => Arc::ptr_eq(a, b) && m1 == m2,
            _ => false,
        }
    }
}

/// Full problem: operator, gradient factor (None means H = 1), source,
/// Dirichlet ring data, optional obstacle.
#[derive(Clone)]
pub struct ProblemSpec {
    pub operator: OperatorSpec,
    pub degeneracy: Option<DegeneracyLaw>,
    pub source: SourceSpec,
    pub boundary: SpatialFn,
    pub obstacle: Option<SpatialFn>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("operator", &self.operator.kind)
            .field("degeneracy", &self.degeneracy)
            .field("source", &self.source)
            .field("obstacle", &self.obstacle.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        operator: OperatorSpec,
        degeneracy: Option<DegeneracyLaw>,
        source: SourceSpec,
        boundary: SpatialFn,
    ) -> Result<Self> {
        let p = ProblemSpec {
            operator,
            degeneracy,
            source,
            boundary,
            obstacle: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_obstacle(mut self, obstacle: SpatialFn) -> Self {
        self.obstacle = Some(obstacle);
        self
    }

    fn validate(&self) -> Result<()> {
        if let SourceSpec::DeadCore { mu, .. } = &self.source {
            let law = self.degeneracy.as_ref().ok_or_else(|| {
                Error::parameter("dead-core absorption requires a degeneracy law")
            })?;
            if !(*mu > 0.0 && *mu < law.p + 1.0) {
                return Err(Error::parameter(format!(
                    "reaction order must satisfy 0 < mu < p + 1 = {}, got {mu}",
                    law.p + 1.0
                )));
            }
        }
        Ok(())
    }

    /// Gradient factor H(x, s) at gradient magnitude s (no floor).
    pub fn gradient_factor(&self, x: [f64; 2], s: f64) -> Result<f64> {
        match &self.degeneracy {
            None => Ok(1.0),
            Some(law) => law.k_value(x, s),
        }
    }
}

/// Iteration controls. `dt_safety` must stay below 0.5 (explicit stability).
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub dt_safety: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub report_every: usize,
    /// evaluate Pucci operators through the monotone frame scheme instead of
    /// the (default, more accurate) 9-point eigen path
    pub monotone_pucci: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt_safety: 0.4,
            tol: 1e-7,
            max_iter: 500_000,
            report_every: 0,
            monotone_pucci: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety < 0.5) {
            return Err(Error::parameter(format!(
                "dt_safety must lie in (0, 0.5), got {}",
                self.dt_safety
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::parameter("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::parameter("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_sup: f64,
    pub update_sup: f64,
    pub converged: bool,
    pub wall_seconds: f64,
    /// (iteration, residual sup) samples when report_every > 0
    pub history: Vec<(usize, f64)>,
}

/// Diffusion-coefficient bound of the operator at a given gradient, used for
/// step-size control. The infinity-Laplacian scales like |grad|^2.
fn lambda_bound(op: &OperatorSpec, grad: [f64; 2]) -> f64 {
    match &op.kind {
        OperatorKind::InfinityLaplacian => grad[0] * grad[0] + grad[1] * grad[1],
        OperatorKind::FrozenAt { inner, .. } => lambda_bound(inner, grad),
        OperatorKind::Rescaled {
            inner,
            prefactor,
            hessian_scale,
            gradient_scale,
            ..
        } => {
            let g = [grad[0] * gradient_scale, grad[1] * gradient_scale];
            prefactor * hessian_scale * lambda_bound(inner, g)
        }
        _ => op
            .ellipticity
            .map(|p| p.big_lambda)
            .unwrap_or(1.0),
    }
}

struct ActiveProblem<'a> {
    grid: &'a Grid2D,
    op: &'a OperatorSpec,
    law: Option<&'a DegeneracyLaw>,
    eps_eff: f64,
    /// evaluate the Pucci operators through the monotone frame scheme
    /// instead of the 9-point eigen path
    monotone_pucci: Option<(EllipticityPair, PucciSign)>,
    /// node indices to relax
    active: Vec<usize>,
    /// per-active-node precomputed data
    pos: Vec<[f64; 2]>,
    a_vals: Vec<f64>,
    source: ResolvedSource<'a>,
    obstacle: Vec<f64>,
    has_obstacle: bool,
}

enum ResolvedSource<'a> {
    Constant(f64),
    Table(Vec<f64>),
    DeadCore { f_vals: Vec<f64>, mu: f64 },
    Dynamic(&'a SourceFn),
}

impl<'a> ResolvedSource<'a> {
    #[inline]
    fn eval(&self, k: usize, x: [f64; 2], u: f64) -> f64 {
        match self {
            ResolvedSource::Constant(c) => *c,
            ResolvedSource::Table(t) => t[k],
            ResolvedSource::DeadCore { f_vals, mu } => f_vals[k] * power(u.max(0.0), *mu),
            ResolvedSource::Dynamic(f) => f(x, u),
        }
    }

    /// Estimate of the largest |d source / d u| over the active nodes.
    fn reaction_lipschitz(&self, pos: &[[f64; 2]], values: &[f64], active: &[usize]) -> f64 {
        let delta = 1e-3;
        match self {
            ResolvedSource::Constant(_) | ResolvedSource::Table(_) => 0.0,
            ResolvedSource::DeadCore { f_vals, mu } => {
                let mut worst: f64 = 0.0;
                for (k, &i) in active.iter().enumerate() {
                    let u = values[i];
                    let d = (power((u + delta).max(0.0), *mu) - power(u.max(0.0), *mu)) / delta;
                    worst = worst.max(f_vals[k] * d.abs());
                }
                worst
            }
            ResolvedSource::Dynamic(f) => {
                let mut worst: f64 = 0.0;
                for (k, &i) in active.iter().enumerate() {
                    let u = values[i];
                    let d = (f(pos[k], u + delta) - f(pos[k], u)) / delta;
                    worst = worst.max(d.abs());
                }
                worst
            }
        }
    }
}

impl<'a> ActiveProblem<'a> {
    fn build(
        problem: &'a ProblemSpec,
        grid: &'a Grid2D,
        active: Vec<usize>,
        monotone_pucci: bool,
    ) -> Result<Self> {
        let monotone_pucci = if monotone_pucci {
            let pair = problem.operator.ellipticity.ok_or_else(|| {
                Error::parameter("monotone Pucci path needs an ellipticity pair")
            })?;
            match problem.operator.kind {
                OperatorKind::PucciPlus => Some((pair, PucciSign::Plus)),
                OperatorKind::PucciMinus => Some((pair, PucciSign::Minus)),
                _ => {
                    return Err(Error::parameter(
                        "the monotone path applies to the Pucci operators only",
                    ))
                }
            }
        } else {
            None
        };
        let n = grid.n();
        let pos: Vec<[f64; 2]> = active
            .iter()
            .map(|&i| grid.pos(i % n, i / n))
            .collect();
        let law = problem.degeneracy.as_ref();
        // the floor keeps the relaxation from freezing at exact degeneracy
        let eps_eff = law.map_or(0.0, |l| l.eps_reg.max(1e-8));
        let mut a_vals = vec![0.0; active.len()];
        if let Some(l) = law {
            for (k, &p) in pos.iter().enumerate() {
                let a = l.a.eval(p);
                if !(a >= 0.0) {
                    return Err(Error::parameter(format!(
                        "modulating function negative at ({}, {}): {a}",
                        p[0], p[1]
                    )));
                }
                a_vals[k] = a;
            }
        }
        let source = match &problem.source {
            SourceSpec::Constant(c) => ResolvedSource::Constant(*c),
            SourceSpec::Bounded { f, u_dependent } => {
                if *u_dependent {
                    ResolvedSource::Dynamic(f)
                } else {
                    let t: Vec<f64> = pos.iter().map(|&p| f(p, 0.0)).collect();
                    if t.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite("source values on the grid".into()));
                    }
                    ResolvedSource::Table(t)
                }
            }
            SourceSpec::DeadCore { f, mu } => {
                let f_vals: Vec<f64> = pos.iter().map(|&p| f(p)).collect();
                if f_vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::parameter(
                        "dead-core Thiele modulus must be finite and >= 0",
                    ));
                }
                ResolvedSource::DeadCore {
                    f_vals,
                    mu: *mu,
                }
            }
        };
        let has_obstacle = problem.obstacle.is_some();
        let obstacle = match &problem.obstacle {
            Some(phi) => pos.iter().map(|&p| phi(p)).collect(),
            None => Vec::new(),
        };
        Ok(ActiveProblem {
            grid,
            op: &problem.operator,
            law,
            eps_eff,
            monotone_pucci,
            active,
            pos,
            a_vals,
            source,
            obstacle,
            has_obstacle,
        })
    }

    /// One Jacobi sweep; returns (residual sup, update sup). The residual
    /// is measured on the incoming state.
    fn sweep(
        &self,
        old: &[f64],
        new: &mut [f64],
        dt_safety: f64,
        step_cap: f64,
        l_react: f64,
    ) -> Result<(f64, f64)> {
        let n = self.grid.n();
        let h = self.grid.h();
        let h2 = h * h;
        let inv_2h = 1.0 / (2.0 * h);
        let inv_h2 = 1.0 / h2;
        let mut res_sup: f64 = 0.0;
        let mut upd_sup: f64 = 0.0;

        for (k, &i) in self.active.iter().enumerate() {
            let c = old[i];
            let e = old[i + 1];
            let w = old[i - 1];
            let no = old[i + n];
            let s = old[i - n];
            let ne = old[i + n + 1];
            let nw = old[i + n - 1];
            let se = old[i - n + 1];
            let sw = old[i - n - 1];

            let grad = [(e - w) * inv_2h, (no - s) * inv_2h];
            let hess = SymMat2::new(
                (e - 2.0 * c + w) * inv_h2,
                (ne - nw - se + sw) * 0.25 * inv_h2,
                (no - 2.0 * c + s) * inv_h2,
            );
            let x = self.pos[k];
            let f_val = match &self.monotone_pucci {
                None => self.op.evaluate(x, grad, &hess)?,
                Some((pair, sign)) => {
                    // extremal frame scheme over the axis and diagonal pairs
                    let d_ax = [hess.a11, hess.a22];
                    let d_diag = [
                        (ne - 2.0 * c + sw) * 0.5 * inv_h2,
                        (nw - 2.0 * c + se) * 0.5 * inv_h2,
                    ];
                    let weight = |d: f64| match sign {
                        PucciSign::Plus => {
                            if d > 0.0 {
                                pair.big_lambda * d
                            } else {
                                pair.lambda * d
                            }
                        }
                        PucciSign::Minus => {
                            if d > 0.0 {
                                pair.lambda * d
                            } else {
                                pair.big_lambda * d
                            }
                        }
                    };
                    let axes = weight(d_ax[0]) + weight(d_ax[1]);
                    let diags = weight(d_diag[0]) + weight(d_diag[1]);
                    match sign {
                        PucciSign::Plus => axes.max(diags),
                        PucciSign::Minus => axes.min(diags),
                    }
                }
            };

            // gradient magnitude for the degeneracy factor: per-axis median
            // slope, so the factor cannot freeze at discrete extrema and the
            // residual stays continuous in the nodal values
            let (h_val, kprime) = match self.law {
                None => (1.0, 0.0),
                Some(law) => {
                    let gx = median_slope((e - c) / h, (c - w) / h);
                    let gy = median_slope((no - c) / h, (c - s) / h);
                    let sm = (gx * gx + gy * gy).sqrt().max(self.eps_eff);
                    let a = self.a_vals[k];
                    let hv = law.k_with_coeff(a, sm);
                    let kp = law.p * power(sm, law.p - 1.0)
                        + a * law.q * power(sm, law.q - 1.0);
                    (hv, kp)
                }
            };

            let src = self.source.eval(k, x, c);
            let res = h_val * f_val - src;

            // convergence bookkeeping: at obstacle contact only a positive
            // residual counts (complementarity: the projection absorbs the
            // negative part)
            let contact = self.has_obstacle && c <= self.obstacle[k];
            let res_measure = if contact { res.max(0.0) } else { res.abs() };
            if res_measure > res_sup {
                res_sup = res_measure;
            }

            let lam = lambda_bound(self.op, grad);
            let denom = 2.0 * lam * h_val + 2.0 * h * kprime * f_val.abs() + h2 * l_react;
            let dt = if denom > 1e-300 {
                dt_safety * h2 / denom
            } else {
                f64::INFINITY
            };
            let mut du = dt * res;
            if du > step_cap {
                du = step_cap;
            } else if du < -step_cap {
                du = -step_cap;
            }
            let mut v = c + du;
            if self.has_obstacle && v < self.obstacle[k] {
                v = self.obstacle[k];
            }
            let actual = (v - c).abs();
            if actual > upd_sup {
                upd_sup = actual;
            }
            new[i] = v;
        }
        Ok((res_sup, upd_sup))
    }
}

fn relax(
    problem: &ProblemSpec,
    grid: &Grid2D,
    cfg: &SolverConfig,
    active: Vec<usize>,
    init: ScalarField,
    pin_scale: f64,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    let t0 = Instant::now();
    let ap = ActiveProblem::build(problem, grid, active, cfg.monotone_pucci)?;

    let mut old = init.values().to_vec();
    let mut new = old.clone();
    let blow_up_bound = 1e3 * (pin_scale + 1.0);
    let step_cap = cfg.dt_safety * grid.h() * (pin_scale + 1.0);

    let mut l_react = ap
        .source
        .reaction_lipschitz(&ap.pos, &old, &ap.active);
    let mut history = Vec::new();
    let mut res_sup = f64::INFINITY;
    let mut upd_sup = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iter {
        iterations = iter + 1;
        if iter % 100 == 0 && iter > 0 {
            l_react = ap
                .source
                .reaction_lipschitz(&ap.pos, &old, &ap.active);
            let mut sup: f64 = 0.0;
            for &i in &ap.active {
                let v = old[i];
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("iterate at node {i}")));
                }
                sup = sup.max(v.abs());
            }
            if sup > blow_up_bound {
                return Err(Error::BlowUp {
                    sup,
                    bound: blow_up_bound,
                });
            }
        }
        let (r, u) = ap.sweep(&old, &mut new, cfg.dt_safety, step_cap, l_react)?;
        res_sup = r;
        upd_sup = u;
        std::mem::swap(&mut old, &mut new);
        if cfg.report_every > 0 && iter % cfg.report_every == 0 {
            history.push((iter, res_sup));
        }
        if res_sup <= cfg.tol {
            converged = true;
            break;
        }
    }

    let field = ScalarField::from_values(grid, old)?;
    let report = SolveReport {
        iterations,
        residual_sup: res_sup,
        update_sup: upd_sup,
        converged,
        wall_seconds: t0.elapsed().as_secs_f64(),
        history,
    };
    Ok((field, report))
}

/// Solve the Dirichlet problem on the grid's mask. Returns the field and a
/// report; hitting `max_iter` is reported, not fatal, while blow-up is an
/// error.
pub fn solve(
    problem: &ProblemSpec,
    grid: &Grid2D,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    problem.validate()?;
    let n = grid.n();

    // pin ring values, start the interior from the ring mean
    let mut values = vec![f64::NAN; n * n];
    let mut ring_sum = 0.0;
    let mut ring_count = 0usize;
    let mut pin_scale: f64 = 0.0;
    for (ix, iy) in grid.ring_nodes() {
        let x = grid.pos(ix, iy);
        let g = (problem.boundary)(x);
        if !g.is_finite() {
            return Err(Error::NonFinite(format!(
                "boundary datum at ({}, {})",
                x[0], x[1]
            )));
        }
        if let Some(phi) = &problem.obstacle {
            if g < phi(x) - 1e-12 {
                return Err(Error::parameter(format!(
                    "boundary datum below the obstacle at ({}, {})",
                    x[0], x[1]
                )));
            }
        }
        values[grid.idx(ix, iy)] = g;
        ring_sum += g;
        ring_count += 1;
        pin_scale = pin_scale.max(g.abs());
    }
    if ring_count == 0 {
        return Err(Error::parameter("grid has no ring nodes"));
    }
    let mean = ring_sum / ring_count as f64;
    let mut active = Vec::with_capacity(grid.interior_count());
    for (ix, iy) in grid.interior_nodes() {
        let i = grid.idx(ix, iy);
        let x = grid.pos(ix, iy);
        values[i] = match &problem.obstacle {
            Some(phi) => mean.max(phi(x)),
            None => mean,
        };
        active.push(i);
    }
    let init = ScalarField::from_values(grid, values)?;
    relax(problem, grid, cfg, active, init, pin_scale)
}

/// Solve the frozen-coefficient homogeneous companion F(x0, D^2 h) = 0 on
/// the sub-ball B_{1/2}(x0), taking boundary values from `boundary` on the
/// sub-ring. Outside the sub-ball the output copies `boundary`.
pub fn solve_frozen_homogeneous(
    op: &OperatorSpec,
    x0: [f64; 2],
    boundary: &ScalarField,
    grid: &Grid2D,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    if boundary.grid() != grid {
        return Err(Error::GridMismatch(
            "boundary field lives on a different grid".to_string(),
        ));
    }
    let sub_r = 0.5;
    let c = grid.center();
    let dist_c = ((x0[0] - c[0]).powi(2) + (x0[1] - c[1]).powi(2)).sqrt();
    if dist_c + sub_r > grid.radius() + 1e-12 {
        return Err(Error::parameter(
            "sub-ball B_{1/2}(x0) must sit inside the grid mask",
        ));
    }
    let n = grid.n();
    let sub_inside = |ix: isize, iy: isize| -> bool {
        if ix < 0 || iy < 0 || ix >= n as isize || iy >= n as isize {
            return false;
        }
        let p = grid.pos(ix as usize, iy as usize);
        let d = ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)).sqrt();
        d <= sub_r && grid.class(ix as usize, iy as usize) != NodeClass::Exterior
    };
    let mut active = Vec::new();
    let mut pin_scale: f64 = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            if !sub_inside(ix as isize, iy as isize) {
                continue;
            }
            let all_in = (-1..=1).all(|dy: isize| {
                (-1..=1).all(|dx: isize| sub_inside(ix as isize + dx, iy as isize + dy))
            });
            if all_in {
                active.push(grid.idx(ix, iy));
            } else {
                pin_scale = pin_scale.max(boundary.get(ix, iy).abs());
            }
        }
    }
    if active.is_empty() {
        return Err(Error::parameter("sub-ball contains no interior nodes"));
    }
    let frozen = ProblemSpec {
        operator: OperatorSpec::frozen_at(x0, op.clone()),
        degeneracy: None,
        source: SourceSpec::Constant(0.0),
        boundary: Arc::new(|_| 0.0), // unused: values come from the field
        obstacle: None,
    };
    let (field, _report) = relax(&frozen, grid, cfg, active, boundary.clone(), pin_scale)?;
    Ok(field)
}

/// Pointwise defect H_eps(x, grad_h u) F(x, D^2_h u) - f(x, u) at interior
/// nodes, zero on the ring, NaN outside the mask. Uses the same gradient
/// sampling as the solver so a converged solve has sup |residual| <= tol.
pub fn residual_field(u: &ScalarField, problem: &ProblemSpec, grid: &Grid2D) -> Result<ScalarField> {
    if u.grid() != grid {
        return Err(Error::GridMismatch("field grid differs".into()));
    }
    let active: Vec<usize> = grid
        .interior_nodes()
        .map(|(ix, iy)| grid.idx(ix, iy))
        .collect();
    let ap = ActiveProblem::build(problem, grid, active, false)?;
    let n = grid.n();
    let h = grid.h();
    let h2 = h * h;
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / h2;
    let old = u.values();
    let mut out = ScalarField::zeros(grid);
    for (k, &i) in ap.active.iter().enumerate() {
        let c = old[i];
        let e = old[i + 1];
        let w = old[i - 1];
        let no = old[i + n];
        let s = old[i - n];
        let grad = [(e - w) * inv_2h, (no - s) * inv_2h];
        let hess = SymMat2::new(
            (e - 2.0 * c + w) * inv_h2,
            (old[i + n + 1] - old[i + n - 1] - old[i - n + 1] + old[i - n - 1]) * 0.25 * inv_h2,
            (no - 2.0 * c + s) * inv_h2,
        );
        let x = ap.pos[k];
        let f_val = ap.op.evaluate(x, grad, &hess)?;
        let h_val = match ap.law {
            None => 1.0,
            Some(law) => {
                let gx = median_slope((e - c) / h, (c - w) / h);
                let gy = median_slope((no - c) / h, (c - s) / h);
                law.k_with_coeff(
                    ap.a_vals[k],
                    (gx * gx + gy * gy).sqrt().max(ap.eps_eff),
                )
            }
        };
        out.values_mut()[i] = h_val * f_val - ap.source.eval(k, x, c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::ModulatingFn;
    use crate::grid::make_grid;

    fn quick_cfg() -> SolverConfig {
        SolverConfig {
            tol: 1e-7,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn config_guards() {
        let bad = SolverConfig {
            dt_safety: 0.5,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn harmonic_quadratic_is_recovered() {
        // F = trace, H = 1, f = 0, g = x^2 - y^2: the quadratic is an exact
        // discrete solution
        let grid = make_grid(65, [0.0, 0.0], 1.0).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            None,
            SourceSpec::Constant(0.0),
            Arc::new(|x: [f64; 2]| x[0] * x[0] - x[1] * x[1]),
        )
        .unwrap();
        let (u, report) = solve(&problem, &grid, &quick_cfg()).unwrap();
        assert!(report.converged, "report: {report:?}");
        let exact = ScalarField::from_fn(&grid, |x| x[0] * x[0] - x[1] * x[1]);
        let err = u.max_abs_diff(&exact).unwrap();
        assert!(err <= 5e-6, "sup error {err}");
    }

    #[test]
    fn converged_solution_has_small_residual() {
        let grid = make_grid(33, [0.0, 0.0], 1.0).unwrap();
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.5)).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::Constant(1.0),
            Arc::new(|_| 1.0),
        )
        .unwrap();
        let (u, report) = solve(&problem, &grid, &quick_cfg()).unwrap();
        assert!(report.converged);
        let res = residual_field(&u, &problem, &grid).unwrap();
        let mut sup: f64 = 0.0;
        for (ix, iy) in grid.interior_nodes() {
            sup = sup.max(res.get(ix, iy).abs());
        }
        assert!(sup <= quick_cfg().tol * (1.0 + 1e-12), "sup residual {sup}");
        // ring entries are zero
        for (ix, iy) in grid.ring_nodes() {
            assert_eq!(res.get(ix, iy), 0.0);
        }
    }

    #[test]
    fn residual_shifts_exactly_with_source() {
        let grid = make_grid(33, [0.0, 0.0], 1.0).unwrap();
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.5)).unwrap();
        let base = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law.clone()),
            SourceSpec::Constant(1.0),
            Arc::new(|x: [f64; 2]| x[0]),
        )
        .unwrap();
        let shifted = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::Constant(2.0),
            Arc::new(|x: [f64; 2]| x[0]),
        )
        .unwrap();
        let u = ScalarField::from_fn(&grid, |x| x[0] * x[1] + 0.3);
        let r0 = residual_field(&u, &base, &grid).unwrap();
        let r1 = residual_field(&u, &shifted, &grid).unwrap();
        for (ix, iy) in grid.interior_nodes() {
            assert!((r0.get(ix, iy) - r1.get(ix, iy) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_companion_reproduces_affine_and_constant_data() {
        let grid = make_grid(65, [0.0, 0.0], 1.0).unwrap();
        let cfg = quick_cfg();
        // constants are preserved (F(0) = 0)
        let c = ScalarField::from_fn(&grid, |_| 0.7);
        let op = OperatorSpec::pucci_plus_op(crate::operators::EllipticityPair::new(1.0, 2.0).unwrap());
        let h = solve_frozen_homogeneous(&op, [0.0, 0.0], &c, &grid, &cfg).unwrap();
        assert!(h.max_abs_diff(&c).unwrap() < 1e-6);
        // affine data is F-harmonic
        let aff = ScalarField::from_fn(&grid, |x| x[0]);
        let h = solve_frozen_homogeneous(&op, [0.0, 0.0], &aff, &grid, &cfg).unwrap();
        assert!(h.max_abs_diff(&aff).unwrap() < 1e-6);
        // harmonic quadratic under the trace operator
        let quad = ScalarField::from_fn(&grid, |x| x[0] * x[0] - x[1] * x[1]);
        let h = solve_frozen_homogeneous(&OperatorSpec::laplacian(), [0.0, 0.0], &quad, &grid, &cfg)
            .unwrap();
        assert!(h.max_abs_diff(&quad).unwrap() < 5e-6);
    }

    #[test]
    fn dead_core_requires_law_and_valid_mu() {
        let bad = ProblemSpec::new(
            OperatorSpec::laplacian(),
            None,
            SourceSpec::dead_core(Arc::new(|_| 1.0), 0.5),
            Arc::new(|_| 1.0),
        );
        assert!(bad.is_err());
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.0)).unwrap();
        let bad_mu = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::dead_core(Arc::new(|_| 1.0), 3.5),
            Arc::new(|_| 1.0),
        );
        assert!(bad_mu.is_err());
    }

    #[test]
    fn obstacle_is_respected_exactly() {
        let grid = make_grid(49, [0.0, 0.0], 1.0).unwrap();
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.5)).unwrap();
        let phi: SpatialFn = Arc::new(|x: [f64; 2]| 0.4 - 2.0 * (x[0] * x[0] + x[1] * x[1]));
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::Constant(1.0),
            Arc::new(|_| 0.5),
        )
        .unwrap()
        .with_obstacle(phi.clone());
        let (u, report) = solve(&problem, &grid, &quick_cfg()).unwrap();
        assert!(report.converged);
        let mut contact = 0usize;
        for (ix, iy) in grid.interior_nodes() {
            let x = grid.pos(ix, iy);
            assert!(u.get(ix, iy) >= phi(x) - 0.0, "obstacle violated");
            if u.get(ix, iy) == phi(x) {
                contact += 1;
            }
        }
        assert!(contact > 0, "no contact set formed");
    }

    #[test]
    fn obstacle_needs_consistent_boundary() {
        let grid = make_grid(33, [0.0, 0.0], 1.0).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            None,
            SourceSpec::Constant(0.0),
            Arc::new(|_| 0.0),
        )
        .unwrap()
        .with_obstacle(Arc::new(|_| 1.0));
        assert!(solve(&problem, &grid, &quick_cfg()).is_err());
    }

    #[test]
    fn dead_core_forms_for_strong_absorption() {
        let grid = make_grid(81, [0.0, 0.0], 1.0).unwrap();
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.5)).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::dead_core(Arc::new(|_| 100.0), 1.0),
            Arc::new(|_| 1.0),
        )
        .unwrap();
        let (u, report) = solve(&problem, &grid, &quick_cfg()).unwrap();
        assert!(report.converged, "{report:?}");
        let threshold = 10.0 * quick_cfg().tol;
        let mut zero_nodes = 0usize;
        let mut min_u = f64::INFINITY;
        for (ix, iy) in grid.interior_nodes() {
            let v = u.get(ix, iy);
            min_u = min_u.min(v);
            if v <= threshold {
                zero_nodes += 1;
            }
        }
        assert!(min_u >= -1e-8, "negativity {min_u}");
        assert!(
            zero_nodes as f64 >= 0.01 * grid.interior_count() as f64,
            "only {zero_nodes} zero nodes"
        );
    }

    #[test]
    fn comparison_with_ordered_boundary_data() {
        let grid = make_grid(49, [0.0, 0.0], 1.0).unwrap();
        let mk = |shift: f64| {
            let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.5)).unwrap();
            ProblemSpec::new(
                OperatorSpec::laplacian(),
                Some(law),
                SourceSpec::Constant(1.0),
                Arc::new(move |x: [f64; 2]| 0.3 * (x[0] * x[0] - x[1] * x[1]) + shift),
            )
            .unwrap()
        };
        let (u_lo, _) = solve(&mk(0.0), &grid, &quick_cfg()).unwrap();
        let (u_hi, _) = solve(&mk(0.1), &grid, &quick_cfg()).unwrap();
        let mut min_diff = f64::INFINITY;
        for (ix, iy) in grid.interior_nodes() {
            min_diff = min_diff.min(u_hi.get(ix, iy) - u_lo.get(ix, iy));
        }
        assert!(min_diff >= -1e-8, "comparison violated: {min_diff}");
    }

    #[test]
    fn blow_up_is_detected() {
        // a source far beyond what the boundary scale supports
        let grid = make_grid(33, [0.0, 0.0], 1.0).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            None,
            SourceSpec::Constant(1e9),
            Arc::new(|_| 0.0),
        )
        .unwrap();
        let err = solve(&problem, &grid, &quick_cfg());
        assert!(matches!(err, Err(Error::BlowUp { .. })), "{err:?}");
    }
}
