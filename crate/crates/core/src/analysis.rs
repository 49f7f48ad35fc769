//! Measurement suite: oscillation around tangent planes, log-log exponent
//! fits, gradient growth, critical zones, free-boundary geometry, positive
//! density, and the distance to a homogeneous companion profile.

use std::io::Write;

use crate::discretization::jet_at;
use crate::error::{Error, Result};
use crate::grid::{sup_over_sphere, NodeClass, ScalarField};

/// Least-squares power-law fit through (log r, log value).
#[derive(Clone, Debug)]
pub struct ExponentFit {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fit `value ~ C * r^slope` by least squares in log-log coordinates.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return Err(Error::parameter(format!(
            "exponent fit needs >= 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::parameter("radii must be strictly increasing"));
    }
    if samples.iter().any(|(r, v)| *r <= 0.0 || *v <= 0.0) {
        return Err(Error::parameter(
            "exponent fit needs positive radii and values",
        ));
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|(r, v)| (r.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::parameter("degenerate abscissae in exponent fit"));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExponentFit {
        radii: samples.iter().map(|s| s.0).collect(),
        values: samples.iter().map(|s| s.1).collect(),
        slope,
        intercept,
        r2,
    })
}

impl ExponentFit {
    /// CSV block: `r,value` rows and a trailer with the fitted line.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "r,value")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(w, "{r:.16e},{v:.16e}")?;
        }
        writeln!(
            w,
            "slope={:.16e},intercept={:.16e},r2={:.16e}",
            self.slope, self.intercept, self.r2
        )?;
        Ok(())
    }
}

/// Log-spaced radii in [r_min, r_max] with `per_decade` points per decade.
pub fn log_spaced_radii(r_min: f64, r_max: f64, per_decade: usize) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min && per_decade > 0);
    let mut out = Vec::new();
    let step = 10f64.powf(1.0 / per_decade as f64);
    let mut r = r_min;
    while r < r_max * (1.0 - 1e-12) {
        out.push(r);
        r *= step;
    }
    out.push(r_max);
    out
}

fn nearest_interior(u: &ScalarField, x0: [f64; 2]) -> Result<(usize, usize)> {
    let g = u.grid();
    let node = g.nearest_node(x0);
    let p = g.pos(node.0, node.1);
    let d = ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)).sqrt();
    if d > 2.0 * g.h() {
        return Err(Error::parameter(format!(
            "anchor ({}, {}) is more than 2h from a node",
            x0[0], x0[1]
        )));
    }
    if g.class(node.0, node.1) != NodeClass::Interior {
        return Err(Error::parameter(format!(
            "anchor ({}, {}) does not snap to an interior node",
            x0[0], x0[1]
        )));
    }
    Ok(node)
}

/// sup over B_r(x0) of |u - l|, where l is the tangent plane built from the
/// node value and the discrete jet gradient at the node nearest x0.
pub fn oscillation(u: &ScalarField, x0: [f64; 2], r: f64) -> Result<f64> {
    let g = u.grid();
    if r < 4.0 * g.h() {
        return Err(Error::parameter(format!(
            "oscillation radius {r} below 4h = {}",
            4.0 * g.h()
        )));
    }
    let node = nearest_interior(u, x0)?;
    let jet = jet_at(u, node)?;
    let p0 = g.pos(node.0, node.1);
    let u0 = u.get(node.0, node.1);
    let mut sup: f64 = 0.0;
    for iy in 0..g.n() {
        for ix in 0..g.n() {
            if g.class(ix, iy) == NodeClass::Exterior {
                continue;
            }
            let p = g.pos(ix, iy);
            let d2 = (p[0] - p0[0]).powi(2) + (p[1] - p0[1]).powi(2);
            if d2 <= r * r {
                let plane = u0 + jet.grad[0] * (p[0] - p0[0]) + jet.grad[1] * (p[1] - p0[1]);
                sup = sup.max((u.get(ix, iy) - plane).abs());
            }
        }
    }
    Ok(sup)
}

/// sup over interior nodes of B_r(x0) of |grad_h u - grad_h u(x0)|.
pub fn gradient_growth(u: &ScalarField, x0: [f64; 2], r: f64) -> Result<f64> {
    let g = u.grid();
    if r < 4.0 * g.h() {
        return Err(Error::parameter(format!(
            "gradient growth radius {r} below 4h = {}",
            4.0 * g.h()
        )));
    }
    let node = nearest_interior(u, x0)?;
    let base = jet_at(u, node)?.grad;
    let p0 = g.pos(node.0, node.1);
    let mut sup: f64 = 0.0;
    for (ix, iy) in g.interior_nodes() {
        let p = g.pos(ix, iy);
        let d2 = (p[0] - p0[0]).powi(2) + (p[1] - p0[1]).powi(2);
        if d2 <= r * r {
            let grad = jet_at(u, (ix, iy))?.grad;
            let dg = ((grad[0] - base[0]).powi(2) + (grad[1] - base[1]).powi(2)).sqrt();
            sup = sup.max(dg);
        }
    }
    Ok(sup)
}

/// Interior nodes where |grad_h u| <= r^beta.
pub fn critical_zone(u: &ScalarField, r: f64, beta: f64) -> Result<Vec<(usize, usize)>> {
    if r <= 0.0 {
        return Err(Error::parameter("radius must be positive"));
    }
    let bound = r.powf(beta);
    let mut out = Vec::new();
    for (ix, iy) in u.grid().interior_nodes() {
        let grad = jet_at(u, (ix, iy))?.grad;
        if (grad[0] * grad[0] + grad[1] * grad[1]).sqrt() <= bound {
            out.push((ix, iy));
        }
    }
    Ok(out)
}

/// Per-radius growth ratios (sup_{dB_r} u - u(x0)) / r^exponent and their
/// minimum, the empirical non-degeneracy constant.
pub fn nondegeneracy_ratio(
    u: &ScalarField,
    x0: [f64; 2],
    radii: &[f64],
    exponent: f64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if radii.is_empty() {
        return Err(Error::parameter("need at least one radius"));
    }
    let node = nearest_interior(u, x0)?;
    let u0 = u.get(node.0, node.1);
    let p0 = u.grid().pos(node.0, node.1);
    let mut rows = Vec::with_capacity(radii.len());
    let mut min_ratio = f64::INFINITY;
    for &r in radii {
        let sup = sup_over_sphere(u, p0, r)?;
        let ratio = (sup - u0) / r.powf(exponent);
        min_ratio = min_ratio.min(ratio);
        rows.push((r, ratio));
    }
    Ok((min_ratio, rows))
}

/// Node-count density of {u > threshold} in balls around a free-boundary
/// point.
#[derive(Clone, Debug)]
pub struct DensityReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub theta_min: f64,
}

/// Interior nodes with u <= threshold adjacent (4-neighborhood) to a node
/// with u > threshold.
pub fn free_boundary(u: &ScalarField, threshold: f64) -> Vec<(usize, usize)> {
    let g = u.grid();
    let mut out = Vec::new();
    for (ix, iy) in g.interior_nodes() {
        if u.get(ix, iy) > threshold {
            continue;
        }
        let neighbors = [
            (ix + 1, iy),
            (ix - 1, iy),
            (ix, iy + 1),
            (ix, iy - 1),
        ];
        if neighbors.iter().any(|&(jx, jy)| {
            g.class(jx, jy) != NodeClass::Exterior && u.get(jx, jy) > threshold
        }) {
            out.push((ix, iy));
        }
    }
    out
}

/// Measure |{u > threshold} ∩ B_r(z0)| / |B_r(z0)| by node counting.
/// `z0` must lie within 2h of the discrete free boundary.
pub fn positive_density(
    u: &ScalarField,
    z0: [f64; 2],
    radii: &[f64],
    threshold: f64,
) -> Result<DensityReport> {
    let g = u.grid();
    if radii.is_empty() {
        return Err(Error::parameter("need at least one radius"));
    }
    let fb = free_boundary(u, threshold);
    let near = fb.iter().any(|&(ix, iy)| {
        let p = g.pos(ix, iy);
        ((p[0] - z0[0]).powi(2) + (p[1] - z0[1]).powi(2)).sqrt() <= 2.0 * g.h()
    });
    if !near {
        return Err(Error::parameter(format!(
            "({}, {}) is not within 2h of the discrete free boundary",
            z0[0], z0[1]
        )));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    let mut theta_min = f64::INFINITY;
    for &r in radii {
        let mut total = 0usize;
        let mut positive = 0usize;
        for iy in 0..g.n() {
            for ix in 0..g.n() {
                if g.class(ix, iy) == NodeClass::Exterior {
                    continue;
                }
                let p = g.pos(ix, iy);
                let d2 = (p[0] - z0[0]).powi(2) + (p[1] - z0[1]).powi(2);
                if d2 <= r * r {
                    total += 1;
                    if u.get(ix, iy) > threshold {
                        positive += 1;
                    }
                }
            }
        }
        if total == 0 {
            return Err(Error::parameter(format!("ball of radius {r} holds no nodes")));
        }
        let ratio = positive as f64 / total as f64;
        theta_min = theta_min.min(ratio);
        ratios.push(ratio);
    }
    Ok(DensityReport {
        radii: radii.to_vec(),
        ratios,
        theta_min,
    })
}

/// max( sup |u - h|, sup |grad_h u - grad_h h| ) over the ball of the given
/// radius around the grid center. Both fields must share the grid.
pub fn approximation_distance(
    u: &ScalarField,
    h_field: &ScalarField,
    radius: f64,
) -> Result<f64> {
    u.same_grid(h_field)?;
    let g = u.grid();
    let c = g.center();
    let mut sup_val: f64 = 0.0;
    let mut sup_grad: f64 = 0.0;
    for iy in 0..g.n() {
        for ix in 0..g.n() {
            if g.class(ix, iy) == NodeClass::Exterior {
                continue;
            }
            let p = g.pos(ix, iy);
            let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            if d2 > radius * radius {
                continue;
            }
            sup_val = sup_val.max((u.get(ix, iy) - h_field.get(ix, iy)).abs());
            if g.class(ix, iy) == NodeClass::Interior {
                let gu = jet_at(u, (ix, iy))?.grad;
                let gh = jet_at(h_field, (ix, iy))?.grad;
                let dg = ((gu[0] - gh[0]).powi(2) + (gu[1] - gh[1]).powi(2)).sqrt();
                sup_grad = sup_grad.max(dg);
            }
        }
    }
    Ok(sup_val.max(sup_grad))
}
