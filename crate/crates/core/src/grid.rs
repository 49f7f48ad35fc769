//! Uniform grid on the square [-1,1]^2 with a ball mask, node
//! classification, and scalar field storage.
//!
//! Every computation in this crate lives on a ball `B_R(center)` carved out
//! of the unit square. Nodes are classified once at construction: a node is
//! `Interior` when it and all 8 neighbors lie inside the mask, `Ring` when it
//! is not interior but sits within `h*sqrt(2)` of the mask sphere (this is
//! where Dirichlet data is imposed), and `Exterior` otherwise.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeClass {
    Interior,
    Ring,
    Exterior,
}

/// Uniform n-by-n grid over [-1,1]^2 masked by the ball `B_radius(center)`.
///
/// `n` is odd so the square's center (and the origin, for a centered mask)
/// is exactly a node. Cloning is cheap; the classification is shared.
#[derive(Clone, Debug)]
pub struct Grid2D {
    n: usize,
    h: f64,
    center: [f64; 2],
    radius: f64,
    class: Arc<Vec<NodeClass>>,
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.h == other.h
            && self.center == other.center
            && self.radius == other.radius
    }
}

/// Build a classified grid. `n` must be odd and at least 9, and the mask
/// ball must fit inside the unit square.
pub fn make_grid(n: usize, center: [f64; 2], radius: f64) -> Result<Grid2D> {
    if n < 9 || n.is_multiple_of(2) {
        return Err(Error::parameter(format!("n must be odd and >= 9, got {n}")));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::parameter(format!(
            "radius must lie in (0, 1], got {radius}"
        )));
    }
    let tol = 1e-12;
    if center[0].abs() + radius > 1.0 + tol || center[1].abs() + radius > 1.0 + tol {
        return Err(Error::parameter(
            "mask ball must be contained in [-1,1]^2".to_string(),
        ));
    }
    let h = 2.0 / (n - 1) as f64;
    debug_assert!((h * (n - 1) as f64 - 2.0).abs() < 1e-14);

    let pos = |i: usize| -1.0 + i as f64 * h;
    let dist = |ix: usize, iy: usize| {
        let dx = pos(ix) - center[0];
        let dy = pos(iy) - center[1];
        (dx * dx + dy * dy).sqrt()
    };
    let inside = |ix: isize, iy: isize| {
        if ix < 0 || iy < 0 || ix >= n as isize || iy >= n as isize {
            return false;
        }
        dist(ix as usize, iy as usize) <= radius
    };

    let ring_width = h * std::f64::consts::SQRT_2 * (1.0 + 1e-12);
    let mut class = vec![NodeClass::Exterior; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let d = dist(ix, iy);
            let node_inside = d <= radius;
            let all_neighbors_inside = node_inside
                && (-1..=1).all(|dy: isize| {
                    (-1..=1).all(|dx: isize| inside(ix as isize + dx, iy as isize + dy))
                });
            class[iy * n + ix] = if all_neighbors_inside {
                NodeClass::Interior
            } else if d <= radius + ring_width {
                NodeClass::Ring
            } else {
                NodeClass::Exterior
            };
        }
    }

    Ok(Grid2D {
        n,
        h,
        center,
        radius,
        class: Arc::new(class),
    })
}

impl Grid2D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    #[inline]
    pub fn pos(&self, ix: usize, iy: usize) -> [f64; 2] {
        [-1.0 + ix as f64 * self.h, -1.0 + iy as f64 * self.h]
    }

    #[inline]
    pub fn class(&self, ix: usize, iy: usize) -> NodeClass {
        self.class[self.idx(ix, iy)]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest_node(&self, x: [f64; 2]) -> (usize, usize) {
        let snap = |c: f64| {
            let i = ((c + 1.0) / self.h).round();
            (i.max(0.0) as usize).min(self.n - 1)
        };
        (snap(x[0]), snap(x[1]))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n * n).filter_map(move |i| {
            let (ix, iy) = (i % n, i / n);
            (self.class[i] == NodeClass::Interior).then_some((ix, iy))
        })
    }

    pub fn ring_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n * n).filter_map(move |i| {
            let (ix, iy) = (i % n, i / n);
            (self.class[i] == NodeClass::Ring).then_some((ix, iy))
        })
    }

    pub fn interior_count(&self) -> usize {
        self.class
            .iter()
            .filter(|c| **c == NodeClass::Interior)
            .count()
    }
}

/// A real-valued function sampled on a grid. Values at exterior nodes are
/// NaN by convention and never read.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid2D) -> Self {
        let mut values = vec![f64::NAN; grid.n * grid.n];
        for (i, c) in grid.class.iter().enumerate() {
            if *c != NodeClass::Exterior {
                values[i] = 0.0;
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    /// Sample `f` at every non-exterior node.
    pub fn from_fn(grid: &Grid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut field = ScalarField::zeros(grid);
        for iy in 0..grid.n {
            for ix in 0..grid.n {
                if grid.class(ix, iy) != NodeClass::Exterior {
                    field.values[grid.idx(ix, iy)] = f(grid.pos(ix, iy));
                }
            }
        }
        field
    }

    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n * grid.n {
            return Err(Error::parameter(format!(
                "value vector length {} does not match grid {}x{}",
                values.len(),
                grid.n,
                grid.n
            )));
        }
        let field = ScalarField {
            grid: grid.clone(),
            values,
        };
        field.check_finite()?;
        Ok(field)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.idx(ix, iy)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, c) in self.grid.class.iter().enumerate() {
            if *c != NodeClass::Exterior && !self.values[i].is_finite() {
                return Err(Error::NonFinite(format!(
                    "field value at node {} / {}",
                    i % self.grid.n,
                    i / self.grid.n
                )));
            }
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "fields live on different grids".to_string(),
            ));
        }
        Ok(())
    }

    /// Largest |self - other| over non-exterior nodes.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.same_grid(other)?;
        let mut m: f64 = 0.0;
        for (i, c) in self.grid.class.iter().enumerate() {
            if *c != NodeClass::Exterior {
                m = m.max((self.values[i] - other.values[i]).abs());
            }
        }
        Ok(m)
    }

    /// Serialize: header line `n=..,h=..,cx=..,cy=..,R=..`, then `n` rows of
    /// `n` comma-separated values, exterior nodes written as `nan`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let g = &self.grid;
        writeln!(
            w,
            "n={},h={:.16e},cx={:.16e},cy={:.16e},R={:.16e}",
            g.n, g.h, g.center[0], g.center[1], g.radius
        )?;
        for iy in 0..g.n {
            let mut row = String::with_capacity(g.n * 24);
            for ix in 0..g.n {
                if ix > 0 {
                    row.push(',');
                }
                let v = self.values[g.idx(ix, iy)];
                if g.class(ix, iy) == NodeClass::Exterior || v.is_nan() {
                    row.push_str("nan");
                } else {
                    row.push_str(&format!("{v:.16e}"));
                }
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parameter("empty field csv"))?;
        let mut n = None;
        let mut h = None;
        let mut cx = None;
        let mut cy = None;
        let mut radius = None;
        for part in header.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::parameter(format!("bad field header entry `{part}`")))?;
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(bad_header)?),
                "h" => h = Some(value.parse::<f64>().map_err(bad_header)?),
                "cx" => cx = Some(value.parse::<f64>().map_err(bad_header)?),
                "cy" => cy = Some(value.parse::<f64>().map_err(bad_header)?),
                "R" => radius = Some(value.parse::<f64>().map_err(bad_header)?),
                other => return Err(Error::parameter(format!("unknown header key `{other}`"))),
            }
        }
        let (n, h, cx, cy, radius) = match (n, h, cx, cy, radius) {
            (Some(n), Some(h), Some(cx), Some(cy), Some(r)) => (n, h, cx, cy, r),
            _ => return Err(Error::parameter("incomplete field header")),
        };
        let grid = make_grid(n, [cx, cy], radius)?;
        if (grid.h - h).abs() > 1e-14 {
            return Err(Error::parameter(format!(
                "header spacing {h} inconsistent with n={n}"
            )));
        }
        let mut values = vec![f64::NAN; n * n];
        for iy in 0..n {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| Error::parameter(format!("missing row {iy}")))?;
            let mut count = 0;
            for (ix, tok) in line.split(',').enumerate() {
                if ix >= n {
                    return Err(Error::parameter(format!("row {lineno}: too many columns")));
                }
                values[iy * n + ix] = if tok == "nan" {
                    f64::NAN
                } else {
                    tok.parse::<f64>().map_err(|e| {
                        Error::parameter(format!("row {lineno} col {ix}: {e}"))
                    })?
                };
                count += 1;
            }
            if count != n {
                return Err(Error::parameter(format!(
                    "row {lineno}: expected {n} columns, got {count}"
                )));
            }
        }
        ScalarField::from_values(&grid, values)
    }
}

fn bad_header<E: std::fmt::Display>(e: E) -> Error {
    Error::parameter(format!("bad field header value: {e}"))
}

/// Maximum of |u| over non-exterior nodes with |x - x0| <= r.
pub fn sup_over_ball(u: &ScalarField, x0: [f64; 2], r: f64) -> Result<f64> {
    let g = u.grid();
    if r < 2.0 * g.h {
        return Err(Error::parameter(format!(
            "ball radius {r} below 2h = {}",
            2.0 * g.h
        )));
    }
    let mut best: Option<f64> = None;
    for iy in 0..g.n {
        for ix in 0..g.n {
            if g.class(ix, iy) == NodeClass::Exterior {
                continue;
            }
            let p = g.pos(ix, iy);
            let d2 = (p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2);
            if d2 <= r * r {
                let v = u.get(ix, iy).abs();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best.ok_or_else(|| Error::parameter("ball contains no masked nodes".to_string()))
}

/// Maximum of u over the shell r - h < |x - x0| <= r (non-exterior nodes).
pub fn sup_over_sphere(u: &ScalarField, x0: [f64; 2], r: f64) -> Result<f64> {
    let g = u.grid();
    if r < 2.0 * g.h {
        return Err(Error::parameter(format!(
            "sphere radius {r} below 2h = {}",
            2.0 * g.h
        )));
    }
    let mut best: Option<f64> = None;
    let mut count = 0usize;
    for iy in 0..g.n {
        for ix in 0..g.n {
            if g.class(ix, iy) == NodeClass::Exterior {
                continue;
            }
            let p = g.pos(ix, iy);
            let d = ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)).sqrt();
            if d > r - g.h && d <= r {
                let v = u.get(ix, iy);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
                count += 1;
            }
        }
    }
    if count < 8 {
        return Err(Error::parameter(format!(
            "shell at radius {r} holds only {count} nodes (need >= 8)"
        )));
    }
    Ok(best.expect("count >= 8 implies a value"))
}
