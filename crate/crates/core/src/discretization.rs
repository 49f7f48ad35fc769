//! Finite-difference stencils on grid fields: the centered 9-point jet,
//! directional second differences, and a monotone Pucci discretization.
//!
//! The centered jet is exact on quadratics. For the gradient magnitude that
//! feeds the degeneracy factor inside the solver, `upwind_gradient_magnitude`
//! uses the centered difference per axis where the one-sided slopes agree in
//! sign and the steeper one-sided slope at sign changes; at a discrete
//! extremum the centered difference vanishes identically and would freeze the
//! degenerate equation there.

use crate::error::{Error, Result};
use crate::grid::{NodeClass, ScalarField};
use crate::operators::{EllipticityPair, SymMat2};

/// First- and second-order centered differences at a node.
#[derive(Clone, Copy, Debug)]
pub struct DiscreteJet {
    pub grad: [f64; 2],
    pub hess: SymMat2,
    pub node: (usize, usize),
}

fn require_interior(u: &ScalarField, node: (usize, usize)) -> Result<()> {
    if u.grid().class(node.0, node.1) != NodeClass::Interior {
        return Err(Error::stencil(format!(
            "node ({}, {}) is not interior",
            node.0, node.1
        )));
    }
    Ok(())
}

/// Centered gradient and 9-point Hessian; exact on quadratics.
pub fn jet_at(u: &ScalarField, node: (usize, usize)) -> Result<DiscreteJet> {
    require_interior(u, node)?;
    let (ix, iy) = node;
    let h = u.grid().h();
    let v = |dx: i64, dy: i64| u.get((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
    let c = v(0, 0);
    let (e, w, n, s) = (v(1, 0), v(-1, 0), v(0, 1), v(0, -1));
    let grad = [(e - w) / (2.0 * h), (n - s) / (2.0 * h)];
    let h2 = h * h;
    let hess = SymMat2::new(
        (e - 2.0 * c + w) / h2,
        (v(1, 1) - v(-1, 1) - v(1, -1) + v(-1, -1)) / (4.0 * h2),
        (n - 2.0 * c + s) / h2,
    );
    Ok(DiscreteJet { grad, hess, node })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilDirection {
    Axis1,
    Axis2,
    DiagUp,
    DiagDown,
}

/// (u(x + hv) - 2u(x) + u(x - hv)) / (h^2 |v|^2) along a lattice direction.
pub fn directional_second_difference(
    u: &ScalarField,
    node: (usize, usize),
    dir: StencilDirection,
) -> Result<f64> {
    require_interior(u, node)?;
    let (ix, iy) = node;
    let v = |dx: i64, dy: i64| u.get((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
    let h2 = u.grid().h() * u.grid().h();
    let (plus, minus, len2) = match dir {
        StencilDirection::Axis1 => (v(1, 0), v(-1, 0), 1.0),
        StencilDirection::Axis2 => (v(0, 1), v(0, -1), 1.0),
        StencilDirection::DiagUp => (v(1, 1), v(-1, -1), 2.0),
        StencilDirection::DiagDown => (v(1, -1), v(-1, 1), 2.0),
    };
    Ok((plus - 2.0 * v(0, 0) + minus) / (h2 * len2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PucciSign {
    Plus,
    Minus,
}

/// Monotone discretization of the Pucci operators built from the two
/// orthogonal lattice frames (axes and diagonals): each frame contributes the
/// extremal eigenvalue-weighted sum of its two directional second
/// differences, and the maximal (resp. minimal) frame value is returned.
/// Exact on isotropic quadratics; increasing any neighbor value never
/// decreases the Plus output.
pub fn pucci_monotone(
    u: &ScalarField,
    node: (usize, usize),
    pair: &EllipticityPair,
    sign: PucciSign,
) -> Result<f64> {
    let d1 = directional_second_difference(u, node, StencilDirection::Axis1)?;
    let d2 = directional_second_difference(u, node, StencilDirection::Axis2)?;
    let d3 = directional_second_difference(u, node, StencilDirection::DiagUp)?;
    let d4 = directional_second_difference(u, node, StencilDirection::DiagDown)?;
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
    let axes = weight(d1) + weight(d2);
    let diags = weight(d3) + weight(d4);
    Ok(match sign {
        PucciSign::Plus => axes.max(diags),
        PucciSign::Minus => axes.min(diags),
    })
}

/// Per-axis slope for the degeneracy factor: the median of the two one-sided
/// slopes and the centered slope (all in magnitude). On monotone profiles
/// this is the centered difference (second order); at a discrete extremum it
/// degrades to the one-sided magnitude instead of vanishing, and it is
/// continuous in the nodal values, which the relaxation requires.
#[inline]
pub(crate) fn median_slope(dp: f64, dm: f64) -> f64 {
    let a = dp.abs();
    let b = dm.abs();
    let c = 0.5 * (dp + dm).abs();
    // median of three
    a.max(b).min(a.min(b).max(c))
}

/// Gradient magnitude used inside the gradient factor H.
#[inline]
pub fn monotone_gradient_magnitude(u: &ScalarField, node: (usize, usize)) -> Result<f64> {
    require_interior(u, node)?;
    let (ix, iy) = node;
    let h = u.grid().h();
    let v = |dx: i64, dy: i64| u.get((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
    let c = v(0, 0);
    let gx = median_slope((v(1, 0) - c) / h, (c - v(-1, 0)) / h);
    let gy = median_slope((v(0, 1) - c) / h, (c - v(0, -1)) / h);
    Ok((gx * gx + gy * gy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample(n: usize, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let g = make_grid(n, [0.0, 0.0], 1.0).unwrap();
        ScalarField::from_fn(&g, f)
    }

    #[test]
    fn jet_exact_on_quadratics() {
        let u = sample(33, |x| {
            0.3 + 1.2 * x[0] - 0.7 * x[1] + 0.5 * (2.0 * x[0] * x[0] - 3.0 * x[1] * x[1])
                + 1.5 * x[0] * x[1]
        });
        for node in [(16, 16), (10, 20), (20, 12)] {
            let j = jet_at(&u, node).unwrap();
            let p = u.grid().pos(node.0, node.1);
            let grad = [1.2 + 2.0 * p[0] + 1.5 * p[1], -0.7 - 3.0 * p[1] + 1.5 * p[0]];
            assert!((j.grad[0] - grad[0]).abs() < 1e-10);
            assert!((j.grad[1] - grad[1]).abs() < 1e-10);
            assert!((j.hess.a11 - 2.0).abs() < 1e-10);
            assert!((j.hess.a22 + 3.0).abs() < 1e-10);
            assert!((j.hess.a12 - 1.5).abs() < 1e-10);
        }
    }

    #[test]
    fn jet_linear_field_has_zero_hessian() {
        let u = sample(33, |x| 2.0 * x[0] - x[1] + 0.4);
        let j = jet_at(&u, (16, 16)).unwrap();
        assert_eq!(j.hess.frobenius_norm(), 0.0);
    }

    #[test]
    fn jet_cross_term_exact() {
        let u = sample(33, |x| x[0] * x[1]);
        let j = jet_at(&u, (16, 16)).unwrap();
        assert!((j.hess.a12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jet_rejects_non_interior() {
        let u = sample(33, |x| x[0]);
        assert!(jet_at(&u, (0, 0)).is_err());
    }

    #[test]
    fn jet_matches_analytic_derivative() {
        // |x|^(4/3) at the node nearest (0.5, 0): grad = (4/3) 0.5^(1/3) e1
        let n = 129;
        let u = sample(n, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(4.0 / 3.0));
        let node = u.grid().nearest_node([0.5, 0.0]);
        let j = jet_at(&u, node).unwrap();
        let expect = 4.0 / 3.0 * 0.5f64.powf(1.0 / 3.0);
        let h = u.grid().h();
        assert!((j.grad[0] - expect).abs() < 10.0 * h * h, "{}", j.grad[0]);
        assert!(j.grad[1].abs() < 10.0 * h * h);
    }

    #[test]
    fn directional_differences() {
        let affine = sample(33, |x| 1.0 - 2.0 * x[0] + 0.5 * x[1]);
        for dir in [
            StencilDirection::Axis1,
            StencilDirection::Axis2,
            StencilDirection::DiagUp,
            StencilDirection::DiagDown,
        ] {
            assert_eq!(
                directional_second_difference(&affine, (16, 16), dir).unwrap(),
                0.0
            );
        }
        let half_sq = sample(33, |x| 0.5 * x[0] * x[0]);
        let d = directional_second_difference(&half_sq, (16, 16), StencilDirection::Axis1).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        let iso = sample(33, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let d = directional_second_difference(&iso, (16, 16), StencilDirection::DiagUp).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn refinement_rate_is_second_order() {
        // jet errors on a C^4 field shrink like h^2 (log-log slope 2 +- 0.2)
        let f = |x: [f64; 2]| (2.0 * x[0]).sin() * (1.5 * x[1]).cos();
        let fx = |x: [f64; 2]| 2.0 * (2.0 * x[0]).cos() * (1.5 * x[1]).cos();
        let mut samples = Vec::new();
        for n in [65usize, 129, 257] {
            let u = sample(n, f);
            let g = u.grid();
            let mut worst: f64 = 0.0;
            for node in [(n / 2 + 1, n / 2 - 3), (n / 2 - 5, n / 2 + 7)] {
                let j = jet_at(&u, node).unwrap();
                let p = g.pos(node.0, node.1);
                worst = worst.max((j.grad[0] - fx(p)).abs());
            }
            samples.push((g.h(), worst));
        }
        let slope = {
            // two-point log-log slopes bracket the rate
            let s1 = (samples[0].1 / samples[1].1).ln() / (samples[0].0 / samples[1].0).ln();
            let s2 = (samples[1].1 / samples[2].1).ln() / (samples[1].0 / samples[2].0).ln();
            0.5 * (s1 + s2)
        };
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn pucci_monotone_examples() {
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let affine = sample(33, |x| 3.0 * x[0] - x[1]);
        assert_eq!(
            pucci_monotone(&affine, (16, 16), &pair, PucciSign::Plus).unwrap(),
            0.0
        );
        let iso = sample(33, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let v = pucci_monotone(&iso, (16, 16), &pair, PucciSign::Plus).unwrap();
        assert!((v - 4.0).abs() < 1e-10, "{v}");
        let v = pucci_monotone(&iso, (16, 16), &pair, PucciSign::Minus).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn pucci_monotone_cross_validates_eigen_path() {
        // mismatch against the eigen evaluation stays below 0.15 * (|e1|+|e2|)
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let n = 129;
        let u = sample(n, |x| {
            (2.2 * x[0]).sin() * (1.7 * x[1]).cos() + 0.3 * (3.0 * x[1]).sin()
        });
        let g = make_grid(n, [0.0, 0.0], 1.0).unwrap();
        for (ix, iy) in g.interior_nodes().step_by(7) {
            let j = jet_at(&u, (ix, iy)).unwrap();
            let eigen = crate::operators::pucci_plus(&j.hess, &pair);
            let mono = pucci_monotone(&u, (ix, iy), &pair, PucciSign::Plus).unwrap();
            let bound = 0.15 * j.hess.nuclear_norm() + 1e-9;
            assert!(
                (eigen - mono).abs() <= bound,
                "node ({ix},{iy}): eigen {eigen}, monotone {mono}, bound {bound}"
            );
        }
    }

    #[test]
    fn pucci_monotone_is_degenerate_elliptic() {
        // increasing any neighbor value does not decrease the output
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let base = sample(17, |x| (x[0] - 0.3) * x[1] + 0.2 * x[0]);
        let node = (8, 8);
        let v0 = pucci_monotone(&base, node, &pair, PucciSign::Plus).unwrap();
        for (dx, dy) in [
            (1i64, 0i64),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ] {
            let mut bumped = base.clone();
            let idx = bumped
                .grid()
                .idx((node.0 as i64 + dx) as usize, (node.1 as i64 + dy) as usize);
            bumped.values_mut()[idx] += 0.37;
            let v1 = pucci_monotone(&bumped, node, &pair, PucciSign::Plus).unwrap();
            assert!(v1 >= v0, "neighbor ({dx},{dy}) decreased the scheme");
        }
    }

    #[test]
    fn monotone_gradient_matches_centered_on_monotone_profiles() {
        let u = sample(65, |x| (1.3 * x[0]).exp() + 0.7 * x[1]);
        for node in [(32, 32), (20, 40), (44, 28)] {
            let j = jet_at(&u, node).unwrap();
            let centered = (j.grad[0] * j.grad[0] + j.grad[1] * j.grad[1]).sqrt();
            let s = monotone_gradient_magnitude(&u, node).unwrap();
            assert!((centered - s).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_gradient_is_positive_at_extrema() {
        let u = sample(65, |x| x[0] * x[0] + x[1] * x[1]);
        // centered gradient vanishes at the origin node; the median slope
        // sees the one-sided slope h per axis
        let s = monotone_gradient_magnitude(&u, (32, 32)).unwrap();
        let h = u.grid().h();
        assert!(s > 0.0);
        assert!((s - h * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn median_slope_is_continuous_across_the_switch() {
        // sweep d- through 0 with d+ fixed: no jumps larger than the step
        let dp = 0.8;
        let mut prev = median_slope(dp, -0.2);
        let mut dm = -0.2;
        while dm < 0.2 {
            dm += 1e-4;
            let cur = median_slope(dp, dm);
            assert!((cur - prev).abs() < 1e-3, "jump at dm={dm}: {prev} -> {cur}");
            prev = cur;
        }
    }
}
