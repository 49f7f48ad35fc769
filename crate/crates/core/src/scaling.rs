//! Normalization and iteration quantities: the smallness-regime parameters
//! (kappa, tau), rescaled problem families, dyadic decay sums, and the sharp
//! Hoelder exponent gate.

use std::sync::Arc;

use crate::degeneracy::{DegeneracyLaw, ModulatingFn};
use crate::error::{Error, Result};
use crate::operators::{OmegaModulus, OperatorSpec};
use crate::solver::{ProblemSpec, SourceSpec};

/// Parameters of the geometric iteration. The exponent `beta` must satisfy
/// beta < alpha_f and beta <= 1/(p+1); `rho` and `iota` are gated by the
/// frozen-problem interior estimate constant `approx_constant`.
#[derive(Clone, Copy, Debug)]
pub struct ScalingParams {
    pub kappa: f64,
    pub tau: f64,
    pub delta: f64,
    pub iota: f64,
    pub rho: f64,
    pub beta: f64,
    pub alpha_f: f64,
    pub x0: [f64; 2],
}

impl ScalingParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kappa: f64,
        tau: f64,
        delta: f64,
        iota: f64,
        rho: f64,
        beta: f64,
        alpha_f: f64,
        x0: [f64; 2],
        p: f64,
        approx_constant: f64,
    ) -> Result<Self> {
        if !(kappa > 0.0) || !(tau > 0.0 && tau < 1.0) {
            return Err(Error::parameter(format!(
                "need kappa > 0 and tau in (0,1), got ({kappa}, {tau})"
            )));
        }
        if !(alpha_f > 0.0 && alpha_f <= 1.0) {
            return Err(Error::parameter(format!(
                "alpha_f must lie in (0, 1], got {alpha_f}"
            )));
        }
        if !(beta > 0.0 && beta < alpha_f && beta <= 1.0 / (p + 1.0)) {
            return Err(Error::parameter(format!(
                "beta must lie in (0, alpha_f) and (0, 1/(p+1)] = (0, {}], got {beta}",
                1.0 / (p + 1.0)
            )));
        }
        let rho_max = (0.75 / approx_constant)
            .powf(1.0 / (alpha_f - beta))
            .min(0.5);
        if !(rho > 0.0 && rho <= rho_max) {
            return Err(Error::parameter(format!(
                "rho must lie in (0, {rho_max}], got {rho}"
            )));
        }
        let iota_max = rho.powf(1.0 + beta) / 8.0;
        if !(iota > 0.0 && iota <= iota_max) {
            return Err(Error::parameter(format!(
                "iota must lie in (0, {iota_max}], got {iota}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::parameter(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(ScalingParams {
            kappa,
            tau,
            delta,
            iota,
            rho,
            beta,
            alpha_f,
            x0,
        })
    }
}

/// Normalization constants putting a solution into the unit regime:
/// kappa = |u| + 1 + delta^{-1} |f|^{1/(p+1)} and
/// tau = min(1/2, dist/4, (delta/(|f|+1))^{1/(p+2)}, omega^{-1}(delta/(C_F+1))).
pub fn compute_kappa_tau(
    norm_u: f64,
    norm_f: f64,
    delta: f64,
    p: f64,
    dist: f64,
    omega: &OmegaModulus,
    c_f: f64,
) -> Result<(f64, f64)> {
    if norm_u < 0.0 || norm_f < 0.0 || dist <= 0.0 || p <= 0.0 {
        return Err(Error::parameter(
            "norms must be >= 0 and dist, p positive",
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::parameter(format!("delta must lie in (0,1), got {delta}")));
    }
    let kappa = norm_u + 1.0 + norm_f.powf(1.0 / (p + 1.0)) / delta;
    let tau = (0.5f64)
        .min(0.25 * dist)
        .min((delta / (norm_f + 1.0)).powf(1.0 / (p + 2.0)))
        .min(omega.inverse(delta / (c_f + 1.0))?);
    Ok((kappa, tau))
}

/// Transform a problem into the unit-ball normalized family: the returned
/// problem evaluates, identically in (x, xi, X, s),
///   H'(x,xi) F'(x,X) - f'(x,s)
///     = (tau^{p+2}/kappa^{p+1}) [H F - f](x0 + tau x, (kappa/tau) xi,
///                                (kappa/tau^2) X, kappa s).
pub fn rescale_problem(
    problem: &ProblemSpec,
    kappa: f64,
    tau: f64,
    x0: [f64; 2],
) -> Result<ProblemSpec> {
    if !(kappa > 0.0 && tau > 0.0) {
        return Err(Error::parameter(format!(
            "need kappa, tau > 0, got ({kappa}, {tau})"
        )));
    }
    let law = problem.degeneracy.as_ref().ok_or_else(|| {
        Error::parameter("rescaling requires an explicit degeneracy law")
    })?;
    let (p, q) = (law.p, law.q);

    let operator = OperatorSpec::rescaled(
        problem.operator.clone(),
        tau * tau / kappa,
        kappa / (tau * tau),
        kappa / tau,
        x0,
        tau,
    );

    let a_scaled = ModulatingFn::Rescaled {
        inner: Box::new(law.a.clone()),
        coeff: (tau / kappa).powf(p - q),
        origin: x0,
        stretch: tau,
    };
    let degeneracy = DegeneracyLaw::with_bracket(p, q, a_scaled, law.l1, law.l2, law.eps_reg)?;

    let source_coeff = tau.powf(p + 2.0) / kappa.powf(p + 1.0);
    let source = match &problem.source {
        SourceSpec::Constant(c) => SourceSpec::Constant(c * source_coeff),
        SourceSpec::Bounded { f, u_dependent } => {
            let f = f.clone();
            SourceSpec::Bounded {
                f: Arc::new(move |x: [f64; 2], s: f64| {
                    source_coeff * f([x0[0] + tau * x[0], x0[1] + tau * x[1]], kappa * s)
                }),
                u_dependent: *u_dependent,
            }
        }
        SourceSpec::DeadCore { f, mu } => {
            let f = f.clone();
            let mu = *mu;
            let coeff = source_coeff * kappa.powf(mu);
            SourceSpec::DeadCore {
                f: Arc::new(move |x: [f64; 2]| {
                    coeff * f([x0[0] + tau * x[0], x0[1] + tau * x[1]])
                }),
                mu,
            }
        }
    };

    let g = problem.boundary.clone();
    let boundary: crate::solver::SpatialFn = Arc::new(move |x: [f64; 2]| {
        g([x0[0] + tau * x[0], x0[1] + tau * x[1]]) / kappa
    });
    let obstacle = problem.obstacle.as_ref().map(|phi| {
        let phi = phi.clone();
        let f: crate::solver::SpatialFn = Arc::new(move |x: [f64; 2]| {
            phi([x0[0] + tau * x[0], x0[1] + tau * x[1]]) / kappa
        });
        f
    });

    Ok(ProblemSpec {
        operator,
        degeneracy: Some(degeneracy),
        source,
        boundary,
        obstacle,
    })
}

/// Dyadic decay bound A_k = rho^{k(1+beta)} + |Du(0)| sum_{j<k} rho^{k+j beta},
/// evaluated through the closed geometric-series form.
pub fn dyadic_a(k: u32, rho: f64, beta: f64, grad0: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::parameter("dyadic index starts at k = 1"));
    }
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::parameter(format!("rho must lie in (0, 1/2], got {rho}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::parameter(format!("beta must lie in (0,1), got {beta}")));
    }
    if grad0 < 0.0 {
        return Err(Error::parameter("gradient magnitude must be >= 0"));
    }
    let kf = k as f64;
    let geometric = (1.0 - rho.powf(kf * beta)) / (1.0 - rho.powf(beta));
    Ok(rho.powf(kf * (1.0 + beta)) + grad0 * rho.powf(kf) * geometric)
}

/// M0 = 1 / (rho^{1+beta} (1 - rho^beta)); grows without bound as rho -> 0.
pub fn induction_constant_m0(rho: f64, beta: f64) -> f64 {
    1.0 / (rho.powf(1.0 + beta) * (1.0 - rho.powf(beta)))
}

/// State of the dyadic iteration at step k.
#[derive(Clone, Copy, Debug)]
pub struct DyadicState {
    pub k: u32,
    pub a_k: f64,
    pub m0: f64,
}

impl DyadicState {
    pub fn new(k: u32, rho: f64, beta: f64, grad0: f64) -> Result<Self> {
        Ok(DyadicState {
            k,
            a_k: dyadic_a(k, rho, beta, grad0)?,
            m0: induction_constant_m0(rho, beta),
        })
    }
}

/// Radius r0 = |Du(0)|^{1/beta} splitting the critical zone from the
/// uniformly elliptic regime. A vanishing gradient signals the point lies
/// inside the critical zone for every radius.
pub fn critical_radius(grad0: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::parameter(format!("beta must lie in (0,1), got {beta}")));
    }
    if grad0 < 0.0 {
        return Err(Error::parameter("gradient magnitude must be >= 0"));
    }
    if grad0 == 0.0 {
        return Err(Error::DegenerateGradient(
            "zero gradient: the point lies in the critical zone at every radius".to_string(),
        ));
    }
    Ok(grad0.powf(1.0 / beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SymMat2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kappa_tau_plug_ins() {
        let omega = OmegaModulus::Linear { slope: 1.0 };
        let (kappa, tau) =
            compute_kappa_tau(1.0, 1.0, 0.1, 2.0, 2.0, &omega, 0.0).unwrap();
        assert!((kappa - 12.0).abs() < 1e-12);
        assert!((tau - 0.1).abs() < 1e-12);
        // the (delta/(|f|+1))^{1/(p+2)} branch evaluates to 0.05^{1/4}
        assert!((0.05f64.powf(0.25) - 0.4728708045015879).abs() < 1e-12);

        let (kappa, _) = compute_kappa_tau(1.0, 0.0, 0.1, 2.0, 2.0, &omega, 0.0).unwrap();
        assert!((kappa - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_exponent_gate() {
        let ok = ScalingParams::new(
            1.0, 0.5, 0.1, 1e-3, 0.25, 0.33, 1.0, [0.0, 0.0], 2.0, 1.0,
        );
        assert!(ok.is_ok());
        // beta above 1/(p+1)
        let bad = ScalingParams::new(
            1.0, 0.5, 0.1, 1e-3, 0.25, 0.34, 1.0, [0.0, 0.0], 2.0, 1.0,
        );
        assert!(bad.is_err());
        // beta above alpha_f
        let bad = ScalingParams::new(
            1.0, 0.5, 0.1, 1e-3, 0.25, 0.3, 0.3, [0.0, 0.0], 2.0, 1.0,
        );
        assert!(bad.is_err());
        // iota above rho^{1+beta}/8
        let bad = ScalingParams::new(
            1.0, 0.5, 0.1, 0.05, 0.25, 0.33, 1.0, [0.0, 0.0], 2.0, 1.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn dyadic_plug_ins() {
        let v = dyadic_a(2, 0.5, 1.0 / 3.0, 0.0).unwrap();
        assert!((v - 2.0f64.powf(-8.0 / 3.0)).abs() < 1e-14);
        assert!((v - 0.157490).abs() < 1e-6);

        let v = dyadic_a(1, 0.5, 1.0 / 3.0, 1.0).unwrap();
        assert!((v - (2.0f64.powf(-4.0 / 3.0) + 0.5)).abs() < 1e-14);
        assert!((v - 0.896850).abs() < 1e-6);

        let v = dyadic_a(1, 0.3, 0.25, 0.0).unwrap();
        assert!((v - 0.3f64.powf(1.25)).abs() < 1e-15);
    }

    #[test]
    fn dyadic_closed_form_matches_literal_sum() {
        for &(rho, beta, grad0) in &[(0.5, 1.0 / 3.0, 0.0), (0.5, 0.25, 1.0), (0.37, 0.4, 0.2)] {
            for k in 1..=30u32 {
                let closed = dyadic_a(k, rho, beta, grad0).unwrap();
                let mut sum = 0.0;
                for j in 0..k {
                    sum += rho.powf(k as f64 + j as f64 * beta);
                }
                let literal = rho.powf(k as f64 * (1.0 + beta)) + grad0 * sum;
                assert!(
                    (closed - literal).abs() <= 1e-14,
                    "k={k}: {closed} vs {literal}"
                );
            }
        }
    }

    #[test]
    fn m0_values() {
        let v = induction_constant_m0(0.5, 1.0 / 3.0);
        assert!((v - 12.2138).abs() < 1e-3, "{v}");
        let v = induction_constant_m0(0.5, 1.0 - 1e-12);
        assert!((v - 8.0).abs() < 1e-9, "{v}");
        assert!(induction_constant_m0(1e-210, 0.5) > 1e300);
    }

    #[test]
    fn critical_radius_values() {
        assert_eq!(critical_radius(1.0, 0.5).unwrap(), 1.0);
        let v = critical_radius(0.5, 1.0 / 3.0).unwrap();
        assert!((v - 0.125).abs() < 1e-12);
        // boundary of the critical zone inverts exactly
        let r: f64 = 0.37;
        let beta = 0.29;
        let v = critical_radius(r.powf(beta), beta).unwrap();
        assert!((v - r).abs() < 1e-12);
        assert!(critical_radius(0.0, 0.5).is_err());
    }

    #[test]
    fn rescale_consistency_identity() {
        use crate::operators::EllipticityPair;
        // H' F' - f' must equal (tau^{p+2}/kappa^{p+1}) (H F - f) at mapped
        // arguments, for every sampled (x, xi, X, s)
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Power { alpha: 1.0 }).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::pucci_plus_op(EllipticityPair::new(1.0, 2.0).unwrap()),
            Some(law.clone()),
            SourceSpec::bounded(Arc::new(|x: [f64; 2], s: f64| {
                1.0 + 0.5 * x[0] - 0.2 * x[1] + 0.1 * s
            })),
            Arc::new(|_| 0.0),
        )
        .unwrap();
        let (kappa, tau) = (12.0, 0.1);
        let x0 = [0.15, -0.2];
        let rescaled = rescale_problem(&problem, kappa, tau, x0).unwrap();
        let scale = tau.powf(4.0) / kappa.powf(3.0);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let x = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let xi: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let xm = SymMat2::random_box(&mut rng);
            let s = rng.gen_range(-1.0..1.0);

            let xi_norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let lhs = rescaled
                .gradient_factor(x, xi_norm)
                .unwrap()
                * rescaled.operator.evaluate(x, xi, &xm).unwrap()
                - rescaled.source.eval(x, s);

            let y = [x0[0] + tau * x[0], x0[1] + tau * x[1]];
            let xi_big = [kappa / tau * xi[0], kappa / tau * xi[1]];
            let xi_big_norm = (xi_big[0] * xi_big[0] + xi_big[1] * xi_big[1]).sqrt();
            let rhs = scale
                * (problem.gradient_factor(y, xi_big_norm).unwrap()
                    * problem
                        .operator
                        .evaluate(y, xi_big, &xm.scale(kappa / (tau * tau)))
                        .unwrap()
                    - problem.source.eval(y, kappa * s));
            assert!(
                (lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn rescale_identity_transformation() {
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.5)).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::Constant(1.0),
            Arc::new(|_| 0.0),
        )
        .unwrap();
        let id = rescale_problem(&problem, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let m = SymMat2::new(0.5, -0.2, 0.9);
        for x in [[0.1, 0.2], [-0.4, 0.3]] {
            let a = id.operator.evaluate(x, [1.0, 0.0], &m).unwrap();
            let b = problem.operator.evaluate(x, [1.0, 0.0], &m).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert_eq!(id.source.eval(x, 0.3), problem.source.eval(x, 0.3));
        }
    }

    #[test]
    fn rescale_linear_trace_is_invariant() {
        // 1-homogeneous linear operator: F' = F for any kappa, tau
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.0)).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::Constant(0.0),
            Arc::new(|_| 0.0),
        )
        .unwrap();
        let rescaled = rescale_problem(&problem, 7.3, 0.2, [0.1, 0.1]).unwrap();
        let m = SymMat2::new(1.3, 0.4, -0.6);
        let v = rescaled.operator.evaluate([0.2, -0.1], [0.0, 0.0], &m).unwrap();
        assert!((v - m.trace()).abs() < 1e-12);
    }

    #[test]
    fn rescaled_constant_source_plug_in() {
        let law = DegeneracyLaw::new(2.0, 3.0, ModulatingFn::Constant(0.0)).unwrap();
        let problem = ProblemSpec::new(
            OperatorSpec::laplacian(),
            Some(law),
            SourceSpec::Constant(1.0),
            Arc::new(|_| 0.0),
        )
        .unwrap();
        let rescaled = rescale_problem(&problem, 12.0, 0.1, [0.0, 0.0]).unwrap();
        let expect = 0.1f64.powi(4) / 12.0f64.powi(3);
        assert!((expect - 5.787e-8).abs() < 1e-10);
        match rescaled.source {
            SourceSpec::Constant(c) => assert!((c - expect).abs() < 1e-20),
            _ => panic!("constant source should stay constant"),
        }
    }
}
