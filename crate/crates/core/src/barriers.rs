//! Closed-form radial barriers, the sharp radial profile and its matched
//! source, and the root T0 certifying the non-degeneracy constant.

use crate::degeneracy::ModulatingFn;
use crate::error::{Error, Result};

/// Sharp growth exponent (p+2)/(p+1).
pub fn sharp_exponent(p: f64) -> f64 {
    (p + 2.0) / (p + 1.0)
}

/// Improved free-boundary exponent (p+2)/(p+1-mu) of the absorption problem.
pub fn deadcore_exponent(p: f64, mu: f64) -> f64 {
    (p + 2.0) / (p + 1.0 - mu)
}

/// Gradient decay exponent (1+mu)/(p+1-mu) at the free boundary.
pub fn gradient_decay_exponent(p: f64, mu: f64) -> f64 {
    (1.0 + mu) / (p + 1.0 - mu)
}

/// The radial profile |x|^{(p+2)/(p+1)}, the extremal of the interior growth
/// estimate.
pub fn sharp_radial_profile(x: [f64; 2], p: f64) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    r.powf(sharp_exponent(p))
}

/// Source making the sharp radial profile an exact solution of
/// [ |Dv|^p + a(x) |Dv|^q ] tr(D^2 v) = f in dimension `n_dim`:
///   f(x) = (1/(p+1) + N - 1) [ g^{p+1} + a(x) g^{q+1} |x|^{(q-p)/(p+1)} ]
/// with g = (p+2)/(p+1). Obtained by differentiating the profile; finite at
/// the origin for q >= p.
pub fn sharp_profile_source(x: [f64; 2], p: f64, q: f64, n_dim: f64, a: &ModulatingFn) -> f64 {
    let gamma = sharp_exponent(p);
    let lead = 1.0 / (p + 1.0) + (n_dim - 1.0);
    let expo = (q - p) / (p + 1.0);
    let radial = if expo == 0.0 {
        1.0
    } else {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        r.powf(expo)
    };
    lead * (gamma.powf(p + 1.0) + a.eval(x) * gamma.powf(q + 1.0) * radial)
}

/// Inputs from which the non-degeneracy constants are assembled.
#[derive(Clone, Copy, Debug)]
pub struct BarrierInputs {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub l1: f64,
    pub n_dim: f64,
    pub diam: f64,
    pub norm_a: f64,
    /// m = inf f > 0
    pub m_inf: f64,
}

/// Assembled constants: Xi2 and Xi3 weight the barrier excess, T0 is the
/// smallest positive root of that excess, and c in (0, T0) is the certified
/// growth constant (default 0.9 T0). Xi1 is the bracket value at the chosen c.
#[derive(Clone, Copy, Debug)]
pub struct BarrierConstants {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub m_inf: f64,
    pub t0: f64,
    pub c: f64,
    pub inputs: BarrierInputs,
}

/// Excess of the barrier's equation value over the source floor:
/// g(t) = Xi2 t^{p+1} [ ((p+2)/(p+1))^{p+1} + Xi3 t^{q-p} ] - m.
pub fn barrier_excess(t: f64, bc: &BarrierConstants) -> f64 {
    let p = bc.inputs.p;
    let q = bc.inputs.q;
    let gamma = sharp_exponent(p);
    bc.xi2 * t.powf(p + 1.0) * (gamma.powf(p + 1.0) + bc.xi3 * t.powf(q - p)) - bc.m_inf
}

impl BarrierConstants {
    /// Compute Xi2, Xi3 and locate the smallest positive root of the excess
    /// by doubling then bisection to |g| <= 1e-12.
    pub fn new(inputs: BarrierInputs) -> Result<Self> {
        let BarrierInputs {
            p,
            q,
            lambda,
            big_lambda,
            l1,
            n_dim,
            diam,
            norm_a,
            m_inf,
        } = inputs;
        if m_inf <= 0.0 {
            return Err(Error::parameter(format!(
                "the source floor must be positive (m = {m_inf})"
            )));
        }
        if !(p > 0.0 && q >= p && lambda > 0.0 && big_lambda >= lambda && l1 > 0.0) {
            return Err(Error::parameter("invalid barrier inputs"));
        }
        if !(diam > 0.0 && norm_a >= 0.0 && n_dim >= 1.0) {
            return Err(Error::parameter("invalid barrier inputs"));
        }
        let gamma = sharp_exponent(p);
        let xi2 = l1 * (lambda / (p + 1.0) + (n_dim - 1.0) * big_lambda);
        let xi3 = norm_a * gamma.powf(q + 1.0) * (diam / 2.0).powf((q - p) / (p + 1.0));

        let mut bc = BarrierConstants {
            xi1: 0.0,
            xi2,
            xi3,
            m_inf,
            t0: 0.0,
            c: 0.0,
            inputs,
        };
        // g(0) = -m < 0 and g is increasing, so double until positive
        let mut hi = 1.0;
        let mut guard = 0;
        while barrier_excess(hi, &bc) <= 0.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 {
                return Err(Error::NonFinite("barrier root bracket diverged".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = barrier_excess(mid, &bc);
            if v.abs() <= 1e-12 {
                lo = mid;
                hi = mid;
                break;
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        bc.t0 = 0.5 * (lo + hi);
        bc.c = 0.9 * bc.t0;
        bc.xi1 = gamma.powf(p + 1.0) * bc.c.powf(p + 1.0)
            + norm_a
                * gamma.powf(q + 1.0)
                * bc.c.powf(q + 1.0)
                * (diam / 2.0).powf((q - p) / (p + 1.0));
        Ok(bc)
    }
}

/// Radial growth barrier c |x|^{(p+2)/(p+1)}.
pub fn nondegeneracy_barrier(x: [f64; 2], c: f64, p: f64) -> f64 {
    c * sharp_radial_profile(x, p)
}

/// Radial absorption barrier C |x|^{(p+2)/(p+1-mu)} for 0 < mu < p+1.
pub fn deadcore_barrier(x: [f64; 2], c: f64, p: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < p + 1.0) {
        return Err(Error::parameter(format!(
            "reaction order must satisfy 0 < mu < p + 1, got {mu}"
        )));
    }
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    Ok(c * r.powf(deadcore_exponent(p, mu)))
}
