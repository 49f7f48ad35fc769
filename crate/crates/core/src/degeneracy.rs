//! The non-homogeneous gradient degeneracy K(x, s) = s^p + a(x) s^q and its
//! regularized variant used by the solver.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Evaluate s^e with fast paths for the exponents that dominate inner loops.
#[inline]
pub(crate) fn power(s: f64, e: f64) -> f64 {
    if e == 2.0 {
        s * s
    } else if e == 1.0 {
        s
    } else if e == 3.0 {
        s * s * s
    } else if e == 4.0 {
        let s2 = s * s;
        s2 * s2
    } else {
        s.powf(e)
    }
}

/// Nonnegative modulating coefficient a(x).
#[derive(Clone)]
pub enum ModulatingFn {
    Constant(f64),
    /// a(x) = |x|^alpha
    Power { alpha: f64 },
    /// radial table with linear interpolation, clamped at the ends
    RadialTable { radii: Vec<f64>, values: Vec<f64> },
    Custom(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
    /// coeff * inner(origin + stretch x), produced by problem rescaling
    Rescaled {
        inner: Box<ModulatingFn>,
        coeff: f64,
        origin: [f64; 2],
        stretch: f64,
    },
}

impl std::fmt::Debug for ModulatingFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModulatingFn::Constant(c) => write!(f, "Constant({c})"),
            ModulatingFn::Power { alpha } => write!(f, "Power(alpha={alpha})"),
            ModulatingFn::RadialTable { radii, .. } => {
                write!(f, "RadialTable({} knots)", radii.len())
            }
            ModulatingFn::Custom(_) => write!(f, "Custom(..)"),
            ModulatingFn::Rescaled { inner, coeff, .. } => {
                write!(f, "Rescaled({coeff} * {inner:?})")
            }
        }
    }
}

impl ModulatingFn {
    pub fn radial_table(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::parameter(
                "radial table needs matching radii/values with >= 2 knots",
            ));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::parameter("radial table radii must increase"));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::parameter("radial table values must be >= 0"));
        }
        Ok(ModulatingFn::RadialTable { radii, values })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            ModulatingFn::Constant(c) => *c,
            ModulatingFn::Power { alpha } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                power(r, *alpha)
            }
            ModulatingFn::RadialTable { radii, values } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r <= radii[0] {
                    return values[0];
                }
                if r >= *radii.last().unwrap() {
                    return *values.last().unwrap();
                }
                let k = radii.partition_point(|&q| q < r).max(1);
                let (r0, r1) = (radii[k - 1], radii[k]);
                let t = (r - r0) / (r1 - r0);
                values[k - 1] * (1.0 - t) + values[k] * t
            }
            ModulatingFn::Custom(f) => f(x),
            ModulatingFn::Rescaled {
                inner,
                coeff,
                origin,
                stretch,
            } => coeff * inner.eval([origin[0] + stretch * x[0], origin[1] + stretch * x[1]]),
        }
    }
}

/// Gradient factor specification: exponents 0 < p <= q, modulating function,
/// bracket constants 0 < L1 <= L2, and a numerical gradient floor.
///
/// The built-in gradient factor is the model case H = K itself, so the
/// bracket must allow it: L1 <= 1 <= L2.
#[derive(Clone, Debug)]
pub struct DegeneracyLaw {
    pub p: f64,
    pub q: f64,
    pub a: ModulatingFn,
    pub l1: f64,
    pub l2: f64,
    /// gradient floor for the solver; 0 means pure evaluation
    pub eps_reg: f64,
}

impl DegeneracyLaw {
    pub fn new(p: f64, q: f64, a: ModulatingFn) -> Result<Self> {
        Self::with_bracket(p, q, a, 1.0, 1.0, 0.0)
    }

    pub fn with_bracket(
        p: f64,
        q: f64,
        a: ModulatingFn,
        l1: f64,
        l2: f64,
        eps_reg: f64,
    ) -> Result<Self> {
        if !(p > 0.0 && q >= p && q.is_finite()) {
            return Err(Error::parameter(format!(
                "exponents must satisfy 0 < p <= q, got p={p}, q={q}"
            )));
        }
        if !(l1 > 0.0 && l2 >= l1 && l1 <= 1.0 && l2 >= 1.0) {
            return Err(Error::parameter(format!(
                "bracket must satisfy 0 < L1 <= 1 <= L2 (H = K is the model case), got ({l1}, {l2})"
            )));
        }
        if eps_reg < 0.0 {
            return Err(Error::parameter("eps_reg must be >= 0"));
        }
        Ok(DegeneracyLaw {
            p,
            q,
            a,
            l1,
            l2,
            eps_reg,
        })
    }

    /// K(x, s) = s^p + a(x) s^q for s >= 0.
    pub fn k_value(&self, x: [f64; 2], s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::parameter(format!(
                "gradient magnitude must be >= 0, got {s}"
            )));
        }
        Ok(self.k_unchecked(x, s))
    }

    #[inline]
    pub(crate) fn k_unchecked(&self, x: [f64; 2], s: f64) -> f64 {
        power(s, self.p) + self.a.eval(x) * power(s, self.q)
    }

    #[inline]
    pub(crate) fn k_with_coeff(&self, a_val: f64, s: f64) -> f64 {
        power(s, self.p) + a_val * power(s, self.q)
    }

    /// K with the gradient magnitude floored at `eps_reg`.
    pub fn k_regularized(&self, x: [f64; 2], s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::parameter(format!(
                "gradient magnitude must be >= 0, got {s}"
            )));
        }
        Ok(self.k_unchecked(x, s.max(self.eps_reg)))
    }
}

/// Multi-phase extension: s^p + sum_i a_i(x) s^{q_i} with ordered exponents
/// p <= q_1 <= ... <= q_N.
#[derive(Clone, Debug)]
pub struct MultiPhaseLaw {
    pub p: f64,
    pub terms: Vec<(f64, ModulatingFn)>,
}

impl MultiPhaseLaw {
    pub fn new(p: f64, terms: Vec<(f64, ModulatingFn)>) -> Result<Self> {
        if p <= 0.0 {
            return Err(Error::parameter(format!("need p > 0, got {p}")));
        }
        let mut prev = p;
        for (q, _) in &terms {
            if *q < prev {
                return Err(Error::parameter(format!(
                    "phase exponents must be ordered p <= q_1 <= ..., got {q} after {prev}"
                )));
            }
            prev = *q;
        }
        Ok(MultiPhaseLaw { p, terms })
    }

    pub fn eval(&self, x: [f64; 2], s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::parameter(format!(
                "gradient magnitude must be >= 0, got {s}"
            )));
        }
        let mut v = power(s, self.p);
        for (q, a) in &self.terms {
            v += a.eval(x) * power(s, *q);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(p: f64, q: f64, a: ModulatingFn) -> DegeneracyLaw {
        DegeneracyLaw::new(p, q, a).unwrap()
    }

    #[test]
    fn k_hand_values() {
        let l = law(2.0, 3.0, ModulatingFn::Constant(0.5));
        let x = [0.3, 0.4];
        assert_eq!(l.k_value(x, 0.0).unwrap(), 0.0);
        assert_eq!(l.k_value(x, 1.0).unwrap(), 1.5);
        assert_eq!(l.k_value(x, 2.0).unwrap(), 8.0); // 4 + 0.5 * 8
        assert!(l.k_value(x, -0.1).is_err());
    }

    #[test]
    fn construction_guards() {
        assert!(DegeneracyLaw::new(0.0, 1.0, ModulatingFn::Constant(1.0)).is_err());
        assert!(DegeneracyLaw::new(2.0, 1.0, ModulatingFn::Constant(1.0)).is_err());
        assert!(
            DegeneracyLaw::with_bracket(1.0, 2.0, ModulatingFn::Constant(1.0), 2.0, 3.0, 0.0)
                .is_err()
        );
    }

    #[test]
    fn regularization_floor() {
        let mut l = law(2.0, 3.0, ModulatingFn::Constant(1.0));
        // eps_reg = 0: identical to K
        for s in [0.0, 0.3, 1.7] {
            assert_eq!(
                l.k_regularized([0.0, 0.0], s).unwrap(),
                l.k_value([0.0, 0.0], s).unwrap()
            );
        }
        l.eps_reg = 1e-6;
        let v = l.k_regularized([0.0, 0.0], 0.0).unwrap();
        assert!((v - (1e-12 + 1e-18)).abs() < 1e-24);
        // floor inactive above eps_reg
        assert_eq!(
            l.k_regularized([0.0, 0.0], 0.5).unwrap(),
            l.k_value([0.0, 0.0], 0.5).unwrap()
        );
    }

    #[test]
    fn power_modulating_function() {
        let l = law(2.0, 3.0, ModulatingFn::Power { alpha: 1.0 });
        let v = l.k_value([0.5, 0.0], 2.0).unwrap();
        assert!((v - (4.0 + 0.5 * 8.0)).abs() < 1e-14);
    }

    #[test]
    fn radial_table_interpolates_and_clamps() {
        let a = ModulatingFn::radial_table(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(a.eval([0.0, 0.0]), 1.0);
        assert!((a.eval([0.25, 0.0]) - 1.5).abs() < 1e-14);
        assert!((a.eval([0.0, 0.75]) - 1.0).abs() < 1e-14);
        assert_eq!(a.eval([2.0, 0.0]), 0.0); // clamped past the last knot
        assert!(ModulatingFn::radial_table(vec![0.0], vec![1.0]).is_err());
        assert!(ModulatingFn::radial_table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn multi_phase_values() {
        // single term reduces to K
        let single = MultiPhaseLaw::new(2.0, vec![(3.0, ModulatingFn::Constant(0.5))]).unwrap();
        let l = law(2.0, 3.0, ModulatingFn::Constant(0.5));
        for s in [0.0, 0.7, 2.0] {
            assert_eq!(
                single.eval([0.1, 0.2], s).unwrap(),
                l.k_value([0.1, 0.2], s).unwrap()
            );
        }
        let two = MultiPhaseLaw::new(
            2.0,
            vec![
                (3.0, ModulatingFn::Constant(1.0)),
                (4.0, ModulatingFn::Constant(2.0)),
            ],
        )
        .unwrap();
        assert_eq!(two.eval([0.0, 0.0], 1.0).unwrap(), 1.0 + 1.0 + 2.0);
        assert_eq!(two.eval([0.0, 0.0], 2.0).unwrap(), 4.0 + 8.0 + 32.0);
        assert!(MultiPhaseLaw::new(
            2.0,
            vec![
                (4.0, ModulatingFn::Constant(1.0)),
                (3.0, ModulatingFn::Constant(1.0)),
            ],
        )
        .is_err());
    }

    #[test]
    fn k_scaling_identity() {
        // with a replaced by (tau/kappa)^(p-q) a(x0 + tau x), the rescaled K
        // satisfies K'(x, s) = (tau/kappa)^p K(x0 + tau x, (kappa/tau) s)
        let p = 2.0;
        let q = 3.0;
        let (kappa, tau): (f64, f64) = (12.0, 0.1);
        let x0 = [0.2, -0.1];
        let base = law(p, q, ModulatingFn::Power { alpha: 1.0 });
        let scaled_a = ModulatingFn::Rescaled {
            inner: Box::new(ModulatingFn::Power { alpha: 1.0 }),
            coeff: (tau / kappa).powf(p - q),
            origin: x0,
            stretch: tau,
        };
        let scaled = law(p, q, scaled_a);
        for (x, s) in [([0.3, 0.2], 0.7), ([-0.5, 0.1], 1.9), ([0.0, 0.9], 0.05)] {
            let lhs = scaled.k_value(x, s).unwrap();
            let y = [x0[0] + tau * x[0], x0[1] + tau * x[1]];
            let rhs = (tau / kappa).powf(p) * base.k_value(y, kappa / tau * s).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn monotone_in_s_and_in_a() {
        let small = law(1.5, 2.5, ModulatingFn::Constant(0.2));
        let big = law(1.5, 2.5, ModulatingFn::Constant(0.9));
        let mut prev = 0.0;
        for k in 1..40 {
            let s = k as f64 * 0.1;
            let v = small.k_value([0.0, 0.0], s).unwrap();
            assert!(v > prev);
            assert!(big.k_value([0.0, 0.0], s).unwrap() > v);
            prev = v;
        }
    }
}
