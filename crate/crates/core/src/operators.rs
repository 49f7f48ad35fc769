//! The zoo of second-order fully nonlinear operators F(x, xi, X).
//!
//! Every operator evaluates on a symmetric 2x2 matrix, optionally using the
//! evaluation point (variable coefficients) and the gradient (normalized
//! p-Laplacian, infinity-Laplacian). Uniform ellipticity is expressed as the
//! Pucci sandwich
//! `M-(X - Y) <= F(x,X) - F(x,Y) <= M+(X - Y)`
//! for a declared pair (lambda, Lambda); `sandwich_check` audits it on random
//! matrix pairs. The infinity-Laplacian is genuinely degenerate and declares
//! no pair.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Ellipticity constants 0 < lambda <= Lambda.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityPair {
    pub lambda: f64,
    pub big_lambda: f64,
}

impl EllipticityPair {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
            return Err(Error::parameter(format!(
                "need 0 < lambda <= Lambda < inf, got ({lambda}, {big_lambda})"
            )));
        }
        Ok(EllipticityPair { lambda, big_lambda })
    }

    pub fn unit() -> Self {
        EllipticityPair {
            lambda: 1.0,
            big_lambda: 1.0,
        }
    }
}

/// Symmetric 2x2 matrix with closed-form eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        SymMat2 { a11, a12, a22 }
    }

    pub fn zero() -> Self {
        SymMat2::new(0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        SymMat2::new(1.0, 0.0, 1.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymMat2::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// Eigenvalues (e1 <= e2) from trace and discriminant.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.a11 + self.a22);
        let d = 0.5 * (self.a11 - self.a22);
        let disc = (d * d + self.a12 * self.a12).sqrt();
        (half_tr - disc, half_tr + disc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22).sqrt()
    }

    /// Sum of absolute eigenvalues.
    pub fn nuclear_norm(&self) -> f64 {
        let (e1, e2) = self.eigenvalues();
        e1.abs() + e2.abs()
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMat2::new(self.a11 * c, self.a12 * c, self.a22 * c)
    }

    pub fn add(&self, other: &SymMat2) -> Self {
        SymMat2::new(
            self.a11 + other.a11,
            self.a12 + other.a12,
            self.a22 + other.a22,
        )
    }

    pub fn sub(&self, other: &SymMat2) -> Self {
        SymMat2::new(
            self.a11 - other.a11,
            self.a12 - other.a12,
            self.a22 - other.a22,
        )
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn add_scaled_identity(&self, s: f64) -> Self {
        SymMat2::new(self.a11 + s, self.a12, self.a22 + s)
    }

    /// tr(A X) for symmetric A, X.
    pub fn trace_product(&self, x: &SymMat2) -> f64 {
        self.a11 * x.a11 + 2.0 * self.a12 * x.a12 + self.a22 * x.a22
    }

    pub fn random_box(rng: &mut impl Rng) -> Self {
        SymMat2::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        )
    }
}

/// Pucci maximal operator: Lambda on positive eigenvalues, lambda on negative.
pub fn pucci_plus(x: &SymMat2, e: &EllipticityPair) -> f64 {
    let (e1, e2) = x.eigenvalues();
    let weight = |v: f64| if v > 0.0 { e.big_lambda * v } else { e.lambda * v };
    weight(e1) + weight(e2)
}

/// Pucci minimal operator, the dual of `pucci_plus`.
pub fn pucci_minus(x: &SymMat2, e: &EllipticityPair) -> f64 {
    let (e1, e2) = x.eigenvalues();
    let weight = |v: f64| if v > 0.0 { e.lambda * v } else { e.big_lambda * v };
    weight(e1) + weight(e2)
}

/// Normalized p-Laplacian: tr[(Id + (p-2) xi ⊗ xi / |xi|^2) X].
pub fn normalized_p_laplacian(xi: [f64; 2], x: &SymMat2, p: f64) -> Result<f64> {
    let norm2 = xi[0] * xi[0] + xi[1] * xi[1];
    if norm2 == 0.0 {
        return Err(Error::DegenerateGradient(
            "normalized p-Laplacian needs a nonzero gradient".to_string(),
        ));
    }
    let quad = (xi[0] * xi[0] * x.a11 + 2.0 * xi[0] * xi[1] * x.a12 + xi[1] * xi[1] * x.a22) / norm2;
    Ok(x.trace() + (p - 2.0) * quad)
}

/// Un-normalized infinity-Laplacian: <X xi, xi>.
pub fn infinity_laplacian(xi: [f64; 2], x: &SymMat2) -> f64 {
    xi[0] * xi[0] * x.a11 + 2.0 * xi[0] * xi[1] * x.a12 + xi[1] * xi[1] * x.a22
}

/// Signed m-th root, m odd.
fn signed_root(t: f64, m: u32) -> f64 {
    t.signum() * t.abs().powf(1.0 / m as f64)
}

/// m-momentum operator: sum_j (sigma_j^m + e_j^m)^(1/m) - sum_j sigma_j.
pub fn m_momentum(x: &SymMat2, m: u32, sigma: &[f64; 2]) -> Result<f64> {
    if m < 3 || m.is_multiple_of(2) {
        return Err(Error::parameter(format!("m must be odd and >= 3, got {m}")));
    }
    if sigma.iter().any(|s| *s <= 0.0) {
        return Err(Error::parameter("sigma entries must be positive".to_string()));
    }
    let (e1, e2) = x.eigenvalues();
    let term = |sig: f64, e: f64| signed_root(sig.powi(m as i32) + e.powi(m as i32), m);
    Ok(term(sigma[0], e1) + term(sigma[1], e2) - sigma[0] - sigma[1])
}

/// Modulus-of-continuity descriptor for variable coefficients.
#[derive(Clone, Copy, Debug)]
pub enum OmegaModulus {
    /// omega(t) = t^alpha with alpha in (0, 1].
    Power { alpha: f64 },
    /// omega(t) = slope * t.
    Linear { slope: f64 },
}

impl OmegaModulus {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OmegaModulus::Power { alpha } => t.powf(*alpha),
            OmegaModulus::Linear { slope } => slope * t,
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        match self {
            OmegaModulus::Power { alpha } => {
                if *alpha <= 0.0 {
                    return Err(Error::parameter("modulus exponent must be positive"));
                }
                Ok(y.powf(1.0 / alpha))
            }
            OmegaModulus::Linear { slope } => {
                if *slope <= 0.0 {
                    return Err(Error::parameter("modulus slope must be positive"));
                }
                Ok(y / slope)
            }
        }
    }
}

/// Coefficient continuity data: Theta_F(x, x0) <= c_f * omega(|x - x0|).
#[derive(Clone, Debug)]
pub struct CoefficientModulus {
    pub omega: OmegaModulus,
    pub c_f: f64,
}

pub type CoefficientField = Arc<dyn Fn([f64; 2]) -> SymMat2 + Send + Sync>;

#[derive(Clone)]
pub enum OperatorKind {
    PucciPlus,
    PucciMinus,
    /// tr(A(x) X) with a spatially varying coefficient matrix.
    LinearTrace(CoefficientField),
    /// inf over a finite family of constant-coefficient trace operators.
    BellmanInf(Vec<SymMat2>),
    MMomentum {
        m: u32,
        sigma: [f64; 2],
    },
    NormalizedPLaplacian {
        p: f64,
        /// evaluate as the plain trace when xi = 0 instead of erroring
        zero_gradient_fallback: bool,
    },
    InfinityLaplacian,
    /// Coefficients pinned at a point: F(x0, xi, X) regardless of x.
    FrozenAt {
        x0: [f64; 2],
        inner: Box<OperatorSpec>,
    },
    /// prefactor * F(origin + stretch x, gradient_scale xi, hessian_scale X)
    Rescaled {
        inner: Box<OperatorSpec>,
        prefactor: f64,
        hessian_scale: f64,
        gradient_scale: f64,
        origin: [f64; 2],
        stretch: f64,
    },
}

impl std::fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorKind::PucciPlus => write!(f, "PucciPlus"),
            OperatorKind::PucciMinus => write!(f, "PucciMinus"),
            OperatorKind::LinearTrace(_) => write!(f, "LinearTrace(..)"),
            OperatorKind::BellmanInf(m) => write!(f, "BellmanInf({} matrices)", m.len()),
            OperatorKind::MMomentum { m, sigma } => write!(f, "MMomentum(m={m}, sigma={sigma:?})"),
            OperatorKind::NormalizedPLaplacian { p, .. } => write!(f, "NormalizedPLaplacian(p={p})"),
            OperatorKind::InfinityLaplacian => write!(f, "InfinityLaplacian"),
            OperatorKind::FrozenAt { x0, inner } => write!(f, "FrozenAt({x0:?}, {:?})", inner.kind),
            OperatorKind::Rescaled { inner, .. } => write!(f, "Rescaled({:?})", inner.kind),
        }
    }
}

/// A second-order nonlinearity with its declared ellipticity data.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    /// None only for operators that admit no uniform ellipticity pair
    /// (the infinity-Laplacian).
    pub ellipticity: Option<EllipticityPair>,
    pub modulus: Option<CoefficientModulus>,
}

impl OperatorSpec {
    pub fn pucci_plus_op(pair: EllipticityPair) -> Self {
        OperatorSpec {
            kind: OperatorKind::PucciPlus,
            ellipticity: Some(pair),
            modulus: None,
        }
    }

    pub fn pucci_minus_op(pair: EllipticityPair) -> Self {
        OperatorSpec {
            kind: OperatorKind::PucciMinus,
            ellipticity: Some(pair),
            modulus: None,
        }
    }

    /// Plain Laplacian: tr(X).
    pub fn laplacian() -> Self {
        OperatorSpec {
            kind: OperatorKind::LinearTrace(Arc::new(|_x| SymMat2::identity())),
            ellipticity: Some(EllipticityPair::unit()),
            modulus: None,
        }
    }

    /// Variable-coefficient trace operator. The declared pair must bound the
    /// coefficient eigenvalues over the domain of use; this is not checkable
    /// for a closure and is trusted (audit with `sandwich_check`).
    pub fn linear_trace(field: CoefficientField, pair: EllipticityPair) -> Self {
        OperatorSpec {
            kind: OperatorKind::LinearTrace(field),
            ellipticity: Some(pair),
            modulus: None,
        }
    }

    pub fn with_modulus(mut self, omega: OmegaModulus, c_f: f64) -> Self {
        self.modulus = Some(CoefficientModulus { omega, c_f });
        self
    }

    /// inf_alpha tr(A_alpha X); every matrix must satisfy
    /// lambda Id <= A <= Lambda Id for the declared pair.
    pub fn bellman_inf(matrices: Vec<SymMat2>, pair: EllipticityPair) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::parameter("Bellman family must be nonempty"));
        }
        for (i, a) in matrices.iter().enumerate() {
            let (e1, e2) = a.eigenvalues();
            if e1 < pair.lambda - 1e-12 || e2 > pair.big_lambda + 1e-12 {
                return Err(Error::parameter(format!(
                    "Bellman matrix {i} has eigenvalues [{e1}, {e2}] outside [{}, {}]",
                    pair.lambda, pair.big_lambda
                )));
            }
        }
        Ok(OperatorSpec {
            kind: OperatorKind::BellmanInf(matrices),
            ellipticity: Some(pair),
            modulus: None,
        })
    }

    /// m-momentum operator with a pair derived from the derivative range of
    /// t -> (sigma^m + t^m)^(1/m) over eigenvalues in [-eigen_box, eigen_box].
    /// The infimum of that derivative is 0 (at t = 0), so lambda is floored
    /// at a tiny positive value.
    pub fn m_momentum_op(m: u32, sigma: [f64; 2], eigen_box: f64) -> Result<Self> {
        m_momentum(&SymMat2::zero(), m, &sigma)?; // validates m and sigma
        if eigen_box <= 0.0 {
            return Err(Error::parameter("eigen_box must be positive"));
        }
        let mut hi: f64 = 0.0;
        let steps = 4000;
        for sig in sigma {
            for k in 0..=steps {
                let t = -eigen_box + 2.0 * eigen_box * k as f64 / steps as f64;
                let base = sig.powi(m as i32) + t.powi(m as i32);
                if base <= 0.0 {
                    return Err(Error::parameter(format!(
                        "eigen box [-{eigen_box:.2}, {eigen_box:.2}] crosses the branch point at -sigma = {}",
                        -sig
                    )));
                }
                let d = t.powi(m as i32 - 1) * base.powf(1.0 / m as f64 - 1.0);
                hi = hi.max(d);
            }
        }
        let pair = EllipticityPair::new(1e-9, hi.max(1e-9) * 1.02)?;
        Ok(OperatorSpec {
            kind: OperatorKind::MMomentum { m, sigma },
            ellipticity: Some(pair),
            modulus: None,
        })
    }

    /// Normalized p-Laplacian, uniformly elliptic with
    /// (lambda, Lambda) = (min(p-1, 1), max(p-1, 1)) for fixed gradient.
    pub fn normalized_p_laplacian_op(p: f64, zero_gradient_fallback: bool) -> Result<Self> {
        if p <= 1.0 {
            return Err(Error::parameter(format!("need p > 1, got {p}")));
        }
        let pair = EllipticityPair::new((p - 1.0).min(1.0), (p - 1.0).max(1.0))?;
        Ok(OperatorSpec {
            kind: OperatorKind::NormalizedPLaplacian {
                p,
                zero_gradient_fallback,
            },
            ellipticity: Some(pair),
            modulus: None,
        })
    }

    /// The infinity-Laplacian admits no uniform ellipticity pair: for any
    /// lambda > 0 the lower Pucci bound fails on near-singular matrices.
    pub fn infinity_laplacian_op() -> Self {
        OperatorSpec {
            kind: OperatorKind::InfinityLaplacian,
            ellipticity: None,
            modulus: None,
        }
    }

    pub fn frozen_at(x0: [f64; 2], inner: OperatorSpec) -> Self {
        let ellipticity = inner.ellipticity;
        OperatorSpec {
            kind: OperatorKind::FrozenAt {
                x0,
                inner: Box::new(inner),
            },
            ellipticity,
            // frozen coefficients do not oscillate
            modulus: None,
        }
    }

    pub(crate) fn rescaled(
        inner: OperatorSpec,
        prefactor: f64,
        hessian_scale: f64,
        gradient_scale: f64,
        origin: [f64; 2],
        stretch: f64,
    ) -> Self {
        // prefactor * hessian_scale multiplies the declared pair
        let ellipticity = inner.ellipticity.map(|p| EllipticityPair {
            lambda: p.lambda * prefactor * hessian_scale,
            big_lambda: p.big_lambda * prefactor * hessian_scale,
        });
        let modulus = inner.modulus.clone();
        OperatorSpec {
            kind: OperatorKind::Rescaled {
                inner: Box::new(inner),
                prefactor,
                hessian_scale,
                gradient_scale,
                origin,
                stretch,
            },
            ellipticity,
            modulus,
        }
    }

    /// Evaluate F(x, xi, X).
    pub fn evaluate(&self, x: [f64; 2], xi: [f64; 2], m: &SymMat2) -> Result<f64> {
        match &self.kind {
            OperatorKind::PucciPlus => Ok(pucci_plus(m, self.pair()?)),
            OperatorKind::PucciMinus => Ok(pucci_minus(m, self.pair()?)),
            OperatorKind::LinearTrace(a) => Ok(a(x).trace_product(m)),
            OperatorKind::BellmanInf(mats) => Ok(mats
                .iter()
                .map(|a| a.trace_product(m))
                .fold(f64::INFINITY, f64::min)),
            OperatorKind::MMomentum { m: mm, sigma } => m_momentum(m, *mm, sigma),
            OperatorKind::NormalizedPLaplacian {
                p,
                zero_gradient_fallback,
            } => {
                if xi[0] == 0.0 && xi[1] == 0.0 {
                    if *zero_gradient_fallback {
                        Ok(m.trace())
                    } else {
                        Err(Error::DegenerateGradient(
                            "normalized p-Laplacian at zero gradient".to_string(),
                        ))
                    }
                } else {
                    normalized_p_laplacian(xi, m, *p)
                }
            }
            OperatorKind::InfinityLaplacian => Ok(infinity_laplacian(xi, m)),
            OperatorKind::FrozenAt { x0, inner } => inner.evaluate(*x0, xi, m),
            OperatorKind::Rescaled {
                inner,
                prefactor,
                hessian_scale,
                gradient_scale,
                origin,
                stretch,
            } => {
                let y = [origin[0] + stretch * x[0], origin[1] + stretch * x[1]];
                let zeta = [gradient_scale * xi[0], gradient_scale * xi[1]];
                Ok(prefactor * inner.evaluate(y, zeta, &m.scale(*hessian_scale))?)
            }
        }
    }

    fn pair(&self) -> Result<&EllipticityPair> {
        self.ellipticity
            .as_ref()
            .ok_or_else(|| Error::parameter("operator declares no ellipticity pair"))
    }

    /// Structural equality good enough to assert "same operator" in audits;
    /// coefficient closures compare by pointer.
    pub fn same_structure(&self, other: &OperatorSpec) -> bool {
        match (&self.kind, &other.kind) {
            (OperatorKind::PucciPlus, OperatorKind::PucciPlus)
            | (OperatorKind::PucciMinus, OperatorKind::PucciMinus)
            | (OperatorKind::InfinityLaplacian, OperatorKind::InfinityLaplacian) => {
                self.ellipticity == other.ellipticity
            }
            (OperatorKind::LinearTrace(a), OperatorKind::LinearTrace(b)) => Arc::ptr_eq(a, b),
            (OperatorKind::BellmanInf(a), OperatorKind::BellmanInf(b)) => a == b,
            (
                OperatorKind::MMomentum { m: m1, sigma: s1 },
                OperatorKind::MMomentum { m: m2, sigma: s2 },
            ) => m1 == m2 && s1 == s2,
            (
                OperatorKind::NormalizedPLaplacian { p: p1, .. },
                OperatorKind::NormalizedPLaplacian { p: p2, .. },
            ) => p1 == p2,
            (
                OperatorKind::FrozenAt { x0: a, inner: ia },
                OperatorKind::FrozenAt { x0: b, inner: ib },
            ) => a == b && ia.same_structure(ib),
            _ => false,
        }
    }
}

/// Single-tau recession evaluation: tau * F(X / tau) at frozen coefficients
/// (x = 0) and unit gradient direction. The caller drives tau -> 0.
pub fn recession(op: &OperatorSpec, x: &SymMat2, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::parameter(format!("tau must be positive, got {tau}")));
    }
    let v = tau * op.evaluate([0.0, 0.0], [1.0, 0.0], &x.scale(1.0 / tau))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!(
            "recession evaluation overflowed at tau = {tau}"
        )));
    }
    Ok(v)
}

/// Recession values along a decreasing tau sequence.
pub fn recession_profile(op: &OperatorSpec, x: &SymMat2, taus: &[f64]) -> Result<Vec<(f64, f64)>> {
    taus.iter()
        .map(|&t| recession(op, x, t).map(|v| (t, v)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SandwichViolation {
    pub sample: usize,
    /// amount by which F(X)-F(Y) undershoots the lower Pucci bound
    pub lower_excess: f64,
    /// amount by which F(X)-F(Y) overshoots the upper Pucci bound
    pub upper_excess: f64,
}

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub samples: usize,
    pub violations: Vec<SandwichViolation>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audit the uniform-ellipticity sandwich on random matrix pairs with
/// entries in [-1, 1]. Violations beyond 1e-10 are reported as data.
pub fn sandwich_check(op: &OperatorSpec, samples: usize, seed: u64) -> Result<SandwichReport> {
    if samples == 0 {
        return Err(Error::parameter("need at least one sample"));
    }
    let pair = *op.pair()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_eval = [0.0, 0.0];
    let xi = [1.0, 0.0];
    let tol = 1e-10;
    let mut violations = Vec::new();
    for k in 0..samples {
        let xm = SymMat2::random_box(&mut rng);
        let ym = SymMat2::random_box(&mut rng);
        let diff = op.evaluate(x_eval, xi, &xm)? - op.evaluate(x_eval, xi, &ym)?;
        let z = xm.sub(&ym);
        let lower = pucci_minus(&z, &pair);
        let upper = pucci_plus(&z, &pair);
        let lower_excess = lower - diff;
        let upper_excess = diff - upper;
        if lower_excess > tol || upper_excess > tol {
            violations.push(SandwichViolation {
                sample: k,
                lower_excess: lower_excess.max(0.0),
                upper_excess: upper_excess.max(0.0),
            });
        }
    }
    Ok(SandwichReport {
        samples,
        violations,
    })
}

/// Monte-Carlo estimate of the coefficient oscillation
/// sup_{|X|_F = 1} |F(x, X) - F(x0, X)|.
pub fn coefficient_oscillation(
    op: &OperatorSpec,
    x: [f64; 2],
    x0: [f64; 2],
    samples: usize,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::parameter("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0cea11);
    let xi = [1.0, 0.0];
    let mut sup: f64 = 0.0;
    for _ in 0..samples {
        // isotropic direction on the 3-dim coefficient sphere, weighted so
        // |X|_F = 1
        let g1: f64 = rng.sample(rand_distr_standard());
        let g2: f64 = rng.sample(rand_distr_standard());
        let g3: f64 = rng.sample(rand_distr_standard());
        let m = SymMat2::new(g1, g2 / std::f64::consts::SQRT_2, g3);
        let norm = m.frobenius_norm();
        if norm == 0.0 {
            continue;
        }
        let m = m.scale(1.0 / norm);
        let d = (op.evaluate(x, xi, &m)? - op.evaluate(x0, xi, &m)?).abs();
        sup = sup.max(d);
    }
    Ok(sup)
}

// rand's StandardNormal lives in rand_distr; a Box-Muller pair keeps the
// dependency list short.
fn rand_distr_standard() -> impl rand::distributions::Distribution<f64> {
    struct BoxMuller;
    impl rand::distributions::Distribution<f64> for BoxMuller {
        fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }
    BoxMuller
}
