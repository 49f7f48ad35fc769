//! Line-oriented `key = value` experiment configuration.
//!
//! The format is deliberately flat: one key per line, `#` starts a comment,
//! dotted keys group related knobs (`solver.tol`). Unknown and duplicate
//! keys are rejected with their line number so experiment files stay honest.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentTag {
    Solve,
    ExactCheck,
    Exponent,
    DeadCore,
    Obstacle,
    BarrierRoot,
    Approximation,
    Recession,
}

impl ExperimentTag {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => ExperimentTag::Solve,
            "exact-check" => ExperimentTag::ExactCheck,
            "exponent" => ExperimentTag::Exponent,
            "deadcore" => ExperimentTag::DeadCore,
            "obstacle" => ExperimentTag::Obstacle,
            "barrier-root" => ExperimentTag::BarrierRoot,
            "approximation" => ExperimentTag::Approximation,
            "recession" => ExperimentTag::Recession,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentTag::Solve => "solve",
            ExperimentTag::ExactCheck => "exact-check",
            ExperimentTag::Exponent => "exponent",
            ExperimentTag::DeadCore => "deadcore",
            ExperimentTag::Obstacle => "obstacle",
            ExperimentTag::BarrierRoot => "barrier-root",
            ExperimentTag::Approximation => "approximation",
            ExperimentTag::Recession => "recession",
        }
    }
}

#[derive(Clone, Debug)]
pub enum OperatorChoice {
    Trace,
    PucciPlus { lambda: f64, big_lambda: f64 },
    PucciMinus { lambda: f64, big_lambda: f64 },
    PLaplacian { p: f64 },
    Infinity,
    MMomentum { m: u32, sigma: [f64; 2] },
}

#[derive(Clone, Debug)]
pub enum ASpec {
    Const(f64),
    Power(f64),
    Table(String),
}

#[derive(Clone, Debug)]
pub enum SourceChoice {
    Exact,
    Const(f64),
    DeadCore(f64),
}

#[derive(Clone, Debug)]
pub enum BoundaryChoice {
    Exact,
    Const(f64),
    Quadratic { c20: f64, c11: f64, c02: f64 },
    Affine { bx: f64, by: f64, c: f64 },
}

#[derive(Clone, Debug)]
pub enum ObstacleChoice {
    None,
    Paraboloid { peak: f64, curvature: f64 },
}

#[derive(Clone, Debug)]
pub enum RadiiSpec {
    /// log-spaced, 8 per decade, bounds given in units of h (`4h`) or
    /// absolute
    Range { min: Bound, max: Bound },
    List(Vec<f64>),
}

#[derive(Clone, Copy, Debug)]
pub enum Bound {
    Absolute(f64),
    GridUnits(f64),
}

impl Bound {
    pub fn resolve(&self, h: f64) -> f64 {
        match self {
            Bound::Absolute(v) => *v,
            Bound::GridUnits(k) => k * h,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: ExperimentTag,
    pub n: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub operator: OperatorChoice,
    pub p: f64,
    pub q: f64,
    pub a_spec: ASpec,
    pub eps_reg: f64,
    pub mu: Option<f64>,
    pub source: SourceChoice,
    pub boundary: BoundaryChoice,
    pub obstacle: ObstacleChoice,
    pub tol: f64,
    pub max_iter: usize,
    pub dt_safety: f64,
    pub report_every: usize,
    pub x0: [f64; 2],
    pub radii: RadiiSpec,
    pub beta: f64,
    pub exponent: Option<f64>,
    pub deltas: Vec<f64>,
    pub analytic_sampling: bool,
    pub mmom_m: u32,
    pub mmom_sigma: [f64; 2],
    pub barrier_lambda: f64,
    pub barrier_big_lambda: f64,
    pub barrier_l1: f64,
    pub barrier_diam: f64,
    pub barrier_norm_a: f64,
    pub barrier_m: f64,
    pub claims: BTreeMap<String, f64>,
    pub out: Option<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "n",
    "center",
    "radius",
    "operator",
    "p",
    "q",
    "a",
    "eps",
    "mu",
    "source",
    "boundary",
    "obstacle",
    "solver.tol",
    "solver.max_iter",
    "solver.dt_safety",
    "solver.report_every",
    "x0",
    "radii",
    "beta",
    "exponent",
    "deltas",
    "sampling",
    "mmom.m",
    "mmom.sigma",
    "barrier.lambda",
    "barrier.Lambda",
    "barrier.L1",
    "barrier.diam",
    "barrier.norm_a",
    "barrier.m",
    "out",
];

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: msg.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(line, format!("{key}: expected a number, got `{v}` ({e})")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|e| parse_err(line, format!("{key}: expected an integer, got `{v}` ({e})")))
}

fn parse_pair(line: usize, key: &str, v: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return Err(parse_err(line, format!("{key}: expected `a,b`, got `{v}`")));
    }
    Ok([
        parse_f64(line, key, parts[0])?,
        parse_f64(line, key, parts[1])?,
    ])
}

fn parse_bound(line: usize, key: &str, v: &str) -> Result<Bound> {
    let t = v.trim();
    if let Some(stripped) = t.strip_suffix('h') {
        Ok(Bound::GridUnits(parse_f64(line, key, stripped)?))
    } else {
        Ok(Bound::Absolute(parse_f64(line, key, t)?))
    }
}

/// Parse configuration text into a validated `ExperimentConfig`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut seen: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.split_once('#') {
            Some((head, _)) => head,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let known = KNOWN_KEYS.contains(&key.as_str()) || key.starts_with("claim.");
        if !known {
            return Err(parse_err(lineno, format!("unknown key `{key}`")));
        }
        if let Some((first, _)) = seen.get(&key) {
            return Err(parse_err(
                lineno,
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
        }
        seen.insert(key, (lineno, value));
    }

    let get = |key: &str| seen.get(key).cloned();
    let require = |key: &str| {
        get(key).ok_or_else(|| parse_err(0, format!("missing required key `{key}`")))
    };

    let (line, tag_text) = require("experiment")?;
    let experiment = ExperimentTag::parse(&tag_text)
        .ok_or_else(|| parse_err(line, format!("unknown experiment `{tag_text}`")))?;

    let n = match get("n") {
        Some((line, v)) => {
            let n = parse_usize(line, "n", &v)?;
            if n % 2 == 0 {
                return Err(parse_err(line, "n must be odd"));
            }
            if n < 9 {
                return Err(parse_err(line, "n must be >= 9"));
            }
            n
        }
        None => 65,
    };

    let center = match get("center") {
        Some((line, v)) => parse_pair(line, "center", &v)?,
        None => [0.0, 0.0],
    };
    let radius = match get("radius") {
        Some((line, v)) => parse_f64(line, "radius", &v)?,
        None => 1.0,
    };

    let p = match get("p") {
        Some((line, v)) => parse_f64(line, "p", &v)?,
        None => 2.0,
    };
    let q = match get("q") {
        Some((line, v)) => parse_f64(line, "q", &v)?,
        None => p,
    };
    let mu = match get("mu") {
        Some((line, v)) => {
            let mu = parse_f64(line, "mu", &v)?;
            if mu <= 0.0 || mu >= p + 1.0 {
                return Err(parse_err(line, "mu < p+1 required (and mu > 0)"));
            }
            Some(mu)
        }
        None => None,
    };

    let operator = match get("operator") {
        Some((line, v)) => {
            let parts: Vec<&str> = v.split(':').collect();
            match parts[0] {
                "trace" => OperatorChoice::Trace,
                "pucci+" | "pucci-" => {
                    let (lam, big) = match parts.len() {
                        1 => (1.0, 2.0),
                        3 => (
                            parse_f64(line, "operator", parts[1])?,
                            parse_f64(line, "operator", parts[2])?,
                        ),
                        _ => {
                            return Err(parse_err(
                                line,
                                "pucci operators take `pucci+:<lambda>:<Lambda>`",
                            ))
                        }
                    };
                    if parts[0] == "pucci+" {
                        OperatorChoice::PucciPlus {
                            lambda: lam,
                            big_lambda: big,
                        }
                    } else {
                        OperatorChoice::PucciMinus {
                            lambda: lam,
                            big_lambda: big,
                        }
                    }
                }
                "plap" => {
                    if parts.len() != 2 {
                        return Err(parse_err(line, "use `plap:<p>`"));
                    }
                    OperatorChoice::PLaplacian {
                        p: parse_f64(line, "operator", parts[1])?,
                    }
                }
                "infinity" => OperatorChoice::Infinity,
                "mmomentum" => {
                    if parts.len() != 3 {
                        return Err(parse_err(line, "use `mmomentum:<m>:<s1>,<s2>`"));
                    }
                    let m = parse_usize(line, "operator", parts[1])? as u32;
                    let sigma = parse_pair(line, "operator", parts[2])?;
                    OperatorChoice::MMomentum { m, sigma }
                }
                other => return Err(parse_err(line, format!("unknown operator `{other}`"))),
            }
        }
        None => OperatorChoice::Trace,
    };

    let a_spec = match get("a") {
        Some((line, v)) => {
            let (kind, arg) = v
                .split_once(':')
                .ok_or_else(|| parse_err(line, "a takes `const:<v>`, `power:<alpha>` or `table:<path>`"))?;
            match kind {
                "const" => ASpec::Const(parse_f64(line, "a", arg)?),
                "power" => ASpec::Power(parse_f64(line, "a", arg)?),
                "table" => ASpec::Table(arg.trim().to_string()),
                other => return Err(parse_err(line, format!("unknown a-spec `{other}`"))),
            }
        }
        None => ASpec::Const(0.0),
    };

    let eps_reg = match get("eps") {
        Some((line, v)) => parse_f64(line, "eps", &v)?,
        None => 0.0,
    };

    let source = match get("source") {
        Some((line, v)) => {
            if v == "exact" {
                SourceChoice::Exact
            } else if let Some((kind, arg)) = v.split_once(':') {
                match kind {
                    "const" => SourceChoice::Const(parse_f64(line, "source", arg)?),
                    "deadcore" => SourceChoice::DeadCore(parse_f64(line, "source", arg)?),
                    other => return Err(parse_err(line, format!("unknown source `{other}`"))),
                }
            } else {
                return Err(parse_err(line, format!("unknown source `{v}`")));
            }
        }
        None => SourceChoice::Const(0.0),
    };

    let boundary = match get("boundary") {
        Some((line, v)) => {
            if v == "exact" {
                BoundaryChoice::Exact
            } else if let Some((kind, arg)) = v.split_once(':') {
                match kind {
                    "const" => BoundaryChoice::Const(parse_f64(line, "boundary", arg)?),
                    "quad" => {
                        let parts: Vec<&str> = arg.split(',').collect();
                        if parts.len() != 3 {
                            return Err(parse_err(line, "use `quad:<c20>,<c11>,<c02>`"));
                        }
                        BoundaryChoice::Quadratic {
                            c20: parse_f64(line, "boundary", parts[0])?,
                            c11: parse_f64(line, "boundary", parts[1])?,
                            c02: parse_f64(line, "boundary", parts[2])?,
                        }
                    }
                    "affine" => {
                        let parts: Vec<&str> = arg.split(',').collect();
                        if parts.len() != 3 {
                            return Err(parse_err(line, "use `affine:<bx>,<by>,<c>`"));
                        }
                        BoundaryChoice::Affine {
                            bx: parse_f64(line, "boundary", parts[0])?,
                            by: parse_f64(line, "boundary", parts[1])?,
                            c: parse_f64(line, "boundary", parts[2])?,
                        }
                    }
                    other => return Err(parse_err(line, format!("unknown boundary `{other}`"))),
                }
            } else {
                return Err(parse_err(line, format!("unknown boundary `{v}`")));
            }
        }
        None => BoundaryChoice::Const(0.0),
    };

    let obstacle = match get("obstacle") {
        Some((line, v)) => {
            if v == "none" {
                ObstacleChoice::None
            } else if let Some((kind, arg)) = v.split_once(':') {
                match kind {
                    "parab" => {
                        let pair = parse_pair(line, "obstacle", arg)?;
                        ObstacleChoice::Paraboloid {
                            peak: pair[0],
                            curvature: pair[1],
                        }
                    }
                    other => return Err(parse_err(line, format!("unknown obstacle `{other}`"))),
                }
            } else {
                return Err(parse_err(line, format!("unknown obstacle `{v}`")));
            }
        }
        None => ObstacleChoice::None,
    };

    let tol = match get("solver.tol") {
        Some((line, v)) => parse_f64(line, "solver.tol", &v)?,
        None => 1e-7,
    };
    let max_iter = match get("solver.max_iter") {
        Some((line, v)) => parse_usize(line, "solver.max_iter", &v)?,
        None => 500_000,
    };
    let dt_safety = match get("solver.dt_safety") {
        Some((line, v)) => {
            let d = parse_f64(line, "solver.dt_safety", &v)?;
            if !(d > 0.0 && d < 0.5) {
                return Err(parse_err(line, "solver.dt_safety must lie in (0, 0.5)"));
            }
            d
        }
        None => 0.4,
    };
    let report_every = match get("solver.report_every") {
        Some((line, v)) => parse_usize(line, "solver.report_every", &v)?,
        None => 0,
    };

    let x0 = match get("x0") {
        Some((line, v)) => parse_pair(line, "x0", &v)?,
        None => [0.0, 0.0],
    };

    let radii = match get("radii") {
        Some((line, v)) => {
            if let Some((lo, hi)) = v.split_once(':') {
                RadiiSpec::Range {
                    min: parse_bound(line, "radii", lo)?,
                    max: parse_bound(line, "radii", hi)?,
                }
            } else {
                let list: Result<Vec<f64>> = v
                    .split(',')
                    .map(|t| parse_f64(line, "radii", t))
                    .collect();
                RadiiSpec::List(list?)
            }
        }
        None => RadiiSpec::Range {
            min: Bound::GridUnits(4.0),
            max: Bound::Absolute(0.25),
        },
    };

    let beta = match get("beta") {
        Some((line, v)) => parse_f64(line, "beta", &v)?,
        None => 1.0 / (p + 1.0),
    };
    let exponent = match get("exponent") {
        Some((line, v)) => Some(parse_f64(line, "exponent", &v)?),
        None => None,
    };
    let deltas = match get("deltas") {
        Some((line, v)) => {
            let list: Result<Vec<f64>> = v.split(',').map(|t| parse_f64(line, "deltas", t)).collect();
            list?
        }
        None => vec![1e-1, 1e-2, 1e-3],
    };
    let analytic_sampling = match get("sampling") {
        Some((line, v)) => match v.as_str() {
            "analytic" => true,
            "solve" => false,
            other => return Err(parse_err(line, format!("sampling must be `analytic` or `solve`, got `{other}`"))),
        },
        None => false,
    };

    let mmom_m = match get("mmom.m") {
        Some((line, v)) => parse_usize(line, "mmom.m", &v)? as u32,
        None => 3,
    };
    let mmom_sigma = match get("mmom.sigma") {
        Some((line, v)) => parse_pair(line, "mmom.sigma", &v)?,
        None => [1.0, 1.0],
    };

    let barrier = |key: &str, default: f64| -> Result<f64> {
        match get(key) {
            Some((line, v)) => parse_f64(line, key, &v),
            None => Ok(default),
        }
    };
    let barrier_lambda = barrier("barrier.lambda", 1.0)?;
    let barrier_big_lambda = barrier("barrier.Lambda", 1.0)?;
    let barrier_l1 = barrier("barrier.L1", 1.0)?;
    let barrier_diam = barrier("barrier.diam", 2.0)?;
    let barrier_norm_a = barrier("barrier.norm_a", 1.0)?;
    let barrier_m = barrier("barrier.m", 1.0)?;

    let mut claims = BTreeMap::new();
    for (key, (line, value)) in &seen {
        if let Some(name) = key.strip_prefix("claim.") {
            claims.insert(name.to_string(), parse_f64(*line, key, value)?);
        }
    }

    let out = get("out").map(|(_, v)| v);

    Ok(ExperimentConfig {
        experiment,
        n,
        center,
        radius,
        operator,
        p,
        q,
        a_spec,
        eps_reg,
        mu,
        source,
        boundary,
        obstacle,
        tol,
        max_iter,
        dt_safety,
        report_every,
        x0,
        radii,
        beta,
        exponent,
        deltas,
        analytic_sampling,
        mmom_m,
        mmom_sigma,
        barrier_lambda,
        barrier_big_lambda,
        barrier_l1,
        barrier_diam,
        barrier_norm_a,
        barrier_m,
        claims,
        out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("experiment = solve\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentTag::Solve);
        assert_eq!(cfg.n, 65);
        assert_eq!(cfg.tol, 1e-7);
        assert_eq!(cfg.dt_safety, 0.4);
        assert_eq!(cfg.max_iter, 500_000);
        assert!(matches!(cfg.a_spec, ASpec::Const(c) if c == 0.0));
    }

    #[test]
    fn even_n_is_rejected() {
        let err = parse_config("experiment = solve\nn = 128\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("n must be odd"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn mu_above_p_plus_one_is_rejected() {
        let err = parse_config("experiment = deadcore\np = 2\nmu = 3.5\n").unwrap_err();
        assert!(format!("{err}").contains("mu < p+1 required"));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let err = parse_config("experiment = solve\nwavelength = 3\n").unwrap_err();
        assert!(format!("{err}").contains("unknown key"));
        let err = parse_config("experiment = solve\nn = 9\nn = 11\n").unwrap_err();
        assert!(format!("{err}").contains("duplicate key"));
    }

    #[test]
    fn full_config_parses() {
        let text = "\
# exact solution recovery
experiment = exact-check
n = 129
operator = trace
p = 2
q = 3
a = power:1
source = exact
boundary = exact
solver.tol = 1e-7
radii = 4h:0.25
claim.sup_error = 2e-2
out = results
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.experiment, ExperimentTag::ExactCheck);
        assert_eq!(cfg.n, 129);
        assert!(matches!(cfg.a_spec, ASpec::Power(a) if a == 1.0));
        assert!(matches!(cfg.source, SourceChoice::Exact));
        assert_eq!(cfg.claims.get("sup_error"), Some(&2e-2));
        assert_eq!(cfg.out.as_deref(), Some("results"));
        match cfg.radii {
            RadiiSpec::Range { min, max } => {
                assert!((min.resolve(0.1) - 0.4).abs() < 1e-15);
                assert!((max.resolve(0.1) - 0.25).abs() < 1e-15);
            }
            _ => panic!("expected a range"),
        }
    }
}
