//! Problem-instance data model: the cost integrands, state nonlinearity,
//! constraint function, operator coefficients and reference parameters,
//! together with cost evaluation, the boundary constraint residual,
//! sampled assumption checking, and the built-in example instances.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::{BoundaryFunction, DiskMesh, Field};
use crate::pde::{EllipticCoefficients, PointwiseFn};

/// Default feasibility tolerance for the pointwise constraint.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// A cost integrand `(x, y, mu) -> real` with its y-derivative.
#[derive(Debug, Clone)]
pub struct CostFn {
    pub value: Expr,
    pub deriv: Expr,
}

impl CostFn {
    pub fn new(value: Expr) -> Self {
        let deriv = value.derivative(expr::VAR_Y);
        CostFn { value, deriv }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?))
    }

    pub fn eval(&self, x: [f64; 2], y: f64, mu: f64) -> f64 {
        self.value.eval(&[x[0], x[1], y, mu, 0.0])
    }

    pub fn eval_deriv(&self, x: [f64; 2], y: f64, mu: f64) -> f64 {
        self.deriv.eval(&[x[0], x[1], y, mu, 0.0])
    }
}

/// The full problem datum of the parametric control problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    /// Domain cost integrand L(x, y, mu1).
    pub cost_domain: CostFn,
    /// Boundary cost integrand l(x', y, mu2).
    pub cost_boundary: CostFn,
    /// Control-cost weight phi(t), evaluated at t = mu2(x').
    pub phi: Expr,
    /// Domain nonlinearity f(x, y) of the state equation.
    pub f: PointwiseFn,
    /// Boundary constraint nonlinearity g(x', y).
    pub g: PointwiseFn,
    pub coeffs: EllipticCoefficients,
    /// Reference parameter mu_bar = (domain expr, boundary expr) in x1, x2.
    pub mu_bar: (Expr, Expr),
    /// Reference parameter lambda_bar = (boundary expr, boundary expr).
    pub lambda_bar: (Expr, Expr),
    pub eps0: f64,
    pub gamma: f64,
    pub k_phi: f64,
    pub theta: f64,
}

impl Instance {
    pub fn phi_at(&self, t: f64) -> f64 {
        self.phi.eval(&[0.0, 0.0, 0.0, 0.0, t])
    }

    /// Reference parameter vector evaluated on a mesh.
    pub fn reference_params(&self, mesh: &DiskMesh) -> ParamVector {
        let mu1 = Field::from_fn(mesh, |x1, x2| self.mu_bar.0.eval(&[x1, x2, 0.0, 0.0, 0.0]));
        let at_boundary = |e: &Expr| BoundaryFunction {
            values: mesh
                .boundary_nodes
                .iter()
                .map(|&i| {
                    let p = mesh.nodes[i];
                    e.eval(&[p[0], p[1], 0.0, 0.0, 0.0])
                })
                .collect(),
        };
        ParamVector {
            mu1,
            mu2: at_boundary(&self.mu_bar.1),
            lambda1: at_boundary(&self.lambda_bar.0),
            lambda2: at_boundary(&self.lambda_bar.1),
        }
    }

    /// Canonical textual form, used for run-manifest hashing.
    pub fn canonical_description(&self) -> String {
        format!(
            "L={};l={};phi={};f={};g={};a11={};a12={};a22={};a0={};mu_bar=({},{});lambda_bar=({},{});eps0={};gamma={};k_phi={};theta={}",
            self.cost_domain.value,
            self.cost_boundary.value,
            self.phi,
            self.f.value,
            self.g.value,
            self.coeffs.a11,
            self.coeffs.a12,
            self.coeffs.a22,
            self.coeffs.a0,
            self.mu_bar.0,
            self.mu_bar.1,
            self.lambda_bar.0,
            self.lambda_bar.1,
            self.eps0,
            self.gamma,
            self.k_phi,
            self.theta,
        )
    }
}

/// Perturbation parameters (mu, lambda) as nodal data on a mesh.
#[derive(Debug, Clone)]
pub struct ParamVector {
    pub mu1: Field,
    pub mu2: BoundaryFunction,
    pub lambda1: BoundaryFunction,
    pub lambda2: BoundaryFunction,
}

impl ParamVector {
    pub fn zeros(mesh: &DiskMesh) -> Self {
        ParamVector {
            mu1: Field::zeros(mesh),
            mu2: BoundaryFunction::zeros(mesh),
            lambda1: BoundaryFunction::zeros(mesh),
            lambda2: BoundaryFunction::zeros(mesh),
        }
    }

    pub fn check(&self, mesh: &DiskMesh) -> Result<()> {
        mesh.check_field(&self.mu1, "mu1")?;
        mesh.check_boundary(&self.mu2, "mu2")?;
        mesh.check_boundary(&self.lambda1, "lambda1")?;
        mesh.check_boundary(&self.lambda2, "lambda2")?;
        Ok(())
    }

    /// Parameter distance `|mu - mu'|_inf + |lambda - lambda'|_Lambda`.
    pub fn distance(&self, mesh: &DiskMesh, other: &ParamVector) -> f64 {
        let inf_dom = self
            .mu1
            .values
            .iter()
            .zip(&other.mu1.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let inf_bnd = self
            .mu2
            .values
            .iter()
            .zip(&other.mu2.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let diff = |a: &BoundaryFunction, b: &BoundaryFunction| BoundaryFunction {
            values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
        };
        let l1 = mesh.l2_boundary(&diff(&self.lambda1, &other.lambda1));
        let l2 = mesh.l2_boundary(&diff(&self.lambda2, &other.lambda2));
        inf_dom + inf_bnd + (l1 * l1 + l2 * l2).sqrt()
    }

    /// True when this point lies within `eps0` of the instance reference.
    pub fn within_reach(&self, mesh: &DiskMesh, instance: &Instance) -> bool {
        self.distance(mesh, &instance.reference_params(mesh)) <= instance.eps0 + 1e-12
    }
}

/// Quadrature value of the cost functional.
pub fn eval_cost(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    u: &BoundaryFunction,
    mu: &ParamVector,
) -> Result<f64> {
    mesh.check_field(y, "y")?;
    mesh.check_boundary(u, "u")?;
    mesh.check_field(&mu.mu1, "mu1")?;
    mesh.check_boundary(&mu.mu2, "mu2")?;

    let domain = mesh.integrate_domain(&[y, &mu.mu1], |x, v| {
        instance.cost_domain.eval(x, v[0], v[1])
    });
    let tr = mesh.trace(y);
    let boundary = mesh.integrate_boundary(|b, x| {
        let m2 = mu.mu2.values[b];
        instance.cost_boundary.eval(x, tr.values[b], m2)
            + instance.phi_at(m2) * u.values[b] * u.values[b]
    });
    let total = domain + boundary;
    if !total.is_finite() {
        // locate an offending node for the error message
        for (i, p) in mesh.nodes.iter().enumerate() {
            let v = instance.cost_domain.eval(*p, y.values[i], mu.mu1.values[i]);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("cost integrand at node {i}")));
            }
        }
        for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
            let v = instance
                .cost_boundary
                .eval(mesh.nodes[i], y.values[i], mu.mu2.values[b])
                + instance.phi_at(mu.mu2.values[b]) * u.values[b] * u.values[b];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "boundary cost integrand at boundary node {b}"
                )));
            }
        }
        return Err(Error::NonFinite("cost value".into()));
    }
    Ok(total)
}

/// Nodal values of the constraint function `G(y, u, lambda2) = g(., y) + u + lambda2`.
pub fn constraint_residual(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    u: &BoundaryFunction,
    lambda2: &BoundaryFunction,
) -> Result<BoundaryFunction> {
    mesh.check_field(y, "y")?;
    mesh.check_boundary(u, "u")?;
    mesh.check_boundary(lambda2, "lambda2")?;
    let values = mesh
        .boundary_nodes
        .iter()
        .enumerate()
        .map(|(b, &i)| {
            instance.g.eval(mesh.nodes[i], y.values[i]) + u.values[b] + lambda2.values[b]
        })
        .collect();
    Ok(BoundaryFunction { values })
}

/// Largest positive part of the constraint values.
pub fn max_violation(g: &BoundaryFunction) -> f64 {
    g.values.iter().fold(0.0_f64, |m, &v| m.max(v))
}

pub fn is_feasible(g: &BoundaryFunction) -> bool {
    max_violation(g) <= FEASIBILITY_TOL
}

/// Sampling grids for falsification-only assumption checking.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    /// State values are sampled in `[-m, m]`.
    pub m: f64,
    /// Points per axis.
    pub points: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            m: 5.0,
            points: 101,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub a1_pass: bool,
    pub a2_pass: bool,
    pub a3_pass: bool,
    pub a4_pass: bool,
    pub a5_pass: bool,
    /// Holder/Lipschitz estimate of phi over sampled pairs.
    pub k_phi_est: f64,
    /// Minimum of phi over the sample range.
    pub gamma_est: f64,
    /// Minimum eigenvalue of the diffusion matrix over sampled positions.
    pub m0_est: f64,
    /// Maximum of phi over the reachable mu2 range.
    pub k_max: f64,
    pub lip_cost_domain_y: f64,
    pub lip_cost_boundary_y: f64,
    pub lip_f_y: f64,
    pub lip_g_y: f64,
    /// Human-readable description of the sample grids.
    pub grid: String,
    /// One line per witnessed violation.
    pub witnesses: Vec<String>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.a1_pass && self.a2_pass && self.a3_pass && self.a4_pass && self.a5_pass
    }
}

/// Sampled verification of the standing assumptions. Violations are report
/// entries with witnesses, not errors; passing is falsification-only.
pub fn check_assumptions(instance: &Instance, spec: &SampleSpec) -> AssumptionReport {
    let n = spec.points.max(3);
    let m = spec.m;
    let lin = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (n - 1) as f64;

    // position samples: polar grid in the disk plus boundary angles
    let mut xs: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for ir in 1..=6 {
        let r = ir as f64 / 6.0;
        for is in 0..12 {
            let a = 2.0 * std::f64::consts::PI * is as f64 / 12.0;
            xs.push([r * a.cos(), r * a.sin()]);
        }
    }
    let bs: Vec<[f64; 2]> = (0..32)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
            [a.cos(), a.sin()]
        })
        .collect();
    let ys: Vec<f64> = (0..n).map(|k| lin(k, -m, m)).collect();
    let mus: Vec<f64> = (0..n)
        .map(|k| lin(k, -instance.eps0, instance.eps0))
        .collect();

    let mut witnesses = Vec::new();

    // (A1): finiteness of the integrands and their y-derivatives, plus
    // Lipschitz estimates of the derivatives over adjacent y samples.
    let mut a1_pass = true;
    let mut lip_ld = 0.0_f64;
    let mut lip_lb = 0.0_f64;
    for &x in xs.iter().chain(bs.iter()) {
        for &mu in &[-instance.eps0, 0.0, instance.eps0] {
            let mut prev_d: Option<(f64, f64)> = None;
            for &y in &ys {
                let v = instance.cost_domain.eval(x, y, mu);
                let d = instance.cost_domain.eval_deriv(x, y, mu);
                let vb = instance.cost_boundary.eval(x, y, mu);
                let db = instance.cost_boundary.eval_deriv(x, y, mu);
                if ![v, d, vb, db].iter().all(|t| t.is_finite()) {
                    if a1_pass {
                        witnesses.push(format!(
                            "(A1) non-finite integrand data at x=({:.3},{:.3}), y={y:.3}, mu={mu:.3}",
                            x[0], x[1]
                        ));
                    }
                    a1_pass = false;
                }
                if let Some((py, pd)) = prev_d {
                    let dy = (y - py).abs();
                    if dy > 0.0 {
                        lip_ld = lip_ld.max((d - pd).abs() / dy);
                    }
                }
                prev_d = Some((y, d));
                let _ = db;
            }
            // boundary integrand Lipschitz pass
            let mut prev: Option<(f64, f64)> = None;
            for &y in &ys {
                let db = instance.cost_boundary.eval_deriv(x, y, mu);
                if let Some((py, pd)) = prev {
                    let dy = (y - py).abs();
                    if dy > 0.0 {
                        lip_lb = lip_lb.max((db - pd).abs() / dy);
                    }
                }
                prev = Some((y, db));
            }
        }
    }

    // (A2): lower boundedness of the cost integrands over the sample grid.
    let mut a2_pass = true;
    for &x in xs.iter().chain(bs.iter()) {
        for &mu in &mus {
            for &y in &ys {
                let v = instance.cost_domain.eval(x, y, mu);
                let vb = instance.cost_boundary.eval(x, y, mu);
                if !v.is_finite() || !vb.is_finite() {
                    if a2_pass {
                        witnesses.push(format!(
                            "(A2) unbounded-below integrand at x=({:.3},{:.3}), y={y:.3}, mu={mu:.3}",
                            x[0], x[1]
                        ));
                    }
                    a2_pass = false;
                }
            }
        }
    }

    // (A3): positivity phi > gamma and the Holder bound with exponent theta.
    let ts: Vec<f64> = (0..n).map(|k| lin(k, -m, m)).collect();
    let mut gamma_est = f64::INFINITY;
    let mut a3_pass = true;
    for &t in &ts {
        let v = instance.phi_at(t);
        if !(v.is_finite() && v > instance.gamma) {
            if a3_pass {
                witnesses.push(format!(
                    "(A3) phi({t:.3}) = {v:.3e} is not above gamma = {}",
                    instance.gamma
                ));
            }
            a3_pass = false;
        }
        gamma_est = gamma_est.min(v);
    }
    let mut k_phi_est = 0.0_f64;
    for (i, &t) in ts.iter().enumerate() {
        for &s in &ts[i + 1..] {
            let num = (instance.phi_at(t) - instance.phi_at(s)).abs();
            let den = (t - s).abs().powf(instance.theta);
            if den > 0.0 {
                k_phi_est = k_phi_est.max(num / den);
            }
        }
    }
    if k_phi_est > instance.k_phi + 1e-9 {
        witnesses.push(format!(
            "(A3) Holder estimate {k_phi_est:.6} exceeds declared k_phi = {}",
            instance.k_phi
        ));
        a3_pass = false;
    }

    // k_max over the reachable mu2 range (reference norm +- eps0)
    let mu_bar_norm = bs
        .iter()
        .map(|&x| instance.mu_bar.1.eval(&[x[0], x[1], 0.0, 0.0, 0.0]).abs())
        .fold(0.0_f64, f64::max);
    let mut k_max = 0.0_f64;
    for k in 0..n {
        let t = lin(k, mu_bar_norm - instance.eps0, mu_bar_norm + instance.eps0);
        k_max = k_max.max(instance.phi_at(t));
    }

    // (A4): symmetric by representation; ellipticity and sign of a0.
    let mut a4_pass = true;
    let mut m0_est = f64::INFINITY;
    let mut a0_max = 0.0_f64;
    for &x in &xs {
        let env = [x[0], x[1], 0.0, 0.0, 0.0];
        let a11 = instance.coeffs.a11.eval(&env);
        let a12 = instance.coeffs.a12.eval(&env);
        let a22 = instance.coeffs.a22.eval(&env);
        let a0 = instance.coeffs.a0.eval(&env);
        let tr = a11 + a22;
        let disc = ((a11 - a22).powi(2) + 4.0 * a12 * a12).sqrt();
        let lam_min = 0.5 * (tr - disc);
        m0_est = m0_est.min(lam_min);
        a0_max = a0_max.max(a0);
        if lam_min <= 0.0 {
            if a4_pass {
                witnesses.push(format!(
                    "(A4) diffusion not elliptic at x=({:.3},{:.3}): min eigenvalue {lam_min:.3e}",
                    x[0], x[1]
                ));
            }
            a4_pass = false;
        }
        if a0 < 0.0 {
            witnesses.push(format!(
                "(A4) a0 negative at x=({:.3},{:.3}): {a0:.3e}",
                x[0], x[1]
            ));
            a4_pass = false;
        }
    }
    if a0_max <= 0.0 {
        witnesses.push("(A4) a0 vanishes on the whole sample grid".into());
        a4_pass = false;
    }

    // (A5): f(., 0) = 0, g(., 0) = 0, monotone derivatives, Lipschitz bounds.
    let mut a5_pass = true;
    let mut lip_f = 0.0_f64;
    let mut lip_g = 0.0_f64;
    for &x in &xs {
        if instance.f.eval(x, 0.0).abs() > 1e-12 {
            if a5_pass {
                witnesses.push(format!("(A5) f(x, 0) != 0 at x=({:.3},{:.3})", x[0], x[1]));
            }
            a5_pass = false;
        }
        let mut prev: Option<(f64, f64)> = None;
        for &y in &ys {
            let d = instance.f.eval_deriv(x, y);
            if d < -1e-12 {
                if a5_pass {
                    witnesses.push(format!(
                        "(A5) f_y < 0 at x=({:.3},{:.3}), y={y:.3}: {d:.3e}",
                        x[0], x[1]
                    ));
                }
                a5_pass = false;
            }
            if let Some((py, pd)) = prev {
                lip_f = lip_f.max((d - pd).abs() / (y - py).abs());
            }
            prev = Some((y, d));
        }
    }
    for &x in &bs {
        if instance.g.eval(x, 0.0).abs() > 1e-12 {
            if a5_pass {
                witnesses.push(format!(
                    "(A5) g(x', 0) != 0 at x'=({:.3},{:.3})",
                    x[0], x[1]
                ));
            }
            a5_pass = false;
        }
        let mut prev: Option<(f64, f64)> = None;
        for &y in &ys {
            let d = instance.g.eval_deriv(x, y);
            if d < -1e-12 {
                if a5_pass {
                    witnesses.push(format!(
                        "(A5) g_y < 0 at x'=({:.3},{:.3}), y={y:.3}: {d:.3e}",
                        x[0], x[1]
                    ));
                }
                a5_pass = false;
            }
            if let Some((py, pd)) = prev {
                lip_g = lip_g.max((d - pd).abs() / (y - py).abs());
            }
            prev = Some((y, d));
        }
    }

    AssumptionReport {
        a1_pass,
        a2_pass,
        a3_pass,
        a4_pass,
        a5_pass,
        k_phi_est,
        gamma_est,
        m0_est,
        k_max,
        lip_cost_domain_y: lip_ld,
        lip_cost_boundary_y: lip_lb,
        lip_f_y: lip_f,
        lip_g_y: lip_g,
        grid: format!(
            "y, mu, t: {n} points, y,t in [-{m}, {m}], mu in [-{e}, {e}]; 73 domain and 32 boundary positions",
            e = instance.eps0
        ),
        witnesses,
    }
}

/// Example with `g = 0`: the admissible set is unbounded (any strongly
/// negative constant control stays feasible).
pub fn builtin_example_unbounded() -> Instance {
    Instance {
        name: "unbounded".into(),
        cost_domain: CostFn::parse("y^2").unwrap(),
        cost_boundary: CostFn::parse("y^2").unwrap(),
        phi: Expr::parse("sqrt(1 + t^2)").unwrap(),
        f: PointwiseFn::parse("y^3").unwrap(),
        g: PointwiseFn::zero(),
        coeffs: EllipticCoefficients::laplace_plus_identity(),
        mu_bar: (Expr::Num(0.0), Expr::Num(0.0)),
        lambda_bar: (Expr::Num(0.0), Expr::Num(0.0)),
        eps0: 1.0,
        gamma: 0.5,
        k_phi: 1.0,
        theta: 1.0,
    }
}

/// Quartic instance: nonconvex domain cost, non-smooth boundary cost,
/// cubic state nonlinearity, identity constraint coupling.
pub fn builtin_example_quartic() -> Instance {
    Instance {
        name: "quartic".into(),
        cost_domain: CostFn::parse("y^4 - y^2 + mu").unwrap(),
        cost_boundary: CostFn::parse("y^2 + y*abs(y)").unwrap(),
        phi: Expr::parse("sqrt(1 + t^2)").unwrap(),
        f: PointwiseFn::parse("y^3").unwrap(),
        g: PointwiseFn::parse("y").unwrap(),
        coeffs: EllipticCoefficients::laplace_plus_identity(),
        mu_bar: (Expr::Num(0.0), Expr::Num(0.0)),
        lambda_bar: (Expr::Num(0.0), Expr::Num(0.0)),
        eps0: 1.0,
        gamma: 0.5,
        k_phi: 1.0,
        theta: 1.0,
    }
}

/// Strictly convex reference instance: the cost reduces to the control
/// energy with phi = 1, the state decouples, and the constraint is
/// `u + lambda2 <= 0`. Every optimum is computable by hand.
pub fn builtin_example_quadratic() -> Instance {
    Instance {
        name: "quadratic".into(),
        cost_domain: CostFn::parse("0").unwrap(),
        cost_boundary: CostFn::parse("0").unwrap(),
        phi: Expr::Num(1.0),
        f: PointwiseFn::zero(),
        g: PointwiseFn::zero(),
        coeffs: EllipticCoefficients::laplace_plus_identity(),
        mu_bar: (Expr::Num(0.0), Expr::Num(0.0)),
        lambda_bar: (Expr::Num(0.0), Expr::Num(0.0)),
        eps0: 1.0,
        gamma: 0.5,
        k_phi: 1.0,
        theta: 1.0,
    }
}

/// Resolve a builtin name or a file path.
pub fn resolve_instance(spec: &str) -> Result<Instance> {
    match spec {
        "quartic" => Ok(builtin_example_quartic()),
        "unbounded" => Ok(builtin_example_unbounded()),
        "quadratic" => Ok(builtin_example_quadratic()),
        path => load_instance(std::path::Path::new(path)),
    }
}

#[derive(Deserialize)]
struct InstanceFile {
    #[serde(rename = "L")]
    l_domain: String,
    #[serde(rename = "l")]
    l_boundary: String,
    phi: String,
    f: String,
    g: String,
    coeffs: CoeffsFile,
    #[serde(default)]
    mu_bar: Option<MuBarFile>,
    #[serde(default)]
    lambda_bar: Option<LambdaBarFile>,
    eps0: f64,
    gamma: f64,
    k_phi: f64,
    theta: f64,
}

#[derive(Deserialize)]
struct CoeffsFile {
    a11: String,
    a12: String,
    a22: String,
    a0: String,
}

#[derive(Deserialize)]
struct MuBarFile {
    mu1: String,
    mu2: String,
}

#[derive(Deserialize)]
struct LambdaBarFile {
    lambda1: String,
    lambda2: String,
}

/// Load an instance from a keyed JSON document with expression strings in
/// the closed grammar.
pub fn load_instance(path: &std::path::Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let raw: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;

    let spatial = [expr::VAR_X1, expr::VAR_X2];
    let state = [expr::VAR_X1, expr::VAR_X2, expr::VAR_Y];
    let with_mu = [expr::VAR_X1, expr::VAR_X2, expr::VAR_Y, expr::VAR_MU];

    let scoped = |src: &str, allowed: &[usize], what: &str| -> Result<Expr> {
        let e = Expr::parse(src)?;
        if !e.uses_only(allowed) {
            return Err(Error::Validation(format!(
                "{what} uses a variable outside its signature: `{src}`"
            )));
        }
        Ok(e)
    };

    let instance = Instance {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".into()),
        cost_domain: CostFn::new(scoped(&raw.l_domain, &with_mu, "L")?),
        cost_boundary: CostFn::new(scoped(&raw.l_boundary, &with_mu, "l")?),
        phi: scoped(&raw.phi, &[expr::VAR_T], "phi")?,
        f: PointwiseFn::new(scoped(&raw.f, &state, "f")?),
        g: PointwiseFn::new(scoped(&raw.g, &state, "g")?),
        coeffs: EllipticCoefficients::new(
            scoped(&raw.coeffs.a11, &spatial, "a11")?,
            scoped(&raw.coeffs.a12, &spatial, "a12")?,
            scoped(&raw.coeffs.a22, &spatial, "a22")?,
            scoped(&raw.coeffs.a0, &spatial, "a0")?,
        ),
        mu_bar: match raw.mu_bar {
            Some(m) => (
                scoped(&m.mu1, &spatial, "mu_bar.mu1")?,
                scoped(&m.mu2, &spatial, "mu_bar.mu2")?,
            ),
            None => (Expr::Num(0.0), Expr::Num(0.0)),
        },
        lambda_bar: match raw.lambda_bar {
            Some(l) => (
                scoped(&l.lambda1, &spatial, "lambda_bar.lambda1")?,
                scoped(&l.lambda2, &spatial, "lambda_bar.lambda2")?,
            ),
            None => (Expr::Num(0.0), Expr::Num(0.0)),
        },
        eps0: raw.eps0,
        gamma: raw.gamma,
        k_phi: raw.k_phi,
        theta: raw.theta,
    };

    if !(instance.theta > 0.0) {
        return Err(Error::Validation("theta must be positive".into()));
    }
    if !(instance.gamma > 0.0) {
        return Err(Error::Validation("gamma must be positive".into()));
    }
    if !(instance.eps0 > 0.0) {
        return Err(Error::Validation("eps0 must be positive".into()));
    }
    if instance.k_phi < 0.0 {
        return Err(Error::Validation("k_phi must be nonnegative".into()));
    }
    Ok(instance)
}
