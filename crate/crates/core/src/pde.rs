//! P1 Galerkin assembly and solution of the general Robin problem
//!
//! ```text
//! A y + h(x, y) = theta   in Omega,
//! d_{n_A} y + k(x, y) = psi   on Gamma,
//! ```
//!
//! with `A y = -div(a grad y) + a0 y`. Linear solves go through a banded
//! Cholesky factorization; semilinear terms are handled by damped Newton
//! with the nonlinearity integrated by nodal lumping (first-order
//! quadrature, keeps the Jacobian sparsity of the stiffness matrix).

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::{BoundaryFunction, DiskMesh, Field};
use crate::linalg::BandMatrix;

/// Coefficients of the elliptic operator, as functions of position.
#[derive(Debug, Clone)]
pub struct EllipticCoefficients {
    pub a11: Expr,
    pub a12: Expr,
    pub a22: Expr,
    pub a0: Expr,
}

impl EllipticCoefficients {
    pub fn new(a11: Expr, a12: Expr, a22: Expr, a0: Expr) -> Self {
        EllipticCoefficients { a11, a12, a22, a0 }
    }

    /// `-Delta + 1`: identity diffusion, unit reaction.
    pub fn laplace_plus_identity() -> Self {
        EllipticCoefficients {
            a11: Expr::Num(1.0),
            a12: Expr::Num(0.0),
            a22: Expr::Num(1.0),
            a0: Expr::Num(1.0),
        }
    }

    fn at(&self, x: [f64; 2]) -> (f64, f64, f64, f64) {
        let env = [x[0], x[1], 0.0, 0.0, 0.0];
        (
            self.a11.eval(&env),
            self.a12.eval(&env),
            self.a22.eval(&env),
            self.a0.eval(&env),
        )
    }
}

/// A pointwise function of position and state with its y-derivative.
#[derive(Debug, Clone)]
pub struct PointwiseFn {
    pub value: Expr,
    pub deriv: Expr,
}

impl PointwiseFn {
    pub fn new(value: Expr) -> Self {
        let deriv = value.derivative(expr::VAR_Y);
        PointwiseFn { value, deriv }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?))
    }

    pub fn zero() -> Self {
        PointwiseFn {
            value: Expr::Num(0.0),
            deriv: Expr::Num(0.0),
        }
    }

    pub fn eval(&self, x: [f64; 2], y: f64) -> f64 {
        self.value.eval(&[x[0], x[1], y, 0.0, 0.0])
    }

    pub fn eval_deriv(&self, x: [f64; 2], y: f64) -> f64 {
        self.deriv.eval(&[x[0], x[1], y, 0.0, 0.0])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-10,
            max_iterations: 50,
            damping: 1.0,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "Newton tolerance must be > 0".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "Newton max_iterations must be >= 1".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(
                "Newton damping must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a Newton solve, with the residual history for convergence
/// diagnostics.
#[derive(Debug, Clone)]
pub struct NewtonSolve {
    pub field: Field,
    pub residuals: Vec<f64>,
}

fn half_bandwidth(mesh: &DiskMesh) -> usize {
    let mut hb = 0;
    for tri in &mesh.triangles {
        for a in 0..3 {
            for b in (a + 1)..3 {
                hb = hb.max(tri[a].abs_diff(tri[b]));
            }
        }
    }
    hb
}

/// Assemble stiffness plus consistent `a0` mass: the bilinear form of the
/// operator `A` without any linearization terms.
pub fn assemble_operator(mesh: &DiskMesh, coeffs: &EllipticCoefficients) -> BandMatrix {
    let mut mat = BandMatrix::zeros(mesh.n_nodes(), half_bandwidth(mesh));
    for tri in &mesh.triangles {
        let nodes = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let area = crate::geometry::triangle_area(&mesh.nodes, tri);
        let det = 2.0 * area;
        // constant P1 gradients
        let mut grads = [[0.0; 2]; 3];
        for v in 0..3 {
            let b = nodes[(v + 1) % 3];
            let c = nodes[(v + 2) % 3];
            grads[v] = [(b[1] - c[1]) / det, (c[0] - b[0]) / det];
        }
        // edge-midpoint quadrature, exact for quadratics
        for k in 0..3 {
            let i = (k + 1) % 3;
            let j = (k + 2) % 3;
            let w = area / 3.0;
            let x = [
                0.5 * (nodes[i][0] + nodes[j][0]),
                0.5 * (nodes[i][1] + nodes[j][1]),
            ];
            let (a11, a12, a22, a0) = coeffs.at(x);
            // shape values at this midpoint: 1/2 at i and j, 0 at k
            let mut phi = [0.0; 3];
            phi[i] = 0.5;
            phi[j] = 0.5;
            for p in 0..3 {
                for r in 0..=p {
                    let diff = a11 * grads[p][0] * grads[r][0]
                        + a12 * (grads[p][0] * grads[r][1] + grads[p][1] * grads[r][0])
                        + a22 * grads[p][1] * grads[r][1];
                    let mass = a0 * phi[p] * phi[r];
                    mat.add(tri[p], tri[r], w * (diff + mass));
                }
            }
        }
    }
    mat
}

/// Add lumped domain reaction `c_dom` and boundary reaction `c_bnd` to an
/// assembled operator.
pub fn add_reactions(
    mesh: &DiskMesh,
    mat: &mut BandMatrix,
    c_dom: Option<&Field>,
    c_bnd: Option<&BoundaryFunction>,
) {
    if let Some(c) = c_dom {
        for i in 0..mesh.n_nodes() {
            mat.add(i, i, mesh.lumped_mass(i) * c.values[i]);
        }
    }
    if let Some(c) = c_bnd {
        for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
            mat.add(i, i, mesh.boundary_weight(b) * c.values[b]);
        }
    }
}

/// Load vector of the data pair `(theta, psi)`: consistent quadrature for
/// the domain part, trapezoid (diagonal) for the boundary part.
pub fn assemble_load(mesh: &DiskMesh, theta: &Field, psi: &BoundaryFunction) -> Vec<f64> {
    let mut load = mesh.domain_load(&[theta], |_, v| v[0]);
    for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
        load[i] += mesh.boundary_weight(b) * psi.values[b];
    }
    load
}

/// Solve the linear Robin problem
/// `A y + c_dom y = theta` in Omega, `d_{n_A} y + c_bnd y = psi` on Gamma.
pub fn solve_linear_robin(
    mesh: &DiskMesh,
    coeffs: &EllipticCoefficients,
    c_dom: Option<&Field>,
    c_bnd: Option<&BoundaryFunction>,
    theta: &Field,
    psi: &BoundaryFunction,
) -> Result<Field> {
    mesh.check_field(theta, "theta")?;
    mesh.check_boundary(psi, "psi")?;
    if let Some(c) = c_dom {
        mesh.check_field(c, "c_dom")?;
        if c.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("c_dom must be nonnegative".into()));
        }
    }
    if let Some(c) = c_bnd {
        mesh.check_boundary(c, "c_bnd")?;
        if c.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("c_bnd must be nonnegative".into()));
        }
    }
    let load = assemble_load(mesh, theta, psi);
    solve_linear_with_load(mesh, coeffs, c_dom, c_bnd, &load)
}

/// Linear Robin solve against an already-assembled load vector. Used by the
/// adjoint machinery, where the load is the exact derivative of a
/// quadrature functional rather than an interpolated datum.
pub fn solve_linear_with_load(
    mesh: &DiskMesh,
    coeffs: &EllipticCoefficients,
    c_dom: Option<&Field>,
    c_bnd: Option<&BoundaryFunction>,
    load: &[f64],
) -> Result<Field> {
    let mut mat = assemble_operator(mesh, coeffs);
    add_reactions(mesh, &mut mat, c_dom, c_bnd);
    let chol = mat.cholesky()?;
    Ok(Field {
        values: chol.solve(load),
    })
}

/// Lumped-mass dual norm of a residual vector: `sqrt(sum R_i^2 / m_i)`.
/// Mesh-consistent scaling for Newton convergence tests.
pub fn residual_norm(mesh: &DiskMesh, residual: &[f64]) -> f64 {
    residual
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / mesh.lumped_mass(i))
        .sum::<f64>()
        .sqrt()
}

/// Solve the semilinear Robin problem by damped Newton iteration; each step
/// is a linear Robin solve with frozen linearization coefficients.
#[allow(clippy::too_many_arguments)]
pub fn solve_semilinear_robin(
    mesh: &DiskMesh,
    coeffs: &EllipticCoefficients,
    h_fun: &PointwiseFn,
    k_fun: &PointwiseFn,
    theta: &Field,
    psi: &BoundaryFunction,
    opts: &NewtonOptions,
    initial: Option<&Field>,
) -> Result<NewtonSolve> {
    opts.validate()?;
    mesh.check_field(theta, "theta")?;
    mesh.check_boundary(psi, "psi")?;

    let base = assemble_operator(mesh, coeffs);
    let load = assemble_load(mesh, theta, psi);

    let mut y = match initial {
        Some(f) => {
            mesh.check_field(f, "initial")?;
            f.clone()
        }
        None => Field::zeros(mesh),
    };

    let residual_of = |y: &Field| -> Vec<f64> {
        let mut r = base.matvec(&y.values);
        for i in 0..mesh.n_nodes() {
            r[i] += mesh.lumped_mass(i) * h_fun.eval(mesh.nodes[i], y.values[i]);
        }
        for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
            r[i] += mesh.boundary_weight(b) * k_fun.eval(mesh.nodes[i], y.values[i]);
        }
        for (i, l) in load.iter().enumerate() {
            r[i] -= l;
        }
        r
    };

    let mut residuals = Vec::new();
    let mut r = residual_of(&y);
    let mut rnorm = residual_norm(mesh, &r);
    residuals.push(rnorm);

    for _ in 0..opts.max_iterations {
        if rnorm < opts.tolerance {
            return Ok(NewtonSolve {
                field: y,
                residuals,
            });
        }
        let mut jac = base.clone();
        for i in 0..mesh.n_nodes() {
            jac.add(
                i,
                i,
                mesh.lumped_mass(i) * h_fun.eval_deriv(mesh.nodes[i], y.values[i]),
            );
        }
        for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
            jac.add(
                i,
                i,
                mesh.boundary_weight(b) * k_fun.eval_deriv(mesh.nodes[i], y.values[i]),
            );
        }
        let chol = jac.cholesky()?;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = chol.solve(&neg_r);

        // damped update: halve the step while the residual increases
        let mut alpha = opts.damping;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = Field {
                values: y
                    .values
                    .iter()
                    .zip(&step)
                    .map(|(v, s)| v + alpha * s)
                    .collect(),
            };
            let r_trial = residual_of(&trial);
            let rn_trial = residual_norm(mesh, &r_trial);
            if rn_trial < rnorm || rn_trial < opts.tolerance {
                y = trial;
                r = r_trial;
                rnorm = rn_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDidNotConverge {
                iterations: residuals.len(),
                residual: rnorm,
            });
        }
        residuals.push(rnorm);
    }
    if rnorm < opts.tolerance {
        return Ok(NewtonSolve {
            field: y,
            residuals,
        });
    }
    Err(Error::NewtonDidNotConverge {
        iterations: opts.max_iterations,
        residual: rnorm,
    })
}

/// Solve the state equation `A y + f(x, y) = 0`, `d_{n_A} y = u + lambda1`.
pub fn solve_state(
    mesh: &DiskMesh,
    instance: &crate::problem::Instance,
    u: &BoundaryFunction,
    lambda1: &BoundaryFunction,
    opts: &NewtonOptions,
    initial: Option<&Field>,
) -> Result<NewtonSolve> {
    mesh.check_boundary(u, "u")?;
    mesh.check_boundary(lambda1, "lambda1")?;
    let psi = BoundaryFunction {
        values: u
            .values
            .iter()
            .zip(&lambda1.values)
            .map(|(a, b)| a + b)
            .collect(),
    };
    solve_semilinear_robin(
        mesh,
        &instance.coeffs,
        &instance.f,
        &PointwiseFn::zero(),
        &Field::zeros(mesh),
        &psi,
        opts,
        initial,
    )
}

/// Nonlinear residual norm of the state equation at `(y, u, lambda1)`.
pub fn state_residual(
    mesh: &DiskMesh,
    instance: &crate::problem::Instance,
    y: &Field,
    u: &BoundaryFunction,
    lambda1: &BoundaryFunction,
) -> Result<f64> {
    mesh.check_field(y, "y")?;
    mesh.check_boundary(u, "u")?;
    mesh.check_boundary(lambda1, "lambda1")?;
    let base = assemble_operator(mesh, &instance.coeffs);
    let mut r = base.matvec(&y.values);
    for i in 0..mesh.n_nodes() {
        r[i] += mesh.lumped_mass(i) * instance.f.eval(mesh.nodes[i], y.values[i]);
    }
    for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
        r[i] -= mesh.boundary_weight(b) * (u.values[b] + lambda1.values[b]);
    }
    Ok(residual_norm(mesh, &r))
}

/// One row of the weak-limit experiment table.
#[derive(Debug, Clone)]
pub struct WeakLimitRow {
    pub mode: usize,
    pub error_cmax: f64,
    /// Set when the oscillation exceeds the Nyquist limit of the boundary
    /// grid and the sampled perturbation is aliased.
    pub aliased: bool,
}

/// Perturb the boundary datum by `sin(n * angle)` for each mode `n` and
/// record how far the perturbed solution moves from the base solution.
#[allow(clippy::too_many_arguments)]
pub fn weak_limit_experiment(
    mesh: &DiskMesh,
    coeffs: &EllipticCoefficients,
    h_fun: &PointwiseFn,
    k_fun: &PointwiseFn,
    psi: &BoundaryFunction,
    modes: &[usize],
    opts: &NewtonOptions,
) -> Result<Vec<WeakLimitRow>> {
    if !modes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(
            "modes must be strictly increasing".into(),
        ));
    }
    if modes.is_empty() {
        return Ok(Vec::new());
    }
    let theta = Field::zeros(mesh);
    let base = solve_semilinear_robin(mesh, coeffs, h_fun, k_fun, &theta, psi, opts, None)?;
    let mut rows = Vec::new();
    for &n in modes {
        let bump = BoundaryFunction::from_angle_fn(mesh, |a| (n as f64 * a).sin());
        let psi_n = BoundaryFunction {
            values: psi
                .values
                .iter()
                .zip(&bump.values)
                .map(|(a, b)| a + b)
                .collect(),
        };
        let sol = solve_semilinear_robin(mesh, coeffs, h_fun, k_fun, &theta, &psi_n, opts, None)?;
        let diff = Field {
            values: sol
                .field
                .values
                .iter()
                .zip(&base.field.values)
                .map(|(a, b)| a - b)
                .collect(),
        };
        rows.push(WeakLimitRow {
            mode: n,
            error_cmax: mesh.cmax(&diff),
            aliased: 2 * n > mesh.n_sectors,
        });
    }
    Ok(rows)
}
