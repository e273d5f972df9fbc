//! Adjoint solves, reduced gradients, multiplier recovery and the
//! optimality-system diagnostics.
//!
//! Everything here is discretize-then-optimize consistent: the adjoint
//! right-hand sides are the exact derivatives of the quadrature cost, so
//! the reduced gradient matches finite differences of the discrete cost
//! to roundoff-plus-truncation accuracy.
//!
//! Sign convention: the constraint is `G <= 0` with multiplier `e >= 0`
//! and Lagrangian `J + <e, G>`. Eliminating `e` from the stationarity
//! relation gives the adjoint boundary condition
//! `d_{n_A} phi + g_y phi = l_y - 2 phi(mu2) u g_y`, and the multiplier is
//! recovered as `e = -(trace(phi) + 2 phi(mu2) u)`.

use crate::error::Result;
use crate::geometry::{BoundaryFunction, DiskMesh, Field};
use crate::pde;
use crate::problem::{self, Instance, ParamVector};

/// Candidate solution with adjoint, recovered multiplier and diagnostics.
#[derive(Debug, Clone)]
pub struct KktPoint {
    pub y: Field,
    pub u: BoundaryFunction,
    pub adjoint: Field,
    /// Recovered constraint multiplier.
    pub multiplier: BoundaryFunction,
    pub residuals: KktResiduals,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    /// L2(Gamma) norm of `2 phi(mu2) u + trace(adjoint) + e`.
    pub stationarity: f64,
    /// Max norm of the positive part of the constraint values.
    pub primal_feasibility: f64,
    /// Max norm of the negative part of the multiplier.
    pub dual_sign: f64,
    /// L1(Gamma) norm of `e * G`.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.dual_sign)
            .max(self.complementarity)
    }
}

/// Domain part of the cost derivative with respect to the state: the load
/// `d_j = sum_q w_q L_y(x_q, y(x_q), mu1(x_q)) phi_j(x_q)`.
fn cost_domain_gradient_load(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    mu1: &Field,
) -> Vec<f64> {
    mesh.domain_load(&[y, mu1], |x, v| {
        instance.cost_domain.eval_deriv(x, v[0], v[1])
    })
}

/// Adjoint solve of the multiplier-eliminated optimality system:
/// `A phi + f_y(., y) phi = L_y` with boundary condition
/// `d_{n_A} phi + g_y(., y) phi = l_y - 2 phi(mu2) u g_y(., y)`.
pub fn solve_adjoint_kkt(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    u: &BoundaryFunction,
    mu: &ParamVector,
) -> Result<Field> {
    mesh.check_field(y, "y")?;
    mesh.check_boundary(u, "u")?;
    let c_dom = Field {
        values: (0..mesh.n_nodes())
            .map(|i| instance.f.eval_deriv(mesh.nodes[i], y.values[i]))
            .collect(),
    };
    let c_bnd = BoundaryFunction {
        values: mesh
            .boundary_nodes
            .iter()
            .map(|&i| instance.g.eval_deriv(mesh.nodes[i], y.values[i]))
            .collect(),
    };
    let mut load = cost_domain_gradient_load(mesh, instance, y, &mu.mu1);
    for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
        let m2 = mu.mu2.values[b];
        let ell_y = instance
            .cost_boundary
            .eval_deriv(mesh.nodes[i], y.values[i], m2);
        let gy = c_bnd.values[b];
        load[i] += mesh.boundary_weight(b) * (ell_y - 2.0 * instance.phi_at(m2) * u.values[b] * gy);
    }
    pde::solve_linear_with_load(mesh, &instance.coeffs, Some(&c_dom), Some(&c_bnd), &load)
}

/// Adjoint-based gradient of the reduced cost `u -> J(S(u), u, mu)`,
/// optionally carrying an extra boundary multiplier load (used by the
/// augmented-Lagrangian loop for the constraint-penalty term).
///
/// `y` must be the converged state for `(u, lambda1)`. Returns the
/// L2(Gamma) Riesz representative with respect to the trapezoid product:
/// `2 phi(mu2) u + m + trace(p)` where `p` solves the linearized adjoint
/// with boundary load `l_y + m g_y`.
pub fn reduced_gradient_at(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    u: &BoundaryFunction,
    mu: &ParamVector,
    boundary_multiplier: Option<&BoundaryFunction>,
) -> Result<BoundaryFunction> {
    let c_dom = Field {
        values: (0..mesh.n_nodes())
            .map(|i| instance.f.eval_deriv(mesh.nodes[i], y.values[i]))
            .collect(),
    };
    let mut load = cost_domain_gradient_load(mesh, instance, y, &mu.mu1);
    for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
        let m2 = mu.mu2.values[b];
        let mut v = instance
            .cost_boundary
            .eval_deriv(mesh.nodes[i], y.values[i], m2);
        if let Some(m) = boundary_multiplier {
            v += m.values[b] * instance.g.eval_deriv(mesh.nodes[i], y.values[i]);
        }
        load[i] += mesh.boundary_weight(b) * v;
    }
    let p = pde::solve_linear_with_load(mesh, &instance.coeffs, Some(&c_dom), None, &load)?;
    let tr = mesh.trace(&p);
    Ok(BoundaryFunction {
        values: (0..mesh.n_boundary())
            .map(|b| {
                let mut g = 2.0 * instance.phi_at(mu.mu2.values[b]) * u.values[b] + tr.values[b];
                if let Some(m) = boundary_multiplier {
                    g += m.values[b];
                }
                g
            })
            .collect(),
    })
}

/// Gradient of the reduced cost at a control, solving the state first.
pub fn reduced_gradient(
    mesh: &DiskMesh,
    instance: &Instance,
    u: &BoundaryFunction,
    lambda1: &BoundaryFunction,
    mu: &ParamVector,
    opts: &pde::NewtonOptions,
) -> Result<BoundaryFunction> {
    let state = pde::solve_state(mesh, instance, u, lambda1, opts, None)?;
    reduced_gradient_at(mesh, instance, &state.field, u, mu, None)
}

/// Recover the constraint multiplier from the adjoint:
/// `e = -(trace(adjoint) + 2 phi(mu2) u)`.
pub fn recover_multiplier(
    mesh: &DiskMesh,
    instance: &Instance,
    adjoint: &Field,
    u: &BoundaryFunction,
    mu: &ParamVector,
) -> BoundaryFunction {
    let tr = mesh.trace(adjoint);
    BoundaryFunction {
        values: (0..mesh.n_boundary())
            .map(|b| -(tr.values[b] + 2.0 * instance.phi_at(mu.mu2.values[b]) * u.values[b]))
            .collect(),
    }
}

/// KKT residual record for a candidate point with multiplier `e`.
#[allow(clippy::too_many_arguments)]
pub fn kkt_residuals(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    u: &BoundaryFunction,
    adjoint: &Field,
    multiplier: &BoundaryFunction,
    params: &ParamVector,
) -> Result<KktResiduals> {
    let tr = mesh.trace(adjoint);
    let stat = BoundaryFunction {
        values: (0..mesh.n_boundary())
            .map(|b| {
                2.0 * instance.phi_at(params.mu2.values[b]) * u.values[b]
                    + tr.values[b]
                    + multiplier.values[b]
            })
            .collect(),
    };
    let g = problem::constraint_residual(mesh, instance, y, u, &params.lambda2)?;
    let dual_sign = multiplier.values.iter().fold(0.0_f64, |m, &e| m.max(-e));
    let complementarity = (0..mesh.n_boundary())
        .map(|b| mesh.boundary_weight(b) * (multiplier.values[b] * g.values[b]).abs())
        .sum();
    Ok(KktResiduals {
        stationarity: mesh.l2_boundary(&stat),
        primal_feasibility: problem::max_violation(&g),
        dual_sign,
        complementarity,
    })
}

/// Variational-inequality pairing of a candidate solution against a
/// feasible competitor at the same parameter:
/// `< adjoint + 2 phi(mu2) u , G(point) - G(competitor) >` on the boundary.
/// Nonpositive (up to tolerance) when the candidate is optimal.
pub fn vi_check(
    mesh: &DiskMesh,
    instance: &Instance,
    point: &KktPoint,
    competitor_y: &Field,
    competitor_u: &BoundaryFunction,
    params: &ParamVector,
) -> Result<f64> {
    let g_a = problem::constraint_residual(mesh, instance, &point.y, &point.u, &params.lambda2)?;
    let g_b =
        problem::constraint_residual(mesh, instance, competitor_y, competitor_u, &params.lambda2)?;
    let tr = mesh.trace(&point.adjoint);
    Ok((0..mesh.n_boundary())
        .map(|b| {
            let weight = mesh.boundary_weight(b);
            let pairing =
                tr.values[b] + 2.0 * instance.phi_at(params.mu2.values[b]) * point.u.values[b];
            weight * pairing * (g_a.values[b] - g_b.values[b])
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::geometry::build_disk_mesh;
    use crate::pde::{NewtonOptions, PointwiseFn};
    use crate::problem::{builtin_example_quartic, eval_cost, CostFn};
    use rand::{Rng, SeedableRng};

    #[test]
    fn adjoint_vanishes_at_zero_point() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_quartic();
        let phi = solve_adjoint_kkt(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &BoundaryFunction::zeros(&mesh),
            &ParamVector::zeros(&mesh),
        )
        .unwrap();
        assert!(mesh.cmax(&phi) < 1e-13);
    }

    #[test]
    fn constant_adjoint_manufactured() {
        // L_y = 1, l_y = 0, f_y = g_y = 0, A = -Delta + 1 -> adjoint = 1
        let mesh = build_disk_mesh(6, 24).unwrap();
        let mut inst = builtin_example_quartic();
        inst.cost_domain = CostFn::new(Expr::parse("y").unwrap());
        inst.cost_boundary = CostFn::new(Expr::Num(0.0));
        inst.f = PointwiseFn::zero();
        inst.g = PointwiseFn::zero();
        let phi = solve_adjoint_kkt(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &BoundaryFunction::zeros(&mesh),
            &ParamVector::zeros(&mesh),
        )
        .unwrap();
        for &v in &phi.values {
            assert!((v - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn pure_control_cost_gradient_is_2u() {
        // L = 0, l = 0, phi = 1 -> gradient is exactly 2u
        let mesh = build_disk_mesh(4, 16).unwrap();
        let mut inst = builtin_example_quartic();
        inst.cost_domain = CostFn::new(Expr::Num(0.0));
        inst.cost_boundary = CostFn::new(Expr::Num(0.0));
        inst.phi = Expr::Num(1.0);
        let u = BoundaryFunction::from_angle_fn(&mesh, |a| a.sin());
        let g = reduced_gradient(
            &mesh,
            &inst,
            &u,
            &BoundaryFunction::zeros(&mesh),
            &ParamVector::zeros(&mesh),
            &NewtonOptions::default(),
        )
        .unwrap();
        for (gv, uv) in g.values.iter().zip(&u.values) {
            assert!((gv - 2.0 * uv).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_vanishes_at_origin_of_quartic() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_quartic();
        let g = reduced_gradient(
            &mesh,
            &inst,
            &BoundaryFunction::zeros(&mesh),
            &BoundaryFunction::zeros(&mesh),
            &ParamVector::zeros(&mesh),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(mesh.l2_boundary(&g) < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_quartic();
        let mu = ParamVector::zeros(&mesh);
        let lambda1 = BoundaryFunction::zeros(&mesh);
        let opts = NewtonOptions {
            tolerance: 1e-13,
            max_iterations: 100,
            damping: 1.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let u = BoundaryFunction {
            values: (0..mesh.n_boundary())
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect(),
        };
        let grad = reduced_gradient(&mesh, &inst, &u, &lambda1, &mu, &opts).unwrap();
        let step = 3e-5;
        let mut max_rel = 0.0_f64;
        let scale = grad.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for b in 0..mesh.n_boundary() {
            let mut up = u.clone();
            up.values[b] += step;
            let mut dn = u.clone();
            dn.values[b] -= step;
            let jp = {
                let y = pde::solve_state(&mesh, &inst, &up, &lambda1, &opts, None).unwrap();
                eval_cost(&mesh, &inst, &y.field, &up, &mu).unwrap()
            };
            let jn = {
                let y = pde::solve_state(&mesh, &inst, &dn, &lambda1, &opts, None).unwrap();
                eval_cost(&mesh, &inst, &y.field, &dn, &mu).unwrap()
            };
            // dJ/du_b is the weighted gradient component
            let fd = (jp - jn) / (2.0 * step) / mesh.boundary_weight(b);
            max_rel = max_rel.max((fd - grad.values[b]).abs() / scale);
        }
        assert!(max_rel < 1e-6, "max relative error {max_rel:.3e}");
    }

    #[test]
    fn multiplier_recovery_arithmetic() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let mut inst = builtin_example_quartic();
        inst.phi = Expr::Num(1.0);
        let e = recover_multiplier(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &BoundaryFunction::constant(&mesh, -1.0),
            &ParamVector::zeros(&mesh),
        );
        assert!(e.values.iter().all(|&v| (v - 2.0).abs() < 1e-15));

        let zero = recover_multiplier(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &BoundaryFunction::zeros(&mesh),
            &ParamVector::zeros(&mesh),
        );
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn elimination_identity() {
        // substituting the recovered multiplier into the boundary load of
        // the plain adjoint reproduces the eliminated system nodally
        let mesh = build_disk_mesh(6, 24).unwrap();
        let inst = builtin_example_quartic();
        let mu = ParamVector::zeros(&mesh);
        let lambda1 = BoundaryFunction::zeros(&mesh);
        let opts = NewtonOptions::default();
        let u = BoundaryFunction::from_angle_fn(&mesh, |a| -0.3 - 0.1 * a.cos());
        let y = pde::solve_state(&mesh, &inst, &u, &lambda1, &opts, None)
            .unwrap()
            .field;
        let phi_bar = solve_adjoint_kkt(&mesh, &inst, &y, &u, &mu).unwrap();
        let e = recover_multiplier(&mesh, &inst, &phi_bar, &u, &mu);

        // plain adjoint operator with boundary load l_y + e g_y
        let c_dom = Field {
            values: (0..mesh.n_nodes())
                .map(|i| inst.f.eval_deriv(mesh.nodes[i], y.values[i]))
                .collect(),
        };
        let mut load = mesh.domain_load(&[&y, &mu.mu1], |x, v| {
            inst.cost_domain.eval_deriv(x, v[0], v[1])
        });
        for (b, &i) in mesh.boundary_nodes.iter().enumerate() {
            let ell_y = inst
                .cost_boundary
                .eval_deriv(mesh.nodes[i], y.values[i], 0.0);
            let gy = inst.g.eval_deriv(mesh.nodes[i], y.values[i]);
            load[i] += mesh.boundary_weight(b) * (ell_y + e.values[b] * gy);
        }
        let phi_hat =
            pde::solve_linear_with_load(&mesh, &inst.coeffs, Some(&c_dom), None, &load).unwrap();
        let scale = mesh.cmax(&phi_bar).max(1.0);
        for (a, b) in phi_bar.values.iter().zip(&phi_hat.values) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn vi_self_pairing_is_zero() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_quartic();
        let mu = ParamVector::zeros(&mesh);
        let lambda = ParamVector::zeros(&mesh);
        let point = KktPoint {
            y: Field::zeros(&mesh),
            u: BoundaryFunction::zeros(&mesh),
            adjoint: Field::zeros(&mesh),
            multiplier: BoundaryFunction::zeros(&mesh),
            residuals: KktResiduals {
                stationarity: 0.0,
                primal_feasibility: 0.0,
                dual_sign: 0.0,
                complementarity: 0.0,
            },
            cost: 0.0,
        };
        let v = vi_check(
            &mesh,
            &inst,
            &point,
            &point.y.clone(),
            &point.u.clone(),
            &mu,
        )
        .unwrap();
        assert_eq!(v, 0.0);
        let _ = lambda;
    }
}
