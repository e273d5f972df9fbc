//! Constructive machinery for the admissible set: membership testing,
//! an always-available feasible point (solve the auxiliary Robin problem
//! with the constraint nonlinearity moved to the boundary condition, then
//! read off the control), and the feasible-point tracking construction
//! that follows a parameter perturbation at a linear rate.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryFunction, DiskMesh, Field};
use crate::pde::{self, NewtonOptions};
use crate::problem::{self, Instance, ParamVector};

/// Membership tolerances for the admissible set.
pub const STATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct MemberCheck {
    pub member: bool,
    pub state_residual: f64,
    pub constraint_violation: f64,
}

/// Test whether `(y, u)` satisfies the state equation and the pointwise
/// constraint at the parameter point `lambda`.
pub fn is_member(
    mesh: &DiskMesh,
    instance: &Instance,
    y: &Field,
    u: &BoundaryFunction,
    lambda: &ParamVector,
) -> Result<MemberCheck> {
    let state_residual = pde::state_residual(mesh, instance, y, u, &lambda.lambda1)?;
    let g = problem::constraint_residual(mesh, instance, y, u, &lambda.lambda2)?;
    let constraint_violation = problem::max_violation(&g);
    Ok(MemberCheck {
        member: state_residual <= STATE_TOL && constraint_violation <= problem::FEASIBILITY_TOL,
        state_residual,
        constraint_violation,
    })
}

/// Construct a feasible point: solve
/// `A y + f(x, y) = 0`, `d_{n_A} y + g(x, y) = lambda1 - lambda2`,
/// and set `u0 = -g(., y0) - lambda2`. The constraint then holds with
/// equality everywhere.
pub fn construct_feasible(
    mesh: &DiskMesh,
    instance: &Instance,
    lambda: &ParamVector,
    opts: &NewtonOptions,
) -> Result<(Field, BoundaryFunction)> {
    let psi = BoundaryFunction {
        values: lambda
            .lambda1
            .values
            .iter()
            .zip(&lambda.lambda2.values)
            .map(|(a, b)| a - b)
            .collect(),
    };
    let sol = pde::solve_semilinear_robin(
        mesh,
        &instance.coeffs,
        &instance.f,
        &instance.g,
        &Field::zeros(mesh),
        &psi,
        opts,
        None,
    )?;
    let y0 = sol.field;
    let u0 = BoundaryFunction {
        values: mesh
            .boundary_nodes
            .iter()
            .enumerate()
            .map(|(b, &i)| -instance.g.eval(mesh.nodes[i], y0.values[i]) - lambda.lambda2.values[b])
            .collect(),
    };
    Ok((y0, u0))
}

/// Track a member of the admissible set to a nearby parameter point.
///
/// Solves the tracking equation with boundary datum
/// `u_hat + lambda_hat2 + g(., y_hat) + lambda1_n - lambda2_n` and the
/// constraint nonlinearity on the boundary, then sets
/// `u_n = u_hat + g(., y_hat) + lambda_hat2 - g(., y_n) - lambda2_n`.
/// The constraint value is preserved by algebraic cancellation.
#[allow(clippy::too_many_arguments)]
pub fn track_feasible(
    mesh: &DiskMesh,
    instance: &Instance,
    y_hat: &Field,
    u_hat: &BoundaryFunction,
    lambda_hat: &ParamVector,
    lambda_n: &ParamVector,
    opts: &NewtonOptions,
) -> Result<(Field, BoundaryFunction)> {
    let check = is_member(mesh, instance, y_hat, u_hat, lambda_hat)?;
    if !check.member {
        return Err(Error::NotAdmissible(format!(
            "tracking base point has state residual {:.3e} and violation {:.3e}",
            check.state_residual, check.constraint_violation
        )));
    }
    let g_hat: Vec<f64> = mesh
        .boundary_nodes
        .iter()
        .map(|&i| instance.g.eval(mesh.nodes[i], y_hat.values[i]))
        .collect();
    let psi = BoundaryFunction {
        values: (0..mesh.n_boundary())
            .map(|b| {
                u_hat.values[b]
                    + lambda_hat.lambda2.values[b]
                    + g_hat[b]
                    + lambda_n.lambda1.values[b]
                    - lambda_n.lambda2.values[b]
            })
            .collect(),
    };
    let sol = pde::solve_semilinear_robin(
        mesh,
        &instance.coeffs,
        &instance.f,
        &instance.g,
        &Field::zeros(mesh),
        &psi,
        opts,
        Some(y_hat),
    )?;
    let y_n = sol.field;
    let u_n = BoundaryFunction {
        values: (0..mesh.n_boundary())
            .map(|b| {
                let i = mesh.boundary_nodes[b];
                u_hat.values[b] + g_hat[b] + lambda_hat.lambda2.values[b]
                    - instance.g.eval(mesh.nodes[i], y_n.values[i])
                    - lambda_n.lambda2.values[b]
            })
            .collect(),
    };
    Ok((y_n, u_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_disk_mesh;
    use crate::problem::{builtin_example_quartic, builtin_example_unbounded};

    #[test]
    fn zero_pair_is_member() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_unbounded();
        let check = is_member(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &BoundaryFunction::zeros(&mesh),
            &ParamVector::zeros(&mesh),
        )
        .unwrap();
        assert!(check.member);
    }

    #[test]
    fn strongly_negative_controls_remain_members() {
        // with g = 0 the admissible set contains u = -n for every n
        let mesh = build_disk_mesh(6, 24).unwrap();
        let inst = builtin_example_unbounded();
        let lambda = ParamVector::zeros(&mesh);
        let opts = NewtonOptions {
            tolerance: 1e-11,
            max_iterations: 100,
            damping: 1.0,
        };
        for n in 1..=10 {
            let u = BoundaryFunction::constant(&mesh, -(n as f64));
            let y = pde::solve_state(&mesh, &inst, &u, &lambda.lambda1, &opts, None).unwrap();
            let check = is_member(&mesh, &inst, &y.field, &u, &lambda).unwrap();
            assert!(check.member, "n = {n}: {check:?}");
        }
    }

    #[test]
    fn positive_control_violates_quartic_constraint() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_quartic();
        let check = is_member(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &BoundaryFunction::constant(&mesh, 1.0),
            &ParamVector::zeros(&mesh),
        )
        .unwrap();
        assert!(!check.member);
        assert!((check.constraint_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construct_feasible_zero_parameters() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        for inst in [builtin_example_quartic(), builtin_example_unbounded()] {
            let (y0, u0) = construct_feasible(
                &mesh,
                &inst,
                &ParamVector::zeros(&mesh),
                &NewtonOptions::default(),
            )
            .unwrap();
            assert!(mesh.cmax(&y0) < 1e-12);
            assert!(u0.values.iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn construct_feasible_has_active_constraint() {
        let mesh = build_disk_mesh(8, 32).unwrap();
        let inst = builtin_example_quartic();
        let mut lambda = ParamVector::zeros(&mesh);
        lambda.lambda1 = BoundaryFunction::constant(&mesh, 1.0);
        let (y0, u0) =
            construct_feasible(&mesh, &inst, &lambda, &NewtonOptions::default()).unwrap();
        let check = is_member(&mesh, &inst, &y0, &u0, &lambda).unwrap();
        assert!(check.member, "{check:?}");
        let g = problem::constraint_residual(&mesh, &inst, &y0, &u0, &lambda.lambda2).unwrap();
        assert!(g.values.iter().all(|&v| v.abs() < 1e-10));
        // u0 = -trace(y0) since g(x, y) = y and lambda2 = 0
        let tr = mesh.trace(&y0);
        for (a, b) in u0.values.iter().zip(&tr.values) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn tracking_identity_at_same_parameter() {
        let mesh = build_disk_mesh(6, 24).unwrap();
        let inst = builtin_example_quartic();
        let mut lambda = ParamVector::zeros(&mesh);
        lambda.lambda1 = BoundaryFunction::from_angle_fn(&mesh, |a| 0.3 * a.cos());
        let opts = NewtonOptions {
            tolerance: 1e-12,
            ..Default::default()
        };
        let (y0, u0) = construct_feasible(&mesh, &inst, &lambda, &opts).unwrap();
        let (y1, u1) = track_feasible(&mesh, &inst, &y0, &u0, &lambda, &lambda, &opts).unwrap();
        let diff = Field {
            values: y1
                .values
                .iter()
                .zip(&y0.values)
                .map(|(a, b)| a - b)
                .collect(),
        };
        assert!(mesh.cmax(&diff) < 1e-10);
        for (a, b) in u1.values.iter().zip(&u0.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tracking_preserves_constraint_value() {
        let mesh = build_disk_mesh(6, 24).unwrap();
        let inst = builtin_example_quartic();
        let hat = ParamVector::zeros(&mesh);
        let mut lam_n = ParamVector::zeros(&mesh);
        lam_n.lambda1 = BoundaryFunction::constant(&mesh, 0.5);
        lam_n.lambda2 = BoundaryFunction::from_angle_fn(&mesh, |a| 0.2 * a.sin());
        let opts = NewtonOptions {
            tolerance: 1e-12,
            ..Default::default()
        };
        let (y_hat, u_hat) = construct_feasible(&mesh, &inst, &hat, &opts).unwrap();
        let (y_n, u_n) = track_feasible(&mesh, &inst, &y_hat, &u_hat, &hat, &lam_n, &opts).unwrap();
        let g_hat =
            problem::constraint_residual(&mesh, &inst, &y_hat, &u_hat, &hat.lambda2).unwrap();
        let g_n = problem::constraint_residual(&mesh, &inst, &y_n, &u_n, &lam_n.lambda2).unwrap();
        for (a, b) in g_n.values.iter().zip(&g_hat.values) {
            assert!((a - b).abs() < 1e-10);
        }
        let check = is_member(&mesh, &inst, &y_n, &u_n, &lam_n).unwrap();
        assert!(check.member, "{check:?}");
    }

    #[test]
    fn tracking_rejects_infeasible_base() {
        let mesh = build_disk_mesh(4, 16).unwrap();
        let inst = builtin_example_quartic();
        let lambda = ParamVector::zeros(&mesh);
        let bad_u = BoundaryFunction::constant(&mesh, 2.0);
        let err = track_feasible(
            &mesh,
            &inst,
            &Field::zeros(&mesh),
            &bad_u,
            &lambda,
            &lambda,
            &NewtonOptions::default(),
        );
        assert!(matches!(err, Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn tracking_converges_to_limit_member() {
        // empirical closedness: members along lambda_n -> lambda_hat
        // converge to a member at the limit
        let mesh = build_disk_mesh(6, 24).unwrap();
        let inst = builtin_example_quartic();
        let hat = ParamVector::zeros(&mesh);
        let opts = NewtonOptions {
            tolerance: 1e-12,
            ..Default::default()
        };
        let (y_hat, u_hat) = construct_feasible(&mesh, &inst, &hat, &opts).unwrap();
        let mut last_dist = f64::INFINITY;
        for k in [1, 2, 4] {
            let mut lam = ParamVector::zeros(&mesh);
            lam.lambda1 = BoundaryFunction::constant(&mesh, 1.0 / k as f64);
            let (y_n, _u_n) =
                track_feasible(&mesh, &inst, &y_hat, &u_hat, &hat, &lam, &opts).unwrap();
            let dy = Field {
                values: y_n
                    .values
                    .iter()
                    .zip(&y_hat.values)
                    .map(|(a, b)| a - b)
                    .collect(),
            };
            let dist = mesh.cmax(&dy);
            assert!(dist < last_dist);
            last_dist = dist;
        }
    }
}
