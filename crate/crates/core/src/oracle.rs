//! Independent low-tech references used to validate the main pipeline:
//! a 1-D radial collocation solver for rotationally symmetric instances
//! and a derivative-free brute-force optimizer for tiny meshes.
//!
//! Both deliberately use different numerics than the 2-D pipeline (graded
//! finite differences and dense LU here, versus P1 finite elements and
//! banded Cholesky there) so that agreement is genuinely independent
//! evidence.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryFunction, DiskMesh};
use crate::pde::{self, NewtonOptions};
use crate::problem::{self, Instance, ParamVector};

/// Radial solution samples on a graded grid over [0, 1].
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub y: Vec<f64>,
}

impl RadialProfile {
    /// Piecewise-linear interpolation; clamps outside [0, 1].
    pub fn value_at(&self, r: f64) -> f64 {
        if r <= self.r[0] {
            return self.y[0];
        }
        if r >= *self.r.last().unwrap() {
            return *self.y.last().unwrap();
        }
        let i = self.r.partition_point(|&g| g < r).max(1);
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let t = (r - r0) / (r1 - r0);
        self.y[i - 1] * (1.0 - t) + self.y[i] * t
    }
}

/// Check that an instance is rotation invariant with isotropic constant
/// diffusion; returns (diffusion, reaction) constants.
fn radial_data(instance: &Instance) -> Result<(f64, f64)> {
    let samples = [(0.3, 0.1), (-0.5, 0.4), (0.2, -0.7), (0.0, 0.0)];
    let c = instance.coeffs.a11.eval(&[0.0, 0.0, 0.0, 0.0, 0.0]);
    let a0 = instance.coeffs.a0.eval(&[0.0, 0.0, 0.0, 0.0, 0.0]);
    for &(x1, x2) in &samples {
        let env = [x1, x2, 0.0, 0.0, 0.0];
        let ok = (instance.coeffs.a11.eval(&env) - c).abs() < 1e-14
            && (instance.coeffs.a22.eval(&env) - c).abs() < 1e-14
            && instance.coeffs.a12.eval(&env).abs() < 1e-14
            && (instance.coeffs.a0.eval(&env) - a0).abs() < 1e-14;
        if !ok {
            return Err(Error::InvalidParameter(
                "radial oracle requires constant isotropic coefficients".into(),
            ));
        }
        // f must not depend on position
        for &y in &[-1.3, 0.0, 0.8] {
            if (instance.f.eval([x1, x2], y) - instance.f.eval([0.0, 0.0], y)).abs() > 1e-14 {
                return Err(Error::InvalidParameter(
                    "radial oracle requires a position-independent nonlinearity".into(),
                ));
            }
        }
    }
    if c <= 0.0 {
        return Err(Error::InvalidParameter(
            "diffusion constant must be positive".into(),
        ));
    }
    Ok((c, a0))
}

/// Dense LU solve with partial pivoting; oracle-scale systems only.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if a[piv][k].abs() < 1e-300 {
            return Err(Error::SingularSystem("radial collocation matrix".into()));
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in (k + 1)..n {
            let m = a[i][k] / a[k][k];
            if m == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// One-sided 3-point first-derivative weights at `r0` using nodes
/// `r0 < r1 < r2` (or mirrored).
fn onesided_weights(r0: f64, r1: f64, r2: f64) -> (f64, f64, f64) {
    let (h1, h2) = (r1 - r0, r2 - r0);
    let w1 = h2 / (h1 * (h2 - h1));
    let w2 = -h1 / (h2 * (h2 - h1));
    (-w1 - w2, w1, w2)
}

/// Solve the rotationally symmetric reduced state equation
/// `-c (y'' + y'/r) + a0 y + f(y) = 0` on (0, 1) with `y'(0) = 0` and
/// `c y'(1) = neumann_value`, by Newton on a graded collocation grid.
///
/// The grid `r_i = sin(pi i / (2 m))` clusters points near the boundary
/// where the profile varies fastest.
pub fn radial_solve(
    instance: &Instance,
    neumann_value: f64,
    grid_size: usize,
) -> Result<RadialProfile> {
    if grid_size < 8 {
        return Err(Error::InvalidParameter(
            "radial grid needs at least 8 intervals".into(),
        ));
    }
    let (c, a0) = radial_data(instance)?;
    let m = grid_size;
    let r: Vec<f64> = (0..=m)
        .map(|i| (std::f64::consts::FRAC_PI_2 * i as f64 / m as f64).sin())
        .collect();
    let mut y = vec![0.0_f64; m + 1];

    let residual = |y: &[f64]| -> Vec<f64> {
        let mut res = vec![0.0; m + 1];
        let (w0, w1, w2) = onesided_weights(r[0], r[1], r[2]);
        res[0] = w0 * y[0] + w1 * y[1] + w2 * y[2];
        for i in 1..m {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            let ypp = 2.0
                * (y[i - 1] / (hm * (hm + hp)) - y[i] / (hm * hp) + y[i + 1] / (hp * (hm + hp)));
            let yp = -hp / (hm * (hm + hp)) * y[i - 1]
                + (hp - hm) / (hm * hp) * y[i]
                + hm / (hp * (hm + hp)) * y[i + 1];
            res[i] = -c * (ypp + yp / r[i]) + a0 * y[i] + instance.f.eval([r[i], 0.0], y[i]);
        }
        let (v0, v1, v2) = onesided_weights(r[m], r[m - 1], r[m - 2]);
        res[m] = c * (v0 * y[m] + v1 * y[m - 1] + v2 * y[m - 2]) - neumann_value;
        res
    };

    let mut last_step = f64::INFINITY;
    let mut prev_step = f64::INFINITY;
    for iter in 0..60 {
        let res = residual(&y);
        // convergence is measured in solution units: the Newton increment
        // is the row-scaled residual, immune to the 1/h^2 row scales; a
        // small stagnating increment is the roundoff floor of the graded
        // grid and also counts as converged
        let scale = y.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if last_step < 1e-12 * scale || (last_step < 1e-8 && last_step >= 0.5 * prev_step) {
            return Ok(RadialProfile { r, y });
        }
        if iter == 59 {
            return Err(Error::NewtonDidNotConverge {
                iterations: iter,
                residual: last_step,
            });
        }
        let mut jac = vec![vec![0.0_f64; m + 1]; m + 1];
        let (w0, w1, w2) = onesided_weights(r[0], r[1], r[2]);
        jac[0][0] = w0;
        jac[0][1] = w1;
        jac[0][2] = w2;
        for i in 1..m {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            jac[i][i - 1] = -c * (2.0 / (hm * (hm + hp)) + (-hp / (hm * (hm + hp))) / r[i]);
            jac[i][i] = -c * (-2.0 / (hm * hp) + ((hp - hm) / (hm * hp)) / r[i])
                + a0
                + instance.f.eval_deriv([r[i], 0.0], y[i]);
            jac[i][i + 1] = -c * (2.0 / (hp * (hm + hp)) + (hm / (hp * (hm + hp))) / r[i]);
        }
        let (v0, v1, v2) = onesided_weights(r[m], r[m - 1], r[m - 2]);
        jac[m][m] = c * v0;
        jac[m][m - 1] = c * v1;
        jac[m][m - 2] = c * v2;
        let delta = dense_solve(jac, res)?;
        prev_step = last_step;
        last_step = delta.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for i in 0..=m {
            y[i] -= delta[i];
        }
    }
    unreachable!()
}

/// Result of the derivative-free coarse search.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub u: BoundaryFunction,
    pub cost: f64,
    pub violation: f64,
    pub evaluations: usize,
}

/// Coordinate pattern search for the reduced problem on a tiny mesh.
///
/// Minimizes the cost plus a quadratic penalty on positive constraint
/// values; the penalty weight escalates until the returned point violates
/// the constraint by at most 1e-4. Search box [-5, 5] per node, pattern
/// step halves down to 1e-6. Always returns the best point found.
pub fn brute_force_solve(
    mesh: &DiskMesh,
    instance: &Instance,
    params: &ParamVector,
) -> Result<BruteForceResult> {
    if mesh.n_boundary() > 8 {
        return Err(Error::InvalidParameter(
            "brute-force oracle is limited to 8 boundary nodes".into(),
        ));
    }
    let newton = NewtonOptions {
        tolerance: 1e-12,
        max_iterations: 60,
        damping: 1.0,
    };
    let mut evaluations = 0usize;
    let mut evaluate = |u: &BoundaryFunction, rho: f64| -> (f64, f64, f64) {
        evaluations += 1;
        match pde::solve_state(mesh, instance, u, &params.lambda1, &newton, None) {
            Ok(sol) => {
                let cost = match problem::eval_cost(mesh, instance, &sol.field, u, params) {
                    Ok(c) => c,
                    Err(_) => return (f64::INFINITY, f64::INFINITY, f64::INFINITY),
                };
                let g = match problem::constraint_residual(
                    mesh,
                    instance,
                    &sol.field,
                    u,
                    &params.lambda2,
                ) {
                    Ok(g) => g,
                    Err(_) => return (f64::INFINITY, f64::INFINITY, f64::INFINITY),
                };
                let mut penalty = 0.0;
                for b in 0..mesh.n_boundary() {
                    let viol = g.values[b].max(0.0);
                    penalty += mesh.boundary_weight(b) * viol * viol;
                }
                (cost + rho * penalty, cost, problem::max_violation(&g))
            }
            Err(_) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
        }
    };

    let dim = mesh.n_boundary();
    // coordinate moves alone cannot leave a nonconvex basin, so the search
    // restarts from several constant levels and keeps the overall best
    let mut overall: Option<BruteForceResult> = None;
    for level in [0.0, -0.5, 0.5, -1.0, 1.0, -3.0] {
        let mut u = BoundaryFunction::constant(mesh, level);
        let mut rho = 1e2;
        let (mut best, mut best_cost, mut best_violation) = evaluate(&u, rho);
        for _escalation in 0..8 {
            let mut step = 1.0_f64;
            while step >= 1e-6 {
                let mut improved = false;
                // per-coordinate moves plus uniform shifts of all nodes;
                // the uniform moves reach radially coupled optima that
                // single-coordinate descent cannot see
                let mut moves: Vec<Vec<f64>> = Vec::with_capacity(2 * dim + 2);
                for b in 0..dim {
                    for sign in [1.0, -1.0] {
                        let mut trial = u.values.clone();
                        trial[b] = (trial[b] + sign * step).clamp(-5.0, 5.0);
                        moves.push(trial);
                    }
                }
                for sign in [1.0, -1.0] {
                    moves.push(
                        u.values
                            .iter()
                            .map(|v| (v + sign * step).clamp(-5.0, 5.0))
                            .collect(),
                    );
                }
                for values in moves {
                    if values == u.values {
                        continue;
                    }
                    let trial = BoundaryFunction { values };
                    let (f, cost, violation) = evaluate(&trial, rho);
                    if f < best {
                        u = trial;
                        best = f;
                        best_cost = cost;
                        best_violation = violation;
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            if best_violation <= 1e-4 {
                break;
            }
            rho *= 10.0;
            let (f, cost, violation) = evaluate(&u, rho);
            best = f;
            best_cost = cost;
            best_violation = violation;
        }
        let candidate = BruteForceResult {
            u,
            cost: best_cost,
            violation: best_violation,
            evaluations: 0,
        };
        let better = match &overall {
            None => true,
            Some(cur) => {
                (candidate.violation <= 1e-4 && cur.violation > 1e-4)
                    || (candidate.violation <= 1e-4) == (cur.violation <= 1e-4)
                        && candidate.cost < cur.cost
            }
        };
        if better {
            overall = Some(candidate);
        }
    }
    let mut result = overall.unwrap();
    result.evaluations = evaluations;
    Ok(result)
}

/// Plain-text fixture table of an oracle radial profile.
pub fn format_radial_fixture(
    instance: &Instance,
    neumann_value: f64,
    profile: &RadialProfile,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# radial oracle profile\n# instance: {}\n# neumann_value: {neumann_value}\n# grid_size: {}\n# columns: r y\n",
        instance.name,
        profile.r.len() - 1
    ));
    for (r, y) in profile.r.iter().zip(&profile.y) {
        out.push_str(&format!("{r:.16e} {y:.16e}\n"));
    }
    out
}

/// Plain-text fixture of a brute-force optimum.
pub fn format_optimum_fixture(
    instance: &Instance,
    mesh: &DiskMesh,
    result: &BruteForceResult,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# brute-force oracle optimum\n# instance: {}\n# mesh: {},{}\n# evaluations: {}\n# violation: {:.3e}\n# cost: {:.16e}\n# columns: node u\n",
        instance.name,
        mesh.n_rings,
        mesh.n_sectors,
        result.evaluations,
        result.violation,
        result.cost
    ));
    for (b, v) in result.u.values.iter().enumerate() {
        out.push_str(&format!("{b} {v:.16e}\n"));
    }
    out
}
