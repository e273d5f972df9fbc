//! Command-line front door: solves, sweeps, assumption checks, gradient
//! checks and oracle fixtures, with deterministic CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 solver failure,
//! 3 assumption-check failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use robinopt::adjoint;
use robinopt::geometry::{build_disk_mesh, BoundaryFunction, DiskMesh, Field};
use robinopt::optimize::{self, SolveOptions};
use robinopt::oracle;
use robinopt::pde::{self, NewtonOptions};
use robinopt::problem::{self, Instance, ParamVector, SampleSpec};
use robinopt::stability::{self, SweepSchedule};

#[derive(Parser)]
#[command(
    name = "robinopt",
    version,
    about = "Boundary optimal control solver laboratory on the unit disk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the control problem at one parameter point.
    Solve(SolveArgs),
    /// Run the parametric stability sweep or the unboundedness demo.
    Sweep(SweepArgs),
    /// Verify the standing assumptions on an instance.
    CheckAssumptions(CheckArgs),
    /// Compare the adjoint gradient against central finite differences.
    GradientCheck(GradientArgs),
    /// Emit the independent oracle fixtures.
    OracleFixtures(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Builtin name (quartic, unbounded, quadratic) or instance file path.
    #[arg(long)]
    instance: String,
    /// Mesh as rings,sectors.
    #[arg(long, default_value = "8,64")]
    mesh: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Constant override for the domain parameter mu1.
    #[arg(long, default_value_t = 0.0)]
    mu1: f64,
    /// Constant override for the boundary parameter mu2.
    #[arg(long, default_value_t = 0.0)]
    mu2: f64,
    /// Constant override for the Robin datum shift lambda1.
    #[arg(long, default_value_t = 0.0)]
    lambda1: f64,
    /// Constant override for the constraint shift lambda2.
    #[arg(long, default_value_t = 0.0)]
    lambda2: f64,
    /// Multistart seed indices.
    #[arg(long, default_value = "0,1,2,3,4,5,6,7", value_delimiter = ',')]
    seeds: Vec<u32>,
    /// Output directory for reports.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Constant amplitude of the mu1 direction.
    #[arg(long, default_value_t = 0.0)]
    dir_mu1: f64,
    /// Constant amplitude of the mu2 direction.
    #[arg(long, default_value_t = 0.0)]
    dir_mu2: f64,
    /// Amplitude of the lambda1 direction.
    #[arg(long, default_value_t = 0.0)]
    dir_lambda1: f64,
    /// Amplitude of the lambda2 direction.
    #[arg(long, default_value_t = 0.0)]
    dir_lambda2: f64,
    /// Boundary direction profile: constant or bump.
    #[arg(long, default_value = "constant")]
    profile: String,
    /// Decay factors, strictly decreasing.
    #[arg(
        long,
        default_value = "1,0.5,0.25,0.125,0.0625,0.03125",
        value_delimiter = ','
    )]
    factors: Vec<f64>,
    /// Multistart seed indices.
    #[arg(long, default_value = "0,1,2,3,4,5,6,7", value_delimiter = ',')]
    seeds: Vec<u32>,
    /// Run the unbounded-feasible-set demonstration up to this n instead.
    #[arg(long)]
    demo_unbounded: Option<usize>,
    /// Output directory for reports.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Builtin name or instance file path.
    #[arg(long)]
    instance: String,
}

#[derive(Args)]
struct GradientArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random controls to test.
    #[arg(long, default_value_t = 5)]
    controls: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Neumann datum for the radial profile fixture.
    #[arg(long, default_value_t = 1.0)]
    neumann: f64,
    /// Radial grid size.
    #[arg(long, default_value_t = 400)]
    grid: usize,
    /// Output directory for fixtures.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    instance: String,
    instance_sha256: String,
    mesh: [usize; 2],
    seeds: Vec<u32>,
    warnings: Vec<String>,
}

fn instance_hash(instance: &Instance) -> String {
    let mut hasher = Sha256::new();
    hasher.update(instance.canonical_description().as_bytes());
    let digest = hasher.finalize();
    digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

fn parse_mesh(spec: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("mesh must be rings,sectors: {spec}"));
    }
    let rings = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad ring count: {}", parts[0]))?;
    let sectors = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad sector count: {}", parts[1]))?;
    Ok((rings, sectors))
}

enum CliError {
    Usage(String),
    Solver(String),
    Assumptions(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Assumptions(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::Assumptions(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn solver<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Solver(e.to_string())
}

fn load_setup(common: &CommonArgs) -> Result<(Instance, DiskMesh), CliError> {
    let instance = problem::resolve_instance(&common.instance).map_err(usage)?;
    let (rings, sectors) = parse_mesh(&common.mesh).map_err(CliError::Usage)?;
    let mesh = build_disk_mesh(rings, sectors).map_err(usage)?;
    Ok((instance, mesh))
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(usage)?;
    std::fs::write(dir.join(name), content).map_err(usage)?;
    Ok(())
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest).map_err(usage)?;
    write_out(dir, "manifest.json", &(json + "\n"))
}

fn run_solve(args: &SolveArgs) -> Result<(), CliError> {
    let (instance, mesh) = load_setup(&args.common)?;
    let mut params = ParamVector::zeros(&mesh);
    params.mu1 = Field::constant(&mesh, args.mu1);
    params.mu2 = BoundaryFunction::constant(&mesh, args.mu2);
    params.lambda1 = BoundaryFunction::constant(&mesh, args.lambda1);
    params.lambda2 = BoundaryFunction::constant(&mesh, args.lambda2);
    if args.seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let opts = SolveOptions {
        seeds: args.seeds.clone(),
        ..SolveOptions::default()
    };
    let mut warnings = Vec::new();
    if !params.within_reach(&mesh, &instance) {
        warnings.push("parameter point outside the eps0 reach of the reference".into());
    }
    let set =
        optimize::approximate_solution_set(&mesh, &instance, &params, &opts).map_err(solver)?;
    let best = &set.points[0];

    let mut csv = String::from("node,u,multiplier\n");
    for b in 0..mesh.n_boundary() {
        let _ = writeln!(
            csv,
            "{b},{:.16e},{:.16e}",
            best.u.values[b], best.multiplier.values[b]
        );
    }
    write_out(&args.out, "solution.csv", &csv)?;

    #[derive(Serialize)]
    struct SolveReport {
        value: f64,
        clusters: usize,
        cost_per_cluster: Vec<f64>,
        stationarity: f64,
        primal_feasibility: f64,
        dual_sign: f64,
        complementarity: f64,
    }
    let report = SolveReport {
        value: set.value,
        clusters: set.points.len(),
        cost_per_cluster: set.points.iter().map(|p| p.cost).collect(),
        stationarity: best.residuals.stationarity,
        primal_feasibility: best.residuals.primal_feasibility,
        dual_sign: best.residuals.dual_sign,
        complementarity: best.residuals.complementarity,
    };
    let json = serde_json::to_string_pretty(&report).map_err(usage)?;
    write_out(&args.out, "report.json", &(json + "\n"))?;
    write_manifest(
        &args.out,
        &Manifest {
            tool: "robinopt",
            version: env!("CARGO_PKG_VERSION"),
            command: "solve".into(),
            instance: instance.name.clone(),
            instance_sha256: instance_hash(&instance),
            mesh: [mesh.n_rings, mesh.n_sectors],
            seeds: args.seeds.clone(),
            warnings,
        },
    )?;
    println!(
        "value {:.6e}, {} cluster(s), max residual {:.3e}",
        set.value,
        set.points.len(),
        best.residuals.max()
    );
    Ok(())
}

fn boundary_direction(
    mesh: &DiskMesh,
    amplitude: f64,
    profile: &str,
) -> Result<BoundaryFunction, CliError> {
    match profile {
        "constant" => Ok(BoundaryFunction::constant(mesh, amplitude)),
        "bump" => Ok(BoundaryFunction::from_angle_fn(mesh, |a| {
            amplitude * 0.5 * (1.0 + a.cos())
        })),
        other => Err(CliError::Usage(format!("unknown profile: {other}"))),
    }
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let (instance, mesh) = load_setup(&args.common)?;
    let mut warnings = Vec::new();

    if let Some(n_max) = args.demo_unbounded {
        let rows = stability::demo_unbounded(&mesh, &instance, n_max).map_err(solver)?;
        let mut csv = String::from("n,feasible,control_norm\n");
        for row in &rows {
            let _ = writeln!(csv, "{},{},{:.16e}", row.n, row.feasible, row.control_norm);
        }
        write_out(&args.out, "unbounded.csv", &csv)?;
        write_manifest(
            &args.out,
            &Manifest {
                tool: "robinopt",
                version: env!("CARGO_PKG_VERSION"),
                command: format!("sweep --demo-unbounded {n_max}"),
                instance: instance.name.clone(),
                instance_sha256: instance_hash(&instance),
                mesh: [mesh.n_rings, mesh.n_sectors],
                seeds: vec![],
                warnings,
            },
        )?;
        println!("unbounded demo: {} rows", rows.len());
        return Ok(());
    }

    let mut direction = ParamVector::zeros(&mesh);
    direction.mu1 = Field::constant(&mesh, args.dir_mu1);
    direction.mu2 = boundary_direction(&mesh, args.dir_mu2, &args.profile)?;
    direction.lambda1 = boundary_direction(&mesh, args.dir_lambda1, &args.profile)?;
    direction.lambda2 = boundary_direction(&mesh, args.dir_lambda2, &args.profile)?;
    let schedule = SweepSchedule {
        base: instance.reference_params(&mesh),
        direction,
        factors: args.factors.clone(),
    };
    let opts = SolveOptions {
        seeds: args.seeds.clone(),
        ..SolveOptions::default()
    };
    let rows = stability::sweep(&mesh, &instance, &schedule, &opts).map_err(solver)?;
    let mut csv = String::from("n,param_distance,excess,value_gap,control_gap,state_gap\n");
    for row in &rows {
        if !row.within_reach {
            warnings.push(format!("row {} is outside the eps0 reach", row.n));
        }
        match (&row.record, &row.error) {
            (Some(r), _) => {
                let _ = writeln!(
                    csv,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.n, r.param_distance, r.excess, r.value_gap, r.control_gap, r.state_gap
                );
            }
            (None, Some(e)) => warnings.push(format!("row {} failed: {e}", row.n)),
            (None, None) => unreachable!(),
        }
    }
    write_out(&args.out, "sweep.csv", &csv)?;
    write_manifest(
        &args.out,
        &Manifest {
            tool: "robinopt",
            version: env!("CARGO_PKG_VERSION"),
            command: "sweep".into(),
            instance: instance.name.clone(),
            instance_sha256: instance_hash(&instance),
            mesh: [mesh.n_rings, mesh.n_sectors],
            seeds: args.seeds.clone(),
            warnings,
        },
    )?;
    println!("sweep: {} rows", rows.len());
    Ok(())
}

fn run_check(args: &CheckArgs) -> Result<(), CliError> {
    let instance = problem::resolve_instance(&args.instance).map_err(usage)?;
    let report = problem::check_assumptions(&instance, &SampleSpec::default());
    println!("(A1) cost regularity        {}", verdict(report.a1_pass));
    println!("(A2) cost lower bounds      {}", verdict(report.a2_pass));
    println!("(A3) control weight         {}", verdict(report.a3_pass));
    println!("(A4) operator ellipticity   {}", verdict(report.a4_pass));
    println!("(A5) monotone nonlinearity  {}", verdict(report.a5_pass));
    println!(
        "estimates: k_phi {:.6}, gamma {:.6}, m0 {:.6}",
        report.k_phi_est, report.gamma_est, report.m0_est
    );
    for witness in &report.witnesses {
        println!("witness: {witness}");
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Assumptions(
            "assumption check failed; see witnesses above".into(),
        ))
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_gradient_check(args: &GradientArgs) -> Result<(), CliError> {
    use rand::{Rng, SeedableRng};
    let (instance, mesh) = load_setup(&args.common)?;
    let params = ParamVector::zeros(&mesh);
    let lambda1 = BoundaryFunction::zeros(&mesh);
    let newton = NewtonOptions {
        tolerance: 1e-13,
        max_iterations: 100,
        damping: 1.0,
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let step = 3e-5;
    let mut worst = 0.0_f64;
    for _ in 0..args.controls.max(1) {
        let u = BoundaryFunction {
            values: (0..mesh.n_boundary())
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect(),
        };
        let grad = adjoint::reduced_gradient(&mesh, &instance, &u, &lambda1, &params, &newton)
            .map_err(solver)?;
        let scale = grad.values.iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
        for b in 0..mesh.n_boundary() {
            let mut cost_at = |offset: f64| -> Result<f64, CliError> {
                let mut probe = u.clone();
                probe.values[b] += offset;
                let y = pde::solve_state(&mesh, &instance, &probe, &lambda1, &newton, None)
                    .map_err(solver)?;
                problem::eval_cost(&mesh, &instance, &y.field, &probe, &params).map_err(solver)
            };
            let fd = (cost_at(step)? - cost_at(-step)?) / (2.0 * step) / mesh.boundary_weight(b);
            worst = worst.max((fd - grad.values[b]).abs() / scale);
        }
    }
    println!("max relative gradient error {worst:.3e}");
    if worst < 1e-6 {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "gradient check failed: {worst:.3e} >= 1e-6"
        )))
    }
}

fn run_oracle_fixtures(args: &OracleArgs) -> Result<(), CliError> {
    let (instance, mesh) = load_setup(&args.common)?;
    let profile = oracle::radial_solve(&instance, args.neumann, args.grid).map_err(solver)?;
    write_out(
        &args.out,
        "radial_profile.txt",
        &oracle::format_radial_fixture(&instance, args.neumann, &profile),
    )?;
    if mesh.n_boundary() <= 8 {
        let params = ParamVector::zeros(&mesh);
        let result = oracle::brute_force_solve(&mesh, &instance, &params).map_err(solver)?;
        write_out(
            &args.out,
            "brute_force_optimum.txt",
            &oracle::format_optimum_fixture(&instance, &mesh, &result),
        )?;
        println!(
            "fixtures written: radial profile ({} nodes), optimum ({} evaluations)",
            profile.r.len(),
            result.evaluations
        );
    } else {
        println!(
            "fixtures written: radial profile ({} nodes); mesh too fine for the brute-force oracle",
            profile.r.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's help/version on stdout with success status
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::CheckAssumptions(args) => run_check(args),
        Command::GradientCheck(args) => run_gradient_check(args),
        Command::OracleFixtures(args) => run_oracle_fixtures(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
