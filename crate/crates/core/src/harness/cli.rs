use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{
    convergence_study, csv_string, format_real, mesh_info, table_csv, write_output, HarnessError,
    MeshSpec, Problem, StudyOptions,
};
use crate::assembly::SparseMatrix;
use crate::systems::{
    solve_maxwell_eig, solve_quadcurl_eig, EigenMethod, EigenOptions, EigenSolution, Operators,
    PencilSystem,
};

#[derive(Parser, Debug)]
#[command(
    name = "quadcurl",
    version,
    about = "Edge-element solvers for curl-curl and quad-curl problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quad-curl eigenvalues (first nonzero values).
    Eig(EigArgs),
    /// Maxwell (curl-curl) eigenvalues (first nonzero values).
    Maxwell(EigArgs),
    /// Convergence study of a source problem on cube meshes.
    SourceConv(SourceArgs),
    /// Convergence study of edge interpolation on cube meshes.
    InterpConv(StudyArgs),
    /// Mesh statistics and space dimensions.
    Info(InfoArgs),
}

#[derive(Args, Debug)]
struct EigArgs {
    /// `cube:n=<int>` or `file:<path>`.
    #[arg(long, default_value = "cube:n=2")]
    mesh: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    /// Number of nonzero eigenvalues.
    #[arg(long, default_value_t = 5)]
    num: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving the assembled matrices in coordinate format.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
    /// Relative threshold below which eigenvalues count as zero.
    #[arg(long, default_value_t = 1e-8)]
    zero_tol: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SourceProblem {
    Curlcurl,
    Quadcurl,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    /// Comma-separated cube subdivision counts.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    levels: Vec<usize>,
    /// Manufactured solution (`sine`, `sin3`, `cyclic`).
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SourceArgs {
    #[arg(long, value_enum)]
    problem: SourceProblem,
    #[command(flatten)]
    study: StudyArgs,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[arg(long, default_value = "cube:n=2")]
    mesh: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code: 0 on success, 2 on usage errors, 1 on numerical or
/// output failures. Output files are written only after the computation
/// succeeded.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("quadcurl: {e}");
            e.exit_code()
        }
    }
}

fn parse_mesh(s: &str) -> Result<MeshSpec, HarnessError> {
    s.parse().map_err(HarnessError::Usage)
}

fn eigen_options(a: &EigArgs) -> Result<EigenOptions, HarnessError> {
    if a.num == 0 {
        return Err(HarnessError::Usage("--num must be at least 1".into()));
    }
    if !(a.zero_tol.is_finite() && a.zero_tol > 0.0 && a.zero_tol < 1.0) {
        return Err(HarnessError::Usage(format!(
            "--zero-tol must lie in (0, 1), got {}",
            a.zero_tol
        )));
    }
    Ok(EigenOptions {
        method: match a.method {
            MethodArg::Auto => EigenMethod::Auto,
            MethodArg::Dense => EigenMethod::Dense,
            MethodArg::Lanczos => EigenMethod::Lanczos,
        },
        zero_tol: a.zero_tol,
        ..EigenOptions::default()
    })
}

fn eigen_csv(sol: &EigenSolution, dofs: usize) -> String {
    let header: Vec<String> = [
        "index",
        "eigenvalue",
        "DoF",
        "residual",
        "divergence_residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = (0..sol.eig.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                format_real(sol.eig.values[i]),
                dofs.to_string(),
                format_real(sol.eig.residuals[i]),
                format_real(sol.divergence_residuals[i]),
            ]
        })
        .collect();
    csv_string(&header, &rows)
}

fn dump(dir: &Path, mats: &[(&str, &SparseMatrix)]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    for (name, m) in mats {
        let f = std::fs::File::create(dir.join(format!("{name}.txt")))?;
        m.write_coordinate(std::io::BufWriter::new(f))?;
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Eig(a) => {
            let spec = parse_mesh(&a.mesh)?;
            let opts = eigen_options(&a)?;
            let data = spec.load()?;
            let pencil = PencilSystem::new(&data, a.order as usize)?;
            let sol = solve_quadcurl_eig(&pencil, a.num, &opts)?;
            let text = eigen_csv(&sol, sol.dofs());
            if let Some(dir) = &a.dump_matrices {
                let o = &pencil.ops;
                dump(
                    dir,
                    &[
                        ("K", &o.k),
                        ("M_N", &o.mass_n),
                        ("M_M", &o.mass_m),
                        ("G", &o.grad0),
                    ],
                )?;
            }
            write_output(&text, a.out.as_deref())
        }
        Command::Maxwell(a) => {
            let spec = parse_mesh(&a.mesh)?;
            let opts = eigen_options(&a)?;
            let data = spec.load()?;
            let ops = Arc::new(Operators::new(&data, a.order as usize)?);
            let sol = solve_maxwell_eig(&ops, a.num, &opts)?;
            let text = eigen_csv(&sol, sol.n);
            if let Some(dir) = &a.dump_matrices {
                dump(
                    dir,
                    &[("C", &ops.k0), ("M", &ops.mass_n), ("G", &ops.grad0)],
                )?;
            }
            write_output(&text, a.out.as_deref())
        }
        Command::SourceConv(a) => {
            let problem = match a.problem {
                SourceProblem::Curlcurl => Problem::CurlCurlSource,
                SourceProblem::Quadcurl => Problem::QuadCurlSource,
            };
            study(problem, a.study)
        }
        Command::InterpConv(a) => study(Problem::Interp, a),
        Command::Info(a) => {
            let data = parse_mesh(&a.mesh)?.load()?;
            let text = mesh_info(&data, a.order as usize)?;
            write_output(&text, a.out.as_deref())
        }
    }
}

fn study(problem: Problem, a: StudyArgs) -> Result<(), HarnessError> {
    let opts = StudyOptions {
        case: a.case,
        ..StudyOptions::default()
    };
    let table = convergence_study(problem, a.order as usize, &a.levels, &opts)?;
    if table.rows.is_empty() {
        return Err(HarnessError::Usage("no levels".into()));
    }
    write_output(&table_csv(&table), a.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        run_cli(std::iter::once("quadcurl").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["eig", "--mesh", "cube:n=0"]), 2);
        assert_eq!(run(&["frobnicate"]), 2);
        assert_eq!(run(&["eig", "--order", "3"]), 2);
        assert_eq!(run(&["eig", "--num", "0"]), 2);
        assert_eq!(run(&["eig", "--zero-tol", "-1"]), 2);
        assert_eq!(
            run(&["source-conv", "--problem", "quadcurl", "--levels", "3,2"]),
            2
        );
        assert_eq!(run(&["info", "--mesh", "file:/nonexistent/mesh.msh"]), 2);
    }

    #[test]
    fn numerical_failure_exits_1() {
        // a single cube with k=1 has only one nonzero quad-curl eigenvalue
        assert_eq!(
            run(&[
                "eig",
                "--mesh",
                "cube:n=1",
                "--num",
                "2",
                "--out",
                "/dev/null"
            ]),
            1
        );
    }
}
