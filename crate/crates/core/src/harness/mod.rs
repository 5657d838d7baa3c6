//! Convergence studies, CSV output and the command-line front end.

mod cli;

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

pub use cli::run_cli;

use crate::fespace::{make_space, Family, FeError};
use crate::mesh::{read_gmsh, GmshError};
use crate::mesh::{MeshData, MeshError};
use crate::systems::{
    solve_maxwell_eig, solve_quadcurl_eig, CurlCurlSystem, EigenOptions, ManufacturedCase,
    Operators, PencilSystem, QuadCurlSystem, SystemError, ERROR_QUADRATURE_DEGREE,
};

#[derive(thiserror::Error, Debug)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot read mesh file {path}: {message}")]
    MeshFile { path: String, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Gmsh(#[from] GmshError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("manufactured case {0:?} has no analytic solution for this problem")]
    MissingAnalytic(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid invocations, 1 for failures while
    /// computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::MeshFile { .. } | HarnessError::Gmsh(_) => 2,
            HarnessError::Mesh(MeshError::InvalidSubdivision(_)) => 2,
            _ => 1,
        }
    }
}

/// Mesh selection: `cube:n=<int>` or `file:<path>` (Gmsh format).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSpec {
    Cube(usize),
    File(String),
}

impl FromStr for MeshSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("cube:n=") {
            let n: usize = rest
                .parse()
                .map_err(|_| format!("invalid cube subdivision {rest:?}"))?;
            if n == 0 {
                return Err("cube subdivision must be at least 1".into());
            }
            Ok(MeshSpec::Cube(n))
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("empty mesh file path".into());
            }
            Ok(MeshSpec::File(path.to_string()))
        } else {
            Err(format!(
                "mesh spec {s:?} is neither cube:n=<int> nor file:<path>"
            ))
        }
    }
}

impl MeshSpec {
    pub fn load(&self) -> Result<Arc<MeshData>, HarnessError> {
        match self {
            MeshSpec::Cube(n) => Ok(MeshData::cube(*n)?),
            MeshSpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::MeshFile {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                Ok(MeshData::new(read_gmsh(&text)?)?)
            }
        }
    }
}

/// Problems available to [`convergence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// Edge interpolation of a smooth field.
    Interp,
    CurlCurlSource,
    QuadCurlSource,
    MaxwellEig,
    QuadCurlEig,
}

impl FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interp" => Ok(Problem::Interp),
            "curlcurl-src" | "curlcurl" => Ok(Problem::CurlCurlSource),
            "quadcurl-src" | "quadcurl" => Ok(Problem::QuadCurlSource),
            "maxwell-eig" => Ok(Problem::MaxwellEig),
            "quadcurl-eig" => Ok(Problem::QuadCurlEig),
            _ => Err(format!("unknown problem {s:?}")),
        }
    }
}

impl Problem {
    /// Manufactured case used when none is given.
    pub fn default_case(self) -> &'static str {
        match self {
            Problem::Interp => "cyclic",
            Problem::CurlCurlSource => "sine",
            _ => "sin3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// Error columns get an observed-rate column.
    pub with_rate: bool,
}

impl Column {
    pub fn error(name: &str) -> Self {
        Self {
            name: name.into(),
            with_rate: true,
        }
    }

    pub fn value(name: &str) -> Self {
        Self {
            name: name.into(),
            with_rate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Cube subdivision count.
    pub level: usize,
    pub h_max: f64,
    /// `dim U_0h`.
    pub n: usize,
    /// `dim U_h` (0 when the problem does not use it).
    pub m: usize,
    pub values: Vec<f64>,
}

impl ConvergenceRow {
    pub fn dofs(&self) -> usize {
        self.n + self.m
    }
}

/// One row per mesh level with error or eigenvalue columns. Rates are
/// `log(e_{l-1} / e_l) / log(h_{l-1} / h_l)`, which is the base-2 log ratio
/// when `h` halves.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub columns: Vec<Column>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[j]).collect())
    }

    /// Observed rate of column `j` at row `i >= 1`.
    pub fn rate(&self, i: usize, j: usize) -> Option<f64> {
        if i == 0 || i >= self.rows.len() || !self.columns[j].with_rate {
            return None;
        }
        let (a, b) = (&self.rows[i - 1], &self.rows[i]);
        Some((a.values[j] / b.values[j]).ln() / (a.h_max / b.h_max).ln())
    }

    /// Rates of a named column, one per row from the second on.
    pub fn rates(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(
            (1..self.rows.len())
                .filter_map(|i| self.rate(i, j))
                .collect(),
        )
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["level", "h_max", "N", "M", "DoF"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for c in &self.columns {
            h.push(c.name.clone());
            if c.with_rate {
                h.push(format!("rate_{}", c.name));
            }
        }
        h
    }
}

/// Formats a real with 10 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.9e}")
}

/// Renders a header plus data rows as CSV text.
pub fn csv_string(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// CSV rendering of a table: header row then one line per level; the rate
/// field of the first level is empty.
pub fn table_csv(table: &ConvergenceTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut f = vec![
                r.level.to_string(),
                format_real(r.h_max),
                r.n.to_string(),
                r.m.to_string(),
                r.dofs().to_string(),
            ];
            for (j, c) in table.columns.iter().enumerate() {
                f.push(format_real(r.values[j]));
                if c.with_rate {
                    f.push(table.rate(i, j).map(format_real).unwrap_or_default());
                }
            }
            f
        })
        .collect();
    csv_string(&table.header(), &rows)
}

/// Writes a nonempty table as CSV to `dest`, or to standard output when
/// `dest` is `None`.
pub fn emit_csv(table: &ConvergenceTable, dest: Option<&Path>) -> Result<(), HarnessError> {
    if table.rows.is_empty() {
        return Err(HarnessError::Usage("cannot emit an empty table".into()));
    }
    write_output(&table_csv(table), dest)
}

pub(crate) fn write_output(text: &str, dest: Option<&Path>) -> Result<(), HarnessError> {
    match dest {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    /// Manufactured case name; `None` selects the problem's default.
    pub case: Option<String>,
    pub eigen: EigenOptions,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            case: None,
            eigen: EigenOptions::default(),
        }
    }
}

fn check_levels(levels: &[usize]) -> Result<(), HarnessError> {
    if levels.is_empty() {
        return Err(HarnessError::Usage("at least one level is required".into()));
    }
    if levels.contains(&0) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Usage(format!(
            "levels must be increasing positive integers, got {levels:?}"
        )));
    }
    Ok(())
}

/// Runs `problem` with order `k` on the cube meshes `cube:n=<level>`.
pub fn convergence_study(
    problem: Problem,
    k: usize,
    levels: &[usize],
    options: &StudyOptions,
) -> Result<ConvergenceTable, HarnessError> {
    check_levels(levels)?;
    if !(1..=2).contains(&k) {
        return Err(HarnessError::Usage(format!(
            "order must be 1 or 2, got {k}"
        )));
    }
    let case_name = options.case.as_deref().unwrap_or(problem.default_case());
    let case = ManufacturedCase::by_name(case_name);
    let needs_case = matches!(
        problem,
        Problem::Interp | Problem::CurlCurlSource | Problem::QuadCurlSource
    );
    let case = match (needs_case, case) {
        (true, None) => {
            return Err(HarnessError::Usage(format!(
                "unknown manufactured case {case_name:?}"
            )))
        }
        (_, c) => c,
    };
    if problem == Problem::QuadCurlSource
        && case.as_ref().is_some_and(|c| !c.curl_tangential_trace_zero)
    {
        return Err(HarnessError::MissingAnalytic(case_name.into()));
    }
    let columns = match problem {
        Problem::Interp => vec![Column::error("l2_error"), Column::error("curl_error")],
        Problem::CurlCurlSource => vec![
            Column::error("l2_error"),
            Column::error("curl_error"),
            Column::error("hcurl_error"),
            Column::value("multiplier_ratio"),
        ],
        Problem::QuadCurlSource => vec![
            Column::error("l2_error"),
            Column::error("curl_error"),
            Column::error("phi_error"),
            Column::error("combined_error"),
            Column::value("multiplier_ratio"),
        ],
        Problem::MaxwellEig | Problem::QuadCurlEig => {
            vec![Column::value("eigenvalue"), Column::value("zero_count")]
        }
    };
    let mut table = ConvergenceTable::new(columns);
    for &level in levels {
        let data = MeshData::cube(level)?;
        let h_max = data.mesh.h_max();
        let row = match problem {
            Problem::Interp => {
                let c = case.as_ref().expect("checked above");
                let space = make_space(&data, Family::Edge, k, true)?;
                let e = space.interpolate(|x| (c.u)(x))?.vector_errors(
                    |x| (c.u)(x),
                    |x| (c.curl_u)(x),
                    ERROR_QUADRATURE_DEGREE,
                )?;
                ConvergenceRow {
                    level,
                    h_max,
                    n: space.num_free(),
                    m: 0,
                    values: vec![e.value, e.derivative],
                }
            }
            Problem::CurlCurlSource => {
                let ops = Arc::new(Operators::new(&data, k)?);
                let sol = CurlCurlSystem::new(ops.clone())?
                    .solve_case(case.as_ref().expect("checked above"))?;
                let e = sol.errors.expect("case solve reports errors");
                ConvergenceRow {
                    level,
                    h_max,
                    n: ops.spaces.n(),
                    m: 0,
                    values: vec![
                        e.u.value,
                        e.u.derivative,
                        e.u.energy(),
                        sol.multiplier_ratio,
                    ],
                }
            }
            Problem::QuadCurlSource => {
                let ops = Arc::new(Operators::new(&data, k)?);
                let sol = QuadCurlSystem::new(ops.clone())?
                    .solve_case(case.as_ref().expect("checked above"))?;
                let e = sol.errors.expect("case solve reports errors");
                ConvergenceRow {
                    level,
                    h_max,
                    n: ops.spaces.n(),
                    m: ops.spaces.m(),
                    values: vec![
                        e.u.value,
                        e.u.derivative,
                        e.phi.unwrap_or(f64::NAN),
                        e.combined(),
                        sol.multiplier_ratio,
                    ],
                }
            }
            Problem::MaxwellEig => {
                let ops = Arc::new(Operators::new(&data, k)?);
                let sol = solve_maxwell_eig(&ops, 1, &options.eigen)?;
                ConvergenceRow {
                    level,
                    h_max,
                    n: sol.n,
                    m: 0,
                    values: vec![
                        sol.eig.values[0],
                        sol.zero_count.map_or(f64::NAN, |z| z as f64),
                    ],
                }
            }
            Problem::QuadCurlEig => {
                let pencil = PencilSystem::new(&data, k)?;
                let sol = solve_quadcurl_eig(&pencil, 1, &options.eigen)?;
                ConvergenceRow {
                    level,
                    h_max,
                    n: sol.n,
                    m: sol.m,
                    values: vec![
                        sol.eig.values[0],
                        sol.zero_count.map_or(f64::NAN, |z| z as f64),
                    ],
                }
            }
        };
        table.rows.push(row);
    }
    Ok(table)
}

/// Text summary of the mesh and the space dimensions for order `k`.
pub fn mesh_info(data: &Arc<MeshData>, k: usize) -> Result<String, HarnessError> {
    let n = make_space(data, Family::Edge, k, true)?.num_free();
    let m = make_space(data, Family::Edge, k, false)?.num_free();
    let p = make_space(data, Family::Nodal, k, true)?.num_free();
    let mut s = String::from("quantity,value\n");
    let rows: [(&str, String); 10] = [
        ("vertices", data.mesh.num_vertices().to_string()),
        ("tetrahedra", data.mesh.num_tets().to_string()),
        ("edges", data.topology.num_edges().to_string()),
        ("faces", data.topology.num_faces().to_string()),
        ("h_max", format_real(data.mesh.h_max())),
        ("volume", format_real(data.mesh.total_volume())),
        ("order", k.to_string()),
        ("N", n.to_string()),
        ("M", m.to_string()),
        ("P", p.to_string()),
    ];
    for (key, v) in rows {
        let _ = writeln!(s, "{key},{v}");
    }
    Ok(s)
}
