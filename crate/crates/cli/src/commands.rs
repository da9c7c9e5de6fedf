//! The four workflows behind the `treedamp` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use treedamp_core::damping::mesh_seeds;
use treedamp_core::diagnostics::max_kirchhoff;
use treedamp_core::*;

use crate::config::{Problem, ProblemConfig};
use crate::error::CliError;
use crate::io;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CONTROL_FILE: &str = "control.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const VERIFY_FILE: &str = "verify.toml";

pub fn load_problem(path: &Path) -> Result<Problem, CliError> {
    ProblemConfig::load(path)?.validate()
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub max_abs: f64,
    pub max_normalized: f64,
    pub relative: f64,
}

impl From<OptimalityReport> for Residual {
    fn from(r: OptimalityReport) -> Self {
        Self {
            max_abs: r.max_abs,
            max_normalized: r.max_normalized,
            relative: r.relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffRow {
    /// Original id of the internal edge ending at the vertex.
    pub vertex: u64,
    pub order: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub order: usize,
    pub max_jump: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

fn kirchhoff_rows(tree: &Tree, entries: &[KirchhoffEntry]) -> Vec<KirchhoffRow> {
    entries
        .iter()
        .map(|e| KirchhoffRow {
            vertex: tree.original_id(e.vertex),
            order: e.order,
            residual: e.residual,
        })
        .collect()
}

fn continuity_rows(tree: &Tree, report: &[OrderJump]) -> Vec<ContinuityRow> {
    report
        .iter()
        .map(|o| ContinuityRow {
            order: o.order,
            max_jump: o.max_jump,
            edge: o.at.map(|(j, _)| tree.original_id(j)),
            t: o.at.map(|(_, t)| t),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampSummary {
    pub q: usize,
    pub degree: usize,
    pub dimension: usize,
    pub energy: f64,
    pub min_pivot: f64,
    pub tolerance: f64,
    pub g_recursion_defect: f64,
    pub optimality: Residual,
    pub weak_bvp: Residual,
    #[serde(default)]
    pub kirchhoff: Vec<KirchhoffRow>,
    pub continuity: Vec<ContinuityRow>,
}

/// Solves the damping problem and collects its diagnostics.
pub fn run_damp(
    problem: &Problem,
    q: Option<usize>,
    tol: Option<f64>,
) -> Result<(DampingSolution, DampSummary), CliError> {
    let mut options = problem.config.solver.options();
    if let Some(q) = q {
        if q == 0 {
            return Err(CliError::Validation("--q must be at least 1".into()));
        }
        options.q = q;
    }
    if let Some(tol) = tol {
        options.tolerance = tol;
    }
    let sol = solve_damping(&problem.coeffs, &problem.history, &options)?.with_diagnostics(&problem.coeffs)?;
    let diag = sol.diagnostics.as_ref().expect("diagnostics were just computed");
    let summary = DampSummary {
        q: options.q,
        degree: sol.basis.degree(),
        dimension: sol.basis.dim(),
        energy: sol.energy,
        min_pivot: sol.min_pivot,
        tolerance: options.tolerance,
        g_recursion_defect: diag.g_recursion_defect,
        optimality: diag.optimality.into(),
        weak_bvp: diag.weak_bvp.into(),
        kirchhoff: kirchhoff_rows(&problem.tree, &diag.kirchhoff),
        continuity: continuity_rows(&problem.tree, &diag.continuity),
    };
    Ok((sol, summary))
}

/// `damp`: writes the trajectory, the control and `summary.toml` into `out`.
pub fn cmd_damp(config: &Path, out: &Path, q: Option<usize>, tol: Option<f64>) -> Result<DampSummary, CliError> {
    let problem = load_problem(config)?;
    let (sol, summary) = run_damp(&problem, q, tol)?;
    create_dir(out)?;
    io::write_trajectory(&out.join(TRAJECTORY_FILE), &problem.tree, &sol.y)?;
    io::write_control(&out.join(CONTROL_FILE), &problem.tree, sol.u.edges())?;
    io::write_text(&out.join(SUMMARY_FILE), &to_toml(&summary))?;
    if summary.optimality.relative > summary.tolerance {
        return Err(CliError::Numerical(format!(
            "first-variation residual {:e} exceeds tolerance {:e}",
            summary.optimality.relative, summary.tolerance
        )));
    }
    Ok(summary)
}

fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("summary types serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeResidual {
    pub edge: u64,
    /// `||ell y - u||_{L_2}`
    pub equation: f64,
    /// `sup |y|` over the terminal window (boundary edges only)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub q: usize,
    pub degree: usize,
    pub control_norm_sq: f64,
    pub edges: Vec<EdgeResidual>,
}

/// Forward solve for a given control on the mesh of the configured refinement.
pub fn run_simulate(problem: &Problem, control: Vec<PiecewisePoly>) -> Result<(TreeFunction, SimulateSummary), CliError> {
    let tree = problem.tree.clone();
    let n = problem.coeffs.order();
    let tau = problem.coeffs.tau();
    let control = Control::new(&tree, control)?;
    let mut seeds = mesh_seeds(&problem.coeffs, &problem.history);
    for (idx, u) in control.edges().iter().enumerate() {
        let b = u.breaks();
        seeds.extend(b[1..b.len() - 1].iter().map(|&t| Seed::Edge(idx + 1, t)));
    }
    let q = problem.config.solver.q;
    let mesh = DelayMesh::build_with_seeds(tree.clone(), tau, q, &seeds)?;
    let degree = problem.config.solver.degree.unwrap_or(2 * n + 1);
    let y = solve_cauchy_with_degree(&problem.coeffs, &problem.history, &control, &mesh, degree)?;
    let residuals = residual_ell(&y, &problem.coeffs, &control)?;
    let edges = (1..=tree.num_edges())
        .map(|j| {
            let len = tree.length(j);
            EdgeResidual {
                edge: tree.original_id(j),
                equation: residuals[j - 1],
                terminal: tree.is_boundary(j).then(|| y.edge(j).sup_bound_on(len - tau, len)),
            }
        })
        .collect();
    let summary = SimulateSummary {
        q,
        degree,
        control_norm_sq: control.norm_sq(),
        edges,
    };
    Ok((y, summary))
}

/// `simulate`: reads a control CSV, writes the trajectory and `summary.toml`.
pub fn cmd_simulate(config: &Path, control: &Path, out: &Path) -> Result<SimulateSummary, CliError> {
    let problem = load_problem(config)?;
    let u = io::by_canonical(&problem.tree, io::read_sampled(control)?, control)?;
    let (y, summary) = run_simulate(&problem, u)?;
    create_dir(out)?;
    io::write_trajectory(&out.join(TRAJECTORY_FILE), &problem.tree, &y)?;
    io::write_text(&out.join(SUMMARY_FILE), &to_toml(&summary))?;
    Ok(summary)
}

/// Rebuilds a trajectory from `trajectory.csv` and the configured history.
pub fn read_trajectory(problem: &Problem, path: &Path) -> Result<TreeFunction, CliError> {
    let edges = io::by_canonical(&problem.tree, io::read_sampled(path)?, path)?;
    TreeFunction::new(
        problem.tree.clone(),
        problem.coeffs.order(),
        problem.coeffs.tau(),
        edges,
        problem.history.clone(),
    )
    .map_err(|e| CliError::parse(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub q: usize,
    pub degree: usize,
    pub energy: f64,
    pub optimality: Residual,
    pub weak_bvp: Residual,
    pub admissible: bool,
    #[serde(default)]
    pub violations: Vec<String>,
    #[serde(default)]
    pub kirchhoff: Vec<KirchhoffRow>,
    pub continuity: Vec<ContinuityRow>,
}

#[derive(Debug, Deserialize)]
struct Recorded {
    q: usize,
    degree: usize,
}

/// `verify`: checks a stored solution against the optimality conditions.
pub fn cmd_verify(config: &Path, solution: &Path) -> Result<VerifySummary, CliError> {
    let problem = load_problem(config)?;
    let y = read_trajectory(&problem, &solution.join(TRAJECTORY_FILE))?;
    let recorded_path = solution.join(SUMMARY_FILE);
    let recorded = match std::fs::read_to_string(&recorded_path) {
        Ok(text) => Some(toml::from_str::<Recorded>(&text).map_err(|e| CliError::parse(&recorded_path, e))?),
        Err(_) => None,
    };
    let n = problem.coeffs.order();
    let q = recorded.as_ref().map_or(problem.config.solver.q, |r| r.q);
    let degree = recorded
        .as_ref()
        .map(|r| r.degree)
        .or(problem.config.solver.degree)
        .unwrap_or(2 * n + 1);
    let summary = run_verify(&problem, &y, q, degree)?;
    io::write_text(&solution.join(VERIFY_FILE), &to_toml(&summary))?;
    let tol = problem.config.solver.tolerance;
    if !summary.admissible {
        return Err(CliError::Assertion(format!(
            "trajectory violates the constraints: {}",
            summary.violations.join("; ")
        )));
    }
    if summary.optimality.relative > tol {
        return Err(CliError::Assertion(format!(
            "first-variation residual {:e} exceeds tolerance {tol:e}",
            summary.optimality.relative
        )));
    }
    Ok(summary)
}

pub fn run_verify(problem: &Problem, y: &TreeFunction, q: usize, degree: usize) -> Result<VerifySummary, CliError> {
    let coeffs = &problem.coeffs;
    let n = coeffs.order();
    let mesh = Arc::new(DelayMesh::build_with_seeds(
        problem.tree.clone(),
        coeffs.tau(),
        q,
        &mesh_seeds(coeffs, &problem.history),
    )?);
    let basis = Basis::with_degree(mesh.clone(), n, degree)?;
    let lift = lift_phi(&mesh, n, &problem.history)?;
    let scale = y.edges().iter().map(PiecewisePoly::sup_bound).fold(1.0, f64::max);
    let report = is_in_w(&y.sub(&lift), 1e-8 * scale);
    let optimality = optimality_check(y, &basis, coeffs)?;
    let weak = weak_bvp_residual(y, &basis, coeffs)?;
    let qd = quasi_derivatives(y, coeffs)?;
    Ok(VerifySummary {
        q,
        degree,
        energy: energy(y, coeffs)?,
        optimality: optimality.into(),
        weak_bvp: weak.into(),
        admissible: report.is_member(),
        violations: report.violations.iter().map(|v| format!("{v:?}")).collect(),
        kirchhoff: kirchhoff_rows(&problem.tree, &kirchhoff_residual(&qd, &problem.tree)),
        continuity: continuity_rows(&problem.tree, &continuity_report(&qd)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub q: usize,
    pub energy: f64,
    pub optimality: f64,
    pub max_kirchhoff: f64,
    /// Max jump of `y^<k>` for `k = n..2n-1`.
    pub jumps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub order: usize,
    pub rows: Vec<ConvergenceRow>,
    pub smoothness_loss: Vec<SmoothnessLoss>,
    pub violations: Vec<String>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,energy,optimality,max_kirchhoff");
        for k in self.order..2 * self.order {
            let _ = write!(out, ",jump_q{k}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{:.16e},{:.6e},{:.6e}", r.q, r.energy, r.optimality, r.max_kirchhoff);
            for j in &r.jumps {
                let _ = write!(out, ",{j:.6e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Relative slack for the monotone energy check.
const ENERGY_SLACK: f64 = 1e-10;
/// Kirchhoff residuals below this are treated as converged noise.
const KIRCHHOFF_FLOOR: f64 = 1e-9;

pub fn run_convergence(problem: &Problem, qs: &[usize]) -> Result<ConvergenceTable, CliError> {
    if qs.is_empty() || qs.contains(&0) {
        return Err(CliError::Validation("--q needs positive refinement levels".into()));
    }
    let n = problem.coeffs.order();
    let mut rows = Vec::with_capacity(qs.len());
    let mut levels: Vec<Vec<Vec<Jump>>> = vec![Vec::new(); n];
    for &q in qs {
        let (sol, summary) = run_damp(problem, Some(q), None)?;
        let qd = quasi_derivatives(&sol.y, &problem.coeffs)?;
        for (slot, k) in levels.iter_mut().zip(n..2 * n) {
            slot.push(qd.jumps(k));
        }
        let diag = sol.diagnostics.as_ref().expect("run_damp fills diagnostics");
        rows.push(ConvergenceRow {
            q,
            energy: sol.energy,
            optimality: summary.optimality.relative,
            max_kirchhoff: max_kirchhoff(&diag.kirchhoff),
            jumps: diag.continuity.iter().map(|o| o.max_jump).collect(),
        });
    }
    let mut violations = Vec::new();
    let tol = problem.config.solver.tolerance;
    for r in &rows {
        if r.optimality > tol {
            violations.push(format!("q={}: optimality residual {:e} > {tol:e}", r.q, r.optimality));
        }
    }
    for w in rows.windows(2) {
        if w[1].energy > w[0].energy + ENERGY_SLACK * w[0].energy.max(1.0) {
            violations.push(format!(
                "energy increased from {} (q={}) to {} (q={})",
                w[0].energy, w[0].q, w[1].energy, w[1].q
            ));
        }
        if w[1].max_kirchhoff > KIRCHHOFF_FLOOR && w[1].max_kirchhoff > w[0].max_kirchhoff {
            violations.push(format!(
                "Kirchhoff residual grew from {:e} (q={}) to {:e} (q={})",
                w[0].max_kirchhoff, w[0].q, w[1].max_kirchhoff, w[1].q
            ));
        }
    }
    let smoothness_loss = levels.iter().filter_map(|l| detect_smoothness_loss(l)).collect();
    Ok(ConvergenceTable {
        order: n,
        rows,
        smoothness_loss,
        violations,
    })
}

/// `convergence`: prints the refinement table and fails on violated trends.
pub fn cmd_convergence(config: &Path, qs: &[usize], out: Option<&PathBuf>) -> Result<ConvergenceTable, CliError> {
    let problem = load_problem(config)?;
    let table = run_convergence(&problem, qs)?;
    let mut text = table.to_csv();
    for s in &table.smoothness_loss {
        let _ = writeln!(
            text,
            "# smoothness loss detected: order {} on edge {} at t = {}, jump {:.6e} -> {:.6e}",
            s.order,
            problem.tree.original_id(s.edge),
            s.t,
            s.coarse,
            s.fine
        );
    }
    print!("{text}");
    if let Some(dir) = out {
        create_dir(dir)?;
        io::write_text(&dir.join("convergence.csv"), &table.to_csv())?;
    }
    if !table.violations.is_empty() {
        return Err(CliError::Assertion(table.violations.join("; ")));
    }
    Ok(table)
}
