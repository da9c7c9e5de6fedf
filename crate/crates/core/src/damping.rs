//! Galerkin minimization of the control energy.
//!
//! The optimal trajectory is `y = Phi + x` with `Phi` the history lift and `x`
//! in the constrained space, determined by `B(Phi + x, w) = 0` for every basis
//! function `w`. The Gram matrix of `B` is Hermitian positive definite whenever
//! the leading coefficients stay away from zero, so a dense Cholesky solve is
//! used and any failing pivot is reported as an error.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{lift_phi, Basis};
use crate::cauchy::Control;
use crate::diagnostics::DiagnosticsSummary;
use crate::error::{DampingError, MeshError};
use crate::expressions::{apply_ell, apply_ell_all, energy, CoefficientSet, TreeFunction};
use crate::hermite::gauss_legendre;
use crate::linalg::{hermitian_defect, Cholesky};
use crate::mesh::{DelayMesh, Seed};
use crate::poly::{break_eps, eval_local, local_inner, PiecewisePoly, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Elements per delay interval.
    pub q: usize,
    /// Element degree; `None` means `2n + 1` (Hermite nodes plus two bubbles).
    pub degree: Option<usize>,
    /// Relative first-variation tolerance used by the optimality check.
    pub tolerance: f64,
    /// Gauss points per piece for the quadrature cross-check; `None` picks an
    /// order that is exact for the assembled integrands.
    pub quadrature_order: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            q: 8,
            degree: None,
            tolerance: 1e-8,
            quadrature_order: None,
        }
    }
}

impl SolverOptions {
    pub fn with_q(q: usize) -> Self {
        Self {
            q,
            ..Self::default()
        }
    }
}

/// `ell w_p` for every basis function, stored per edge as a run of pieces on a
/// fixed grid.
#[derive(Debug, Clone)]
pub struct BasisImages {
    grids: Vec<Vec<f64>>,
    images: Vec<Vec<Option<(usize, Vec<Vec<C64>>)>>>,
    max_degree: usize,
}

fn union_grid<'a>(sets: impl Iterator<Item = &'a [f64]>, len: f64) -> Vec<f64> {
    let eps = break_eps(0.0, len);
    let mut all: Vec<f64> = sets.flatten().copied().collect();
    all.push(0.0);
    all.push(len);
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for t in all {
        if t < -eps || t > len + eps {
            continue;
        }
        match out.last() {
            Some(&last) if t - last <= eps => {}
            _ => out.push(t),
        }
    }
    out[0] = 0.0;
    let last = out.len() - 1;
    out[last] = len;
    if out.len() > 2 && out[last] - out[last - 1] <= eps {
        out.remove(last - 1);
    }
    out
}

fn sparse_on(f: &PiecewisePoly, grid: &[f64]) -> Option<(usize, Vec<Vec<C64>>)> {
    let r = f.refine(grid);
    let nz = |p: &Vec<C64>| p.iter().any(|c| *c != ZERO);
    let first = r.pieces().iter().position(nz)?;
    let last = r.pieces().iter().rposition(nz)?;
    Some((first, r.pieces()[first..=last].to_vec()))
}

fn sparse_inner(
    a: &(usize, Vec<Vec<C64>>),
    b: &(usize, Vec<Vec<C64>>),
    grid: &[f64],
) -> C64 {
    let lo = a.0.max(b.0);
    let hi = (a.0 + a.1.len()).min(b.0 + b.1.len());
    let mut acc = ZERO;
    for i in lo..hi {
        acc += local_inner(&a.1[i - a.0], &b.1[i - b.0], grid[i + 1] - grid[i]);
    }
    acc
}

impl BasisImages {
    pub fn compute(basis: &Basis, coeffs: &CoefficientSet) -> Result<Self, DampingError> {
        let tree = coeffs.tree();
        let m = tree.num_edges();
        let mut raw: Vec<Vec<Option<PiecewisePoly>>> = Vec::with_capacity(basis.dim());
        for p in 0..basis.dim() {
            let w = basis.function(p);
            let mut touched = basis.support_edges(p);
            for j in touched.clone() {
                touched.extend_from_slice(tree.children(j));
            }
            touched.sort_unstable();
            touched.dedup();
            let mut row = vec![None; m];
            for j in touched {
                row[j - 1] = Some(apply_ell(&w, coeffs, j)?);
            }
            raw.push(row);
        }
        let grids: Vec<Vec<f64>> = (1..=m)
            .map(|j| {
                let mesh_nodes = basis.mesh().nodes(j);
                let coeff_breaks: Vec<f64> = coeffs
                    .breakpoints()
                    .into_iter()
                    .filter(|(e, _)| *e == j)
                    .map(|(_, t)| t)
                    .collect();
                union_grid(
                    raw.iter()
                        .filter_map(|row| row[j - 1].as_ref().map(|f| f.breaks()))
                        .chain([mesh_nodes, coeff_breaks.as_slice()]),
                    tree.length(j),
                )
            })
            .collect();
        let mut max_degree = 0;
        let images = raw
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(idx, f)| {
                        f.as_ref().and_then(|f| {
                            max_degree = max_degree.max(f.degree());
                            sparse_on(f, &grids[idx])
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grids,
            images,
            max_degree,
        })
    }

    pub fn dim(&self) -> usize {
        self.images.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `B(w_r, w_p)`
    pub fn pair(&self, r: usize, p: usize) -> C64 {
        let mut acc = ZERO;
        for (j, grid) in self.grids.iter().enumerate() {
            if let (Some(a), Some(b)) = (&self.images[r][j], &self.images[p][j]) {
                acc += sparse_inner(a, b, grid);
            }
        }
        acc
    }

    /// `sum_j \int f_j \overline{ell_j w_p}` for per-edge functions `f`.
    pub fn against(&self, p: usize, f: &[PiecewisePoly]) -> C64 {
        let mut acc = ZERO;
        for (j, grid) in self.grids.iter().enumerate() {
            if let Some(b) = &self.images[p][j] {
                let merged = union_grid([grid.as_slice(), f[j].breaks()].into_iter(), *grid.last().unwrap());
                if merged.len() == grid.len() {
                    let a = (0, f[j].refine(grid).pieces().to_vec());
                    acc += sparse_inner(&a, b, grid);
                } else {
                    // f has breakpoints off the grid: fall back to the dense product
                    let dense = PiecewisePoly::from_parts_unchecked(
                        grid.clone(),
                        (0..grid.len() - 1)
                            .map(|i| {
                                if i >= b.0 && i < b.0 + b.1.len() {
                                    b.1[i - b.0].clone()
                                } else {
                                    vec![ZERO]
                                }
                            })
                            .collect(),
                    );
                    acc += f[j].inner(&dense);
                }
            }
        }
        acc
    }

    /// `B(w_p, w_p)` by Gauss quadrature with `points` nodes per piece.
    fn diagonal_by_quadrature(&self, p: usize, points: usize) -> f64 {
        let (xs, ws) = gauss_legendre(points);
        let mut acc = 0.0;
        for (j, grid) in self.grids.iter().enumerate() {
            if let Some((first, pieces)) = &self.images[p][j] {
                for (i, piece) in pieces.iter().enumerate() {
                    let h = grid[first + i + 1] - grid[first + i];
                    for (x, w) in xs.iter().zip(&ws) {
                        acc += w * h * eval_local(piece, x * h, 0).norm_sqr();
                    }
                }
            }
        }
        acc
    }
}

/// Gram matrix `G[p][r] = B(w_r, w_p)` and load `f[p] = -B(Phi, w_p)`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub matrix: DMatrix<C64>,
    pub load: Vec<C64>,
    pub images: Arc<BasisImages>,
}

impl GramSystem {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }
}

pub fn assemble(
    basis: &Basis,
    lift: &TreeFunction,
    coeffs: &CoefficientSet,
    quadrature_order: Option<usize>,
) -> Result<GramSystem, DampingError> {
    let images = BasisImages::compute(basis, coeffs)?;
    let dim = basis.dim();
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for p in 0..dim {
        for r in 0..=p {
            let v = images.pair(r, p);
            matrix[(p, r)] = v;
            matrix[(r, p)] = v.conj();
        }
    }
    let lift_images = apply_ell_all(lift, coeffs)?;
    let load = (0..dim).map(|p| -images.against(p, &lift_images)).collect();

    let exact_points = images.max_degree() + 1;
    let points = quadrature_order.unwrap_or(exact_points);
    if dim > 0 {
        let mut worst: f64 = 0.0;
        for p in [0, dim / 2, dim - 1] {
            let exact = matrix[(p, p)].re;
            let quad = images.diagonal_by_quadrature(p, points);
            worst = worst.max((exact - quad).abs() / exact.abs().max(f64::MIN_POSITIVE));
        }
        if worst > 1e-10 {
            return Err(DampingError::QuadratureMismatch(worst));
        }
    }
    Ok(GramSystem {
        matrix,
        load,
        images: Arc::new(images),
    })
}

#[derive(Debug, Clone)]
pub struct DampingSolution {
    pub mesh: Arc<DelayMesh>,
    pub basis: Arc<Basis>,
    pub lift: TreeFunction,
    pub coefficients: Vec<C64>,
    pub y: TreeFunction,
    pub u: Control,
    pub energy: f64,
    pub min_pivot: f64,
    pub images: Arc<BasisImages>,
    pub diagnostics: Option<DiagnosticsSummary>,
}

/// Mesh seeds from the history and coefficient breakpoints.
pub fn mesh_seeds(coeffs: &CoefficientSet, phi: &PiecewisePoly) -> Vec<Seed> {
    let mut seeds: Vec<Seed> = coeffs
        .breakpoints()
        .into_iter()
        .map(|(j, t)| Seed::Edge(j, t))
        .collect();
    let b = phi.breaks();
    seeds.extend(b[1..b.len() - 1].iter().map(|&t| Seed::History(t)));
    seeds
}

pub fn solve_damping(
    coeffs: &CoefficientSet,
    phi: &PiecewisePoly,
    options: &SolverOptions,
) -> Result<DampingSolution, DampingError> {
    let tree = coeffs.tree().clone();
    let n = coeffs.order();
    let tau = coeffs.tau();
    for j in tree.num_internal() + 1..=tree.num_edges() {
        if tree.length(j) < 2.0 * tau {
            log::warn!(
                "boundary edge {j} has length {} < 2 tau = {}",
                tree.length(j),
                2.0 * tau
            );
        }
    }
    let mesh = Arc::new(DelayMesh::build_with_seeds(
        tree.clone(),
        tau,
        options.q,
        &mesh_seeds(coeffs, phi),
    )?);
    let degree = options.degree.unwrap_or(2 * n + 1);
    let basis = Arc::new(Basis::with_degree(mesh.clone(), n, degree)?);
    let lift = lift_phi(&mesh, n, phi)?;
    solve_on_basis(coeffs, basis, lift, options.quadrature_order)
}

/// Solves on a prepared basis and lift.
pub fn solve_on_basis(
    coeffs: &CoefficientSet,
    basis: Arc<Basis>,
    lift: TreeFunction,
    quadrature_order: Option<usize>,
) -> Result<DampingSolution, DampingError> {
    if lift.order() != coeffs.order() {
        return Err(MeshError::DegreeTooLow {
            degree: lift.order(),
            min: coeffs.order(),
        }
        .into());
    }
    let gram = assemble(&basis, &lift, coeffs, quadrature_order)?;
    let defect = gram.hermitian_defect();
    if defect > 1e-10 * gram_scale(&gram.matrix).max(1.0) {
        return Err(DampingError::NotHermitian(defect));
    }
    let (coefficients, min_pivot) = if gram.dim() == 0 {
        (Vec::new(), f64::INFINITY)
    } else {
        let chol = Cholesky::factor(&gram.matrix).map_err(|e| DampingError::NotPositiveDefinite {
            index: e.index,
            pivot: e.pivot,
        })?;
        (chol.solve(&gram.load), chol.min_pivot())
    };
    let y = lift.add(&basis.combine(&coefficients));
    let u_edges = apply_ell_all(&y, coeffs)?;
    let energy = u_edges.iter().map(PiecewisePoly::norm_l2_sq).sum();
    let u = Control::new(coeffs.tree(), u_edges).expect("ell y lives on the tree edges");
    Ok(DampingSolution {
        mesh: basis.mesh().clone(),
        basis,
        lift,
        coefficients,
        y,
        u,
        energy,
        min_pivot,
        images: gram.images,
        diagnostics: None,
    })
}

fn gram_scale(g: &DMatrix<C64>) -> f64 {
    (0..g.nrows()).map(|i| g[(i, i)].re.abs()).fold(0.0, f64::max)
}

/// `B(y, w_p)` for every basis function.
pub fn first_variation(
    y: &TreeFunction,
    images: &BasisImages,
    coeffs: &CoefficientSet,
) -> Result<Vec<C64>, DampingError> {
    let ells = apply_ell_all(y, coeffs)?;
    Ok((0..images.dim()).map(|p| images.against(p, &ells)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityReport {
    /// `max_p |B(y, w_p)|`
    pub max_abs: f64,
    /// `max_p |B(y, w_p)| / sqrt(B(w_p, w_p))`
    pub max_normalized: f64,
    /// `max_normalized / sqrt(J(y))` (0 when `J(y) = 0`)
    pub relative: f64,
}

pub(crate) fn normalize(variation: &[C64], images: &BasisImages, energy: f64) -> OptimalityReport {
    let mut max_abs: f64 = 0.0;
    let mut max_normalized: f64 = 0.0;
    for (p, v) in variation.iter().enumerate() {
        max_abs = max_abs.max(v.norm());
        let d = images.pair(p, p).re.sqrt();
        if d > 0.0 {
            max_normalized = max_normalized.max(v.norm() / d);
        }
    }
    let relative = if energy > 0.0 {
        max_normalized / energy.sqrt()
    } else {
        max_normalized
    };
    OptimalityReport {
        max_abs,
        max_normalized,
        relative,
    }
}

/// First-variation residual of a candidate trajectory over the basis.
pub fn optimality_check(
    y: &TreeFunction,
    basis: &Basis,
    coeffs: &CoefficientSet,
) -> Result<OptimalityReport, DampingError> {
    let images = BasisImages::compute(basis, coeffs)?;
    let variation = first_variation(y, &images, coeffs)?;
    Ok(normalize(&variation, &images, energy(y, coeffs)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceWitness {
    pub trial: usize,
    pub perturbed: f64,
    pub base: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    pub trials: usize,
    /// `min_trials (J(y + w) - J(y))`
    pub min_gain: f64,
    pub witness: Option<DominanceWitness>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// `J(y + w) - J(y)`
pub fn dominance_margin(y: &TreeFunction, w: &TreeFunction, coeffs: &CoefficientSet) -> Result<f64, DampingError> {
    Ok(energy(&y.add(w), coeffs)? - energy(y, coeffs)?)
}

/// Samples random `w` in the discrete space and checks `J(y + w) >= J(y)`.
pub fn energy_dominance_check(
    y: &TreeFunction,
    basis: &Basis,
    coeffs: &CoefficientSet,
    trials: usize,
    seed: u64,
) -> Result<DominanceReport, DampingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = energy(y, coeffs)?;
    let slack = 1e-10 * base.max(1.0);
    let mut min_gain = f64::INFINITY;
    let mut witness = None;
    for trial in 0..trials {
        if basis.dim() == 0 {
            break;
        }
        let xi: Vec<C64> = (0..basis.dim())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let v = basis.combine(&xi);
        let jv = energy(&v, coeffs)?;
        if jv <= 0.0 {
            continue;
        }
        let magnitude = 10f64.powf(rng.gen_range(-4.0..0.0)) * (base.max(1.0) / jv).sqrt();
        let w = v.scale(C64::new(magnitude, 0.0));
        let perturbed = energy(&y.add(&w), coeffs)?;
        let gain = perturbed - base;
        min_gain = min_gain.min(gain);
        if gain < -slack && witness.is_none() {
            witness = Some(DominanceWitness {
                trial,
                perturbed,
                base,
            });
        }
    }
    Ok(DominanceReport {
        trials,
        min_gain,
        witness,
    })
}

impl DampingSolution {
    pub fn with_diagnostics(mut self, coeffs: &CoefficientSet) -> Result<Self, DampingError> {
        self.diagnostics = Some(crate::diagnostics::summarize(&self, coeffs)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expressions::bilinear_form;
    use crate::tree::Tree;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn slope_problem() -> (CoefficientSet, PiecewisePoly) {
        let tree = Arc::new(Tree::interval(3.0).unwrap());
        let coeffs = CoefficientSet::constant(tree, 1.0, &[re(0.0), re(1.0)], &[re(0.0), re(0.0)]).unwrap();
        (coeffs, PiecewisePoly::constant(-1.0, 0.0, re(1.0)))
    }

    #[test]
    fn one_dof_gram_entry() {
        // nodes {0,1,2,3}; the single hat peaks at t = 1, so int |w'|^2 = 1 + 1
        let (coeffs, phi) = slope_problem();
        let mesh = Arc::new(DelayMesh::build(coeffs.tree().clone(), 1.0, 1).unwrap());
        let basis = Basis::new(mesh.clone(), 1).unwrap();
        let lift = lift_phi(&mesh, 1, &phi).unwrap();
        let gram = assemble(&basis, &lift, &coeffs, None).unwrap();
        assert_eq!(gram.dim(), 1);
        assert!((gram.matrix[(0, 0)] - re(2.0)).norm() < 1e-14);
        // Phi = 1 - t/2 on [0, 2]: B(Phi, w) = int (-1/2) w' = -1/2 (1 - 1) = 0
        assert!(gram.load[0].norm() < 1e-14);
    }

    #[test]
    fn slope_problem_is_linear_interpolant() {
        let (coeffs, phi) = slope_problem();
        let sol = solve_damping(&coeffs, &phi, &SolverOptions::with_q(4)).unwrap();
        for t in [0.0, 0.5, 1.3, 2.0] {
            assert!((sol.y.edge(1).eval(t, 0) - re(1.0 - t / 2.0)).norm() < 1e-12);
        }
        assert!(sol.y.edge(1).sup_bound_on(2.0, 3.0) < 1e-12);
        assert!((sol.energy - 0.5).abs() < 1e-12);
        assert!((sol.energy - sol.u.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn zero_history_gives_zero_solution() {
        let tree = Arc::new(Tree::star(&[2.0, 1.5, 2.5]).unwrap());
        let coeffs = CoefficientSet::constant(
            tree,
            0.5,
            &[re(0.3), C64::new(1.0, 0.2)],
            &[re(0.2), re(0.4)],
        )
        .unwrap();
        let sol = solve_damping(&coeffs, &PiecewisePoly::zero(-0.5, 0.0), &SolverOptions::with_q(2)).unwrap();
        assert_eq!(sol.energy, 0.0);
        assert!(sol.y.edges().iter().all(|e| e.sup_bound() == 0.0));
        assert!(sol.gram_load_is_zero());
        let report = optimality_check(&sol.y, &sol.basis, &coeffs).unwrap();
        assert_eq!(report.max_abs, 0.0);
    }

    impl DampingSolution {
        fn gram_load_is_zero(&self) -> bool {
            self.coefficients.iter().all(|c| *c == ZERO)
        }
    }

    #[test]
    fn gram_matches_dense_bilinear_form() {
        let tree = Arc::new(Tree::star(&[1.6, 1.2, 1.4]).unwrap());
        let b1 = PiecewisePoly::polynomial(0.0, 1.6, &[re(1.0), re(0.3)]);
        let mk = |len: f64, v: C64| PiecewisePoly::constant(0.0, len, v);
        let lens = [1.6, 1.2, 1.4];
        let b = vec![
            lens.iter().map(|&l| mk(l, C64::new(0.2, -0.1))).collect(),
            vec![b1, mk(1.2, re(1.0)), mk(1.4, re(0.8))],
        ];
        let c = vec![
            lens.iter().map(|&l| mk(l, re(0.5))).collect(),
            lens.iter().map(|&l| mk(l, C64::new(0.3, 0.2))).collect(),
        ];
        let coeffs = CoefficientSet::new(tree, 1, 0.5, b, c).unwrap();
        let mesh = Arc::new(DelayMesh::build(coeffs.tree().clone(), 0.5, 2).unwrap());
        let basis = Basis::with_degree(mesh.clone(), 1, 2).unwrap();
        let phi = PiecewisePoly::polynomial(-0.5, 0.0, &[re(1.0), re(0.5)]);
        let lift = lift_phi(&mesh, 1, &phi).unwrap();
        let gram = assemble(&basis, &lift, &coeffs, None).unwrap();
        let funcs: Vec<_> = (0..basis.dim()).map(|p| basis.function(p)).collect();
        let scale = (0..basis.dim()).map(|p| gram.matrix[(p, p)].re).fold(0.0, f64::max);
        for p in 0..basis.dim() {
            for r in 0..basis.dim() {
                let dense = bilinear_form(&funcs[r], &funcs[p], &coeffs).unwrap();
                assert!((dense - gram.matrix[(p, r)]).norm() <= 1e-9 * scale, "p={p} r={r}");
            }
            let load = -bilinear_form(&lift, &funcs[p], &coeffs).unwrap();
            assert!((load - gram.load[p]).norm() <= 1e-9 * scale);
        }
        assert!(gram.hermitian_defect() <= 1e-12 * scale);
    }

    #[test]
    fn low_quadrature_order_is_detected() {
        let (coeffs, phi) = slope_problem();
        let mesh = Arc::new(DelayMesh::build(coeffs.tree().clone(), 1.0, 2).unwrap());
        let basis = Basis::with_degree(mesh.clone(), 1, 3).unwrap();
        let lift = lift_phi(&mesh, 1, &phi).unwrap();
        // |ell w|^2 has degree 4; one Gauss point cannot integrate it
        let err = assemble(&basis, &lift, &coeffs, Some(1)).unwrap_err();
        assert!(matches!(err, DampingError::QuadratureMismatch(_)));
        assert!(assemble(&basis, &lift, &coeffs, Some(3)).is_ok());
    }

    #[test]
    fn perturbed_solution_shows_first_variation() {
        let (coeffs, phi) = slope_problem();
        let sol = solve_damping(&coeffs, &phi, &SolverOptions::with_q(3)).unwrap();
        let w0 = sol.basis.function(0);
        let bumped = sol.y.add(&w0.scale(re(0.01)));
        let var = first_variation(&bumped, &sol.images, &coeffs).unwrap();
        let g00 = sol.images.pair(0, 0);
        assert!((var[0] - g00 * 0.01).norm() < 1e-12);
        let margin = dominance_margin(&sol.y, &TreeFunction::zero(coeffs.tree().clone(), 1, 1.0), &coeffs).unwrap();
        assert_eq!(margin, 0.0);
    }

    #[test]
    fn dominance_detects_corruption() {
        let (coeffs, phi) = slope_problem();
        let sol = solve_damping(&coeffs, &phi, &SolverOptions::with_q(3)).unwrap();
        let ok = energy_dominance_check(&sol.y, &sol.basis, &coeffs, 50, 7).unwrap();
        assert!(ok.passed(), "{ok:?}");
        let corrupted = sol.y.add(&sol.basis.function(1).scale(re(0.2)));
        let bad = energy_dominance_check(&corrupted, &sol.basis, &coeffs, 50, 7).unwrap();
        assert!(!bad.passed());
        let w = bad.witness.unwrap();
        assert!(w.perturbed < w.base);
    }
}
