//! CSV output of trajectories and controls.
//!
//! Every polynomial piece is sampled at `degree + 1` equispaced points that
//! include both ends, so element boundaries appear twice in a row. Reading a
//! file back splits at those repeated times and interpolates each piece, which
//! recovers the piecewise polynomial up to rounding.

use std::collections::BTreeMap;
use std::path::Path;

use dense::solve_dense;
use treedamp_core::{PiecewisePoly, Tree, TreeFunction, C64};

use crate::error::CliError;

/// 17 significant digits.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn sample_points(piece_len: usize) -> usize {
    piece_len.max(2)
}

/// Writes `edge,t,re_d0,im_d0,...` with derivatives `0..derivs` of each edge.
pub fn write_trajectory(path: &Path, tree: &Tree, y: &TreeFunction) -> Result<(), CliError> {
    let edges: Vec<PiecewisePoly> = y.edges().to_vec();
    write_sampled(path, tree, &edges, Some(y.order()))
}

/// Writes `edge,t,re,im`.
pub fn write_control(path: &Path, tree: &Tree, u: &[PiecewisePoly]) -> Result<(), CliError> {
    write_sampled(path, tree, u, None)
}

/// `derivs = None` writes plain `re,im` value columns.
fn write_sampled(path: &Path, tree: &Tree, edges: &[PiecewisePoly], derivs: Option<usize>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::parse(path, e);
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["edge".to_string(), "t".to_string()];
    match derivs {
        None => header.extend(["re".to_string(), "im".to_string()]),
        Some(d) => {
            for k in 0..d {
                header.push(format!("re_d{k}"));
                header.push(format!("im_d{k}"));
            }
        }
    }
    let derivs = derivs.unwrap_or(1);
    w.write_record(&header).map_err(io)?;
    for (idx, f) in edges.iter().enumerate() {
        let id = tree.original_id(idx + 1).to_string();
        let breaks = f.breaks();
        for (i, piece) in f.pieces().iter().enumerate() {
            let (a, b) = (breaks[i], breaks[i + 1]);
            let count = sample_points(piece.len());
            for s in 0..count {
                let t = if s + 1 == count {
                    b
                } else {
                    a + (b - a) * s as f64 / (count - 1) as f64
                };
                let mut row = vec![id.clone(), fmt(t)];
                for k in 0..derivs {
                    let v = if s + 1 == count { f.eval_left(t, k) } else { f.eval_right(t, k) };
                    row.push(fmt(v.re));
                    row.push(fmt(v.im));
                }
                w.write_record(&row).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads per-edge functions (value columns only) keyed by original edge id.
pub fn read_sampled(path: &Path) -> Result<BTreeMap<u64, PiecewisePoly>, CliError> {
    let bad = |msg: String| CliError::parse(path, msg);
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::parse(path, e))?;
    let mut samples: BTreeMap<u64, Vec<(f64, C64)>> = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(path, e))?;
        let field = |i: usize| -> Result<&str, CliError> {
            rec.get(i)
                .ok_or_else(|| bad(format!("row {}: missing column {i}", line + 2)))
        };
        let num = |i: usize| -> Result<f64, CliError> {
            field(i)?
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}, column {}: {e}", line + 2, i + 1)))
        };
        let id: u64 = field(0)?
            .trim()
            .parse()
            .map_err(|e| bad(format!("row {}, column 1: {e}", line + 2)))?;
        samples.entry(id).or_default().push((num(1)?, C64::new(num(2)?, num(3)?)));
    }
    samples
        .into_iter()
        .map(|(id, pts)| Ok((id, rebuild(&pts).map_err(|m| bad(format!("edge {id}: {m}")))?)))
        .collect()
}

fn rebuild(pts: &[(f64, C64)]) -> Result<PiecewisePoly, String> {
    let mut groups: Vec<&[(f64, C64)]> = Vec::new();
    let mut start = 0;
    for i in 1..pts.len() {
        if pts[i].0 == pts[i - 1].0 {
            groups.push(&pts[start..i]);
            start = i;
        }
    }
    groups.push(&pts[start..]);
    let mut breaks = Vec::with_capacity(groups.len() + 1);
    let mut pieces = Vec::with_capacity(groups.len());
    for g in groups {
        if g.len() < 2 {
            return Err(format!("piece near t = {} has fewer than two samples", g[0].0));
        }
        let a = g[0].0;
        let h = g[g.len() - 1].0 - a;
        breaks.push(a);
        pieces.push(interpolate(g, a, h)?);
    }
    breaks.push(pts[pts.len() - 1].0);
    PiecewisePoly::from_pieces(breaks, pieces).map_err(|e| e.to_string())
}

/// Monomial coefficients in `s = t - a` through the samples.
fn interpolate(g: &[(f64, C64)], a: f64, h: f64) -> Result<Vec<C64>, String> {
    let n = g.len();
    // solve in the scaled variable s/h, then rescale
    let mut mat = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut rhs = Vec::with_capacity(n);
    for (row, (t, v)) in g.iter().enumerate() {
        let x = (t - a) / h;
        let mut p = 1.0;
        for col in 0..n {
            mat[row][col] = C64::new(p, 0.0);
            p *= x;
        }
        rhs.push(*v);
    }
    let scaled = solve_dense(mat, rhs).ok_or("repeated sample times inside a piece")?;
    Ok(scaled
        .into_iter()
        .enumerate()
        .map(|(i, c)| c / h.powi(i as i32))
        .collect())
}

mod dense {
    use treedamp_core::C64;

    /// Gaussian elimination with partial pivoting for the small interpolation systems.
    pub fn solve_dense(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Option<Vec<C64>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())?;
            if a[piv][col].norm() == 0.0 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    let v = a[col][k];
                    a[row][k] -= f * v;
                }
                let v = b[col];
                b[row] -= f * v;
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for row in (0..n).rev() {
            let mut s = b[row];
            for k in row + 1..n {
                s -= a[row][k] * x[k];
            }
            x[row] = s / a[row][row];
        }
        Some(x)
    }
}

/// Orders a keyed map of edge functions by canonical edge index.
pub fn by_canonical(tree: &Tree, mut map: BTreeMap<u64, PiecewisePoly>, path: &Path) -> Result<Vec<PiecewisePoly>, CliError> {
    (1..=tree.num_edges())
        .map(|j| {
            let id = tree.original_id(j);
            map.remove(&id)
                .ok_or_else(|| CliError::parse(path, format!("no rows for edge {id}")))
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
