//! Delay-aligned element meshes.
//!
//! Mandatory nodes are every point whose root distance differs by a multiple
//! of `tau` from a seed: edge ends, the points `T_j - tau`, and any caller
//! supplied breakpoint (history or coefficient kinks). The set is closed under
//! `t -> t +- tau` along the tree, so delayed and advanced copies of a mesh
//! function stay piecewise polynomial on the same mesh.

use std::sync::Arc;

use crate::error::MeshError;
use crate::poly::break_eps;
use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayMesh {
    tree: Arc<Tree>,
    tau: f64,
    q: usize,
    nodes: Vec<Vec<f64>>,
    wavefronts: Vec<Vec<f64>>,
}

/// Where an extra seed point lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    /// Local time on an edge.
    Edge(usize, f64),
    /// Point of the history segment, `t` in `(-tau, 0)`.
    History(f64),
}

impl DelayMesh {
    pub fn build(tree: Arc<Tree>, tau: f64, q: usize) -> Result<Self, MeshError> {
        Self::build_with_seeds(tree, tau, q, &[])
    }

    pub fn build_with_seeds(
        tree: Arc<Tree>,
        tau: f64,
        q: usize,
        extra: &[Seed],
    ) -> Result<Self, MeshError> {
        if q == 0 {
            return Err(MeshError::ZeroRefinement);
        }
        tree.check_delay(tau)?;
        let m = tree.num_edges();
        let starts: Vec<f64> = (1..=m).map(|j| tree.start_time(j)).collect();
        let mut seeds = Vec::with_capacity(3 * m + extra.len());
        for j in 1..=m {
            let d = starts[j - 1];
            let len = tree.length(j);
            seeds.extend([d, d + len - tau, d + len]);
        }
        for s in extra {
            match *s {
                Seed::Edge(j, t) if (1..=m).contains(&j) => seeds.push(starts[j - 1] + t),
                Seed::History(t) => seeds.push(t),
                Seed::Edge(..) => {}
            }
        }

        let eps = break_eps(0.0, tree.height());
        let max_width = tau / q as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut wavefronts = Vec::with_capacity(m);
        for j in 1..=m {
            let d = starts[j - 1];
            let len = tree.length(j);
            let mut pts = vec![0.0, len];
            for &g in &seeds {
                let lo = ((d - g) / tau - 1e-9).ceil() as i64;
                let hi = ((d + len - g) / tau + 1e-9).floor() as i64;
                for k in lo..=hi {
                    let t = g + k as f64 * tau - d;
                    if t > -eps && t < len + eps {
                        pts.push(t.clamp(0.0, len));
                    }
                }
            }
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut fronts: Vec<f64> = Vec::with_capacity(pts.len());
            for t in pts {
                match fronts.last() {
                    Some(&last) if t - last <= eps => {}
                    _ => fronts.push(t),
                }
            }
            // pin the exact end point
            *fronts.last_mut().unwrap() = len;
            if fronts.len() >= 2 && fronts[fronts.len() - 1] - fronts[fronts.len() - 2] <= eps {
                fronts.remove(fronts.len() - 2);
            }

            let mut edge_nodes = vec![fronts[0]];
            for w in fronts.windows(2) {
                let width = w[1] - w[0];
                let pieces = ((width / max_width) - 1e-9).ceil().max(1.0) as usize;
                for i in 1..pieces {
                    edge_nodes.push(w[0] + width * i as f64 / pieces as f64);
                }
                edge_nodes.push(w[1]);
            }
            nodes.push(edge_nodes);
            wavefronts.push(fronts);
        }
        Ok(Self {
            tree,
            tau,
            q,
            nodes,
            wavefronts,
        })
    }

    pub fn tree(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn refinement(&self) -> usize {
        self.q
    }

    pub fn nodes(&self, j: usize) -> &[f64] {
        &self.nodes[j - 1]
    }

    pub fn wavefronts(&self, j: usize) -> &[f64] {
        &self.wavefronts[j - 1]
    }

    pub fn num_elements(&self, j: usize) -> usize {
        self.nodes[j - 1].len() - 1
    }

    pub fn max_width(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|n| n.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    /// Index of the node at `t` on edge `j`, if any.
    pub fn node_index(&self, j: usize, t: f64) -> Option<usize> {
        let eps = break_eps(0.0, self.tree.length(j));
        self.nodes(j).iter().position(|&x| (x - t).abs() <= eps)
    }
}
