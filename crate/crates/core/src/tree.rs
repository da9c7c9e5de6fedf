//! Rooted metric trees.
//!
//! Edges are numbered `1..=m` in canonical order: the root edge is 1, edges
//! ending in an internal vertex come first (`1..=d`), boundary edges last
//! (`d+1..=m`). Vertex `j` is the end point of edge `j`, vertex 0 is the root.

use std::collections::BTreeMap;

use crate::error::TreeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Root,
    Internal,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexClass {
    pub kind: VertexKind,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    /// `parent[j-1] = k_j`
    parent: Vec<usize>,
    lengths: Vec<f64>,
    /// `children[v]` for vertices `0..=m` (empty for boundary vertices)
    children: Vec<Vec<usize>>,
    internal: usize,
    /// user id of canonical edge `j` is `original_ids[j-1]`
    original_ids: Vec<u64>,
}

impl Tree {
    /// Validates a parent map (`edge -> parent edge`, 0 for the root edge) with
    /// edge lengths, renumbering the edges into canonical order.
    pub fn build(
        parent: &BTreeMap<u64, u64>,
        lengths: &BTreeMap<u64, f64>,
    ) -> Result<Self, TreeError> {
        if parent.is_empty() {
            return Err(TreeError::Empty);
        }
        for id in parent.keys().chain(lengths.keys()) {
            if *id == 0 {
                return Err(TreeError::ReservedId);
            }
            if !parent.contains_key(id) || !lengths.contains_key(id) {
                return Err(TreeError::KeyMismatch(*id));
            }
        }
        for (&id, &len) in lengths {
            if !(len.is_finite() && len > 0.0) {
                return Err(TreeError::BadLength {
                    edge: id,
                    length: len,
                });
            }
        }
        let mut roots = parent.iter().filter(|(_, &p)| p == 0).map(|(&e, _)| e);
        let root = roots.next().ok_or(TreeError::NoRoot)?;
        if let Some(other) = roots.next() {
            return Err(TreeError::MultipleRoots(root, other));
        }
        for (&e, &p) in parent {
            if p != 0 && !parent.contains_key(&p) {
                return Err(TreeError::Disconnected { edge: e, parent: p });
            }
        }
        // Every chain of parents must reach the root within m steps.
        let m = parent.len();
        for &e in parent.keys() {
            let mut cur = e;
            let mut steps = 0;
            while cur != root {
                cur = parent[&cur];
                steps += 1;
                if steps > m {
                    return Err(TreeError::Cycle(e));
                }
            }
        }

        let has_children: Vec<u64> = {
            let mut v: Vec<u64> = parent.values().copied().filter(|&p| p != 0).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut order: Vec<u64> = vec![root];
        order.extend(has_children.iter().copied().filter(|&e| e != root));
        let internal = if has_children.is_empty() { 0 } else { order.len() };
        order.extend(
            parent
                .keys()
                .copied()
                .filter(|e| *e != root && has_children.binary_search(e).is_err()),
        );
        let canon: BTreeMap<u64, usize> =
            order.iter().enumerate().map(|(i, &e)| (e, i + 1)).collect();

        let parent_c: Vec<usize> = order
            .iter()
            .map(|e| match parent[e] {
                0 => 0,
                p => canon[&p],
            })
            .collect();
        let lengths_c: Vec<f64> = order.iter().map(|e| lengths[e]).collect();
        let mut children = vec![Vec::new(); m + 1];
        for (j, &p) in parent_c.iter().enumerate() {
            children[p].push(j + 1);
        }
        Ok(Self {
            parent: parent_c,
            lengths: lengths_c,
            children,
            internal,
            original_ids: order,
        })
    }

    /// Convenience constructor from `(id, parent, length)` triples.
    pub fn from_edges(edges: &[(u64, u64, f64)]) -> Result<Self, TreeError> {
        let mut parent = BTreeMap::new();
        let mut lengths = BTreeMap::new();
        for &(id, p, len) in edges {
            parent.insert(id, p);
            lengths.insert(id, len);
        }
        Self::build(&parent, &lengths)
    }

    /// Single edge `[0, length]`.
    pub fn interval(length: f64) -> Result<Self, TreeError> {
        Self::from_edges(&[(1, 0, length)])
    }

    /// Star: root edge of length `lengths[0]` followed by `lengths.len() - 1` leaves.
    pub fn star(lengths: &[f64]) -> Result<Self, TreeError> {
        let edges: Vec<(u64, u64, f64)> = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| (i as u64 + 1, if i == 0 { 0 } else { 1 }, l))
            .collect();
        Self::from_edges(&edges)
    }

    pub fn num_edges(&self) -> usize {
        self.parent.len()
    }

    pub fn num_internal(&self) -> usize {
        self.internal
    }

    pub fn is_internal(&self, j: usize) -> bool {
        (1..=self.internal).contains(&j)
    }

    pub fn is_boundary(&self, j: usize) -> bool {
        j > self.internal && j <= self.num_edges()
    }

    /// `k_j`; 0 for the root edge.
    pub fn parent(&self, j: usize) -> usize {
        self.parent[j - 1]
    }

    pub fn length(&self, j: usize) -> f64 {
        self.lengths[j - 1]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `V_v`: edges starting at vertex `v`.
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn original_id(&self, j: usize) -> u64 {
        self.original_ids[j - 1]
    }

    pub fn canonical_index(&self, id: u64) -> Option<usize> {
        self.original_ids.iter().position(|&e| e == id).map(|i| i + 1)
    }

    pub fn vertex_class(&self, v: usize) -> VertexClass {
        let kind = if v == 0 {
            VertexKind::Root
        } else if v <= self.internal {
            VertexKind::Internal
        } else {
            VertexKind::Boundary
        };
        VertexClass { kind, index: v }
    }

    fn check_edge(&self, j: usize) -> Result<(), TreeError> {
        if j == 0 || j > self.num_edges() {
            Err(TreeError::EdgeOutOfRange(j, self.num_edges()))
        } else {
            Ok(())
        }
    }

    /// The chain `j, k_j, k_{k_j}, ..., 1`.
    pub fn path_to_root(&self, j: usize) -> Result<Vec<usize>, TreeError> {
        self.check_edge(j)?;
        let mut path = vec![j];
        let mut cur = j;
        while cur != 1 {
            cur = self.parent(cur);
            path.push(cur);
        }
        Ok(path)
    }

    /// Time at which edge `j` starts, measured from the root.
    pub fn start_time(&self, j: usize) -> f64 {
        let mut t = 0.0;
        let mut cur = self.parent(j);
        while cur != 0 {
            t += self.length(cur);
            cur = self.parent(cur);
        }
        t
    }

    /// Largest root-to-leaf length.
    pub fn height(&self) -> f64 {
        (self.internal + 1..=self.num_edges())
            .map(|j| self.start_time(j) + self.length(j))
            .fold(0.0, f64::max)
    }

    /// Edges ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_edges());
        let mut queue = std::collections::VecDeque::from(vec![1usize]);
        while let Some(j) = queue.pop_front() {
            out.push(j);
            queue.extend(self.children(j).iter().copied());
        }
        out
    }

    /// `l_j`: `T_j` on internal edges, `T_j - tau` on boundary edges.
    pub fn active_length(&self, j: usize, tau: f64) -> f64 {
        if self.is_internal(j) {
            self.length(j)
        } else {
            self.length(j) - tau
        }
    }

    pub fn check_delay(&self, tau: f64) -> Result<(), TreeError> {
        for j in 1..=self.num_edges() {
            if !(tau > 0.0 && tau < self.length(j)) {
                return Err(TreeError::DelayTooLong {
                    tau,
                    edge: j,
                    length: self.length(j),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig2(lengths: f64) -> Tree {
        let parents = [(1, 0), (2, 1), (3, 1), (4, 2), (5, 2), (6, 3), (7, 3), (8, 3), (9, 3)];
        let edges: Vec<_> = parents.iter().map(|&(e, p)| (e, p, lengths)).collect();
        Tree::from_edges(&edges).unwrap()
    }

    #[test]
    fn figure_two_tree() {
        let t = fig2(1.0);
        assert_eq!(t.num_edges(), 9);
        assert_eq!(t.num_internal(), 3);
        assert_eq!(t.children(3), &[6, 7, 8, 9]);
        assert_eq!(t.children(0), &[1]);
        assert_eq!(t.path_to_root(7).unwrap(), vec![7, 3, 1]);
        assert_eq!(t.path_to_root(5).unwrap(), vec![5, 2, 1]);
        assert_eq!(t.path_to_root(1).unwrap(), vec![1]);
        assert_eq!(t.height(), 3.0);
        assert!(t.path_to_root(10).is_err());
        assert!(t.path_to_root(0).is_err());
    }

    #[test]
    fn single_edge_is_boundary() {
        let t = Tree::interval(5.0).unwrap();
        assert_eq!((t.num_edges(), t.num_internal()), (1, 0));
        assert!(t.is_boundary(1));
        assert_eq!(t.height(), 5.0);
        assert_eq!(t.vertex_class(1).kind, VertexKind::Boundary);
    }

    #[test]
    fn star_height() {
        let t = Tree::star(&[2.0, 3.0, 1.0]).unwrap();
        assert_eq!(t.height(), 5.0);
        assert_eq!(t.vertex_class(1).kind, VertexKind::Internal);
        assert_eq!(t.active_length(1, 0.5), 2.0);
        assert_eq!(t.active_length(2, 0.5), 2.5);
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(
            Tree::from_edges(&[(1, 2, 1.0), (2, 1, 1.0)]),
            Err(TreeError::NoRoot)
        );
        assert_eq!(
            Tree::from_edges(&[(1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]),
            Err(TreeError::Cycle(2))
        );
        assert!(matches!(
            Tree::from_edges(&[(1, 0, 1.0), (2, 0, 1.0)]),
            Err(TreeError::MultipleRoots(1, 2))
        ));
        assert!(matches!(
            Tree::from_edges(&[(1, 0, 1.0), (2, 7, 1.0)]),
            Err(TreeError::Disconnected { edge: 2, parent: 7 })
        ));
        assert!(matches!(
            Tree::from_edges(&[(1, 0, 0.0)]),
            Err(TreeError::BadLength { .. })
        ));
        assert_eq!(Tree::from_edges(&[]), Err(TreeError::Empty));
        let mut p = BTreeMap::new();
        p.insert(1, 0);
        let l = BTreeMap::new();
        assert_eq!(Tree::build(&p, &l), Err(TreeError::KeyMismatch(1)));
    }

    #[test]
    fn renumbers_into_canonical_order() {
        // user ids: root 10, leaves 3 and 5, internal 7 below the root
        let t = Tree::from_edges(&[(10, 0, 1.0), (3, 7, 2.0), (7, 10, 1.5), (5, 10, 4.0)]).unwrap();
        assert_eq!(t.num_internal(), 2);
        assert_eq!(t.original_id(1), 10);
        assert_eq!(t.original_id(2), 7);
        assert!(t.is_boundary(3) && t.is_boundary(4));
        assert_eq!(t.canonical_index(3), Some(3));
        assert_eq!(t.parent(3), 2);
        assert_eq!(t.parent(4), 1);
        assert_eq!(t.height(), 5.0);
    }

    #[test]
    fn delay_must_fit_every_edge() {
        let t = Tree::star(&[2.0, 1.0, 3.0]).unwrap();
        assert!(t.check_delay(0.5).is_ok());
        assert!(matches!(
            t.check_delay(1.0),
            Err(TreeError::DelayTooLong { edge: 2, .. })
        ));
        assert!(t.check_delay(0.0).is_err());
    }

    #[test]
    fn child_sets_partition_edges() {
        let t = fig2(0.7);
        let total: usize = (0..=t.num_internal()).map(|v| t.children(v).len()).sum();
        assert_eq!(total, t.num_edges());
        for v in t.num_internal() + 1..=t.num_edges() {
            assert!(t.children(v).is_empty());
        }
        let order = t.topological_order();
        for (pos, &j) in order.iter().enumerate() {
            let p = t.parent(j);
            if p != 0 {
                assert!(order[..pos].contains(&p));
            }
        }
    }
}
