use super::{CoverTree, Node, PointSet};
use crate::error::Result;
use crate::scalar::{self, Real};

/// Where an inserted point ended up.
enum Placement {
    Duplicate { node: usize },
    Child { parent: usize, scale: i32 },
}

impl<T: Real> CoverTree<T> {
    /// Builds the tree by inserting points in id order; point 0 is the root.
    ///
    /// Each point descends while some candidate at the next scale is within
    /// the current covering radius, then attaches below the finest candidate
    /// set that still covers it. Exact duplicates are folded into the node
    /// they coincide with.
    pub fn build(points: PointSet<T>) -> Result<Self> {
        // PointSet construction already rejects empty and non-finite input.
        let n = points.len();
        let mut count = 0u64;
        let mut sigma = T::zero();
        for id in 1..n {
            let d = scalar::dist(points.point(0), points.point(id));
            count += 1;
            if d > sigma {
                sigma = d;
            }
        }

        let mut tree = CoverTree {
            points,
            nodes: vec![Node::new(0, 0)],
            sigma,
            max_scale: 0,
            build_distances: 0,
        };

        for id in 1..n {
            let (placement, evaluated) = tree.locate(id);
            count += evaluated;
            match placement {
                Placement::Duplicate { node } => tree.nodes[node].duplicate_ids.push(id),
                Placement::Child { parent, scale } => {
                    let idx = tree.nodes.len();
                    tree.nodes.push(Node::new(id, scale));
                    // ids arrive in increasing order, so this keeps children
                    // sorted by (scale, point_id)
                    let nodes = &tree.nodes;
                    let at = nodes[parent].children.partition_point(|&c| nodes[c].scale <= scale);
                    tree.nodes[parent].children.insert(at, idx);
                    tree.max_scale = tree.max_scale.max(scale);
                }
            }
        }

        count += tree.compute_reach();
        tree.build_distances = count;
        Ok(tree)
    }

    fn locate(&self, id: usize) -> (Placement, u64) {
        let p = self.points.point(id);
        let mut count = 0u64;

        let d_root = scalar::dist(p, self.points.point(0));
        count += 1;
        if d_root == T::zero() {
            return (Placement::Duplicate { node: 0 }, count);
        }

        // levels[l] holds the candidate nodes at scale l with their distances.
        let mut levels: Vec<Vec<(usize, T)>> = vec![vec![(0, d_root)]];
        loop {
            let l = levels.len() as i32 - 1;
            let current = levels.last().expect("nonempty");
            let mut expanded = current.clone();
            for &(q, _) in current {
                for &c in self.children_at(q, l + 1) {
                    let d = scalar::dist(p, self.points.point(self.nodes[c].point_id));
                    count += 1;
                    if d == T::zero() {
                        return (Placement::Duplicate { node: c }, count);
                    }
                    expanded.push((c, d));
                }
            }
            let radius = self.radius(l);
            let closest = expanded.iter().map(|&(_, d)| d).fold(T::infinity(), T::min);
            if closest > radius {
                break;
            }
            expanded.retain(|&(_, d)| d <= radius);
            levels.push(expanded);
        }

        // levels[k] for k < levels.len() - 1 had a covering child set; the
        // last level is where the descent stopped. Attach below the finest
        // candidate set whose nearest member covers the point.
        let stop = levels.len() - 1;
        for k in (0..stop).rev() {
            let radius = self.radius(k as i32);
            let parent = levels[k].iter().filter(|&&(_, d)| d <= radius).min_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .expect("finite distances")
                    .then(self.nodes[a.0].point_id.cmp(&self.nodes[b.0].point_id))
            });
            if let Some(&(parent, _)) = parent {
                return (
                    Placement::Child {
                        parent,
                        scale: k as i32 + 1,
                    },
                    count,
                );
            }
        }
        unreachable!("root covers every point within sigma")
    }
}
