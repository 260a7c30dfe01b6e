use std::fmt;

use super::CoverTree;
use crate::scalar::{self, Real};

/// Outcome of one structural check; `counterexample` names the first
/// violation found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyCheck {
    pub passed: bool,
    pub counterexample: Option<String>,
}

impl PropertyCheck {
    fn pass() -> Self {
        Self {
            passed: true,
            counterexample: None,
        }
    }

    fn fail(msg: String) -> Self {
        Self {
            passed: false,
            counterexample: Some(msg),
        }
    }

    fn first_failure(&mut self, msg: impl FnOnce() -> String) {
        if self.passed {
            *self = Self::fail(msg());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Children appear strictly below their parent's scale, and every point
    /// id is represented exactly once.
    pub nesting: PropertyCheck,
    pub covering: PropertyCheck,
    pub separation: PropertyCheck,
    /// `maxdist` equals the true descendant maximum and respects
    /// `maxdist <= sigma * 2^(1 - scale)`.
    pub maxdist: PropertyCheck,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.passed)
    }

    pub fn checks(&self) -> [(&'static str, &PropertyCheck); 4] {
        [
            ("nesting", &self.nesting),
            ("covering", &self.covering),
            ("separation", &self.separation),
            ("maxdist", &self.maxdist),
        ]
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, check) in self.checks() {
            match &check.counterexample {
                None => writeln!(f, "{name}: pass")?,
                Some(why) => writeln!(f, "{name}: FAIL ({why})")?,
            }
        }
        Ok(())
    }
}

impl<T: Real> CoverTree<T> {
    /// Checks nesting, covering, separation and `maxdist` by direct
    /// enumeration. Separation compares every pair of nodes at the coarsest
    /// scale where both are present; `maxdist` is recomputed from the full
    /// descendant list of every node.
    pub fn validate(&self) -> ValidationReport {
        let pts = &self.points;
        let point = |node: usize| pts.point(self.nodes[node].point_id);
        let two = T::lit(2.0);

        let mut nesting = PropertyCheck::pass();
        let mut seen = vec![0u32; pts.len()];
        for node in &self.nodes {
            if node.point_id < seen.len() {
                seen[node.point_id] += 1;
            }
            for &dup in &node.duplicate_ids {
                if dup < seen.len() {
                    seen[dup] += 1;
                }
            }
        }
        if let Some(id) = seen.iter().position(|&c| c != 1) {
            nesting.first_failure(|| format!("point {id} represented {} times", seen[id]));
        }
        if self.nodes[0].scale != 0 {
            nesting.first_failure(|| "root is not at scale 0".into());
        }

        let mut covering = PropertyCheck::pass();
        for (p, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                let child = &self.nodes[c];
                if child.scale <= node.scale {
                    nesting.first_failure(|| {
                        format!(
                            "child {} at scale {} not below parent {} at scale {}",
                            child.point_id, child.scale, node.point_id, node.scale
                        )
                    });
                }
                let d = scalar::dist(point(p), point(c));
                let radius = self.sigma * two.powi(-(child.scale - 1));
                if d > radius {
                    covering.first_failure(|| {
                        format!(
                            "edge {} -> {} (scale {}): distance {} > {}",
                            node.point_id, child.point_id, child.scale, d, radius
                        )
                    });
                }
            }
        }

        let mut separation = PropertyCheck::pass();
        for a in 0..self.nodes.len() {
            for b in a + 1..self.nodes.len() {
                let scale = self.nodes[a].scale.max(self.nodes[b].scale);
                let d = scalar::dist(point(a), point(b));
                let radius = self.sigma * two.powi(-scale);
                if !(d > radius) {
                    separation.first_failure(|| {
                        format!(
                            "nodes {} and {} at scale {}: distance {} <= {}",
                            self.nodes[a].point_id, self.nodes[b].point_id, scale, d, radius
                        )
                    });
                }
            }
        }

        let mut maxdist = PropertyCheck::pass();
        let mut stack = Vec::new();
        for (q, node) in self.nodes.iter().enumerate() {
            let mut truth = T::zero();
            stack.clear();
            stack.extend_from_slice(&node.children);
            while let Some(s) = stack.pop() {
                truth = truth.max(scalar::dist(point(q), point(s)));
                stack.extend_from_slice(&self.nodes[s].children);
            }
            let bound = self.sigma * two.powi(1 - node.scale);
            if node.maxdist != truth {
                maxdist.first_failure(|| {
                    format!(
                        "node {}: stored maxdist {} != true {}",
                        node.point_id, node.maxdist, truth
                    )
                });
            } else if node.maxdist > bound {
                maxdist.first_failure(|| {
                    format!(
                        "node {} at scale {}: maxdist {} exceeds bound {}",
                        node.point_id, node.scale, node.maxdist, bound
                    )
                });
            }
        }

        ValidationReport {
            nesting,
            covering,
            separation,
            maxdist,
        }
    }
}
