use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::MetricError;
use crate::sphere::{Density, SphereGrid};

use super::length::log_polar_factor;

/// Primitive lattice vectors (a, b) with max(|a|, |b|) <= 3: 32 directions.
fn stencil() -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut v = Vec::with_capacity(32);
    for a in -3..=3i64 {
        for b in -3..=3i64 {
            if (a, b) != (0, 0) && gcd(a, b) == 1 {
                v.push((a, b));
            }
        }
    }
    v
}

/// Node of the metric graph: interior grid nodes plus one virtual node per pole.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphNode {
    Grid(usize),
    /// z = 0
    South,
    /// z = infinity
    North,
}

/// Shortest paths of rho omega_0 on the cylinder grid. The end rows are replaced by the
/// two pole nodes, joined to the adjacent rows by exponential tails. Edge lengths use the
/// logarithmic mean of the conformal factor, exact when it varies exponentially. Graph paths
/// are piecewise straight, so distances are biased long.
pub struct MetricGraph {
    graph: UnGraph<(), f64>,
    len: usize,
    used: Vec<bool>,
}

fn log_mean(a: f64, b: f64) -> f64 {
    let r = b / a;
    if (r - 1.0).abs() < 1e-9 {
        0.5 * (a + b)
    } else {
        (b - a) / r.ln()
    }
}

impl MetricGraph {
    pub fn new(grid: &SphereGrid, rho: &Density) -> Result<Self, MetricError> {
        let (n, m) = (grid.n_phi(), grid.n_u());
        let len = grid.len();
        let h = grid.h();
        let mut sigma = vec![0.0; len];
        let mut used = vec![false; len + 2];
        for (i, &r) in rho.0.values.iter().enumerate() {
            let j = grid.row_of(i);
            if j == 0 || j + 1 == m {
                continue;
            }
            if !(r > 0.0 && r.is_finite()) {
                return Err(MetricError::NonPositive(i));
            }
            sigma[i] = log_polar_factor(r, grid.u(j));
            used[i] = true;
        }
        used[len] = true;
        used[len + 1] = true;

        let half: Vec<(i64, i64)> = stencil()
            .into_iter()
            .filter(|&(a, b)| b > 0 || (b == 0 && a > 0))
            .collect();
        let mut graph = UnGraph::<(), f64>::with_capacity(len + 2, (len + 2 * n) * half.len());
        for _ in 0..len + 2 {
            graph.add_node(());
        }
        for j in 1..m - 1 {
            for k in 0..n {
                let i = grid.index(j, k);
                for &(a, b) in &half {
                    let jj = j as i64 + b;
                    if jj > m as i64 - 2 {
                        continue;
                    }
                    let kk = (k as i64 + a).rem_euclid(n as i64) as usize;
                    let o = grid.index(jj as usize, kk);
                    let w = h * ((a * a + b * b) as f64).sqrt() * log_mean(sigma[i], sigma[o]);
                    graph.add_edge(NodeIndex::new(i), NodeIndex::new(o), w);
                }
            }
        }
        for (pole, near, far) in [(len, 1, 2), (len + 1, m - 2, m - 3)] {
            for k in 0..n {
                let (a, b) = (sigma[grid.index(near, k)], sigma[grid.index(far, k)]);
                let kappa = (b / a).ln() / h;
                if !(kappa > 0.0) {
                    return Err(MetricError::Quadrature(format!(
                        "no decay toward the pole in column {k}"
                    )));
                }
                graph.add_edge(
                    NodeIndex::new(pole),
                    NodeIndex::new(grid.index(near, k)),
                    a / kappa,
                );
            }
        }
        Ok(MetricGraph { graph, len, used })
    }

    fn id(&self, node: GraphNode) -> usize {
        match node {
            GraphNode::Grid(i) => i,
            GraphNode::South => self.len,
            GraphNode::North => self.len + 1,
        }
    }

    fn node(&self, id: usize) -> GraphNode {
        if id < self.len {
            GraphNode::Grid(id)
        } else if id == self.len {
            GraphNode::South
        } else {
            GraphNode::North
        }
    }

    /// Distances from `source`, indexed by grid node with the south and north poles appended;
    /// the unused end rows stay infinite.
    pub fn distances(&self, source: GraphNode) -> Result<Vec<f64>, MetricError> {
        let map = dijkstra(&self.graph, NodeIndex::new(self.id(source)), None, |e| {
            *e.weight()
        });
        let mut dist = vec![f64::INFINITY; self.len + 2];
        for (k, d) in map {
            dist[k.index()] = d;
        }
        if dist
            .iter()
            .zip(&self.used)
            .any(|(d, &u)| u && !d.is_finite())
        {
            return Err(MetricError::Disconnected);
        }
        Ok(dist)
    }

    pub fn distance(&self, a: GraphNode, b: GraphNode) -> Result<f64, MetricError> {
        Ok(self.distances(a)?[self.id(b)])
    }

    fn farthest(dist: &[f64]) -> (usize, f64) {
        dist.iter().enumerate().filter(|(_, d)| d.is_finite()).fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
        )
    }

    /// Double-sweep estimate: farthest node from the south pole, then farthest from that.
    pub fn diameter(&self) -> Result<(f64, GraphNode, GraphNode), MetricError> {
        let (a, _) = Self::farthest(&self.distances(GraphNode::South)?);
        let (b, d) = Self::farthest(&self.distances(self.node(a))?);
        Ok((d, self.node(a), self.node(b)))
    }
}

pub fn graph_diameter(grid: &SphereGrid, rho: &Density) -> Result<f64, MetricError> {
    Ok(MetricGraph::new(grid, rho)?.diameter()?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_two_directions() {
        let s = stencil();
        assert_eq!(s.len(), 32);
        assert!(s.contains(&(3, 2)) && !s.contains(&(2, 2)));
    }
}
