//! Depth-limited CART classification tree (Gini impurity) with per-node
//! feature subsampling. Leaves store a Laplace-smoothed positive rate.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        prob: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    dim: usize,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

struct Builder<'a, R: Rng + ?Sized> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: TreeParams,
    dim: usize,
    nodes: Vec<Node>,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let k = idx.iter().filter(|&&i| self.y[i] == 1).count() as f64;
        let prob = (k + 1.0) / (idx.len() as f64 + 2.0);
        self.nodes.push(Node::Leaf { prob });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        if depth >= self.params.max_depth
            || n < 2 * self.params.min_leaf.max(1)
            || pos == 0
            || pos == n
        {
            return self.leaf(&idx);
        }

        let mtry = self.params.max_features.unwrap_or(self.dim).clamp(1, self.dim);
        let features: Vec<usize> = if mtry == self.dim {
            (0..self.dim).collect()
        } else {
            sample(self.rng, self.dim, mtry).into_vec()
        };

        let parent = n as f64 * gini(pos as f64, n as f64);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.clone();
        for &f in &features {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left_pos = 0usize;
            for split in 1..n {
                left_pos += self.y[sorted[split - 1]] as usize;
                let lo = self.x[sorted[split - 1]][f];
                let hi = self.x[sorted[split]][f];
                if split < min_leaf || n - split < min_leaf || lo == hi {
                    continue;
                }
                let nl = split as f64;
                let nr = (n - split) as f64;
                let cost = nl * gini(left_pos as f64, nl)
                    + nr * gini((pos - left_pos) as f64, nr);
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, f, 0.5 * (lo + hi)));
                }
            }
        }

        match best {
            Some((cost, feature, threshold)) if cost < parent - 1e-12 => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
                let slot = self.nodes.len();
                self.nodes.push(Node::Leaf { prob: 0.5 });
                let left = self.build(left_idx, depth + 1);
                let right = self.build(right_idx, depth + 1);
                self.nodes[slot] = Node::Split { feature, threshold, left, right };
                slot
            }
            _ => self.leaf(&idx),
        }
    }
}

impl DecisionTree {
    /// Fits on the rows listed in `sample_idx` (duplicates allowed, e.g. a
    /// bootstrap draw).
    pub fn fit<R: Rng + ?Sized>(
        x: &[Vec<f64>],
        y: &[u8],
        sample_idx: Vec<usize>,
        params: TreeParams,
        rng: &mut R,
    ) -> Result<Self> {
        if sample_idx.is_empty() {
            return Err(Error::Fit("tree needs at least one sample".into()));
        }
        let dim = x[sample_idx[0]].len();
        let mut builder = Builder { x, y, params, dim, nodes: Vec::new(), rng };
        builder.build(sample_idx, 0);
        let nodes = builder.nodes;
        Ok(Self { nodes, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { prob } => return prob,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn learns_a_threshold() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64, ((i * 7) % 13) as f64]).collect();
        let y: Vec<u8> = (0..200).map(|i| (i >= 120) as u8).collect();
        let params = TreeParams { max_depth: 4, min_leaf: 3, max_features: None };
        let t = DecisionTree::fit(&x, &y, (0..200).collect(), params, &mut substream(1, Stream::Learner))
            .unwrap();
        // pure leaves with 120 and 80 points, Laplace smoothed
        assert!((t.predict_one(&[10.0, 0.0]) - 1.0 / 122.0).abs() < 1e-12);
        assert!((t.predict_one(&[150.0, 0.0]) - 81.0 / 82.0).abs() < 1e-12);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn respects_depth_and_leaf_size() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        let params = TreeParams { max_depth: 3, min_leaf: 5, max_features: None };
        let t = DecisionTree::fit(&x, &y, (0..64).collect(), params, &mut substream(2, Stream::Learner))
            .unwrap();
        assert!(t.depth() <= 3);
        for i in 0..64 {
            let p = t.predict_one(&[i as f64]);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn single_class_is_a_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let params = TreeParams { max_depth: 8, min_leaf: 1, max_features: None };
        let t = DecisionTree::fit(&x, &[1, 1, 1], vec![0, 1, 2], params, &mut substream(3, Stream::Learner))
            .unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict_one(&[5.0]), 0.8);
    }
}
