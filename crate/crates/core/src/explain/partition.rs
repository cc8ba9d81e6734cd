//! Owen values over a balanced contiguous hierarchy of content tokens.
//!
//! A node's share of its parent's payoff is the average, over the sibling
//! being absent or present, of the node's marginal contribution. Shares are
//! then split recursively inside the node, again averaging over every
//! presence state of the siblings met on the way down. Leaf shares are the
//! attributions; they sum to `v(all) - v(∅)` by construction.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{Classifier, PredictionCache, RemovalStrategy, TokenizedInput};
use crate::scalar::Scalar;

use super::{Diagnostics, Explanation, Method, Perturber};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    /// Half-open range of content-token indices.
    pub start: usize,
    pub end: usize,
    pub children: Option<(usize, usize)>,
}

impl TreeNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary tree whose nodes cover contiguous token ranges. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTree {
    nodes: Vec<TreeNode>,
}

impl PartitionTree {
    /// Bisects every range of length `len > 1` at `start + ⌈len/2⌉`.
    pub fn balanced(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("partition tree over zero tokens".into()));
        }
        let mut nodes = vec![TreeNode {
            start: 0,
            end: n,
            children: None,
        }];
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let TreeNode { start, end, .. } = nodes[id];
            let len = end - start;
            if len < 2 {
                continue;
            }
            let mid = start + len.div_ceil(2);
            let left = nodes.len();
            nodes.push(TreeNode {
                start,
                end: mid,
                children: None,
            });
            nodes.push(TreeNode {
                start: mid,
                end,
                children: None,
            });
            nodes[id].children = Some((left, left + 1));
            stack.push(left + 1);
            stack.push(left);
        }
        Ok(PartitionTree { nodes })
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &PartitionTree, id: usize) -> usize {
            match t.nodes[id].children {
                None => 0,
                Some((l, r)) => 1 + go(t, l).max(go(t, r)),
            }
        }
        go(self, 0)
    }
}

/// Fixed-width bitset over content tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Coalition(Vec<u64>);

impl Coalition {
    fn empty(n: usize) -> Self {
        Coalition(vec![0; n.div_ceil(64)])
    }

    fn with_range(&self, node: &TreeNode) -> Self {
        let mut c = self.clone();
        for i in node.start..node.end {
            c.0[i / 64] |= 1 << (i % 64);
        }
        c
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        (0..n).map(|i| self.0[i / 64] & (1 << (i % 64)) != 0).collect()
    }
}

struct Work {
    node: usize,
    /// Tokens outside `node` that are switched on.
    contexts: Vec<Coalition>,
}

const EVAL_CHUNK: usize = 1024;

/// Partition-SHAP attributions: exact Owen values for the balanced
/// contiguous hierarchy, with `v(S)` the target probability when only the
/// tokens in `S` are kept.
pub fn explain_partition_shap<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    target: usize,
    strategy: RemovalStrategy,
) -> Result<Explanation<T>> {
    let n = x.n_content();
    let tree = PartitionTree::balanced(n)?;
    let p = Perturber::new(model, cache, x, target, strategy);
    let mut memo: HashMap<Coalition, T> = HashMap::new();
    let mut scores = vec![T::zero(); n];
    let half = T::lit(0.5);

    let empty = Coalition::empty(n);
    let root = *tree.root();
    let mut frontier = Vec::new();
    if root.is_leaf() {
        let full = empty.with_range(&root);
        evaluate(&p, &mut memo, vec![empty.clone(), full.clone()], n)?;
        scores[0] = memo[&full] - memo[&empty];
    } else {
        frontier.push(Work {
            node: 0,
            contexts: vec![empty],
        });
    }
    while !frontier.is_empty() {
        let mut needed = Vec::new();
        for w in &frontier {
            let (l, r) = tree.node(w.node).children.expect("frontier holds internal nodes");
            let (l, r) = (tree.node(l), tree.node(r));
            for c in &w.contexts {
                let cl = c.with_range(l);
                let clr = cl.with_range(r);
                needed.extend([c.clone(), c.with_range(r), cl, clr]);
            }
        }
        evaluate(&p, &mut memo, needed, n)?;

        let mut next = Vec::new();
        for w in frontier {
            let (l, r) = tree.node(w.node).children.expect("frontier holds internal nodes");
            for (child, sibling) in [(l, r), (r, l)] {
                let (cn, sn) = (tree.node(child), tree.node(sibling));
                let mut total = T::zero();
                for c in &w.contexts {
                    let with_sib = c.with_range(sn);
                    let absent = memo[&c.with_range(cn)] - memo[c];
                    let present = memo[&with_sib.with_range(cn)] - memo[&with_sib];
                    total = total + half * (absent + present);
                }
                let share = total / T::from_usize_lossy(w.contexts.len());
                if cn.is_leaf() {
                    scores[cn.start] = share;
                } else {
                    let contexts = w
                        .contexts
                        .iter()
                        .flat_map(|c| [c.clone(), c.with_range(sn)])
                        .collect();
                    next.push(Work {
                        node: child,
                        contexts,
                    });
                }
            }
        }
        frontier = next;
    }

    let mut e = Explanation::new(Method::PartitionShap, target, x, scores)?;
    e.diagnostics = Diagnostics {
        model_evaluations: p.evaluations(),
        samples: Some(memo.len()),
        ..Diagnostics::default()
    };
    Ok(e)
}

fn evaluate<T: Scalar, M: Classifier<T> + ?Sized>(
    p: &Perturber<'_, T, M>,
    memo: &mut HashMap<Coalition, T>,
    coalitions: Vec<Coalition>,
    n: usize,
) -> Result<()> {
    let mut seen = HashSet::new();
    let missing: Vec<Coalition> = coalitions
        .into_iter()
        .filter(|c| !memo.contains_key(c) && seen.insert(c.clone()))
        .collect();
    for chunk in missing.chunks(EVAL_CHUNK) {
        let keeps: Vec<Vec<bool>> = chunk.iter().map(|c| c.mask(n)).collect();
        let values = p.values(&keeps)?;
        memo.extend(chunk.iter().cloned().zip(values));
    }
    Ok(())
}
