//! Exact k-nearest-neighbor search in the Chebyshev (max) norm for d <= 4.
//!
//! Median-split kd-tree over an index permutation with per-node bounding
//! boxes for pruning. Queries return the exact distance to the k-th nearest
//! neighbor, excluding the query point itself.

const LEAF_SIZE: usize = 16;
pub(crate) const MAX_DIM: usize = 4;

pub(crate) struct KdTree<'a> {
    points: &'a [f64],
    d: usize,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

struct Node {
    start: u32,
    end: u32,
    /// Child node indices; `u32::MAX` marks a leaf.
    left: u32,
    right: u32,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
}

/// Sorted list of the k smallest distances seen so far; k is tiny here so
/// insertion into a fixed vector beats a heap.
struct TopK {
    dists: Vec<f64>,
    k: usize,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            dists: Vec::with_capacity(k),
            k,
        }
    }

    fn worst(&self) -> f64 {
        if self.dists.len() < self.k {
            f64::INFINITY
        } else {
            self.dists[self.k - 1]
        }
    }

    fn push(&mut self, dist: f64) {
        if self.dists.len() < self.k {
            let pos = self.dists.partition_point(|&x| x <= dist);
            self.dists.insert(pos, dist);
        } else if dist < self.dists[self.k - 1] {
            let pos = self.dists.partition_point(|&x| x <= dist);
            self.dists.insert(pos, dist);
            self.dists.pop();
        }
    }
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        m = m.max((x - y).abs());
    }
    m
}

impl<'a> KdTree<'a> {
    /// `points` is row-major with `n * d` entries.
    pub(crate) fn build(points: &'a [f64], n: usize, d: usize) -> Self {
        assert!(d >= 1 && d <= MAX_DIM && points.len() == n * d);
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 4);
        let mut tree = KdTree {
            points,
            d,
            order: Vec::new(),
            nodes: Vec::new(),
        };
        tree.split(&mut order, 0, n, &mut nodes);
        tree.order = order;
        tree.nodes = nodes;
        tree
    }

    fn coord(&self, idx: u32, dim: usize) -> f64 {
        self.points[idx as usize * self.d + dim]
    }

    fn bbox(&self, idx: &[u32]) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let mut lo = [f64::INFINITY; MAX_DIM];
        let mut hi = [f64::NEG_INFINITY; MAX_DIM];
        for &i in idx {
            for m in 0..self.d {
                let v = self.coord(i, m);
                lo[m] = lo[m].min(v);
                hi[m] = hi[m].max(v);
            }
        }
        (lo, hi)
    }

    /// Recursively partitions `order[start..end]`, appending nodes; returns
    /// the node index.
    fn split(&self, order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
        let slice = &order[start..end];
        let (lo, hi) = self.bbox(slice);
        let me = nodes.len();
        nodes.push(Node {
            start: start as u32,
            end: end as u32,
            left: u32::MAX,
            right: u32::MAX,
            lo,
            hi,
        });
        if end - start <= LEAF_SIZE {
            return me as u32;
        }
        // Split the widest dimension at the median.
        let mut dim = 0;
        let mut width = hi[0] - lo[0];
        for m in 1..self.d {
            if hi[m] - lo[m] > width {
                width = hi[m] - lo[m];
                dim = m;
            }
        }
        if width == 0.0 {
            // All points identical in every dimension; keep as a leaf.
            return me as u32;
        }
        let mid = (end - start) / 2;
        order[start..end]
            .select_nth_unstable_by(mid, |&a, &b| self.coord(a, dim).total_cmp(&self.coord(b, dim)));
        let left = self.split(order, start, start + mid, nodes);
        let right = self.split(order, start + mid, end, nodes);
        nodes[me].left = left;
        nodes[me].right = right;
        me as u32
    }

    fn box_distance(&self, node: &Node, q: &[f64]) -> f64 {
        let mut dist: f64 = 0.0;
        for m in 0..self.d {
            let below = node.lo[m] - q[m];
            let above = q[m] - node.hi[m];
            dist = dist.max(below.max(above));
        }
        dist.max(0.0)
    }

    fn visit(&self, node_idx: u32, q: &[f64], exclude: u32, best: &mut TopK) {
        let node = &self.nodes[node_idx as usize];
        if node.left == u32::MAX {
            for &i in &self.order[node.start as usize..node.end as usize] {
                if i == exclude {
                    continue;
                }
                let row = &self.points[i as usize * self.d..(i as usize + 1) * self.d];
                best.push(chebyshev(q, row));
            }
            return;
        }
        let (l, r) = (node.left, node.right);
        let dl = self.box_distance(&self.nodes[l as usize], q);
        let dr = self.box_distance(&self.nodes[r as usize], q);
        let (first, second, d_second) = if dl <= dr { (l, r, dr) } else { (r, l, dl) };
        self.visit(first, q, exclude, best);
        if d_second < best.worst() {
            self.visit(second, q, exclude, best);
        }
    }

    /// Distance from point `i` to its k-th nearest neighbor (self excluded).
    pub(crate) fn kth_neighbor_distance(&self, i: usize, k: usize) -> f64 {
        let q = &self.points[i * self.d..(i + 1) * self.d];
        let mut best = TopK::new(k);
        self.visit(0, q, i as u32, &mut best);
        best.dists[k - 1]
    }
}
