//! Ball tree over 2D cell centroids for circle and rectangle range queries.

use crate::geometry::LensGeometry;

pub const DEFAULT_LEAF_SIZE: usize = 32;

#[derive(Debug, Clone)]
struct Node {
    center: [f64; 2],
    radius: f64,
    /// Range into `order`.
    start: usize,
    end: usize,
    /// Child node indices; `None` for leaves.
    children: Option<(usize, usize)>,
}

/// Each node bounds its points by the smallest ball around their centroid.
/// Internal nodes split their points at the median of the widest axis.
#[derive(Debug, Clone)]
pub struct BallTree {
    points: Vec<[f64; 2]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl BallTree {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        Self::with_leaf_size(points, DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: Vec<[f64; 2]>, leaf_size: usize) -> Self {
        let mut tree = Self {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
            leaf_size: leaf_size.max(1),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Every point index appears exactly once across the leaves.
    pub fn indices(&self) -> &[usize] {
        &self.order
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let slice = &self.order[start..end];
        let n = slice.len() as f64;
        let mut center = [0.0, 0.0];
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &i in slice {
            let p = self.points[i];
            for d in 0..2 {
                center[d] += p[d];
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        center = [center[0] / n, center[1] / n];
        let radius = slice
            .iter()
            .map(|&i| dist(center, self.points[i]))
            .fold(0.0, f64::max);

        let id = self.nodes.len();
        self.nodes.push(Node {
            center,
            radius,
            start,
            end,
            children: None,
        });
        if end - start > self.leaf_size {
            let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
            let mid = start + (end - start) / 2;
            let points = &self.points;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                points[a][axis].total_cmp(&points[b][axis])
            });
            let left = self.build(start, mid);
            let right = self.build(mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    /// Indices of all points inside `geometry` (closed), in ascending order.
    pub fn query(&self, geometry: &LensGeometry) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !self.may_intersect(node, geometry) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        let [x, y] = self.points[i];
                        if geometry.contains(x, y) {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Conservative pruning test: false only when the node's ball certainly
    /// misses the query shape. The slack absorbs rounding in the bounds.
    fn may_intersect(&self, node: &Node, geometry: &LensGeometry) -> bool {
        let gap = match *geometry {
            LensGeometry::Circle { cx, cy, radius } => dist(node.center, [cx, cy]) - radius,
            LensGeometry::Rectangle {
                cx,
                cy,
                half_w,
                half_h,
            } => {
                let dx = ((node.center[0] - cx).abs() - half_w).max(0.0);
                let dy = ((node.center[1] - cy).abs() - half_h).max(0.0);
                dx.hypot(dy)
            }
        };
        let (cx, cy) = geometry.center();
        let scale =
            1.0 + node.radius + node.center[0].abs() + node.center[1].abs() + cx.abs() + cy.abs();
        gap <= node.radius + 1e-9 * scale
    }
}
