//! Batch sampling of binary space partitions.
//!
//! Two flavours live here. [`hull_cut`] grows a tree over the convex hulls
//! spanned by a set of data points, which is what the learner uses. The pure
//! process on a planar convex domain, [`sample_polygon_partition`], clips the
//! domain geometrically and exists for process-level validation.
//!
//! Both run the same race: a block with total pair perimeter `L` waits an
//! `Exp(rate_scale * L)` time for its next cut; if that lands before the
//! budget, a pair is picked in proportion to its perimeter, an angle with
//! density proportional to the directional width, and an offset uniformly on
//! the projected interval.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    convex_hull, sample_direction, split_polygon, Cut, Direction, Point2, Polygon2D, Side, EPS,
};
use crate::store::{LeafStats, PointStore};

/// Attempts at drawing a separating cut before a block is declared a leaf.
pub const MAX_CUT_RETRIES: usize = 16;

/// All coordinate pairs `(d1, d2)` with `d1 < d2`, in lexicographic order.
pub fn dimension_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for a in 0..d {
        for b in a + 1..d {
            pairs.push((a, b));
        }
    }
    pairs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Blocks holding at most this many points are never cut.
    pub min_points_to_cut: usize,
    /// Multiplier on the summed pair perimeters giving the cut rate.
    pub rate_scale: f64,
    /// Reject inserted points outside `[0, 1]^d`.
    pub enforce_domain: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { min_points_to_cut: 3, rate_scale: 1.0, enforce_domain: true }
    }
}

/// A node's coverage: the convex hull of its points in every coordinate pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HullBundle {
    d: usize,
    pairs: Vec<(usize, usize)>,
    pair_hulls: Vec<Polygon2D>,
    point_ids: Vec<usize>,
}

impl HullBundle {
    pub fn from_ids(store: &PointStore, point_ids: Vec<usize>) -> Result<Self> {
        if point_ids.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let d = store.d();
        let pairs = dimension_pairs(d);
        let mut buf = Vec::with_capacity(point_ids.len());
        let pair_hulls = pairs
            .iter()
            .map(|&(a, b)| {
                buf.clear();
                buf.extend(point_ids.iter().map(|&i| {
                    let x = store.point(i);
                    Point2::new(x[a], x[b])
                }));
                convex_hull(&buf)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, pairs, pair_hulls, point_ids })
    }

    pub(crate) fn from_parts(d: usize, pair_hulls: Vec<Polygon2D>, point_ids: Vec<usize>) -> Result<Self> {
        let pairs = dimension_pairs(d);
        if pairs.len() != pair_hulls.len() {
            return Err(Error::MalformedModel(format!(
                "expected {} pair hulls, found {}",
                pairs.len(),
                pair_hulls.len()
            )));
        }
        Ok(Self { d, pairs, pair_hulls, point_ids })
    }

    pub(crate) fn with_parts(&self, pair_hulls: Vec<Polygon2D>, point_ids: Vec<usize>) -> Self {
        Self { d: self.d, pairs: self.pairs.clone(), pair_hulls, point_ids }
    }

    fn placeholder() -> Self {
        Self::default()
    }

    pub fn into_ids(self) -> Vec<usize> {
        self.point_ids
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_hulls(&self) -> &[Polygon2D] {
        &self.pair_hulls
    }

    pub fn point_ids(&self) -> &[usize] {
        &self.point_ids
    }

    pub fn len(&self) -> usize {
        self.point_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_ids.is_empty()
    }

    pub fn perimeters(&self) -> impl Iterator<Item = f64> + '_ {
        self.pair_hulls.iter().map(Polygon2D::perimeter)
    }

    /// Sum of pair-hull perimeters.
    pub fn total_perimeter(&self) -> f64 {
        self.perimeters().sum()
    }

    /// Whether every pair projection of `x` lies in the matching pair hull.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.pairs
            .iter()
            .zip(&self.pair_hulls)
            .all(|(&(a, b), h)| h.contains(Point2::new(x[a], x[b]), EPS))
    }
}

/// Exponential waiting time with the given rate; infinite when `rate <= 0`.
pub fn sample_cut_cost<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if !(rate > 0.0) || !rate.is_finite() {
        return f64::INFINITY;
    }
    Exp::new(rate).map(|e| e.sample(rng)).unwrap_or(f64::INFINITY)
}

/// Offset drawn uniformly on the open projection interval of `poly` along `dir`.
/// `None` when the interval is empty.
pub fn sample_offset<R: Rng + ?Sized>(poly: &Polygon2D, dir: Direction, rng: &mut R) -> Option<f64> {
    let (lo, hi) = poly.projection_interval(dir);
    if !(hi > lo) {
        return None;
    }
    for _ in 0..MAX_CUT_RETRIES {
        let s = lo + rng.random::<f64>() * (hi - lo);
        if s > lo && s < hi {
            return Some(s);
        }
    }
    None
}

/// Samples a cut inside `hull`, stamped with absolute time `t`.
pub fn sample_cut<R: Rng + ?Sized>(hull: &HullBundle, t: f64, rng: &mut R) -> Result<Cut> {
    let total = hull.total_perimeter();
    if !(total > 0.0) {
        return Err(Error::DegenerateHull);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut k = 0;
    for (i, per) in hull.perimeters().enumerate() {
        if per <= 0.0 {
            continue;
        }
        k = i;
        acc += per;
        if target < acc {
            break;
        }
    }
    let (d1, d2) = hull.pairs[k];
    let poly = &hull.pair_hulls[k];
    for _ in 0..MAX_CUT_RETRIES {
        let theta = sample_direction(poly, rng)?;
        if let Some(s) = sample_offset(poly, theta, rng) {
            return Ok(Cut { d1, d2, theta, s, t });
        }
    }
    Err(Error::DegenerateHull)
}

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub hull: HullBundle,
    pub cut: Option<Cut>,
    /// `[left, right]` children; present exactly when `cut` is.
    pub children: Option<[NodeId; 2]>,
    /// Label statistics; only meaningful on leaves.
    pub stats: LeafStats,
}

impl Node {
    pub fn leaf(hull: HullBundle, stats: LeafStats) -> Self {
        Self { hull, cut: None, children: None, stats }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    fn placeholder() -> Self {
        Self::leaf(HullBundle::placeholder(), LeafStats::Empty)
    }
}

/// A partition tree stored as an arena; node ids are arena indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BspTree {
    nodes: Vec<Node>,
    root: Option<NodeId>,
}

impl BspTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>, root: Option<NodeId>) -> Self {
        Self { nodes, root }
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub(crate) fn set_root(&mut self, id: NodeId) {
        self.root = Some(id);
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    pub(crate) fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub(crate) fn alloc(&mut self) -> NodeId {
        self.push(Node::placeholder())
    }

    /// Leaf reached from the root by following `side_of` at every cut.
    pub fn route(&self, x: &[f64]) -> Option<NodeId> {
        self.route_from(self.root?, x)
    }

    pub fn route_from(&self, start: NodeId, x: &[f64]) -> Option<NodeId> {
        let mut id = start;
        if id >= self.nodes.len() {
            return None;
        }
        while let (Some(cut), Some(ch)) = (&self.nodes[id].cut, self.nodes[id].children) {
            id = ch[cut.side_of(x).index()];
        }
        Some(id)
    }

    /// Node ids in preorder (node, left subtree, right subtree).
    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(self.root)
    }

    pub fn preorder_from(&self, start: Option<NodeId>) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = start.into_iter().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some([l, r]) = self.nodes[id].children {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    pub fn cut_count(&self) -> usize {
        self.preorder().into_iter().filter(|&i| !self.nodes[i].is_leaf()).count()
    }

    /// Cuts in preorder.
    pub fn cuts(&self) -> Vec<Cut> {
        self.preorder().into_iter().filter_map(|i| self.nodes[i].cut).collect()
    }

    /// Number of cuts on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let Some(root) = self.root else { return 0 };
        let mut best = 0;
        let mut stack = vec![(root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            match self.nodes[id].children {
                Some([l, r]) => {
                    stack.push((l, depth + 1));
                    stack.push((r, depth + 1));
                }
                None => best = best.max(depth),
            }
        }
        best
    }

    /// Brute-force structural audit against the raw points.
    ///
    /// Checks that leaves partition the stored ids, children partition their
    /// parent's ids consistently with `side_of`, every point routes to the
    /// leaf holding it, cut times increase strictly along paths and stay
    /// below `tau_max`, and every pair hull equals the hull recomputed from
    /// the member points. Returns one message per violation.
    pub fn audit(&self, store: &PointStore, tau_max: f64) -> Vec<String> {
        let mut issues = Vec::new();
        let Some(root) = self.root else { return issues };
        let mut seen = vec![0usize; store.len()];
        let mut stack = vec![(root, 0.0f64)];
        while let Some((id, t_parent)) = stack.pop() {
            let node = &self.nodes[id];
            if node.hull.is_empty() {
                issues.push(format!("node {id}: empty"));
                continue;
            }
            match HullBundle::from_ids(store, node.hull.point_ids.clone()) {
                Ok(fresh) => {
                    for (k, (a, b)) in fresh.pair_hulls.iter().zip(&node.hull.pair_hulls).enumerate() {
                        if !same_vertex_set(a, b, 1e-9) {
                            issues.push(format!("node {id}: pair hull {k} differs from recomputed hull"));
                        }
                    }
                }
                Err(e) => issues.push(format!("node {id}: {e}")),
            }
            match (&node.cut, node.children) {
                (None, None) => {
                    for &p in &node.hull.point_ids {
                        if p >= seen.len() {
                            issues.push(format!("node {id}: unknown point id {p}"));
                            continue;
                        }
                        seen[p] += 1;
                        if self.route(store.point(p)) != Some(id) {
                            issues.push(format!("point {p} does not route to its leaf {id}"));
                        }
                    }
                }
                (Some(cut), Some([l, r])) => {
                    if !(cut.t > t_parent) {
                        issues.push(format!("node {id}: cut time {} not after parent {}", cut.t, t_parent));
                    }
                    if !(cut.t <= tau_max) {
                        issues.push(format!("node {id}: cut time {} exceeds budget {}", cut.t, tau_max));
                    }
                    let mut parent: Vec<usize> = node.hull.point_ids.clone();
                    let mut union: Vec<usize> = Vec::new();
                    for (child, side) in [(l, Side::Left), (r, Side::Right)] {
                        for &p in &self.nodes[child].hull.point_ids {
                            union.push(p);
                            if p < store.len() && cut.side_of(store.point(p)) != side {
                                issues.push(format!("node {id}: point {p} on wrong side of cut"));
                            }
                        }
                        stack.push((child, cut.t));
                    }
                    parent.sort_unstable();
                    union.sort_unstable();
                    if parent != union {
                        issues.push(format!("node {id}: children do not partition the node's points"));
                    }
                }
                _ => issues.push(format!("node {id}: cut and children disagree")),
            }
        }
        for (p, &n) in seen.iter().enumerate() {
            if n != 1 {
                issues.push(format!("point {p} stored in {n} leaves"));
            }
        }
        issues
    }
}

fn same_vertex_set(a: &Polygon2D, b: &Polygon2D, tol: f64) -> bool {
    a.len() == b.len()
        && a
            .vertices()
            .iter()
            .all(|u| b.vertices().iter().any(|v| u.dist(*v) <= tol))
}

/// Grows a partition over the hull of `point_ids`, racing cuts from `t0`
/// against the budget `tau`.
pub fn hull_cut<R: Rng + ?Sized>(
    store: &PointStore,
    point_ids: Vec<usize>,
    tau: f64,
    t0: f64,
    cfg: &TreeConfig,
    rng: &mut R,
) -> Result<BspTree> {
    let mut tree = BspTree::new();
    let root = tree.alloc();
    tree.set_root(root);
    grow(&mut tree, root, store, point_ids, t0, tau, cfg, rng, &mut Vec::new())?;
    Ok(tree)
}

/// Writes a `hull_cut` subtree rooted at `slot`, appending created cuts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn grow<R: Rng + ?Sized>(
    tree: &mut BspTree,
    slot: NodeId,
    store: &PointStore,
    point_ids: Vec<usize>,
    t0: f64,
    tau: f64,
    cfg: &TreeConfig,
    rng: &mut R,
    new_cuts: &mut Vec<Cut>,
) -> Result<()> {
    if point_ids.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut work = vec![(slot, point_ids, t0)];
    while let Some((slot, ids, t_start)) = work.pop() {
        let hull = HullBundle::from_ids(store, ids)?;
        let rate = cfg.rate_scale * hull.total_perimeter();
        let mut split = None;
        if hull.len() > cfg.min_points_to_cut && rate > 0.0 {
            let t = t_start + sample_cut_cost(rate, rng);
            if t < tau {
                for _ in 0..MAX_CUT_RETRIES {
                    let cut = match sample_cut(&hull, t, rng) {
                        Ok(c) => c,
                        Err(Error::DegenerateHull) => break,
                        Err(e) => return Err(e),
                    };
                    let (left, right): (Vec<usize>, Vec<usize>) =
                        hull.point_ids.iter().partition(|&&p| cut.side_of(store.point(p)) == Side::Left);
                    if !left.is_empty() && !right.is_empty() {
                        split = Some((cut, left, right));
                        break;
                    }
                }
            }
        }
        match split {
            Some((cut, left, right)) => {
                let l = tree.alloc();
                let r = tree.alloc();
                *tree.node_mut(slot) =
                    Node { hull, cut: Some(cut), children: Some([l, r]), stats: LeafStats::Empty };
                new_cuts.push(cut);
                work.push((r, right, cut.t));
                work.push((l, left, cut.t));
            }
            None => {
                let stats = LeafStats::from_ids(hull.point_ids(), store.labels());
                *tree.node_mut(slot) = Node::leaf(hull, stats);
            }
        }
    }
    Ok(())
}

/// Cell of the pure planar process: a convex polygon, optionally cut in two.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonCell {
    pub polygon: Polygon2D,
    pub cut: Option<Cut>,
    pub children: Option<Box<[PolygonCell; 2]>>,
}

impl PolygonCell {
    pub fn leaf(polygon: Polygon2D) -> Self {
        Self { polygon, cut: None, children: None }
    }

    /// Cuts `polygon` into two leaf children along `cut` (pair `(0, 1)`).
    pub fn with_cut(polygon: Polygon2D, cut: Cut) -> Result<Self> {
        let (l, r) = split_polygon(&polygon, cut.theta, cut.s)?;
        Ok(Self {
            polygon,
            cut: Some(cut),
            children: Some(Box::new([Self::leaf(l), Self::leaf(r)])),
        })
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn cut_count(&self) -> usize {
        match &self.children {
            None => 0,
            Some(ch) => 1 + ch[0].cut_count() + ch[1].cut_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.cut_count() + 1
    }

    /// Leaf polygons, left to right.
    pub fn leaves(&self) -> Vec<&Polygon2D> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(c) = stack.pop() {
            match &c.children {
                None => out.push(&c.polygon),
                Some(ch) => {
                    stack.push(&ch[1]);
                    stack.push(&ch[0]);
                }
            }
        }
        out
    }

    /// Cuts in preorder.
    pub fn cuts(&self) -> Vec<Cut> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(c) = stack.pop() {
            if let (Some(cut), Some(ch)) = (c.cut, &c.children) {
                out.push(cut);
                stack.push(&ch[1]);
                stack.push(&ch[0]);
            }
        }
        out
    }

    /// Leaf cell containing `p` under the `side_of` routing rule.
    pub fn locate(&self, p: Point2) -> &PolygonCell {
        let mut c = self;
        while let (Some(cut), Some(ch)) = (&c.cut, &c.children) {
            c = &ch[cut.side_of_point2(p).index()];
        }
        c
    }

    /// Parameters `t` in `(0, 1)` where the segment `a + t (b - a)` crosses a
    /// cut of this partition, sorted increasingly.
    pub fn line_slice(&self, a: Point2, b: Point2) -> Result<Vec<f64>> {
        if !self.polygon.contains(a, EPS) || !self.polygon.contains(b, EPS) {
            return Err(Error::SegmentOutsideDomain);
        }
        let mut out = Vec::new();
        let mut stack = vec![(self, 0.0f64, 1.0f64)];
        while let Some((cell, lo, hi)) = stack.pop() {
            let (Some(cut), Some(ch)) = (&cell.cut, &cell.children) else { continue };
            let fa = cut.theta.project(a) - cut.s;
            let fb = cut.theta.project(b) - cut.s;
            let at = |t: f64| Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            let side = |t: f64| cut.side_of_point2(at(t)).index();
            let root = if fa != fb { fa / (fa - fb) } else { f64::NAN };
            if root > lo && root < hi {
                out.push(root);
                stack.push((&ch[side(0.5 * (lo + root))], lo, root));
                stack.push((&ch[side(0.5 * (root + hi))], root, hi));
            } else {
                stack.push((&ch[side(0.5 * (lo + hi))], lo, hi));
            }
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// Number of cuts that split the restriction of this partition to `sub`.
    ///
    /// The subdomain is clipped down the tree; a cut counts when its line
    /// strictly crosses the clipped region of its node.
    pub fn restriction_cut_count(&self, sub: &Polygon2D) -> usize {
        let mut count = 0;
        let mut stack = vec![(self, sub.clone())];
        while let Some((cell, region)) = stack.pop() {
            let (Some(cut), Some(ch)) = (&cell.cut, &cell.children) else { continue };
            let (lo, hi) = region.projection_interval(cut.theta);
            if lo < cut.s && cut.s < hi {
                match split_polygon(&region, cut.theta, cut.s) {
                    Ok((l, r)) => {
                        count += 1;
                        stack.push((&ch[0], l));
                        stack.push((&ch[1], r));
                    }
                    Err(_) => stack.push((&ch[1], region)),
                }
            } else if cut.s <= lo {
                stack.push((&ch[1], region));
            } else {
                stack.push((&ch[0], region));
            }
        }
        count
    }
}

/// Samples the pure partition process on a planar convex `domain` up to
/// budget `tau`, with cut rate equal to the block perimeter.
pub fn sample_polygon_partition<R: Rng + ?Sized>(domain: &Polygon2D, tau: f64, rng: &mut R) -> Result<PolygonCell> {
    if domain.area() <= 0.0 {
        return Err(Error::DegenerateDomain);
    }
    grow_polygon(domain.clone(), 0.0, tau, rng)
}

fn grow_polygon<R: Rng + ?Sized>(polygon: Polygon2D, t0: f64, tau: f64, rng: &mut R) -> Result<PolygonCell> {
    let t = t0 + sample_cut_cost(polygon.perimeter(), rng);
    if !(t < tau) {
        return Ok(PolygonCell::leaf(polygon));
    }
    for _ in 0..MAX_CUT_RETRIES {
        let theta = sample_direction(&polygon, rng)?;
        let Some(s) = sample_offset(&polygon, theta, rng) else { continue };
        let Ok((l, r)) = split_polygon(&polygon, theta, s) else { continue };
        let cut = Cut { d1: 0, d2: 1, theta, s, t };
        let left = grow_polygon(l, t, tau, rng)?;
        let right = grow_polygon(r, t, tau, rng)?;
        return Ok(PolygonCell { polygon, cut: Some(cut), children: Some(Box::new([left, right])) });
    }
    Ok(PolygonCell::leaf(polygon))
}

/// Flat description of a data partition: cuts in preorder and the point ids
/// of every leaf, left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionExport {
    pub d: usize,
    pub cuts: Vec<Cut>,
    pub leaves: Vec<Vec<usize>>,
}

impl PartitionExport {
    pub fn from_tree(tree: &BspTree, d: usize) -> Self {
        Self {
            d,
            cuts: tree.cuts(),
            leaves: tree.leaves().into_iter().map(|i| tree.node(i).hull.point_ids().to_vec()).collect(),
        }
    }
}
