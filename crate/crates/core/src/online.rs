//! Conditional tree update for one arriving point.
//!
//! Walking down from the root, each node's hulls are grown to cover the new
//! point. Growth opens an extension race: a cut confined to the newly covered
//! region fires at rate equal to the perimeter gain, and if it beats the
//! node's existing cut (and the budget) it is inserted above the node,
//! separating the new point from the old subtree. Otherwise the point follows
//! the existing cut. On reaching a leaf the leaf is regrown with the new point
//! under the current budget.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, sample_direction, Cut, Point2, Polygon2D, Side};
use crate::partition::{grow, sample_cut_cost, BspTree, HullBundle, Node, NodeId, TreeConfig};
use crate::store::{LeafStats, PointStore};

/// Angle proposals tried before giving up on a (numerically) empty region.
const MAX_ANGLE_PROPOSALS: usize = 1_000_000;
const MAX_RESTRUCTURE_ATTEMPTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertKind {
    /// The point joined a block too small to cut.
    MergedSmall,
    /// The point reached a leaf, which was regrown under the current budget.
    LeafRefined,
    /// A new cut was inserted above an existing subtree.
    Restructured,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InsertOutcome {
    pub kind: InsertKind,
    /// Nodes visited from the root, ending where the update happened.
    pub path: Vec<NodeId>,
    pub new_cuts: Vec<Cut>,
    /// Leaf now holding the point.
    pub leaf: NodeId,
    /// Root of the subtree pushed below a restructuring cut.
    pub displaced: Option<NodeId>,
}

impl InsertOutcome {
    /// True when the point travelled through at least one existing cut.
    pub fn routed(&self) -> bool {
        self.path.len() > 1
    }
}

fn pair_point(x: &[f64], pair: (usize, usize)) -> Point2 {
    Point2::new(x[pair.0], x[pair.1])
}

/// Pair hulls grown to cover `x`; unchanged hulls are cloned as-is.
fn merged_hulls(hull: &HullBundle, x: &[f64]) -> Result<Vec<Polygon2D>> {
    hull.pairs()
        .iter()
        .zip(hull.pair_hulls())
        .map(|(&pair, h)| {
            let p = pair_point(x, pair);
            if h.contains(p, crate::geometry::EPS) {
                Ok(h.clone())
            } else {
                let mut pts = h.vertices().to_vec();
                pts.push(p);
                convex_hull(&pts)
            }
        })
        .collect()
}

/// Hull bundle covering both `hull` and the point `id`.
pub fn merge_point(hull: &HullBundle, store: &PointStore, id: usize) -> Result<HullBundle> {
    let x = store.point(id);
    if x.len() != hull.d() {
        return Err(Error::DimensionMismatch { expected: hull.d(), got: x.len() });
    }
    let mut ids = hull.point_ids().to_vec();
    if ids.last() != Some(&id) {
        ids.push(id);
    }
    Ok(hull.with_parts(merged_hulls(hull, x)?, ids))
}

fn perimeter_gains(old: &[Polygon2D], new: &[Polygon2D]) -> Result<Vec<f64>> {
    old.iter()
        .zip(new)
        .map(|(o, n)| {
            let (po, pn) = (o.perimeter(), n.perimeter());
            let gain = pn - po;
            if gain < -1e-9 * (1.0 + po) {
                return Err(Error::Internal(format!("hull shrank from {po} to {pn}")));
            }
            Ok(gain.max(0.0))
        })
        .collect()
}

/// Rate of the extension race: summed pair-perimeter gain times `rate_scale`.
pub fn extension_rate(old: &HullBundle, new: &HullBundle, rate_scale: f64) -> Result<f64> {
    Ok(rate_scale * perimeter_gains(old.pair_hulls(), new.pair_hulls())?.iter().sum::<f64>())
}

/// Samples a cut inside `new` that stays clear of `old`.
///
/// The pair is drawn in proportion to the perimeter gain, the angle with
/// density proportional to the width gain (by thinning proposals from the
/// enlarged hull's width density), and the offset uniformly on the part of
/// the enlarged projection interval not covered by the old one. Every vertex
/// of the old pair hull ends up strictly on one side.
pub fn gen_cut_not_crossing<R: Rng + ?Sized>(
    new: &HullBundle,
    old: &HullBundle,
    t: f64,
    rng: &mut R,
) -> Result<Cut> {
    gen_cut_in_region(new.pairs(), new.pair_hulls(), old.pair_hulls(), t, rng)
}

fn gen_cut_in_region<R: Rng + ?Sized>(
    pairs: &[(usize, usize)],
    new: &[Polygon2D],
    old: &[Polygon2D],
    t: f64,
    rng: &mut R,
) -> Result<Cut> {
    let gains = perimeter_gains(old, new)?;
    let total: f64 = gains.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoExtensionRegion);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut k = 0;
    for (i, &g) in gains.iter().enumerate() {
        if g <= 0.0 {
            continue;
        }
        k = i;
        acc += g;
        if target < acc {
            break;
        }
    }
    let (grown, inner) = (&new[k], &old[k]);
    for _ in 0..MAX_ANGLE_PROPOSALS {
        let theta = sample_direction(grown, rng)?;
        let (lo_new, hi_new) = grown.projection_interval(theta);
        let (lo_old, hi_old) = inner.projection_interval(theta);
        let w_new = hi_new - lo_new;
        if !(w_new > 0.0) || rng.random::<f64>() >= 1.0 - (hi_old - lo_old) / w_new {
            continue;
        }
        let below = (lo_old - lo_new).max(0.0);
        let above = (hi_new - hi_old).max(0.0);
        let u = rng.random::<f64>() * (below + above);
        let s = if u < below { lo_new + u } else { hi_old + (u - below) };
        let clear = if s < lo_old { s > lo_new } else { s > hi_old };
        if clear {
            let (d1, d2) = pairs[k];
            return Ok(Cut { d1, d2, theta, s, t });
        }
    }
    Err(Error::NoExtensionRegion)
}

/// Leaf reached by `x` through the tree's cuts.
pub fn route(tree: &BspTree, x: &[f64]) -> Option<NodeId> {
    tree.route(x)
}

fn check_domain(x: &[f64], id: usize, cfg: &TreeConfig) -> Result<()> {
    if cfg.enforce_domain && x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutsideDomain { index: Some(id) });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutsideDomain { index: Some(id) });
    }
    Ok(())
}

/// Incorporates stored point `id` into `tree` under budget `tau`.
///
/// `tau` must be at least every cut time already in the tree. Leaf label
/// statistics touched by the update are rebuilt from `store`.
pub fn insert<R: Rng + ?Sized>(
    tree: &mut BspTree,
    store: &PointStore,
    id: usize,
    tau: f64,
    cfg: &TreeConfig,
    rng: &mut R,
) -> Result<InsertOutcome> {
    let x = store.point(id);
    check_domain(x, id, cfg)?;

    let Some(mut node_id) = tree.root() else {
        let hull = HullBundle::from_ids(store, vec![id])?;
        let stats = LeafStats::from_ids(hull.point_ids(), store.labels());
        let root = tree.push(Node::leaf(hull, stats));
        tree.set_root(root);
        return Ok(InsertOutcome {
            kind: InsertKind::MergedSmall,
            path: vec![root],
            new_cuts: Vec::new(),
            leaf: root,
            displaced: None,
        });
    };

    let mut path = Vec::new();
    let mut t_parent = 0.0;
    loop {
        path.push(node_id);
        let node = tree.node(node_id);
        let grown = merged_hulls(&node.hull, x)?;
        let count = node.hull.len() + 1;

        if node.is_leaf() {
            if count <= cfg.min_points_to_cut {
                let node = tree.node_mut(node_id);
                let mut ids = std::mem::take(&mut node.hull).into_ids();
                ids.push(id);
                node.hull = HullBundle::from_parts(store.d(), grown, ids)?;
                node.stats = LeafStats::from_ids(node.hull.point_ids(), store.labels());
                return Ok(InsertOutcome {
                    kind: InsertKind::MergedSmall,
                    path,
                    new_cuts: Vec::new(),
                    leaf: node_id,
                    displaced: None,
                });
            }
            let mut ids = node.hull.point_ids().to_vec();
            ids.push(id);
            let mut new_cuts = Vec::new();
            grow(tree, node_id, store, ids, t_parent, tau, cfg, rng, &mut new_cuts)?;
            let leaf = tree
                .route_from(node_id, x)
                .ok_or_else(|| Error::Internal("regrown leaf lost its root".into()))?;
            return Ok(InsertOutcome {
                kind: InsertKind::LeafRefined,
                path,
                new_cuts,
                leaf,
                displaced: None,
            });
        }

        let cut = node.cut.ok_or_else(|| Error::Internal("internal node without cut".into()))?;
        let gain: f64 = perimeter_gains(node.hull.pair_hulls(), &grown)?.iter().sum();
        let t_new = t_parent + sample_cut_cost(cfg.rate_scale * gain, rng);
        if t_new < cut.t && t_new < tau {
            return restructure(tree, store, node_id, id, grown, t_new, path, rng);
        }

        let node = tree.node_mut(node_id);
        let mut ids = std::mem::take(&mut node.hull).into_ids();
        ids.push(id);
        node.hull = HullBundle::from_parts(store.d(), grown, ids)?;
        let children = node.children.ok_or_else(|| Error::Internal("cut without children".into()))?;
        node_id = children[cut.side_of(x).index()];
        t_parent = cut.t;
    }
}

#[allow(clippy::too_many_arguments)]
fn restructure<R: Rng + ?Sized>(
    tree: &mut BspTree,
    store: &PointStore,
    node_id: NodeId,
    id: usize,
    grown: Vec<Polygon2D>,
    t_new: f64,
    path: Vec<NodeId>,
    rng: &mut R,
) -> Result<InsertOutcome> {
    let x = store.point(id);
    let old = tree.node(node_id);
    let pairs = old.hull.pairs().to_vec();
    let mut chosen = None;
    for _ in 0..MAX_RESTRUCTURE_ATTEMPTS {
        let cut = gen_cut_in_region(&pairs, &grown, old.hull.pair_hulls(), t_new, rng)?;
        let k = pairs.iter().position(|&p| p == (cut.d1, cut.d2)).unwrap_or(0);
        let old_side = cut.side_of_point2(old.hull.pair_hulls()[k].centroid());
        let new_side = cut.side_of(x);
        if old_side != new_side {
            chosen = Some((cut, old_side));
            break;
        }
    }
    let (cut, old_side) =
        chosen.ok_or_else(|| Error::Internal("extension cut failed to separate the new point".into()))?;

    let mut ids = old.hull.point_ids().to_vec();
    ids.push(id);
    let hull = HullBundle::from_parts(store.d(), grown, ids)?;

    let old_node = std::mem::replace(tree.node_mut(node_id), Node::leaf(hull, LeafStats::Empty));
    let displaced = tree.push(old_node);
    let fresh = HullBundle::from_ids(store, vec![id])?;
    let stats = LeafStats::from_ids(fresh.point_ids(), store.labels());
    let leaf = tree.push(Node::leaf(fresh, stats));
    let children = match old_side {
        Side::Left => [displaced, leaf],
        Side::Right => [leaf, displaced],
    };
    let node = tree.node_mut(node_id);
    node.cut = Some(cut);
    node.children = Some(children);
    Ok(InsertOutcome {
        kind: InsertKind::Restructured,
        path,
        new_cuts: vec![cut],
        leaf,
        displaced: Some(displaced),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::hull_cut;
    use crate::validation::stats::mean_se;
    use crate::geometry::Direction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn square_store(extra: &[[f64; 2]]) -> PointStore {
        let mut rows = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        rows.extend_from_slice(extra);
        PointStore::from_rows(2, &rows).unwrap()
    }

    #[test]
    fn merge_inside_is_identity() {
        let store = square_store(&[[0.5, 0.5]]);
        let hull = HullBundle::from_ids(&store, vec![0, 1, 2, 3]).unwrap();
        let merged = merge_point(&hull, &store, 4).unwrap();
        assert_eq!(merged.pair_hulls(), hull.pair_hulls());
        assert_eq!(extension_rate(&hull, &merged, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn merge_outside_square_gives_pentagon() {
        let store = square_store(&[[2.0, 0.5]]);
        let hull = HullBundle::from_ids(&store, vec![0, 1, 2, 3]).unwrap();
        let merged = merge_point(&hull, &store, 4).unwrap();
        assert_eq!(merged.pair_hulls()[0].len(), 5);
        let expected = 3.0 + 2.0 * 1.25f64.sqrt();
        assert!((merged.total_perimeter() - expected).abs() < 1e-12);
        let lambda = extension_rate(&hull, &merged, 1.0).unwrap();
        assert!((lambda - (expected - 4.0)).abs() < 1e-12);
        assert!((extension_rate(&hull, &merged, 0.5).unwrap() - 0.5 * lambda).abs() < 1e-12);
        let again = merge_point(&merged, &store, 4).unwrap();
        assert_eq!(again, merged);
    }

    #[test]
    fn growth_in_one_pair_only() {
        let rows = [[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.5, 0.5, 0.5]];
        let store = PointStore::from_rows(3, &rows).unwrap();
        let hull = HullBundle::from_ids(&store, vec![0, 1, 2, 3]).unwrap();
        let merged = merge_point(&hull, &store, 4).unwrap();
        let gains: Vec<f64> = hull.perimeters().zip(merged.perimeters()).map(|(a, b)| b - a).collect();
        let lambda = extension_rate(&hull, &merged, 1.0).unwrap();
        assert!((lambda - gains.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn gen_cut_requires_extension() {
        let store = square_store(&[]);
        let hull = HullBundle::from_ids(&store, vec![0, 1, 2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(gen_cut_not_crossing(&hull, &hull, 0.1, &mut rng), Err(Error::NoExtensionRegion)));
    }

    #[test]
    fn gen_cut_separates_square_from_new_point() {
        let store = square_store(&[[2.0, 0.5]]);
        let old = HullBundle::from_ids(&store, vec![0, 1, 2, 3]).unwrap();
        let new = merge_point(&old, &store, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let cut = gen_cut_not_crossing(&new, &old, 0.2, &mut rng).unwrap();
            let sides: Vec<Side> = (0..4).map(|i| cut.side_of(store.point(i))).collect();
            assert!(sides.iter().all(|&s| s == sides[0]));
            assert_ne!(cut.side_of(store.point(4)), sides[0]);
            assert_eq!(cut.t, 0.2);
        }
    }

    #[test]
    fn gen_cut_angle_density_is_width_gain() {
        // acceptance probability of the thinning step equals gain / new perimeter
        let store = square_store(&[[2.0, 0.5]]);
        let old = HullBundle::from_ids(&store, vec![0, 1, 2, 3]).unwrap();
        let new = merge_point(&old, &store, 4).unwrap();
        let (grown, inner) = (&new.pair_hulls()[0], &old.pair_hulls()[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let accepted: Vec<f64> = (0..n)
            .map(|_| {
                let theta = sample_direction(grown, &mut rng).unwrap();
                let ratio = inner.width(theta) / grown.width(theta);
                if rng.random::<f64>() < 1.0 - ratio { 1.0 } else { 0.0 }
            })
            .collect();
        let m = mean_se(&accepted);
        let expected = (new.total_perimeter() - 4.0) / new.total_perimeter();
        assert!((expected - 0.236).abs() < 1e-3);
        assert!((m.mean - expected).abs() < 3.0 * m.se, "{m:?} vs {expected}");
    }

    fn one_cut_tree(store: &PointStore) -> BspTree {
        // points in [0.2, 0.8]^2 split by the line x = 0.5 at time 0.5
        let cut = Cut { d1: 0, d2: 1, theta: Direction::new(PI).unwrap(), s: -0.5, t: 0.5 };
        let all: Vec<usize> = (0..store.len()).collect();
        let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| cut.side_of(store.point(i)) == Side::Left);
        let leaf = |ids: Vec<usize>| {
            let h = HullBundle::from_ids(store, ids).unwrap();
            Node::leaf(h, LeafStats::Empty)
        };
        let root = Node {
            hull: HullBundle::from_ids(store, all).unwrap(),
            cut: Some(cut),
            children: Some([1, 2]),
            stats: LeafStats::Empty,
        };
        BspTree::from_nodes(vec![root, leaf(l), leaf(r)], Some(0))
    }

    #[test]
    fn restructure_frequency_matches_exponential_cdf() {
        let rows = [[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8], [0.3, 0.5], [0.7, 0.5], [0.95, 0.5]];
        let mut store = PointStore::from_rows(2, &rows[..6]).unwrap();
        let base = one_cut_tree(&store);
        store.push(&rows[6], None).unwrap();
        let old = base.node(0).hull.clone();
        let grown = merge_point(&old, &store, 6).unwrap();
        let lambda = extension_rate(&old, &grown, 1.0).unwrap();
        let tau = 1.0;
        let expected = 1.0 - (-lambda * 0.5f64.min(tau)).exp();
        let cfg = TreeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits: Vec<f64> = (0..10_000)
            .map(|_| {
                let mut tree = base.clone();
                let out = insert(&mut tree, &store, 6, tau, &cfg, &mut rng).unwrap();
                if out.kind == InsertKind::Restructured { 1.0 } else { 0.0 }
            })
            .collect();
        let m = mean_se(&hits);
        assert!((m.mean - expected).abs() < 3.0 * m.se, "{m:?} vs {expected}");
    }

    #[test]
    fn restructure_builds_expected_shape() {
        let rows = [[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8], [0.3, 0.5], [0.7, 0.5], [1.0, 1.0]];
        let mut store = PointStore::from_rows(2, &rows[..6]).unwrap();
        let base = one_cut_tree(&store);
        store.push(&rows[6], None).unwrap();
        let cfg = TreeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut seen = false;
        for _ in 0..200 {
            let mut tree = base.clone();
            let out = insert(&mut tree, &store, 6, 1.0, &cfg, &mut rng).unwrap();
            assert!(tree.audit(&store, 1.0).is_empty());
            if out.kind == InsertKind::Restructured {
                seen = true;
                let displaced = out.displaced.unwrap();
                assert_eq!(tree.node(displaced).hull.len(), 6);
                assert_eq!(tree.node(out.leaf).hull.point_ids(), &[6]);
                assert_eq!(out.new_cuts.len(), 1);
                assert!(out.new_cuts[0].t < 0.5);
                assert_eq!(tree.cut_count(), 2);
            }
        }
        assert!(seen);
    }

    #[test]
    fn first_point_makes_single_leaf() {
        let store = PointStore::from_rows(2, &[[0.4, 0.6]]).unwrap();
        let mut tree = BspTree::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = insert(&mut tree, &store, 0, 1.0, &TreeConfig::default(), &mut rng).unwrap();
        assert_eq!(out.kind, InsertKind::MergedSmall);
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(route(&tree, &[0.9, 0.9]), tree.root());
    }

    #[test]
    fn three_points_stay_one_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let rows: Vec<[f64; 2]> = (0..3).map(|_| [rng.random(), rng.random()]).collect();
            let store = PointStore::from_rows(2, &rows).unwrap();
            let mut tree = BspTree::new();
            for i in 0..3 {
                insert(&mut tree, &store, i, 100.0, &TreeConfig::default(), &mut rng).unwrap();
            }
            assert_eq!(tree.leaf_count(), 1);
            assert_eq!(tree.node(tree.root().unwrap()).hull.len(), 3);
        }
    }

    #[test]
    fn rejects_points_outside_unit_cube() {
        let store = PointStore::from_rows(2, &[[0.4, 1.5]]).unwrap();
        let mut tree = BspTree::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = insert(&mut tree, &store, 0, 1.0, &TreeConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, Error::OutsideDomain { .. }));
        assert!(tree.is_empty());
        let relaxed = TreeConfig { enforce_domain: false, ..TreeConfig::default() };
        insert(&mut tree, &store, 0, 1.0, &relaxed, &mut rng).unwrap();
    }

    #[test]
    fn routing_after_single_cut() {
        let rows = [[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8], [0.3, 0.5], [0.7, 0.5]];
        let store = PointStore::from_rows(2, &rows).unwrap();
        let tree = one_cut_tree(&store);
        // theta = pi projects onto -x, so x > 0.5 lies left
        assert_eq!(route(&tree, &[0.9, 0.9]), Some(1));
        assert_eq!(route(&tree, &[0.1, 0.9]), Some(2));
        // on the line: ties route right
        assert_eq!(route(&tree, &[0.5, 0.1]), Some(2));
    }

    #[test]
    fn streaming_insertions_keep_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 3] {
            let n = 400;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
            let store = PointStore::from_rows(d, &rows).unwrap();
            let mut tree = BspTree::new();
            let cfg = TreeConfig::default();
            let mut leaves = 0;
            let mut cuts_before: Vec<Cut> = Vec::new();
            for i in 0..n {
                let tau = ((i + 1) as f64).powf(1.0 / (d as f64 + 2.0));
                let out = insert(&mut tree, &store, i, tau, &cfg, &mut rng).unwrap();
                assert_eq!(tree.route(store.point(i)), Some(out.leaf));
                let now = tree.leaf_count();
                assert!(now >= leaves);
                leaves = now;
                let cuts = tree.cuts();
                for c in &cuts_before {
                    assert!(cuts.contains(c));
                }
                cuts_before = cuts;
                if let Some(dsp) = out.displaced {
                    let x_side = out.new_cuts[0].side_of(store.point(i));
                    for &p in tree.node(dsp).hull.point_ids() {
                        assert_ne!(out.new_cuts[0].side_of(store.point(p)), x_side);
                    }
                }
            }
            let tau_n = (n as f64).powf(1.0 / (d as f64 + 2.0));
            let issues = tree.audit(&store, tau_n);
            assert!(issues.is_empty(), "{issues:?}");
            assert!(tree.cut_count() > 0);
        }
    }

    #[test]
    fn refined_leaf_matches_hull_cut_shape() {
        // a leaf visited with a large budget is regrown like a batch tree
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<[f64; 2]> = (0..30).map(|_| [rng.random(), rng.random()]).collect();
        let store = PointStore::from_rows(2, &rows).unwrap();
        let batch = hull_cut(&store, (0..30).collect(), 50.0, 0.0, &TreeConfig::default(), &mut rng).unwrap();
        let mut tree = BspTree::new();
        for i in 0..30 {
            insert(&mut tree, &store, i, 50.0, &TreeConfig::default(), &mut rng).unwrap();
        }
        // with a huge budget every block above the size threshold gets cut
        for t in [&batch, &tree] {
            for leaf in t.leaves() {
                assert!(t.node(leaf).hull.len() <= 3);
            }
        }
    }
}
