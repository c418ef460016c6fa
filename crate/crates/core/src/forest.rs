//! Ensembles of online partition trees.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cut, Polygon2D};
use crate::online::insert;
use crate::partition::{BspTree, HullBundle, Node, NodeId, TreeConfig};
use crate::store::{Label, Labels, LeafStats, PointStore};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `scale * n^exponent`.
    PowerRule,
    /// Constant `scale`.
    Fixed,
    /// `scale * n^(1/(d+2))`; the exponent is pinned when the schedule is built.
    CustomScale,
}

/// Non-decreasing budget sequence `tau_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSchedule {
    pub kind: ScheduleKind,
    pub exponent: f64,
    pub scale: f64,
}

impl BudgetSchedule {
    /// `n^(1/(d+2))`.
    pub fn power_rule(d: usize) -> Self {
        Self { kind: ScheduleKind::PowerRule, exponent: 1.0 / (d as f64 + 2.0), scale: 1.0 }
    }

    pub fn fixed(tau: f64) -> Self {
        Self { kind: ScheduleKind::Fixed, exponent: 0.0, scale: tau }
    }

    pub fn custom_scale(d: usize, scale: f64) -> Self {
        Self { kind: ScheduleKind::CustomScale, exponent: 1.0 / (d as f64 + 2.0), scale }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) || !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "budget schedule needs finite non-negative scale and exponent, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Budget after `n >= 1` observations.
    pub fn budget(&self, n: u64) -> f64 {
        match self.kind {
            ScheduleKind::Fixed => self.scale,
            ScheduleKind::PowerRule | ScheduleKind::CustomScale => {
                self.scale * (n.max(1) as f64).powf(self.exponent)
            }
        }
    }
}

pub fn budget(n: u64, schedule: &BudgetSchedule) -> f64 {
    schedule.budget(n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub task: Task,
    pub schedule: BudgetSchedule,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl ForestConfig {
    /// 100 trees, `n^(1/(d+2))` budgets, default tree settings, seed 0.
    pub fn new(d: usize, task: Task) -> Self {
        Self {
            n_trees: 100,
            task,
            schedule: BudgetSchedule::power_rule(d),
            tree: TreeConfig::default(),
            seed: 0,
        }
    }

    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_schedule(mut self, schedule: BudgetSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_rate_scale(mut self, rate_scale: f64) -> Self {
        self.tree.rate_scale = rate_scale;
        self
    }

    pub fn with_min_points(mut self, min_points_to_cut: usize) -> Self {
        self.tree.min_points_to_cut = min_points_to_cut;
        self
    }
}

/// Random stream for tree `index`: stream `index` of the ChaCha8 generator
/// keyed by the master seed.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Clone, Debug)]
struct Member {
    tree: BspTree,
    rng: ChaCha8Rng,
}

#[derive(Clone, Debug)]
pub struct Forest {
    d: usize,
    config: ForestConfig,
    store: PointStore,
    members: Vec<Member>,
    n_seen: u64,
    feature_bounds: Option<Vec<[f64; 2]>>,
}

impl Forest {
    pub fn new(d: usize, config: ForestConfig) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("forests need at least two features".into()));
        }
        if config.n_trees == 0 {
            return Err(Error::InvalidArgument("forests need at least one tree".into()));
        }
        if !(config.tree.rate_scale > 0.0 && config.tree.rate_scale.is_finite()) {
            return Err(Error::InvalidArgument("rate scale must be positive".into()));
        }
        config.schedule.validate()?;
        let labels = match config.task {
            Task::Regression => Labels::Real(Vec::new()),
            Task::Classification => Labels::Class(Vec::new()),
        };
        let members = (0..config.n_trees)
            .map(|m| Member { tree: BspTree::new(), rng: tree_rng(config.seed, m) })
            .collect();
        Ok(Self { d, store: PointStore::with_labels(d, labels), config, members, n_seen: 0, feature_bounds: None })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn n_trees(&self) -> usize {
        self.members.len()
    }

    pub fn tree(&self, m: usize) -> &BspTree {
        &self.members[m].tree
    }

    pub fn trees(&self) -> impl Iterator<Item = &BspTree> {
        self.members.iter().map(|m| &m.tree)
    }

    pub fn store(&self) -> &PointStore {
        &self.store
    }

    /// Raw-feature `[min, max]` per dimension that inputs are rescaled with
    /// before they reach the forest. Stored with the model, never applied here.
    pub fn feature_bounds(&self) -> Option<&[[f64; 2]]> {
        self.feature_bounds.as_deref()
    }

    pub fn set_feature_bounds(&mut self, bounds: Option<Vec<[f64; 2]>>) -> Result<()> {
        if let Some(b) = &bounds {
            if b.len() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, got: b.len() });
            }
            if b.iter().any(|&[lo, hi]| !lo.is_finite() || !hi.is_finite() || hi < lo) {
                return Err(Error::InvalidArgument("feature bounds must be finite with min <= max".into()));
            }
        }
        self.feature_bounds = bounds;
        Ok(())
    }

    /// Budget currently in force.
    pub fn current_budget(&self) -> f64 {
        if self.n_seen == 0 {
            0.0
        } else {
            self.config.schedule.budget(self.n_seen)
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        Ok(())
    }

    /// Adds one labelled observation to every tree.
    pub fn observe(&mut self, x: &[f64], y: Label) -> Result<()> {
        self.check_point(x)?;
        match (self.config.task, y) {
            (Task::Regression, Label::Real(v)) if v.is_finite() => {}
            (Task::Classification, Label::Class(_)) => {}
            _ => return Err(Error::LabelMismatch),
        }
        if x.iter().any(|v| !v.is_finite())
            || (self.config.tree.enforce_domain && x.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::OutsideDomain { index: None });
        }
        let id = self.store.push(x, Some(y))?;
        self.n_seen += 1;
        let tau = self.config.schedule.budget(self.n_seen);
        let store = &self.store;
        let cfg = &self.config.tree;
        self.members
            .par_iter_mut()
            .map(|m| insert(&mut m.tree, store, id, tau, cfg, &mut m.rng).map(|_| ()))
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    /// Observes a batch of rows in order.
    pub fn observe_all<R: AsRef<[f64]>>(&mut self, rows: &[R], labels: &[Label]) -> Result<()> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument("features and labels differ in length".into()));
        }
        for (x, &y) in rows.iter().zip(labels) {
            self.observe(x.as_ref(), y)?;
        }
        Ok(())
    }

    fn leaf_stats<'a>(&'a self, x: &'a [f64]) -> Result<impl Iterator<Item = &'a LeafStats> + 'a> {
        self.check_point(x)?;
        if self.n_seen == 0 {
            return Err(Error::Untrained);
        }
        Ok(self.members.iter().map(move |m| {
            let leaf = m.tree.route(x).expect("trained tree has a root");
            &m.tree.node(leaf).stats
        }))
    }

    /// Mean over trees of the routed leaf's label mean.
    pub fn predict_regression(&self, x: &[f64]) -> Result<f64> {
        if self.config.task != Task::Regression {
            return Err(Error::LabelMismatch);
        }
        let mut sum = 0.0;
        for stats in self.leaf_stats(x)? {
            sum += stats.mean().ok_or_else(|| Error::Internal("leaf without labels".into()))?;
        }
        Ok(sum / self.members.len() as f64)
    }

    /// Majority vote over the trees' leaf majorities; ties go to the smallest class.
    pub fn predict_class(&self, x: &[f64]) -> Result<u32> {
        if self.config.task != Task::Classification {
            return Err(Error::LabelMismatch);
        }
        let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
        for stats in self.leaf_stats(x)? {
            let c = stats.majority_class().ok_or_else(|| Error::Internal("leaf without labels".into()))?;
            *votes.entry(c).or_insert(0) += 1;
        }
        let mut best = None;
        for (&c, &n) in &votes {
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((c, n));
            }
        }
        best.map(|(c, _)| c).ok_or(Error::Untrained)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        match self.config.task {
            Task::Regression => self.predict_regression(x).map(Label::Real),
            Task::Classification => self.predict_class(x).map(Label::Class),
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        let features = (0..self.store.len()).map(|i| self.store.point(i).to_vec()).collect();
        ModelDocument {
            version: MODEL_VERSION,
            d: self.d,
            m: self.members.len(),
            task: self.config.task,
            seed: self.config.seed,
            schedule: self.config.schedule.clone(),
            rate_scale: self.config.tree.rate_scale,
            min_points_to_cut: self.config.tree.min_points_to_cut,
            enforce_domain: self.config.tree.enforce_domain,
            n_seen: self.n_seen,
            feature_bounds: self.feature_bounds.clone(),
            points: PointsDocument { features, labels: self.store.labels().clone() },
            trees: self
                .members
                .iter()
                .map(|m| TreeDocument {
                    rng_word_pos: m.rng.get_word_pos().to_string(),
                    nodes: tree_to_preorder(&m.tree),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        match version {
            Some(v) if v == MODEL_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::VersionMismatch { found: v as u32, expected: MODEL_VERSION });
            }
            None => return Err(Error::MalformedModel("missing version".into())),
        }
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::MalformedModel(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_VERSION {
            return Err(Error::VersionMismatch { found: doc.version, expected: MODEL_VERSION });
        }
        if doc.trees.len() != doc.m {
            return Err(Error::MalformedModel(format!("declared {} trees, found {}", doc.m, doc.trees.len())));
        }
        let config = ForestConfig {
            n_trees: doc.m,
            task: doc.task,
            schedule: doc.schedule,
            tree: TreeConfig {
                min_points_to_cut: doc.min_points_to_cut,
                rate_scale: doc.rate_scale,
                enforce_domain: doc.enforce_domain,
            },
            seed: doc.seed,
        };
        let mut forest = Forest::new(doc.d, config)?;
        match (&doc.points.labels, doc.task) {
            (Labels::Real(_), Task::Regression) | (Labels::Class(_), Task::Classification) => {}
            _ => return Err(Error::MalformedModel("labels do not match task".into())),
        }
        let mut coords = Vec::with_capacity(doc.points.features.len() * doc.d);
        for row in &doc.points.features {
            if row.len() != doc.d {
                return Err(Error::MalformedModel("feature row has wrong dimension".into()));
            }
            coords.extend_from_slice(row);
        }
        forest.store = PointStore::from_parts(doc.d, coords, doc.points.labels)?;
        if forest.store.len() as u64 != doc.n_seen {
            return Err(Error::MalformedModel("point count does not match n_seen".into()));
        }
        forest.n_seen = doc.n_seen;
        forest.set_feature_bounds(doc.feature_bounds).map_err(|e| Error::MalformedModel(e.to_string()))?;
        for (m, (member, tdoc)) in forest.members.iter_mut().zip(doc.trees).enumerate() {
            let pos: u128 = tdoc
                .rng_word_pos
                .parse()
                .map_err(|_| Error::MalformedModel(format!("tree {m}: bad rng position")))?;
            member.rng.set_word_pos(pos);
            member.tree = tree_from_preorder(tdoc.nodes, doc.d, forest.store.len())
                .map_err(|e| Error::MalformedModel(format!("tree {m}: {e}")))?;
            if (forest.n_seen > 0) == member.tree.is_empty() {
                return Err(Error::MalformedModel(format!("tree {m}: emptiness disagrees with n_seen")));
            }
        }
        Ok(forest)
    }
}

/// Serialized model: configuration, observed points, and every tree as a
/// preorder node list (an internal node is followed by its left subtree,
/// then its right subtree).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub task: Task,
    pub seed: u64,
    pub schedule: BudgetSchedule,
    pub rate_scale: f64,
    pub min_points_to_cut: usize,
    pub enforce_domain: bool,
    pub n_seen: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_bounds: Option<Vec<[f64; 2]>>,
    pub points: PointsDocument,
    pub trees: Vec<TreeDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsDocument {
    pub features: Vec<Vec<f64>>,
    pub labels: Labels,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    /// ChaCha8 word position, as a decimal string (it is a u128).
    pub rng_word_pos: String,
    pub nodes: Vec<NodeDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    /// One vertex list per coordinate pair, pairs in lexicographic order.
    pub hull: Vec<Polygon2D>,
    pub cut: Option<Cut>,
    pub stats: Option<LeafStats>,
    pub point_ids: Vec<usize>,
}

fn tree_to_preorder(tree: &BspTree) -> Vec<NodeDocument> {
    tree.preorder()
        .into_iter()
        .map(|id| {
            let node = tree.node(id);
            NodeDocument {
                hull: node.hull.pair_hulls().to_vec(),
                cut: node.cut,
                stats: node.is_leaf().then(|| node.stats.clone()),
                point_ids: node.hull.point_ids().to_vec(),
            }
        })
        .collect()
}

fn tree_from_preorder(docs: Vec<NodeDocument>, d: usize, n_points: usize) -> Result<BspTree> {
    if docs.is_empty() {
        return Ok(BspTree::new());
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(docs.len());
    let mut pending: Vec<(NodeId, usize)> = Vec::new();
    for (i, doc) in docs.into_iter().enumerate() {
        if i > 0 {
            let (parent, slot) = pending
                .pop()
                .ok_or_else(|| Error::MalformedModel("nodes after a complete tree".into()))?;
            if let Some(ch) = nodes[parent].children.as_mut() {
                ch[slot] = i;
            }
        }
        if doc.point_ids.is_empty() || doc.point_ids.iter().any(|&p| p >= n_points) {
            return Err(Error::MalformedModel(format!("node {i}: bad point ids")));
        }
        if doc.hull.iter().any(|h| !h.is_valid()) {
            return Err(Error::MalformedModel(format!("node {i}: invalid hull polygon")));
        }
        let hull = HullBundle::from_parts(d, doc.hull, doc.point_ids)?;
        let node = match (doc.cut, doc.stats) {
            (Some(cut), None) => {
                if cut.d1 >= cut.d2 || cut.d2 >= d || !cut.s.is_finite() || !cut.t.is_finite() {
                    return Err(Error::MalformedModel(format!("node {i}: bad cut")));
                }
                pending.push((i, 1));
                pending.push((i, 0));
                Node { hull, cut: Some(cut), children: Some([usize::MAX; 2]), stats: LeafStats::Empty }
            }
            (None, Some(stats)) => Node::leaf(hull, stats),
            _ => return Err(Error::MalformedModel(format!("node {i}: expected either a cut or leaf stats"))),
        };
        nodes.push(node);
    }
    if !pending.is_empty() {
        return Err(Error::MalformedModel("truncated preorder node list".into()));
    }
    Ok(BspTree::from_nodes(nodes, Some(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn reg_forest(m: usize, seed: u64) -> Forest {
        Forest::new(2, ForestConfig::new(2, Task::Regression).with_trees(m).with_seed(seed)).unwrap()
    }

    #[test]
    fn power_rule_budgets() {
        assert_eq!(BudgetSchedule::power_rule(2).budget(1), 1.0);
        assert!((BudgetSchedule::power_rule(5).budget(128) - 2.0).abs() < 1e-12);
        let fixed = BudgetSchedule::fixed(0.8);
        assert!([1, 10, 1000].iter().all(|&n| fixed.budget(n) == 0.8));
        let custom = BudgetSchedule::custom_scale(2, 0.5);
        assert!((custom.budget(16) - 1.0).abs() < 1e-12);
        let s = BudgetSchedule::power_rule(3);
        assert!((1..500).all(|n| s.budget(n + 1) >= s.budget(n)));
    }

    #[test]
    fn single_observation_predicts_its_label() {
        let mut f = reg_forest(5, 1);
        f.observe(&[0.3, 0.4], Label::Real(2.5)).unwrap();
        assert!(f.trees().all(|t| t.leaf_count() == 1));
        assert_eq!(f.predict_regression(&[0.9, 0.1]).unwrap(), 2.5);

        let mut c = Forest::new(2, ForestConfig::new(2, Task::Classification).with_trees(3)).unwrap();
        c.observe(&[0.3, 0.4], Label::Class(7)).unwrap();
        assert_eq!(c.predict_class(&[0.0, 1.0]).unwrap(), 7);
    }

    #[test]
    fn untrained_and_mismatch_errors() {
        let mut f = reg_forest(2, 0);
        assert!(matches!(f.predict_regression(&[0.1, 0.1]), Err(Error::Untrained)));
        assert!(matches!(f.observe(&[0.1], Label::Real(1.0)), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(f.observe(&[0.1, 0.2], Label::Class(1)), Err(Error::LabelMismatch)));
        assert!(matches!(f.observe(&[0.1, 1.2], Label::Real(1.0)), Err(Error::OutsideDomain { .. })));
        assert_eq!(f.n_seen(), 0);
        assert!(f.store().is_empty());
        assert!(matches!(f.predict_class(&[0.1, 0.1]), Err(Error::LabelMismatch)));
    }

    #[test]
    fn leaf_with_two_labels_averages() {
        let mut f = reg_forest(1, 0);
        f.observe(&[0.2, 0.2], Label::Real(1.0)).unwrap();
        f.observe(&[0.25, 0.2], Label::Real(3.0)).unwrap();
        assert_eq!(f.predict_regression(&[0.2, 0.2]).unwrap(), 2.0);
    }

    #[test]
    fn constant_labels_predict_constant() {
        let mut f = reg_forest(10, 4);
        let mut rng = tree_rng(99, 0);
        for _ in 0..300 {
            f.observe(&[rng.random(), rng.random()], Label::Real(4.25)).unwrap();
        }
        for _ in 0..50 {
            assert_eq!(f.predict_regression(&[rng.random(), rng.random()]).unwrap(), 4.25);
        }
    }

    #[test]
    fn leaves_partition_observed_ids() {
        let mut f = reg_forest(8, 5);
        let mut rng = tree_rng(5, 100);
        let n = 250;
        for i in 0..n {
            f.observe(&[rng.random(), rng.random()], Label::Real(i as f64)).unwrap();
        }
        for t in f.trees() {
            let mut ids: Vec<usize> =
                t.leaves().into_iter().flat_map(|l| t.node(l).hull.point_ids().to_vec()).collect();
            ids.sort_unstable();
            assert_eq!(ids, (0..n).collect::<Vec<_>>());
            assert!(t.audit(f.store(), f.current_budget()).is_empty());
        }
    }

    #[test]
    fn labels_do_not_shape_partitions() {
        let mut rng = tree_rng(6, 0);
        let xs: Vec<[f64; 2]> = (0..200).map(|_| [rng.random(), rng.random()]).collect();
        let mut a = reg_forest(4, 9);
        let mut b = reg_forest(4, 9);
        for (i, x) in xs.iter().enumerate() {
            a.observe(x, Label::Real(i as f64)).unwrap();
            b.observe(x, Label::Real(-(i as f64) * 3.0)).unwrap();
        }
        for (ta, tb) in a.trees().zip(b.trees()) {
            assert_eq!(ta.cuts(), tb.cuts());
            assert_eq!(ta.preorder().len(), tb.preorder().len());
        }
    }

    #[test]
    fn growing_the_ensemble_keeps_existing_trees() {
        let mut rng = tree_rng(7, 0);
        let xs: Vec<[f64; 2]> = (0..150).map(|_| [rng.random(), rng.random()]).collect();
        let mut small = reg_forest(10, 3);
        let mut large = reg_forest(20, 3);
        for x in &xs {
            small.observe(x, Label::Real(x[0])).unwrap();
            large.observe(x, Label::Real(x[0])).unwrap();
        }
        for m in 0..10 {
            assert_eq!(small.tree(m), large.tree(m));
        }
    }

    #[test]
    fn class_vote_tie_goes_to_smallest() {
        let mut f = Forest::new(2, ForestConfig::new(2, Task::Classification).with_trees(1)).unwrap();
        f.observe(&[0.1, 0.1], Label::Class(1)).unwrap();
        f.observe(&[0.2, 0.1], Label::Class(0)).unwrap();
        assert_eq!(f.predict_class(&[0.1, 0.1]).unwrap(), 0);
    }

    #[test]
    fn empty_forest_round_trip() {
        let f = reg_forest(3, 11);
        let back = Forest::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.to_json().unwrap(), f.to_json().unwrap());
        assert_eq!(back.n_seen(), 0);
    }

    #[test]
    fn trained_round_trip_keeps_predictions_and_resumes() {
        let mut rng = tree_rng(12, 0);
        let mut f = reg_forest(6, 12);
        for _ in 0..100 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            f.observe(&x, Label::Real(x[0] + x[1])).unwrap();
        }
        let json = f.to_json().unwrap();
        let mut g = Forest::from_json(&json).unwrap();
        assert_eq!(g.to_json().unwrap(), json);
        for _ in 0..100 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            assert_eq!(
                f.predict_regression(&x).unwrap().to_bits(),
                g.predict_regression(&x).unwrap().to_bits()
            );
        }
        let x = [0.5, 0.5];
        f.observe(&x, Label::Real(1.0)).unwrap();
        g.observe(&x, Label::Real(1.0)).unwrap();
        assert_eq!(f.to_json().unwrap(), g.to_json().unwrap());
    }

    #[test]
    fn classification_round_trip() {
        let mut f = Forest::new(2, ForestConfig::new(2, Task::Classification).with_trees(4).with_seed(2)).unwrap();
        let mut rng = tree_rng(21, 0);
        for _ in 0..80 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            f.observe(&x, Label::Class(u32::from(x[0] > x[1]) * 3)).unwrap();
        }
        let g = Forest::from_json(&f.to_json().unwrap()).unwrap();
        for _ in 0..50 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            assert_eq!(f.predict_class(&x).unwrap(), g.predict_class(&x).unwrap());
        }
    }

    #[test]
    fn feature_bounds_survive_round_trip() {
        let mut f = reg_forest(2, 3);
        assert!(f.set_feature_bounds(Some(vec![[0.0, 1.0]])).is_err());
        f.set_feature_bounds(Some(vec![[0.0, 10.0], [-1.0, 1.0]])).unwrap();
        let back = Forest::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.feature_bounds(), Some(&[[0.0, 10.0], [-1.0, 1.0]][..]));
    }

    #[test]
    fn corrupted_documents_are_rejected() {
        let mut f = reg_forest(2, 1);
        for i in 0..20 {
            let v = i as f64 / 20.0;
            f.observe(&[v, 1.0 - v * v], Label::Real(v)).unwrap();
        }
        let json = f.to_json().unwrap();
        assert!(matches!(Forest::from_json(&json[..json.len() / 2]), Err(Error::Json(_))));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["version"] = 99.into();
        assert!(matches!(Forest::from_json(&v.to_string()), Err(Error::VersionMismatch { .. })));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["trees"][0]["nodes"].as_array_mut().unwrap().pop();
        assert!(matches!(Forest::from_json(&v.to_string()), Err(Error::MalformedModel(_))));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["M"] = 3.into();
        assert!(matches!(Forest::from_json(&v.to_string()), Err(Error::MalformedModel(_))));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["trees"][1]["nodes"][0]["point_ids"] = serde_json::json!([1000]);
        assert!(matches!(Forest::from_json(&v.to_string()), Err(Error::MalformedModel(_))));
    }
}
