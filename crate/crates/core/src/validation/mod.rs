//! Monte Carlo checks of the partition process with JSON-serializable reports.
//!
//! Replicate `r` of a test seeded with `seed` draws from stream `r` of a
//! ChaCha8 generator keyed by `seed`, so reports are reproducible and
//! replicates run in parallel.

pub mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon2D, EPS};
use crate::online::insert;
use crate::partition::{hull_cut, sample_polygon_partition, BspTree, TreeConfig};
use crate::store::PointStore;
use stats::{ks_one_sample, ks_two_sample, mean_se};

pub const ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One comparison `statistic <relation> threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, relation: Relation::AtMost, threshold, passed: statistic <= threshold }
    }

    pub fn at_least(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, relation: Relation::AtLeast, threshold, passed: statistic >= threshold }
    }
}

/// Outcome of one validation test. `statistic` and `threshold` repeat the
/// first check; `passed` holds when every check passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub seed: u64,
    pub replicates: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

impl TestReport {
    fn new(name: &str, seed: u64, replicates: usize, checks: Vec<Check>, details: serde_json::Value) -> Self {
        let first = &checks[0];
        Self {
            name: name.to_string(),
            seed,
            replicates,
            statistic: first.statistic,
            threshold: first.threshold,
            passed: checks.iter().all(|c| c.passed),
            checks,
            details,
        }
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let rel = if c.relation == Relation::AtMost { "<=" } else { ">=" };
                let mark = if c.passed { "" } else { " FAIL" };
                format!("{} {:.4} {rel} {:.4}{mark}", c.name, c.statistic, c.threshold)
            })
            .collect();
        format!("{} [{}]: {}", self.name, if self.passed { "pass" } else { "fail" }, parts.join("; "))
    }
}

pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

fn run_replicates<T, F>(replicates: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be positive".into()));
    }
    (0..replicates).into_par_iter().map(|r| f(&mut replicate_rng(seed, r))).collect()
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("budget must be finite and non-negative, got {tau}")))
    }
}

fn mean_within(name: &str, diff: f64, se: f64) -> Check {
    Check::at_most(name, diff.abs(), 3.0 * se)
}

fn ks_check(name: &str, p_value: f64) -> Check {
    Check::at_least(name, p_value, ALPHA)
}

/// Distribution of observed gaps when a rate-`lambda` Poisson process is
/// watched on `[0, len]`: the gap before the first point plus every gap
/// between consecutive points, pooled.
pub fn windowed_gap_cdf(g: f64, lambda: f64, len: f64) -> f64 {
    if g <= 0.0 {
        0.0
    } else if g >= len {
        1.0
    } else {
        1.0 - (1.0 - g / len) * (-lambda * g).exp()
    }
}

/// Crossings of the segment `a -> b` by pure planar partitions of the unit
/// square at budget `tau` form a Poisson process of intensity `2 tau`.
pub fn poisson_slice_test(tau: f64, a: Point2, b: Point2, replicates: usize, seed: u64) -> Result<TestReport> {
    check_tau(tau)?;
    let square = Polygon2D::unit_square();
    if !square.contains(a, EPS) || !square.contains(b, EPS) {
        return Err(Error::SegmentOutsideDomain);
    }
    let len = a.dist(b);
    if len <= 0.0 {
        return Err(Error::InvalidArgument("segment has zero length".into()));
    }
    let runs = run_replicates(replicates, seed, |rng| {
        let part = sample_polygon_partition(&square, tau, rng)?;
        part.line_slice(a, b)
    })?;
    let counts: Vec<f64> = runs.iter().map(|c| c.len() as f64).collect();
    let mut gaps = Vec::new();
    for crossings in &runs {
        let mut prev = 0.0;
        for &u in crossings {
            gaps.push((u - prev) * len);
            prev = u;
        }
    }
    let lambda = 2.0 * tau;
    let expected = lambda * len;
    let m = mean_se(&counts);
    let mut checks = vec![mean_within("|mean crossings - 2 tau L|", m.mean - expected, m.se)];
    if !gaps.is_empty() {
        let ks = ks_one_sample(&gaps, |g| windowed_gap_cdf(g, lambda, len));
        checks.push(ks_check("gap KS p-value", ks.p_value));
    }
    let details = serde_json::json!({
        "tau": tau,
        "segment": [a, b],
        "length": len,
        "expected_mean": expected,
        "mean": m.mean,
        "se": m.se,
        "pooled_gaps": gaps.len(),
        "counts": counts,
    });
    Ok(TestReport::new("poisson_slice", seed, replicates, checks, details))
}

/// Cut counts of partitions restricted to `sub` against partitions sampled
/// directly on `sub`.
pub fn consistency_restriction_test(tau: f64, sub: &Polygon2D, replicates: usize, seed: u64) -> Result<TestReport> {
    check_tau(tau)?;
    let square = Polygon2D::unit_square();
    if sub.area() <= 0.0 || !sub.is_valid() || !sub.vertices().iter().all(|&v| square.contains(v, EPS)) {
        return Err(Error::InvalidArgument("subdomain must be a convex polygon inside the unit square".into()));
    }
    let pairs = run_replicates(replicates, seed, |rng| {
        let restricted = sample_polygon_partition(&square, tau, rng)?.restriction_cut_count(sub);
        let direct = sample_polygon_partition(sub, tau, rng)?.cut_count();
        Ok((restricted as f64, direct as f64))
    })?;
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let ma = mean_se(&a);
    let mb = mean_se(&b);
    let se = (ma.se * ma.se + mb.se * mb.se).sqrt();
    let ks = ks_two_sample(&a, &b);
    let checks = vec![
        mean_within("|mean restricted - mean direct|", ma.mean - mb.mean, se),
        ks_check("count KS p-value", ks.p_value),
    ];
    let details = serde_json::json!({
        "tau": tau,
        "subdomain": sub,
        "restricted_mean": ma.mean,
        "direct_mean": mb.mean,
        "restricted": a,
        "direct": b,
    });
    Ok(TestReport::new("consistency_restriction", seed, replicates, checks, details))
}

/// Points drawn per replicate for the `d = 3` cut-count check.
pub const DENSE_SAMPLE: usize = 1000;

pub fn cut_count_bound(tau: f64, d: usize) -> f64 {
    let d = d as f64;
    (1.0 + tau).powf(d) * (d * (d - 1.0)).exp()
}

/// Mean cut count against `(1 + tau)^d e^{d(d-1)}`.
pub fn leaf_count_bound_test(tau: f64, d: usize, replicates: usize, seed: u64) -> Result<TestReport> {
    check_tau(tau)?;
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidArgument("cut-count bound test supports d = 2 or 3".into()));
    }
    if tau > 1.5 {
        return Err(Error::InvalidArgument("cut-count bound test is limited to tau <= 1.5".into()));
    }
    let square = Polygon2D::unit_square();
    let cfg = TreeConfig { min_points_to_cut: 0, ..TreeConfig::default() };
    let counts = run_replicates(replicates, seed, |rng| {
        if d == 2 {
            return Ok(sample_polygon_partition(&square, tau, rng)?.cut_count() as f64);
        }
        let rows: Vec<Vec<f64>> = (0..DENSE_SAMPLE).map(|_| (0..d).map(|_| rand::Rng::random(rng)).collect()).collect();
        let store = PointStore::from_rows(d, &rows)?;
        let tree = hull_cut(&store, (0..DENSE_SAMPLE).collect(), tau, 0.0, &cfg, rng)?;
        Ok(tree.cut_count() as f64)
    })?;
    let m = mean_se(&counts);
    let bound = cut_count_bound(tau, d);
    let checks = vec![Check::at_most("mean cut count", m.mean, bound)];
    let details = serde_json::json!({ "tau": tau, "d": d, "mean": m.mean, "se": m.se, "counts": counts });
    Ok(TestReport::new("leaf_count_bound", seed, replicates, checks, details))
}

/// `min(1, d (1 + tau delta / sqrt d) exp(-tau delta / sqrt d))`.
pub fn diameter_tail_bound(tau: f64, delta: f64, d: usize) -> f64 {
    let d = d as f64;
    let z = tau * delta / d.sqrt();
    (d * (1.0 + z) * (-z).exp()).min(1.0)
}

/// Diameter of the planar cell containing `x`: tail frequencies and second
/// moment against their bounds.
pub fn diameter_tail_test(tau: f64, x: Point2, deltas: &[f64], replicates: usize, seed: u64) -> Result<TestReport> {
    check_tau(tau)?;
    if tau <= 0.0 {
        return Err(Error::InvalidArgument("diameter test needs a positive budget".into()));
    }
    if !(x.x > 0.0 && x.x < 1.0 && x.y > 0.0 && x.y < 1.0) {
        return Err(Error::OutsideDomain { index: None });
    }
    let square = Polygon2D::unit_square();
    let diam = run_replicates(replicates, seed, |rng| {
        Ok(sample_polygon_partition(&square, tau, rng)?.locate(x).polygon.diameter())
    })?;
    let n = replicates as f64;
    let mut checks = Vec::new();
    let sq: Vec<f64> = diam.iter().map(|v| v * v).collect();
    let m2 = mean_se(&sq);
    checks.push(Check::at_most("mean squared diameter", m2.mean, 8.0 / (tau * tau)));
    let mut tails = Vec::new();
    for &delta in deltas {
        let freq = diam.iter().filter(|&&v| v >= delta).count() as f64 / n;
        let se = (freq * (1.0 - freq) / n).sqrt();
        let bound = diameter_tail_bound(tau, delta, 2);
        checks.push(Check::at_most(format!("P(D >= {delta})"), freq, bound + 3.0 * se));
        tails.push(serde_json::json!({ "delta": delta, "frequency": freq, "bound": bound }));
    }
    let details = serde_json::json!({ "tau": tau, "x": x, "tails": tails, "diameters": diam });
    Ok(TestReport::new("diameter_tail", seed, replicates, checks, details))
}

fn check_permutation(p: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(Error::InvalidArgument("permutation has the wrong length".into()));
    }
    for &i in p {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument("permutation is not a bijection".into()));
        }
    }
    Ok(())
}

/// Builds one tree by inserting `store`'s points in `order` at budget `tau`.
pub fn online_tree(store: &PointStore, order: &[usize], tau: f64, cfg: &TreeConfig, rng: &mut ChaCha8Rng) -> Result<BspTree> {
    let mut tree = BspTree::new();
    for &id in order {
        insert(&mut tree, store, id, tau, cfg, rng)?;
    }
    Ok(tree)
}

/// Leaf counts and depths of online trees built under two insertion orders.
pub fn order_invariance_test(
    points: &PointStore,
    perm_a: &[usize],
    perm_b: &[usize],
    tau: f64,
    replicates: usize,
    seed: u64,
) -> Result<TestReport> {
    check_tau(tau)?;
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidArgument("order test needs at least three points".into()));
    }
    check_permutation(perm_a, n)?;
    check_permutation(perm_b, n)?;
    let cfg = TreeConfig::default();
    let runs = run_replicates(replicates, seed, |rng| {
        let a = online_tree(points, perm_a, tau, &cfg, rng)?;
        let b = online_tree(points, perm_b, tau, &cfg, rng)?;
        Ok([a.leaf_count() as f64, b.leaf_count() as f64, a.depth() as f64, b.depth() as f64])
    })?;
    let col = |k: usize| runs.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let (la, lb, da, db) = (col(0), col(1), col(2), col(3));
    let checks = vec![
        ks_check("leaf count KS p-value", ks_two_sample(&la, &lb).p_value),
        ks_check("depth KS p-value", ks_two_sample(&da, &db).p_value),
    ];
    let details = serde_json::json!({
        "tau": tau,
        "points": n,
        "mean_leaves": [mean_se(&la).mean, mean_se(&lb).mean],
        "mean_depth": [mean_se(&da).mean, mean_se(&db).mean],
        "leaves_a": la,
        "leaves_b": lb,
    });
    Ok(TestReport::new("order_invariance", seed, replicates, checks, details))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_budget_has_no_crossings() {
        let r = poisson_slice_test(0.0, Point2::new(0.0, 0.1), Point2::new(1.0, 0.9), 50, 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn slice_rejects_outside_segment() {
        let r = poisson_slice_test(1.0, Point2::new(0.0, 0.1), Point2::new(1.5, 0.9), 10, 1);
        assert!(matches!(r, Err(Error::SegmentOutsideDomain)));
    }

    #[test]
    fn windowed_cdf_matches_simulated_poisson_gaps() {
        let (lambda, len) = (4.0, 1.3);
        let mut rng = replicate_rng(3, 0);
        let mut gaps = Vec::new();
        for _ in 0..3000 {
            let mut pos = 0.0;
            let mut prev = 0.0;
            loop {
                pos += -(1.0 - rng.random::<f64>()).ln() / lambda;
                if pos >= len {
                    break;
                }
                gaps.push(pos - prev);
                prev = pos;
            }
        }
        assert!(ks_one_sample(&gaps, |g| windowed_gap_cdf(g, lambda, len)).p_value > ALPHA);
    }

    #[test]
    fn doubling_budget_doubles_crossings() {
        let (a, b) = (Point2::new(0.0, 0.1), Point2::new(1.0, 0.9));
        let r1 = poisson_slice_test(0.5, a, b, 400, 5).unwrap();
        let r2 = poisson_slice_test(1.0, a, b, 400, 6).unwrap();
        let m = |r: &TestReport| (r.details["mean"].as_f64().unwrap(), r.details["se"].as_f64().unwrap());
        let ((m1, s1), (m2, s2)) = (m(&r1), m(&r2));
        assert!((m2 - 2.0 * m1).abs() <= 3.0 * (s2 * s2 + 4.0 * s1 * s1).sqrt());
    }

    #[test]
    fn restriction_trivial_cases() {
        let sq = Polygon2D::unit_square();
        let r = consistency_restriction_test(0.0, &Polygon2D::rectangle(0.25, 0.25, 0.75, 0.75), 20, 2).unwrap();
        assert!(r.passed);
        assert_eq!(r.details["restricted_mean"], 0.0);
        let r = consistency_restriction_test(1.0, &sq, 300, 2).unwrap();
        assert!(r.checks[0].passed, "{}", r.summary());
        let bad = Polygon2D::rectangle(0.5, 0.5, 1.5, 0.9);
        assert!(consistency_restriction_test(1.0, &bad, 10, 2).is_err());
    }

    #[test]
    fn bound_formulas() {
        assert!((cut_count_bound(1.0, 2) - 4.0 * 2f64.exp()).abs() < 1e-12);
        assert!((cut_count_bound(0.5, 2) - 16.626).abs() < 1e-3);
        assert!((diameter_tail_bound(4.0, 1.0, 2) - 0.452564).abs() < 1e-6);
        assert_eq!(diameter_tail_bound(4.0, 0.0, 2), 1.0);
    }

    #[test]
    fn zero_budget_bound_and_guards() {
        let r = leaf_count_bound_test(0.0, 2, 10, 0).unwrap();
        assert!(r.passed && r.statistic == 0.0);
        assert!(leaf_count_bound_test(2.0, 2, 10, 0).is_err());
        assert!(leaf_count_bound_test(1.0, 4, 10, 0).is_err());
    }

    #[test]
    fn dense_three_dimensional_bound() {
        let r = leaf_count_bound_test(0.5, 3, 20, 1).unwrap();
        assert!(r.passed, "{}", r.summary());
        assert!(r.statistic > 0.0);
    }

    #[test]
    fn diameter_report_shape() {
        let r = diameter_tail_test(4.0, Point2::new(0.5, 0.5), &[0.5, 1.0, 2.0], 200, 9).unwrap();
        assert_eq!(r.checks.len(), 4);
        assert!(r.checks[3].passed);
        assert!(diameter_tail_test(4.0, Point2::new(0.0, 0.5), &[1.0], 10, 9).is_err());
    }

    #[test]
    fn order_test_trivial_cases() {
        let store = PointStore::from_rows(2, &[[0.1, 0.2], [0.8, 0.3], [0.5, 0.9]]).unwrap();
        let r = order_invariance_test(&store, &[0, 1, 2], &[2, 1, 0], 5.0, 50, 0).unwrap();
        assert!(r.passed);
        assert!(r.details["leaves_a"].as_array().unwrap().iter().all(|v| v == 1.0));
        assert!(order_invariance_test(&store, &[0, 0, 2], &[2, 1, 0], 5.0, 5, 0).is_err());
    }

    #[test]
    fn reports_are_deterministic_and_serialize() {
        let run = || poisson_slice_test(1.0, Point2::new(0.2, 0.2), Point2::new(0.8, 0.6), 40, 77).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        let back: TestReport = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back.checks, a.checks);
    }
}
