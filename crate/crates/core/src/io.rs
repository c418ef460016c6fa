//! Datasets, rescaling, synthetic benchmarks, metrics and file output.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cut, Point2, Polygon2D};
use crate::partition::BspTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Libsvm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
    /// Per-dimension `(min, max)` used or computed for rescaling.
    pub bounds: Vec<(f64, f64)>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Option<Vec<f64>>) -> Result<Self> {
        let d = features.first().map_or(0, Vec::len);
        if let Some((row, r)) = features.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::RaggedRow { row: row + 1, expected: d, found: r.len() });
        }
        if labels.as_ref().is_some_and(|l| l.len() != features.len()) {
            return Err(Error::InvalidArgument("labels and features differ in length".into()));
        }
        let bounds = column_bounds(&features, d);
        Ok(Self { features, labels, bounds })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn d(&self) -> usize {
        self.bounds.len()
    }
}

fn column_bounds(features: &[Vec<f64>], d: usize) -> Vec<(f64, f64)> {
    (0..d)
        .map(|j| {
            features.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])))
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::Parse { row, msg: format!("column {column}: cannot parse {cell:?} as a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { row, msg: format!("column {column}: value {cell:?} is not finite") });
    }
    Ok(v)
}

/// Loads a CSV (header required, `label` names the label column, if any) or
/// a libsvm file. Row numbers in errors count the header as line 1.
pub fn load_dataset(path: &Path, format: Format, label: Option<&str>) -> Result<Dataset> {
    let text = read_text(path)?;
    match format {
        Format::Csv => parse_csv(&text, label),
        Format::Libsvm => parse_libsvm(&text, None),
    }
}

pub fn parse_csv(text: &str, label: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse { row: 1, msg: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = match label {
        None => None,
        Some(name) => Some(
            header.iter().position(|h| h == name).ok_or_else(|| Error::UnknownLabelColumn(name.to_string()))?,
        ),
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow { row, expected: header.len(), found: rec.len() });
        }
        let mut x = Vec::with_capacity(header.len());
        for (j, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell, row, &header[j])?;
            if Some(j) == label_idx {
                labels.push(v);
            } else {
                x.push(v);
            }
        }
        features.push(x);
    }
    if features.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Dataset::new(features, label_idx.map(|_| labels))
}

/// Parses `label idx:value ...` lines with 1-based indices; absent entries
/// are zero. The dimension is `d` or, if not given, the largest index seen.
pub fn parse_libsvm(text: &str, d: Option<usize>) -> Result<Dataset> {
    let mut sparse = Vec::new();
    let mut labels = Vec::new();
    let mut max_idx = 0;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        labels.push(parse_cell(tokens.next().unwrap_or(""), row, "label")?);
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { row, msg: format!("expected index:value, found {tok:?}") })?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::Parse { row, msg: format!("bad feature index {idx:?}") })?;
            max_idx = max_idx.max(idx);
            entries.push((idx - 1, parse_cell(val, row, &idx.to_string())?));
        }
        sparse.push((row, entries));
    }
    if sparse.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let d = d.unwrap_or(max_idx);
    let mut features = Vec::with_capacity(sparse.len());
    for (row, entries) in sparse {
        let mut x = vec![0.0; d];
        for (j, v) in entries {
            if j >= d {
                return Err(Error::Parse { row, msg: format!("feature index {} exceeds dimension {d}", j + 1) });
            }
            x[j] = v;
        }
        features.push(x);
    }
    Dataset::new(features, Some(labels))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rescaled {
    pub dataset: Dataset,
    /// Values clamped to `[0, 1]` because they fell outside the bounds.
    pub clamped: usize,
    /// Dimensions with zero range, mapped to 0.5.
    pub constant_dims: Vec<usize>,
}

/// Affine map of every feature to `[0, 1]` using `bounds` or, when absent,
/// the dataset's own column ranges.
pub fn rescale(ds: &Dataset, bounds: Option<&[(f64, f64)]>) -> Result<Rescaled> {
    let bounds = bounds.map_or_else(|| ds.bounds.clone(), <[_]>::to_vec);
    if bounds.len() != ds.d() {
        return Err(Error::DimensionMismatch { expected: ds.d(), got: bounds.len() });
    }
    if bounds.iter().any(|&(lo, hi)| !lo.is_finite() || !hi.is_finite() || hi < lo) {
        return Err(Error::InvalidArgument("bounds must be finite with min <= max".into()));
    }
    let constant_dims: Vec<usize> = (0..bounds.len()).filter(|&j| bounds[j].1 == bounds[j].0).collect();
    let mut clamped = 0;
    let features = ds
        .features
        .iter()
        .map(|r| {
            r.iter()
                .zip(&bounds)
                .map(|(&v, &(lo, hi))| {
                    if hi == lo {
                        return 0.5;
                    }
                    let u = (v - lo) / (hi - lo);
                    if !(0.0..=1.0).contains(&u) {
                        clamped += 1;
                    }
                    u.clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} feature values outside the bounds were clamped");
    }
    if !constant_dims.is_empty() {
        log::warn!("constant feature dimensions {constant_dims:?} mapped to 0.5");
    }
    let dataset = Dataset { features, labels: ds.labels.clone(), bounds };
    Ok(Rescaled { dataset, clamped, constant_dims })
}

/// Noise-free Friedman function of the first five coordinates.
pub fn friedman(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

pub fn friedman_generate(n: usize, d: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    if d < 5 {
        return Err(Error::InvalidArgument(format!("Friedman data needs d >= 5, got {d}")));
    }
    generate(n, d, sigma, seed, friedman)
}

/// Noise-free part of the planar sine benchmark.
pub fn simple_sine(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin()
}

pub fn simple_sine_generate(n: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    generate(n, 2, sigma, seed, simple_sine)
}

fn generate(n: usize, d: usize, sigma: f64, seed: u64, f: fn(&[f64]) -> f64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|_| Error::InvalidArgument(format!("noise level must be finite and non-negative, got {sigma}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        labels.push(f(&x) + noise.sample(&mut rng));
        features.push(x);
    }
    Dataset::new(features, Some(labels))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    let mse = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truths.len() as f64;
    Ok(mse.sqrt())
}

pub fn accuracy<T: PartialEq>(predictions: &[T], truths: &[T]) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    let hits = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truths.len() as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("{a} predictions for {b} truths")));
    }
    if a == 0 {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    Ok(())
}

/// Writes a header `x1,...,xd[,y]` and one row per point.
pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Internal(format!("csv output: {e}"));
    let mut header: Vec<String> = (1..=ds.d()).map(|j| format!("x{j}")).collect();
    if ds.labels.is_some() {
        header.push("y".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, x) in ds.features.iter().enumerate() {
        let mut rec: Vec<String> = x.iter().map(f64::to_string).collect();
        if let Some(l) = &ds.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv output: {e}")))?;
    Ok(())
}

pub fn write_csv_file(ds: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    write_csv(ds, std::io::BufWriter::new(file))
}

/// Portion of the line of `cut` inside `poly`.
fn chord(poly: &Polygon2D, cut: &Cut) -> Option<(Point2, Point2)> {
    let f = |p: Point2| cut.theta.project(p) - cut.s;
    let mut hits = Vec::new();
    for (a, b) in poly.edges() {
        let (fa, fb) = (f(a), f(b));
        if (fa <= 0.0) != (fb <= 0.0) {
            let t = fa / (fa - fb);
            hits.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    let first = *hits.first()?;
    let far = hits.iter().copied().max_by(|p, q| first.dist(*p).total_cmp(&first.dist(*q)))?;
    Some((first, far))
}

/// SVG drawing of a planar tree on the unit square: leaf hulls, cut chords
/// clipped to their node hulls, and the points.
pub fn partition_svg(tree: &BspTree, points: &[[f64; 2]]) -> String {
    const SIZE: f64 = 500.0;
    let px = |p: Point2| (p.x * SIZE, (1.0 - p.y) * SIZE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r##"<rect width="{SIZE}" height="{SIZE}" fill="white" stroke="#888"/>"##);
    for id in tree.preorder() {
        let node = tree.node(id);
        let hull = &node.hull.pair_hulls()[0];
        if let Some(cut) = &node.cut {
            if let Some((a, b)) = chord(hull, cut) {
                let ((x1, y1), (x2, y2)) = (px(a), px(b));
                let _ = writeln!(
                    s,
                    r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#c03" stroke-width="1.5"/>"##
                );
            }
        } else if hull.len() >= 2 {
            let pts: Vec<String> = hull.vertices().iter().map(|&v| {
                let (x, y) = px(v);
                format!("{x:.2},{y:.2}")
            }).collect();
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="#6a9fd8" fill-opacity="0.2" stroke="#36c" stroke-width="0.8"/>"##,
                pts.join(" ")
            );
        }
    }
    for p in points {
        let (x, y) = px(Point2::new(p[0], p[1]));
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="black"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::stats::mean_se;

    #[test]
    fn csv_example() {
        let ds = parse_csv("x1,x2,y\n0,0,1\n1,1,0", Some("y")).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.labels, Some(vec![1.0, 0.0]));
        assert_eq!(ds.features[1], vec![1.0, 1.0]);
    }

    #[test]
    fn csv_errors_are_distinct() {
        match parse_csv("x1,x2,y\n0,0,1\n1,abc,0", Some("y")) {
            Err(Error::Parse { row: 3, msg }) => assert!(msg.contains("x2")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("x1,x2,y\n0,0\n", Some("y")), Err(Error::RaggedRow { row: 2, .. })));
        assert!(matches!(parse_csv("x1,x2,y\n0,0,1\n", Some("z")), Err(Error::UnknownLabelColumn(_))));
        let missing = load_dataset(Path::new("/nonexistent/data.csv"), Format::Csv, None);
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    #[test]
    fn libsvm_example() {
        let ds = parse_libsvm("1 1:0.5 3:0.25\n0 2:1\n", Some(3)).unwrap();
        assert_eq!(ds.features[0], vec![0.5, 0.0, 0.25]);
        assert_eq!(ds.labels.as_ref().unwrap()[0], 1.0);
        assert_eq!(parse_libsvm("1 1:0.5 3:0.25", None).unwrap().d(), 3);
        assert!(parse_libsvm("1 4:1", Some(3)).is_err());
        assert!(matches!(parse_libsvm("1 x:1", None), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn rescale_examples() {
        let ds = Dataset::new(vec![vec![5.0, 3.0], vec![12.0, 3.0]], None).unwrap();
        let r = rescale(&ds, Some(&[(0.0, 10.0), (3.0, 3.0)])).unwrap();
        assert_eq!(r.dataset.features[0], vec![0.5, 0.5]);
        assert_eq!(r.dataset.features[1], vec![1.0, 0.5]);
        assert_eq!(r.clamped, 1);
        assert_eq!(r.constant_dims, vec![1]);
        let batch = rescale(&ds, None).unwrap();
        assert_eq!(batch.dataset.features[0][0], 0.0);
        assert_eq!(batch.dataset.features[1][0], 1.0);
        assert_eq!(batch.clamped, 0);
    }

    #[test]
    fn friedman_examples() {
        assert!((friedman(&[0.5; 5]) - 14.5711).abs() < 1e-4);
        assert_eq!(friedman(&[0.0, 0.7, 0.5, 0.0, 0.0]), 0.0);
        assert!(friedman_generate(10, 4, 1.0, 0).is_err());
        let a = friedman_generate(50, 7, 1.0, 3).unwrap();
        assert_eq!(a, friedman_generate(50, 7, 1.0, 3).unwrap());
        assert!(a.features.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn friedman_noise_variance() {
        let n = 100_000;
        let ds = friedman_generate(n, 5, 1.0, 11).unwrap();
        let sq: Vec<f64> =
            ds.features.iter().zip(ds.labels.unwrap()).map(|(x, y)| (y - friedman(x)).powi(2)).collect();
        let m = mean_se(&sq);
        assert!((m.mean - 1.0).abs() <= 3.0 * m.se, "{m:?}");
    }

    #[test]
    fn sine_examples_and_noise() {
        assert!((simple_sine(&[1.0, 0.5]) - 10.0).abs() < 1e-12);
        assert_eq!(simple_sine(&[0.0, 0.3]), 0.0);
        let ds = simple_sine_generate(20_000, 0.2, 4).unwrap();
        assert_eq!(ds.d(), 2);
        let sq: Vec<f64> =
            ds.features.iter().zip(ds.labels.unwrap()).map(|(x, y)| (y - simple_sine(x)).powi(2)).collect();
        let m = mean_se(&sq);
        assert!((m.mean - 0.04).abs() <= 3.0 * m.se);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((accuracy(&[0, 1, 1], &[0, 0, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(accuracy(&[2, 2], &[2, 2]).unwrap(), 1.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = friedman_generate(40, 6, 1.0, 8).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap(), Some("y")).unwrap();
        for (a, b) in ds.features.iter().flatten().zip(back.features.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(ds.labels, back.labels);
    }
}
