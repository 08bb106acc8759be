//! Visual pose candidates: k-means over key-frame features, and nearest-center
//! quantization of key-frame streams into candidate-index sentences.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyframe::KeyFrameSet;
use crate::skeleton::{FeatureMode, FrameFeature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualCodebook {
    pub k: usize,
    pub dim: usize,
    pub seed: u64,
    pub feature_mode: FeatureMode,
    pub centers: Vec<Vec<f64>>,
}

impl VisualCodebook {
    pub fn new(centers: Vec<Vec<f64>>, seed: u64, feature_mode: FeatureMode) -> Result<Self> {
        let cb = VisualCodebook {
            k: centers.len(),
            dim: centers.first().map_or(0, Vec::len),
            seed,
            feature_mode,
            centers,
        };
        cb.validate()?;
        Ok(cb)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.centers.len() != self.k {
            return Err(Error::Schema(format!(
                "codebook declares k={} with {} centers",
                self.k,
                self.centers.len()
            )));
        }
        for (i, c) in self.centers.iter().enumerate() {
            if c.len() != self.dim {
                return Err(Error::Schema(format!(
                    "center {i} has dimension {}, expected {}",
                    c.len(),
                    self.dim
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("center {i} is not finite")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cb: VisualCodebook = crate::io::read_json(path)?;
        cb.validate()?;
        Ok(cb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

/// Candidate-index sequence of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualSentence {
    ids: Vec<usize>,
}

impl VisualSentence {
    pub fn new(ids: Vec<usize>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyStream);
        }
        Ok(VisualSentence { ids })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub codebook: VisualCodebook,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().expect("at least one assignment")
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the smallest index.
fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn count_distinct(points: &[&[f64]]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn kmeans_pp_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].to_vec());
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &d) in dist.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            acc += d;
            if acc > target {
                chosen = Some(i);
                break;
            }
        }
        // Round-off can leave `target` at the very end of the mass.
        let chosen = chosen.unwrap_or_else(|| {
            dist.iter()
                .rposition(|&d| d > 0.0)
                .expect("distinct points remain while fewer than k centers")
        });
        let center = points[chosen].to_vec();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &center));
        }
        centers.push(center);
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Runs until assignments stop changing or `max_iters` update rounds have
/// been made. A cluster that loses all its points is re-seeded at the point
/// farthest from its current center. Center sums are accumulated in point
/// order, so the result depends only on the inputs and the seed.
pub fn fit_kmeans(
    points: &[FrameFeature],
    k: usize,
    seed: u64,
    max_iters: usize,
    feature_mode: FeatureMode,
) -> Result<KMeansFit> {
    let views: Vec<&[f64]> = points.iter().map(|p| p.vector.as_slice()).collect();
    fit_kmeans_vectors(&views, k, seed, max_iters, feature_mode)
}

pub fn fit_kmeans_vectors(
    points: &[&[f64]],
    k: usize,
    seed: u64,
    max_iters: usize,
    feature_mode: FeatureMode,
) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let distinct = count_distinct(points);
    if distinct < k {
        return Err(Error::InfeasibleK { k, distinct });
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::Schema(format!(
            "point {bad} has dimension {}, expected {dim}",
            points[bad].len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp_init(points, k, &mut rng);

    let assign = |centers: &[Vec<f64>]| -> (Vec<usize>, Vec<f64>) {
        points.iter().map(|p| nearest(p, centers)).unzip()
    };

    let (mut assignments, mut dists) = assign(&centers);
    let mut inertia_trace = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centers[c] = sums[c].iter().map(|s| s * inv).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = 0;
                for (i, &d) in dists.iter().enumerate() {
                    if d > dists[far] {
                        far = i;
                    }
                }
                centers[c] = points[far].to_vec();
                dists[far] = 0.0;
            }
        }

        let (next, next_dists) = assign(&centers);
        inertia_trace.push(next_dists.iter().sum());
        let changed = next != assignments;
        assignments = next;
        dists = next_dists;
        if !changed {
            converged = true;
            break;
        }
    }

    let codebook = VisualCodebook {
        k,
        dim,
        seed,
        feature_mode,
        centers,
    };
    Ok(KMeansFit {
        codebook,
        inertia_trace,
        assignments,
        iterations,
        converged,
    })
}

/// Nearest center by Euclidean distance, ties to the smallest index.
pub fn quantize(feature: &FrameFeature, cb: &VisualCodebook) -> Result<usize> {
    quantize_vector(&feature.vector, cb)
}

pub fn quantize_vector(vector: &[f64], cb: &VisualCodebook) -> Result<usize> {
    if vector.len() != cb.dim {
        return Err(Error::Schema(format!(
            "feature dimension {} does not match codebook dimension {}",
            vector.len(),
            cb.dim
        )));
    }
    Ok(nearest(vector, &cb.centers).0)
}

/// Quantizes the features of an instance's key frames, in frame order.
pub fn quantize_sequence(
    features: &[FrameFeature],
    keyframes: &KeyFrameSet,
    cb: &VisualCodebook,
) -> Result<VisualSentence> {
    if keyframes.is_empty() {
        return Err(Error::EmptyStream);
    }
    let ids = keyframes
        .indices
        .iter()
        .map(|&f| {
            let feature = features.get(f).ok_or_else(|| {
                Error::Schema(format!(
                    "key frame {f} outside sequence of {} frames",
                    features.len()
                ))
            })?;
            quantize(feature, cb)
        })
        .collect::<Result<Vec<_>>>()?;
    VisualSentence::new(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyframe::ExtremumKind;

    fn feats(points: &[&[f64]]) -> Vec<FrameFeature> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| FrameFeature {
                vector: p.to_vec(),
                source_frame: i,
            })
            .collect()
    }

    fn codebook(centers: &[&[f64]]) -> VisualCodebook {
        VisualCodebook::new(
            centers.iter().map(|c| c.to_vec()).collect(),
            0,
            FeatureMode::Positions,
        )
        .unwrap()
    }

    #[test]
    fn k_equal_to_point_count_recovers_points() {
        let pts = feats(&[&[0.0, 0.0], &[1.0, 5.0], &[-3.0, 2.0], &[4.0, 4.0]]);
        let fit = fit_kmeans(&pts, 4, 11, 50, FeatureMode::Positions).unwrap();
        let mut centers = fit.codebook.centers.clone();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected: Vec<Vec<f64>> = pts.iter().map(|p| p.vector.clone()).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, expected);
        assert_eq!(fit.inertia(), 0.0);
    }

    #[test]
    fn two_separated_clusters() {
        let eps = 0.01;
        let raw: Vec<[f64; 2]> = vec![
            [eps, 0.0],
            [-eps, 0.0],
            [0.0, eps],
            [0.0, -eps],
            [10.0 + eps, 0.0],
            [10.0 - eps, 0.0],
            [10.0, eps],
            [10.0, -eps],
        ];
        let pts: Vec<FrameFeature> = raw
            .iter()
            .enumerate()
            .map(|(i, p)| FrameFeature {
                vector: p.to_vec(),
                source_frame: i,
            })
            .collect();
        let fit = fit_kmeans(&pts, 2, 3, 100, FeatureMode::Positions).unwrap();
        assert!(fit.converged);
        let mut centers = fit.codebook.centers.clone();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        // Cluster means computed directly from the points above.
        let left = [0.0, 0.0];
        let right = [10.0, 0.0];
        assert!(squared_distance(&centers[0], &left).sqrt() <= eps);
        assert!(squared_distance(&centers[1], &right).sqrt() <= eps);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = feats(&[&[1.0], &[2.0], &[3.0], &[1.0], &[2.0]]);
        assert!(matches!(
            fit_kmeans(&pts, 5, 0, 10, FeatureMode::Positions),
            Err(Error::InfeasibleK { k: 5, distinct: 3 })
        ));
    }

    #[test]
    fn quantize_examples() {
        let cb = codebook(&[&[0.0, 0.0], &[1.0, 0.0], &[5.0, 5.0], &[2.0, 2.0], &[3.0, 0.0]]);
        let f = |v: &[f64]| FrameFeature {
            vector: v.to_vec(),
            source_frame: 0,
        };
        assert_eq!(quantize(&f(&[2.0, 2.0]), &cb).unwrap(), 3);
        // Equidistant (distance 1) from centers 1 and 4.
        assert_eq!(quantize(&f(&[2.0, 0.0]), &cb).unwrap(), 1);
        // 0.1 from center 0, at least 0.9 from any other.
        assert_eq!(quantize(&f(&[0.1, 0.0]), &cb).unwrap(), 0);
        assert!(matches!(quantize(&f(&[1.0]), &cb), Err(Error::Schema(_))));
    }

    #[test]
    fn quantize_sequence_examples() {
        let cb = codebook(&[&[0.0], &[10.0], &[20.0]]);
        let features = feats(&[&[0.1], &[19.0], &[9.0], &[0.4], &[11.0]]);
        let one = KeyFrameSet {
            indices: vec![1],
            kinds: vec![ExtremumKind::Max],
        };
        assert_eq!(quantize_sequence(&features, &one, &cb).unwrap().ids(), &[2]);
        let three = KeyFrameSet {
            indices: vec![0, 2, 3],
            kinds: vec![ExtremumKind::Min, ExtremumKind::Max, ExtremumKind::Min],
        };
        assert_eq!(
            quantize_sequence(&features, &three, &cb).unwrap().ids(),
            &[0, 1, 0]
        );
        assert!(matches!(
            quantize_sequence(&features, &KeyFrameSet::default(), &cb),
            Err(Error::EmptyStream)
        ));
    }

    #[test]
    fn codebook_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("codebook.json");
        let cb = codebook(&[&[0.5, -1.0], &[2.0, 3.25]]);
        cb.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["k"], 2);
        assert_eq!(value["dim"], 2);
        assert_eq!(value["feature_mode"], "positions");
        assert_eq!(VisualCodebook::load(&path).unwrap(), cb);
    }
}
