//! Key-frame extraction from the largest eigenvalue of the per-frame joint
//! position covariance.
//!
//! Each frame's joints are treated as 3-D observations. The largest eigenvalue
//! of their covariance measures how stretched the body is, so its smoothed
//! time series peaks and dips where the body reaches maximum or minimum
//! extension. Those strict local extrema are the key frames.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Frame, SkeletonSequence};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_SIGMA: f64 = 1.0;

/// Symmetric 3x3 covariance of one frame's joint positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub m: [[f64; 3]; 3],
}

impl CovarianceMatrix {
    pub fn new(m: [[f64; 3]; 3]) -> Self {
        CovarianceMatrix { m }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }
}

/// Population covariance (divide by J) of the frame's joints.
pub fn frame_covariance(frame: &Frame) -> CovarianceMatrix {
    let n = frame.joints.len() as f64;
    let mut mean = [0.0; 3];
    for j in &frame.joints {
        mean[0] += j.x;
        mean[1] += j.y;
        mean[2] += j.z;
    }
    for v in &mut mean {
        *v /= n;
    }
    let mut m = [[0.0; 3]; 3];
    for j in &frame.joints {
        let d = [j.x - mean[0], j.y - mean[1], j.z - mean[2]];
        for r in 0..3 {
            for c in r..3 {
                m[r][c] += d[r] * d[c];
            }
        }
    }
    for r in 0..3 {
        for c in r..3 {
            m[r][c] /= n;
            m[c][r] = m[r][c];
        }
    }
    CovarianceMatrix { m }
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations, in
/// ascending order.
pub fn symmetric_eigenvalues(c: &CovarianceMatrix) -> Result<[f64; 3]> {
    if c.m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("covariance has non-finite entries".into()));
    }
    let mut a = c.m;
    // Symmetrize from the upper triangle.
    for r in 0..3 {
        for col in 0..r {
            a[r][col] = a[col][r];
        }
    }
    let scale = a.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok([0.0; 3]);
    }
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= f64::EPSILON * f64::EPSILON * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let cos = 1.0 / (t * t + 1.0).sqrt();
            let sin = t * cos;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = cos * akp - sin * akq;
                a[k][q] = sin * akp + cos * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = cos * apk - sin * aqk;
                a[q][k] = sin * apk + cos * aqk;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
        }
    }
    let mut eig = [a[0][0], a[1][1], a[2][2]];
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Largest eigenvalue, with round-off negatives clamped to zero.
pub fn largest_eigenvalue(c: &CovarianceMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(c)?[2].max(0.0))
}

/// Normalized Gaussian taps for an odd window centered on zero.
pub fn gaussian_kernel(window: usize, sigma: f64) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::Config(format!(
            "smoothing window must be odd and positive, got {window}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!(
            "smoothing sigma must be positive, got {sigma}"
        )));
    }
    let half = (window / 2) as i64;
    let taps: Vec<f64> = (-half..=half)
        .map(|o| (-((o * o) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|w| w / total).collect())
}

/// Moving Gaussian filter. Taps falling outside the sequence are dropped and
/// the remaining weights renormalized, so output length equals input length.
pub fn gaussian_smooth(raw: &[f64], window: usize, sigma: f64) -> Result<Vec<f64>> {
    let kernel = gaussian_kernel(window, sigma)?;
    let half = window / 2;
    let n = raw.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        let mut weight = 0.0;
        for (k, &w) in kernel.iter().enumerate() {
            let Some(idx) = (i + k).checked_sub(half) else {
                continue;
            };
            if idx >= n {
                continue;
            }
            acc += w * raw[idx];
            weight += w;
        }
        out.push(acc / weight);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenProfile {
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub window: usize,
    pub sigma: f64,
}

impl EigenProfile {
    /// Largest-eigenvalue profile of a (normalized) sequence.
    pub fn compute(seq: &SkeletonSequence, window: usize, sigma: f64) -> Result<Self> {
        let raw = seq
            .frames()
            .iter()
            .map(|f| largest_eigenvalue(&frame_covariance(f)))
            .collect::<Result<Vec<_>>>()?;
        EigenProfile::from_raw(raw, window, sigma)
    }

    pub fn from_raw(raw: Vec<f64>, window: usize, sigma: f64) -> Result<Self> {
        let smoothed = gaussian_smooth(&raw, window, sigma)?;
        Ok(EigenProfile {
            raw,
            smoothed,
            window,
            sigma,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

impl ExtremumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KeyFrameSet {
    pub indices: Vec<usize>,
    pub kinds: Vec<ExtremumKind>,
}

impl KeyFrameSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, ExtremumKind)> + '_ {
        self.indices.iter().copied().zip(self.kinds.iter().copied())
    }
}

/// Strict interior extrema of a series. Boundary samples never qualify.
pub fn strict_extrema(values: &[f64]) -> KeyFrameSet {
    let mut set = KeyFrameSet::default();
    if values.len() < 3 {
        return set;
    }
    for f in 1..values.len() - 1 {
        let (prev, cur, next) = (values[f - 1], values[f], values[f + 1]);
        let kind = if cur > next && cur > prev {
            ExtremumKind::Max
        } else if cur < next && cur < prev {
            ExtremumKind::Min
        } else {
            continue;
        };
        set.indices.push(f);
        set.kinds.push(kind);
    }
    set
}

/// Key frames on the smoothed profile.
pub fn detect_keyframes(profile: &EigenProfile) -> KeyFrameSet {
    strict_extrema(&profile.smoothed)
}

/// Like [`detect_keyframes`], but a profile without any strict extremum
/// yields its global argmax and argmin (first occurrence) instead, so every
/// instance contributes at least one visual pose.
pub fn detect_keyframes_or_fallback(profile: &EigenProfile) -> KeyFrameSet {
    let detected = detect_keyframes(profile);
    if !detected.is_empty() || profile.is_empty() {
        return detected;
    }
    let s = &profile.smoothed;
    let mut argmax = 0;
    let mut argmin = 0;
    for (i, &v) in s.iter().enumerate() {
        if v > s[argmax] {
            argmax = i;
        }
        if v < s[argmin] {
            argmin = i;
        }
    }
    let mut pairs = vec![(argmax, ExtremumKind::Max)];
    if argmin != argmax {
        pairs.push((argmin, ExtremumKind::Min));
    }
    pairs.sort_by_key(|&(i, _)| i);
    KeyFrameSet {
        indices: pairs.iter().map(|p| p.0).collect(),
        kinds: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Debug dump with columns `frame,raw_lambda,smoothed_lambda,is_keyframe,kind`.
pub fn profile_csv(profile: &EigenProfile, keyframes: &KeyFrameSet) -> String {
    let mut out = String::from("frame,raw_lambda,smoothed_lambda,is_keyframe,kind\n");
    let mut kf = keyframes.iter().peekable();
    for (f, (raw, smooth)) in profile.raw.iter().zip(&profile.smoothed).enumerate() {
        let kind = match kf.peek() {
            Some(&(idx, kind)) if idx == f => {
                kf.next();
                Some(kind)
            }
            _ => None,
        };
        let _ = writeln!(
            out,
            "{f},{raw},{smooth},{},{}",
            u8::from(kind.is_some()),
            kind.map_or("", ExtremumKind::as_str)
        );
    }
    out
}

pub fn write_profile_csv(
    path: impl AsRef<Path>,
    profile: &EigenProfile,
    keyframes: &KeyFrameSet,
) -> Result<()> {
    crate::io::write_atomic(path, profile_csv(profile, keyframes).as_bytes())
}
