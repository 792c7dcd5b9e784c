//! The fixed configuration-space sample set, its labels, and the Gaussian
//! kernel Gram matrix.
//!
//! Points and the Gram matrix never change after construction; only labels
//! do. Because the Gram matrix already encodes every pairwise distance
//! (the kernel is monotone in distance), neighbor queries read a row of it
//! instead of searching.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::kcd::Label;

/// Joint angles in radians, each in `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(a) = angles.iter().find(|a| !(a.is_finite() && (-PI..PI).contains(*a))) {
            return Err(Error::InvalidArgument(format!(
                "joint angle {a} outside [-pi, pi)"
            )));
        }
        Ok(Self(angles))
    }

    /// Wraps every angle into `[-pi, pi)`.
    pub fn wrapped(angles: Vec<f64>) -> Result<Self> {
        Self::new(angles.into_iter().map(wrap_angle).collect())
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Configuration {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Configuration {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi.
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Per-joint sampling interval `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl JointBounds {
    /// `[-pi, pi)` on every joint.
    pub fn symmetric(dof: usize) -> Self {
        Self {
            lo: vec![-PI; dof],
            hi: vec![PI; dof],
        }
    }

    pub fn dof(&self) -> usize {
        self.lo.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| rng.random_range(lo..hi))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.lo.len(), self.hi.len())?;
        if self.lo.iter().zip(&self.hi).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("joint bounds need lo < hi".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Regular lattice with `m` values per joint, `n = m^dof`.
    Grid,
    /// Seeded i.i.d. uniform samples.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub n: usize,
    pub dof: usize,
    pub seed: u64,
}

/// Gaussian kernel `exp(-gamma * |a - b|^2)`.
pub fn kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(kernel_unchecked(a, b, gamma))
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn kernel_unchecked(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

/// Sample points, their current labels, and the dense Gram matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    dof: usize,
    gamma: f64,
    /// Row-major, `n * dof`.
    points: Vec<f64>,
    labels: Vec<Label>,
    /// Row-major, `n * n`.
    gram: Vec<f64>,
    /// Row-major, `n * neighbor_len`: each point's nearest points in the
    /// order `nearest_nonsupport` ranks them, itself included.
    neighbors: Vec<u32>,
    neighbor_len: usize,
}

/// Nearest points cached per dataset point.
const NEIGHBOR_LIST_LEN: usize = 32;

/// Largest kernel value first, lower index on ties.
fn neighbor_order(row: &[f64], a: usize, b: usize) -> std::cmp::Ordering {
    row[b].total_cmp(&row[a]).then(a.cmp(&b))
}

impl Dataset {
    /// Builds the Gram matrix over `points` (row-major, `dof` per point).
    /// Labels start as free.
    pub fn from_points(dof: usize, points: Vec<f64>, gamma: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidArgument("dof must be at least 1".into()));
        }
        if !points.len().is_multiple_of(dof) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates is not a multiple of dof {dof}",
                points.len()
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let n = points.len() / dof;
        let mut gram = vec![0.0; n * n];
        gram.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            let xi = &points[i * dof..(i + 1) * dof];
            for (j, g) in row.iter_mut().enumerate() {
                *g = kernel_unchecked(xi, &points[j * dof..(j + 1) * dof], gamma);
            }
        });
        if n > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "{n} points exceed the supported size"
            )));
        }
        let neighbor_len = NEIGHBOR_LIST_LEN.min(n);
        let mut neighbors = vec![0u32; n * neighbor_len];
        if neighbor_len > 0 {
            neighbors
                .par_chunks_mut(neighbor_len)
                .zip(gram.par_chunks(n))
                .for_each(|(out, row)| {
                    let mut order: Vec<usize> = (0..n).collect();
                    if neighbor_len < n {
                        order.select_nth_unstable_by(neighbor_len, |&a, &b| neighbor_order(row, a, b));
                        order.truncate(neighbor_len);
                    }
                    order.sort_unstable_by(|&a, &b| neighbor_order(row, a, b));
                    for (o, j) in out.iter_mut().zip(order) {
                        *o = j as u32;
                    }
                });
        }
        Ok(Self {
            dof,
            gamma,
            points,
            labels: vec![Label::Free; n],
            gram,
            neighbors,
            neighbor_len,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dof..(i + 1) * self.dof]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dof)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn set_label(&mut self, i: usize, label: Label) {
        self.labels[i] = label;
    }

    pub fn set_labels(&mut self, labels: &[Label]) -> Result<()> {
        check_dim(self.len(), labels.len())?;
        self.labels.copy_from_slice(labels);
        Ok(())
    }

    #[inline]
    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.len() + j]
    }

    /// Row `i` of G; by symmetry also column `i`.
    #[inline]
    pub fn gram_row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.gram[i * n..(i + 1) * n]
    }

    /// The `k` nearest points to point `i` that are not flagged in
    /// `is_support`, nearest first. Nearest means largest kernel value; ties
    /// go to the lower index. Returns fewer than `k` if not enough exist.
    pub fn nearest_nonsupport(&self, i: usize, is_support: &[bool], k: usize) -> Vec<usize> {
        debug_assert_eq!(is_support.len(), self.len());
        // Small sorted buffer of (kernel, index); k is tiny in practice.
        if k == 0 {
            return Vec::new();
        }
        let len = self.neighbor_len;
        let mut found = Vec::with_capacity(k);
        for &j in &self.neighbors[i * len..(i + 1) * len] {
            let j = j as usize;
            if !is_support[j] {
                found.push(j);
                if found.len() == k {
                    return found;
                }
            }
        }
        if len == self.len() {
            return found;
        }
        // The cached list ran out; scan the whole row.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (j, &g) in self.gram_row(i).iter().enumerate() {
            if is_support[j] {
                continue;
            }
            if best.len() == k && g <= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bg, _)| bg >= g);
            best.insert(pos, (g, j));
            best.truncate(k);
        }
        best.into_iter().map(|(_, j)| j).collect()
    }

    /// Writes `dof: u32, n: u32, gamma: f64`, then the points as `f64`, then
    /// the labels as `i8`. All little-endian. The Gram matrix is not stored.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let dof = u32::try_from(self.dof).map_err(|_| Error::Format("dof exceeds u32".into()))?;
        let n = u32::try_from(self.len()).map_err(|_| Error::Format("N exceeds u32".into()))?;
        w.write_all(&dof.to_le_bytes())?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&self.gamma.to_le_bytes())?;
        for p in &self.points {
            w.write_all(&p.to_le_bytes())?;
        }
        let labels: Vec<u8> = self.labels.iter().map(|l| l.value() as u8).collect();
        w.write_all(&labels)?;
        Ok(())
    }

    /// Inverse of [`Dataset::write_binary`]; recomputes the Gram matrix.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let dof = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let gamma = read_f64(&mut r)?;
        let mut points = Vec::with_capacity(n * dof);
        for _ in 0..n * dof {
            points.push(read_f64(&mut r)?);
        }
        let mut raw = vec![0u8; n];
        r.read_exact(&mut raw).map_err(truncated)?;
        let labels = raw
            .into_iter()
            .map(|b| Label::from_value(b as i8))
            .collect::<Result<Vec<_>>>()?;
        let mut d = Dataset::from_points(dof, points, gamma)?;
        d.labels = labels;
        Ok(d)
    }
}

pub(crate) fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of data".into())
    } else {
        Error::Io(e)
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

/// Index of the `k`-th (1-based) nearest non-support point to support point
/// `i`, or `None` if fewer than `k` non-support points exist.
pub fn kth_nearest_nonsupport(d: &Dataset, support: &[usize], i: usize, k: usize) -> Option<usize> {
    if k == 0 {
        return None;
    }
    let mut mask = vec![false; d.len()];
    for &s in support {
        mask[s] = true;
    }
    d.nearest_nonsupport(i, &mask, k).get(k - 1).copied()
}

/// Samples points per `spec` and builds the Gram matrix. Labels start free
/// until the first full collision sweep.
pub fn build_dataset(spec: &SamplerSpec, bounds: &JointBounds, gamma: f64) -> Result<Dataset> {
    bounds.validate()?;
    check_dim(spec.dof, bounds.dof())?;
    if spec.dof == 0 || spec.n == 0 {
        return Err(Error::InvalidArgument("sampler needs dof >= 1 and N >= 1".into()));
    }
    let points = match spec.kind {
        SamplerKind::Grid => grid_points(spec.n, bounds)?,
        SamplerKind::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..spec.n).flat_map(|_| bounds.sample(&mut rng)).collect()
        }
    };
    Dataset::from_points(spec.dof, points, gamma)
}

/// Integer `m` with `m^dof == n`, if any.
pub fn grid_side(n: usize, dof: usize) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / dof as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&m| m.checked_pow(dof as u32) == Some(n))
}

fn grid_points(n: usize, bounds: &JointBounds) -> Result<Vec<f64>> {
    let dof = bounds.dof();
    let m = grid_side(n, dof).ok_or_else(|| {
        Error::InvalidArgument(format!("grid sampling needs N = m^dof, but N = {n}, dof = {dof}"))
    })?;
    let mut points = Vec::with_capacity(n * dof);
    let mut idx = vec![0usize; dof];
    for _ in 0..n {
        for (j, &k) in idx.iter().enumerate() {
            let (lo, hi) = (bounds.lo[j], bounds.hi[j]);
            points.push(lo + (hi - lo) * k as f64 / m as f64);
        }
        // Last joint varies fastest.
        for j in (0..dof).rev() {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(points)
}
