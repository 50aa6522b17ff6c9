//! Point sets, distance matrices, and the exact-distance utilities used by the
//! baselines and as test oracles.

mod io;
mod synth;

pub use io::{
    load_distance_matrix, load_points, parse_key_values, save_distance_matrix, save_points_bin,
    save_points_csv, PointsFormat, POINTS_MAGIC,
};
pub use synth::{
    generate_rademacher, generate_similarity_matrix, generate_synthetic, SyntheticSpec,
};

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetry tolerance accepted when validating a distance matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Entries within this distance of `[0, 1]` are clamped instead of rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
/// Default cap on the number of subsets the exhaustive k-center search visits.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// How raw coordinates are mapped into a unit-width range per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Each dimension's observed range maps onto `[-1/2, 1/2]`.
    #[default]
    Centered,
    /// Each dimension's observed range maps onto `[0, 1]`.
    Unit,
    /// Coordinates are used unchanged and only validated.
    AsIs,
}

impl Normalization {
    fn bounds<T: Real>(self) -> (T, T) {
        match self {
            Normalization::Centered => (T::lit(-0.5), T::lit(0.5)),
            Normalization::Unit | Normalization::AsIs => (T::zero(), T::one()),
        }
    }
}

/// `n` points in `m` dimensions, stored row-major, every coordinate inside a
/// unit-width box so per-dimension squared differences lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    n: usize,
    m: usize,
    coords: Vec<T>,
    labels: Option<Vec<String>>,
}

impl<T: Real> PointSet<T> {
    /// Wraps coordinates that are already normalized (`[-1/2, 1/2]` or `[0, 1]`).
    pub fn from_normalized(n: usize, m: usize, coords: Vec<T>) -> Result<Self> {
        check_shape(n, m, coords.len())?;
        let lo = T::lit(-0.5);
        let hi = T::one();
        for (idx, &x) in coords.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / m,
                    dim: idx % m,
                });
            }
            if x < lo || x > hi {
                return Err(Error::invalid(format!(
                    "coordinate {x} at row {}, dimension {} is not normalized",
                    idx / m,
                    idx % m
                )));
            }
        }
        // Every column must fit a unit-width window so squared gaps stay in [0, 1].
        for j in 0..m {
            let (mn, mx) = column_range(&coords, m, j);
            if mx - mn > T::one() + T::lit(1e-9) {
                return Err(Error::invalid(format!(
                    "dimension {j} spans more than unit width"
                )));
            }
        }
        Ok(Self {
            n,
            m,
            coords,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::invalid(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn point(&self, u: usize) -> &[T] {
        &self.coords[u * self.m..(u + 1) * self.m]
    }

    pub fn coord(&self, u: usize, j: usize) -> T {
        self.coords[u * self.m + j]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Keeps the first `n` points.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n < 2 || n > self.n {
            return Err(Error::invalid(format!(
                "prefix of {n} points from a set of {}",
                self.n
            )));
        }
        Ok(Self {
            n,
            m: self.m,
            coords: self.coords[..n * self.m].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
        })
    }

    /// True when every coordinate is exactly `±1/2`.
    pub fn is_rademacher(&self) -> bool {
        let half = T::lit(0.5);
        self.coords.iter().all(|&x| x == half || x == -half)
    }
}

fn check_shape(n: usize, m: usize, len: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 points, got {n}")));
    }
    if m < 1 {
        return Err(Error::invalid("need at least 1 dimension"));
    }
    if len != n * m {
        return Err(Error::invalid(format!(
            "expected {} coordinates for {n}x{m}, got {len}",
            n * m
        )));
    }
    Ok(())
}

fn column_range<T: Real>(coords: &[T], m: usize, j: usize) -> (T, T) {
    coords
        .iter()
        .skip(j)
        .step_by(m)
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Maps raw `n x m` row-major coordinates into a [`PointSet`] by an affine map
/// per dimension. Constant dimensions map to the midpoint of the target range
/// (`0` for [`Normalization::Centered`]) or its lower end for [`Normalization::Unit`].
pub fn normalize<T: Real>(
    n: usize,
    m: usize,
    raw: &[T],
    convention: Normalization,
) -> Result<PointSet<T>> {
    check_shape(n, m, raw.len())?;
    if let Some(idx) = raw.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            row: idx / m,
            dim: idx % m,
        });
    }
    if convention == Normalization::AsIs {
        return PointSet::from_normalized(n, m, raw.to_vec());
    }
    let (lo, hi) = convention.bounds::<T>();
    let mut coords = vec![T::zero(); n * m];
    for j in 0..m {
        let (mn, mx) = column_range(raw, m, j);
        let range = mx - mn;
        for i in 0..n {
            let x = raw[i * m + j];
            let y = if range > T::zero() {
                match convention {
                    Normalization::Centered => (x - (mn + mx) / T::lit(2.0)) / range,
                    Normalization::Unit | Normalization::AsIs => (x - mn) / range,
                }
            } else {
                T::zero()
            };
            coords[i * m + j] = y.max(lo).min(hi);
        }
    }
    Ok(PointSet {
        n,
        m,
        coords,
        labels: None,
    })
}

/// Symmetric `n x n` matrix of distances in `[0, 1]` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    d: Vec<T>,
}

impl<T: Real> DistanceMatrix<T> {
    pub fn new(n: usize, mut d: Vec<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 points, got {n}")));
        }
        if d.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for {n}x{n}, got {}",
                n * n,
                d.len()
            )));
        }
        let tol = T::lit(CLAMP_TOLERANCE);
        for i in 0..n {
            for j in 0..n {
                let x = d[i * n + j];
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: i, dim: j });
                }
                if x < -tol || x > T::one() + tol {
                    return Err(Error::OutOfRange {
                        i,
                        j,
                        value: x.to_f64_lossy(),
                    });
                }
                d[i * n + j] = x.max(T::zero()).min(T::one());
            }
        }
        let sym_tol = T::lit(SYMMETRY_TOLERANCE);
        for i in 0..n {
            if d[i * n + i] != T::zero() {
                return Err(Error::invalid(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                if (a - b).abs() > sym_tol {
                    return Err(Error::Asymmetric {
                        i,
                        j,
                        a: a.to_f64_lossy(),
                        b: b.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.d[i * self.n + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.d
    }

    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n < 2 || n > self.n {
            return Err(Error::invalid(format!(
                "prefix of {n} points from a matrix of {}",
                self.n
            )));
        }
        let mut d = Vec::with_capacity(n * n);
        for i in 0..n {
            d.extend_from_slice(&self.d[i * self.n..i * self.n + n]);
        }
        Self::new(n, d)
    }

    /// Materializes all pairwise exact distances of a point set.
    pub fn from_points(ps: &PointSet<T>) -> Self {
        let n = ps.len();
        let mut d = vec![T::zero(); n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = exact_distance(ps, i, j);
                d[i * n + j] = x;
                d[j * n + i] = x;
            }
        }
        Self { n, d }
    }
}

/// Anything that can report exact pairwise distances.
pub trait DistanceSource<T: Real>: Sync {
    fn num_points(&self) -> usize;
    fn distance(&self, u: usize, v: usize) -> T;
}

impl<T: Real> DistanceSource<T> for PointSet<T> {
    fn num_points(&self) -> usize {
        self.n
    }

    fn distance(&self, u: usize, v: usize) -> T {
        exact_distance(self, u, v)
    }
}

impl<T: Real> DistanceSource<T> for DistanceMatrix<T> {
    fn num_points(&self) -> usize {
        self.n
    }

    fn distance(&self, u: usize, v: usize) -> T {
        self.get(u, v)
    }
}

/// A borrowed view of whichever ground truth a run is using.
#[derive(Debug, Clone, Copy)]
pub enum DataSource<'a, T> {
    Points(&'a PointSet<T>),
    Matrix(&'a DistanceMatrix<T>),
}

impl<T: Real> DataSource<'_, T> {
    pub fn points(&self) -> Option<&PointSet<T>> {
        match self {
            DataSource::Points(p) => Some(p),
            DataSource::Matrix(_) => None,
        }
    }

    /// Dimension count, or 1 for a distance matrix (one lookup per exact distance).
    pub fn dims(&self) -> usize {
        match self {
            DataSource::Points(p) => p.dims(),
            DataSource::Matrix(_) => 1,
        }
    }
}

impl<T: Real> DistanceSource<T> for DataSource<'_, T> {
    fn num_points(&self) -> usize {
        match self {
            DataSource::Points(p) => p.len(),
            DataSource::Matrix(d) => d.len(),
        }
    }

    fn distance(&self, u: usize, v: usize) -> T {
        match self {
            DataSource::Points(p) => exact_distance(p, u, v),
            DataSource::Matrix(d) => d.get(u, v),
        }
    }
}

/// Normalized squared distance `||x_u - x_v||^2 / m`.
pub fn exact_distance<T: Real>(ps: &PointSet<T>, u: usize, v: usize) -> T {
    let sum: T = ps
        .point(u)
        .iter()
        .zip(ps.point(v))
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    sum / T::from_usize_lossy(ps.dims())
}

/// Ordered list of distinct center indices; position is the stage it was added in.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CenterSet(Vec<usize>);

impl CenterSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_indices(indices: Vec<usize>, n: usize) -> Result<Self> {
        let mut set = Self::new();
        for i in indices {
            set.push(i, n)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, index: usize, n: usize) -> Result<()> {
        if index >= n {
            return Err(Error::IndexOutOfBounds { index, len: n });
        }
        if self.0.contains(&index) {
            return Err(Error::invalid(format!("{index} is already a center")));
        }
        self.0.push(index);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

/// Distance from `v` to its nearest center, and that center's position in `centers`.
pub fn nearest_center<T: Real, D: DistanceSource<T> + ?Sized>(
    src: &D,
    centers: &[usize],
    v: usize,
) -> (usize, T) {
    centers
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |(bi, bd), (i, &s)| {
            let d = src.distance(v, s);
            if d < bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
}

/// The non-center point farthest from its nearest center, and that distance.
/// Ties go to the lowest vertex index.
pub fn bottleneck<T: Real, D: DistanceSource<T> + ?Sized>(
    src: &D,
    centers: &[usize],
) -> Result<(usize, T)> {
    let n = src.num_points();
    if centers.is_empty() {
        return Err(Error::invalid("bottleneck needs at least one center"));
    }
    let mut best: Option<(usize, T)> = None;
    for v in (0..n).filter(|v| !centers.contains(v)) {
        let (_, d) = nearest_center(src, centers, v);
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((v, d));
        }
    }
    best.ok_or(Error::NoRemainingVertex)
}

/// `max_v min_{s in S} d(v, s)` including `S = V` (returns 0).
pub fn bottleneck_value<T: Real, D: DistanceSource<T> + ?Sized>(src: &D, centers: &[usize]) -> T {
    match bottleneck(src, centers) {
        Ok((_, d)) => d,
        Err(_) => T::zero(),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// Exact optimum of the k-center objective by enumerating all `C(n, k)` subsets.
/// Refuses instances whose subset count exceeds `limit`.
pub fn optimal_kcenter_bruteforce<T: Real, D: DistanceSource<T> + ?Sized>(
    src: &D,
    k: usize,
    limit: u128,
) -> Result<(CenterSet, T)> {
    let n = src.num_points();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} with n = {n}")));
    }
    let subsets = binomial(n, k);
    if subsets > limit {
        return Err(Error::TooLarge { subsets, limit });
    }
    let mut best: Option<(Vec<usize>, T)> = None;
    for subset in (0..n).combinations(k) {
        let value = bottleneck_value(src, &subset);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((subset, value));
        }
    }
    let (subset, value) = best.expect("at least one subset");
    Ok((CenterSet(subset), value))
}
