//! Seeded generators for desk-scale stand-ins of the image and similarity datasets.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{normalize, DistanceMatrix, Normalization, PointSet};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian blobs around uniformly placed cluster centers.
///
/// With `latent_dim = Some(r)` the blobs live in an `r`-dimensional latent
/// space and are lifted into `m` dimensions by a fixed random Gaussian map,
/// which keeps pairwise distances heterogeneous the way low-intrinsic-dimension
/// data (images) are. Without it the blobs are drawn directly in `m` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub per_cluster: usize,
    pub m: usize,
    /// Per-dimension standard deviation of each blob.
    pub spread: f64,
    pub seed: u64,
    pub latent_dim: Option<usize>,
}

impl SyntheticSpec {
    /// The 4-cluster, 40-point, 200-dimension instance the statistical tests use.
    pub fn reference() -> Self {
        Self {
            clusters: 4,
            per_cluster: 10,
            m: 200,
            spread: 0.08,
            seed: 37,
            latent_dim: Some(2),
        }
    }

    pub fn n(&self) -> usize {
        self.clusters * self.per_cluster
    }

    /// Builds a spec from `key=value` pairs (`clusters`, `per_cluster`, `m`,
    /// `spread`, `seed`, optional `latent_dim`).
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        fn req<'a>(kv: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
            kv.get(key)
                .map(String::as_str)
                .ok_or_else(|| Error::invalid(format!("missing key `{key}`")))
        }
        fn parse<V: std::str::FromStr>(key: &str, s: &str) -> Result<V> {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad value for `{key}`: {s}")))
        }
        let latent_dim = match kv.get("latent_dim") {
            Some(s) => Some(parse("latent_dim", s)?),
            None => None,
        };
        Ok(Self {
            clusters: parse("clusters", req(kv, "clusters")?)?,
            per_cluster: parse("per_cluster", req(kv, "per_cluster")?)?,
            m: parse("m", req(kv, "m")?)?,
            spread: parse("spread", req(kv, "spread")?)?,
            seed: parse("seed", req(kv, "seed")?)?,
            latent_dim,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.per_cluster == 0 || self.n() < 2 {
            return Err(Error::invalid("synthetic spec needs at least 2 points"));
        }
        if self.m == 0 {
            return Err(Error::invalid("synthetic spec needs m >= 1"));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::invalid(format!("bad spread {}", self.spread)));
        }
        if self.latent_dim == Some(0) {
            return Err(Error::invalid("latent_dim must be positive"));
        }
        Ok(())
    }
}

/// Generates the blobs described by `spec`, normalized into `[-1/2, 1/2]`.
/// Points are ordered cluster by cluster and labelled `c<cluster>`.
pub fn generate_synthetic<T: Real>(spec: &SyntheticSpec) -> Result<PointSet<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n();
    let r = spec.latent_dim.unwrap_or(spec.m);

    let centers: Vec<f64> = (0..spec.clusters * r)
        .map(|_| rng.random::<f64>() - 0.5)
        .collect();
    let mut latent = Vec::with_capacity(n * r);
    for c in 0..spec.clusters {
        for _ in 0..spec.per_cluster {
            for l in 0..r {
                let noise: f64 = f64::sample_standard_normal(&mut rng);
                latent.push(centers[c * r + l] + spec.spread * noise);
            }
        }
    }

    let raw: Vec<f64> = match spec.latent_dim {
        None => latent,
        Some(_) => {
            let map: Vec<f64> = (0..spec.m * r)
                .map(|_| f64::sample_standard_normal(&mut rng))
                .collect();
            let mut out = Vec::with_capacity(n * spec.m);
            for i in 0..n {
                let y = &latent[i * r..(i + 1) * r];
                for j in 0..spec.m {
                    let w = &map[j * r..(j + 1) * r];
                    out.push(w.iter().zip(y).map(|(a, b)| a * b).sum());
                }
            }
            out
        }
    };

    let raw: Vec<T> = raw.into_iter().map(T::lit).collect();
    let labels = (0..spec.clusters)
        .flat_map(|c| std::iter::repeat_n(format!("c{c}"), spec.per_cluster))
        .collect();
    normalize(n, spec.m, &raw, Normalization::Centered)?.with_labels(labels)
}

/// Points with every coordinate drawn uniformly from `{-1/2, +1/2}`.
pub fn generate_rademacher<T: Real>(n: usize, m: usize, seed: u64) -> Result<PointSet<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = T::lit(0.5);
    let coords = (0..n * m)
        .map(|_| if rng.random::<bool>() { half } else { -half })
        .collect();
    PointSet::from_normalized(n, m, coords)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A triplet-similarity style distance matrix: `d_ij = 1 - p_ij * p_ji`, where
/// `p_ij` is the (softened) fraction of third items `l` that `i` finds farther
/// than `j`, computed from hidden latent positions.
pub fn generate_similarity_matrix<T: Real>(
    n: usize,
    latent_dim: usize,
    temperature: f64,
    seed: u64,
) -> Result<DistanceMatrix<T>> {
    if n < 3 {
        return Err(Error::invalid("similarity matrix needs at least 3 items"));
    }
    if latent_dim == 0 || !(temperature > 0.0) {
        return Err(Error::invalid(
            "latent_dim and temperature must be positive",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n * latent_dim).map(|_| rng.random::<f64>()).collect();
    let dist = |a: usize, b: usize| -> f64 {
        (0..latent_dim)
            .map(|l| (y[a * latent_dim + l] - y[b * latent_dim + l]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = dist(i, j);
            let s: f64 = (0..n)
                .filter(|&l| l != i && l != j)
                .map(|l| sigmoid((dist(i, l) - dij) / temperature))
                .sum();
            p[i * n + j] = s / (n - 2) as f64;
        }
    }
    let mut d = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = T::lit((1.0 - p[i * n + j] * p[j * n + i]).clamp(0.0, 1.0));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DistanceMatrix::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::exact_distance;

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            clusters: 4,
            per_cluster: 10,
            m: 50,
            spread: 0.01,
            seed: 7,
            latent_dim: None,
        };
        let a: PointSet<f64> = generate_synthetic(&spec).unwrap();
        let b: PointSet<f64> = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        assert!(a.coords().iter().all(|x| (-0.5..=0.5).contains(x)));
    }

    #[test]
    fn zero_spread_collapses_clusters() {
        for latent_dim in [None, Some(3)] {
            let spec = SyntheticSpec {
                clusters: 3,
                per_cluster: 4,
                m: 20,
                spread: 0.0,
                seed: 1,
                latent_dim,
            };
            let ps: PointSet<f64> = generate_synthetic(&spec).unwrap();
            for c in 0..3 {
                for i in 1..4 {
                    assert_eq!(exact_distance(&ps, c * 4, c * 4 + i), 0.0);
                }
            }
        }
    }

    #[test]
    fn rademacher_coordinates() {
        let ps: PointSet<f64> = generate_rademacher(6, 9, 3).unwrap();
        assert!(ps.is_rademacher());
    }

    #[test]
    fn similarity_matrix_is_valid() {
        let d: DistanceMatrix<f64> = generate_similarity_matrix(30, 2, 0.05, 11).unwrap();
        assert_eq!(d.len(), 30);
        assert!(d.entries().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn spec_from_key_values() {
        let kv = crate::dataset::parse_key_values(
            "clusters=4\nper_cluster=10\n# comment\nm=50\nspread=0.01\nseed=7\n",
        )
        .unwrap();
        let spec = SyntheticSpec::from_key_values(&kv).unwrap();
        assert_eq!(spec.n(), 40);
        assert_eq!(spec.latent_dim, None);
    }
}
