//! Finite metric measure spaces with strictly positive point weights.
//!
//! Every integral in this crate is a weighted sum over the point set, every
//! ball is the strict ball `B(x, r) = { y : d(x, y) < r }`, and "sup over all
//! balls" quantities are exact suprema over the critical-radius grid: the
//! pairwise distances and the same distances inflated by `1 + TIE_EPS`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// Immutable finite metric measure space: point ids, a validated distance
/// table and positive weights. All queries are pure.
#[derive(Debug, Clone)]
pub struct MetricMeasureSpace {
    ids: Vec<String>,
    dist: Vec<f64>,
    weights: Vec<f64>,
    base_point: usize,
    token: u64,
}

/// A real-valued function on the points of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFn {
    values: Vec<f64>,
    token: u64,
}

impl MetricMeasureSpace {
    /// Validates the metric axioms exactly (inputs are data, no tolerance):
    /// symmetry, zero diagonal, positivity off the diagonal, the triangle
    /// inequality (worst triple reported), and positive finite weights.
    pub fn new(
        ids: Vec<String>,
        dist: Vec<f64>,
        weights: Vec<f64>,
        base_point: Option<&str>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::TooFewPoints { need: 1, have: 0 });
        }
        if dist.len() != n * n {
            return Err(Error::Schema(format!(
                "distance table has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        if weights.len() != n {
            return Err(Error::Schema(format!(
                "{} weights for {} points",
                weights.len(),
                n
            )));
        }
        {
            let mut sorted = ids.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != n {
                return Err(Error::Schema("duplicate point ids".into()));
            }
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::NonpositiveWeight {
                    id: ids[i].clone(),
                    weight: *w,
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Metric(format!(
                        "d({}, {}) = {} is not a finite nonnegative real",
                        ids[i], ids[j], d
                    )));
                }
                if d != dist[j * n + i] {
                    return Err(Error::Metric(format!(
                        "asymmetric: d({}, {}) = {} but d({}, {}) = {}",
                        ids[i],
                        ids[j],
                        d,
                        ids[j],
                        ids[i],
                        dist[j * n + i]
                    )));
                }
                if (i == j) != (d == 0.0) {
                    return Err(Error::Metric(format!(
                        "d({}, {}) = {} violates d = 0 iff equal points",
                        ids[i], ids[j], d
                    )));
                }
            }
        }
        // Worst triple wins the error message.
        let mut worst: Option<(usize, usize, usize, f64)> = None;
        for x in 0..n {
            for z in 0..n {
                let dxz = dist[x * n + z];
                for y in 0..n {
                    let gap = dxz - (dist[x * n + y] + dist[y * n + z]);
                    if gap > 0.0 && worst.map_or(true, |(_, _, _, g)| gap > g) {
                        worst = Some((x, y, z, gap));
                    }
                }
            }
        }
        if let Some((x, y, z, _)) = worst {
            return Err(Error::Triangle {
                x: ids[x].clone(),
                y: ids[y].clone(),
                z: ids[z].clone(),
                dxz: dist[x * n + z],
                sum: dist[x * n + y] + dist[y * n + z],
            });
        }
        let base = match base_point {
            None => 0,
            Some(id) => ids
                .iter()
                .position(|p| p == id)
                .ok_or_else(|| Error::Schema(format!("base_point `{id}` is not a point id")))?,
        };
        let token = fingerprint(&ids, &dist, &weights, base);
        Ok(Self {
            ids,
            dist,
            weights,
            base_point: base,
            token,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|p| p == id)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn base_point(&self) -> usize {
        self.base_point
    }

    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }

    /// Smallest positive pairwise distance; `None` on a single point.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut m: Option<f64> = None;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let d = self.dist(i, j);
                m = Some(m.map_or(d, |c: f64| c.min(d)));
            }
        }
        m
    }

    /// Strict ball `{ y : d(x, y) < r }` in ascending point order.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&y| self.dist(center, y) < r)
            .collect()
    }

    /// `V(x, r)`: the mass of the strict ball.
    pub fn volume(&self, center: usize, r: f64) -> f64 {
        (0..self.len())
            .filter(|&y| self.dist(center, y) < r)
            .map(|y| self.weights[y])
            .sum()
    }

    /// `V(x, y) := V(x, d(x, y))` with the degenerate-case convention
    /// `V(x, x) := weight(x)`.
    pub fn volume_pair(&self, x: usize, y: usize) -> f64 {
        if x == y {
            self.weights[x]
        } else {
            self.volume(x, self.dist(x, y))
        }
    }

    /// The critical-radius grid: sorted distinct pairwise distances, each
    /// paired with its `(1 + TIE_EPS)` inflation. Suprema over all balls are
    /// realized on this grid.
    pub fn critical_radii(&self) -> Vec<f64> {
        let mut radii = Vec::new();
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let d = self.dist(i, j);
                radii.push(d);
                radii.push(d * (1.0 + tol::TIE_EPS));
            }
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        radii
    }

    /// Weighted inner product `sum f(x) g(x) w(x)`.
    pub fn inner(&self, f: &PointFn, g: &PointFn) -> Result<f64> {
        self.check_fn(f)?;
        self.check_fn(g)?;
        Ok((0..self.len())
            .map(|i| f.values[i] * g.values[i] * self.weights[i])
            .sum())
    }

    /// `integral f dmu`.
    pub fn integral(&self, f: &PointFn) -> Result<f64> {
        self.check_fn(f)?;
        Ok((0..self.len())
            .map(|i| f.values[i] * self.weights[i])
            .sum())
    }

    pub fn check_fn(&self, f: &PointFn) -> Result<()> {
        if f.token != self.token || f.values.len() != self.len() {
            return Err(Error::SpaceMismatch("token or length differs"));
        }
        Ok(())
    }

    pub fn point_fn(&self, values: Vec<f64>) -> Result<PointFn> {
        if values.len() != self.len() {
            return Err(Error::SpaceMismatch("value count differs"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite function value".into()));
        }
        Ok(PointFn {
            values,
            token: self.token,
        })
    }

    pub fn zero_fn(&self) -> PointFn {
        PointFn {
            values: vec![0.0; self.len()],
            token: self.token,
        }
    }

    pub fn constant_fn(&self, c: f64) -> PointFn {
        PointFn {
            values: vec![c; self.len()],
            token: self.token,
        }
    }

    pub fn indicator_fn(&self, points: &[usize]) -> PointFn {
        let mut v = vec![0.0; self.len()];
        for &p in points {
            v[p] = 1.0;
        }
        PointFn {
            values: v,
            token: self.token,
        }
    }
}

fn fingerprint(ids: &[String], dist: &[f64], weights: &[f64], base: usize) -> u64 {
    // FNV-1a over the defining data; cheap identity for mismatch checks.
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for id in ids {
        eat(id.as_bytes());
        eat(&[0]);
    }
    for d in dist {
        eat(&d.to_bits().to_le_bytes());
    }
    for w in weights {
        eat(&w.to_bits().to_le_bytes());
    }
    eat(&base.to_le_bytes());
    h
}

impl PointFn {
    pub(crate) fn clone_with(values: &[f64], token: u64) -> PointFn {
        PointFn {
            values: values.to_vec(),
            token,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, other: &PointFn) -> PointFn {
        assert_eq!(self.token, other.token, "mixed spaces");
        PointFn {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            token: self.token,
        }
    }

    pub fn sub(&self, other: &PointFn) -> PointFn {
        assert_eq!(self.token, other.token, "mixed spaces");
        PointFn {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            token: self.token,
        }
    }

    pub fn scale(&self, c: f64) -> PointFn {
        PointFn {
            values: self.values.iter().map(|a| a * c).collect(),
            token: self.token,
        }
    }

    /// Pointwise product in the finite function algebra.
    pub fn mul(&self, other: &PointFn) -> PointFn {
        assert_eq!(self.token, other.token, "mixed spaces");
        PointFn {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            token: self.token,
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Measured doubling data for one space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingReport {
    /// Measured doubling constant: max over centers and grid radii of
    /// `V(x, 2r) / V(x, r)`.
    pub c_hat: f64,
    /// `log2(c_hat)`.
    pub n_hat: f64,
    pub witness_point: String,
    pub witness_radius: f64,
    /// Max over grid balls of the greedy half-radius covering count.
    pub covering_n0: usize,
    /// `log2(covering_n0)`.
    pub covering_g0: f64,
}

/// Measures the doubling constant and the geometric-doubling parameters on
/// the critical-radius grid (or a caller-supplied grid).
pub fn doubling_report(space: &MetricMeasureSpace, radii: Option<&[f64]>) -> DoublingReport {
    let default_grid;
    let grid: &[f64] = match radii {
        Some(r) => r,
        None => {
            default_grid = space.critical_radii();
            &default_grid
        }
    };
    let n = space.len();

    let mut c_hat = 1.0f64;
    let mut witness = (0usize, 0.0f64);
    for x in 0..n {
        // Sorted distances from x with weight prefix sums: V(x, r) by bisection.
        let mut by_dist: Vec<(f64, f64)> = (0..n).map(|y| (space.dist(x, y), space.weight(y))).collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0f64);
        for (_, w) in &by_dist {
            prefix.push(prefix.last().unwrap() + w);
        }
        let vol = |r: f64| -> f64 {
            // strict ball: count distances < r
            let cnt = by_dist.partition_point(|&(d, _)| d < r);
            prefix[cnt]
        };
        for &r in grid {
            let v1 = vol(r);
            if v1 <= 0.0 {
                continue;
            }
            let ratio = vol(2.0 * r) / v1;
            if ratio > c_hat {
                c_hat = ratio;
                witness = (x, r);
            }
        }
    }

    let mut n0 = 1usize;
    for x in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| space.dist(x, a).total_cmp(&space.dist(x, b)));
        // Distinct strict balls around x are prefixes of `order`; the tightest
        // covering requirement for each prefix is the smallest radius that
        // realizes it.
        let mut i = 0;
        while i < n {
            let d = space.dist(x, order[i]);
            let mut j = i;
            while j + 1 < n && space.dist(x, order[j + 1]) == d {
                j += 1;
            }
            let r = if d == 0.0 {
                // singleton ball; one ball covers it
                i = j + 1;
                n0 = n0.max(1);
                continue;
            } else {
                d * (1.0 + tol::TIE_EPS)
            };
            let members = &order[..=j];
            let mut covered = vec![false; members.len()];
            let mut count = 0usize;
            for k in 0..members.len() {
                if covered[k] {
                    continue;
                }
                count += 1;
                let c = members[k];
                for (m, &p) in members.iter().enumerate() {
                    if space.dist(c, p) < r / 2.0 {
                        covered[m] = true;
                    }
                }
            }
            n0 = n0.max(count);
            i = j + 1;
        }
    }

    DoublingReport {
        c_hat,
        n_hat: c_hat.log2(),
        witness_point: space.id(witness.0).to_string(),
        witness_radius: witness.1,
        covering_n0: n0,
        covering_g0: (n0 as f64).log2(),
    }
}

/// Coifman–Weiss measure distance: the least mass of a ball point-set
/// containing both `x` and `y`; `weight(x)` when `x == y`.
pub fn measure_distance(space: &MetricMeasureSpace, x: usize, y: usize) -> f64 {
    let n = space.len();
    let mut best = f64::INFINITY;
    for c in 0..n {
        let reach = space.dist(c, x).max(space.dist(c, y));
        let mass: f64 = (0..n)
            .filter(|&z| space.dist(c, z) <= reach)
            .map(|z| space.weight(z))
            .sum();
        if mass < best {
            best = mass;
        }
    }
    best
}

/// Canonical fixtures, deterministic in their parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fixture {
    Line4,
    Ring { n: usize },
    Cantor { depth: usize },
    Cloud { n: usize, dim: usize, seed: u64 },
}

impl Fixture {
    /// Parses `line4`, `ring:16`, `cantor:3`, `cloud:64,2,7`.
    pub fn parse(text: &str) -> Result<Fixture> {
        let (name, args) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let nums = |a: Option<&str>, want: usize| -> Result<Vec<u64>> {
            let raw = a.ok_or_else(|| Error::UnknownFixture(text.to_string()))?;
            let parts: Vec<u64> = raw
                .split(',')
                .map(|p| p.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::UnknownFixture(text.to_string()))?;
            if parts.len() != want {
                return Err(Error::UnknownFixture(text.to_string()));
            }
            Ok(parts)
        };
        match name {
            "line4" => Ok(Fixture::Line4),
            "ring" => {
                let v = nums(args, 1)?;
                Ok(Fixture::Ring { n: v[0] as usize })
            }
            "cantor" => {
                let v = nums(args, 1)?;
                Ok(Fixture::Cantor {
                    depth: v[0] as usize,
                })
            }
            "cloud" => {
                let v = nums(args, 3)?;
                Ok(Fixture::Cloud {
                    n: v[0] as usize,
                    dim: v[1] as usize,
                    seed: v[2],
                })
            }
            _ => Err(Error::UnknownFixture(text.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Fixture::Line4 => "line4".into(),
            Fixture::Ring { n } => format!("ring:{n}"),
            Fixture::Cantor { depth } => format!("cantor:{depth}"),
            Fixture::Cloud { n, dim, seed } => format!("cloud:{n},{dim},{seed}"),
        }
    }

    pub fn build(&self) -> Result<MetricMeasureSpace> {
        match *self {
            Fixture::Line4 => {
                let coords: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
                euclidean(&coords)
            }
            Fixture::Ring { n } => {
                if n < 2 {
                    return Err(Error::TooFewPoints { need: 2, have: n });
                }
                let m = n;
                let ids: Vec<String> = (0..m).map(|i| format!("p{i}")).collect();
                let mut dist = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        let raw = i.abs_diff(j);
                        dist[i * m + j] = raw.min(m - raw) as f64;
                    }
                }
                MetricMeasureSpace::new(ids, dist, vec![1.0; m], None)
            }
            Fixture::Cantor { depth } => {
                let mut intervals = vec![(0.0f64, 1.0f64)];
                for _ in 0..depth {
                    let mut next = Vec::with_capacity(intervals.len() * 2);
                    for (a, b) in intervals {
                        let third = (b - a) / 3.0;
                        next.push((a, a + third));
                        next.push((b - third, b));
                    }
                    intervals = next;
                }
                let mut pts: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let coords: Vec<Vec<f64>> = pts.into_iter().map(|x| vec![x]).collect();
                euclidean(&coords)
            }
            Fixture::Cloud { n, dim, seed } => {
                if n < 2 {
                    return Err(Error::TooFewPoints { need: 2, have: n });
                }
                if dim == 0 {
                    return Err(Error::InvalidArgument("cloud dimension 0".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coords: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
                    .collect();
                euclidean(&coords)
            }
        }
    }
}

/// Euclidean space on explicit coordinates with unit weights.
///
/// The computed table is run to the shortest-path fixpoint before
/// validation: rounding can break the triangle inequality by an ulp on
/// nearly collinear triples, and the metric axioms are checked exactly.
pub fn euclidean(coords: &[Vec<f64>]) -> Result<MetricMeasureSpace> {
    let n = coords.len();
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist[i * n + j] = d2.sqrt();
        }
    }
    shortest_path_fixpoint(&mut dist, n);
    MetricMeasureSpace::new(ids, dist, vec![1.0; n], None)
}

/// Floyd–Warshall iterated to a fixpoint in floating point, so that
/// `d(x,z) <= fl(d(x,y) + d(y,z))` holds for every triple afterwards.
/// Exact tables (integer distances) pass through bitwise unchanged.
pub fn shortest_path_fixpoint(dist: &mut [f64], n: usize) {
    loop {
        let mut changed = false;
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                for j in 0..n {
                    let via = dik + dist[k * n + j];
                    if via < dist[i * n + j] {
                        dist[i * n + j] = via;
                        changed = true;
                    }
                }
            }
        }
        // relaxations are order-dependent; keep the table symmetric and
        // iterate until both steps are stable
        for i in 0..n {
            for j in (i + 1)..n {
                let a = dist[i * n + j];
                let b = dist[j * n + i];
                if a != b {
                    let d = a.min(b);
                    dist[i * n + j] = d;
                    dist[j * n + i] = d;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Shared handle used across the builder pipeline.
pub type SpaceRef = Arc<MetricMeasureSpace>;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn line4() -> MetricMeasureSpace {
        Fixture::Line4.build().unwrap()
    }

    #[test]
    fn line4_shape() {
        let s = line4();
        assert_eq!(s.len(), 4);
        assert_abs_diff_eq!(s.total_mass(), 4.0);
        assert_eq!(s.dist(0, 3), 3.0);
        assert_eq!(s.base_point(), 0);
    }

    #[test]
    fn ring_diameter_is_half_n() {
        let s = Fixture::Ring { n: 16 }.build().unwrap();
        assert_eq!(s.diameter(), 8.0);
    }

    #[test]
    fn cloud_is_deterministic() {
        let a = Fixture::Cloud { n: 64, dim: 2, seed: 7 }.build().unwrap();
        let b = Fixture::Cloud { n: 64, dim: 2, seed: 7 }.build().unwrap();
        for i in 0..a.len() {
            for j in 0..a.len() {
                assert_eq!(a.dist(i, j), b.dist(i, j));
            }
        }
        assert_eq!(a.token(), b.token());
    }

    #[test]
    fn fixture_parsing() {
        assert_eq!(Fixture::parse("line4").unwrap(), Fixture::Line4);
        assert_eq!(Fixture::parse("ring:16").unwrap(), Fixture::Ring { n: 16 });
        assert_eq!(
            Fixture::parse("cloud:64,2,7").unwrap(),
            Fixture::Cloud { n: 64, dim: 2, seed: 7 }
        );
        assert!(Fixture::parse("torus:3").is_err());
        assert!(Fixture::Ring { n: 1 }.build().is_err());
    }

    #[test]
    fn triangle_violation_reports_worst_triple() {
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let dist = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        match MetricMeasureSpace::new(ids, dist, vec![1.0; 3], None) {
            Err(Error::Triangle { x, z, dxz, sum, .. }) => {
                assert_eq!((x.as_str(), z.as_str()), ("a", "c"));
                assert_eq!(dxz, 5.0);
                assert_eq!(sum, 2.0);
            }
            other => panic!("expected triangle error, got {other:?}"),
        }
    }

    #[test]
    fn inner_products_on_line4() {
        let s = line4();
        let one = s.constant_fn(1.0);
        let coord = s.point_fn(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(s.inner(&one, &one).unwrap(), 4.0);
        assert_abs_diff_eq!(s.inner(&coord, &one).unwrap(), 6.0);
    }

    #[test]
    fn inner_rejects_foreign_functions() {
        let s = line4();
        let other = Fixture::Ring { n: 4 }.build().unwrap();
        let f = other.constant_fn(1.0);
        assert!(matches!(
            s.inner(&f, &f),
            Err(Error::SpaceMismatch(_))
        ));
    }

    #[test]
    fn doubling_on_line4() {
        let s = line4();
        let rep = doubling_report(&s, None);
        assert_abs_diff_eq!(rep.c_hat, 3.0);
        assert_eq!(rep.witness_point, "p1");
        assert_abs_diff_eq!(rep.n_hat, 3.0f64.log2());
    }

    #[test]
    fn doubling_single_point() {
        let s = MetricMeasureSpace::new(vec!["p0".into()], vec![0.0], vec![1.0], None).unwrap();
        let rep = doubling_report(&s, None);
        assert_eq!(rep.c_hat, 1.0);
        assert_eq!(rep.covering_n0, 1);
    }

    #[test]
    fn doubling_on_ring16_at_most_three() {
        let s = Fixture::Ring { n: 16 }.build().unwrap();
        let rep = doubling_report(&s, None);
        assert!(rep.c_hat <= 3.0 + 1e-12, "c_hat = {}", rep.c_hat);
        assert!(rep.c_hat >= 1.0);
    }

    #[test]
    fn doubling_is_reproducible() {
        let s = Fixture::Cloud { n: 32, dim: 2, seed: 3 }.build().unwrap();
        let a = doubling_report(&s, None);
        let b = doubling_report(&s, None);
        assert_eq!(a.c_hat, b.c_hat);
        assert_eq!(a.witness_point, b.witness_point);
        assert_eq!(a.witness_radius, b.witness_radius);
    }

    #[test]
    fn measure_distance_line4() {
        let s = line4();
        assert_abs_diff_eq!(measure_distance(&s, 0, 1), 2.0);
        assert_abs_diff_eq!(measure_distance(&s, 0, 3), 4.0);
        assert_abs_diff_eq!(measure_distance(&s, 2, 2), 1.0);
    }

    #[test]
    fn measure_distance_matches_enumeration_oracle() {
        let s = Fixture::Cloud { n: 24, dim: 2, seed: 11 }.build().unwrap();
        // Oracle: enumerate every realizable ball point-set on the critical
        // grid and take the least mass among those containing both points.
        let grid = s.critical_radii();
        for (x, y) in [(0usize, 1usize), (3, 17), (5, 5), (20, 2)] {
            let mut oracle = f64::INFINITY;
            for c in 0..s.len() {
                for &r in &grid {
                    let b = s.ball(c, r);
                    if b.contains(&x) && b.contains(&y) {
                        let mass: f64 = b.iter().map(|&p| s.weight(p)).sum();
                        oracle = oracle.min(mass);
                    }
                }
            }
            if x == y {
                oracle = oracle.min(s.weight(x));
            }
            assert_abs_diff_eq!(measure_distance(&s, x, y), oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn ball_monotone_in_radius() {
        let s = Fixture::Cantor { depth: 3 }.build().unwrap();
        let grid = s.critical_radii();
        for x in 0..s.len() {
            let mut prev = -1.0;
            for &r in &grid {
                let v = s.volume(x, r);
                assert!(v >= prev);
                prev = v;
            }
        }
    }
}
