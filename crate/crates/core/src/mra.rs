//! Spline bases and the multiresolution ladder.
//!
//! Haar mode is the workhorse: splines are exact cube indicators, the ladder
//! nests exactly and every identity downstream (wavelets, paraproducts) runs
//! on it. Smoothed mode averages the indicators over seeded randomized cube
//! replicas; it exists to study regularity and decay and is refused by the
//! operations that need the exact nested ladder.
//!
//! Spline values are stored as integer replica counts over a common
//! denominator, so partition of unity and the interpolation property are
//! checked in integer arithmetic with zero error in both modes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dyadic::{build_cubes, DyadicSystem, NetHierarchy, TieBreak};
use crate::error::{Error, Result};
use crate::linalg;
use crate::space::PointFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplineMode {
    Haar,
    Smoothed { replicas: u32, seed: u64 },
}

impl SplineMode {
    pub fn is_haar(&self) -> bool {
        matches!(self, SplineMode::Haar)
    }
}

/// Per-level spline family `s^k_alpha` with masses and refinement data.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    pub system: Arc<DyadicSystem>,
    pub mode: SplineMode,
    /// Integer numerators: `counts[idx(k)][local_alpha][point]`, value =
    /// counts / denom.
    counts: Vec<Vec<Vec<u32>>>,
    denom: u32,
    /// Masses `nu^k_alpha = integral of s^k_alpha`.
    nu: Vec<Vec<f64>>,
    /// Ball masses `mu^k_alpha = V(x^k_alpha, delta^k)`.
    mu_ball: Vec<Vec<f64>>,
    /// Refinement of each level-k spline in the level-(k+1) family:
    /// `(local beta index, coefficient)` pairs. Exact 0/1 children in haar
    /// mode, least-squares fits in smoothed mode.
    refinement: Vec<Vec<Vec<(usize, f64)>>>,
    /// Max L2 refinement residual (0 in haar mode).
    pub refinement_residual: f64,
    /// Per-level Gram matrices of the raw splines (only kept in smoothed
    /// mode, where projections need dense solves).
    gram_cache: Option<Vec<DMatrix<f64>>>,
}

/// Builds the spline family for a dyadic system.
pub fn build_splines(system: Arc<DyadicSystem>, mode: SplineMode) -> Result<SplineBasis> {
    let space = &system.space;
    let n = space.len();
    let levels: Vec<i32> = system.levels().collect();

    let denom;
    let mut counts: Vec<Vec<Vec<u32>>> = Vec::with_capacity(levels.len());
    match mode {
        SplineMode::Haar => {
            denom = 1;
            for &k in &levels {
                let net = system.net(k);
                let assign = system.assignment(k);
                let mut lvl = vec![vec![0u32; n]; net.len()];
                for (x, &a) in assign.iter().enumerate() {
                    let li = net.iter().position(|&c| c == a).expect("center in net");
                    lvl[li][x] = 1;
                }
                counts.push(lvl);
            }
        }
        SplineMode::Smoothed { replicas, seed } => {
            if replicas == 0 {
                return Err(Error::InvalidArgument(
                    "smoothed mode needs at least one replica".into(),
                ));
            }
            denom = replicas;
            for &k in &levels {
                counts.push(vec![vec![0u32; n]; system.net(k).len()]);
            }
            let hierarchy: NetHierarchy = system.hierarchy();
            for r in 0..replicas {
                let replica_seed =
                    seed ^ (r as u64 + 1).wrapping_mul(0xa076_1d64_78bd_642f);
                let replica = build_cubes(&hierarchy, TieBreak::randomized(replica_seed))?;
                if replica.k_min != system.k_min || replica.k_max != system.k_max {
                    return Err(Error::InvalidArgument(
                        "inconsistent replica scale range".into(),
                    ));
                }
                for (li, &k) in levels.iter().enumerate() {
                    let net = system.net(k);
                    let assign = replica.assignment(k);
                    for (x, &a) in assign.iter().enumerate() {
                        let ci = net.iter().position(|&c| c == a).expect("center in net");
                        counts[li][ci][x] += 1;
                    }
                }
            }
        }
    }

    let mut nu = Vec::with_capacity(levels.len());
    let mut mu_ball = Vec::with_capacity(levels.len());
    for (li, &k) in levels.iter().enumerate() {
        let net = system.net(k);
        let sep = system.scale(k);
        let mut nu_lvl = Vec::with_capacity(net.len());
        let mut mu_lvl = Vec::with_capacity(net.len());
        for (ci, &alpha) in net.iter().enumerate() {
            let mass: f64 = (0..n)
                .map(|x| counts[li][ci][x] as f64 / denom as f64 * space.weight(x))
                .sum();
            if mass <= 0.0 {
                return Err(Error::SplineCheck {
                    check: "positive-mass",
                    level: k,
                    center: space.id(alpha).to_string(),
                    detail: format!("nu = {mass}"),
                });
            }
            nu_lvl.push(mass);
            mu_lvl.push(space.volume(alpha, sep));
        }
        nu.push(nu_lvl);
        mu_ball.push(mu_lvl);
    }

    let mut basis = SplineBasis {
        system,
        mode,
        counts,
        denom,
        nu,
        mu_ball,
        refinement: Vec::new(),
        refinement_residual: 0.0,
        gram_cache: None,
    };

    if !mode.is_haar() {
        let mut grams = Vec::new();
        for &k in &levels {
            grams.push(basis.raw_gram(k));
        }
        basis.gram_cache = Some(grams);
    }

    basis.compute_refinement()?;
    Ok(basis)
}

impl SplineBasis {
    pub fn k_min(&self) -> i32 {
        self.system.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.system.k_max
    }

    fn li(&self, k: i32) -> usize {
        self.system.idx(k)
    }

    pub fn denom(&self) -> u32 {
        self.denom
    }

    /// Integer numerator of `s^k_alpha(x)` over `denom()`.
    pub fn count(&self, k: i32, local: usize, x: usize) -> u32 {
        self.counts[self.li(k)][local][x]
    }

    pub fn value(&self, k: i32, local: usize, x: usize) -> f64 {
        self.count(k, local, x) as f64 / self.denom as f64
    }

    pub fn local_index(&self, k: i32, alpha: usize) -> Option<usize> {
        self.system.net(k).iter().position(|&c| c == alpha)
    }

    pub fn nu(&self, k: i32, local: usize) -> f64 {
        self.nu[self.li(k)][local]
    }

    pub fn mu_ball(&self, k: i32, local: usize) -> f64 {
        self.mu_ball[self.li(k)][local]
    }

    pub fn spline_fn(&self, k: i32, local: usize) -> PointFn {
        let v: Vec<f64> = (0..self.system.space.len())
            .map(|x| self.value(k, local, x))
            .collect();
        self.system.space.point_fn(v).expect("finite values")
    }

    /// The mass-normalized spline `s^k_alpha / nu^k_alpha`.
    pub fn normalized_spline_fn(&self, k: i32, local: usize) -> PointFn {
        self.spline_fn(k, local).scale(1.0 / self.nu(k, local))
    }

    /// Refinement of `s^k_alpha` in the level-(k+1) family as
    /// `(local beta, coefficient)` pairs.
    pub fn refinement(&self, k: i32, local: usize) -> &[(usize, f64)] {
        &self.refinement[self.li(k)][local]
    }

    fn raw_gram(&self, k: i32) -> DMatrix<f64> {
        let space = &self.system.space;
        let net = self.system.net(k);
        let m = net.len();
        let n = space.len();
        DMatrix::from_fn(m, m, |a, b| {
            (0..n)
                .map(|x| self.value(k, a, x) * self.value(k, b, x) * space.weight(x))
                .sum()
        })
    }

    fn labels(&self, k: i32) -> Vec<String> {
        self.system
            .net(k)
            .iter()
            .map(|&a| self.system.space.id(a).to_string())
            .collect()
    }

    fn compute_refinement(&mut self) -> Result<()> {
        let levels: Vec<i32> = self.system.levels().collect();
        let mut refinement = Vec::with_capacity(levels.len());
        let mut worst = 0.0f64;
        for &k in &levels {
            let net = self.system.net(k);
            let mut lvl = Vec::with_capacity(net.len());
            if k == self.k_max() {
                for _ in net {
                    lvl.push(Vec::new());
                }
                refinement.push(lvl);
                continue;
            }
            match self.mode {
                SplineMode::Haar => {
                    for &alpha in net {
                        let kids = self.system.children(k, alpha);
                        let fine_net = self.system.net(k + 1);
                        let pairs: Vec<(usize, f64)> = kids
                            .iter()
                            .map(|&b| {
                                (
                                    fine_net.iter().position(|&c| c == b).expect("child in net"),
                                    1.0,
                                )
                            })
                            .collect();
                        lvl.push(pairs);
                    }
                }
                SplineMode::Smoothed { .. } => {
                    let space = &self.system.space;
                    let n = space.len();
                    let fine = self.system.net(k + 1);
                    let gram = self.gram_cache.as_ref().expect("cache")[self.li(k + 1)].clone();
                    let labels = self.labels(k + 1);
                    for (ci, _alpha) in net.iter().enumerate() {
                        let rhs = DVector::from_fn(fine.len(), |b, _| {
                            (0..n)
                                .map(|x| {
                                    self.value(k, ci, x)
                                        * self.value(k + 1, b, x)
                                        * space.weight(x)
                                })
                                .sum()
                        });
                        let coef = linalg::solve_spd(&gram, &rhs, k + 1, &labels)?;
                        // residual of the least-squares fit
                        let mut res = 0.0f64;
                        for x in 0..n {
                            let fit: f64 = (0..fine.len())
                                .map(|b| coef[b] * self.value(k + 1, b, x))
                                .sum();
                            let d = self.value(k, ci, x) - fit;
                            res += d * d * space.weight(x);
                        }
                        worst = worst.max(res.sqrt());
                        let pairs: Vec<(usize, f64)> = (0..fine.len())
                            .filter(|&b| coef[b].abs() > 1e-14)
                            .map(|b| (b, coef[b]))
                            .collect();
                        lvl.push(pairs);
                    }
                }
            }
            refinement.push(lvl);
        }
        self.refinement = refinement;
        self.refinement_residual = worst;
        Ok(())
    }

    /// Orthogonal projection onto `V_k = span { s^k_alpha }` in the weighted
    /// inner product. Haar mode short-circuits to cube means.
    pub fn project(&self, k: i32, f: &PointFn) -> Result<PointFn> {
        self.system.check_level(k)?;
        self.system.space.check_fn(f)?;
        match self.mode {
            SplineMode::Haar => {
                let space = &self.system.space;
                let assign = self.system.assignment(k);
                let net = self.system.net(k);
                let mut sums = vec![0.0f64; net.len()];
                let mut masses = vec![0.0f64; net.len()];
                let local_of: std::collections::BTreeMap<usize, usize> = net
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (a, i))
                    .collect();
                for (x, &a) in assign.iter().enumerate() {
                    let li = local_of[&a];
                    sums[li] += f.value(x) * space.weight(x);
                    masses[li] += space.weight(x);
                }
                let mut out = vec![0.0f64; space.len()];
                for (x, &a) in assign.iter().enumerate() {
                    let li = local_of[&a];
                    out[x] = sums[li] / masses[li];
                }
                space.point_fn(out)
            }
            SplineMode::Smoothed { .. } => self.project_via_gram(k, f),
        }
    }

    /// Dense normal-equations projection; the general path, and the oracle
    /// the haar fast path is tested against.
    pub fn project_via_gram(&self, k: i32, f: &PointFn) -> Result<PointFn> {
        self.system.check_level(k)?;
        let space = &self.system.space;
        space.check_fn(f)?;
        let net = self.system.net(k);
        let m = net.len();
        let n = space.len();
        let gram = match &self.gram_cache {
            Some(c) => c[self.li(k)].clone(),
            None => self.raw_gram(k),
        };
        let rhs = DVector::from_fn(m, |a, _| {
            (0..n)
                .map(|x| f.value(x) * self.value(k, a, x) * space.weight(x))
                .sum()
        });
        let coef = linalg::solve_spd(&gram, &rhs, k, &self.labels(k))?;
        let mut out = vec![0.0f64; n];
        for x in 0..n {
            out[x] = (0..m).map(|a| coef[a] * self.value(k, a, x)).sum();
        }
        space.point_fn(out)
    }

    /// Detail operator `Q_k = P_{k+1} - P_k`, defined for `k <= k_max - 1`.
    pub fn detail(&self, k: i32, f: &PointFn) -> Result<PointFn> {
        if k >= self.k_max() {
            return Err(Error::LevelOutOfRange {
                level: k,
                min: self.k_min(),
                max: self.k_max() - 1,
            });
        }
        Ok(self.project(k + 1, f)?.sub(&self.project(k, f)?))
    }

    /// Sup-norm residual of the finite telescoping identity
    /// `f = P_l f + sum_{k=l}^{k_max-1} Q_k f`.
    pub fn telescope_residual(&self, f: &PointFn, l: i32) -> Result<f64> {
        self.system.check_level(l)?;
        let mut acc = self.project(l, f)?;
        for k in l..self.k_max() {
            acc = acc.add(&self.detail(k, f)?);
        }
        Ok(f.sub(&acc).linf())
    }

    /// Gram report at one level: the paper's ball-normalized matrix plus the
    /// Riesz bounds of the mass-normalized family.
    pub fn gram(&self, k: i32) -> Result<GramReport> {
        self.system.check_level(k)?;
        let raw = match &self.gram_cache {
            Some(c) => c[self.li(k)].clone(),
            None => self.raw_gram(k),
        };
        let m = raw.nrows();
        let mu_norm = DMatrix::from_fn(m, m, |a, b| {
            raw[(a, b)] / (self.mu_ball(k, a) * self.mu_ball(k, b)).sqrt()
        });
        let nu_norm = DMatrix::from_fn(m, m, |a, b| {
            raw[(a, b)] / (self.nu(k, a) * self.nu(k, b)).sqrt()
        });
        let (vals, _) = linalg::sym_eigen(&nu_norm);
        let lo = vals[0];
        let hi = *vals.last().expect("nonempty");
        if lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
            // rank-deficient: name the dependent columns via inv_sqrt's path
            return match linalg::inv_sqrt_spd(&nu_norm, k, &self.labels(k)) {
                Err(e) => Err(e),
                Ok(_) => Err(Error::RankDeficient {
                    level: k,
                    columns: vec![],
                }),
            };
        }
        Ok(GramReport {
            level: k,
            dim: m,
            mu_normalized: mu_norm,
            riesz_lower: lo,
            riesz_upper: hi,
            condition: hi / lo,
        })
    }
}

/// Gram data at one level. The matrix itself stays in memory; serialized
/// reports carry only the eigenvalue extremes and condition number.
#[derive(Debug, Clone)]
pub struct GramReport {
    pub level: i32,
    pub dim: usize,
    /// Entries `(s_a, s_b) / sqrt(mu_a mu_b)` (ball-normalized).
    pub mu_normalized: DMatrix<f64>,
    /// Extreme eigenvalues of the mass-normalized Gram: the Riesz bounds.
    pub riesz_lower: f64,
    pub riesz_upper: f64,
    pub condition: f64,
}

/// Outcome of the exact and measured spline checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineCheckReport {
    pub partition_exact: bool,
    pub interpolation_exact: bool,
    /// max over supports of `d(x, x_alpha) / delta^k` (hard < 8).
    pub max_support_ratio: f64,
    /// Fitted Hölder envelope for `|s(x)-s(y)| <= C (d/delta^k)^eta`;
    /// haar mode reports `eta_hat = 0` by design.
    pub holder_c: f64,
    pub holder_eta: f64,
    /// Exact haar refinement (always true in haar mode); smoothed mode
    /// reports the least-squares residual instead.
    pub refinement_exact: bool,
    pub refinement_residual: f64,
    /// |sum_alpha nu_alpha - mu(X)| per level, worst case.
    pub mass_defect: f64,
}

/// Asserts partition of unity and interpolation exactly (integer
/// arithmetic), the support radius, and fits the Hölder envelope.
pub fn spline_checks(basis: &SplineBasis) -> Result<SplineCheckReport> {
    let system = &basis.system;
    let space = &system.space;
    let n = space.len();

    let mut max_support_ratio = 0.0f64;
    let mut mass_defect = 0.0f64;
    let total = space.total_mass();

    for k in system.levels() {
        let net = system.net(k);
        let sep = system.scale(k);

        for x in 0..n {
            let s: u64 = (0..net.len())
                .map(|ci| basis.count(k, ci, x) as u64)
                .sum();
            if s != basis.denom() as u64 {
                return Err(Error::SplineCheck {
                    check: "partition-of-unity",
                    level: k,
                    center: space.id(x).to_string(),
                    detail: format!("sum {} / {}", s, basis.denom()),
                });
            }
        }

        for (ci, &alpha) in net.iter().enumerate() {
            for (cj, &beta) in net.iter().enumerate() {
                let want = if ci == cj { basis.denom() } else { 0 };
                if basis.count(k, ci, beta) != want {
                    return Err(Error::SplineCheck {
                        check: "interpolation",
                        level: k,
                        center: space.id(alpha).to_string(),
                        detail: format!(
                            "s({}) = {}/{}",
                            space.id(beta),
                            basis.count(k, ci, beta),
                            basis.denom()
                        ),
                    });
                }
            }

            for x in 0..n {
                if basis.count(k, ci, x) > 0 {
                    let ratio = space.dist(x, alpha) / sep;
                    max_support_ratio = max_support_ratio.max(ratio);
                    if ratio >= 8.0 {
                        return Err(Error::SplineCheck {
                            check: "support-radius",
                            level: k,
                            center: space.id(alpha).to_string(),
                            detail: format!("support point {} at {} delta^k", space.id(x), ratio),
                        });
                    }
                }
            }
        }

        let nu_sum: f64 = (0..net.len()).map(|ci| basis.nu(k, ci)).sum();
        mass_defect = mass_defect.max((nu_sum - total).abs());
    }

    // refinement
    let mut refinement_exact = true;
    if basis.mode.is_haar() {
        for k in system.k_min..system.k_max {
            let net = system.net(k);
            for (ci, _) in net.iter().enumerate() {
                let pairs = basis.refinement(k, ci);
                for x in 0..n {
                    let combined: u32 = pairs
                        .iter()
                        .map(|&(b, _)| basis.count(k + 1, b, x))
                        .sum();
                    if combined != basis.count(k, ci, x) {
                        return Err(Error::SplineCheck {
                            check: "refinement",
                            level: k,
                            center: space.id(net[ci]).to_string(),
                            detail: format!("mismatch at point {}", space.id(x)),
                        });
                    }
                }
            }
        }
    } else {
        refinement_exact = false;
    }

    // Hölder envelope over pairs with 0 < d <= delta^k
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in system.levels() {
        let sep = system.scale(k);
        let net = system.net(k);
        for (ci, _) in net.iter().enumerate() {
            for x in 0..n {
                for y in (x + 1)..n {
                    let d = space.dist(x, y);
                    if d <= 0.0 || d > sep {
                        continue;
                    }
                    let diff = (basis.value(k, ci, x) - basis.value(k, ci, y)).abs();
                    if diff > 0.0 {
                        xs.push((d / sep).ln());
                        ys.push(diff.ln());
                    }
                }
            }
        }
    }
    let (holder_c, holder_eta) = fit_envelope(&xs, &ys);

    Ok(SplineCheckReport {
        partition_exact: true,
        interpolation_exact: true,
        max_support_ratio,
        holder_c,
        holder_eta,
        refinement_exact,
        refinement_residual: basis.refinement_residual,
        mass_defect,
    })
}

/// Least-squares slope through `(x, y)` clamped at zero, then the intercept
/// raised to dominate every sample: `y <= log C + eta * x` for all samples.
/// Returns `(C, eta)`.
pub(crate) fn fit_envelope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if var > 0.0 { (cov / var).max(0.0) } else { 0.0 };
    let log_c = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - slope * x)
        .fold(f64::NEG_INFINITY, f64::max);
    (log_c.exp(), slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_nets, TieBreak};
    use crate::space::Fixture;
    use approx::assert_abs_diff_eq;

    fn haar_line4() -> SplineBasis {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        build_splines(d, SplineMode::Haar).unwrap()
    }

    #[test]
    fn haar_line4_indicators() {
        let b = haar_line4();
        let li = b.local_index(-1, 0).unwrap();
        assert_eq!(b.spline_fn(-1, li).values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(b.nu(-1, li), 2.0);
        let report = spline_checks(&b).unwrap();
        assert!(report.partition_exact && report.interpolation_exact);
        assert!(report.refinement_exact);
        assert_eq!(report.holder_eta, 0.0);
    }

    #[test]
    fn finest_level_splines_are_point_masses() {
        let b = haar_line4();
        for x in 0..4 {
            let li = b.local_index(0, x).unwrap();
            let f = b.spline_fn(0, li);
            for y in 0..4 {
                assert_eq!(f.value(y), if x == y { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn constant_level_spline_is_one() {
        let b = haar_line4();
        let li = b.local_index(-2, 0).unwrap();
        assert_eq!(b.spline_fn(-2, li).values(), &[1.0; 4]);
    }

    #[test]
    fn projections_match_worked_values() {
        let b = haar_line4();
        let f = b.system.space.point_fn(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let p = b.project(-1, &f).unwrap();
        assert_eq!(p.values(), &[0.5, 0.5, 2.5, 2.5]);
        let q = b.detail(-2, &f).unwrap();
        for (got, want) in q.values().iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let id = b.project(0, &f).unwrap();
        assert_eq!(id.values(), f.values());
    }

    #[test]
    fn fast_path_matches_gram_oracle() {
        let s = Arc::new(Fixture::Cloud { n: 40, dim: 2, seed: 3 }.build().unwrap());
        let nets = build_nets(Arc::clone(&s), 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = build_splines(d, SplineMode::Haar).unwrap();
        let f = s
            .point_fn((0..40).map(|i| ((i * 37 % 11) as f64) - 5.0).collect())
            .unwrap();
        for k in b.system.levels() {
            let fast = b.project(k, &f).unwrap();
            let oracle = b.project_via_gram(k, &f).unwrap();
            assert!(fast.sub(&oracle).linf() <= 1e-10, "level {k}");
        }
    }

    #[test]
    fn projection_idempotent_and_self_adjoint() {
        let b = haar_line4();
        let space = &b.system.space;
        let f = space.point_fn(vec![1.0, -2.0, 0.5, 4.0]).unwrap();
        let g = space.point_fn(vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        for k in b.system.levels() {
            let pf = b.project(k, &f).unwrap();
            let ppf = b.project(k, &pf).unwrap();
            assert!(pf.sub(&ppf).linf() <= 1e-10);
            let lhs = space.inner(&b.project(k, &f).unwrap(), &g).unwrap();
            let rhs = space.inner(&f, &b.project(k, &g).unwrap()).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
        // nesting composition: P_{k+1} P_k = P_k, Q_k P_k = 0
        for k in b.system.k_min..b.system.k_max {
            let pk = b.project(k, &f).unwrap();
            let up = b.project(k + 1, &pk).unwrap();
            assert!(up.sub(&pk).linf() <= 1e-10);
            assert!(b.detail(k, &pk).unwrap().linf() <= 1e-10);
        }
    }

    #[test]
    fn details_integrate_to_zero() {
        let b = haar_line4();
        let space = &b.system.space;
        let f = space.point_fn(vec![3.0, -1.0, 2.0, 7.0]).unwrap();
        for k in b.system.k_min..b.system.k_max {
            let q = b.detail(k, &f).unwrap();
            assert_abs_diff_eq!(space.integral(&q).unwrap(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn telescoping_vanishes() {
        let b = haar_line4();
        let f = b.system.space.point_fn(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(b.telescope_residual(&f, 0).unwrap() == 0.0);
        assert!(b.telescope_residual(&f, -2).unwrap() <= 1e-12);
    }

    #[test]
    fn telescoping_on_cloud() {
        let s = Arc::new(Fixture::Cloud { n: 64, dim: 2, seed: 7 }.build().unwrap());
        let nets = build_nets(Arc::clone(&s), 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = build_splines(d, SplineMode::Haar).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let f = s
            .point_fn((0..64).map(|_| rng.random_range(-4.0..4.0)).collect())
            .unwrap();
        assert!(b.telescope_residual(&f, b.k_min()).unwrap() <= 1e-10);
    }

    #[test]
    fn haar_gram_is_diagonal_with_unit_riesz() {
        let b = haar_line4();
        let g = b.gram(-1).unwrap();
        assert_abs_diff_eq!(g.riesz_lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.riesz_upper, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.condition, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.mu_normalized[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nesting_of_spans_haar() {
        // each coarse spline projects onto the finer span with no residual
        let b = haar_line4();
        for k in b.system.k_min..b.system.k_max {
            for ci in 0..b.system.net(k).len() {
                let s = b.spline_fn(k, ci);
                let up = b.project_via_gram(k + 1, &s).unwrap();
                assert!(s.sub(&up).linf() <= 1e-12);
            }
        }
    }

    fn smoothed_two_replica_opposite() -> (SplineBasis, u64) {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        // find a master seed whose two replicas split p1 between p0 and p2
        for seed in 0..200u64 {
            let b = build_splines(
                Arc::clone(&d),
                SplineMode::Smoothed { replicas: 2, seed },
            )
            .unwrap();
            let li = b.local_index(-1, 0).unwrap();
            if b.value(-1, li, 1) == 0.5 {
                return (b, seed);
            }
        }
        panic!("no seed with opposite replicas in range");
    }

    #[test]
    fn smoothed_two_replica_average() {
        let (b, _) = smoothed_two_replica_opposite();
        let li = b.local_index(-1, 0).unwrap();
        assert_eq!(b.value(-1, li, 1), 0.5);
        let report = spline_checks(&b).unwrap();
        assert!(report.partition_exact && report.interpolation_exact);
        assert!(report.holder_eta > 0.0);
    }

    #[test]
    fn smoothed_partition_exact_many_replicas() {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = build_splines(d, SplineMode::Smoothed { replicas: 100, seed: 1 }).unwrap();
        let report = spline_checks(&b).unwrap();
        // partition of unity is checked in integer counts: exact
        assert!(report.partition_exact);
        // mass sums are floating quotients in smoothed mode
        assert!(report.mass_defect <= 1e-12);
    }

    #[test]
    fn smoothed_gram_has_overlap() {
        let (b, _) = smoothed_two_replica_opposite();
        let g = b.gram(-1).unwrap();
        assert!(g.mu_normalized[(0, 1)] > 0.0);
        assert!(g.condition > 1.0);
    }

    #[test]
    fn zero_replicas_is_an_error() {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        assert!(build_splines(d, SplineMode::Smoothed { replicas: 0, seed: 0 }).is_err());
    }

    #[test]
    fn mass_sums_match_total() {
        let b = haar_line4();
        let total = b.system.space.total_mass();
        for k in b.system.levels() {
            let sum: f64 = (0..b.system.net(k).len()).map(|ci| b.nu(k, ci)).sum();
            assert_eq!(sum, total); // unit weights: exact
        }
    }
}
