//! Orthonormal wavelets spanning the detail spaces `W_k = V_{k+1} - V_k`.
//!
//! Per level, the candidates are the detail projections of the mass-
//! normalized splines attached to the newly appearing net points; symmetric
//! (inverse-square-root) orthogonalization of the candidate Gram preserves
//! their locality and fixes the basis uniquely up to sign. Signs follow the
//! convention `psi^k_beta(y^k_beta) > 0`. The coarse space `V_{k_min}` gets
//! the same treatment applied to its own splines; with the natural scale
//! range that is the single normalized constant.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mra::{fit_envelope, SplineBasis};
use crate::space::PointFn;
use crate::tol;

/// Exponential-decay envelope fit `|psi(x)| sqrt(V(y, delta^k)) <= C
/// exp(-nu d(y, x) / delta^k)`, in log form.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_hat: f64,
    pub nu_hat: f64,
    pub samples: usize,
    /// Samples above the fitted envelope (0 by construction of the fit).
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct WaveletBasis {
    pub splines: Arc<SplineBasis>,
    /// `wavelets[li(k)][j]` = values of the wavelet attached to the j-th new
    /// label of level k.
    wavelets: Vec<Vec<Vec<f64>>>,
    /// Orthonormal basis of `V_{k_min}`, one function per coarse center.
    coarse: Vec<Vec<f64>>,
    pub decay_per_level: Vec<Option<DecayFit>>,
    pub decay_global: DecayFit,
    /// Measured lower-bound radius (in units of `delta^k`): largest radius
    /// such that `|psi| >= 0.1 / sqrt(mu(Q^k_alpha))` holds on
    /// `B(y, rho delta^k) ∩ Q^k_alpha` for every wavelet.
    pub eps0_hat: f64,
    pub eps0_per_level: Vec<f64>,
}

/// Wavelet coefficients of one function: `(level, new label) -> value` plus
/// the coarse-space coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq {
    pub entries: BTreeMap<(i32, usize), f64>,
    pub coarse: Vec<f64>,
    token: u64,
}

impl CoeffSeq {
    pub fn new(entries: BTreeMap<(i32, usize), f64>, coarse: Vec<f64>, token: u64) -> Self {
        Self {
            entries,
            coarse,
            token,
        }
    }

    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn sum_squares(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>()
            + self.coarse.iter().map(|v| v * v).sum::<f64>()
    }
}

const LOWER_BOUND_FRACTION: f64 = 0.1;

pub fn build_wavelets(splines: Arc<SplineBasis>) -> Result<WaveletBasis> {
    if !splines.mode.is_haar() {
        return Err(Error::SmoothedRefused("wavelet construction"));
    }
    let system = &splines.system;
    let space = &system.space;
    let n = space.len();

    let mut wavelets: Vec<Vec<Vec<f64>>> = Vec::new();
    for k in system.k_min..system.k_max {
        let labels = system.new_labels(k);
        if labels.is_empty() {
            wavelets.push(Vec::new());
            continue;
        }
        // candidates: detail projections of the normalized finer splines
        let mut cands: Vec<PointFn> = Vec::with_capacity(labels.len());
        for &beta in labels {
            let lb = splines
                .local_index(k + 1, beta)
                .expect("new label lives in the finer net");
            let g = splines
                .spline_fn(k + 1, lb)
                .scale(1.0 / splines.nu(k + 1, lb).sqrt());
            cands.push(splines.detail(k, &g)?);
        }
        let m = cands.len();
        let gram = DMatrix::from_fn(m, m, |a, b| {
            space.inner(&cands[a], &cands[b]).expect("same space")
        });
        let labels_str: Vec<String> = labels.iter().map(|&b| space.id(b).to_string()).collect();
        let w = linalg::inv_sqrt_spd(&gram, k, &labels_str).map_err(|e| match e {
            Error::RankDeficient { level, columns } => Error::WaveletConstruction {
                level,
                detail: format!(
                    "candidate Gram rank-deficient (new labels vs detail dimension); columns {columns:?}"
                ),
            },
            other => other,
        })?;
        let mut lvl: Vec<Vec<f64>> = Vec::with_capacity(m);
        for j in 0..m {
            let mut vals = vec![0.0f64; n];
            for (i, cand) in cands.iter().enumerate() {
                let c = w[(i, j)];
                if c != 0.0 {
                    for (x, v) in vals.iter_mut().enumerate() {
                        *v += c * cand.value(x);
                    }
                }
            }
            let at_center = vals[labels[j]];
            if at_center == 0.0 {
                return Err(Error::WaveletConstruction {
                    level: k,
                    detail: format!(
                        "sign convention ill-defined: psi vanishes at its own label {}",
                        space.id(labels[j])
                    ),
                });
            }
            if at_center < 0.0 {
                for v in vals.iter_mut() {
                    *v = -*v;
                }
            }
            lvl.push(vals);
        }
        wavelets.push(lvl);
    }

    // coarse basis: symmetric orthogonalization of the coarsest splines
    let k0 = system.k_min;
    let coarse_net = system.net(k0);
    let mut coarse_raw: Vec<PointFn> = Vec::with_capacity(coarse_net.len());
    for ci in 0..coarse_net.len() {
        coarse_raw.push(
            splines
                .spline_fn(k0, ci)
                .scale(1.0 / splines.nu(k0, ci).sqrt()),
        );
    }
    let mc = coarse_raw.len();
    let gram = DMatrix::from_fn(mc, mc, |a, b| {
        space.inner(&coarse_raw[a], &coarse_raw[b]).expect("same space")
    });
    let labels_str: Vec<String> = coarse_net.iter().map(|&c| space.id(c).to_string()).collect();
    let w = linalg::inv_sqrt_spd(&gram, k0, &labels_str)?;
    let mut coarse: Vec<Vec<f64>> = Vec::with_capacity(mc);
    for j in 0..mc {
        let mut vals = vec![0.0f64; n];
        for (i, raw) in coarse_raw.iter().enumerate() {
            let c = w[(i, j)];
            for (x, v) in vals.iter_mut().enumerate() {
                *v += c * raw.value(x);
            }
        }
        if vals[coarse_net[j]] < 0.0 {
            for v in vals.iter_mut() {
                *v = -*v;
            }
        }
        coarse.push(vals);
    }

    let mut basis = WaveletBasis {
        splines,
        wavelets,
        coarse,
        decay_per_level: Vec::new(),
        decay_global: DecayFit {
            c_hat: 0.0,
            nu_hat: 0.0,
            samples: 0,
            violations: 0,
        },
        eps0_hat: f64::INFINITY,
        eps0_per_level: Vec::new(),
    };
    basis.fit_decay();
    basis.measure_lower_bound_radius();
    Ok(basis)
}

impl WaveletBasis {
    pub fn system(&self) -> &Arc<crate::dyadic::DyadicSystem> {
        &self.splines.system
    }

    pub fn k_min(&self) -> i32 {
        self.splines.k_min()
    }

    pub fn k_max(&self) -> i32 {
        self.splines.k_max()
    }

    fn li(&self, k: i32) -> usize {
        self.splines.system.idx(k)
    }

    /// New labels (wavelet indices) at level `k`.
    pub fn labels(&self, k: i32) -> &[usize] {
        self.splines.system.new_labels(k)
    }

    /// Wavelet levels: `k_min ..= k_max - 1`.
    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min()..self.k_max()
    }

    pub fn wavelet_count(&self) -> usize {
        self.wavelets.iter().map(|l| l.len()).sum()
    }

    pub fn coarse_count(&self) -> usize {
        self.coarse.len()
    }

    pub fn wavelet_values(&self, k: i32, j: usize) -> &[f64] {
        &self.wavelets[self.li(k)][j]
    }

    pub fn wavelet_fn(&self, k: i32, beta: usize) -> Result<PointFn> {
        let j = self
            .labels(k)
            .iter()
            .position(|&b| b == beta)
            .ok_or(Error::MissingCoefficient {
                level: k,
                id: self.splines.system.space.id(beta).to_string(),
            })?;
        self.splines
            .system
            .space
            .point_fn(self.wavelets[self.li(k)][j].clone())
    }

    pub fn coarse_fn(&self, j: usize) -> PointFn {
        self.splines
            .system
            .space
            .point_fn(self.coarse[j].clone())
            .expect("finite values")
    }

    /// The level-k cube containing the new label `beta`: the `alpha` of the
    /// double-index alias `psi^k_{alpha, beta} = psi^k_beta`.
    pub fn home_cube(&self, k: i32, beta: usize) -> usize {
        self.splines.system.parent_of(k, beta)
    }

    /// The triple index set: `(k, alpha, beta)` over all wavelets.
    pub fn triples(&self) -> impl Iterator<Item = (i32, usize, usize)> + '_ {
        self.levels().flat_map(move |k| {
            self.labels(k)
                .iter()
                .map(move |&beta| (k, self.home_cube(k, beta), beta))
        })
    }

    pub fn analyze(&self, f: &PointFn) -> Result<CoeffSeq> {
        let space = &self.splines.system.space;
        space.check_fn(f)?;
        let n = space.len();
        let mut entries = BTreeMap::new();
        for k in self.levels() {
            for (j, &beta) in self.labels(k).iter().enumerate() {
                let vals = &self.wavelets[self.li(k)][j];
                let c: f64 = (0..n).map(|x| f.value(x) * vals[x] * space.weight(x)).sum();
                entries.insert((k, beta), c);
            }
        }
        let coarse = self
            .coarse
            .iter()
            .map(|vals| (0..n).map(|x| f.value(x) * vals[x] * space.weight(x)).sum())
            .collect();
        Ok(CoeffSeq::new(entries, coarse, space.token()))
    }

    pub fn synthesize(&self, c: &CoeffSeq) -> Result<PointFn> {
        let space = &self.splines.system.space;
        if c.token() != space.token() {
            return Err(Error::SpaceMismatch("coefficients from another space"));
        }
        if c.coarse.len() != self.coarse.len() {
            return Err(Error::SpaceMismatch("coarse coefficient count differs"));
        }
        let n = space.len();
        let mut out = vec![0.0f64; n];
        for (&(k, beta), &v) in &c.entries {
            let j = self
                .labels(k)
                .iter()
                .position(|&b| b == beta)
                .ok_or(Error::MissingCoefficient {
                    level: k,
                    id: space.id(beta).to_string(),
                })?;
            let vals = &self.wavelets[self.li(k)][j];
            for (x, o) in out.iter_mut().enumerate() {
                *o += v * vals[x];
            }
        }
        for (j, &v) in c.coarse.iter().enumerate() {
            for (x, o) in out.iter_mut().enumerate() {
                *o += v * self.coarse[j][x];
            }
        }
        space.point_fn(out)
    }

    /// Zero coefficients with the full index set of this basis.
    pub fn zero_coeffs(&self) -> CoeffSeq {
        let mut entries = BTreeMap::new();
        for k in self.levels() {
            for &beta in self.labels(k) {
                entries.insert((k, beta), 0.0);
            }
        }
        CoeffSeq::new(
            entries,
            vec![0.0; self.coarse.len()],
            self.splines.system.space.token(),
        )
    }

    fn fit_decay(&mut self) {
        let system = &self.splines.system;
        let space = &system.space;
        let n = space.len();
        let mut per_level = Vec::new();
        let mut all_ts = Vec::new();
        let mut all_us = Vec::new();
        for k in self.levels() {
            let sep = system.scale(k);
            let mut ts = Vec::new();
            let mut us = Vec::new();
            for (j, &beta) in self.labels(k).iter().enumerate() {
                let vol = space.volume(beta, sep).sqrt();
                for x in 0..n {
                    let v = self.wavelets[self.li(k)][j][x].abs();
                    if v > 0.0 {
                        ts.push(-(space.dist(beta, x) / sep));
                        us.push((v * vol).ln());
                    }
                }
            }
            if ts.is_empty() {
                per_level.push(None);
            } else {
                let (c, nu) = fit_envelope(&ts, &us);
                per_level.push(Some(DecayFit {
                    c_hat: c,
                    nu_hat: nu,
                    samples: ts.len(),
                    violations: 0,
                }));
            }
            all_ts.extend_from_slice(&ts);
            all_us.extend_from_slice(&us);
        }
        let (c, nu) = fit_envelope(&all_ts, &all_us);
        self.decay_per_level = per_level;
        self.decay_global = DecayFit {
            c_hat: c,
            nu_hat: nu,
            samples: all_ts.len(),
            violations: 0,
        };
    }

    fn measure_lower_bound_radius(&mut self) {
        let system = &self.splines.system;
        let space = &system.space;
        let mut per_level = Vec::new();
        let mut global = f64::INFINITY;
        for k in self.levels() {
            let sep = system.scale(k);
            let mut level_rho = f64::INFINITY;
            for (j, &beta) in self.labels(k).iter().enumerate() {
                let alpha = self.home_cube(k, beta);
                let cube = system.cube_points(k, alpha);
                let mass: f64 = cube.iter().map(|&x| space.weight(x)).sum();
                let threshold = LOWER_BOUND_FRACTION / mass.sqrt();
                let mut rho = f64::INFINITY;
                for &x in &cube {
                    if self.wavelets[self.li(k)][j][x].abs() < threshold {
                        rho = rho.min(space.dist(beta, x) / sep);
                    }
                }
                level_rho = level_rho.min(rho);
            }
            per_level.push(level_rho);
            global = global.min(level_rho);
        }
        self.eps0_per_level = per_level;
        self.eps0_hat = global;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveletCheckReport {
    pub count: usize,
    pub coarse_count: usize,
    pub completeness_ok: bool,
    pub orthonormality_max_dev: f64,
    pub moment_max_abs: f64,
    pub sign_ok: bool,
    pub span_max_dev: f64,
    pub roundtrip_max_rel: f64,
    pub index_bookkeeping_ok: bool,
    pub decay_nu_global: f64,
    pub decay_violations: usize,
    pub eps0_hat: f64,
    /// Report-only fits on smoothed candidate wavelets, when a companion
    /// basis is supplied: (decay nu, Hölder eta).
    pub smoothed_fits: Option<(f64, f64)>,
}

/// Asserts orthonormality, vanishing moments, completeness, the sign
/// convention, the per-level span identity and index bookkeeping; measures
/// decay and the lower-bound radius. Hard failures return the witness.
pub fn wavelet_checks(
    basis: &WaveletBasis,
    smoothed_companion: Option<&SplineBasis>,
) -> Result<WaveletCheckReport> {
    let system = &basis.splines.system;
    let space = &system.space;
    let n = space.len();

    // gather all basis functions
    let mut all: Vec<(String, PointFn)> = Vec::new();
    for k in basis.levels() {
        for &beta in basis.labels(k) {
            all.push((
                format!("psi[{} @ {}]", k, space.id(beta)),
                basis.wavelet_fn(k, beta)?,
            ));
        }
    }
    for j in 0..basis.coarse_count() {
        all.push((format!("coarse[{j}]"), basis.coarse_fn(j)));
    }

    let count = basis.wavelet_count();
    let completeness_ok = count + basis.coarse_count() == n;
    if !completeness_ok {
        return Err(Error::WaveletConstruction {
            level: basis.k_min(),
            detail: format!(
                "{} wavelets + {} coarse != {} points",
                count,
                basis.coarse_count(),
                n
            ),
        });
    }

    let mut ortho_dev = 0.0f64;
    for (i, (ni, fi)) in all.iter().enumerate() {
        for (j, (nj, fj)) in all.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            let dev = (space.inner(fi, fj)? - want).abs();
            ortho_dev = ortho_dev.max(dev);
            if dev > tol::ORTHO {
                return Err(Error::WaveletConstruction {
                    level: basis.k_min(),
                    detail: format!("orthonormality defect {dev:.3e} between {ni} and {nj}"),
                });
            }
        }
    }

    let mut moment = 0.0f64;
    for k in basis.levels() {
        for &beta in basis.labels(k) {
            let m = space.integral(&basis.wavelet_fn(k, beta)?)?.abs();
            moment = moment.max(m);
            if m > tol::HAND {
                return Err(Error::WaveletConstruction {
                    level: k,
                    detail: format!(
                        "vanishing moment fails at {}: integral {m:.3e}",
                        space.id(beta)
                    ),
                });
            }
        }
    }

    let sign_ok = true;
    for k in basis.levels() {
        for &beta in basis.labels(k) {
            if basis.wavelet_fn(k, beta)?.value(beta) <= 0.0 {
                return Err(Error::WaveletConstruction {
                    level: k,
                    detail: format!("sign convention violated at {}", space.id(beta)),
                });
            }
        }
    }

    // span: sum_beta psi (psi . w)^T equals the detail operator matrix
    let mut span_dev = 0.0f64;
    for k in basis.levels() {
        let mut op: DMatrix<f64> = DMatrix::zeros(n, n);
        for (j, _) in basis.labels(k).iter().enumerate() {
            let vals = &basis.wavelets[basis.li(k)][j];
            for x in 0..n {
                for y in 0..n {
                    op[(x, y)] += vals[x] * vals[y] * space.weight(y);
                }
            }
        }
        for y in 0..n {
            let e = space.indicator_fn(&[y]);
            let q = basis.splines.detail(k, &e)?;
            for x in 0..n {
                span_dev = span_dev.max((op[(x, y)] - q.value(x)).abs());
            }
        }
        if span_dev > tol::ORTHO {
            return Err(Error::WaveletConstruction {
                level: k,
                detail: format!("span defect {span_dev:.3e} against the detail operator"),
            });
        }
    }

    // index bookkeeping: the union of L~(k, alpha) over branching cubes is
    // exactly the set of new labels
    let index_ok = true;
    for k in basis.levels() {
        let mut from_children: Vec<usize> = Vec::new();
        for &alpha in system.net(k) {
            let kids = system.children(k, alpha);
            if kids.len() > 1 {
                from_children.extend(kids.into_iter().filter(|&b| b != alpha));
            }
        }
        from_children.sort_unstable();
        if from_children != basis.labels(k) {
            return Err(Error::WaveletConstruction {
                level: k,
                detail: "new labels differ from the union of branching children".into(),
            });
        }
    }

    // round trip on a few deterministic probes
    let mut roundtrip = 0.0f64;
    for probe in 0..3usize {
        let f = space.point_fn(
            (0..n)
                .map(|x| ((x * 31 + probe * 17) % 13) as f64 - 6.0)
                .collect(),
        )?;
        let back = basis.synthesize(&basis.analyze(&f)?)?;
        let scale = f.linf().max(1e-30);
        roundtrip = roundtrip.max(f.sub(&back).linf() / scale);
    }
    if roundtrip > tol::ORTHO {
        return Err(Error::WaveletConstruction {
            level: basis.k_min(),
            detail: format!("round-trip residual {roundtrip:.3e}"),
        });
    }

    let smoothed_fits = match smoothed_companion {
        None => None,
        Some(sm) => {
            let mut ts = Vec::new();
            let mut us = Vec::new();
            let mut hx = Vec::new();
            let mut hy = Vec::new();
            for k in sm.system.k_min..sm.system.k_max {
                let sep = sm.system.scale(k);
                for &beta in sm.system.new_labels(k) {
                    let lb = match sm.local_index(k + 1, beta) {
                        Some(i) => i,
                        None => continue,
                    };
                    let g = sm
                        .spline_fn(k + 1, lb)
                        .scale(1.0 / sm.nu(k + 1, lb).sqrt());
                    let cand = sm.project_via_gram(k + 1, &g)?.sub(&sm.project_via_gram(k, &g)?);
                    let vol = space.volume(beta, sep).sqrt();
                    for x in 0..n {
                        let v = cand.value(x).abs();
                        if v > 1e-14 {
                            ts.push(-(space.dist(beta, x) / sep));
                            us.push((v * vol).ln());
                        }
                    }
                    for x in 0..n {
                        for y in (x + 1)..n {
                            let d = space.dist(x, y);
                            if d <= 0.0 || d > sep {
                                continue;
                            }
                            let diff = (cand.value(x) - cand.value(y)).abs();
                            if diff > 1e-14 {
                                hx.push((d / sep).ln());
                                hy.push(diff.ln());
                            }
                        }
                    }
                }
            }
            let (_, nu) = fit_envelope(&ts, &us);
            let (_, eta) = fit_envelope(&hx, &hy);
            Some((nu, eta))
        }
    };

    Ok(WaveletCheckReport {
        count,
        coarse_count: basis.coarse_count(),
        completeness_ok,
        orthonormality_max_dev: ortho_dev,
        moment_max_abs: moment,
        sign_ok,
        span_max_dev: span_dev,
        roundtrip_max_rel: roundtrip,
        index_bookkeeping_ok: index_ok,
        decay_nu_global: basis.decay_global.nu_hat,
        decay_violations: basis.decay_global.violations,
        eps0_hat: basis.eps0_hat,
        smoothed_fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_cubes, build_nets, TieBreak};
    use crate::mra::{build_splines, SplineMode};
    use crate::space::Fixture;
    use approx::assert_abs_diff_eq;

    pub(crate) fn haar_basis(fix: Fixture, delta: f64) -> WaveletBasis {
        let s = Arc::new(fix.build().unwrap());
        let nets = build_nets(s, delta).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = Arc::new(build_splines(d, SplineMode::Haar).unwrap());
        build_wavelets(b).unwrap()
    }

    #[test]
    fn line4_matches_hand_basis() {
        let w = haar_basis(Fixture::Line4, 0.5);
        let r = 0.5f64.sqrt();
        let psi_p1 = w.wavelet_fn(-1, 1).unwrap();
        for (got, want) in psi_p1.values().iter().zip([-r, r, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let psi_p3 = w.wavelet_fn(-1, 3).unwrap();
        for (got, want) in psi_p3.values().iter().zip([0.0, 0.0, -r, r]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let psi_p2 = w.wavelet_fn(-2, 2).unwrap();
        for (got, want) in psi_p2.values().iter().zip([-0.5, -0.5, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(w.coarse_count(), 1);
        for v in w.coarse_fn(0).values() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_point_space_single_wavelet() {
        let s = Arc::new(crate::space::euclidean(&[vec![0.0], vec![1.0]]).unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = Arc::new(build_splines(d, SplineMode::Haar).unwrap());
        let w = build_wavelets(b).unwrap();
        assert_eq!(w.wavelet_count(), 1);
        assert_eq!(w.coarse_count(), 1);
        let psi = w.wavelet_fn(-1, 1).unwrap();
        let r = 0.5f64.sqrt();
        for (got, want) in psi.values().iter().zip([-r, r]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn ring16_full_checks() {
        let w = haar_basis(Fixture::Ring { n: 16 }, 0.5);
        assert_eq!(w.wavelet_count(), 15);
        assert_eq!(w.coarse_count(), 1);
        let rep = wavelet_checks(&w, None).unwrap();
        assert!(rep.orthonormality_max_dev <= 1e-12);
        assert!(rep.moment_max_abs <= 1e-12);
        assert!(rep.index_bookkeeping_ok);
    }

    #[test]
    fn analyze_line4_coordinates() {
        let w = haar_basis(Fixture::Line4, 0.5);
        let space = &w.splines.system.space;
        let f = space.point_fn(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = w.analyze(&f).unwrap();
        assert_abs_diff_eq!(c.coarse[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.entries[&(-2, 2)], 2.0, epsilon = 1e-12);
        let r = 0.5f64.sqrt();
        assert_abs_diff_eq!(c.entries[&(-1, 1)], r, epsilon = 1e-12);
        assert_abs_diff_eq!(c.entries[&(-1, 3)], r, epsilon = 1e-12);
        let back = w.synthesize(&c).unwrap();
        assert!(f.sub(&back).linf() <= 1e-12);
    }

    #[test]
    fn constants_have_zero_wavelet_coefficients() {
        let w = haar_basis(Fixture::Ring { n: 8 }, 0.5);
        let one = w.splines.system.space.constant_fn(1.0);
        let c = w.analyze(&one).unwrap();
        for (_, v) in &c.entries {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wavelet_is_its_own_coefficient() {
        let w = haar_basis(Fixture::Line4, 0.5);
        let psi = w.wavelet_fn(-1, 1).unwrap();
        let c = w.analyze(&psi).unwrap();
        assert_abs_diff_eq!(c.entries[&(-1, 1)], 1.0, epsilon = 1e-12);
        for (&key, &v) in &c.entries {
            if key != (-1, 1) {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(c.coarse[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn parseval_on_random_functions() {
        let w = haar_basis(Fixture::Cloud { n: 48, dim: 2, seed: 5 }, 0.5);
        let space = &w.splines.system.space;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let f = space
                .point_fn((0..48).map(|_| rng.random_range(-3.0..3.0)).collect())
                .unwrap();
            let c = w.analyze(&f).unwrap();
            let n2 = space.inner(&f, &f).unwrap();
            assert!((n2 - c.sum_squares()).abs() <= 1e-10 * n2.max(1e-30));
        }
    }

    #[test]
    fn smoothed_basis_is_refused() {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = Arc::new(build_splines(d, SplineMode::Smoothed { replicas: 2, seed: 0 }).unwrap());
        assert!(matches!(
            build_wavelets(b),
            Err(Error::SmoothedRefused(_))
        ));
    }

    #[test]
    fn line4_lower_bound_radius_at_least_one() {
        let w = haar_basis(Fixture::Line4, 0.5);
        let li = w.splines.system.idx(-1);
        assert!(w.eps0_per_level[li] >= 1.0);
        assert!(w.eps0_hat > 0.0);
    }

    #[test]
    fn decay_fit_on_cloud_is_positive() {
        let w = haar_basis(Fixture::Cloud { n: 64, dim: 2, seed: 7 }, 0.5);
        assert!(w.decay_global.nu_hat > 0.0, "nu = {}", w.decay_global.nu_hat);
        assert_eq!(w.decay_global.violations, 0);
        let rep = wavelet_checks(&w, None).unwrap();
        assert!(rep.decay_nu_global > 0.0);
    }

    #[test]
    fn degenerate_levels_contribute_no_wavelets() {
        let s = Arc::new(
            crate::space::euclidean(&[vec![0.0], vec![0.1], vec![100.0], vec![100.1]]).unwrap(),
        );
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = Arc::new(build_splines(d, SplineMode::Haar).unwrap());
        let w = build_wavelets(b).unwrap();
        assert_eq!(w.wavelet_count() + w.coarse_count(), 4);
        wavelet_checks(&w, None).unwrap();
    }

    #[test]
    fn smoothed_companion_fits_are_reported() {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let haar = Arc::new(build_splines(Arc::clone(&d), SplineMode::Haar).unwrap());
        let w = build_wavelets(haar).unwrap();
        let sm = build_splines(d, SplineMode::Smoothed { replicas: 16, seed: 3 }).unwrap();
        let rep = wavelet_checks(&w, Some(&sm)).unwrap();
        assert!(rep.smoothed_fits.is_some());
    }
}
