//! Paraproduct decomposition and the localized annulus operators.
//!
//! On a finite space the two-sided telescoping of the product picks up a
//! coarse term: `f g = Pi_1 + Pi_2 + Pi_3 + S_0` with
//! `S_0 = (P_min f)(P_min g)`, which vanishes exactly on mean-zero inputs
//! when the coarse space is the constants. The three pieces are
//! `Pi_1 = sum_k (P_k f)(Q_k g)`, `Pi_2 = sum_k (Q_k f)(P_k g)`,
//! `Pi_3 = sum_k (Q_k f)(Q_k g)`, summed over the truncated scale range.
//!
//! The annulus operators group the double sum of `Pi_1` by the dyadic
//! distance between a spline center and a wavelet label; their kernels are
//! the objects the Calderón–Zygmund diagnostics run on.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mra::SplineBasis;
use crate::space::{DoublingReport, PointFn};
use crate::wavelet::{CoeffSeq, WaveletBasis};

#[derive(Debug, Clone)]
pub struct ParaproductResult {
    pub pi1: PointFn,
    pub pi2: PointFn,
    pub pi3: PointFn,
    /// Coarse term `S_0 = (P_min f)(P_min g)`.
    pub coarse: PointFn,
    /// `|| f g - Pi_1 - Pi_2 - Pi_3 - S_0 ||_inf`.
    pub residual: f64,
}

/// Computes the three paraproducts and the coarse term. Haar mode only: the
/// identity needs the exact nested ladder.
pub fn paraproducts(
    basis: &SplineBasis,
    f: &PointFn,
    g: &PointFn,
) -> Result<ParaproductResult> {
    if !basis.mode.is_haar() {
        return Err(Error::SmoothedRefused("paraproducts"));
    }
    let space = &basis.system.space;
    space.check_fn(f)?;
    space.check_fn(g)?;

    let mut pi1 = space.zero_fn();
    let mut pi2 = space.zero_fn();
    let mut pi3 = space.zero_fn();
    for k in basis.k_min()..basis.k_max() {
        let pf = basis.project(k, f)?;
        let pg = basis.project(k, g)?;
        let qf = basis.detail(k, f)?;
        let qg = basis.detail(k, g)?;
        pi1 = pi1.add(&pf.mul(&qg));
        pi2 = pi2.add(&qf.mul(&pg));
        pi3 = pi3.add(&qf.mul(&qg));
    }
    let coarse = basis
        .project(basis.k_min(), f)?
        .mul(&basis.project(basis.k_min(), g)?);
    let residual = f
        .mul(g)
        .sub(&pi1)
        .sub(&pi2)
        .sub(&pi3)
        .sub(&coarse)
        .linf();
    Ok(ParaproductResult {
        pi1,
        pi2,
        pi3,
        coarse,
        residual,
    })
}

/// The three paraproduct series evaluated from the BMO-side data alone:
/// wavelet coefficients `<g, psi^j_beta>` and spline pairings
/// `<g, s^j_alpha / nu^j_alpha>`, no global `g` needed.
///
/// `spline_means` maps `(level, center point id)` to the pairing value.
pub fn series_paraproducts(
    basis: &SplineBasis,
    wavelets: &WaveletBasis,
    a: &PointFn,
    g_coeffs: &CoeffSeq,
    g_spline_means: &BTreeMap<(i32, usize), f64>,
) -> Result<(PointFn, PointFn, PointFn)> {
    if !basis.mode.is_haar() {
        return Err(Error::SmoothedRefused("series paraproducts"));
    }
    let system = &basis.system;
    let space = &system.space;
    space.check_fn(a)?;
    if g_coeffs.token() != space.token() {
        return Err(Error::SpaceMismatch("coefficients from another space"));
    }

    let mut pi1 = space.zero_fn();
    let mut pi2 = space.zero_fn();
    let mut pi3 = space.zero_fn();
    for j in basis.k_min()..basis.k_max() {
        // wavelet part of g at level j
        let mut qg = space.zero_fn();
        for &beta in wavelets.labels(j) {
            let c = *g_coeffs
                .entries
                .get(&(j, beta))
                .ok_or(Error::MissingCoefficient {
                    level: j,
                    id: space.id(beta).to_string(),
                })?;
            if c != 0.0 {
                qg = qg.add(&wavelets.wavelet_fn(j, beta)?.scale(c));
            }
        }
        // spline part of g at level j from the supplied pairings
        let mut pg = space.zero_fn();
        for (ci, &alpha) in system.net(j).iter().enumerate() {
            let m = *g_spline_means
                .get(&(j, alpha))
                .ok_or(Error::MissingCoefficient {
                    level: j,
                    id: space.id(alpha).to_string(),
                })?;
            if m != 0.0 {
                pg = pg.add(&basis.spline_fn(j, ci).scale(m));
            }
        }
        // spline expansion of a at level j: sum_alpha (a, s/nu) s = P_j a
        let mut pa = space.zero_fn();
        for (ci, _) in system.net(j).iter().enumerate() {
            let coeff = space.inner(a, &basis.normalized_spline_fn(j, ci))?;
            if coeff != 0.0 {
                pa = pa.add(&basis.spline_fn(j, ci).scale(coeff));
            }
        }
        let qa = basis.detail(j, a)?;

        pi1 = pi1.add(&pa.mul(&qg));
        pi2 = pi2.add(&qa.mul(&pg));
        pi3 = pi3.add(&qa.mul(&qg));
    }
    Ok((pi1, pi2, pi3))
}

/// Spline pairings `<g, s^j_alpha / nu^j_alpha>` of a genuine function, in
/// the shape `series_paraproducts` consumes.
pub fn spline_means_of(basis: &SplineBasis, g: &PointFn) -> Result<BTreeMap<(i32, usize), f64>> {
    let system = &basis.system;
    let mut out = BTreeMap::new();
    for j in basis.k_min()..basis.k_max() {
        for (ci, &alpha) in system.net(j).iter().enumerate() {
            out.insert(
                (j, alpha),
                system.space.inner(g, &basis.normalized_spline_fn(j, ci))?,
            );
        }
    }
    Ok(out)
}

/// Largest annulus index with any nonempty annulus:
/// `2^k delta^{j+1} <= diam` for some wavelet level `j`.
pub fn max_annulus_k(basis: &SplineBasis) -> u32 {
    let system = &basis.system;
    let diam = system.space.diameter();
    let mut k = 0u32;
    loop {
        let reach = 2f64.powi(k as i32) * system.scale(system.k_min + 1);
        if reach > diam || k > 62 {
            return k;
        }
        k += 1;
    }
}

/// One localized operator `U^N_{k,i}` as a dense matrix, with its metadata.
#[derive(Debug, Clone)]
pub struct AnnulusOperator {
    pub k: u32,
    pub i: usize,
    /// Cutoff: number of `(level, label)` pairs kept, in `(level, point id)`
    /// order; `None` keeps the full family.
    pub cutoff: Option<usize>,
    /// The damping exponent base `nu` (fitted decay rate of the basis).
    pub nu: f64,
    /// `m_k = N0 * 2^{(k+1) G0}` from the measured doubling parameters.
    pub m_k: usize,
    pub matrix: DMatrix<f64>,
}

impl AnnulusOperator {
    pub fn sigma_max(&self) -> f64 {
        linalg::sigma_max(&self.matrix)
    }

    pub fn apply(&self, g: &PointFn) -> Result<PointFn> {
        let n = self.matrix.nrows();
        let mut out = vec![0.0f64; n];
        for x in 0..n {
            out[x] = (0..n).map(|y| self.matrix[(x, y)] * g.value(y)).sum();
        }
        // tokens are checked by point_fn's caller; matrix rows match space
        Ok(PointFn::clone_with(&out, g.token()))
    }
}

/// The enumerated index family `(level, label)` in `(j, point id)` order,
/// whose prefixes realize the cutoffs.
pub fn index_family(wavelets: &WaveletBasis) -> Vec<(i32, usize)> {
    let mut fam = Vec::new();
    for j in wavelets.levels() {
        for &beta in wavelets.labels(j) {
            fam.push((j, beta));
        }
    }
    fam
}

/// Builds `U^N_{k,i} g = sum_{(j,beta)} (g, psi^j_beta) e^{nu delta 2^{k-2}}
/// s^j_{alpha^i} psi^j_beta`, where `alpha^i` is the i-th center (1-based,
/// point-id order) of the annulus `2^k delta^{j+1} <= d(x^j_alpha, y^j_beta)
/// < 2^{k+1} delta^{j+1}`; missing entries contribute the zero spline.
pub fn annulus_operator(
    basis: &SplineBasis,
    wavelets: &WaveletBasis,
    doubling: &DoublingReport,
    k: u32,
    i: usize,
    cutoff: Option<usize>,
) -> Result<AnnulusOperator> {
    if !basis.mode.is_haar() {
        return Err(Error::SmoothedRefused("annulus operators"));
    }
    let m_k = (doubling.covering_n0 as f64
        * 2f64.powf((k as f64 + 1.0) * doubling.covering_g0))
    .ceil() as usize;
    if i == 0 || i > m_k {
        return Err(Error::AnnulusIndex { k, i, mk: m_k });
    }
    let system = &basis.system;
    let space = &system.space;
    let n = space.len();
    let nu = wavelets.decay_global.nu_hat;
    let damping = (nu * basis.system.delta * 2f64.powi(k as i32 - 2)).exp();

    let fam = index_family(wavelets);
    let keep = cutoff.unwrap_or(fam.len()).min(fam.len());

    let mut matrix: DMatrix<f64> = DMatrix::zeros(n, n);
    for &(j, beta) in fam.iter().take(keep) {
        let sep_fine = system.scale(j + 1);
        let lo = 2f64.powi(k as i32) * sep_fine;
        let hi = 2f64.powi(k as i32 + 1) * sep_fine;
        // annulus centers in ascending point-id order
        let ring: Vec<usize> = system
            .net(j)
            .iter()
            .copied()
            .filter(|&alpha| {
                let d = space.dist(alpha, beta);
                d >= lo && d < hi
            })
            .collect();
        let alpha = match ring.get(i - 1) {
            Some(&a) => a,
            None => continue, // padding: zero spline
        };
        let ci = basis.local_index(j, alpha).expect("center in net");
        let psi = wavelets.wavelet_fn(j, beta)?;
        // rank-one update: (damping s psi) (psi . w)^T
        for x in 0..n {
            let lhs = damping * basis.value(j, ci, x) * psi.value(x);
            if lhs == 0.0 {
                continue;
            }
            for y in 0..n {
                matrix[(x, y)] += lhs * psi.value(y) * space.weight(y);
            }
        }
    }
    Ok(AnnulusOperator {
        k,
        i,
        cutoff,
        nu,
        m_k,
        matrix,
    })
}

/// The kernel of `U^N_{k,i}`:
/// `K(x, y) = sum_{(j,beta)} e^{nu delta 2^{k-2}} s^j_alpha(x) psi^j_beta(x)
/// psi^j_beta(y)`.
pub fn annulus_kernel(
    basis: &SplineBasis,
    wavelets: &WaveletBasis,
    doubling: &DoublingReport,
    k: u32,
    i: usize,
    cutoff: Option<usize>,
    s_probes: Option<&[f64]>,
) -> Result<(DMatrix<f64>, CzKernelReport)> {
    let op = annulus_operator(basis, wavelets, doubling, k, i, cutoff)?;
    let space = &basis.system.space;
    let n = space.len();
    // the operator matrix is K(x,y) w(y): strip the weight
    let kernel = DMatrix::from_fn(n, n, |x, y| op.matrix[(x, y)] / space.weight(y));
    // Default probe list is {eta/2, eta} with the fitted spline Hölder
    // exponent; haar splines fit eta = 0, collapsing the list to {0}.
    let default_probes;
    let probes: &[f64] = match s_probes {
        Some(p) => p,
        None => {
            let eta = 0.0f64;
            default_probes = dedup_probes(&[eta / 2.0, eta]);
            &default_probes
        }
    };
    let report = cz_diagnostics(space, &kernel, 0.5, probes);
    Ok((kernel, report))
}

fn dedup_probes(probes: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = probes.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderRow {
    pub s: f64,
    /// max over admissible `(x, x~, y)` of
    /// `|K(x,y) - K(x~,y)| V(x,y) (d(x,y)/d(x,x~))^s`
    pub c_reg_x: f64,
    pub witness_x: Option<(String, String, String)>,
    /// symmetric version in the second variable
    pub c_reg_y: f64,
    pub witness_y: Option<(String, String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CzKernelReport {
    /// `max_{x != y} |K(x, y)| V(x, y)`
    pub c_size: f64,
    pub size_witness: Option<(String, String)>,
    /// admissibility factor: triples require `d(x,y) >= c_k d(x, x~) > 0`
    pub c_k: f64,
    pub holder: Vec<HolderRow>,
}

/// Size and Hölder diagnostics of a kernel matrix against the standard
/// Calderón–Zygmund bounds.
pub fn cz_diagnostics(
    space: &crate::space::MetricMeasureSpace,
    kernel: &DMatrix<f64>,
    c_k: f64,
    s_probes: &[f64],
) -> CzKernelReport {
    let n = space.len();
    let mut c_size = 0.0f64;
    let mut size_witness = None;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let v = kernel[(x, y)].abs() * space.volume_pair(x, y);
            if v > c_size {
                c_size = v;
                size_witness = Some((space.id(x).to_string(), space.id(y).to_string()));
            }
        }
    }

    let mut holder = Vec::new();
    for &s in s_probes {
        let mut cx = 0.0f64;
        let mut wx = None;
        let mut cy = 0.0f64;
        let mut wy = None;
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let dxy = space.dist(x, y);
                let vxy = space.volume_pair(x, y);
                for t in 0..n {
                    // first-variable increment x -> t
                    if t != x && dxy >= c_k * space.dist(x, t) && space.dist(x, t) > 0.0 {
                        let v = (kernel[(x, y)] - kernel[(t, y)]).abs()
                            * vxy
                            * (dxy / space.dist(x, t)).powf(s);
                        if v > cx {
                            cx = v;
                            wx = Some((
                                space.id(x).to_string(),
                                space.id(t).to_string(),
                                space.id(y).to_string(),
                            ));
                        }
                    }
                    // second-variable increment y -> t
                    if t != y && dxy >= c_k * space.dist(y, t) && space.dist(y, t) > 0.0 {
                        let v = (kernel[(x, y)] - kernel[(x, t)]).abs()
                            * vxy
                            * (dxy / space.dist(y, t)).powf(s);
                        if v > cy {
                            cy = v;
                            wy = Some((
                                space.id(x).to_string(),
                                space.id(y).to_string(),
                                space.id(t).to_string(),
                            ));
                        }
                    }
                }
            }
        }
        holder.push(HolderRow {
            s,
            c_reg_x: cx,
            witness_x: wx,
            c_reg_y: cy,
            witness_y: wy,
        });
    }

    CzKernelReport {
        c_size,
        size_witness,
        c_k,
        holder,
    }
}
