//! Nested maximal separated nets and the half-open dyadic cube system.
//!
//! The scale range is finite and data-driven: the finest level is the first
//! at which every point is its own net point, the coarsest the first with a
//! single net point. Nets nest upward (coarse inside fine), cubes partition
//! the point set at every level and nest along the parent links.
//!
//! Randomness enters in exactly one place: the nearest-parent assignment may
//! draw uniformly (seeded) among the centers within `(1 + jitter)` of the
//! minimal distance. Everything else is deterministic.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, SpaceRef};
use crate::tol;

/// The nested nets `A_k`, coarse (`k_min`, one point) to fine (`k_max`, all
/// points).
#[derive(Debug, Clone)]
pub struct NetHierarchy {
    pub space: SpaceRef,
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    /// `nets[idx(k)]` = ascending point indices of the level-k net.
    nets: Vec<Vec<usize>>,
}

/// Parent tie-break policy for cube assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TieBreak {
    /// Nearest parent, ties to the smallest point id.
    Deterministic,
    /// Nearest parent drawn uniformly among centers within
    /// `(1 + jitter) * min_dist`; the artifact's realization of the random
    /// dyadic ensemble.
    Randomized { seed: u64, jitter: f64 },
}

impl TieBreak {
    pub fn randomized(seed: u64) -> Self {
        TieBreak::Randomized {
            seed,
            jitter: tol::PARENT_JITTER,
        }
    }
}

/// A built dyadic system: nets plus the per-level cube partition.
#[derive(Debug, Clone)]
pub struct DyadicSystem {
    pub space: SpaceRef,
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub rng_seed: Option<u64>,
    nets: Vec<Vec<usize>>,
    /// `assign[idx(k)][point]` = center (point index) of the level-k cube
    /// containing `point`.
    assign: Vec<Vec<usize>>,
    /// `parent[idx(k)]` maps a level-(k+1) center to its level-k parent
    /// center, for k in [k_min, k_max - 1].
    parent: Vec<BTreeMap<usize, usize>>,
    /// `new_labels[idx(k)]` = `G_k = A_{k+1} \ A_k`, ascending.
    new_labels: Vec<Vec<usize>>,
}

impl NetHierarchy {
    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn idx(&self, k: i32) -> usize {
        (k - self.k_min) as usize
    }

    pub fn net(&self, k: i32) -> &[usize] {
        &self.nets[self.idx(k)]
    }

    pub fn check_level(&self, k: i32) -> Result<()> {
        if k < self.k_min || k > self.k_max {
            return Err(Error::LevelOutOfRange {
                level: k,
                min: self.k_min,
                max: self.k_max,
            });
        }
        Ok(())
    }
}

/// Scale of level `k`: `delta^k`.
pub fn scale(delta: f64, k: i32) -> f64 {
    delta.powi(k)
}

/// Builds the nested nets by greedy maximal-separation sweeps in ascending
/// point-id order, each level restricted to the next finer net.
///
/// `k_max` is the smallest level whose scale fits under the minimum pairwise
/// distance (`delta^k <= min_dist`, so the full point set is a valid
/// `delta^k`-separated net); levels descend until a single point remains.
pub fn build_nets(space: SpaceRef, delta: f64) -> Result<NetHierarchy> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let n = space.len();
    if n < 2 {
        return Err(Error::TooFewPoints { need: 2, have: n });
    }
    let min_dist = space.min_positive_distance().expect("n >= 2");

    // smallest k with delta^k <= min_dist
    let mut k_max = (min_dist.ln() / delta.ln()).ceil() as i32;
    while scale(delta, k_max) > min_dist {
        k_max += 1;
    }
    while k_max > i32::MIN + 1 && scale(delta, k_max - 1) <= min_dist {
        k_max -= 1;
    }

    let mut nets: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut k = k_max;
    loop {
        if nets.last().unwrap().len() == 1 {
            break;
        }
        k -= 1;
        let sep = scale(delta, k);
        let pool = nets.last().unwrap().clone();
        let mut picked: Vec<usize> = Vec::new();
        for &cand in &pool {
            if picked.iter().all(|&p| space.dist(cand, p) >= sep) {
                picked.push(cand);
            }
        }
        nets.push(picked);
    }
    let k_min = k;
    nets.reverse();
    Ok(NetHierarchy {
        space,
        delta,
        k_min,
        k_max,
        nets,
    })
}

/// Assembles the half-open cube partition level by level: singleton cubes at
/// the finest level, then each finer center joins its nearest coarse center
/// (ties per policy), and each cube is the union of its children.
pub fn build_cubes(nets: &NetHierarchy, tiebreak: TieBreak) -> Result<DyadicSystem> {
    let space = &nets.space;
    let n = space.len();
    let levels = (nets.k_max - nets.k_min + 1) as usize;

    let mut assign: Vec<Vec<usize>> = vec![Vec::new(); levels];
    let mut parent: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); levels.saturating_sub(1)];
    let mut new_labels: Vec<Vec<usize>> = vec![Vec::new(); levels.saturating_sub(1)];

    // finest level: every point is its own cube
    assign[levels - 1] = (0..n).collect();

    let (seed, jitter) = match tiebreak {
        TieBreak::Deterministic => (None, 0.0),
        TieBreak::Randomized { seed, jitter } => {
            if !(0.0..=1.0).contains(&jitter) {
                return Err(Error::InvalidArgument(format!(
                    "parent jitter {jitter} outside [0, 1]"
                )));
            }
            (Some(seed), jitter)
        }
    };

    for k in (nets.k_min..nets.k_max).rev() {
        let li = nets.idx(k);
        let coarse = nets.net(k);
        let fine = nets.net(k + 1);
        let mut rng = seed.map(|s| {
            // one stream per level, derived so replicas stay independent
            ChaCha8Rng::seed_from_u64(s ^ (k as i64 as u64).wrapping_mul(0x9e3779b97f4a7c15))
        });

        let mut parents_here = BTreeMap::new();
        for &beta in fine {
            let alpha = if coarse.contains(&beta) {
                beta // a net point always owns itself
            } else {
                let min_d = coarse
                    .iter()
                    .map(|&a| space.dist(beta, a))
                    .fold(f64::INFINITY, f64::min);
                match rng.as_mut() {
                    None => {
                        // smallest point id among the exact minimizers
                        *coarse
                            .iter()
                            .find(|&&a| space.dist(beta, a) == min_d)
                            .expect("nonempty net")
                    }
                    Some(r) => {
                        let cands: Vec<usize> = coarse
                            .iter()
                            .copied()
                            .filter(|&a| space.dist(beta, a) <= (1.0 + jitter) * min_d)
                            .collect();
                        cands[r.random_range(0..cands.len())]
                    }
                }
            };
            parents_here.insert(beta, alpha);
        }

        // Q^k_alpha = union of children cubes
        let fine_assign = assign[li + 1].clone();
        let mut here = vec![usize::MAX; n];
        for (x, a) in here.iter_mut().enumerate() {
            let fine_center = fine_assign[x];
            *a = parents_here[&fine_center];
        }
        assign[li] = here;
        new_labels[li] = fine
            .iter()
            .copied()
            .filter(|b| !coarse.contains(b))
            .collect();
        parent[li] = parents_here;
    }

    Ok(DyadicSystem {
        space: Arc::clone(space),
        delta: nets.delta,
        k_min: nets.k_min,
        k_max: nets.k_max,
        rng_seed: seed,
        nets: nets.nets.clone(),
        assign,
        parent,
        new_labels,
    })
}

impl DyadicSystem {
    pub fn idx(&self, k: i32) -> usize {
        (k - self.k_min) as usize
    }

    pub fn check_level(&self, k: i32) -> Result<()> {
        if k < self.k_min || k > self.k_max {
            return Err(Error::LevelOutOfRange {
                level: k,
                min: self.k_min,
                max: self.k_max,
            });
        }
        Ok(())
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn scale(&self, k: i32) -> f64 {
        scale(self.delta, k)
    }

    pub fn net(&self, k: i32) -> &[usize] {
        &self.nets[self.idx(k)]
    }

    /// Cube membership: the level-k center owning each point.
    pub fn assignment(&self, k: i32) -> &[usize] {
        &self.assign[self.idx(k)]
    }

    /// Center of the level-k cube containing `point`.
    pub fn cube_of(&self, k: i32, point: usize) -> usize {
        self.assign[self.idx(k)][point]
    }

    /// Points of `Q^k_alpha`, ascending.
    pub fn cube_points(&self, k: i32, alpha: usize) -> Vec<usize> {
        self.assign[self.idx(k)]
            .iter()
            .enumerate()
            .filter_map(|(x, &a)| (a == alpha).then_some(x))
            .collect()
    }

    pub fn cube_mass(&self, k: i32, alpha: usize) -> f64 {
        self.assign[self.idx(k)]
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a == alpha)
            .map(|(x, _)| self.space.weight(x))
            .sum()
    }

    /// Parent center at level `k` of a level-`k+1` center.
    pub fn parent_of(&self, k: i32, beta: usize) -> usize {
        self.parent[self.idx(k)][&beta]
    }

    /// Children `L(k, alpha)`: level-(k+1) centers inside `Q^k_alpha`.
    pub fn children(&self, k: i32, alpha: usize) -> Vec<usize> {
        self.parent[self.idx(k)]
            .iter()
            .filter_map(|(&b, &a)| (a == alpha).then_some(b))
            .collect()
    }

    /// `G_k = A_{k+1} \ A_k`: the labels newly appearing below level `k`.
    pub fn new_labels(&self, k: i32) -> &[usize] {
        &self.new_labels[self.idx(k)]
    }

    /// Applies scale-range overrides. The coarse end may be truncated (the
    /// top cube then covers more than one net point); the fine end may only
    /// be extended, with no-op levels whose nets already hold every point.
    pub fn restrict(&self, k_min: Option<i32>, k_max: Option<i32>) -> Result<DyadicSystem> {
        let new_min = k_min.unwrap_or(self.k_min);
        let new_max = k_max.unwrap_or(self.k_max);
        if new_max < self.k_max {
            return Err(Error::InvalidArgument(format!(
                "kmax = {new_max} would cut below the natural finest level {}",
                self.k_max
            )));
        }
        if new_min < self.k_min || new_min > new_max {
            return Err(Error::InvalidArgument(format!(
                "kmin = {new_min} outside [{}, {new_max}]",
                self.k_min
            )));
        }
        if new_min == self.k_min && new_max == self.k_max {
            return Ok(self.clone());
        }
        let lo = self.idx(new_min);
        let mut nets = self.nets[lo..].to_vec();
        let mut assign = self.assign[lo..].to_vec();
        let mut parent = self.parent[lo..].to_vec();
        let mut new_labels = self.new_labels[lo..].to_vec();
        let n = self.space.len();
        for _ in self.k_max..new_max {
            nets.push((0..n).collect());
            assign.push((0..n).collect());
            parent.push((0..n).map(|x| (x, x)).collect());
            new_labels.push(Vec::new());
        }
        Ok(DyadicSystem {
            space: Arc::clone(&self.space),
            delta: self.delta,
            k_min: new_min,
            k_max: new_max,
            rng_seed: self.rng_seed,
            nets,
            assign,
            parent,
            new_labels,
        })
    }

    /// The net hierarchy view; nets are deterministic data shared by every
    /// replica of this system.
    pub fn hierarchy(&self) -> NetHierarchy {
        NetHierarchy {
            space: Arc::clone(&self.space),
            delta: self.delta,
            k_min: self.k_min,
            k_max: self.k_max,
            nets: self.nets.clone(),
        }
    }

    /// Max observed branching `#L(k, alpha)` across all cubes.
    pub fn max_children(&self) -> usize {
        let mut best = 1;
        for k in self.k_min..self.k_max {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for (_, &a) in self.parent[self.idx(k)].iter() {
                *counts.entry(a).or_insert(0) += 1;
            }
            for (_, c) in counts {
                best = best.max(c);
            }
        }
        best
    }
}

/// Verification output: hard checks either all pass or `verify_cubes` returns
/// the witness; measured-only quantities are always reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryReport {
    pub partition_ok: bool,
    pub nesting_ok: bool,
    pub centers_in_cubes_ok: bool,
    /// max over parent links of `d(child, parent) / delta^k` (hard < 2).
    pub max_child_distance_ratio: f64,
    /// max over cubes and members of `d(x, center) / (2 delta^k / (1-delta))`
    /// (hard <= 1).
    pub max_outer_radius_ratio: f64,
    /// Largest `c` with `B(center, c * delta^k) ∩ points ⊆ Q^k_alpha` for
    /// every cube that has a nonempty complement.
    pub inner_containment_c: f64,
    /// The 1/3 inner-ball test, enforced only for delta <= 1/24.
    pub inner_third_enforced: bool,
    /// max over nets and finer-net members of `d(x, A_k) / delta^k`
    /// (hard < 1: greedy maximality).
    pub max_net_gap_ratio: f64,
    /// max over nets and *all* points of `d(x, A_k) / delta^k`
    /// (hard < 2: the covering bound; reported because the stronger pool
    /// bound does not extend to arbitrary points).
    pub max_cover_gap_ratio: f64,
    pub max_children: usize,
}

/// Runs the hard geometry checks (partition, nesting, separation, covering,
/// child distance, outer radius, conditional inner ball) and measures the
/// rest.
pub fn verify_cubes(d: &DyadicSystem) -> Result<GeometryReport> {
    let space = &d.space;
    let n = space.len();

    let mut report = GeometryReport {
        partition_ok: true,
        nesting_ok: true,
        centers_in_cubes_ok: true,
        max_child_distance_ratio: 0.0,
        max_outer_radius_ratio: 0.0,
        inner_containment_c: f64::INFINITY,
        inner_third_enforced: d.delta <= 1.0 / 24.0,
        max_net_gap_ratio: 0.0,
        max_cover_gap_ratio: 0.0,
        max_children: d.max_children(),
    };

    for k in d.levels() {
        let sep = d.scale(k);
        let net = d.net(k);

        // net separation is hard
        for (i, &a) in net.iter().enumerate() {
            for &b in &net[i + 1..] {
                if space.dist(a, b) < sep {
                    return Err(Error::GeometryCheck {
                        check: "net-separation",
                        level: k,
                        center: space.id(a).to_string(),
                        detail: format!(
                            "d({}, {}) = {} < delta^k = {}",
                            space.id(a),
                            space.id(b),
                            space.dist(a, b),
                            sep
                        ),
                    });
                }
            }
        }

        // partition + center membership
        let assign = d.assignment(k);
        for (x, &a) in assign.iter().enumerate() {
            if !net.contains(&a) {
                return Err(Error::GeometryCheck {
                    check: "partition",
                    level: k,
                    center: space.id(a).to_string(),
                    detail: format!("point {} assigned to a non-center", space.id(x)),
                });
            }
        }
        for &a in net {
            if assign[a] != a {
                return Err(Error::GeometryCheck {
                    check: "center-membership",
                    level: k,
                    center: space.id(a).to_string(),
                    detail: "center not inside its own cube".into(),
                });
            }
        }

        // covering gaps
        for x in 0..n {
            let gap = net
                .iter()
                .map(|&a| space.dist(x, a))
                .fold(f64::INFINITY, f64::min);
            let ratio = gap / sep;
            report.max_cover_gap_ratio = report.max_cover_gap_ratio.max(ratio);
            if ratio >= 2.0 {
                return Err(Error::GeometryCheck {
                    check: "covering",
                    level: k,
                    center: space.id(x).to_string(),
                    detail: format!("d(x, A_k) = {} >= 2 delta^k", gap),
                });
            }
        }
        if k < d.k_max {
            for &x in d.net(k + 1) {
                let gap = net
                    .iter()
                    .map(|&a| space.dist(x, a))
                    .fold(f64::INFINITY, f64::min);
                let ratio = gap / sep;
                report.max_net_gap_ratio = report.max_net_gap_ratio.max(ratio);
                if ratio >= 1.0 {
                    return Err(Error::GeometryCheck {
                        check: "greedy-maximality",
                        level: k,
                        center: space.id(x).to_string(),
                        detail: format!("finer net point at gap {} >= delta^k", gap),
                    });
                }
            }
        }

        // nesting (either-containment-or-disjointness follows from the
        // single-parent construction; check it anyway, exactly)
        if k < d.k_max {
            let fine_assign = d.assignment(k + 1);
            for x in 0..n {
                let via_parent = d.parent_of(k, fine_assign[x]);
                if via_parent != assign[x] {
                    return Err(Error::GeometryCheck {
                        check: "nesting",
                        level: k,
                        center: space.id(assign[x]).to_string(),
                        detail: format!(
                            "point {} sits in cube {} but its child cube points to {}",
                            space.id(x),
                            space.id(assign[x]),
                            space.id(via_parent)
                        ),
                    });
                }
            }

            // child-center proximity
            for (&beta, &alpha) in d.parent[d.idx(k)].iter() {
                let ratio = space.dist(beta, alpha) / sep;
                report.max_child_distance_ratio = report.max_child_distance_ratio.max(ratio);
                if ratio >= 2.0 {
                    return Err(Error::GeometryCheck {
                        check: "child-distance",
                        level: k,
                        center: space.id(alpha).to_string(),
                        detail: format!(
                            "child {} at {} delta^k",
                            space.id(beta),
                            ratio
                        ),
                    });
                }
            }
        }

        // outer containment: chain-sum radius 2 delta^k / (1 - delta)
        let outer = 2.0 * sep / (1.0 - d.delta);
        for (x, &a) in assign.iter().enumerate() {
            let ratio = space.dist(x, a) / outer;
            report.max_outer_radius_ratio = report.max_outer_radius_ratio.max(ratio);
            if ratio > 1.0 {
                return Err(Error::GeometryCheck {
                    check: "outer-radius",
                    level: k,
                    center: space.id(a).to_string(),
                    detail: format!(
                        "member {} at distance {} > {}",
                        space.id(x),
                        space.dist(x, a),
                        outer
                    ),
                });
            }
        }

        // measured inner containment
        for &a in net {
            let nearest_outside = (0..n)
                .filter(|&y| assign[y] != a)
                .map(|y| space.dist(a, y))
                .fold(f64::INFINITY, f64::min);
            if nearest_outside.is_finite() {
                report.inner_containment_c = report.inner_containment_c.min(nearest_outside / sep);
            }
        }
    }

    if report.inner_third_enforced && report.inner_containment_c < 1.0 / 3.0 {
        return Err(Error::GeometryCheck {
            check: "inner-ball",
            level: d.k_min,
            center: "-".into(),
            detail: format!(
                "measured inner constant {} < 1/3 in the delta <= 1/24 regime",
                report.inner_containment_c
            ),
        });
    }

    Ok(report)
}

/// Diagnostic for the separated-set exponential sum: rescales `xi` to be
/// 1-separated, then returns the max over probes of
/// `exp(eps d(a, xi) / 2) * sum_b exp(-eps d(a, b))`.
pub fn separated_sum_diag(
    space: &MetricMeasureSpace,
    xi: &[usize],
    eps: f64,
    probes: &[usize],
) -> Result<f64> {
    if xi.is_empty() {
        return Err(Error::Empty("separated set"));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    if probes.is_empty() {
        return Err(Error::Empty("probe set"));
    }
    let mut min_internal = f64::INFINITY;
    for (i, &a) in xi.iter().enumerate() {
        for &b in &xi[i + 1..] {
            min_internal = min_internal.min(space.dist(a, b));
        }
    }
    let unit = if min_internal.is_finite() && min_internal > 0.0 {
        min_internal
    } else {
        1.0 // single point: no rescaling needed
    };
    let mut best = 0.0f64;
    for &a in probes {
        let d_axi = xi
            .iter()
            .map(|&b| space.dist(a, b) / unit)
            .fold(f64::INFINITY, f64::min);
        let sum: f64 = xi
            .iter()
            .map(|&b| (-eps * space.dist(a, b) / unit).exp())
            .sum();
        best = best.max((eps * d_axi / 2.0).exp() * sum);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Fixture;
    use approx::assert_abs_diff_eq;

    fn line4_nets() -> NetHierarchy {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        build_nets(s, 0.5).unwrap()
    }

    #[test]
    fn line4_net_hierarchy() {
        let nets = line4_nets();
        assert_eq!((nets.k_min, nets.k_max), (-2, 0));
        assert_eq!(nets.net(0), &[0, 1, 2, 3]);
        assert_eq!(nets.net(-1), &[0, 2]);
        assert_eq!(nets.net(-2), &[0]);
    }

    #[test]
    fn two_point_hierarchy() {
        let s = Arc::new(crate::space::euclidean(&[vec![0.0], vec![1.0]]).unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        assert_eq!((nets.k_min, nets.k_max), (-1, 0));
        assert_eq!(nets.net(0), &[0, 1]);
        assert_eq!(nets.net(-1), &[0]);
    }

    #[test]
    fn ring16_net_sizes_halve() {
        let s = Arc::new(Fixture::Ring { n: 16 }.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let sizes: Vec<usize> = nets.levels().map(|k| nets.net(k).len()).collect();
        assert_eq!(sizes, vec![1, 2, 4, 8, 16]);
    }

    #[test]
    fn delta_out_of_range_rejected() {
        let s = Arc::new(Fixture::Line4.build().unwrap());
        assert!(build_nets(Arc::clone(&s), 0.75).is_err());
        assert!(build_nets(s, 0.0).is_err());
    }

    #[test]
    fn line4_deterministic_cubes() {
        let d = build_cubes(&line4_nets(), TieBreak::Deterministic).unwrap();
        assert_eq!(d.cube_points(-1, 0), vec![0, 1]); // p1 tie broken to p0
        assert_eq!(d.cube_points(-1, 2), vec![2, 3]);
        assert_eq!(d.cube_points(-2, 0), vec![0, 1, 2, 3]);
        assert_eq!(d.new_labels(-1), &[1, 3]);
        assert_eq!(d.new_labels(-2), &[2]);
        assert_eq!(d.parent_of(-2, 2), 0);
    }

    #[test]
    fn randomized_tie_frequency_is_half() {
        let nets = line4_nets();
        let mut to_p0 = 0usize;
        let trials = 10_000;
        for seed in 0..trials {
            let d = build_cubes(&nets, TieBreak::randomized(seed)).unwrap();
            if d.cube_of(-1, 1) == 0 {
                to_p0 += 1;
            }
        }
        let freq = to_p0 as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn no_ties_means_randomized_equals_deterministic() {
        let s = Arc::new(Fixture::Cloud { n: 40, dim: 2, seed: 5 }.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let det = build_cubes(&nets, TieBreak::Deterministic).unwrap();
        for seed in [0u64, 1, 99] {
            // zero jitter: only exact minimizers are candidates
            let rnd = build_cubes(&nets, TieBreak::Randomized { seed, jitter: 0.0 }).unwrap();
            for k in det.levels() {
                assert_eq!(det.assignment(k), rnd.assignment(k));
            }
        }
    }

    #[test]
    fn identical_seed_identical_system() {
        let s = Arc::new(Fixture::Cloud { n: 30, dim: 2, seed: 9 }.build().unwrap());
        let nets = build_nets(s, 0.25).unwrap();
        let a = build_cubes(&nets, TieBreak::randomized(42)).unwrap();
        let b = build_cubes(&nets, TieBreak::randomized(42)).unwrap();
        for k in a.levels() {
            assert_eq!(a.assignment(k), b.assignment(k));
        }
    }

    #[test]
    fn verify_line4_geometry() {
        let d = build_cubes(&line4_nets(), TieBreak::Deterministic).unwrap();
        let rep = verify_cubes(&d).unwrap();
        assert!(rep.partition_ok && rep.nesting_ok && rep.centers_in_cubes_ok);
        assert!(rep.max_child_distance_ratio < 2.0);
        assert!(rep.max_outer_radius_ratio <= 1.0);
        assert!(rep.inner_containment_c > 0.0);
        assert!(!rep.inner_third_enforced);
    }

    #[test]
    fn cantor_fine_delta_inner_third() {
        // measured at delta = 1/16 (enforcement off, value still >= 1/3)
        let s = Arc::new(Fixture::Cantor { depth: 3 }.build().unwrap());
        let nets = build_nets(Arc::clone(&s), 1.0 / 16.0).unwrap();
        let d = build_cubes(&nets, TieBreak::Deterministic).unwrap();
        let rep = verify_cubes(&d).unwrap();
        assert!(!rep.inner_third_enforced);
        assert!(rep.inner_containment_c >= 1.0 / 3.0);
        // enforced in the small-delta regime
        let nets = build_nets(s, 1.0 / 32.0).unwrap();
        let d = build_cubes(&nets, TieBreak::Deterministic).unwrap();
        let rep = verify_cubes(&d).unwrap();
        assert!(rep.inner_third_enforced);
        assert!(rep.inner_containment_c >= 1.0 / 3.0);
    }

    #[test]
    fn cube_masses_partition_total() {
        let s = Arc::new(Fixture::Cantor { depth: 2 }.build().unwrap());
        let nets = build_nets(Arc::clone(&s), 0.25).unwrap();
        let d = build_cubes(&nets, TieBreak::Deterministic).unwrap();
        for k in d.levels() {
            let sum: f64 = d.net(k).iter().map(|&a| d.cube_mass(k, a)).sum();
            assert_abs_diff_eq!(sum, s.total_mass());
        }
    }

    #[test]
    fn degenerate_levels_are_legal() {
        // two tight clusters far apart: many levels with no new labels
        let s = Arc::new(
            crate::space::euclidean(&[vec![0.0], vec![0.1], vec![100.0], vec![100.1]]).unwrap(),
        );
        let nets = build_nets(s, 0.5).unwrap();
        let d = build_cubes(&nets, TieBreak::Deterministic).unwrap();
        let empty_levels = (d.k_min..d.k_max)
            .filter(|&k| d.new_labels(k).is_empty())
            .count();
        assert!(empty_levels > 0);
        verify_cubes(&d).unwrap();
    }

    #[test]
    fn separated_sum_single_point_at_most_one() {
        let s = Fixture::Line4.build().unwrap();
        let v = separated_sum_diag(&s, &[2], 1.0, &[0, 1, 2, 3]).unwrap();
        assert!(v <= 1.0 + 1e-12, "value {v}");
    }

    #[test]
    fn separated_sum_line4_net_bound() {
        let s = Fixture::Line4.build().unwrap();
        let bound = 1.0 + 2.0 * (-1.0f64).exp() + (-2.0f64).exp() + (-3.0f64).exp();
        let v = separated_sum_diag(&s, &[0, 1, 2, 3], 1.0, &[0, 1, 2, 3]).unwrap();
        assert!(v <= bound + 1e-12, "value {v} bound {bound}");
    }

    #[test]
    fn separated_sum_stable_across_scales() {
        let s = Arc::new(Fixture::Ring { n: 64 }.build().unwrap());
        let nets = build_nets(Arc::clone(&s), 0.5).unwrap();
        let probes: Vec<usize> = (0..s.len()).collect();
        let v1 = separated_sum_diag(&s, nets.net(-1), 1.0, &probes).unwrap();
        let v2 = separated_sum_diag(&s, nets.net(-2), 1.0, &probes).unwrap();
        let ratio = v1.max(v2) / v1.min(v2);
        assert!(ratio <= 2.0, "ratio {ratio}");
    }

    #[test]
    fn empty_xi_is_an_error() {
        let s = Fixture::Line4.build().unwrap();
        assert!(matches!(
            separated_sum_diag(&s, &[], 1.0, &[0]),
            Err(Error::Empty(_))
        ));
    }
}
