//! Dyadic systems, spline multiresolution ladders, orthonormal wavelets,
//! paraproducts and function-space norms on finite metric measure spaces.
//!
//! The pipeline runs space -> nets -> cubes -> splines -> wavelets:
//!
//! ```
//! use std::sync::Arc;
//! use wavespace::prelude::*;
//!
//! let space = Arc::new(Fixture::Line4.build().unwrap());
//! let nets = build_nets(Arc::clone(&space), 0.5).unwrap();
//! let system = Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
//! let splines = Arc::new(build_splines(system, SplineMode::Haar).unwrap());
//! let wavelets = build_wavelets(splines).unwrap();
//! assert_eq!(wavelets.wavelet_count(), 3);
//! ```
//!
//! On top of the basis sit the function-space norms (BMO, Carleson, the
//! wavelet H1 norms, the Luxemburg L^log norm, an approximate grand maximal
//! function) and the paraproduct decomposition
//! `f g = Pi_1 + Pi_2 + Pi_3 + S_0`, where `S_0 = (P_min f)(P_min g)` is the
//! coarse correction a finite total mass forces.

pub mod dyadic;
pub mod error;
pub mod experiment;
pub mod io;
mod linalg;
pub mod mra;
pub mod norms;
pub mod paraproduct;
pub mod space;
pub mod tol;
pub mod wavelet;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::dyadic::{
        build_cubes, build_nets, separated_sum_diag, verify_cubes, DyadicSystem, GeometryReport,
        NetHierarchy, TieBreak,
    };
    pub use crate::error::{Error, Result};
    pub use crate::mra::{
        build_splines, spline_checks, GramReport, SplineBasis, SplineCheckReport, SplineMode,
    };
    pub use crate::norms::{
        atomic_norm_upper, bmo_norm, bmo_plus_norm, carleson_norm, grand_maximal, llog_norm,
        lp_norm, make_atom, validate_atom, validate_molecule, wavelet_h1_norms, Atom, BumpFamily,
        Molecule, RadiusGrid,
    };
    pub use crate::paraproduct::{
        annulus_kernel, annulus_operator, max_annulus_k, paraproducts, series_paraproducts,
        AnnulusOperator, CzKernelReport, ParaproductResult,
    };
    pub use crate::space::{
        doubling_report, euclidean, measure_distance, DoublingReport, Fixture, MetricMeasureSpace,
        PointFn, SpaceRef,
    };
    pub use crate::wavelet::{
        build_wavelets, wavelet_checks, CoeffSeq, DecayFit, WaveletBasis, WaveletCheckReport,
    };
}
