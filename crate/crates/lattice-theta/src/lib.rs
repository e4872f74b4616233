// Negated comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bco;
pub mod error;
pub mod jacobi;
pub mod lattice;
pub mod layered;
pub mod linalg;
pub mod optimize;
pub mod scalar;
pub mod theta_sum;
pub mod translation;

pub use bco::{
    alpha1, certify_increasing, e_full, e_tilde, e_tilde_with_error, f_i, g_alpha, g_alpha_argmin, h_alpha, k_alpha, t0, thm14_scan, BcoPoint,
    CertStep, Certificate, Thm14Family, Verdict,
};
pub use error::{Result, ThetaError};
pub use jacobi::{elliptic_ratio, elliptic_ratio_complement, jacobi_theta, jacobi_theta_all, JacobiKind, SeriesValue};
pub use layered::{
    greedy_a_conditions, layered_theta, layered_theta_difference, mismatch_fraction, preset_layered, same_symmetries_check, LayeredConfig,
    LayeredPreset, ShiftAlphabet, ShiftSequence,
};
pub use linalg::Matrix;
pub use scalar::Scalar;
pub use lattice::{
    deep_holes_2d, dual, enumerate_shells, iwasawa_qdt, make_preset, normalize_density, reduce_2d, BravaisLattice,
    IwasawaQDT, Preset, Shell,
};
pub use theta_sum::{
    degeneracy_ratio, ho_mueller_energy, iwasawa_lower_bound, radial_energy, rho, theta, theta_direct, theta_poisson,
    theta_shift_difference, Method, RadialEnergy, RadialInteraction, ThetaResult,
};
pub use translation::{
    argmin_shift_grid, classify_asymptotic_2d, deciding_layer_2d, deep_hole_crossing, distance_mod_lattice, torus_distance,
    CaseLabel, ClassificationResult, DecidingLayerReport, MinimizerReport,
};

pub type Lattice = BravaisLattice<f64>;
pub type Lattice32 = BravaisLattice<f32>;
pub type Theta = ThetaResult<f64>;
pub type Theta32 = ThetaResult<f32>;
