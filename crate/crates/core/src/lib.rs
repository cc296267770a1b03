//! Real phase retrieval and the two-row sorting encoder, side by side.
//!
//! For a key `A ∈ R^{d x D}` with columns `a_1..a_D` this crate provides
//!
//! * the encoders `α_A(x) = |Aᵀx|`, `β_A(X) = ↓(XA)` and the compact
//!   `β̃_A(X) = (½(x₁ + x₂), α_A(x₁ - x₂))` ([`encoders`]);
//! * exhaustive injectivity certificates: full spark, complement property,
//!   universal key ([`frame_keys`]);
//! * exact decoders for all three encoders ([`inversion`]);
//! * the optimal bi-Lipschitz constants `A₀`, `B₀` with pairs attaining them
//!   ([`lipschitz`]);
//! * a dense SVD / least-squares kernel ([`numerics`]) and a bit-exact text
//!   matrix format ([`matfile`]).
//!
//! ```
//! use phasekey::{alpha, Key, PhaseRetriever};
//!
//! let key = Key::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]).unwrap();
//! let y = alpha(&key, &[-1.0, -2.0]).unwrap();
//! assert_eq!(y, vec![1.0, 2.0, 3.0]);
//! let x = PhaseRetriever::new(&key).unwrap().omega(&y).unwrap().x;
//! assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
//! ```

pub mod encoders;
pub mod error;
pub mod frame_keys;
pub mod inversion;
pub mod lipschitz;
pub mod matfile;
pub mod numerics;
pub mod properties;

pub use encoders::{
    alpha, beta, beta_tilde, dist_hat_h, dist_hat_v, hadamard_split, sort_desc_columns,
    BetaEmbedding, BetaTildeEmbedding, Permutation,
};
pub use error::{Error, Result};
pub use frame_keys::{
    analysis, generate_key, has_complement_property, is_full_spark, is_phase_retrievable,
    is_universal_key, synthesis_left_inverse, CertificateReport, Key, Partition, Witness,
};
pub use inversion::{
    invert_beta, invert_beta_tilde, omega, ConfigRecovery, PhaseRetriever, RecoveryResult,
};
pub use lipschitz::{
    build_report, check_achievement, lower_constant, ratio_scan, upper_constant, AchievementReport,
    LipschitzReport, RatioScan,
};
pub use numerics::{least_squares, rank, sigma_k, svd, Matrix, SvdResult, ToleranceConfig};
