//! Decision-estimation coefficients for finite model classes: exact values via
//! linear programming, closed-form certificates, the estimation-to-decisions
//! algorithm family, tabular MDP policy covers, bilinear-class designs, and
//! hard-instance families.

pub mod bilinear;
pub mod dec;
pub mod e2d;
pub mod error;
pub mod families;
pub mod estimation;
pub mod lp;
pub mod mdp;
pub mod models;
pub mod probkit;
pub mod rng;

pub use dec::{dec_dual_lp, dec_lp, dec_randomized, igw, posterior_sampling_certificate, CertificateMethod, DecCertificate, DecLowerWitness};
pub use error::{DecError, Result};
pub use models::{Model, ModelClass};
pub use probkit::{divergence, DivergenceKind, Outcome, OutcomeDist, Sample};
