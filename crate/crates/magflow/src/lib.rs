//! Numerical laboratory for magnetic flows on a compact hyperbolic surface.
//!
//! The frame bundle is modeled as the unimodular 2x2 group modulo sign, the
//! surface as the quotient by a Fuchsian group (the genus-2 octagon group by
//! default), and the magnetic flow as right translation by a one-parameter
//! subgroup whose generator interpolates between rotation, horocyclic, and
//! geodesic behavior as the energy crosses B^2/2.
//!
//! The crate has four layers:
//! matrix algebra and closed-form exponentials ([`sl2`]), the group with its
//! fundamental-domain reduction and area sampler ([`fuchsian`]), dynamics
//! (flows in [`flows`], the coefficient cocycle in [`variational`], averages
//! and decay fits in [`ergodic`]), and exact quantum-side arithmetic
//! ([`spectrum`], [`coherent`]). [`report`] bundles the acceptance checks.
//!
//! Everything stochastic draws from counter-derived streams, so results are
//! pure functions of the seed and identical across thread counts; the
//! `parallel` feature (on by default) enables data parallelism with a
//! sequential fallback compiled in either way.

// negated comparisons like !(dt > 0.0) are NaN-rejecting guards; indexed
// loops over fixed 2x2 and 4x4 arrays read better than iterator chains
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod coherent;
pub mod ergodic;
pub mod error;
pub mod flows;
pub mod fuchsian;
pub mod numerics;
pub mod par;
pub mod report;
pub mod sl2;
pub mod spectrum;
pub mod variational;

pub use error::{Error, Result};
pub use flows::{classify, FramePoint, MagneticParams, Regime};
pub use fuchsian::FuchsianGroup;
pub use sl2::{AlgebraElement, GroupElement};
