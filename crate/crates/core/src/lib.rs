//! Numerical verification of gradient Ricci solitons `Ric + Hess f = λg`.
//!
//! A [`chart::MetricFamily`] is evaluated on [`jet::Jet`]s, so one call
//! yields the metric together with all the derivatives the curvature
//! needs. On top of that sit
//!
//! * [`bivector`]: the curvature operator on `∧²`, `ℛ^#` and the Weyl
//!   decomposition;
//! * [`verify`]: residual reports for the pointwise identities and
//!   elliptic equations, gated on the soliton residual;
//! * [`models`]: the builder catalog, warped products and f-volume;
//! * [`classify`]: spectral diagnostics and the model label.
//!
//! The guide in `book/` walks through each of these with examples that
//! run as doctests of this crate.

// `!(a > b)` is used on purpose where NaN must take the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bivector;
pub mod chart;
pub mod classify;
pub mod error;
pub mod jet;
pub mod models;
pub mod stencil;
pub mod tensor;
pub mod verify;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/curvature-operator.md")]
    mod curvature_operator {}
    #[doc = include_str!("../../../book/src/identities.md")]
    mod identities {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/warped-products.md")]
    mod warped_products {}
    #[doc = include_str!("../../../book/src/manifests-and-reports.md")]
    mod manifests_and_reports {}
}
