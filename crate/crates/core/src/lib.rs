//! Revealed-preference tests for dynamic hedonic demand.
//!
//! The library decides whether household purchase panels are consistent with
//! lifetime utility maximisation over product characteristics when a subset
//! of characteristics is habit forming. It separates two margins: a
//! structural one (observed prices must lie in the span of the maintained
//! goods-to-characteristics technology) and a behavioural one (the implied
//! shadow prices must satisfy dynamic Afriat inequalities at some discount
//! factor), and quantifies severity with distance and efficiency diagnostics
//! plus simulation-based restrictiveness statistics.
//!
//! Pipeline modules:
//! - [`panel`]: purchase-event ingestion and period construction;
//! - [`hedonic`]: the technology matrix and augmented objects;
//! - [`structural`]: spanning checks, distances, shadow-price solves;
//! - [`feasibility`]: the linear feasibility backend;
//! - [`engine`]: the dynamic test, admissible discount factors, efficiency;
//! - [`models`]: named specifications, nesting special cases, GARP;
//! - [`synth`]: generators with known ground truth;
//! - [`restrict`]: locally perturbed environments and quantile statistics;
//! - [`report`]: paired comparisons and table emission.

pub mod engine;
pub mod feasibility;
pub mod hedonic;
pub mod models;
pub mod panel;
pub mod report;
pub mod restrict;
pub mod structural;
pub mod synth;

pub use engine::{
    check_cycles_bruteforce, run_model, BetaGrid, Certificate, EngineOptions, PriceMode,
    TestOutcome, TestProblem,
};
pub use hedonic::{ActiveSlice, AugmentedBundle, Technology, TechnologyConfig};
pub use models::{builtin_models, ModelSpec, SpaceSpec};
pub use panel::{GoodsCatalog, HouseholdPanel, PurchaseEvent};
pub use structural::StructuralVerdict;
