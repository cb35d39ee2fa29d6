//! Shared fixtures for the stage benchmarks.

use lfhc_core::fixtures::{generate, SceneKind, SyntheticSceneSpec};
use lfhc_core::LightField;

/// 9x9 grid of 64x64 views, the working size of the pipeline benchmarks.
pub fn bench_lightfield() -> LightField {
    let spec = SyntheticSceneSpec::new(SceneKind::TwoPlane { d1: 0.0, d2: 1.0 }, 101);
    generate(&spec, 9, 9, 64, 64).expect("fixture")
}

/// Smaller 5x5/32x32 field for the end-to-end benchmark.
pub fn small_lightfield() -> LightField {
    let spec = SyntheticSceneSpec::new(SceneKind::TwoPlane { d1: 0.0, d2: 1.0 }, 102);
    generate(&spec, 5, 5, 32, 32).expect("fixture")
}
