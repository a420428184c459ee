//! Executable checks of the model's structural guarantees: gauge fuzzing,
//! aggregation and Lipschitz bounds, the spectral probe and the training
//! sweeps.

mod bounds;
mod gauge;
mod gradcheck;
mod spectral;
mod sweeps;

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

pub use bounds::{
    check_directional_lipschitz, check_lipschitz, check_perhead_bound, check_self_component, check_sic_projector, random_layer_instance,
    spectral_norm_bounds, LayerInstance, LipschitzEstimate, SpectralNorm,
};
pub use gradcheck::{gradient_check, gradient_instance, GRADIENT_FLOOR, GRADIENT_TOLERANCE};
pub use gauge::{apply_gauge, gauge_fuzz, gauge_model, GaugeFuzz, GaugePerturbation, GaugeVariant};
pub use spectral::{laplacian_modes, spectral_notch_probe, BandEnergy, LaplacianModes};
pub use sweeps::{
    depth_sweep_jobs, eta_grid_best, run_job, sic_grid_jobs, Executor, Job, JobResult, Sequential, SweepMode,
};

/// Outcome of one checked property. `pass` requires `max_deviation ≤
/// threshold`; some checks add conditions on their metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub property: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Auxiliary measurements keyed by name.
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(property: impl Into<String>, trials: usize, max_deviation: f64, threshold: f64) -> Self {
        Self {
            property: property.into(),
            trials,
            max_deviation,
            threshold,
            pass: max_deviation <= threshold,
            metrics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }
}
