//! Run configuration. Serialized flat so a single JSON object carries both
//! model and training knobs (`d`, `M`, `L`, `T` keep their short names).

use serde::{Deserialize, Serialize};

use crate::error::{GescError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// `γ[λ|s̃|/√d + (1−λ)Re(s̃/ν̃)]`
    Hybrid,
    /// `γ(|s̃| + κ cos∠s̃)/√d`
    PhaseAided,
    /// `γ cos∠s̃ · min(1, |s̃|/δ)`
    PhaseNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    Full,
    Diagonal,
}

/// `Additive` pins ξ ≡ 1 and g ≡ 0 so every message is the raw transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gating {
    Learned,
    Additive,
}

/// Where the cancellation is applied: to the transported message before
/// scoring (`Pre`) or to the gated message after the attention weights are
/// computed (`Post`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SicPosition {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    #[serde(rename = "d")]
    pub hidden_dim: usize,
    #[serde(rename = "M")]
    pub heads: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub eta_sic: f64,
    pub epsilon: f64,
    pub norm_epsilon: f64,
    pub lambda_mix: f64,
    pub attention_mode: AttentionMode,
    pub kappa: f64,
    pub delta: f64,
    pub param_mode: ParamMode,
    pub gating: Gating,
    /// Keep every transport phase at zero (no learning, no gauge updates).
    pub freeze_transport: bool,
    pub sic_position: SicPosition,
    pub sic_rank: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            heads: 4,
            layers: 2,
            eta_sic: 0.5,
            epsilon: 1e-4,
            norm_epsilon: 1e-6,
            lambda_mix: 0.5,
            attention_mode: AttentionMode::Hybrid,
            kappa: 0.5,
            delta: 1.0,
            param_mode: ParamMode::Full,
            gating: Gating::Learned,
            freeze_transport: false,
            sic_position: SicPosition::Pre,
            sic_rank: 1,
            dropout: 0.5,
        }
    }
}

impl ModelConfig {
    /// The in-repo baseline: η = 0, ξ ≡ 1, g ≡ 0, θ frozen at 0.
    pub fn additive(mut self) -> Self {
        self.eta_sic = 0.0;
        self.gating = Gating::Additive;
        self.freeze_transport = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.heads == 0 || self.layers == 0 {
            return Err(GescError::Parameter("d, M and L must all be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.eta_sic) {
            return Err(GescError::Parameter("eta_sic must lie in [0, 1]"));
        }
        if !(self.epsilon > 0.0) || !(self.norm_epsilon > 0.0) {
            return Err(GescError::Parameter("epsilon and norm_epsilon must be positive"));
        }
        if !(0.0..=1.0).contains(&self.lambda_mix) {
            return Err(GescError::Parameter("lambda_mix must lie in [0, 1]"));
        }
        if !(self.kappa >= 0.0) {
            return Err(GescError::Parameter("kappa must be non-negative"));
        }
        if !(self.delta > 0.0) {
            return Err(GescError::Parameter("delta must be positive"));
        }
        if self.sic_rank == 0 || self.sic_rank > self.hidden_dim {
            return Err(GescError::Parameter("sic_rank must lie in [1, d]"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(GescError::Parameter("dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda_js: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub p_edge_drop: f64,
    /// Also drop edges in the cross-entropy pass.
    pub ce_edge_drop: bool,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub per_class_train: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_js: 0.5,
            temperature: 1.0,
            p_edge_drop: 0.2,
            ce_edge_drop: false,
            lr: 1e-3,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            patience: 100,
            max_epochs: 1000,
            seed: 0,
            per_class_train: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(GescError::Parameter("temperature T must be positive"));
        }
        if !(0.0..1.0).contains(&self.p_edge_drop) {
            return Err(GescError::Parameter("p_edge_drop must lie in [0, 1)"));
        }
        if !(self.lambda_js >= 0.0) || !(self.lr >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(GescError::Parameter("lambda_js, lr and weight_decay must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return Err(GescError::Parameter("Adam moments must satisfy 0 <= beta < 1 and eps > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GescConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl GescConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }
}
