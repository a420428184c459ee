//! The gauge-equivariant message-passing layer.

mod forward;
mod ops;
mod params;

pub use forward::{layer_backward, layer_forward, layer_probe, ArcTrace, LayerCache, LayerProbe};
pub use ops::{
    arc_phase, attention_logit, mod_relu, node_norm, post_gate_message, residual_gate, sic_residual, sigmoid,
    sign_gate, softmax_attention, transport, LogitKnobs,
};
pub use params::{DiagonalTransform, HeadParams, HeadTransform, LayerParams, ParamClass, TensorView, TensorViewMut, Which};
pub(crate) use params::{view, view_mut};
