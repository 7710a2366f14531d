//! Chunk-level convolutional gated recurrent tagger with an optional frame
//! attention gate and per-event localization softmax.
//!
//! Per frame `x_t` (normalized 40-bin log-mel):
//!
//! ```text
//! y_cnn(t)  = maxpool(relu(conv(x_t)))
//! z_att(t)  = σ(w_att · x_t + b_att)                  (scalar, shared by all events)
//! y'(t)     = z_att(t) · y_cnn(t)
//! h         = BiGRU³(y')
//! o(t)      = σ(W_out relu(W_fnn h_t + b_fnn) + b_out)
//! z_loc(t)  = softmax(W_loc x_t + b_loc)              (one weight per event)
//! o'(t)     = z_att(t) · o(t) ⊙ z_loc(t)
//! o''       = Σ_t o'(t) / (Σ_t z_loc(t) + 1e-8)       (elementwise over events)
//! ```
//!
//! The baseline mode drops both gates and averages `o(t)` over frames.

mod forward;
mod gru;
mod params;

use std::fmt;
use std::str::FromStr;

pub use forward::{attention_gate, cnn_frame, forward, forward_resume, localize_frame, predict, ForwardTrace, LOC_DENOM_FLOOR};
pub use gru::{bigru_layer, run_direction, run_layer, BiGruCache, GruDirectionCache};
pub use params::{Architecture, BiGruParams, GruParams, ModelParams};
pub(crate) use params::is_bias;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelMode {
    /// Plain frame average of the sigmoid outputs.
    Baseline,
    /// Attention and localization gates with weighted aggregation.
    AttLoc,
}

impl ModelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Baseline => "baseline",
            ModelMode::AttLoc => "attloc",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ModelMode::Baseline => 0,
            ModelMode::AttLoc => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ModelMode::Baseline),
            1 => Some(ModelMode::AttLoc),
            _ => None,
        }
    }
}

impl fmt::Display for ModelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" | "cgrnn" => Ok(ModelMode::Baseline),
            "attloc" | "att-loc" | "att_loc" => Ok(ModelMode::AttLoc),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected baseline or attloc)"))),
        }
    }
}
