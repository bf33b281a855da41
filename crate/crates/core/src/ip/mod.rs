//! 0/1 integer-program encoding of the planning problem at a fixed horizon.
//!
//! Bilinear terms (action × predecessor state, belief × padding) are
//! replaced by auxiliary `z` variables with the usual product triple, so the
//! model stays purely linear.

mod decode;
mod encode;
mod lp;
mod model;

pub use decode::{assignment_for, decode, Decoded};
pub use encode::{encode, reachable_states, EncodeOptions, DEFAULT_STATE_CAP};
pub use lp::export_lp;
pub use model::{AuxKind, Cmp, EncodingInfo, IpModel, LinearConstraint, StateIdx, VarId, VarKind};
