//! Dense tensors, reverse-mode gradients, RMSProp and finite-difference checks.

mod gradcheck;
mod graph;
mod optim;
mod params;
mod scalar;
mod tensor;

pub use gradcheck::{gradient_check, relative_error, GradCheckReport, SlotCheck, FD_STEP, GRAD_FLOOR};
pub use graph::{bce_term, dropout, dropout_mask, sigmoid, Graph, NodeId, PROB_CLAMP};
pub use optim::RmsProp;
pub use params::{Gradients, Init, ParamSlot, ParamStore, SlotId};
pub use scalar::Scalar;
pub use tensor::Tensor;
