//! Thick-slice acquisition: sequence signal, stack geometry, per-slice
//! motion, slice kernels and the simulation of whole cases.

mod geometry;
pub mod io;
mod kernel;
pub(crate) use kernel::SliceMap;
mod motion;
mod sequence;
mod simulate;

pub use geometry::{InplaneGrid, Orientation, StackGeometry};
pub use kernel::{profile_weights, SliceKernel};
pub use motion::{sample_motion, MotionLevel, MotionTrace};
pub use sequence::{
    relaxation_signal, signal_phantom, steady_state_signal, SequenceParams, SliceProfile,
};
pub use simulate::{
    interpolate_inplane, propagate_labels, simulate_case, simulate_stack, CaseConfig,
    DomainPreset, LabelStack, SimulatedCase, SimulatedStack, CLINICAL_INPLANE_MM,
};
