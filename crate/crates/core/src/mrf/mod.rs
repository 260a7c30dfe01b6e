//! Fingerprint dictionaries, phantoms and parameter maps.

mod bloch;
mod phantom;

pub use bloch::{bloch_fingerprint, build_dictionary, ExcitationSequence, ParameterGrid};
pub use phantom::{
    normalized_error, parameter_mae, params_from_atoms, synthesize_phantom, Ellipse, ParameterMaps, Phantom, Segment,
    SynthesizedPhantom,
};
