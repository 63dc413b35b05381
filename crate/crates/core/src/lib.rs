//! Polarization-adjusted convolutional (PAC) codes.
//!
//! The crate covers the whole PAC chain: rate-profile insertion, the
//! convolutional pre-transform, the polar transform, a backtrackable polar
//! demapper and a Fano sequential decoder driven by a cutoff-rate biased
//! metric. On the construction side it estimates node cutoff rates over the
//! polarization tree and uses them to tame Reed-Muller rate profiles so that
//! sequential decoding stays tractable.
//!
//! All public bit positions are 1-based and the polar transform uses natural
//! (non bit-reversed) index order throughout.

pub mod channel;
pub mod construction;
pub mod demapper;
pub mod error;
pub mod fano;
pub mod guessing;
pub mod harness;
pub mod polar;
pub mod pretransform;
pub mod rng;

pub use channel::{
    biawgn_constants, dispersion_fer, ebn0_to_esn0, transmit, BiAwgnConstants, ChannelDraw,
    Lineage,
};
pub use construction::{
    bhattacharyya_base, bias_vector, cutoff_from_z, merge_profiles, node_cutoff_tree,
    polar_profile, rm_profile, tame_profile, BiasVector, ChannelModel, NodeCutoffTree,
    NodeEstimate,
};
pub use demapper::{boxplus2, LlrLattice, SoftOut};
pub use error::{Error, Result};
pub use fano::{anv, bit_metric, decode, DecodeOutcome, DecodeResult, FanoConfig};
pub use guessing::FiniteJointDist;
pub use polar::{polar_encode, row_weight, BitWord, CodeSpec};
pub use pretransform::{conv_encode, extract_data, insert_data, ConnPoly, RateProfile};
