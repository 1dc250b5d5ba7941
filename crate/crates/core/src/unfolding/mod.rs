//! Strategy transfer from the unfolded game: the order-selection
//! lemma, rank profiles and simultaneous extension of simulations, the
//! transferred player II, and extraction of σ's witness map.

mod select;
mod transfer;
mod uniformize;
mod witness;

pub use select::{
    extwit_extend, linord_satisfies, linord_select, rank_order, rank_profile, replays, Extension, RankProfile, SimEntry, SimulationState,
};
pub use transfer::{allows, size_bound_holds, AuditEntry, AuditRound, TransferError, TransferStrategy};
pub use uniformize::{ifs_address_check, uniformization_extract, CylinderEntry, Mismatch, UniformizationReport};
pub use witness::WitnessEnumeration;
