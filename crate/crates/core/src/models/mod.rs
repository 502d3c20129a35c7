//! Concrete models: cross-coded Potts, the fourteen-symbol vertex model and
//! its lift, the binary SFT that factors onto it, and edge-coded Potts.

pub mod edge_potts;
pub mod potts;
pub mod vertex;
pub mod yprime;

pub use edge_potts::edge_potts_spec;
pub use potts::{potts_cross_spec, spin_transfer_matrix};
pub use vertex::{gray3, gray7, vertex_lift, vertex_lift_spec, vertex_spec, DihedralAction, Dir, VertexSymbol};
pub use yprime::{factor_chain, yprime_spec};
