//! Bundled 6-junction networks.
//!
//! Junction 1 is a slack supply at 4 MPa feeding compressor `c1` (1 → 2).
//! Pipes `p1` (2 → 3) and `p2` (3 → 4) form one path, `p3` (2 → 5),
//! compressor `c2` (5 → 6) and the narrow `p4` (6 → 4) the other, closing
//! the loop. Off-takes d1..d5 sit at junctions 2, 3, 4, 3, 4.

use crate::network::{parse_network, NetworkModel};

pub const SIX_JUNCTION: &str = include_str!("../fixtures/six_junction.json");
pub const SIX_JUNCTION_STORAGE: &str = include_str!("../fixtures/six_junction_storage.json");
pub const SIX_JUNCTION_STORAGE_MIN_INTAKE: &str = include_str!("../fixtures/six_junction_storage_min_intake.json");

/// No storage; intake capped at 150 kg/s.
pub fn six_junction() -> NetworkModel {
    parse_network(SIX_JUNCTION).expect("bundled fixture parses")
}

/// Same network with a storage facility at junction 3.
pub fn six_junction_storage() -> NetworkModel {
    parse_network(SIX_JUNCTION_STORAGE).expect("bundled fixture parses")
}

/// Storage network with the intake held at 100 kg/s or more and low
/// demand around hours 0-3, 11-12 and 22-23.
pub fn six_junction_storage_min_intake() -> NetworkModel {
    parse_network(SIX_JUNCTION_STORAGE_MIN_INTAKE).expect("bundled fixture parses")
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 3] = ["six-junction", "six-junction-storage", "six-junction-storage-min-intake"];

/// Looks a bundled fixture up by name.
pub fn by_name(name: &str) -> Option<NetworkModel> {
    match name {
        "six-junction" => Some(six_junction()),
        "six-junction-storage" => Some(six_junction_storage()),
        "six-junction-storage-min-intake" => Some(six_junction_storage_min_intake()),
        _ => None,
    }
}
