//! The rate table shipped in `data/` must stay in lockstep with the
//! built-in default so configurations referencing either behave the
//! same.

use std::path::Path;

use beamcast_core::link::{load_modcod_table, ModCodTable};

#[test]
fn shipped_modcod_csv_matches_builtin_table() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/dvbs2x_modcods.csv");
    let loaded = load_modcod_table(&path).expect("shipped table must parse");
    assert_eq!(loaded, ModCodTable::builtin_dvbs2x());
}
