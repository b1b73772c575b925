//! Frozen unstructured triangle meshes for the hole-domain cases.
//!
//! Both were generated once from a perturbed structured grid with the
//! hole cells removed and are committed verbatim; regenerating them would
//! change the fixture-dependent benchmark numbers.

pub const PLATE_WITH_HOLE: &str = include_str!("../fixtures/plate_with_hole.mesh");
pub const BEAM_THREE_HOLES: &str = include_str!("../fixtures/beam_three_holes.mesh");

/// Text of a named built-in fixture, if it exists.
pub fn fixture_text(name: &str) -> Option<&'static str> {
    match name {
        "plate_with_hole" => Some(PLATE_WITH_HOLE),
        "beam_three_holes" => Some(BEAM_THREE_HOLES),
        _ => None,
    }
}
