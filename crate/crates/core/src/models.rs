//! Benchmark networks shipped with the tool (see `models/` at the repository root).

use crate::crn::{parse_crn, Crn};

pub const SINGLE_SPECIES: &str = include_str!("../../../models/single_species.crn");
pub const FUTILE_CYCLE: &str = include_str!("../../../models/futile_cycle.crn");
pub const YEAST: &str = include_str!("../../../models/yeast.crn");
pub const MOTILITY: &str = include_str!("../../../models/motility.crn");

/// `S1 -> S1 + S2 @ 1.0`, `S2 -> @ 0.025` from `[1, 40]`.
pub fn single_species() -> Crn {
    parse_crn(SINGLE_SPECIES).expect("bundled model parses")
}

/// Six-species enzymatic futile cycle from `[1, 50, 0, 1, 50, 0]`.
pub fn futile_cycle() -> Crn {
    parse_crn(FUTILE_CYCLE).expect("bundled model parses")
}

/// Modified yeast polarization, species `(R, L, RL, G, Ga, Gbg, Gd)`.
pub fn yeast() -> Crn {
    parse_crn(YEAST).expect("bundled model parses")
}

/// Motility regulation, nine species and twelve reactions.
pub fn motility() -> Crn {
    parse_crn(MOTILITY).expect("bundled model parses")
}

/// Looks a bundled model up by file stem (`single_species`, `futile_cycle`, `yeast`, `motility`).
pub fn by_name(name: &str) -> Option<Crn> {
    match name {
        "single_species" => Some(single_species()),
        "futile_cycle" => Some(futile_cycle()),
        "yeast" => Some(yeast()),
        "motility" => Some(motility()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::State;

    #[test]
    fn shapes() {
        let y = yeast();
        assert_eq!(y.species_count(), 7);
        assert_eq!(y.reactions().len(), 8);
        assert_eq!(y.initial(), &State::from([50, 2, 0, 50, 0, 0, 0]));
        assert_eq!(y.species_index("Gbg"), Some(5));
        let m = motility();
        assert_eq!(m.species_count(), 9);
        assert_eq!(m.reactions().len(), 12);
        assert_eq!(m.initial(), &State::from([1, 10, 1, 10, 1, 1, 10, 1, 1]));
        assert_eq!(m.species_index("CodY"), Some(1));
        assert_eq!(futile_cycle().reactions().len(), 6);
        assert!(by_name("nope").is_none());
    }
}
