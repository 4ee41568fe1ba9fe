//! Default configuration shipped with the crate.

pub const OFFICE_WORLD: &str = include_str!("../assets/office_18x20.toml");
pub const CORRIDOR_WORLD: &str = include_str!("../assets/corridor_6x120.toml");
pub const OFFICE_LOCATIONS: &str = include_str!("../assets/locations_office.toml");
pub const CORRIDOR_LOCATIONS: &str = include_str!("../assets/locations_corridor.toml");
pub const GRAMMAR: &str = include_str!("../assets/grammar.toml");
pub const PATTERNS: &str = include_str!("../assets/patterns.toml");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::IntentGrammar;
    use crate::rem::{LocationRegistry, MotionPatternTable, TwistLimits};
    use crate::world_sim::parse_world;

    #[test]
    fn shipped_assets_validate() {
        let office = parse_world(OFFICE_WORLD).unwrap();
        assert_eq!(office.grid.extent(), (18.0, 20.0));
        assert_eq!(office.rooms.iter().filter(|r| r.label != "corridor").count(), 11);
        let corridor = parse_world(CORRIDOR_WORLD).unwrap();
        assert_eq!(corridor.grid.extent(), (120.0, 6.0));
        IntentGrammar::parse(GRAMMAR).unwrap();
        MotionPatternTable::parse(PATTERNS, &TwistLimits::default()).unwrap();
        let locs = LocationRegistry::parse(OFFICE_LOCATIONS).unwrap();
        for l in &locs.locations {
            assert!(office.grid.is_free_at(l.x, l.y), "{} is not free", l.label);
        }
        for l in &LocationRegistry::parse(CORRIDOR_LOCATIONS).unwrap().locations {
            assert!(corridor.grid.is_free_at(l.x, l.y), "{} is not free", l.label);
        }
    }
}
