//! Fixtures shared by the benchmarks.

pub use edgeharden_core::{generate, Formulation, GenConfig, Instance, SolverConfig};

/// Square instance with the default generator settings.
pub fn instance(size: usize, seed: u64) -> Instance {
    generate(&GenConfig {
        seed,
        num_areas: size,
        num_nodes: size,
        ..GenConfig::default()
    })
    .expect("default generator settings are valid")
}

/// Small instance that solves to optimality in well under a second.
pub fn solvable() -> Instance {
    generate(&GenConfig {
        seed: 7,
        num_areas: 3,
        num_nodes: 6,
        ..GenConfig::default()
    })
    .expect("valid generator settings")
}
