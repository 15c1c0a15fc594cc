//! Synthetic contact traces: random contacts, Waxman and GLP topologies with
//! power-law contact timing, and schedules that switch between them.

mod contacts;
mod switching;
mod topology;

pub use contacts::{animate_levy, animate_levy_by_edge, gen_random_contacts, levy_instants, SYNTH_GRANULARITY};
pub use switching::{
    bridge_topology, gen_switching, save_labels, write_labels, GeneratorKind, GeneratorSpec, Segment,
    SwitchingSchedule, DEFAULT_GLP_BETA, DEFAULT_GLP_M, DEFAULT_MIN_GAP, DEFAULT_TAIL_EXPONENT, DEFAULT_WAXMAN_SIDE,
    SCHEDULE_WAXMAN_SIDE,
};
pub use topology::{gen_glp_topology, gen_waxman_topology, waxman_draw, WAXMAN_RETRIES};
