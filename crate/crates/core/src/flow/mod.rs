//! Direct numerical integration of wall systems and their return maps.

pub mod action_angle;
pub mod dopri5;
pub mod engine;
pub mod spec;

pub use action_angle::{action_angle, from_action_angle};
pub use engine::{
    integrate_impact, integrate_smooth, return_map, section_point, ImpactEvent,
    SectionCrossing, GRAZING_MOMENTUM, PENETRATION_TOL,
};
pub use spec::{FlowState, SystemSpec};
