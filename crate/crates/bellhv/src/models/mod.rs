//! The four correlation-graph models, each producing an exact or sampled
//! joint outcome distribution.

pub mod discrete;
pub mod serialize;
pub mod spherical;
pub mod table;

pub use discrete::{
    mi_ratio_m1, mi_ratio_m2, AlphaConstruction, DichotomicM3Model, M1Model, M2Model, MiRatio,
    SelectionTables,
};
pub use serialize::{ModelDocument, SCHEMA};
pub use spherical::{
    hall_density, hall_outcome_a, hall_outcome_b, m3c_density, m3c_outcome_a, m3c_outcome_b,
};
pub use table::{ProbabilityTable, VarSpec};
