//! Car position diagram toolkit: a lane/box/transition modeling language
//! with token-game semantics, an exact all-solutions scenario enumerator
//! built on an embedded CDCL solver, an explicit-state oracle for
//! differential testing, and collision/mining analyses.

pub mod analyze;
pub mod dsl;
pub mod encode;
pub mod enumerate;
pub mod families;
pub mod model;
pub mod oracle;
pub mod positions;
pub mod render;
pub mod sat;

pub use analyze::{SceneFilter, Summary};
pub use dsl::{parse, serialize, ParseError};
pub use enumerate::{count_scenarios, enumerate_scenarios, EnumOptions, EnumResult};
pub use model::{BoxId, CarId, Configuration, Model, RawModel, Scenario};
pub use oracle::{oracle_count, oracle_enumerate};
