pub mod crafting_graph;
pub mod item;
pub mod memory;
pub mod metrics;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod position;
pub mod runtime;
pub mod skills;
pub mod world_sim;

pub use item::{Inventory, ItemId};
