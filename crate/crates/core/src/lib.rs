//! Persona-conditioned, heat-adaptive pedestrian routing simulator.
//!
//! Agents with demographic personas perceive the thermal comfort of street
//! scenes, plan Top-K routes under a fused distance–comfort cost, pick one,
//! and remember what they did. Evaluation compares simulated behavior with
//! reference routes and human comfort ratings.

pub mod evaluation;
pub mod memory;
pub mod perception;
pub mod personas;
pub mod planning;
pub mod road_network;
pub mod simulation;
pub mod synth;

pub use evaluation::{classify_rationale, pci, poi, Topic, TopicDistribution};
pub use memory::{BehaviorSummary, MemoryStore, TrajectoryRecord};
pub use perception::{ComfortScore, MockBackend, Perceiver, PerceptionBackend, PriceTable};
pub use personas::{builtin_personas, Persona};
pub use planning::{dijkstra, k_shortest, PlanConfig, Route};
pub use road_network::{load_network, RoadNetwork};
pub use simulation::{run_batch, run_episode, ChoiceSource, EpisodeConfig, EpisodeResult, Mode, OdPair};
