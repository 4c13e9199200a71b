//! Sum-rate maximization for a two-user NOMA downlink assisted by a movable
//! RIS, with fluid-antenna receivers.

pub mod ao_driver;
pub mod archive;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod phase_sdr;
pub mod placement_pso;
pub mod port_select;
pub mod rate;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::{load_config, ScenarioConfig, User};
