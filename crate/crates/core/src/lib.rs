pub mod agent;
pub mod cli;
pub mod device;
pub mod eval;
pub mod orchestrator;
pub mod render;
pub mod video;
