pub mod decoy_rate;
pub mod flow_router;
pub mod link_budget;
pub mod lp_core;
pub mod net_model;
pub mod scenario;
