pub mod occupancy_limit;
pub mod policy_limit;
pub mod properties;
pub mod return_dist;
pub mod stability;
