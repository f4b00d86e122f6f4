pub mod cover;
pub mod gen;
pub mod metrics;
pub mod scaling;
pub mod selfcheck;
