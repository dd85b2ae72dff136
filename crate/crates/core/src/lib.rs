pub mod database;
pub mod envelope;
pub mod io;
pub mod oracle;
pub mod planner;
pub mod preprocess;
pub mod robot;
pub mod scenario;
pub mod worldgrid;
