pub mod cert;
pub mod exec;
pub mod fixtures;
pub mod model;
pub mod rational;
pub mod sim;
pub mod switching;
pub mod synthesis;
