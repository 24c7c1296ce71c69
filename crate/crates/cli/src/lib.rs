//! Library surface of the CLI crate: config loading and the verification
//! suites, shared by the `vote-diffuse` binary and the acceptance tests.

pub mod config;
pub mod verify;
