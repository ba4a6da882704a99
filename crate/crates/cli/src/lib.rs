//! Command-line driver: layered configuration, figure-data emission and the
//! analytic self-test suite.

pub mod config;
pub mod run;
pub mod selftest;

/// Process exit status of each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const VERDICT: i32 = 4;
}
