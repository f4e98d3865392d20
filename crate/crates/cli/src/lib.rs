//! Library side of the datamon CLI: seeded generators, file formats and
//! report plumbing shared with the test harness.

pub mod gen;
pub mod io;
pub mod report;
