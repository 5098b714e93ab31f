//! Library surface of the harness: the instance file format and the
//! report/verification machinery, shared by the binary and its tests.

pub mod instance_file;
pub mod report;
