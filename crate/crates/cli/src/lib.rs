//! Batch front-end for the rtgrowth pipeline: TOML run configs, one function
//! per subcommand, exit-code mapping.

pub mod commands;
pub mod config;

pub use commands::*;
pub use config::RunConfig;

use rtgrowth::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_UNSTABLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
/// the command ran but its acceptance checks failed
pub const EXIT_CHECKS_FAILED: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    use Error::*;
    match e {
        Io(_) | Csv(_) | Json(_) => EXIT_IO,
        Config(_)
        | InvalidInput(_)
        | FileNotFound(_)
        | BadParams(_)
        | BadExtents { .. }
        | TooFewCells { .. }
        | NonPositiveDensity { .. }
        | NoValidConstant(_)
        | DimensionMismatch { .. }
        | ProfileDomainMismatch { .. }
        | MeshMismatch => EXIT_VALIDATION,
        NotUnstable { .. } | NoUnstableRegion | WrongProfileClass(_) => EXIT_NOT_UNSTABLE,
        _ => EXIT_NUMERICAL,
    }
}
