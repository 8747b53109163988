//! Text formats: instance files, reference and conformation files, the
//! instance generator, and performance-profile tables.

mod generate;
mod instance_file;
mod profile;
mod reference;

pub use generate::{generate_instance, synthetic_backbone, GeneratorParams, LOWER_FLOOR};
pub use instance_file::{format_instance, parse_instance, parse_instance_str, write_instance};
pub use profile::{
    format_profile, format_sig6, performance_profile, performance_ratios, AlgorithmRuns, ProfileCurve,
};
pub use reference::{
    format_conformation, format_reference, parse_reference, parse_reference_str, parse_trailer,
    write_conformation, write_reference, Reference,
};
