//! Regenerates the bundled analytic sample profile.
//!
//! Usage: `cargo run -p leewave --example make_sample -- [path]`
//! The default path is `data/cira_like_profile.dat` relative to the
//! working directory.

use leewave::atmosphere::cira_like_records;
use leewave::io::{write_profile, ProfileFile};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/cira_like_profile.dat".to_string());
    let file = ProfileFile::nondimensional(cira_like_records());
    write_profile(&path, &file).expect("writing the sample profile");
    println!("wrote {path}");
}
