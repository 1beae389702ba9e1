//! Writes the toy fixture set: `cargo run --example make_fixtures -- <dir>`.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    for (rel, content) in bitext_sieve::toy::fixture_files() {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().unwrap())?;
        std::fs::write(&path, content)?;
        println!("{}", path.display());
    }
    Ok(())
}
