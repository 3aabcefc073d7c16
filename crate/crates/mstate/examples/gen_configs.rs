//! Regenerate the shipped configuration files from the in-crate presets.
//!
//! Usage: `cargo run -p mstate --example gen_configs -- <dir>` (defaults to
//! `configs/` in the current directory).

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir: PathBuf =
        std::env::args().nth(1).map_or_else(|| PathBuf::from("configs"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    for name in mstate::example_names() {
        let cfg = mstate::example_config(name)?;
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, cfg.to_json()? + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
