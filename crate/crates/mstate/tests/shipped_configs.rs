//! The JSON files under `configs/` must track the in-crate presets byte for
//! byte, so edits to either side cannot drift apart silently.

use std::path::PathBuf;

use mstate::{example_config, example_names, RunConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn config_files_match_presets() {
    for name in example_names() {
        let path = configs_dir().join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| {
            panic!("{}: {e}; regenerate with the gen_configs example", path.display())
        });
        let preset = example_config(name).unwrap().to_json().unwrap() + "\n";
        assert_eq!(
            text,
            preset,
            "{} drifted from the preset; regenerate with the gen_configs example",
            path.display()
        );
    }
}

#[test]
fn config_files_resolve() {
    for name in example_names() {
        let path = configs_dir().join(format!("{name}.json"));
        let cfg = RunConfig::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.name, *name);
    }
}
