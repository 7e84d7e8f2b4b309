use std::path::Path;

use nsda::harness::{config_to_string, load_config, parse_config, write_config};

fn shipped() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_configs_parse_without_warnings() {
    let files = shipped();
    assert!(files.len() >= 5);
    for path in files {
        let text = std::fs::read_to_string(&path).unwrap();
        let (_, warnings) = parse_config(&text, &path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(warnings.is_empty(), "{}: {warnings:?}", path.display());
    }
}

#[test]
fn shipped_configs_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for path in shipped() {
        let cfg = load_config(&path).unwrap();
        let out = tmp.path().join(path.file_name().unwrap());
        write_config(&cfg, &out).unwrap();
        assert_eq!(load_config(&out).unwrap(), cfg, "{}", path.display());
        // Serialization is stable.
        assert_eq!(config_to_string(&load_config(&out).unwrap()), config_to_string(&cfg));
    }
}

#[test]
fn missing_section_key_names_the_key() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/twin.toml");
    let text = std::fs::read_to_string(&path).unwrap().replace("kind = \"fourier_truncation\"\n", "");
    let err = parse_config(&text, &path).unwrap_err().to_string();
    assert!(err.contains("interpolant.kind"), "{err}");
}

#[test]
fn unknown_top_level_key_warns_with_line() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/soak.toml");
    let text = format!("future_option = 3\n{}", std::fs::read_to_string(&path).unwrap());
    let (_, warnings) = parse_config(&text, &path).unwrap();
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0].line, 1);
    assert!(warnings[0].message.contains("future_option"));
}
