use std::path::Path;
use std::process::Command;

// The committed header must be valid C and C++ and declare every exported symbol.
#[test]
fn header_compiles_and_is_complete() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/fsoe.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");

    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() > 20);
    for name in &exported {
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }

    let probe = std::env::temp_dir().join(format!("fsoe_header_probe_{}.c", std::process::id()));
    std::fs::write(
        &probe,
        "#include \"fsoe.h\"\nint main(void) { FsoeModel *m = 0; return fsoe_model_new_canonical(0.5, 0.2, &m) == FSOE_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = match Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(header.parent().unwrap())
            .arg(&probe)
            .output()
        {
            Ok(o) => o,
            Err(_) => {
                eprintln!("{cc} not available, skipping");
                continue;
            }
        };
        assert!(
            out.status.success(),
            "{cc}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let _ = std::fs::remove_file(probe);
}
