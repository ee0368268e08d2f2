use std::path::Path;
use std::process::Command;

const FUNCTIONS: &[&str] = &[
    "hrc_obs_dim",
    "hrc_last_error",
    "hrc_env_new",
    "hrc_env_free",
    "hrc_env_reset",
    "hrc_env_step",
    "hrc_env_observation",
    "hrc_policy_load",
    "hrc_policy_free",
    "hrc_policy_forward",
];

fn header() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hrc.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for f in FUNCTIONS {
        assert!(text.contains(&format!("{f}(")), "missing {f}");
    }
    assert!(text.contains("typedef struct HrcEnv HrcEnv;"));
    assert!(text.contains("HRC_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(_) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"hrc.h\"\nint main(void) { HrcEnv *e = 0; HrcStepResult r; (void)r; \
         return hrc_env_reset(e, 0, 0, 0) == HRC_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
