use std::path::Path;
use std::process::Command;

const EXPORTS: &[&str] = &[
    "isoflow_last_error_message",
    "isoflow_version",
    "isoflow_matrix_new",
    "isoflow_matrix_free",
    "isoflow_matrix_dim",
    "isoflow_matrix_read",
    "isoflow_eigenvalues",
    "isoflow_symes_solve",
    "isoflow_integrate",
    "isoflow_qr_iterate",
    "isoflow_norming_constants",
    "isoflow_reconstruct",
    "isoflow_to_chart",
    "isoflow_from_chart",
    "isoflow_ellipsoid_new",
    "isoflow_ellipsoid_free",
    "isoflow_billiard_step",
];

fn include_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(include_dir().join("isoflow.h")).unwrap();
    assert!(h.starts_with("#ifndef ISOFLOW_H"));
    for name in EXPORTS {
        assert!(h.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(h.contains("typedef struct IsoMatrix IsoMatrix;"));
    assert!(h.contains("ISO_STATUS_OK = 0"));
}

#[test]
fn c_program_compiles_against_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = std::env::temp_dir().join(format!("isoflow_smoke_{}.o", std::process::id()));
    let src = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/c/smoke.c"));
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c"])
        .arg("-I")
        .arg(include_dir())
        .arg(src)
        .arg("-o")
        .arg(&out)
        .status()
        .unwrap_or_else(|e| panic!("cannot run C compiler '{cc}': {e}"));
    let _ = std::fs::remove_file(&out);
    assert!(status.success());
}
