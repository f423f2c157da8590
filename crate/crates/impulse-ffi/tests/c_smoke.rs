//! End-to-end check that the generated header and the static library agree:
//! compiles a small C program against `include/impulse.h`, links the
//! staticlib, runs it, and checks its output.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from the crate root; the staticlib sits in the shared target
    // dir under the active profile.
    let mut dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    dir.pop();
    dir.pop();
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    dir.join("target").join(profile)
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "impulse.h"

static const char *SYSTEM_JSON =
    "{\"domain\": {\"lo\": 0.0, \"hi\": 2.0},"
    " \"f\": {\"branches\": ["
    "   {\"lo\": 0.0, \"hi\": 1.0, \"rule\": {\"kind\": \"affine\", \"slope\": 1.0, \"intercept\": 1.0}},"
    "   {\"lo\": 1.0, \"hi\": 2.0, \"rule\": {\"kind\": \"constant\", \"value\": 2.0}}]},"
    " \"g\": {\"rule\": {\"kind\": \"affine\", \"slope\": 0.5, \"intercept\": 0.0}},"
    " \"times\": {\"kind\": \"finite\", \"probs\": [0.5, 0.5]}}";

int main(void) {
    if (impulse_example_cdf(0.5) != 1.0 / 3.0) {
        return 1;
    }
    ImpulseSystemHandle *sys = NULL;
    if (impulse_system_from_json(SYSTEM_JSON, &sys) != IMPULSE_STATUS_OK) {
        return 2;
    }
    double values[500];
    if (impulse_simulate_ensemble(sys, 50, 500, 7, values) != IMPULSE_STATUS_OK) {
        return 3;
    }
    ImpulseContractionReport report;
    if (impulse_check_contraction(0.5, 1.0, 0.5, &report) != IMPULSE_STATUS_OK) {
        return 4;
    }
    if (!report.satisfied) {
        return 5;
    }
    impulse_system_free(sys);
    printf("ok %s\n", impulse_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let lib_dir = target_dir();
    let lib = lib_dir.join("libimpulse_ffi.a");
    assert!(lib.exists(), "staticlib missing at {}", lib.display());

    let include_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = tempfile::tempdir().expect("tempdir");
    let src = work.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).expect("write C source");
    let exe = work.path().join("smoke");

    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include_dir)
        .arg(lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("invoke cc");
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().expect("run smoke test");
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with("ok "), "stdout: {stdout}");
}
