//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "bilinear_spde.h"

int main(void) {
    BspdeModel *model = NULL;
    if (bspde_model_builtin("heat-1w", "{\"k_max\": 5}", &model) != BSPDE_STATUS_OK) return 10;
    size_t modes[2] = {1, 2};
    BspdeObservations *obs = NULL;
    if (bspde_simulate(model, modes, 2, 0.7, 1.0, 0.1, 3, &obs) != BSPDE_STATUS_OK) return 11;
    double theta = 0.0;
    if (bspde_estimate_exact(model, obs, modes, 2, &theta) != BSPDE_STATUS_OK) return 12;
    if (fabs(theta - 0.7) > 1e-10 * 0.7) return 13;
    if (bspde_observations_log_ratio(obs, 4, &theta) != BSPDE_STATUS_INVALID_INPUT) return 14;
    printf("%s\n", bspde_last_error());
    bspde_observations_free(obs);
    bspde_model_free(model);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler found; skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // tests run from target/<profile>/deps; the static library sits one level up.
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libbilinear_spde_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "mode 4 not in observations"
    );
}
