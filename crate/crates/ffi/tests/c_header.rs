//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "policylens.h"

int main(void) {
    double h = 0;
    if (pl_cohens_h(0.464, 0.532, &h) != PL_STATUS_OK || fabs(h - 0.136106) > 1e-5) return 1;
    if (pl_cohens_h(2.0, 0.5, &h) != PL_STATUS_INVALID_ARGUMENT || pl_last_error() == NULL) return 2;

    const char *units[] = {"u1", "u2", "u3", "u4"};
    const char *coders[] = {"a", "b"};
    const char *va[] = {"1", "0", "1", "0"};
    const char *vb[] = {"1", "0", "1", "1"};
    PlReliability *m = NULL;
    if (pl_reliability_new(units, 4, coders, 2, &m) != PL_STATUS_OK) return 3;
    for (int i = 0; i < 4; i++) {
        pl_reliability_set(m, units[i], "a", va[i]);
        pl_reliability_set(m, units[i], "b", vb[i]);
    }
    double alpha = 0;
    if (pl_reliability_alpha(m, &alpha) != PL_STATUS_OK || fabs(alpha - 0.533333) > 1e-5) return 4;
    pl_reliability_free(m);

    PlGenerators *g = NULL;
    char *json = NULL;
    if (pl_generators_new(NULL, &g) != PL_STATUS_OK) return 5;
    if (pl_generators_detect(g, "Erstellt mit eRecht24", &json) != PL_STATUS_OK) return 6;
    if (strcmp(json, "[\"erecht24\"]") != 0) return 7;
    pl_string_free(json);
    pl_generators_free(g);
    printf("ok %s\n", pl_version());
    return 0;
}
"#;

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
}

fn static_lib() -> PathBuf {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    [deps.join("libpolicylens_ffi.a"), deps.parent().unwrap().join("libpolicylens_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
        .expect("static library next to the test binary")
}

#[test]
fn header_compiles_and_links() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(static_lib())
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), format!("ok {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn header_lists_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/policylens.h")).unwrap();
    let lib = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = lib
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 19);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
