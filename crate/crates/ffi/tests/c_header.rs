use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "pnp_dg.h"

int main(void) {
    PnpSolver *s = NULL;
    if (pnp_solver_from_scenario("example4", &s) != PNP_STATUS_OK) return 1;
    size_t m, n, k;
    pnp_solver_shape(s, &m, &n, &k);
    double before, after;
    pnp_solver_mass(s, 0, &before);
    if (pnp_solver_step(s, 5) != PNP_STATUS_OK) return 2;
    pnp_solver_mass(s, 0, &after);
    if (pnp_solver_from_scenario("nope", &s) != PNP_STATUS_CONFIG) return 3;
    printf("%zu %zu %zu %.17g %s\n", m, n, k, after - before, pnp_last_error() ? "err" : "none");
    pnp_solver_free(s);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let header = fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/pnp_dg.h")).unwrap();
    for name in [
        "typedef struct PnpSolver PnpSolver",
        "PNP_STATUS_BUFFER_TOO_SMALL = 5",
        "pnp_solver_from_json(const char *json, struct PnpSolver **out)",
        "pnp_solver_concentration",
        "pnp_last_error(void)",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = target_dir().join("libpnp_dg_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = env::temp_dir().join(format!("pnp_dg_ffi_c_{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    let bin = dir.join("main");
    fs::write(&src, PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(&fields[..3], &["1", "100", "2"]);
    assert!(fields[3].parse::<f64>().unwrap().abs() < 1e-12);
    assert_eq!(fields[4], "err");
    fs::remove_dir_all(&dir).ok();
}
