#![cfg(unix)]

mod common;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use afgl_core::aero::{xfoil_adapter, FlowCondition, NotConvergedReason, SolveOutcome, XfoilConfig, XFOIL_BIN_ENV};
use afgl_core::geometry::Airfoil;
use afgl_core::Error;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Reads the script from stdin, finds the polar file name after PACC and
/// writes a polar with the given lift coefficient.
fn fake_xfoil(dir: &Path, cl: &str) -> PathBuf {
    let body = format!(
        r#"polar=""
prev=""
while IFS= read -r line; do
  if [ "$prev" = "PACC" ] && [ -z "$polar" ]; then polar="$line"; fi
  prev="$line"
done
cat > "$polar" <<POLAR
 XFOIL polar
  alpha    CL        CD       CDp       CM
 ------ -------- --------- --------- --------
  0.000   {cl}   0.00000   0.00000  -0.0500
POLAR"#
    );
    script(dir, "xfoil", &body)
}

#[test]
fn parses_polar_from_fake_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = XfoilConfig::new(fake_xfoil(dir.path(), "0.2571"));
    let out = xfoil_adapter(&common::naca("2412"), &FlowCondition::new(0.0).unwrap(), &cfg).unwrap();
    assert_eq!(out, SolveOutcome::Converged { cl: 0.2571 });
}

#[test]
fn empty_polar_is_external_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = XfoilConfig::new(script(dir.path(), "xfoil", "cat > /dev/null"));
    let out = xfoil_adapter(&common::naca("0012"), &FlowCondition::new(0.0).unwrap(), &cfg).unwrap();
    assert_eq!(out, SolveOutcome::NotConverged(NotConvergedReason::ExternalFailure));
}

#[test]
fn hung_binary_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = XfoilConfig::new(script(dir.path(), "xfoil", "sleep 30"));
    cfg.timeout_secs = 0.5;
    let start = std::time::Instant::now();
    let out = xfoil_adapter(&common::naca("0012"), &FlowCondition::new(0.0).unwrap(), &cfg).unwrap();
    assert_eq!(out, SolveOutcome::NotConverged(NotConvergedReason::ExternalFailure));
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn missing_binary_is_config_error() {
    let cfg = XfoilConfig::new("/nonexistent/xfoil");
    let res = xfoil_adapter(&common::naca("0012"), &FlowCondition::new(0.0).unwrap(), &cfg);
    assert!(matches!(res, Err(Error::Config(_))));
}

#[test]
fn self_intersecting_shape_skips_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = XfoilConfig::new(script(dir.path(), "xfoil", "exit 1"));
    let bowtie = Airfoil::from_points(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)], None).unwrap();
    let out = xfoil_adapter(&bowtie, &FlowCondition::new(0.0).unwrap(), &cfg);
    assert!(matches!(out, Ok(SolveOutcome::NotConverged(NotConvergedReason::SelfIntersection))));
}

/// Runs only when a real binary is configured.
#[test]
fn real_binary_agrees_with_panel_solver() {
    let Some(cfg) = XfoilConfig::from_env() else {
        eprintln!("{XFOIL_BIN_ENV} not set; skipping");
        return;
    };
    let a = common::naca("2412");
    let flow = FlowCondition::new(0.0).unwrap();
    let ext = xfoil_adapter(&a, &flow, &cfg).unwrap().cl().unwrap();
    let panel = afgl_core::aero::panel_solve(&a, &flow).cl().unwrap();
    assert!(ext.is_finite());
    assert!(((ext - panel) / panel).abs() < 0.25, "{ext} vs {panel}");
}
