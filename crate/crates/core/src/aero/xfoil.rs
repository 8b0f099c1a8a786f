use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::intersect::self_intersects;
use super::{FlowCondition, NotConvergedReason, SolveOutcome};
use crate::geometry::{format_g17, Airfoil};
use crate::{Error, Result};

/// Environment variable naming an external XFoil executable.
pub const XFOIL_BIN_ENV: &str = "AFGL_XFOIL_BIN";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XfoilConfig {
    pub binary: PathBuf,
    /// `None` runs inviscid.
    pub reynolds: Option<f64>,
    pub mach: f64,
    pub iterations: u32,
    pub timeout_secs: f64,
    /// Repanel count passed to PPAR; `None` keeps the input points.
    pub panels: Option<u32>,
}

impl XfoilConfig {
    pub fn new(binary: impl Into<PathBuf>) -> Self {
        Self {
            binary: binary.into(),
            reynolds: None,
            mach: 0.0,
            iterations: 100,
            timeout_secs: 10.0,
            panels: None,
        }
    }

    /// Config from [`XFOIL_BIN_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(XFOIL_BIN_ENV)
            .filter(|v| !v.is_empty())
            .map(Self::new)
    }
}

fn failure() -> SolveOutcome {
    SolveOutcome::NotConverged(NotConvergedReason::ExternalFailure)
}

fn write_selig(path: &Path, airfoil: &Airfoil) -> std::io::Result<()> {
    let mut text = String::from("afgl\n");
    for (x, y) in airfoil.points() {
        let _ = writeln!(text, "{} {}", format_g17(x), format_g17(y));
    }
    std::fs::write(path, text)
}

fn script(cfg: &XfoilConfig, flow: &FlowCondition, polar: &Path) -> String {
    let mut s = String::from("PLOP\nG F\n\nLOAD shape.dat\n");
    if let Some(n) = cfg.panels {
        let _ = write!(s, "PPAR\nN {n}\n\n\n");
    }
    s.push_str("OPER\n");
    if let Some(re) = cfg.reynolds {
        let _ = writeln!(s, "VISC {re}");
    }
    let _ = writeln!(s, "MACH {}", cfg.mach);
    let _ = writeln!(s, "ITER {}", cfg.iterations);
    let _ = write!(s, "PACC\n{}\n\n", polar.display());
    let _ = writeln!(s, "ALFA {}", flow.alpha().to_degrees());
    s.push_str("PACC\n\nQUIT\n");
    s
}

/// First `CL` value from an XFoil polar accumulation file.
pub(crate) fn parse_polar(text: &str) -> Option<f64> {
    let mut lines = text.lines().skip_while(|l| !l.trim_start().starts_with("------"));
    lines.next()?;
    lines
        .find(|l| !l.trim().is_empty())
        .and_then(|l| l.split_whitespace().nth(1)?.parse::<f64>().ok())
        .filter(|cl| cl.is_finite())
}

/// Lift coefficient from an external XFoil process.
pub fn xfoil_adapter(airfoil: &Airfoil, flow: &FlowCondition, cfg: &XfoilConfig) -> Result<SolveOutcome> {
    if !cfg.binary.is_file() {
        return Err(Error::Config(format!(
            "xfoil binary not found at {}",
            cfg.binary.display()
        )));
    }
    if self_intersects(airfoil) {
        return Ok(SolveOutcome::NotConverged(NotConvergedReason::SelfIntersection));
    }
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let shape = dir.path().join("shape.dat");
    let polar = dir.path().join("polar.txt");
    write_selig(&shape, airfoil).map_err(|e| Error::io(&shape, e))?;

    let Ok(mut child) = Command::new(&cfg.binary)
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
    else {
        return Ok(failure());
    };
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(script(cfg, flow, Path::new("polar.txt")).as_bytes());
    }
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.timeout_secs.max(0.0));
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(10)),
            _ => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(failure());
            }
        }
    }
    Ok(std::fs::read_to_string(&polar)
        .ok()
        .and_then(|t| parse_polar(&t))
        .map_or_else(failure, |cl| SolveOutcome::Converged { cl }))
}
