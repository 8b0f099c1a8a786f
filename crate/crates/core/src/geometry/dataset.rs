use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::airfoil::csv_header;
use super::{discretize, format_g17, Airfoil, Naca4Params, COORD_LEN, N_POINTS};
use crate::aero::{SolveOutcome, SolverSpec};
use crate::nn::Tensor;
use crate::parallel::{self, Execution};
use crate::{Error, Result};

/// Inclusive arithmetic range `min, min + step, ..., <= max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub fn single(v: f64) -> Self {
        Self {
            min: v,
            max: v,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.min + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }

    fn validate(&self, field: &str, lo: f64, hi: f64) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("grid.{field}: {what}")));
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return bad("bounds must be finite".into());
        }
        if self.step <= 0.0 {
            return bad(format!("step {} must be > 0", self.step));
        }
        if self.min > self.max {
            return bad(format!("min {} exceeds max {}", self.min, self.max));
        }
        if self.min < lo - 1e-12 || self.max > hi + 1e-12 {
            return bad(format!(
                "range [{}, {}] outside [{lo}, {hi}]",
                self.min, self.max
            ));
        }
        Ok(())
    }
}

/// Parameter grid over NACA 4-digit sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: GridRange,
    pub p: GridRange,
    pub t: GridRange,
    pub n_points: usize,
}

impl Default for GridSpec {
    /// 19 cambers x 11 positions x 19 thicknesses, with the camber-free
    /// sections counted once: 3781 sections.
    fn default() -> Self {
        Self {
            m: GridRange::new(0.0, 0.09, 0.005),
            p: GridRange::new(0.2, 0.7, 0.05),
            t: GridRange::new(0.06, 0.24, 0.01),
            n_points: N_POINTS,
        }
    }
}

impl GridSpec {
    pub fn single(params: Naca4Params) -> Self {
        Self {
            m: GridRange::single(params.m),
            p: GridRange::single(params.p),
            t: GridRange::single(params.t),
            n_points: N_POINTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.m.validate("m", 0.0, 0.095)?;
        self.t.validate("t", 0.01, 0.40)?;
        if self.m.max > 0.0 {
            self.p.validate("p", 1e-9, 0.9 - 1e-9)?;
        } else {
            self.p.validate("p", 0.0, 0.9)?;
        }
        if self.n_points % 2 != 0 || self.n_points < 122 {
            return Err(Error::Config(format!(
                "grid.n_points: {} must be even and at least 122",
                self.n_points
            )));
        }
        Ok(())
    }

    /// Sections in grid order (`m` outer, then `p`, then `t`). Camber-free
    /// sections do not depend on `p` and appear once per thickness.
    pub fn sections(&self) -> Result<Vec<Naca4Params>> {
        self.validate()?;
        let ps = self.p.values();
        let mut out = Vec::new();
        for m in self.m.values() {
            let ps: &[f64] = if m == 0.0 { &ps[..1] } else { &ps };
            for &p in ps {
                for t in self.t.values() {
                    out.push(Naca4Params::new(m, p, t)?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub seed: u64,
    pub n_grid: usize,
    pub n_converged: usize,
    /// Sections dropped because the solver did not converge, with the reason.
    pub dropped: Vec<(String, String)>,
    pub subsample: Option<usize>,
    pub toolkit_version: String,
}

/// Labeled airfoils ready for training.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub airfoils: Vec<Airfoil>,
    pub provenance: Option<DatasetProvenance>,
}

/// Solve every grid section and keep the converged ones, labeled with their
/// lift coefficient. Sections are solved in parallel and merged in grid order.
pub fn build_dataset(
    grid: &GridSpec,
    solver: &SolverSpec,
    seed: u64,
    exec: Execution,
) -> Result<Dataset> {
    let sections = grid.sections()?;
    let n_points = grid.n_points;
    let solved = parallel::map(&sections, exec, |params| -> Result<(Airfoil, SolveOutcome)> {
        let shape = discretize(params, n_points)?;
        let outcome = solver.solve(&shape)?;
        Ok((shape, outcome))
    });

    let mut airfoils = Vec::with_capacity(sections.len());
    let mut dropped = Vec::new();
    for (params, res) in sections.iter().zip(solved) {
        let (shape, outcome) = res?;
        match outcome {
            SolveOutcome::Converged { cl } => airfoils.push(shape.with_label(Some(cl))),
            SolveOutcome::NotConverged(reason) => {
                dropped.push((params.label(), reason.as_str().to_owned()))
            }
        }
    }
    if airfoils.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let provenance = DatasetProvenance {
        grid: grid.clone(),
        solver: solver.clone(),
        seed,
        n_grid: sections.len(),
        n_converged: airfoils.len(),
        dropped,
        subsample: None,
        toolkit_version: crate::VERSION.to_owned(),
    };
    Ok(Dataset {
        airfoils,
        provenance: Some(provenance),
    })
}

impl Dataset {
    pub fn new(airfoils: Vec<Airfoil>) -> Result<Self> {
        if airfoils.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(i) = airfoils.iter().position(|a| a.label().is_none()) {
            return Err(Error::InvalidParameter(format!("dataset entry {i} has no label")));
        }
        Ok(Self {
            airfoils,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.airfoils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.airfoils.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.airfoils
            .iter()
            .map(|a| a.label().unwrap_or(f64::NAN))
            .collect()
    }

    /// Coordinates as `N x data` and labels as `N x 1`.
    pub fn to_tensors(&self) -> Result<(Tensor, Tensor)> {
        let dim = self.airfoils.first().map_or(0, |a| a.coords().len());
        let mut x = Vec::with_capacity(self.len() * dim);
        for a in &self.airfoils {
            if a.coords().len() != dim {
                return Err(Error::shape("Dataset::to_tensors", &[dim], &[a.coords().len()]));
            }
            x.extend_from_slice(a.coords());
        }
        let labels = self.labels();
        Ok((
            Tensor::matrix(self.len(), dim, x)?,
            Tensor::matrix(self.len(), 1, labels)?,
        ))
    }

    /// Random subset of `n` entries, kept in original order.
    pub fn subsample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = index::sample(&mut rng, self.len(), n).into_vec();
        idx.sort_unstable();
        let provenance = self.provenance.clone().map(|mut p| {
            p.subsample = Some(n);
            p
        });
        Dataset {
            airfoils: idx.into_iter().map(|i| self.airfoils[i].clone()).collect(),
            provenance,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_shapes_csv(path, &self.airfoils)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::new(read_shapes_csv(path)?)
    }
}

/// Write 248-point labeled shapes as `x1..x248,y1..y248,cl` rows.
pub fn write_shapes_csv(path: &Path, shapes: &[Airfoil]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", csv_header()).map_err(io)?;
    for (i, a) in shapes.iter().enumerate() {
        if !a.is_standard() {
            return Err(Error::InvalidParameter(format!(
                "shape {i} has {} points, expected {N_POINTS}",
                a.n_points()
            )));
        }
        let label = a
            .label()
            .ok_or_else(|| Error::InvalidParameter(format!("shape {i} has no label")))?;
        let mut line = String::with_capacity(COORD_LEN * 22);
        for v in a.coords() {
            line.push_str(&format_g17(*v));
            line.push(',');
        }
        line.push_str(&format_g17(label));
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_shapes_csv(path: &Path) -> Result<Vec<Airfoil>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::format("shape CSV", format!("{}: empty file", path.display())))?;
    if header.trim() != csv_header() {
        return Err(Error::format(
            "shape CSV",
            format!("{}: unexpected header", path.display()),
        ));
    }
    let mut shapes = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::format("shape CSV", format!("{} row {}: {e}", path.display(), lineno + 2))
            })?;
        if vals.len() != COORD_LEN + 1 {
            return Err(Error::format(
                "shape CSV",
                format!(
                    "{} row {}: {} columns, expected {}",
                    path.display(),
                    lineno + 2,
                    vals.len(),
                    COORD_LEN + 1
                ),
            ));
        }
        let label = vals[COORD_LEN];
        shapes.push(Airfoil::from_vector(vals[..COORD_LEN].to_vec(), Some(label))?);
    }
    Ok(shapes)
}
