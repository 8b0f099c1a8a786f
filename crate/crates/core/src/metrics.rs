//! Smoothness, lift error and variety indices for batches of shapes.
//!
//! Smoothness is the total absolute turning angle of the closed polygon, so
//! any convex shape scores exactly 2π and zigzags score more. Lift error is
//! the mean squared gap between requested and achieved lift over converged
//! shapes only. Variety is the mean distance of each coordinate vector from
//! the batch mean.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aero::intersect::distinct_loop;
use crate::aero::{NotConvergedReason, SolveOutcome};
use crate::geometry::Airfoil;
use crate::parallel::{self, Execution};
use crate::{Error, Result};

/// Total absolute turning angle of a closed polygon, in radians.
pub fn polygon_phi(points: &[(f64, f64)]) -> Result<f64> {
    let pts = distinct_loop(points);
    let n = pts.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "smoothness needs at least 3 distinct points, got {n}"
        )));
    }
    let edge = |k: usize| {
        let (a, b) = (pts[k], pts[(k + 1) % n]);
        (b.0 - a.0, b.1 - a.1)
    };
    let mut phi = 0.0;
    for k in 0..n {
        let (u, v) = (edge(k), edge((k + 1) % n));
        let cross = u.0 * v.1 - u.1 * v.0;
        let dot = u.0 * v.0 + u.1 * v.1;
        phi += cross.abs().atan2(dot);
    }
    Ok(phi)
}

/// Smoothness index of one airfoil.
pub fn smoothness_phi(airfoil: &Airfoil) -> Result<f64> {
    polygon_phi(&airfoil.points())
}

/// Mean smoothness over `shapes`.
pub fn phi_mean(shapes: &[Airfoil], exec: Execution) -> Result<f64> {
    if shapes.is_empty() {
        return Err(Error::InvalidParameter("phi_mean of an empty batch".into()));
    }
    let phis = parallel::map(shapes, exec, smoothness_phi)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&phis))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean squared difference over `(requested, achieved)` pairs.
pub fn cl_mse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::NoConvergedShapes);
    }
    Ok(pairs.iter().map(|(r, a)| (r - a) * (r - a)).sum::<f64>() / pairs.len() as f64)
}

/// Mean Euclidean distance of coordinate vectors from their mean.
pub fn variety_mu(shapes: &[Airfoil]) -> Result<f64> {
    let Some(first) = shapes.first() else {
        return Err(Error::InvalidParameter("variety of an empty batch".into()));
    };
    let dim = first.coords().len();
    if let Some(bad) = shapes.iter().find(|s| s.coords().len() != dim) {
        return Err(Error::InvalidParameter(format!(
            "coordinate length {} differs from {dim}",
            bad.coords().len()
        )));
    }
    // offsets from the first shape keep identical batches at exactly zero
    let base = first.coords();
    let mut centre = vec![0.0; dim];
    for s in shapes {
        for ((c, v), b) in centre.iter_mut().zip(s.coords()).zip(base) {
            *c += v - b;
        }
    }
    let n = shapes.len() as f64;
    centre.iter_mut().for_each(|c| *c /= n);
    let total: f64 = shapes
        .iter()
        .map(|s| {
            s.coords()
                .iter()
                .zip(base)
                .zip(&centre)
                .map(|((v, b), c)| (v - b - c) * (v - b - c))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / n)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRates {
    pub converged: f64,
    pub failed: f64,
    /// Failure counts keyed by reason.
    pub failures: BTreeMap<NotConvergedReason, usize>,
}

pub fn convergence_rates(outcomes: &[SolveOutcome]) -> Result<ConvergenceRates> {
    if outcomes.is_empty() {
        return Err(Error::InvalidParameter("no solver outcomes".into()));
    }
    let mut failures = BTreeMap::new();
    let mut ok = 0usize;
    for o in outcomes {
        match o {
            SolveOutcome::Converged { .. } => ok += 1,
            SolveOutcome::NotConverged(r) => *failures.entry(*r).or_insert(0) += 1,
        }
    }
    let n = outcomes.len() as f64;
    Ok(ConvergenceRates {
        converged: ok as f64 / n,
        failed: (outcomes.len() - ok) as f64 / n,
        failures,
    })
}

/// Scores for one evaluated batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean smoothness over all shapes, in units of π.
    pub phi_mean_over_pi: f64,
    /// `None` when no shape converged.
    pub cl_mse: Option<f64>,
    pub mu: f64,
    pub rates: ConvergenceRates,
    pub phi_mean_all: f64,
    pub phi_mean_converged: Option<f64>,
    pub n_total: usize,
    pub n_converged: usize,
    pub n_failed: usize,
    pub phi: Vec<f64>,
    pub outcomes: Vec<SolveOutcome>,
}

impl MetricsReport {
    /// Score `shapes` given their solver outcomes and requested labels.
    pub fn compute(
        shapes: &[Airfoil],
        outcomes: &[SolveOutcome],
        requested: &[f64],
        exec: Execution,
    ) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::InvalidParameter("no shapes to evaluate".into()));
        }
        if outcomes.len() != shapes.len() || requested.len() != shapes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} shapes, {} outcomes, {} labels",
                shapes.len(),
                outcomes.len(),
                requested.len()
            )));
        }
        let phi = parallel::map(shapes, exec, smoothness_phi)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(f64, f64)> = requested
            .iter()
            .zip(outcomes)
            .filter_map(|(r, o)| o.cl().map(|a| (*r, a)))
            .collect();
        let phi_conv: Vec<f64> = phi
            .iter()
            .zip(outcomes)
            .filter(|(_, o)| o.is_converged())
            .map(|(p, _)| *p)
            .collect();
        let phi_mean_all = mean(&phi);
        let n_converged = pairs.len();
        Ok(Self {
            phi_mean_over_pi: phi_mean_all / PI,
            cl_mse: cl_mse(&pairs).ok(),
            mu: variety_mu(shapes)?,
            rates: convergence_rates(outcomes)?,
            phi_mean_all,
            phi_mean_converged: (!phi_conv.is_empty()).then(|| mean(&phi_conv)),
            n_total: shapes.len(),
            n_converged,
            n_failed: shapes.len() - n_converged,
            phi,
            outcomes: outcomes.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regular(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .collect()
    }

    #[test]
    fn convex_shapes_turn_once() {
        assert!((polygon_phi(&regular(100)).unwrap() - 2.0 * PI).abs() < 1e-9);
        let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)];
        assert!((polygon_phi(&square).unwrap() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn degenerate_polygon_errors() {
        assert!(polygon_phi(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(cl_mse(&[(0.3, 0.3)]).unwrap(), 0.0);
        assert!((cl_mse(&[(1.0, 0.8), (0.5, 0.5)]).unwrap() - 0.02).abs() < 1e-15);
        assert!(matches!(cl_mse(&[]), Err(Error::NoConvergedShapes)));
    }

    #[test]
    fn variety_examples() {
        let a = Airfoil::default();
        assert_eq!(variety_mu(&[a.clone(), a.clone()]).unwrap(), 0.0);
        let mut p = a.coords().to_vec();
        let mut q = p.clone();
        p[7] += 0.25;
        q[7] -= 0.25;
        let shapes = [
            Airfoil::from_vector(p, None).unwrap(),
            Airfoil::from_vector(q, None).unwrap(),
        ];
        assert!((variety_mu(&shapes).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rates_examples() {
        let ok = SolveOutcome::Converged { cl: 0.1 };
        let bad = SolveOutcome::NotConverged(NotConvergedReason::SelfIntersection);
        let r = convergence_rates(&[ok, ok, ok]).unwrap();
        assert_eq!((r.converged, r.failures.len()), (1.0, 0));
        let r = convergence_rates(&[ok, ok, ok, bad]).unwrap();
        assert_eq!(r.converged, 0.75);
        assert_eq!(r.failures.values().sum::<usize>(), 1);
    }

    #[test]
    fn report_keys() {
        let shapes = vec![Airfoil::from_points(&regular(8), None).unwrap(); 2];
        let outcomes = [
            SolveOutcome::Converged { cl: 0.5 },
            SolveOutcome::NotConverged(NotConvergedReason::SingularSystem),
        ];
        let r = MetricsReport::compute(&shapes, &outcomes, &[0.4, 0.4], Execution::Sequential).unwrap();
        assert_eq!((r.n_total, r.n_converged, r.n_failed), (2, 1, 1));
        assert!((r.phi_mean_over_pi - 2.0).abs() < 1e-12);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["phi_mean_over_pi", "cl_mse", "mu", "rates", "phi_mean_all", "phi_mean_converged"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
