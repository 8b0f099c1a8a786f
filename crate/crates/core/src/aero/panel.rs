use std::f64::consts::PI;

use super::intersect::{distinct_loop, polygon_self_intersects};
use super::linalg::{norm1, Lu};
use super::{FlowCondition, NotConvergedReason, SolveOutcome};
use crate::geometry::Airfoil;
use crate::{Error, Result};

/// Condition number above which the vortex system counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

struct Panel {
    start: (f64, f64),
    len: f64,
    /// Unit tangent from start to end.
    t: (f64, f64),
}

impl Panel {
    fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = dx.hypot(dy);
        Self {
            start: a,
            len,
            t: (dx / len, dy / len),
        }
    }

    /// Left normal (tangent rotated by +90 degrees).
    fn n(&self) -> (f64, f64) {
        (-self.t.1, self.t.0)
    }

    fn midpoint(&self) -> (f64, f64) {
        (
            self.start.0 + 0.5 * self.len * self.t.0,
            self.start.1 + 0.5 * self.len * self.t.1,
        )
    }

    /// Velocity at `p` induced by unit nodal strengths at the start and end
    /// of a linearly varying, clockwise-positive vortex sheet. Returned in
    /// global coordinates as `(start_node, end_node)`.
    fn influence(&self, p: (f64, f64), on_self: bool) -> ((f64, f64), (f64, f64)) {
        let (rx, ry) = (p.0 - self.start.0, p.1 - self.start.1);
        let x = rx * self.t.0 + ry * self.t.1;
        let y = if on_self { 0.0 } else { -rx * self.t.1 + ry * self.t.0 };
        let s = self.len;
        let r1 = x.hypot(y);
        let r2 = (x - s).hypot(y);
        let ln = (r1 / r2).ln();
        let dth = (y.atan2(x - s)) - y.atan2(x);
        let k = 1.0 / (2.0 * PI);
        let lin_u = (x * dth - y * ln) / s;
        let lin_v = (x * ln - s + y * dth) / s;
        let ua = k * (dth - lin_u);
        let va = k * (-ln + lin_v);
        let ub = k * lin_u;
        let vb = -k * lin_v;
        let to_global = |u: f64, v: f64| {
            (
                u * self.t.0 - v * self.t.1,
                u * self.t.1 + v * self.t.0,
            )
        };
        (to_global(ua, va), to_global(ub, vb))
    }
}

/// Inviscid lift coefficient from a linear-strength vortex panel method.
///
/// Panels join consecutive points; a trailing-edge gap between the last and
/// first points is left open. Flow tangency holds at every panel midpoint
/// and the Kutta condition sets the two trailing-edge nodal strengths equal
/// and opposite. Lift follows from the total circulation, referenced to the
/// chordwise extent of the shape.
pub fn panel_solve(airfoil: &Airfoil, flow: &FlowCondition) -> SolveOutcome {
    let raw = airfoil.points();
    if polygon_self_intersects(&raw) {
        return SolveOutcome::NotConverged(NotConvergedReason::SelfIntersection);
    }
    // Keep both trailing-edge nodes; only interior duplicates are merged.
    let mut pts = distinct_loop(&raw);
    if raw.len() > 1 && pts.len() < raw.len() {
        let (first, last) = (raw[0], raw[raw.len() - 1]);
        if (first.0 - last.0).abs() <= 1e-12 && (first.1 - last.1).abs() <= 1e-12 {
            pts.push(last);
        }
    }
    if pts.len() < 4 {
        return SolveOutcome::NotConverged(NotConvergedReason::SingularSystem);
    }
    if pts.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return SolveOutcome::NotConverged(NotConvergedReason::NonFinite);
    }

    let panels: Vec<Panel> = pts.windows(2).map(|w| Panel::new(w[0], w[1])).collect();
    let n = panels.len();
    let size = n + 1;
    let (ca, sa) = (flow.alpha().cos(), flow.alpha().sin());

    let mut a = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    for (i, pi) in panels.iter().enumerate() {
        let c = pi.midpoint();
        let ni = pi.n();
        let row = &mut a[i * size..(i + 1) * size];
        for (j, pj) in panels.iter().enumerate() {
            let (va, vb) = pj.influence(c, i == j);
            row[j] += va.0 * ni.0 + va.1 * ni.1;
            row[j + 1] += vb.0 * ni.0 + vb.1 * ni.1;
        }
        rhs[i] = -(ca * ni.0 + sa * ni.1);
    }
    a[n * size] = 1.0;
    a[n * size + n] = 1.0;

    let anorm = norm1(&a, size);
    let Some(lu) = Lu::factor(a, size) else {
        return SolveOutcome::NotConverged(NotConvergedReason::SingularSystem);
    };
    let cond = anorm * lu.inverse_norm1_estimate();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return SolveOutcome::NotConverged(NotConvergedReason::SingularSystem);
    }
    let gamma = lu.solve(&rhs);

    let circulation: f64 = panels
        .iter()
        .enumerate()
        .map(|(j, p)| 0.5 * (gamma[j] + gamma[j + 1]) * p.len)
        .sum();
    let cl = 2.0 * circulation / airfoil.chord();
    if cl.is_finite() {
        SolveOutcome::Converged { cl }
    } else {
        SolveOutcome::NotConverged(NotConvergedReason::NonFinite)
    }
}

/// Least-squares slope of `cl` against `alpha`.
pub fn fit_slope(alphas: &[f64], cls: &[f64]) -> Result<f64> {
    if alphas.len() != cls.len() || alphas.len() < 2 {
        return Err(Error::InvalidParameter(
            "slope fit needs matching samples, at least two".into(),
        ));
    }
    let n = alphas.len() as f64;
    let ma = alphas.iter().sum::<f64>() / n;
    let mc = cls.iter().sum::<f64>() / n;
    let sxy: f64 = alphas.iter().zip(cls).map(|(a, c)| (a - ma) * (c - mc)).sum();
    let sxx: f64 = alphas.iter().map(|a| (a - ma) * (a - ma)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("angles of attack are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Lift-curve slope per radian over the given angles (radians).
pub fn lift_curve_slope(airfoil: &Airfoil, alphas: &[f64]) -> Result<f64> {
    if alphas.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "lift-curve slope needs at least 3 angles, got {}",
            alphas.len()
        )));
    }
    let mut cls = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        match panel_solve(airfoil, &FlowCondition::new(alpha)?) {
            SolveOutcome::Converged { cl } => cls.push(cl),
            SolveOutcome::NotConverged(reason) => {
                return Err(Error::InvalidParameter(format!(
                    "solver did not converge at alpha = {alpha}: {reason}"
                )))
            }
        }
    }
    fit_slope(alphas, &cls)
}
