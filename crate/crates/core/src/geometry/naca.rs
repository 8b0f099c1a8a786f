use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Airfoil;
use crate::{Error, Result};

/// NACA 4-digit parameters as chord fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Naca4Params {
    /// Maximum camber.
    pub m: f64,
    /// Chordwise position of maximum camber.
    pub p: f64,
    /// Maximum thickness.
    pub t: f64,
}

impl Naca4Params {
    pub fn new(m: f64, p: f64, t: f64) -> Result<Self> {
        let params = Self { m, p, t };
        params.validate()?;
        Ok(params)
    }

    /// Parse a designation such as `"2412"`.
    pub fn from_designation(code: &str) -> Result<Self> {
        let digits: Vec<u32> = code.chars().filter_map(|c| c.to_digit(10)).collect();
        if digits.len() != 4 || code.len() != 4 {
            return Err(Error::InvalidParameter(format!(
                "NACA designation `{code}` must have four digits"
            )));
        }
        let m = f64::from(digits[0]) / 100.0;
        let p = f64::from(digits[1]) / 10.0;
        let t = f64::from(digits[2] * 10 + digits[3]) / 100.0;
        Self::new(m, p, t)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { m, p, t } = *self;
        if !(m.is_finite() && p.is_finite() && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite NACA parameters {self:?}")));
        }
        if !(0.0..=0.095 + 1e-12).contains(&m) {
            return Err(Error::InvalidParameter(format!("max camber m = {m} outside [0, 0.095]")));
        }
        if m > 0.0 && !(p > 0.0 && p < 0.9) {
            return Err(Error::InvalidParameter(format!(
                "camber position p = {p} outside (0, 0.9)"
            )));
        }
        if !(0.01 - 1e-12..=0.40 + 1e-12).contains(&t) {
            return Err(Error::InvalidParameter(format!("thickness t = {t} outside [0.01, 0.40]")));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("m{:.3}_p{:.2}_t{:.2}", self.m, self.p, self.t)
    }
}

/// Mean camber line height and slope at chord fraction `x`.
pub fn naca4_camber(params: &Naca4Params, x: f64) -> (f64, f64) {
    let Naca4Params { m, p, .. } = *params;
    if m == 0.0 {
        return (0.0, 0.0);
    }
    if x <= p {
        let k = m / (p * p);
        (k * (2.0 * p * x - x * x), 2.0 * k * (p - x))
    } else {
        let k = m / ((1.0 - p) * (1.0 - p));
        (
            k * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x),
            2.0 * k * (p - x),
        )
    }
}

/// Half-thickness at chord fraction `x`, closed trailing edge.
pub fn naca4_thickness(t: f64, x: f64) -> f64 {
    let x = x.max(0.0);
    5.0 * t
        * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3)
            - 0.1036 * x.powi(4))
}

/// Closed `n`-point outline ordered trailing edge, upper surface, leading
/// edge, lower surface, trailing edge.
///
/// Stations are cosine spaced over `n - 1` equal angular steps, so the two
/// points nearest the leading edge share one station (one on each surface)
/// and the first and last points are the same trailing-edge point. Thickness
/// is applied perpendicular to the camber line. The result is rescaled so
/// that `min x = 0` and `max x = 1`.
pub fn discretize(params: &Naca4Params, n: usize) -> Result<Airfoil> {
    params.validate()?;
    if n % 2 != 0 || n < 122 {
        return Err(Error::InvalidParameter(format!(
            "point count {n} must be even and at least 122"
        )));
    }
    let half = n / 2;
    let station = |k: usize| 0.5 * (1.0 + (2.0 * PI * k as f64 / (n - 1) as f64).cos());
    let surface = |x: f64, upper: bool| {
        let (yc, dyc) = naca4_camber(params, x);
        let yt = naca4_thickness(params.t, x);
        let th = dyc.atan();
        if upper {
            (x - yt * th.sin(), yc + yt * th.cos())
        } else {
            (x + yt * th.sin(), yc - yt * th.cos())
        }
    };

    let mut pts = Vec::with_capacity(n);
    for k in 0..half {
        pts.push(surface(station(k), true));
    }
    for i in half..n {
        pts.push(surface(station(n - 1 - i), false));
    }

    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let scale = 1.0 / (max_x - min_x);
    for p in &mut pts {
        p.0 = (p.0 - min_x) * scale;
        p.1 *= scale;
    }
    Airfoil::from_points(&pts, None)
}
