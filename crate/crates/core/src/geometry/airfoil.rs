use super::{COORD_LEN, N_POINTS};
use crate::{Error, Result};

/// Closed 2-D outline stored as `(x1..xn, y1..yn)` with an optional lift
/// coefficient label.
#[derive(Clone, Debug, PartialEq)]
pub struct Airfoil {
    coords: Vec<f64>,
    label: Option<f64>,
}

impl Airfoil {
    /// Wrap a coordinate vector laid out as all x then all y.
    pub fn from_vector(coords: Vec<f64>, label: Option<f64>) -> Result<Self> {
        if coords.len() % 2 != 0 || coords.len() < 6 {
            return Err(Error::InvalidParameter(format!(
                "coordinate vector length {} is not an even count of at least 3 points",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coordinate at index {i}")));
        }
        if label.is_some_and(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("non-finite label".into()));
        }
        Ok(Self { coords, label })
    }

    pub fn from_points(points: &[(f64, f64)], label: Option<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(2 * points.len());
        coords.extend(points.iter().map(|p| p.0));
        coords.extend(points.iter().map(|p| p.1));
        Self::from_vector(coords, label)
    }

    pub fn n_points(&self) -> usize {
        self.coords.len() / 2
    }

    /// True for the 248-point dataset layout.
    pub fn is_standard(&self) -> bool {
        self.coords.len() == COORD_LEN
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.n_points()]
    }

    pub fn y(&self) -> &[f64] {
        &self.coords[self.n_points()..]
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.coords[i], self.coords[self.n_points() + i])
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.n_points()).map(|i| self.point(i)).collect()
    }

    pub fn label(&self) -> Option<f64> {
        self.label
    }

    pub fn with_label(mut self, label: Option<f64>) -> Self {
        self.label = label;
        self
    }

    /// Distance between the first and last points.
    pub fn closure_gap(&self) -> f64 {
        let (x0, y0) = self.point(0);
        let (x1, y1) = self.point(self.n_points() - 1);
        (x1 - x0).hypot(y1 - y0)
    }

    pub fn chord(&self) -> f64 {
        let x = self.x();
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Uniformly scaled copy.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|v| v * k).collect(),
            label: self.label,
        }
    }

    /// Reflection about the chord line (`y -> -y`).
    pub fn mirrored(&self) -> Self {
        let n = self.n_points();
        let mut coords = self.coords.clone();
        for y in &mut coords[n..] {
            *y = -*y;
        }
        Self {
            coords,
            label: self.label.map(|l| -l),
        }
    }
}

impl Default for Airfoil {
    fn default() -> Self {
        Self {
            coords: vec![0.0; COORD_LEN],
            label: None,
        }
    }
}

/// Format like C's `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Dataset header `x1..x248,y1..y248,cl`.
pub(crate) fn csv_header() -> String {
    let mut cols: Vec<String> = (1..=N_POINTS).map(|i| format!("x{i}")).collect();
    cols.extend((1..=N_POINTS).map(|i| format!("y{i}")));
    cols.push("cl".into());
    cols.join(",")
}
