//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use afgl_core::aero::SolverSpec;
use afgl_core::geometry::{discretize, Airfoil, Dataset, Naca4Params};
use afgl_core::nn::{Graph, Tensor, Var};
use afgl_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Relative error `|a - b| / max(|a|, |b|, floor)` over flattened vectors.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

/// Analytic gradient of `f` with respect to every input, via `Graph::grad`.
pub fn analytic_grad<F>(inputs: &[Tensor], f: &F) -> Vec<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = f(&mut g, &vars).unwrap();
    let grads = g.grad(out, &vars).unwrap();
    grads.iter().flat_map(|v| g.value(*v).data().to_vec()).collect()
}

/// Central finite differences of `f` over every input element.
pub fn numeric_grad<F>(inputs: &[Tensor], f: &F) -> Vec<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |ts: &[Tensor]| {
        let mut g = Graph::new();
        let vars: Vec<Var> = ts.iter().map(|t| g.leaf(t.clone())).collect();
        let out = f(&mut g, &vars).unwrap();
        g.scalar(out)
    };
    let mut out = Vec::new();
    for k in 0..inputs.len() {
        for e in 0..inputs[k].len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[e] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[e] -= FD_STEP;
            out.push((eval(&plus) - eval(&minus)) / (2.0 * FD_STEP));
        }
    }
    out
}

pub fn fd_rel_err<F>(inputs: &[Tensor], f: F) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    rel_err(&analytic_grad(inputs, &f), &numeric_grad(inputs, &f))
}

/// Per-vertex turning angles summed around the closed polygon, coded
/// directly from vertex triples.
pub fn phi_oracle(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        let same = |q: (f64, f64)| (q.0 - p.0).abs() <= 1e-12 && (q.1 - p.1).abs() <= 1e-12;
        if pts.last().map_or(true, |&q| !same(q)) {
            pts.push(p);
        }
    }
    while pts.len() > 1 {
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        if (a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12 {
            pts.pop();
        } else {
            break;
        }
    }
    let n = pts.len();
    let mut total = 0.0;
    for v in 0..n {
        let prev = pts[(v + n - 1) % n];
        let cur = pts[v];
        let next = pts[(v + 1) % n];
        let e_in = (cur.0 - prev.0, cur.1 - prev.1);
        let e_out = (next.0 - cur.0, next.1 - cur.1);
        // heading change wrapped into (-pi, pi]
        let mut turn = e_out.1.atan2(e_out.0) - e_in.1.atan2(e_in.0);
        while turn > PI {
            turn -= 2.0 * PI;
        }
        while turn <= -PI {
            turn += 2.0 * PI;
        }
        total += turn.abs();
    }
    total
}

/// Two-pass mean-deviation oracle.
pub fn mu_oracle(shapes: &[Vec<f64>]) -> f64 {
    let dim = shapes[0].len();
    let n = shapes.len() as f64;
    let mut centre = vec![0.0; dim];
    for j in 0..dim {
        let mut s = 0.0;
        for shape in shapes {
            s += shape[j];
        }
        centre[j] = s / n;
    }
    let mut total = 0.0;
    for shape in shapes {
        let mut sq = 0.0;
        for j in 0..dim {
            sq += (shape[j] - centre[j]).powi(2);
        }
        total += sq.sqrt();
    }
    total / n
}

pub fn mse_oracle(pairs: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    for (r, a) in pairs {
        s += (a - r) * (a - r);
    }
    s / pairs.len() as f64
}

/// Mean silhouette coefficient with Euclidean distances.
pub fn silhouette(points: &Tensor, clusters: &[usize]) -> f64 {
    let n = points.rows();
    let k = clusters.iter().max().unwrap() + 1;
    let dist = |i: usize, j: usize| {
        points
            .row(i)
            .iter()
            .zip(points.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[clusters[j]] += dist(i, j);
                counts[clusters[j]] += 1;
            }
        }
        let own = clusters[i];
        let a = sums[own] / counts[own].max(1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Random valid NACA section.
pub fn random_naca(rng: &mut ChaCha8Rng) -> Naca4Params {
    Naca4Params::new(
        rng.random_range(0.0..0.09),
        rng.random_range(0.2..0.7),
        rng.random_range(0.06..0.24),
    )
    .unwrap()
}

pub fn naca(code: &str) -> Airfoil {
    discretize(&Naca4Params::from_designation(code).unwrap(), 248).unwrap()
}

/// Small labeled dataset from the panel solver.
pub fn toy_dataset(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let solver = SolverSpec::default();
    let mut shapes = Vec::new();
    while shapes.len() < n {
        let a = discretize(&random_naca(&mut r), 248).unwrap();
        if let Some(cl) = solver.solve(&a).unwrap().cl() {
            shapes.push(a.with_label(Some(cl)));
        }
    }
    Dataset::new(shapes).unwrap()
}
