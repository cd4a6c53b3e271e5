//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and the
//! reference edge `[0, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no quadrature rule of degree {0} (maximum is {MAX_DEGREE})")]
pub struct UnsupportedDegree(pub usize);

/// Points in reference coordinates of dimension `D` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl<const D: usize> QuadRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// `m`-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = math::cos(core::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_m and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=m {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    // ascending order on [0, 1]
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Gauss–Legendre rule on `[0, 1]` exact to `degree`.
pub fn edge_rule(degree: usize) -> Result<QuadRule<1>, UnsupportedDegree> {
    if degree > MAX_DEGREE {
        return Err(UnsupportedDegree(degree));
    }
    let m = degree / 2 + 1;
    let (x, w) = gauss_legendre(m);
    Ok(QuadRule {
        points: x.into_iter().map(|s| [s]).collect(),
        weights: w,
        exact_degree: 2 * m - 1,
    })
}

fn from_barycentric(points: &[([f64; 3], f64)], exact_degree: usize) -> QuadRule<2> {
    QuadRule {
        points: points.iter().map(|(l, _)| [l[1], l[2]]).collect(),
        weights: points.iter().map(|(_, w)| 0.5 * w).collect(),
        exact_degree,
    }
}

fn orbit3(a: f64, w: f64) -> [([f64; 3], f64); 3] {
    let b = 1.0 - 2.0 * a;
    [([b, a, a], w), ([a, b, a], w), ([a, a, b], w)]
}

/// Rule on the reference triangle exact to `degree`. Symmetric rules are
/// used up to degree 5, collapsed Gauss products above that.
pub fn triangle_rule(degree: usize) -> Result<QuadRule<2>, UnsupportedDegree> {
    match degree {
        0 | 1 => Ok(from_barycentric(&[([1.0 / 3.0; 3], 1.0)], 1)),
        2 => Ok(from_barycentric(&orbit3(1.0 / 6.0, 1.0 / 3.0), 2)),
        3..=5 => {
            let s15 = math::sqrt(15.0);
            let mut pts = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
            pts.extend(orbit3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0));
            pts.extend(orbit3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0));
            Ok(from_barycentric(&pts, 5))
        }
        6..=MAX_DEGREE => Ok(collapsed_rule(degree)),
        _ => Err(UnsupportedDegree(degree)),
    }
}

/// Duffy-collapsed tensor Gauss rule: `x = a`, `y = b (1 − a)`.
fn collapsed_rule(degree: usize) -> QuadRule<2> {
    // the Jacobian factor (1 − a) raises the degree in `a` by one
    let (xa, wa) = gauss_legendre((degree + 3) / 2);
    let (xb, wb) = gauss_legendre((degree + 2) / 2);
    let mut points = Vec::with_capacity(xa.len() * xb.len());
    let mut weights = Vec::with_capacity(xa.len() * xb.len());
    for (a, wa) in xa.iter().zip(&wa) {
        for (b, wb) in xb.iter().zip(&wb) {
            points.push([*a, b * (1.0 - a)]);
            weights.push(wa * wb * (1.0 - a));
        }
    }
    QuadRule {
        points,
        weights,
        exact_degree: degree,
    }
}
