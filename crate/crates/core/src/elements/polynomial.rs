use alloc::vec::Vec;

use crate::math::{self, Vec2};

/// Monomials `x^a y^b` with `a + b <= degree`, ordered by total degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomials {
    pub degree: usize,
    pub exponents: Vec<(u32, u32)>,
}

impl Monomials {
    pub fn new(degree: usize) -> Self {
        let mut exponents = Vec::new();
        for total in 0..=degree as u32 {
            for b in 0..=total {
                exponents.push((total - b, b));
            }
        }
        Monomials { degree, exponents }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn values(&self, x: Vec2, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.exponents
                .iter()
                .map(|&(a, b)| math::powi(x[0], a) * math::powi(x[1], b)),
        );
    }

    pub fn gradients(&self, x: Vec2, out: &mut Vec<Vec2>) {
        out.clear();
        out.extend(self.exponents.iter().map(|&(a, b)| {
            let dx = if a == 0 {
                0.0
            } else {
                a as f64 * math::powi(x[0], a - 1) * math::powi(x[1], b)
            };
            let dy = if b == 0 {
                0.0
            } else {
                b as f64 * math::powi(x[0], a) * math::powi(x[1], b - 1)
            };
            [dx, dy]
        }));
    }
}

/// Legendre polynomials shifted to `[0, 1]`, degrees 0 through 3.
pub fn shifted_legendre(j: usize, s: f64) -> f64 {
    let t = 2.0 * s - 1.0;
    match j {
        0 => 1.0,
        1 => t,
        2 => 0.5 * (3.0 * t * t - 1.0),
        3 => 0.5 * (5.0 * t * t * t - 3.0 * t),
        _ => panic!("shifted Legendre degree {j} not tabulated"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::edge_rule;

    #[test]
    fn dimension() {
        assert_eq!(Monomials::new(0).len(), 1);
        assert_eq!(Monomials::new(2).len(), 6);
        assert_eq!(Monomials::new(3).len(), 10);
    }

    #[test]
    fn legendre_orthogonal_and_parity() {
        let rule = edge_rule(8).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let ip: f64 = rule
                    .iter()
                    .map(|(s, w)| w * shifted_legendre(i, s[0]) * shifted_legendre(j, s[0]))
                    .sum();
                let expect = if i == j { 1.0 / (2 * i + 1) as f64 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-14);
            }
            // reversal picks up (−1)^j
            let s = 0.3;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert!((shifted_legendre(i, 1.0 - s) - sign * shifted_legendre(i, s)).abs() < 1e-15);
        }
    }
}
