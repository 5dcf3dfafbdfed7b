//! Symmetric quadrature rules on tetrahedra in barycentric form. Weights are
//! fractions of the element volume and sum to one.

pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

fn orbit_4(a: f64) -> Vec<[f64; 4]> {
    let b = 1.0 - 3.0 * a;
    vec![[b, a, a, a], [a, b, a, a], [a, a, b, a], [a, a, a, b]]
}

fn orbit_6(a: f64) -> Vec<[f64; 4]> {
    let b = 0.5 - a;
    vec![[a, a, b, b], [a, b, a, b], [a, b, b, a], [b, a, a, b], [b, a, b, a], [b, b, a, a]]
}

impl TetRule {
    /// Four points, exact for quadratics.
    pub fn degree2() -> Self {
        TetRule { points: orbit_4(0.138_196_601_125_010_5), weights: vec![0.25; 4] }
    }

    /// Fourteen points with positive weights, exact for polynomials of
    /// degree five.
    pub fn degree5() -> Self {
        let mut points = orbit_4(0.092_735_250_310_891_2);
        points.extend(orbit_4(0.310_885_919_263_300_6));
        points.extend(orbit_6(0.045_503_704_125_649_6));
        let mut weights = vec![0.073_493_043_116_361_9; 4];
        weights.extend([0.112_687_925_718_016_2; 4]);
        weights.extend([0.042_546_020_777_081_2; 6]);
        TetRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Physical point at barycentric coordinates `l` of a tetrahedron.
pub fn map_point(verts: &[[f64; 3]; 4], l: &[f64; 4]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for (v, w) in verts.iter().zip(l) {
        for d in 0..3 {
            x[d] += w * v[d];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    // integral of x^a y^b z^c over the reference tet {x,y,z >= 0, x+y+z <= 1}
    fn exact_monomial(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    fn check(rule: &TetRule, degree: u32) {
        let verts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for p in &rule.points {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        for a in 0..=degree {
            for b in 0..=degree - a {
                for c in 0..=degree - a - b {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| {
                            let x = map_point(&verts, l);
                            w * x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32)
                        })
                        .sum::<f64>()
                        / 6.0;
                    let e = exact_monomial(a, b, c);
                    assert!((q - e).abs() <= 1e-14 * e.max(1e-3), "x^{a} y^{b} z^{c}: {q} vs {e}");
                }
            }
        }
    }

    #[test]
    fn degree2_rule_is_exact_for_quadratics() {
        check(&TetRule::degree2(), 2);
    }

    #[test]
    fn degree5_rule_is_exact_for_quintics() {
        let rule = TetRule::degree5();
        assert_eq!(rule.len(), 14);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        check(&rule, 5);
    }
}
