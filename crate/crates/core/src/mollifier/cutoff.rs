use serde::{Deserialize, Serialize};

/// Smooth velocity cut-off: identity on `[-A, A]`, constant `±A` beyond `A + 1`,
/// joined by the quintic `p(s) = s - 6s^3 + 8s^4 - 3s^5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub a: f64,
}

fn transition(s: f64) -> f64 {
    s * (1.0 + s * s * (-6.0 + s * (8.0 - 3.0 * s)))
}

fn transition_prime(s: f64) -> f64 {
    1.0 + s * s * (-18.0 + s * (32.0 - 15.0 * s))
}

impl CutoffSpec {
    pub fn new(a: f64) -> Self {
        assert!(a > 0.0, "cut-off level must be positive");
        Self { a }
    }

    /// A cut-off that never activates.
    pub fn inactive() -> Self {
        Self { a: f64::INFINITY }
    }

    pub fn scalar(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.a {
            return x;
        }
        let y = if ax >= self.a + 1.0 {
            self.a
        } else {
            self.a + transition(ax - self.a)
        };
        y.copysign(x)
    }

    pub fn scalar_prime(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.a {
            1.0
        } else if ax >= self.a + 1.0 {
            0.0
        } else {
            transition_prime(ax - self.a)
        }
    }

    /// Componentwise application.
    pub fn apply(&self, y: &mut [f64]) {
        if self.a.is_infinite() {
            return;
        }
        for c in y {
            *c = self.scalar(*c);
        }
    }

    pub fn applied(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        self.apply(&mut out);
        out
    }

    /// True when `|y_i| <= A` for every component, i.e. the cut-off is the identity on `y`.
    pub fn is_identity_on(&self, sup_abs: f64) -> bool {
        sup_abs <= self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inside_and_constant_outside() {
        let c = CutoffSpec::new(2.0);
        let y = [1.5, -2.0, 0.0];
        assert_eq!(c.applied(&y), y.to_vec());
        assert_eq!(c.scalar(4.0), 2.0);
        assert_eq!(c.scalar(-4.0), -2.0);
    }

    #[test]
    fn transition_hermite_conditions() {
        let pp = |s: f64| -36.0 * s + 96.0 * s * s - 60.0 * s * s * s;
        assert_eq!(transition(0.0), 0.0);
        assert_eq!(transition_prime(0.0), 1.0);
        assert_eq!(pp(0.0), 0.0);
        assert!(transition(1.0).abs() < 1e-15);
        assert!(transition_prime(1.0).abs() < 1e-15);
        assert!(pp(1.0).abs() < 1e-13);
        let max = (0..=10_000)
            .map(|i| transition_prime(i as f64 / 10_000.0).abs())
            .fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let c = CutoffSpec::new(1.5);
        let h = 1e-6;
        let mut x = -4.0;
        while x <= 4.0 {
            let fd = (c.scalar(x + h) - c.scalar(x - h)) / (2.0 * h);
            assert!((fd - c.scalar_prime(x)).abs() < 1e-8, "x={x}");
            assert!(c.scalar_prime(x).abs() <= 1.0 + 1e-12);
            assert!(c.scalar(x).abs() <= 1.0 + c.a);
            x += 1e-4;
        }
    }

    #[test]
    fn second_derivative_continuous_at_joins() {
        let c = CutoffSpec::new(3.0);
        let h = 1e-5;
        let d2 = |x: f64| (c.scalar_prime(x + h) - c.scalar_prime(x - h)) / (2.0 * h);
        for x in [3.0, 4.0] {
            assert!(d2(x - 1e-3).abs() < 0.1);
            assert!(d2(x + 1e-3).abs() < 0.1);
        }
    }
}
