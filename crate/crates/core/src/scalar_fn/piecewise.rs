//! Piecewise polynomials with exact antiderivatives.
//!
//! Used to realize bump-train witnesses: functions whose top derivative is
//! a prescribed train of compactly supported polynomial bumps and whose
//! lower derivatives follow by exact repeated antidifferentiation.

/// Dense polynomial, coefficients ascending in the local variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        if self.0.is_empty() {
            return Poly::zero();
        }
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0.0);
        for (i, &c) in self.0.iter().enumerate() {
            out.push(c / (i + 1) as f64);
        }
        Poly(out)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i + 1) as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len().max(other.0.len())];
        for (i, &a) in self.0.iter().enumerate() {
            out[i] += a;
        }
        for (i, &b) in other.0.iter().enumerate() {
            out[i] += b;
        }
        Poly(out)
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly(self.0.iter().map(|&a| a * c).collect())
    }
}

/// Piecewise polynomial on consecutive intervals `[breaks[i], breaks[i+1])`,
/// identically zero left of `breaks[0]`, and given by `right` (in the local
/// variable `t - breaks.last()`) on the right tail.
#[derive(Clone, Debug)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<Poly>, // local variable t - breaks[i]
    right: Poly,       // local variable t - breaks.last()
}

impl PiecewisePoly {
    /// Builds from breakpoints and pieces; the function is zero on the left
    /// tail and `right` on the right tail.
    pub fn new(breaks: Vec<f64>, pieces: Vec<Poly>, right: Poly) -> Self {
        assert_eq!(breaks.len(), pieces.len() + 1, "break/piece count mismatch");
        assert!(
            breaks.windows(2).all(|w| w[0] < w[1]),
            "breaks must increase strictly"
        );
        PiecewisePoly {
            breaks,
            pieces,
            right,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let first = self.breaks[0];
        if t < first {
            return 0.0;
        }
        let last = *self.breaks.last().unwrap();
        if t >= last {
            return self.right.eval(t - last);
        }
        // index of the piece containing t
        let i = self.breaks.partition_point(|&b| b <= t) - 1;
        self.pieces[i].eval(t - self.breaks[i])
    }

    /// Exact antiderivative vanishing on the left tail; piece constants are
    /// chained so the result is continuous.
    pub fn antiderivative(&self) -> PiecewisePoly {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        let mut carry = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let mut q = p.antiderivative();
            if q.0.is_empty() {
                q.0.push(0.0);
            }
            q.0[0] = carry;
            let width = self.breaks[i + 1] - self.breaks[i];
            carry = q.eval(width);
            pieces.push(q);
        }
        let mut right = self.right.antiderivative();
        if right.0.is_empty() {
            right.0.push(0.0);
        }
        right.0[0] = carry;
        PiecewisePoly {
            breaks: self.breaks.clone(),
            pieces,
            right,
        }
    }

    pub fn support_start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn support_end(&self) -> f64 {
        *self.breaks.last().unwrap()
    }
}
