use serde::Serialize;

use super::Scalar;

/// Second-order Taylor coefficients of a scalar function of `n` variables:
/// value, gradient and a dense row-major `n × n` Hessian.
///
/// Every operation fills the upper triangle and mirrors it, so the Hessian is
/// symmetric bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Taylor2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl Taylor2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            value,
            gradient: vec![0.0; n],
            hessian: vec![0.0; n * n],
        }
    }

    /// The `i`-th coordinate function at `x`.
    pub fn variable(i: usize, x: &[f64]) -> Self {
        let mut t = Self::constant(x[i], x.len());
        t.gradient[i] = 1.0;
        t
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim() + j]
    }

    fn fill_symmetric(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j);
                h[i * n + j] = v;
                h[j * n + i] = v;
            }
        }
        h
    }
}

impl Scalar for Taylor2 {
    fn constant(c: f64, n: usize) -> Self {
        Taylor2::constant(c, n)
    }

    fn variable(i: usize, x: &[f64]) -> Self {
        Taylor2::variable(i, x)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        self.gradient.iter_mut().zip(&rhs.gradient).for_each(|(a, b)| *a += b);
        self.hessian.iter_mut().zip(&rhs.hessian).for_each(|(a, b)| *a += b);
        self
    }

    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        self.gradient.iter_mut().zip(&rhs.gradient).for_each(|(a, b)| *a -= b);
        self.hessian.iter_mut().zip(&rhs.hessian).for_each(|(a, b)| *a -= b);
        self
    }

    fn mul(&self, rhs: &Self) -> Self {
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        let (ga, gb) = (&self.gradient, &rhs.gradient);
        let gradient = ga.iter().zip(gb).map(|(x, y)| a * y + b * x).collect();
        let hessian = Self::fill_symmetric(n, |i, j| a * rhs.hess(i, j) + b * self.hess(i, j) + (ga[i] * gb[j] + gb[i] * ga[j]));
        Taylor2 {
            value: a * b,
            gradient,
            hessian,
        }
    }

    fn div(self, rhs: Self) -> Self {
        // q = a / b  =>  a = q b, solved for the derivatives of q.
        let n = self.dim();
        let b = rhs.value;
        let q = self.value / b;
        let gq: Vec<f64> = self.gradient.iter().zip(&rhs.gradient).map(|(ga, gb)| (ga - q * gb) / b).collect();
        let gb = &rhs.gradient;
        let hessian = Self::fill_symmetric(n, |i, j| {
            (self.hess(i, j) - q * rhs.hess(i, j) - (gq[i] * gb[j] + gb[i] * gq[j])) / b
        });
        Taylor2 {
            value: q,
            gradient: gq,
            hessian,
        }
    }

    fn neg(mut self) -> Self {
        self.value = -self.value;
        self.gradient.iter_mut().for_each(|g| *g = -*g);
        self.hessian.iter_mut().for_each(|h| *h = -*h);
        self
    }

    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        let g = &self.gradient;
        let hessian = Self::fill_symmetric(n, |i, j| f1 * self.hess(i, j) + f2 * (g[i] * g[j]));
        Taylor2 {
            value: f0,
            gradient: g.iter().map(|gi| f1 * gi).collect(),
            hessian,
        }
    }

    const STRICT_SQRT: bool = true;
}
