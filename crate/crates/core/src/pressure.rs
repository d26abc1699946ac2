//! Prescribed pressure fields P(x,t) on Ω × [0,T].
//!
//! A pressure is a finite Fourier sum
//!
//!   P(x,t) = c₀ + Σ_k [ a_k(t)·cos(2π k·x) + b_k(t)·sin(2π k·x) ]
//!
//! with integer wavevectors k and time amplitudes that are low-order
//! polynomials or single-frequency trigonometric functions. This keeps
//! P in C¹(Ω_I) with structural periodicity and exact value, spatial
//! gradient and time derivative, so the hypotheses required of P are
//! certified rather than assumed.

use crate::error::{Error, Result};
use crate::torus::TorusPoint;
use std::f64::consts::PI;

/// Time dependence of a single mode amplitude.
#[derive(Debug, Clone, PartialEq)]
pub enum Amplitude {
    Constant(f64),
    /// coeffs[j] · t^j, low order (≤ cubic).
    Poly(Vec<f64>),
    /// amp · cos(omega·t + phase)
    Cosine { amp: f64, omega: f64, phase: f64 },
}

impl Amplitude {
    pub fn zero() -> Amplitude {
        Amplitude::Constant(0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Amplitude::Constant(c) => *c,
            Amplitude::Poly(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Amplitude::Cosine { amp, omega, phase } => amp * (omega * t + phase).cos(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Amplitude::Constant(_) => 0.0,
            Amplitude::Poly(coeffs) => {
                let mut acc = 0.0;
                for (j, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * t + j as f64 * c;
                }
                acc
            }
            Amplitude::Cosine { amp, omega, phase } => -amp * omega * (omega * t + phase).sin(),
        }
    }

    /// Upper bound for |a(t)| over [0, horizon].
    pub fn abs_bound(&self, horizon: f64) -> f64 {
        match self {
            Amplitude::Constant(c) => c.abs(),
            Amplitude::Poly(coeffs) => coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c.abs() * horizon.powi(j as i32))
                .sum(),
            Amplitude::Cosine { amp, .. } => amp.abs(),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Amplitude::Constant(c) => *c == 0.0,
            Amplitude::Poly(coeffs) => coeffs.iter().all(|c| *c == 0.0),
            Amplitude::Cosine { amp, .. } => *amp == 0.0,
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Amplitude::Constant(_) => true,
            Amplitude::Poly(coeffs) => coeffs.iter().skip(1).all(|c| *c == 0.0),
            Amplitude::Cosine { amp, omega, .. } => *amp == 0.0 || *omega == 0.0,
        }
    }
}

/// One Fourier mode: wavevector and its cosine/sine amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub wavevector: Vec<i64>,
    pub cos_amp: Amplitude,
    pub sin_amp: Amplitude,
}

/// A finite Fourier pressure field on Ω × [0, horizon].
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSpec {
    dim: usize,
    offset: f64,
    modes: Vec<Mode>,
    horizon: f64,
}

/// Value, spatial gradient and time derivative of P at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub dt: f64,
}

impl PressureSpec {
    pub fn new(dim: usize, offset: f64, modes: Vec<Mode>, horizon: f64) -> Result<PressureSpec> {
        if dim == 0 {
            return Err(Error::ConfigError("dimension must be at least 1".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::ConfigError(format!("horizon must be positive, got {horizon}")));
        }
        if !offset.is_finite() {
            return Err(Error::ConfigError("offset must be finite".into()));
        }
        for mode in &modes {
            if mode.wavevector.len() != dim {
                return Err(Error::DimensionError {
                    expected: dim,
                    got: mode.wavevector.len(),
                });
            }
        }
        Ok(PressureSpec { dim, offset, modes, horizon })
    }

    /// The zero pressure on [0, horizon].
    pub fn zero(dim: usize, horizon: f64) -> PressureSpec {
        PressureSpec::new(dim, 0.0, vec![], horizon).expect("zero pressure is valid")
    }

    /// Constant pressure c on [0, horizon].
    pub fn constant(dim: usize, c: f64, horizon: f64) -> PressureSpec {
        PressureSpec::new(dim, c, vec![], horizon).expect("constant pressure is valid")
    }

    /// Single cosine mode a·cos(2π k·x) with constant amplitude.
    pub fn single_mode(dim: usize, wavevector: Vec<i64>, amp: f64, horizon: f64) -> Result<PressureSpec> {
        PressureSpec::new(
            dim,
            0.0,
            vec![Mode {
                wavevector,
                cos_amp: Amplitude::Constant(amp),
                sin_amp: Amplitude::zero(),
            }],
            horizon,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// True when P ≡ offset (no spatial variation).
    pub fn is_spatially_constant(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.cos_amp.is_zero() && m.sin_amp.is_zero())
    }

    /// True when P ≡ 0.
    pub fn is_zero(&self) -> bool {
        self.offset == 0.0 && self.is_spatially_constant()
    }

    pub fn is_time_independent(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.cos_amp.is_constant() && m.sin_amp.is_constant())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < -1e-12 || t > self.horizon + 1e-12 {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }

    /// Value, gradient and ∂_t P at (x,t); x may be any covering-space
    /// representative (the result only depends on x mod ℤⁿ).
    pub fn eval(&self, x: &[f64], t: f64) -> Result<PressureEval> {
        self.check_time(t)?;
        if x.len() != self.dim {
            return Err(Error::DimensionError { expected: self.dim, got: x.len() });
        }
        let mut value = self.offset;
        let mut gradient = vec![0.0; self.dim];
        let mut dt = 0.0;
        for mode in &self.modes {
            let phase: f64 = 2.0
                * PI
                * mode
                    .wavevector
                    .iter()
                    .zip(x)
                    .map(|(&k, &c)| k as f64 * c)
                    .sum::<f64>();
            let (s, c) = phase.sin_cos();
            let a = mode.cos_amp.value(t);
            let b = mode.sin_amp.value(t);
            value += a * c + b * s;
            dt += mode.cos_amp.derivative(t) * c + mode.sin_amp.derivative(t) * s;
            let radial = -a * s + b * c;
            for (g, &k) in gradient.iter_mut().zip(&mode.wavevector) {
                *g += 2.0 * PI * k as f64 * radial;
            }
        }
        Ok(PressureEval { value, gradient, dt })
    }

    /// Convenience wrapper for torus points.
    pub fn eval_point(&self, x: &TorusPoint, t: f64) -> Result<PressureEval> {
        self.eval(x.coords(), t)
    }

    /// Value only; used in quadrature-heavy inner loops.
    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        let mut value = self.offset;
        for mode in &self.modes {
            let phase: f64 = 2.0
                * PI
                * mode
                    .wavevector
                    .iter()
                    .zip(x)
                    .map(|(&k, &c)| k as f64 * c)
                    .sum::<f64>();
            let (s, c) = phase.sin_cos();
            value += mode.cos_amp.value(t) * c + mode.sin_amp.value(t) * s;
        }
        value
    }

    /// Spatial gradient only.
    pub fn grad(&self, x: &[f64], t: f64, out: &mut [f64]) {
        out.fill(0.0);
        for mode in &self.modes {
            let phase: f64 = 2.0
                * PI
                * mode
                    .wavevector
                    .iter()
                    .zip(x)
                    .map(|(&k, &c)| k as f64 * c)
                    .sum::<f64>();
            let (s, c) = phase.sin_cos();
            let radial = -mode.cos_amp.value(t) * s + mode.sin_amp.value(t) * c;
            for (g, &k) in out.iter_mut().zip(&mode.wavevector) {
                *g += 2.0 * PI * k as f64 * radial;
            }
        }
    }

    /// Certified semiconcavity modulus C(t) ≥ 0 such that P(·,t) − C(t)|x|²
    /// is concave: C(t) = max(0, Σ_k (2π|k|)²(|a_k(t)| + |b_k(t)|)/2), an
    /// upper bound on half the largest Hessian eigenvalue.
    pub fn semiconcavity_bound(&self, t: f64) -> f64 {
        let mut bound = 0.0;
        for mode in &self.modes {
            let k2: f64 = mode.wavevector.iter().map(|&k| (k * k) as f64).sum();
            let scale = (2.0 * PI) * (2.0 * PI) * k2;
            bound += scale * (mode.cos_amp.value(t).abs() + mode.sin_amp.value(t).abs()) / 2.0;
        }
        bound.max(0.0)
    }

    /// Lower bound for P over Ω × [0, horizon]; used to prune shift
    /// candidates in the action search.
    pub fn lower_bound(&self) -> f64 {
        let mut lo = self.offset;
        for mode in &self.modes {
            lo -= mode.cos_amp.abs_bound(self.horizon) + mode.sin_amp.abs_bound(self.horizon);
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode_pressure() -> PressureSpec {
        PressureSpec::new(
            1,
            0.05,
            vec![
                Mode {
                    wavevector: vec![1],
                    cos_amp: Amplitude::Poly(vec![0.1, -0.02]),
                    sin_amp: Amplitude::Constant(0.03),
                },
                Mode {
                    wavevector: vec![2],
                    cos_amp: Amplitude::Cosine { amp: 0.04, omega: PI, phase: 0.3 },
                    sin_amp: Amplitude::zero(),
                },
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_pressure_evaluates_to_zero() {
        let p = PressureSpec::zero(2, 1.0);
        let e = p.eval(&[0.3, 0.7], 0.5).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, vec![0.0, 0.0]);
        assert_eq!(e.dt, 0.0);
        assert!(p.is_zero());
    }

    #[test]
    fn single_mode_at_origin() {
        let p = PressureSpec::single_mode(1, vec![1], 0.1, 1.0).unwrap();
        let e = p.eval(&[0.0], 0.3).unwrap();
        assert!((e.value - 0.1).abs() < 1e-15);
        assert!(e.gradient[0].abs() < 1e-15);
        assert_eq!(e.dt, 0.0);
    }

    #[test]
    fn rejects_time_outside_interval() {
        let p = PressureSpec::zero(1, 1.0);
        assert!(matches!(p.eval(&[0.0], 1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(p.eval(&[0.0], -0.5), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = two_mode_pressure();
        let t = 0.4;
        let x = [0.3127];
        let e = p.eval(&x, t).unwrap();
        let h = 1e-5;
        let fd = (p.value(&[x[0] + h], t) - p.value(&[x[0] - h], t)) / (2.0 * h);
        let scale = e.gradient[0].abs().max(1.0);
        assert!(
            (e.gradient[0] - fd).abs() / scale < 1e-8,
            "gradient {} vs fd {}",
            e.gradient[0],
            fd
        );
    }

    #[test]
    fn time_derivative_matches_finite_differences() {
        let p = two_mode_pressure();
        let x = [0.21];
        let t = 0.5;
        let e = p.eval(&x, t).unwrap();
        let h = 1e-5;
        let fd = (p.value(&x, t + h) - p.value(&x, t - h)) / (2.0 * h);
        assert!((e.dt - fd).abs() < 1e-6, "dt {} vs fd {}", e.dt, fd);
    }

    #[test]
    fn periodic_under_integer_shift() {
        let p = two_mode_pressure();
        let e0 = p.eval(&[0.37], 0.2).unwrap();
        let e1 = p.eval(&[0.37 + 3.0], 0.2).unwrap();
        assert!((e0.value - e1.value).abs() < 1e-12);
        assert!((e0.gradient[0] - e1.gradient[0]).abs() < 1e-11);
    }

    #[test]
    fn semiconcavity_bound_examples() {
        let zero = PressureSpec::zero(1, 1.0);
        assert_eq!(zero.semiconcavity_bound(0.5), 0.0);

        let p = PressureSpec::single_mode(1, vec![1], 0.1, 1.0).unwrap();
        let c = p.semiconcavity_bound(0.0);
        let expected = 0.1 * (2.0 * PI) * (2.0 * PI) / 2.0;
        assert!((c - expected).abs() < 1e-12);
        assert!(c <= 1.9740);

        // two modes: bound adds up
        let q = PressureSpec::new(
            1,
            0.0,
            vec![
                Mode {
                    wavevector: vec![1],
                    cos_amp: Amplitude::Constant(0.1),
                    sin_amp: Amplitude::zero(),
                },
                Mode {
                    wavevector: vec![2],
                    cos_amp: Amplitude::Constant(0.05),
                    sin_amp: Amplitude::zero(),
                },
            ],
            1.0,
        )
        .unwrap();
        let single1 = PressureSpec::single_mode(1, vec![1], 0.1, 1.0).unwrap();
        let single2 = PressureSpec::single_mode(1, vec![2], 0.05, 1.0).unwrap();
        let sum = single1.semiconcavity_bound(0.0) + single2.semiconcavity_bound(0.0);
        assert!((q.semiconcavity_bound(0.0) - sum).abs() < 1e-12);
    }

    #[test]
    fn shifted_quadratic_is_discretely_concave() {
        let p = two_mode_pressure();
        let t = 0.3;
        let c = p.semiconcavity_bound(t);
        let h = 1e-2;
        // lifted representative over one period: f(x) = P(x,t) - C|x|^2
        let f = |x: f64| p.value(&[x], t) - c * x * x;
        let mut x = 0.0;
        while x < 1.0 {
            let second = f(x + h) - 2.0 * f(x) + f(x - h);
            assert!(second <= 1e-12, "second difference {second} at {x}");
            x += h / 3.0;
        }
    }

    #[test]
    fn lower_bound_is_a_lower_bound() {
        let p = two_mode_pressure();
        let lo = p.lower_bound();
        for i in 0..50 {
            let x = i as f64 / 50.0;
            for j in 0..=10 {
                let t = j as f64 / 10.0;
                assert!(p.value(&[x], t) >= lo - 1e-12);
            }
        }
    }
}
