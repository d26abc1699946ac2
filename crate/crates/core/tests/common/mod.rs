//! Shared oracles for integration tests. These stay independent of the
//! implementation paths they check: the DP oracle only uses the pressure
//! evaluator and raw arithmetic.

use pressure_transport::pressure::PressureSpec;
use pressure_transport::torus::TorusPoint;
use pressure_transport::transport::DiscreteMeasure;

/// Dynamic-programming shortest path on a space-time lattice with edge
/// cost |Δx|²/(2δ) + δ·P(midpoint). Positions live on a lattice with
/// `per_unit` points per unit length covering [min−0.5, max+0.5]; both
/// endpoints must lie on the lattice. `band` limits the per-step jump
/// (in cells); pass usize::MAX for unrestricted transitions.
pub fn dp_action_oracle(
    x: f64,
    y: f64,
    t1: f64,
    t2: f64,
    pressure: &PressureSpec,
    per_unit: usize,
    steps: usize,
    band: usize,
) -> f64 {
    let h = 1.0 / per_unit as f64;
    let lo = x.min(y) - 0.5;
    let count = (((x.max(y) + 0.5) - lo) / h).round() as usize + 1;
    let pos = |j: usize| lo + j as f64 * h;
    let start = ((x - lo) / h).round() as usize;
    let goal = ((y - lo) / h).round() as usize;
    assert!(
        (pos(start) - x).abs() < 1e-12 && (pos(goal) - y).abs() < 1e-12,
        "endpoints must lie on the DP lattice"
    );
    let delta = (t2 - t1) / steps as f64;
    let mut dp = vec![f64::INFINITY; count];
    dp[start] = 0.0;
    let mut next = vec![f64::INFINITY; count];
    for k in 0..steps {
        let tm = t1 + (k as f64 + 0.5) * delta;
        next.fill(f64::INFINITY);
        for j in 0..count {
            if !dp[j].is_finite() {
                continue;
            }
            let i_lo = j.saturating_sub(band);
            let i_hi = j.saturating_add(band).min(count - 1);
            for i in i_lo..=i_hi {
                let dx = pos(i) - pos(j);
                let mid = 0.5 * (pos(i) + pos(j));
                let cost = dx * dx / (2.0 * delta) + delta * pressure.value(&[mid], tm);
                let cand = dp[j] + cost;
                if cand < next[i] {
                    next[i] = cand;
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
    }
    dp[goal]
}

/// Uniform-weight measure at the given 1-D positions.
pub fn atoms_1d(xs: &[f64]) -> DiscreteMeasure {
    let w = 1.0 / xs.len() as f64;
    DiscreteMeasure::new(
        xs.iter()
            .map(|&x| (TorusPoint::wrap(&[x]).unwrap(), w))
            .collect(),
    )
    .unwrap()
}

/// Single-mode pressure with a positive offset (C¹, time-independent).
pub fn offset_single_mode(amp: f64, offset: f64, horizon: f64) -> PressureSpec {
    PressureSpec::new(
        1,
        offset,
        vec![pressure_transport::pressure::Mode {
            wavevector: vec![1],
            cos_amp: pressure_transport::pressure::Amplitude::Constant(amp),
            sin_amp: pressure_transport::pressure::Amplitude::zero(),
        }],
        horizon,
    )
    .unwrap()
}

/// Deterministic xorshift stream for reproducible "random" test data.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> TestRng {
        TestRng(seed.max(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}
