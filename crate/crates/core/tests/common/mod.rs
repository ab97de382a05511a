//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use clockwork_core::{ClockParams, Machines, TopLevelProfile};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Profile at zero cold temperature written out directly:
/// `{1 - [1 - ((Z_H - 1)/Z_H)^{d-1}]^M} sin^{2(d-1)}(theta)`.
pub fn zero_tc_profile(d: u64, machines: Machines, beta_h: f64, e_h: f64, theta: f64) -> f64 {
    let zh = 1.0 + (-beta_h * e_h).exp();
    let amp = match machines {
        Machines::Infinite => 1.0,
        Machines::Finite(m) => {
            let x = ((zh - 1.0) / zh).powi((d - 1) as i32);
            1.0 - (1.0 - x).powi(m as i32)
        }
    };
    amp * theta.sin().powi(2 * (d - 1) as i32)
}

/// Gauss-Legendre nodes and weights on [-1, 1] from the eigenvalues of the
/// Jacobi matrix.
pub fn gauss_legendre_gw(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Compensated running sum.
#[derive(Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DirectMoments {
    pub t_bar: f64,
    pub t2_bar: f64,
    pub cycle_hazard: f64,
    pub cycles: u64,
}

/// First two moments of the waiting time by composite Gauss-Legendre
/// quadrature of `t c P(g t) exp(-Lambda(t))` over `[0, T_max]`, where
/// `Lambda(T_max) = 30`. The cumulative hazard at every node is itself
/// obtained by nested quadrature. The panel layout is the same in every
/// period because the hazard is periodic, and the sum over periods is
/// carried out term by term up to the truncation point.
pub fn direct_moments(profile: &TopLevelProfile) -> DirectMoments {
    const CUTOFF: f64 = 30.0;
    let p = &profile.params;
    let k = p.c / p.g;
    let rate = |x: f64| k * profile.at_phase(x);
    let (xs, ws) = gauss_legendre_gw(20);
    let gl = |a: f64, b: f64| -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        xs.iter().zip(&ws).map(|(x, w)| w * rate(c + h * x)).sum::<f64>() * h
    };

    let m = (p.d - 1) as f64;
    let n0 = 64 + (16.0 * m.sqrt()) as usize;
    let mut pending: Vec<(f64, f64)> = (0..n0)
        .rev()
        .map(|i| (PI * i as f64 / n0 as f64, PI * (i + 1) as f64 / n0 as f64))
        .collect();
    let mut panels = Vec::new();
    let mut lam = 0.0;
    while let Some((a, b)) = pending.pop() {
        let inc = gl(a, b);
        if lam < CUTOFF + 5.0 && inc > 0.25 && b - a > 1e-9 {
            let mid = 0.5 * (a + b);
            pending.push((mid, b));
            pending.push((a, mid));
            continue;
        }
        panels.push((a, b, lam));
        lam += inc;
    }
    let cycle = lam;

    // Nodes of one period with their weight, phase and cumulative hazard.
    let mut nodes = Vec::new();
    for &(a, b, start) in &panels {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in xs.iter().zip(&ws) {
            let s = c + h * x;
            let l = start + gl(a, s);
            nodes.push((s, l, w * h * rate(s) * (-l).exp()));
        }
    }
    let mut a_k = [Neumaier::default(); 3];
    for &(s, _, w) in &nodes {
        a_k[0].add(w);
        a_k[1].add(w * s);
        a_k[2].add(w * s * s);
    }
    let (a0, a1, a2) = (a_k[0].value(), a_k[1].value(), a_k[2].value());

    let full = (CUTOFF / cycle).floor() as u64;
    let mut i1 = Neumaier::default();
    let mut i2 = Neumaier::default();
    let step = (-cycle).exp();
    let mut decay = 1.0;
    for q in 0..full {
        if q % 4096 == 0 {
            decay = (-(q as f64) * cycle).exp();
        }
        let shift = q as f64 * PI;
        i1.add(decay * (shift * a0 + a1));
        i2.add(decay * (shift * shift * a0 + 2.0 * shift * a1 + a2));
        decay *= step;
    }
    // Last, partial period.
    let shift = full as f64 * PI;
    let base = full as f64 * cycle;
    let decay = (-base).exp();
    for &(s, l, w) in &nodes {
        if base + l > CUTOFF {
            break;
        }
        let t = shift + s;
        i1.add(decay * w * t);
        i2.add(decay * w * t * t);
    }
    DirectMoments {
        t_bar: i1.value() / p.g,
        t2_bar: i2.value() / (p.g * p.g),
        cycle_hazard: cycle,
        cycles: full + 1,
    }
}

/// Parameters at zero cold temperature and infinitely hot bath.
pub fn ideal(d: u64, m: Machines, g: f64, c: f64) -> ClockParams {
    ClockParams::zero_temperature(d, m, g, c).unwrap()
}

/// Linear interpolation of `y(x)` on a curve sorted by `x`; `None` outside.
pub fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if x < pts.first()?.0 || x > pts.last()?.0 {
        return None;
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x >= x0 && x <= x1 {
            if x1 == x0 {
                return Some(y0.max(y1));
            }
            return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
        }
    }
    Some(pts.last()?.1)
}
