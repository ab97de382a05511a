//! Tick statistics of the decaying top level: hazard, survival, tick density
//! and the exact first two moments of the waiting time.
//!
//! Everything is computed in the phase variable `theta = g t`, in which the
//! hazard is `(c / g) P(theta)` and periodic with period `pi`. The waiting
//! phase splits as `theta = q pi + s` where the completed-cycle count `q` is
//! geometric with ratio `r = exp(-Lambda_cycle)` and the in-cycle offset `s`
//! is independent of `q`. The moments follow from that split with closed-form
//! geometric sums and two quadratures over a single cycle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ClockError, Result};
use crate::model::{baseline_top_population, ClockParams, TopLevelProfile};
use crate::quadrature::{gauss16, integrate, QuadConfig};
use crate::special::central_binomial_mean;

/// Below this cycle hazard the clock is treated as never ticking.
pub const DEGENERATE_CYCLE_HAZARD: f64 = 1e-14;

/// Beyond this cumulative hazard the survival (< 1e-26) is dropped.
const HAZARD_CUTOFF: f64 = 60.0;

/// How the within-cycle cumulative profile is evaluated.
#[derive(Debug, Clone)]
enum CycleIntegral {
    /// Closed-form antiderivative of `w sin^{2m}`.
    Wiener {
        weight: f64,
        mean: f64,
        /// `(-1)^p C(2m, m-p) / (p C(2m, m))` for `p = 1, 2, ...`.
        harmonics: Vec<f64>,
    },
    /// Panel table with a fixed Gauss rule inside a panel.
    Table,
}

/// Hazard model for one profile.
#[derive(Debug, Clone)]
pub struct HazardModel {
    pub profile: TopLevelProfile,
    pub c: f64,
    pub g: f64,
    /// Cumulative hazard accumulated over one full period.
    pub cycle_hazard: f64,
    /// Panel edges on `[0, pi]` and the profile integral up to each edge.
    edges: Vec<f64>,
    cum: Vec<f64>,
    integral: CycleIntegral,
    /// Integral of the profile over one period, in phase units.
    cycle_phase_integral: f64,
}

impl HazardModel {
    pub fn new(profile: TopLevelProfile) -> Result<Self> {
        let c = profile.params.c;
        let g = profile.params.g;
        let integral = match profile.pure_sine_power() {
            Some((m, weight)) => {
                let mean = central_binomial_mean(m);
                CycleIntegral::Wiener {
                    weight,
                    mean,
                    harmonics: wiener_harmonics(m),
                }
            }
            None => CycleIntegral::Table,
        };

        let m = (profile.params.d - 1) as f64;
        let panels = 32usize.max((16.0 * m.sqrt()).ceil() as usize);
        let edges: Vec<f64> = (0..=panels).map(|k| PI * k as f64 / panels as f64).collect();

        let mut model = HazardModel {
            profile,
            c,
            g,
            cycle_hazard: 0.0,
            edges,
            cum: Vec::new(),
            integral,
            cycle_phase_integral: 0.0,
        };

        let mut cum = Vec::with_capacity(model.edges.len());
        match &model.integral {
            CycleIntegral::Wiener { .. } => {
                for &x in &model.edges {
                    cum.push(model.wiener_cycle(x));
                }
            }
            CycleIntegral::Table => {
                let cfg = QuadConfig {
                    rel_tol: 1e-13,
                    ..QuadConfig::default()
                };
                let mut acc = 0.0;
                cum.push(0.0);
                for w in model.edges.windows(2) {
                    acc += integrate(|x| model.profile.at_phase(x), w[0], w[1], &[], &cfg)?.value;
                    cum.push(acc);
                }
            }
        }
        let total = *cum.last().expect("at least two edges");
        model.cum = cum;
        model.cycle_phase_integral = total;
        model.cycle_hazard = model.rate_scale() * total;

        let lc = model.cycle_hazard;
        if !lc.is_finite() || lc < 0.0 {
            return Err(ClockError::Internal(format!("cycle hazard is {lc}")));
        }
        if lc < DEGENERATE_CYCLE_HAZARD {
            return Err(ClockError::DegenerateProfile { cycle_hazard: lc });
        }
        Ok(model)
    }

    pub fn from_params(params: &ClockParams) -> Result<Self> {
        Self::new(TopLevelProfile::general(params)?)
    }

    /// `c / g`: converts profile integrals in phase units into hazard.
    pub fn rate_scale(&self) -> f64 {
        self.c / self.g
    }

    pub fn uses_closed_form(&self) -> bool {
        matches!(self.integral, CycleIntegral::Wiener { .. })
    }

    /// Hazard in phase units, `(c/g) P(theta)`.
    pub fn phase_rate(&self, theta: f64) -> f64 {
        self.rate_scale() * self.profile.at_phase(theta)
    }

    fn wiener_cycle(&self, x: f64) -> f64 {
        let CycleIntegral::Wiener {
            weight,
            mean,
            harmonics,
        } = &self.integral
        else {
            unreachable!("only called on the closed-form branch");
        };
        // sin(2 p x) by rotation, p = 1, 2, ...
        let (s1, c1) = (2.0 * x).sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = 0.0;
        for h in harmonics {
            acc += h * s;
            let next_s = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = next_s;
        }
        (weight * mean * (x + acc)).max(0.0)
    }

    /// Profile integral from 0 to `x`, `0 <= x <= pi`.
    fn cycle_phase(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, PI);
        match self.integral {
            CycleIntegral::Wiener { .. } => self.wiener_cycle(x),
            CycleIntegral::Table => {
                let k = self.panel_of(x);
                self.cum[k] + gauss16(|y| self.profile.at_phase(y), self.edges[k], x)
            }
        }
    }

    fn panel_of(&self, x: f64) -> usize {
        let n = self.edges.len() - 1;
        let k = self.edges.partition_point(|&e| e <= x);
        k.saturating_sub(1).min(n - 1)
    }

    /// Cumulative hazard within one cycle, `0 <= x <= pi`.
    pub fn cycle_hazard_at_phase(&self, x: f64) -> f64 {
        self.rate_scale() * self.cycle_phase(x)
    }

    /// Cumulative hazard at any phase, using periodicity.
    pub fn cumulative_at_phase(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        let q = (theta / PI).floor();
        let rem = theta - q * PI;
        q * self.cycle_hazard + self.cycle_hazard_at_phase(rem)
    }

    /// Smallest phase in `[0, pi]` whose in-cycle cumulative hazard reaches
    /// `target`, found by safeguarded Newton iteration inside a bracket.
    pub fn invert_cycle(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let phase_target = target / self.rate_scale();
        if phase_target >= self.cycle_phase_integral {
            return PI;
        }
        // Bracket from the panel table.
        let k = self.cum.partition_point(|&v| v < phase_target).clamp(1, self.edges.len() - 1);
        let (mut lo, mut hi) = (self.edges[k - 1], self.edges[k]);
        let tol = 1e-12 * PI;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.cycle_phase(x) - phase_target;
            if f == 0.0 {
                return x;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.profile.at_phase(x);
            let newton = x - f / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - x).abs();
            x = next;
            if step < tol || hi - lo < tol {
                break;
            }
        }
        x
    }

    /// Hazard `c P(g t)` in 1/seconds.
    pub fn hazard(&self, t: f64) -> f64 {
        self.c * self.profile.evaluate(t)
    }

    /// `Lambda(t) = int_0^t c P(g t') dt'`.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        self.cumulative_at_phase(self.g * t)
    }

    /// Same quantity by adaptive quadrature of the profile, bypassing the
    /// closed form and the panel table.
    pub fn cumulative_hazard_quadrature(&self, t: f64) -> Result<f64> {
        let theta = self.g * t;
        if theta <= 0.0 {
            return Ok(0.0);
        }
        let cfg = QuadConfig::default();
        let p = |x: f64| self.profile.at_phase(x);
        let q = (theta / PI).floor();
        let rem = theta - q * PI;
        let breaks = [0.5 * PI];
        let full = if q > 0.0 {
            integrate(p, 0.0, PI, &breaks, &cfg)?.value
        } else {
            0.0
        };
        let part = integrate(p, 0.0, rem, &breaks, &cfg)?.value;
        Ok(self.rate_scale() * (q * full + part))
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }

    /// Waiting-time density `c P(g t) exp(-Lambda(t))`.
    pub fn tick_density(&self, t: f64) -> f64 {
        self.hazard(t) * (-self.cumulative_hazard(t)).exp()
    }

    /// Breakpoints for integrals over one cycle: profile peaks and the
    /// phases where the cumulative hazard passes a few landmarks.
    fn cycle_breakpoints(&self) -> (Vec<f64>, f64) {
        let m = (self.profile.params.d - 1) as f64;
        let w = 1.0 / (2.0 * m).sqrt();
        let mut pts = vec![0.5 * PI];
        for j in [1.0, 2.0, 4.0, 8.0] {
            pts.push(0.5 * PI - j * w);
            pts.push(0.5 * PI + j * w);
        }
        let mut upper = PI;
        if self.cycle_hazard > HAZARD_CUTOFF {
            upper = self.invert_cycle(HAZARD_CUTOFF);
        }
        for lvl in [0.01, 1.0, 5.0] {
            if lvl < self.cycle_hazard {
                pts.push(self.invert_cycle(lvl));
            }
        }
        pts.retain(|p| *p > 0.0 && *p < upper);
        (pts, upper)
    }

    /// `J_j = int_0^pi s^j (c/g) P(s) exp(-Lambda(s)) ds` for `j = 0, 1, 2`,
    /// all by quadrature.
    pub fn within_cycle_integrals(&self) -> Result<[f64; 3]> {
        let (pts, upper) = self.cycle_breakpoints();
        let cfg = QuadConfig::default();
        let mut out = [0.0; 3];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = integrate(
                |s| s.powi(j as i32) * self.phase_rate(s) * (-self.cycle_hazard_at_phase(s)).exp(),
                0.0,
                upper,
                &pts,
                &cfg,
            )?
            .value;
        }
        Ok(out)
    }

    /// Exact first and second moments of the waiting time.
    pub fn moments(&self) -> Result<TickMoments> {
        let lc = self.cycle_hazard;
        let r = (-lc).exp();
        let one_minus_r = -(-lc).exp_m1();
        if !(one_minus_r > 0.0) || r >= 1.0 {
            return Err(ClockError::Internal(format!(
                "cycle survival ratio {r} is not below 1"
            )));
        }
        let (pts, upper) = self.cycle_breakpoints();
        let cfg = QuadConfig::default();
        let density = |s: f64| self.phase_rate(s) * (-self.cycle_hazard_at_phase(s)).exp() / one_minus_r;

        let s_mean = integrate(|s| s * density(s), 0.0, upper, &pts, &cfg)?.value;
        let s_var = integrate(
            |s| (s - s_mean) * (s - s_mean) * density(s),
            0.0,
            upper,
            &pts,
            &cfg,
        )?
        .value;

        let cycles_mean = r / one_minus_r;
        let cycles_var = r / (one_minus_r * one_minus_r);
        let theta_mean = PI * cycles_mean + s_mean;
        let theta_var = PI * PI * cycles_var + s_var;

        let t_bar = theta_mean / self.g;
        let delta_t = theta_var.sqrt() / self.g;
        let params = &self.profile.params;
        Ok(TickMoments::from_mean_and_spread(params, t_bar, delta_t, lc))
    }
}

fn wiener_harmonics(m: u64) -> Vec<f64> {
    // C(2m, m-p) / C(2m, m) = prod_{i=1}^p (m - i + 1) / (m + i) ~ exp(-p^2/m).
    let p_max = ((39.0 * m as f64).sqrt().ceil() as u64).min(m);
    let mut out = Vec::with_capacity(p_max as usize);
    let mut ratio = 1.0;
    for p in 1..=p_max {
        ratio *= (m - p + 1) as f64 / (m + p) as f64;
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * ratio / p as f64);
    }
    out
}

/// Waiting-time moments and the clock figures of merit derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickMoments {
    /// Mean waiting time (seconds).
    pub t_bar: f64,
    /// Second moment of the waiting time (seconds squared).
    pub t2_bar: f64,
    /// Standard deviation of the waiting time (seconds).
    pub delta_t: f64,
    /// Accuracy `(t_bar / delta_t)^2`.
    pub n: f64,
    /// Resolution `1 / t_bar`.
    pub r: f64,
    /// Heat dumped into the cold bath per second.
    pub epsilon: f64,
    pub cycle_hazard: f64,
}

impl TickMoments {
    fn from_mean_and_spread(params: &ClockParams, t_bar: f64, delta_t: f64, cycle_hazard: f64) -> Self {
        let r = 1.0 / t_bar;
        TickMoments {
            t_bar,
            t2_bar: delta_t * delta_t + t_bar * t_bar,
            delta_t,
            n: (t_bar / delta_t).powi(2),
            r,
            epsilon: (params.d - 1) as f64 * params.e_c * r,
            cycle_hazard,
        }
    }
}

/// Moments of the clock described by `params`.
pub fn clock_metrics(params: &ClockParams) -> Result<TickMoments> {
    HazardModel::from_params(params)?.moments()
}

/// Clock without clockwork: the ladder sits in equilibrium with the hot
/// bath, the hazard is constant and ticks are exponential.
pub fn baseline_metrics(params: &ClockParams) -> Result<TickMoments> {
    params.validate()?;
    let rate = params.c * baseline_top_population(params);
    let t_bar = 1.0 / rate;
    Ok(TickMoments::from_mean_and_spread(
        params,
        t_bar,
        t_bar,
        rate * params.period(),
    ))
}
