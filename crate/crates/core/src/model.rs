//! Clock parameters, partition functions and the closed-form top-level
//! population profiles.
//!
//! Units: `hbar = k_B = 1`, energies in units of the cold gap by convention,
//! times in seconds. The phase variable used throughout is `theta = g t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ClockError, Result};
use crate::special::{ln_binomial, ln_inv_geometric_sum, one_minus_pow_complement};

/// Terms whose weight falls below this are dropped from a profile.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

/// Number of two-qubit machines attached to each ladder transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Machines {
    Finite(u64),
    Infinite,
}

impl Machines {
    pub fn finite(self) -> Option<u64> {
        match self {
            Machines::Finite(m) => Some(m),
            Machines::Infinite => None,
        }
    }
}

impl fmt::Display for Machines {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Machines::Finite(m) => write!(f, "{m}"),
            Machines::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Machines {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Machines::Infinite);
        }
        s.parse::<u64>()
            .map(Machines::Finite)
            .map_err(|_| ClockError::param("M", format!("expected a positive integer or `inf`, got `{s}`")))
    }
}

/// Full parameterization of one clock.
///
/// `beta_c` may be `f64::INFINITY` (cold bath at zero temperature) and
/// `beta_h` may be zero (hot bath at infinite temperature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockParams {
    pub d: u64,
    pub machines: Machines,
    pub g: f64,
    pub c: f64,
    pub beta_c: f64,
    pub beta_h: f64,
    pub e_c: f64,
    pub e_h: f64,
}

impl ClockParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: u64,
        machines: Machines,
        g: f64,
        c: f64,
        beta_c: f64,
        beta_h: f64,
        e_c: f64,
        e_h: f64,
    ) -> Result<Self> {
        let p = ClockParams {
            d,
            machines,
            g,
            c,
            beta_c,
            beta_h,
            e_c,
            e_h,
        };
        p.validate()?;
        Ok(p)
    }

    /// Cold bath at zero temperature, hot bath at infinite temperature,
    /// `E_C = 1`, `E_H = 2`.
    pub fn zero_temperature(d: u64, machines: Machines, g: f64, c: f64) -> Result<Self> {
        Self::new(d, machines, g, c, f64::INFINITY, 0.0, 1.0, 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(ClockError::param("d", format!("must be >= 2, got {}", self.d)));
        }
        if self.machines == Machines::Finite(0) {
            return Err(ClockError::param("M", "must be >= 1"));
        }
        positive_finite("g", self.g)?;
        positive_finite("c", self.c)?;
        positive_finite("E_C", self.e_c)?;
        positive_finite("E_H", self.e_h)?;
        if self.e_h <= self.e_c {
            return Err(ClockError::param(
                "E_H",
                format!("must exceed E_C ({} <= {})", self.e_h, self.e_c),
            ));
        }
        if !self.beta_h.is_finite() || self.beta_h < 0.0 {
            return Err(ClockError::param(
                "beta_H",
                format!("must be finite and >= 0, got {}", self.beta_h),
            ));
        }
        if self.beta_c.is_nan() || self.beta_c < 0.0 {
            return Err(ClockError::param(
                "beta_C",
                format!("must be >= 0 or infinity, got {}", self.beta_c),
            ));
        }
        if self.beta_c <= self.beta_h {
            return Err(ClockError::param(
                "beta_C",
                format!(
                    "cold bath must be strictly colder than the hot bath (beta_C = {} <= beta_H = {})",
                    self.beta_c, self.beta_h
                ),
            ));
        }
        Ok(())
    }

    /// Ladder gap `E_L = E_H - E_C`.
    pub fn e_l(&self) -> f64 {
        self.e_h - self.e_c
    }

    pub fn is_zero_tc(&self) -> bool {
        self.beta_c == f64::INFINITY
    }

    /// Oscillation period of every top-level profile, `pi / g`.
    pub fn period(&self) -> f64 {
        std::f64::consts::PI / self.g
    }

    pub fn with_d(mut self, d: u64) -> Self {
        self.d = d;
        self
    }

    pub fn with_machines(mut self, machines: Machines) -> Self {
        self.machines = machines;
        self
    }
}

fn positive_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ClockError::param(name, format!("must be finite and > 0, got {v}")))
    }
}

/// `1 + exp(-beta E)`, exactly 1 at `beta = inf` and exactly 2 at `beta = 0`.
pub fn qubit_partition(e: f64, beta: f64) -> Result<f64> {
    if !(e.is_finite() && e > 0.0) {
        return Err(ClockError::Domain(format!("qubit gap must be finite and > 0, got {e}")));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(ClockError::Domain(format!(
            "inverse temperature must be >= 0 or infinity, got {beta}"
        )));
    }
    if beta == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(1.0 + (-beta * e).exp())
}

/// `exp(-beta E)`, exactly 0 at `beta = inf`.
fn boltzmann(e: f64, beta: f64) -> f64 {
    if beta == f64::INFINITY {
        0.0
    } else {
        (-beta * e).exp()
    }
}

/// Partition function of an evenly spaced `d`-level ladder with gap `e_l`.
pub fn ladder_partition_function(d: u64, beta: f64, e_l: f64) -> f64 {
    if beta == f64::INFINITY {
        return 1.0;
    }
    let x = beta * e_l;
    if x == 0.0 {
        return d as f64;
    }
    (-(d as f64) * x).exp_m1() / (-x).exp_m1()
}

/// Thermal quantities shared by every profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub z_c: f64,
    pub z_h: f64,
    pub z_l: f64,
    pub ladder_pop: Vec<f64>,
}

impl PartitionSet {
    /// `ln <n| tau_L |n>`, valid for any `n` including those past underflow.
    fn ln_pop(&self, n: u64, beta_c: f64, e_l: f64) -> f64 {
        if beta_c == f64::INFINITY {
            if n == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            -(n as f64) * beta_c * e_l - self.z_l.ln()
        }
    }

    pub fn top_pop(&self) -> f64 {
        *self.ladder_pop.last().expect("ladder has d >= 2 levels")
    }
}

pub fn ladder_partition(params: &ClockParams) -> Result<PartitionSet> {
    params.validate()?;
    let z_c = qubit_partition(params.e_c, params.beta_c)?;
    let z_h = qubit_partition(params.e_h, params.beta_h)?;
    let z_l = ladder_partition_function(params.d, params.beta_c, params.e_l());
    let d = params.d as usize;
    let mut ladder_pop = vec![0.0; d];
    if params.is_zero_tc() {
        ladder_pop[0] = 1.0;
    } else {
        let x = params.beta_c * params.e_l();
        for (n, p) in ladder_pop.iter_mut().enumerate() {
            *p = (-(n as f64) * x).exp() / z_l;
        }
    }
    Ok(PartitionSet {
        z_c,
        z_h,
        z_l,
        ladder_pop,
    })
}

/// Which closed form a profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    TwoQubit,
    HorizontalFiniteT,
    GeneralFiniteT,
    GeneralZeroTc,
    BaselineConstant,
}

/// One term `weight * cos^{cos_power}(theta) * sin^{sin_power}(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTerm {
    pub weight: f64,
    pub cos_power: u64,
    pub sin_power: u64,
    ln_weight: f64,
}

impl ProfileTerm {
    fn new(ln_weight: f64, cos_power: u64, sin_power: u64) -> Self {
        ProfileTerm {
            weight: ln_weight.exp(),
            cos_power,
            sin_power,
            ln_weight,
        }
    }

    fn from_weight(weight: f64, cos_power: u64, sin_power: u64) -> Self {
        Self::new(weight.ln(), cos_power, sin_power)
    }

    #[inline]
    fn eval_log(&self, ln_cos: f64, ln_sin: f64) -> f64 {
        let mut e = self.ln_weight;
        if self.cos_power > 0 {
            e += self.cos_power as f64 * ln_cos;
        }
        if self.sin_power > 0 {
            e += self.sin_power as f64 * ln_sin;
        }
        e.exp()
    }
}

/// `P_top(theta) = constant + sum_k terms[k](theta)` with `theta = g t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopLevelProfile {
    pub params: ClockParams,
    /// `pi / g`, in seconds.
    pub period: f64,
    /// Value of the time-dependent part at `g t = pi / 2`.
    pub amplitude: f64,
    pub kind: ProfileKind,
    pub constant: f64,
    pub terms: Vec<ProfileTerm>,
}

impl TopLevelProfile {
    fn assemble(params: &ClockParams, kind: ProfileKind, constant: f64, mut terms: Vec<ProfileTerm>) -> Self {
        terms.retain(|t| t.weight >= NEGLIGIBLE_WEIGHT);
        let amplitude = terms
            .iter()
            .filter(|t| t.cos_power == 0)
            .map(|t| t.weight)
            .sum();
        TopLevelProfile {
            params: *params,
            period: params.period(),
            amplitude,
            kind,
            constant,
            terms,
        }
    }

    /// Two-qubit machine on a qubit ladder (`d = 2`, `M = 1`).
    pub fn two_qubit(params: &ClockParams) -> Result<Self> {
        if params.d != 2 || params.machines != Machines::Finite(1) {
            return Err(ClockError::WrongVariant {
                operation: "p_top_two_qubit",
                requirement: "d = 2 and M = 1",
            });
        }
        let z = ladder_partition(params)?;
        let (zc, zh, zl) = (z.z_c, z.z_h, z.z_l);
        let denom = zc * zh * zl;
        let sin2 = (zh - 1.0) / denom;
        let cos2 = (zc - 1.0) * (zl - 1.0) / denom;
        let constant = (zl - 1.0) / zl - cos2;
        Ok(Self::assemble(
            params,
            ProfileKind::TwoQubit,
            constant,
            vec![
                ProfileTerm::from_weight(sin2, 0, 2),
                ProfileTerm::from_weight(cos2, 2, 0),
            ],
        ))
    }

    /// Qubit ladder driven by `M` machines in parallel at finite temperature.
    pub fn horizontal_finite_t(params: &ClockParams) -> Result<Self> {
        if params.d != 2 {
            return Err(ClockError::WrongVariant {
                operation: "p_top_horizontal_finite_T",
                requirement: "d = 2",
            });
        }
        let m = params.machines.finite().ok_or(ClockError::WrongVariant {
            operation: "p_top_horizontal_finite_T",
            requirement: "a finite number of machines M",
        })?;
        let z = ladder_partition(params)?;
        let (zc, zh, zl) = (z.z_c, z.z_h, z.z_l);
        let (a, b) = (zh - 1.0, zc - 1.0);
        let zhc = zh * zc;
        // s is the probability that one machine leaves the ladder untouched.
        let s = (1.0 + a * b) / zhc;
        let one_minus_s = (a + b) / zhc;
        let s_pow_m = (m as f64 * s.ln()).exp();
        let geometric = -(m as f64 * s.ln()).exp_m1() / one_minus_s;
        let top = (zl - 1.0) / zl;
        let sin2 = geometric * a / (zl * zhc);
        let cos2 = geometric * (zl - 1.0) * b / (zl * zhc);
        let constant = top * (s_pow_m + geometric * a / zhc);
        Ok(Self::assemble(
            params,
            ProfileKind::HorizontalFiniteT,
            constant,
            vec![
                ProfileTerm::from_weight(sin2, 0, 2),
                ProfileTerm::from_weight(cos2, 2, 0),
            ],
        ))
    }

    /// General ladder dimension and machine count.
    pub fn general(params: &ClockParams) -> Result<Self> {
        let z = ladder_partition(params)?;
        let g = GeneralCoefficients::new(params, &z)?;
        let d = params.d;
        let m = d - 1;
        let e_l = params.e_l();
        let ln_norm = g.lgr + g.bracket.ln();

        if g.rho == 0.0 {
            let kind = ProfileKind::GeneralZeroTc;
            // Only the ground-state ladder population contributes.
            let ln_w = z.ln_pop(0, params.beta_c, e_l) + ln_norm;
            let constant = if params.is_zero_tc() { 0.0 } else { z.top_pop() };
            return Ok(Self::assemble(params, kind, constant, vec![ProfileTerm::new(ln_w, 0, 2 * m)]));
        }

        let ln_rho = g.rho.ln();
        let mut terms = Vec::with_capacity(d as usize);
        for n in 0..d {
            let ln_w = ln_binomial(m, n) + z.ln_pop(n, params.beta_c, e_l) + n as f64 * ln_rho + ln_norm;
            if ln_w.is_finite() {
                terms.push(ProfileTerm::new(ln_w, 2 * n, 2 * (m - n)));
            }
        }
        let top_share = (m as f64 * ln_rho + g.lgr).exp() * g.bracket;
        let constant = z.top_pop() * (1.0 - top_share);
        Ok(Self::assemble(params, ProfileKind::GeneralFiniteT, constant, terms))
    }

    /// Ladder thermalized with the hot bath and no clockwork: constant profile.
    pub fn baseline(params: &ClockParams) -> Result<Self> {
        params.validate()?;
        let p = baseline_top_population(params);
        Ok(Self::assemble(params, ProfileKind::BaselineConstant, p, Vec::new()))
    }

    /// `P_top` at phase `theta = g t`.
    pub fn at_phase(&self, theta: f64) -> f64 {
        if self.terms.is_empty() {
            return self.constant;
        }
        let (s, c) = theta.sin_cos();
        let ln_sin = s.abs().ln();
        let ln_cos = c.abs().ln();
        let mut acc = self.constant;
        for t in &self.terms {
            acc += t.eval_log(ln_cos, ln_sin);
        }
        acc
    }

    /// `P_top` at time `t` (seconds).
    pub fn evaluate(&self, t: f64) -> f64 {
        self.at_phase(self.params.g * t)
    }

    /// `Some((m, w))` when the profile is exactly `w sin^{2m}(theta)`.
    pub fn pure_sine_power(&self) -> Option<(u64, f64)> {
        match self.terms.as_slice() {
            [t] if self.constant == 0.0 && t.cos_power == 0 && t.sin_power > 0 => {
                Some((t.sin_power / 2, t.weight))
            }
            _ => None,
        }
    }

    /// Mean value of the profile over one period.
    pub fn cycle_mean(&self) -> f64 {
        // Beta-function mean of cos^{2a} sin^{2b}: C(2a,a) C(2b,b) / (4^{a+b} C(a+b,a)).
        let mut acc = self.constant;
        for t in &self.terms {
            let (a, b) = (t.cos_power / 2, t.sin_power / 2);
            let ln = ln_binomial(2 * a, a) + ln_binomial(2 * b, b)
                - ((a + b) as f64) * 4f64.ln()
                - ln_binomial(a + b, a);
            acc += t.weight * ln.exp();
        }
        acc
    }
}

/// Scalars shared by the general profile and its coefficient.
struct GeneralCoefficients {
    rho: f64,
    /// `ln((1 - rho) / (1 - rho^d))`.
    lgr: f64,
    /// `1 - (1 - a)^M`, or 1 for infinitely many machines.
    bracket: f64,
    ln_a_hot: f64,
}

impl GeneralCoefficients {
    fn new(params: &ClockParams, z: &PartitionSet) -> Result<Self> {
        // Taken directly rather than as `Z - 1`, which loses every digit
        // once the excitation drops below machine epsilon.
        let a_hot = boltzmann(params.e_h, params.beta_h);
        let b_cold = boltzmann(params.e_c, params.beta_c);
        if a_hot == b_cold {
            return Err(ClockError::DegenerateGradient(z.z_h));
        }
        if a_hot == 0.0 {
            return Err(ClockError::Domain(format!(
                "hot-bath excitation exp(-beta_H E_H) underflows (beta_H E_H = {})",
                params.beta_h * params.e_h
            )));
        }
        let d = params.d;
        let rho = b_cold / a_hot;
        let lgr = ln_inv_geometric_sum(rho, d);
        let ln_x = a_hot.ln() - z.z_h.ln() - z.z_c.ln();
        let a = ((d - 1) as f64 * ln_x - lgr).exp();
        if !(0.0..=1.0 + 1e-12).contains(&a) {
            return Err(ClockError::Internal(format!(
                "machine success probability {a} outside [0, 1]"
            )));
        }
        let bracket = match params.machines {
            Machines::Infinite => 1.0,
            Machines::Finite(m) => one_minus_pow_complement(a.min(1.0), m),
        };
        Ok(GeneralCoefficients {
            rho,
            lgr,
            bracket,
            ln_a_hot: a_hot.ln(),
        })
    }
}

/// Coefficient `f(M, d, beta_C, beta_H)` multiplying the thermal prefactors
/// `(Z_C - 1)^n (Z_H - 1)^{d-1-n}` of the general profile.
pub fn f_coefficient(params: &ClockParams) -> Result<f64> {
    let z = ladder_partition(params)?;
    let g = GeneralCoefficients::new(params, &z)?;
    Ok(g.bracket * (g.lgr - (params.d - 1) as f64 * g.ln_a_hot).exp())
}

/// `C(d-1, n) cos^{2n}(theta) sin^{2(d-1-n)}(theta)`, evaluated in log space.
pub fn wigner_amp_sq(d: u64, n: u64, theta: f64) -> Result<f64> {
    if d < 1 || n >= d {
        return Err(ClockError::Domain(format!("need 0 <= n <= d - 1, got n = {n}, d = {d}")));
    }
    let m = d - 1;
    let (s, c) = theta.sin_cos();
    let mut e = ln_binomial(m, n);
    if n > 0 {
        e += 2.0 * n as f64 * c.abs().ln();
    }
    if m > n {
        e += 2.0 * (m - n) as f64 * s.abs().ln();
    }
    Ok(e.exp())
}

pub fn p_top_two_qubit(params: &ClockParams, t: f64) -> Result<f64> {
    Ok(TopLevelProfile::two_qubit(params)?.evaluate(t))
}

#[allow(non_snake_case)]
pub fn p_top_horizontal_finite_T(params: &ClockParams, t: f64) -> Result<f64> {
    Ok(TopLevelProfile::horizontal_finite_t(params)?.evaluate(t))
}

pub fn p_top_general(params: &ClockParams, t: f64) -> Result<f64> {
    Ok(TopLevelProfile::general(params)?.evaluate(t))
}

/// Decay rate scaled by the amplitude of the leading sinusoidal term.
///
/// At zero cold temperature this is `c {1 - [1 - ((Z_H-1)/Z_H)^{d-1}]^M}`;
/// at finite temperature the weight of the `sin^{2(d-1)}` term is used.
pub fn effective_coupling(params: &ClockParams) -> Result<f64> {
    let profile = TopLevelProfile::general(params)?;
    Ok(params.c * profile.amplitude)
}

/// Top-level population of a ladder in equilibrium with the hot bath.
pub fn baseline_top_population(params: &ClockParams) -> f64 {
    let e_l = params.e_l();
    let z = ladder_partition_function(params.d, params.beta_h, e_l);
    (-params.beta_h * (params.d - 1) as f64 * e_l).exp() / z
}

/// Energy bookkeeping for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyAccount {
    pub q_in: f64,
    pub work: f64,
    pub q_out: f64,
    pub eta_th: f64,
}

pub fn energy_account(params: &ClockParams) -> EnergyAccount {
    let k = (params.d - 1) as f64;
    let e_l = params.e_l();
    EnergyAccount {
        q_in: k * params.e_h,
        work: k * e_l,
        q_out: k * params.e_c,
        eta_th: e_l / (e_l + params.e_c),
    }
}
