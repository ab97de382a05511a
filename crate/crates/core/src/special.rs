//! Small special-function helpers shared by the model and statistics code.

use statrs::function::gamma::ln_gamma;

/// `ln C(n, k)`. Exact product for moderate `n`, log-gamma beyond.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if n <= 1000 {
        let mut acc = 0.0;
        for i in 0..k {
            acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
        acc
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// `C(2m, m) / 4^m`, the mean of `sin^{2m}` over a period.
pub fn central_binomial_mean(m: u64) -> f64 {
    (ln_binomial(2 * m, m) - (m as f64) * 4f64.ln()).exp()
}

/// `ln((1 - rho) / (1 - rho^d))`, i.e. minus the log of the geometric sum
/// `1 + rho + ... + rho^{d-1}`. Valid for every `rho >= 0`.
pub fn ln_inv_geometric_sum(rho: f64, d: u64) -> f64 {
    debug_assert!(rho >= 0.0 && d >= 1);
    let df = d as f64;
    if rho == 0.0 {
        return 0.0;
    }
    if rho == 1.0 {
        return -df.ln();
    }
    let lr = rho.ln();
    if lr.abs() * df < 1e-8 {
        // Second order expansion around rho = 1.
        let x = lr;
        return -(df.ln() + 0.5 * (df - 1.0) * x);
    }
    if rho < 1.0 {
        // (1 - rho) / (1 - rho^d)
        (-lr.exp_m1()).ln() - (-(df * lr).exp_m1()).ln()
    } else {
        // Divide top and bottom by rho^d.
        (lr.exp_m1()).ln() - (df * lr).exp_m1().ln()
    }
}

/// `x^p` that treats `0^0` as 1 and tolerates tiny negative round-off.
pub fn pow_nonneg(x: f64, p: u64) -> f64 {
    if p == 0 {
        1.0
    } else {
        x.max(0.0).powi(p.min(i32::MAX as u64) as i32)
    }
}

/// `1 - (1 - a)^m` computed without cancellation for small `a`.
pub fn one_minus_pow_complement(a: f64, m: u64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    if a <= 0.0 {
        return 0.0;
    }
    -((m as f64) * (-a).ln_1p()).exp_m1()
}
