//! SF-mixing on the satellite link: maximise `sum_v a_v exp(-a_v c_v)` over
//! the simplex.

/// Principal branch of the Lambert W function for `x >= -1/e`.
pub fn lambert_w0(x: f64) -> f64 {
    let branch = -(-1f64).exp();
    if x <= branch {
        return -1.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x < -0.25 {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0
    } else if x < 3.0 {
        (1.0 + x).ln() * 0.8
    } else {
        let l = x.ln();
        l - l.ln()
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

pub fn inner_objective(alpha: &[f64], loads: &[f64]) -> f64 {
    alpha.iter().zip(loads).map(|(a, c)| a * (-a * c).exp()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub alpha: Vec<f64>,
    pub p_success: f64,
}

/// `a_v` solving `(1 - a c) exp(-a c) = mu`, capped to `[0, 1]`.
fn alpha_at(mu: f64, c: f64) -> f64 {
    if mu >= 1.0 {
        return 0.0;
    }
    let x = 1.0 - lambert_w0(mu * std::f64::consts::E);
    (x / c).clamp(0.0, 1.0)
}

/// `alpha_at` and its derivative in `mu`.
fn alpha_and_slope(mu: f64, c: f64) -> (f64, f64) {
    if mu >= 1.0 {
        return (0.0, 0.0);
    }
    let w = lambert_w0(mu * std::f64::consts::E);
    let a = (1.0 - w) / c;
    if !(0.0..=1.0).contains(&a) {
        return (a.clamp(0.0, 1.0), 0.0);
    }
    let w_over_mu = if mu.abs() < 1e-12 { std::f64::consts::E } else { w / mu };
    (a, -w_over_mu / ((1.0 + w) * c))
}

fn kkt_multiplier(loads: &[f64]) -> Option<Vec<f64>> {
    let total = |mu: f64| {
        loads.iter().fold((0.0, 0.0), |(s, d), c| {
            let (a, da) = alpha_and_slope(mu, *c);
            (s + a, d + da)
        })
    };
    let (mut lo, mut hi) = (-(-2f64).exp(), 1.0);
    if total(lo).0 < 1.0 {
        return None;
    }
    // safeguarded Newton on the decreasing map mu -> sum of alphas
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (s, ds) = total(mu);
        let f = s - 1.0;
        if f >= 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if f.abs() < 1e-14 || hi - lo < 1e-16 {
            break;
        }
        let newton = mu - f / ds;
        mu = if ds < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    let mut a: Vec<f64> = loads.iter().map(|c| alpha_at(mu, *c)).collect();
    let s: f64 = a.iter().sum();
    a.iter_mut().for_each(|x| *x /= s);
    Some(a)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn projected_gradient(loads: &[f64]) -> Vec<f64> {
    let n = loads.len();
    let mut best: Vec<f64> = vec![1.0 / n as f64; n];
    let mut best_val = inner_objective(&best, loads);
    // start from the uniform point and every vertex
    let starts = std::iter::once(best.clone()).chain((0..n).map(|i| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }));
    for start in starts {
        let mut a = start;
        let mut step = 0.5 / loads.iter().cloned().fold(1.0, f64::max);
        let mut val = inner_objective(&a, loads);
        for _ in 0..5000 {
            let grad: Vec<f64> = a.iter().zip(loads).map(|(x, c)| (1.0 - x * c) * (-x * c).exp()).collect();
            let cand = project_simplex(&a.iter().zip(&grad).map(|(x, g)| x + step * g).collect::<Vec<_>>());
            let cv = inner_objective(&cand, loads);
            if cv > val {
                a = cand;
                val = cv;
                step *= 1.2;
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        if val > best_val {
            best_val = val;
            best = a;
        }
    }
    best
}

/// Optimal mixing for `offloaded` devices at `rate`, given the airtime of
/// each allowed SF (lowest allowed first).
pub fn solve_inner_alpha(offloaded: f64, rate: f64, toa_by_sf: &[f64]) -> InnerSolution {
    let n = toa_by_sf.len();
    assert!(n > 0, "at least one SF must be allowed");
    if offloaded <= 0.0 || rate <= 0.0 {
        return InnerSolution { alpha: vec![1.0 / n as f64; n], p_success: 1.0 };
    }
    let loads: Vec<f64> = toa_by_sf.iter().map(|t| t * rate * offloaded).collect();
    if n == 1 {
        return InnerSolution { alpha: vec![1.0], p_success: (-loads[0]).exp() };
    }
    let alpha = kkt_multiplier(&loads).unwrap_or_else(|| projected_gradient(&loads));
    let p_success = inner_objective(&alpha, &loads);
    InnerSolution { alpha, p_success }
}
