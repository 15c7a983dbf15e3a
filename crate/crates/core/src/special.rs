//! Special functions: sine/cosine integrals and integer-order Bessel functions.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SICI_SWITCH: f64 = 1.0;
const SICI_EPS: f64 = 1e-15;

/// Returns `(Si(x), Ci(x))` for `x > 0`.
///
/// Power series up to `x = 1`, continued fraction for `E1(ix)` above.
pub fn sici(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "sici requires x > 0");
    if x <= SICI_SWITCH {
        sici_series(x)
    } else {
        sici_continued_fraction(x)
    }
}

pub fn si(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < 0.0 {
        -sici(-x).0
    } else {
        sici(x).0
    }
}

pub fn ci(x: f64) -> f64 {
    sici(x).1
}

fn sici_series(x: f64) -> (f64, f64) {
    let x2 = x * x;
    // Si: sum (-1)^k x^(2k+1) / ((2k+1)(2k+1)!)
    let mut term = x; // x^(2k+1)/(2k+1)!
    let mut si = x;
    // Ci: gamma + ln x + sum_{k>=1} (-1)^k x^(2k) / (2k (2k)!)
    let mut cterm = 1.0; // x^(2k)/(2k)!
    let mut ci = EULER_GAMMA + x.ln();
    for k in 1..60 {
        let kf = k as f64;
        cterm *= -x2 / ((2.0 * kf - 1.0) * (2.0 * kf));
        let c = cterm / (2.0 * kf);
        ci += c;
        term *= -x2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        let s = term / (2.0 * kf + 1.0);
        si += s;
        if s.abs() < SICI_EPS * si.abs() && c.abs() < SICI_EPS * ci.abs().max(1e-300) {
            break;
        }
    }
    (si, ci)
}

fn sici_continued_fraction(x: f64) -> (f64, f64) {
    // Lentz evaluation of E1(ix); Ci = -Re, Si = pi/2 + Im after rotation.
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..20_000 {
        let a = -((i - 1) as f64).powi(2);
        b += Complex64::new(2.0, 0.0);
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < SICI_EPS {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    (FRAC_PI_2 + h.im, -h.re)
}

/// `J_0(x) ..= J_nmax(x)` by Miller's backward recurrence with the
/// normalisation `J_0 + 2 sum J_2k = 1`. Stable for any order/argument mix.
pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = nmax.max(ax as usize);
    let mut start = top + 20 + (10.0 * (top as f64 + 1.0).sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut jp1 = 0.0_f64;
    let mut j = 1e-30_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        // j now holds J_{k-1}
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_all(n, x)[n]
}

/// Derivative `J_n'(x)`.
pub fn bessel_jp(n: usize, x: f64) -> f64 {
    let j = bessel_j_all(n + 1, x);
    if n == 0 {
        -j[1]
    } else {
        0.5 * (j[n - 1] - j[n + 1])
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-14 * mid.max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Positive zeros of `J_n` and `J_n'` found by scanning and bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselZeros {
    pub order: usize,
    pub j: Vec<f64>,
    pub jp: Vec<f64>,
}

const SCAN_STEP: f64 = 0.05;

/// First `count` positive zeros of `J_n` and of `J_n'`.
pub fn bessel_roots(n: usize, count: usize) -> BesselZeros {
    let mut j = Vec::with_capacity(count);
    let mut jp = Vec::with_capacity(count);
    // Zeros of J_n and J_n' are >= n; start a little below to be safe.
    let mut x = (n as f64 * 0.9).max(SCAN_STEP);
    let mut prev_j = bessel_j(n, x);
    let mut prev_jp = bessel_jp(n, x);
    while j.len() < count || jp.len() < count {
        let nx = x + SCAN_STEP;
        let cj = bessel_j(n, nx);
        let cjp = bessel_jp(n, nx);
        if j.len() < count && sign_change(prev_j, cj) {
            j.push(bisect(|t| bessel_j(n, t), x, nx));
        }
        if jp.len() < count && sign_change(prev_jp, cjp) {
            jp.push(bisect(|t| bessel_jp(n, t), x, nx));
        }
        prev_j = cj;
        prev_jp = cjp;
        x = nx;
    }
    BesselZeros { order: n, j, jp }
}

fn sign_change(a: f64, b: f64) -> bool {
    (a < 0.0) != (b < 0.0) && a != 0.0
}

/// All positive zeros of `J_n` and `J_n'` below `x_max`, for every order
/// `n` that has at least one. Index `n` of the result holds order `n`.
pub fn bessel_zeros_below(x_max: f64) -> Vec<BesselZeros> {
    if x_max <= 0.0 {
        return Vec::new();
    }
    // J_n and J_n' have no zeros below n (n >= 1), so orders above x_max are empty.
    let nmax = x_max.floor() as usize + 1;
    let mut zeros: Vec<BesselZeros> = (0..=nmax)
        .map(|order| BesselZeros {
            order,
            j: Vec::new(),
            jp: Vec::new(),
        })
        .collect();
    let steps = (x_max / SCAN_STEP).ceil() as usize;
    let deriv = |all: &[f64], n: usize| -> f64 {
        if n == 0 {
            -all[1]
        } else {
            0.5 * (all[n - 1] - all[n + 1])
        }
    };
    let mut x_prev = SCAN_STEP * 0.5;
    let mut prev = bessel_j_all(nmax + 1, x_prev);
    for s in 1..=steps {
        let x = (SCAN_STEP * 0.5 + s as f64 * SCAN_STEP).min(x_max);
        if x <= x_prev {
            break;
        }
        let cur = bessel_j_all(nmax + 1, x);
        for n in 0..=nmax {
            if sign_change(prev[n], cur[n]) {
                let r = bisect(|t| bessel_j(n, t), x_prev, x);
                if r <= x_max {
                    zeros[n].j.push(r);
                }
            }
            let (dp, dc) = (deriv(&prev, n), deriv(&cur, n));
            if sign_change(dp, dc) {
                let r = bisect(|t| bessel_jp(n, t), x_prev, x);
                if r <= x_max {
                    zeros[n].jp.push(r);
                }
            }
        }
        prev = cur;
        x_prev = x;
    }
    while zeros.last().is_some_and(|z| z.j.is_empty() && z.jp.is_empty()) {
        zeros.pop();
    }
    zeros
}
