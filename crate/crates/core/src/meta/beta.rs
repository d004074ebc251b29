use statrs::function::beta::{beta_reg, ln_beta};

use super::MetaError;

pub const DEFAULT_QUAD_EPS: f64 = 1e-8;

/// Bisection budget for the adaptive integrator.
const MAX_INTERVALS: usize = 20_000;

/// Beta posterior of a success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEvidence {
    pub a: f64,
    pub b: f64,
}

impl BetaEvidence {
    pub fn new(a: f64, b: f64) -> Result<Self, MetaError> {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(Self { a, b })
        } else {
            Err(MetaError::BadEvidence { a, b })
        }
    }

    /// `Beta(prior_a + successes, prior_b + failures)`.
    pub fn from_counts(successes: u64, failures: u64, prior_a: f64, prior_b: f64) -> Result<Self, MetaError> {
        Self::new(prior_a + successes as f64, prior_b + failures as f64)
    }

    /// Uniform prior updated with the counts.
    pub fn uniform(successes: u64, failures: u64) -> Self {
        Self {
            a: 1.0 + successes as f64,
            b: 1.0 + failures as f64,
        }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn std_dev(&self) -> f64 {
        let s = self.a + self.b;
        (self.a * self.b / (s * s * (s + 1.0))).sqrt()
    }

    fn ln_pdf(&self, x: f64, ln_norm: f64) -> f64 {
        (self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p() - ln_norm
    }
}

/// `P(p_W > p_X)` for independent `p_X ~ x`, `p_W ~ w`.
///
/// Evaluates `1 − ∫₀¹ f_X(t) · I_t(a_w, b_w) dt` with adaptive Gauss–Kronrod
/// (7, 15) quadrature until the summed error estimate is below `quad_eps`.
pub fn beta_superiority(x: BetaEvidence, w: BetaEvidence, quad_eps: f64) -> Result<f64, MetaError> {
    BetaEvidence::new(x.a, x.b)?;
    BetaEvidence::new(w.a, w.b)?;
    let ln_norm = ln_beta(x.a, x.b);
    let integrand = |t: f64| -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        x.ln_pdf(t, ln_norm).exp() * beta_reg(w.a, w.b, t)
    };
    let integral = integrate(integrand, &breakpoints(&x, &w), quad_eps)?;
    Ok((1.0 - integral).clamp(0.0, 1.0))
}

/// Interval splits that put both densities' bulk on separate panels.
fn breakpoints(x: &BetaEvidence, w: &BetaEvidence) -> Vec<f64> {
    let mut points: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    for d in [x, w] {
        let (m, s) = (d.mean(), d.std_dev());
        for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            let p = m + k * s;
            if p > 0.0 && p < 1.0 {
                points.push(p);
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    points
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the even-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], eps: f64) -> Result<f64, MetaError> {
    let mut panels: Vec<Panel> = points
        .windows(2)
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();
    loop {
        let (total, error) = panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !total.is_finite() || !error.is_finite() {
            return Err(MetaError::NonFinite("beta superiority quadrature"));
        }
        if error <= eps || panels.len() >= MAX_INTERVALS {
            return Ok(total);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { lo, hi, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(total);
        }
        panels.push(gauss_kronrod(&f, lo, mid));
        panels.push(gauss_kronrod(&f, mid, hi));
    }
}
