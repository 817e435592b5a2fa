/// Parameters of the low-dimensional similarity curve `1 / (1 + a * x^(2b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub a: f64,
    pub b: f64,
}

const FIT_POINTS: usize = 300;
const MAX_ITER: usize = 500;

/// Least-squares fit of `1 / (1 + a x^(2b))` to the min_dist plateau curve
/// (1 below `min_dist`, `exp(-(x - min_dist) / spread)` above) sampled at 300
/// points on `[0, 3 * spread]`. Levenberg-Marquardt from `a = b = 1`.
pub fn fit_curve(min_dist: f64, spread: f64) -> CurveParams {
    let xs: Vec<f64> = (0..FIT_POINTS)
        .map(|i| 3.0 * spread * i as f64 / (FIT_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();

    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cost = sse(a, b);
    for _ in 0..MAX_ITER {
        // Normal equations J^T J and J^T r.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let f = 1.0 / denom;
            let r = f - y;
            let da = -p / (denom * denom);
            let db = -2.0 * a * p * x.ln() / (denom * denom);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let (m00, m11) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m00 * m11 - jab * jab;
            if det == 0.0 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m11 * ga - jab * gb) / det;
            let step_b = -(m00 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let nc = sse(na, nb);
            if nc.is_finite() && nc < cost {
                let rel = (cost - nc) / cost.max(f64::MIN_POSITIVE);
                a = na;
                b = nb;
                cost = nc;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    CurveParams { a, b }
}
