//! Small descriptive statistics used by the detectors.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len().max(1) as f64).sqrt()
}

/// Moment coefficient of skewness, `m3 / m2^1.5`. Zero for constant input.
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if m2 <= f64::EPSILON * m.abs().max(1.0) {
        return 0.0;
    }
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let (mx, my) = (mean(&xs[..n]), mean(&ys[..n]));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Least-squares slope against the index `0..n`.
pub fn slope(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let tm = (n - 1) as f64 / 2.0;
    let ym = mean(xs);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in xs.iter().enumerate() {
        let dt = i as f64 - tm;
        num += dt * (y - ym);
        den += dt * dt;
    }
    num / den
}

/// Residuals after removing the least-squares line.
pub fn detrend(xs: &[f64]) -> Vec<f64> {
    let b = slope(xs);
    let tm = (xs.len().saturating_sub(1)) as f64 / 2.0;
    let ym = mean(xs);
    xs.iter()
        .enumerate()
        .map(|(i, y)| y - (ym + b * (i as f64 - tm)))
        .collect()
}

/// Sample autocorrelation at `lag` (biased estimator).
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if lag >= n {
        return 0.0;
    }
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum();
    num / denom
}

/// Rounds half away from zero after snapping away binary noise, so that
/// an exact `x.5` written in decimal always rounds up.
pub fn round_half_up(x: f64) -> f64 {
    let snapped = (x * 1e9).round() / 1e9;
    snapped.signum() * (snapped.abs() + 0.5).floor()
}

pub fn round_to(x: f64, decimals: u32) -> f64 {
    let f = 10f64.powi(decimals as i32);
    round_half_up(x * f) / f
}
