//! Small least-squares helpers shared by the surface and bounds modules.

/// Ordinary least squares y = slope·x + intercept.
///
/// Returns (slope, intercept, slope standard error, residual RMS).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    assert!(x.len() == y.len() && x.len() >= 2);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let stderr = (ss_res / dof / sxx).sqrt();
    let rms = (ss_res / n).sqrt();
    (slope, intercept, stderr, rms)
}

/// Least squares through the origin, y = slope·x.
pub(crate) fn origin_fit(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// Relative residual RMS of a through-origin fit.
pub(crate) fn origin_rel_rms(x: &[f64], y: &[f64], slope: f64) -> f64 {
    let n = x.len() as f64;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let pred = slope * a;
            let r = (b - pred) / pred;
            r * r
        })
        .sum();
    (ss / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, i, se, rms) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-12);
        assert!((i + 1.0).abs() < 1e-12);
        assert!(se < 1e-12);
        assert!(rms < 1e-12);
    }

    #[test]
    fn origin_fit_weighted() {
        let x = [1.0, 2.0];
        let y = [1.0, 4.0];
        // slope = (1 + 8)/(1 + 4)
        assert!((origin_fit(&x, &y) - 1.8).abs() < 1e-12);
    }
}
