//! Kinetic symbols T(ξ) whose zero set is a hypersurface, their gradients and
//! critical values, and the trace-ideal exponents σ(q), σ(q, r).
//!
//! Dual-space conventions: the lattice Brillouin zone is [−1/2, 1/2)^d and the
//! Fourier transform uses the e^{−2πi x·ξ} phase, so the continuum BCS symbol
//! is |1 − 4π²|ξ|²| and its zero set is the circle |ξ| = 1/(2π).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which lattice Laplacian a lattice BCS symbol is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeBase {
    /// Nearest-neighbor averaging operator, multiplier d⁻¹ Σ cos(2πξ_j).
    Standard,
    /// Molchanov–Vainberg diagonal-neighbor operator, multiplier Π cos(2πξ_j).
    Mv,
}

/// The enumerated kinetic symbols supported in v1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    /// T(ξ) = |1 − 4π²|ξ|²| on ℝ^d (Fermi level fixed at μ = 1).
    ContinuumBcs,
    /// T(ξ) = |1 − 4π²|ξ|²|^{1/s}, s > 1.
    ContinuumBcsPower(f64),
    /// Plain multiplier d⁻¹ Σ cos(2πξ_j), range [−1, 1].
    LatticeStandard,
    /// Plain multiplier Π cos(2πξ_j), range [−1, 1].
    LatticeMv,
    /// T(ξ) = |P(ξ) − μ|^{1/s} with P the chosen base multiplier.
    LatticeBcs(LatticeBase),
}

impl SymbolKind {
    pub fn is_lattice(&self) -> bool {
        matches!(
            self,
            SymbolKind::LatticeStandard | SymbolKind::LatticeMv | SymbolKind::LatticeBcs(_)
        )
    }

    /// BCS kinds take the absolute value of a shifted base symbol; plain kinds
    /// expose the raw multiplier.
    pub fn is_bcs(&self) -> bool {
        matches!(
            self,
            SymbolKind::ContinuumBcs | SymbolKind::ContinuumBcsPower(_) | SymbolKind::LatticeBcs(_)
        )
    }
}

/// A kinetic symbol with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    pub dimension: usize,
    /// Fermi level. 1 for the continuum kinds (fixed internally), unused for
    /// the plain lattice multipliers.
    pub mu: f64,
    /// 1/s for the fractional kinds, 1 otherwise.
    pub power_inv_s: f64,
}

impl SymbolSpec {
    pub fn continuum_bcs(dimension: usize) -> Result<Self> {
        Self::validate(SymbolKind::ContinuumBcs, dimension, 1.0, 1.0)
    }

    pub fn continuum_bcs_power(dimension: usize, s: f64) -> Result<Self> {
        Self::validate(SymbolKind::ContinuumBcsPower(s), dimension, 1.0, 1.0 / s)
    }

    pub fn lattice_standard(dimension: usize) -> Result<Self> {
        Self::validate(SymbolKind::LatticeStandard, dimension, 0.0, 1.0)
    }

    pub fn lattice_mv(dimension: usize) -> Result<Self> {
        Self::validate(SymbolKind::LatticeMv, dimension, 0.0, 1.0)
    }

    pub fn lattice_bcs(base: LatticeBase, dimension: usize, mu: f64) -> Result<Self> {
        Self::validate(SymbolKind::LatticeBcs(base), dimension, mu, 1.0)
    }

    /// Fractional lattice BCS symbol |P − μ|^{1/s}.
    pub fn lattice_bcs_power(base: LatticeBase, dimension: usize, mu: f64, s: f64) -> Result<Self> {
        if s <= 1.0 {
            return Err(Error::InvalidInput(format!("fractional power needs s > 1, got {s}")));
        }
        Self::validate(SymbolKind::LatticeBcs(base), dimension, mu, 1.0 / s)
    }

    fn validate(kind: SymbolKind, dimension: usize, mu: f64, power_inv_s: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if let SymbolKind::ContinuumBcsPower(s) = kind {
            if s <= 1.0 {
                return Err(Error::InvalidInput(format!("ContinuumBcsPower needs s > 1, got {s}")));
            }
        }
        let spec = SymbolSpec { kind, dimension, mu, power_inv_s };
        if let SymbolKind::LatticeBcs(_) = kind {
            if !(-1.0..=1.0).contains(&mu) {
                return Err(Error::InvalidInput(format!("mu = {mu} outside the symbol range [-1, 1]")));
            }
            let z = spec.critical_values()?;
            if z.iter().any(|&v| (v - mu).abs() < 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "mu = {mu} lies in the critical value set of the base symbol"
                )));
            }
        }
        Ok(spec)
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dimension {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, symbol has {}",
                xi.len(),
                self.dimension
            )));
        }
        if self.kind.is_lattice() {
            for &x in xi {
                if !(-0.5..0.5).contains(&x) {
                    return Err(Error::DomainViolation(format!(
                        "{x} outside the Brillouin zone [-1/2, 1/2)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The smooth base symbol P(ξ).
    ///
    /// Continuum kinds: 1 − 4π²|ξ|² (the Fermi level is baked in).
    /// Lattice kinds: the plain Laplacian multiplier.
    pub fn base_value(&self, xi: &[f64]) -> f64 {
        match self.kind {
            SymbolKind::ContinuumBcs | SymbolKind::ContinuumBcsPower(_) => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                1.0 - 4.0 * PI * PI * r2
            }
            SymbolKind::LatticeStandard | SymbolKind::LatticeBcs(LatticeBase::Standard) => {
                let d = self.dimension as f64;
                xi.iter().map(|&x| (2.0 * PI * x).cos()).sum::<f64>() / d
            }
            SymbolKind::LatticeMv | SymbolKind::LatticeBcs(LatticeBase::Mv) => {
                xi.iter().map(|&x| (2.0 * PI * x).cos()).product()
            }
        }
    }

    /// T(ξ) for BCS kinds (≥ 0), the raw multiplier P(ξ) for plain kinds.
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        self.check_domain(xi)?;
        Ok(self.eval_unchecked(xi))
    }

    pub(crate) fn eval_unchecked(&self, xi: &[f64]) -> f64 {
        let p = self.base_value(xi);
        match self.kind {
            SymbolKind::ContinuumBcs | SymbolKind::ContinuumBcsPower(_) => {
                p.abs().powf(self.power_inv_s)
            }
            SymbolKind::LatticeBcs(_) => (p - self.mu).abs().powf(self.power_inv_s),
            SymbolKind::LatticeStandard | SymbolKind::LatticeMv => p,
        }
    }

    /// Analytic gradient ∇P(ξ) of the base symbol (sign-less).
    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(xi)?;
        Ok(self.gradient_unchecked(xi))
    }

    pub(crate) fn gradient_unchecked(&self, xi: &[f64]) -> Vec<f64> {
        match self.kind {
            SymbolKind::ContinuumBcs | SymbolKind::ContinuumBcsPower(_) => {
                xi.iter().map(|&x| -8.0 * PI * PI * x).collect()
            }
            SymbolKind::LatticeStandard | SymbolKind::LatticeBcs(LatticeBase::Standard) => {
                let d = self.dimension as f64;
                xi.iter().map(|&x| -2.0 * PI * (2.0 * PI * x).sin() / d).collect()
            }
            SymbolKind::LatticeMv | SymbolKind::LatticeBcs(LatticeBase::Mv) => {
                let cosines: Vec<f64> = xi.iter().map(|&x| (2.0 * PI * x).cos()).collect();
                (0..xi.len())
                    .map(|j| {
                        let others: f64 = cosines
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| k != j)
                            .map(|(_, c)| c)
                            .product();
                        -2.0 * PI * (2.0 * PI * xi[j]).sin() * others
                    })
                    .collect()
            }
        }
    }

    /// Critical values Z of the base lattice symbol, sorted ascending.
    ///
    /// Stationary points of the separable symbols have every coordinate in
    /// {0, 1/4, 1/2}; the enumeration checks stationarity exactly using the
    /// integer values of sin/cos at those coordinates.
    pub fn critical_values(&self) -> Result<Vec<f64>> {
        let base = match self.kind {
            SymbolKind::LatticeStandard | SymbolKind::LatticeBcs(LatticeBase::Standard) => {
                LatticeBase::Standard
            }
            SymbolKind::LatticeMv | SymbolKind::LatticeBcs(LatticeBase::Mv) => LatticeBase::Mv,
            _ => {
                return Err(Error::Unsupported(
                    "critical values are enumerated for lattice symbols only".into(),
                ))
            }
        };
        let d = self.dimension;
        // (cos, sin) at coordinates 0, 1/4, 1/2 respectively.
        const CS: [(i64, i64); 3] = [(1, 0), (0, 1), (-1, 0)];
        let mut values: Vec<f64> = Vec::new();
        let mut stack = vec![0usize; d];
        'outer: loop {
            let cs: Vec<(i64, i64)> = stack.iter().map(|&i| CS[i]).collect();
            let stationary = match base {
                LatticeBase::Standard => cs.iter().all(|&(_, s)| s == 0),
                LatticeBase::Mv => (0..d).all(|j| {
                    let others: i64 = cs
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != j)
                        .map(|(_, &(c, _))| c)
                        .product();
                    cs[j].1 * others == 0
                }),
            };
            if stationary {
                let v = match base {
                    LatticeBase::Standard => {
                        cs.iter().map(|&(c, _)| c).sum::<i64>() as f64 / d as f64
                    }
                    LatticeBase::Mv => cs.iter().map(|&(c, _)| c).product::<i64>() as f64,
                };
                if !values.iter().any(|&w| w == v) {
                    values.push(v);
                }
            }
            // odometer over {0, 1/4, 1/2}^d
            for j in 0..d {
                stack[j] += 1;
                if stack[j] < 3 {
                    continue 'outer;
                }
                stack[j] = 0;
            }
            break;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(values)
    }

    /// Low-energy window bound τ: half the distance (in T-level units) from
    /// the zero set to the nearest degenerate level.
    pub fn tau(&self) -> Result<f64> {
        match self.kind {
            SymbolKind::ContinuumBcs | SymbolKind::ContinuumBcsPower(_) => Ok(0.5),
            SymbolKind::LatticeBcs(_) => {
                let z = self.critical_values()?;
                let nearest = z
                    .iter()
                    .map(|&v| (v - self.mu).abs())
                    .fold(f64::INFINITY, f64::min);
                Ok(0.5 * nearest.powf(self.power_inv_s))
            }
            _ => Err(Error::Unsupported("tau is defined for BCS kinds".into())),
        }
    }

    /// Empirical min |∇P| over the window {|P − level| ≤ band}, sampled on a
    /// uniform dual grid. Diagnostic only; the spec makes no contract about
    /// the ellipticity constants.
    pub fn gradient_floor_on_window(&self, level: f64, band: f64, samples_per_axis: usize) -> f64 {
        let d = self.dimension;
        let n = samples_per_axis;
        let mut min_grad = f64::INFINITY;
        let mut idx = vec![0usize; d];
        let mut xi = vec![0.0f64; d];
        'outer: loop {
            for (x, &i) in xi.iter_mut().zip(idx.iter()) {
                *x = -0.5 + i as f64 / n as f64;
            }
            let p = self.base_value(&xi);
            if (p - level).abs() <= band {
                let g = self.gradient_unchecked(&xi);
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                min_grad = min_grad.min(norm);
            }
            for j in 0..d {
                idx[j] += 1;
                if idx[j] < n {
                    continue 'outer;
                }
                idx[j] = 0;
            }
            break;
        }
        min_grad
    }
}

/// Exponent arithmetic for the trace-ideal estimates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentTable {
    pub d: usize,
    /// Surface-measure decay rate r.
    pub r: f64,
    /// Slack added to the numerator on the small-q branch of σ(q, r).
    pub epsilon: f64,
}

impl ExponentTable {
    pub fn new(d: usize, r: f64, epsilon: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput("exponent table needs d >= 2".into()));
        }
        if !(r > 0.0 && r < d as f64) {
            return Err(Error::InvalidInput(format!("decay rate r = {r} outside (0, d)")));
        }
        if epsilon < 0.0 {
            return Err(Error::InvalidInput("epsilon must be >= 0".into()));
        }
        Ok(ExponentTable { d, r, epsilon })
    }

    /// σ(q) = (d−1)q/(d−q) for q ∈ [1, d).
    pub fn sigma(&self, q: f64) -> Result<f64> {
        let d = self.d as f64;
        if !(1.0..d).contains(&q) {
            return Err(Error::InvalidInput(format!("sigma(q) needs q in [1, d), got q = {q}")));
        }
        Ok((d - 1.0) * q / (d - q))
    }

    /// σ(q, r), piecewise in q with the small-q branch carrying the ε slack.
    pub fn sigma_general(&self, q: f64) -> Result<f64> {
        let d = self.d as f64;
        let r = self.r;
        if !(1.0..=1.0 + r).contains(&q) {
            return Err(Error::InvalidInput(format!(
                "sigma(q, r) needs q in [1, 1 + r], got q = {q}"
            )));
        }
        if q >= d / (d - r) {
            Ok(2.0 * (d - 1.0 - r) * q / (d - q))
        } else {
            Ok((2.0 * r * q + self.epsilon) / (2.0 * r * q - d * (q - 1.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn eval_lattice_standard() {
        let s = SymbolSpec::lattice_standard(2).unwrap();
        assert!((s.eval(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.eval(&[0.25, 0.25]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eval_lattice_bcs() {
        let s = SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.5).unwrap();
        assert!((s.eval(&[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_outside_brillouin_zone() {
        let s = SymbolSpec::lattice_standard(2).unwrap();
        assert!(matches!(s.eval(&[0.6, 0.0]), Err(Error::DomainViolation(_))));
        assert!(matches!(s.eval(&[0.5, 0.0]), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn mu_in_critical_set_rejected() {
        assert!(SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.0).is_err());
        assert!(SymbolSpec::lattice_bcs(LatticeBase::Standard, 3, 1.0 / 3.0).is_err());
        assert!(SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.5).is_ok());
    }

    #[test]
    fn gradient_lattice_standard() {
        let s = SymbolSpec::lattice_standard(2).unwrap();
        let g = s.gradient(&[0.25, 0.0]).unwrap();
        assert!((g[0] + PI).abs() < 1e-12);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn gradient_continuum_bcs() {
        let s = SymbolSpec::continuum_bcs(2).unwrap();
        let rho = 0.37;
        let g = s.gradient(&[rho, 0.0]).unwrap();
        assert!((g[0] + 8.0 * PI * PI * rho).abs() < 1e-10);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let specs = [
            SymbolSpec::lattice_standard(2).unwrap(),
            SymbolSpec::lattice_mv(2).unwrap(),
            SymbolSpec::lattice_bcs(LatticeBase::Mv, 3, 0.4).unwrap(),
            SymbolSpec::continuum_bcs(2).unwrap(),
            SymbolSpec::continuum_bcs_power(2, 2.0).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for spec in &specs {
            for _ in 0..1000 {
                let xi: Vec<f64> =
                    (0..spec.dimension).map(|_| rng.gen_range(-0.45..0.45)).collect();
                let g = spec.gradient(&xi).unwrap();
                for j in 0..spec.dimension {
                    let mut xp = xi.clone();
                    let mut xm = xi.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (spec.base_value(&xp) - spec.base_value(&xm)) / (2.0 * h);
                    let scale = g[j].abs().max(1.0);
                    assert!(
                        (g[j] - fd).abs() / scale < 1e-6,
                        "{:?} axis {j}: analytic {} vs fd {}",
                        spec.kind,
                        g[j],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn critical_values_standard() {
        let d2 = SymbolSpec::lattice_standard(2).unwrap().critical_values().unwrap();
        assert_eq!(d2, vec![-1.0, 0.0, 1.0]);
        let d3 = SymbolSpec::lattice_standard(3).unwrap().critical_values().unwrap();
        assert_eq!(d3, vec![-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0]);
    }

    #[test]
    fn critical_values_mv() {
        let d2 = SymbolSpec::lattice_mv(2).unwrap().critical_values().unwrap();
        assert_eq!(d2, vec![-1.0, 0.0, 1.0]);
        let d1 = SymbolSpec::lattice_mv(1).unwrap().critical_values().unwrap();
        assert_eq!(d1, vec![-1.0, 1.0]);
    }

    #[test]
    fn critical_values_unsupported_for_continuum() {
        let s = SymbolSpec::continuum_bcs(2).unwrap();
        assert!(matches!(s.critical_values(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tau_default() {
        let s = SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.5).unwrap();
        assert!((s.tau().unwrap() - 0.25).abs() < 1e-15);
        let c = SymbolSpec::continuum_bcs(2).unwrap();
        assert!((c.tau().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sigma_values() {
        let t = ExponentTable::new(3, 1.0, 0.0).unwrap();
        assert!((t.sigma(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((t.sigma(2.0).unwrap() - 4.0).abs() < 1e-15);
        let t2 = ExponentTable::new(2, 0.5, 0.0).unwrap();
        assert!((t2.sigma(1.2).unwrap() - 1.5).abs() < 1e-12);
        assert!(t2.sigma(2.0).is_err());
        assert!(t2.sigma(0.9).is_err());
    }

    #[test]
    fn sigma_general_values() {
        let t = ExponentTable::new(3, 0.75, 0.0).unwrap();
        assert!((t.sigma_general(4.0 / 3.0).unwrap() - 2.0).abs() < 1e-12);
        let t = ExponentTable::new(3, 1.0, 0.0).unwrap();
        assert!((t.sigma_general(2.0).unwrap() - 4.0).abs() < 1e-12);
        let t = ExponentTable::new(2, 0.5, 0.0).unwrap();
        assert!((t.sigma_general(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(t.sigma_general(1.6).is_err());
    }

    #[test]
    fn sigma_general_reduces_to_sigma_at_half_codim() {
        // 50-point grid on [1, (d+1)/2], exact to 1e-12, epsilon = 0.
        for d in [2usize, 3, 4] {
            let r = (d as f64 - 1.0) / 2.0;
            let t = ExponentTable::new(d, r, 0.0).unwrap();
            for i in 0..50 {
                let q = 1.0 + i as f64 / 49.0 * ((d as f64 + 1.0) / 2.0 - 1.0);
                let a = t.sigma_general(q).unwrap();
                let b = t.sigma(q).unwrap();
                assert!((a - b).abs() < 1e-12, "d={d} q={q}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sigma_general_dominates_q() {
        for d in [2usize, 3] {
            for rf in [0.25, 0.5, 1.0] {
                let r = rf * (d as f64 - 1.0) / 2.0;
                let t = ExponentTable::new(d, r, 1e-2).unwrap();
                for i in 0..50 {
                    let q = 1.0 + i as f64 / 49.0 * r;
                    let s = t.sigma_general(q).unwrap();
                    assert!(s >= q - 1e-12, "d={d} r={r} q={q}: sigma={s}");
                }
            }
        }
    }

    #[test]
    fn lattice_range_attained() {
        for spec in [
            SymbolSpec::lattice_standard(1).unwrap(),
            SymbolSpec::lattice_standard(2).unwrap(),
            SymbolSpec::lattice_mv(2).unwrap(),
        ] {
            let n = 512usize;
            let d = spec.dimension;
            let total = n.pow(d as u32);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut xi = vec![0.0; d];
            for flat in 0..total {
                let mut rem = flat;
                for j in (0..d).rev() {
                    xi[j] = -0.5 + (rem % n) as f64 / n as f64;
                    rem /= n;
                }
                let v = spec.eval_unchecked(&xi);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            assert!((lo + 1.0).abs() < 1e-12, "{:?} min {lo}", spec.kind);
            assert!((hi - 1.0).abs() < 1e-12, "{:?} max {hi}", spec.kind);
        }
        // d = 3 on a coarser grid; the extrema sit on grid points regardless.
        let spec = SymbolSpec::lattice_mv(3).unwrap();
        let n = 128usize;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut xi = vec![0.0; 3];
        for flat in 0..n.pow(3) {
            let mut rem = flat;
            for j in (0..3).rev() {
                xi[j] = -0.5 + (rem % n) as f64 / n as f64;
                rem /= n;
            }
            let v = spec.eval_unchecked(&xi);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!((lo + 1.0).abs() < 1e-12);
        assert!((hi - 1.0).abs() < 1e-12);
    }
}
