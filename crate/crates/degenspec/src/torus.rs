//! Finite-torus discretization of X^d and DFT-based application/assembly of
//! H = T(−i∇) − V.
//!
//! Storage is row-major with the last axis fastest. Dual frequencies follow
//! the DFT index convention ξ_k = k/(Lh) with k ∈ {−L/2, …, L/2 − 1} stored
//! as {0, 1, …, L/2 − 1, −L/2, …, −1} per axis.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::symbols::SymbolSpec;

/// Default cap on dense N×N assembly.
pub const DEFAULT_DENSE_CAP: usize = 8192;

/// A uniform grid on the torus (ℤ/Lℤ)^d with spacing h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub spacing: f64,
}

impl TorusGrid {
    /// Lattice mode: h = 1, Brillouin zone [−1/2, 1/2)^d.
    pub fn lattice(dimension: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(dimension, points_per_axis, 1.0)
    }

    /// Continuum-approximation mode: torus of side ℓ = Lh, truncated
    /// frequencies up to 1/(2h).
    pub fn continuum(dimension: usize, points_per_axis: usize, spacing: f64) -> Result<Self> {
        if spacing <= 0.0 {
            return Err(Error::InvalidInput("spacing must be positive".into()));
        }
        Self::new(dimension, points_per_axis, spacing)
    }

    fn new(dimension: usize, points_per_axis: usize, spacing: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        // L = 1 is allowed as the degenerate single-point grid
        if points_per_axis == 0 || (points_per_axis > 1 && points_per_axis % 2 != 0) {
            return Err(Error::InvalidInput(format!(
                "points_per_axis must be even (or 1), got {points_per_axis}"
            )));
        }
        let n = (points_per_axis as u128).pow(dimension as u32);
        if n > usize::MAX as u128 {
            return Err(Error::InvalidInput("grid too large".into()));
        }
        Ok(TorusGrid { dimension, points_per_axis, spacing })
    }

    /// Total number of grid points N = L^d.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed DFT index for a storage index along one axis.
    fn signed_index(&self, i: usize) -> i64 {
        let l = self.points_per_axis;
        if i < l / 2 {
            i as i64
        } else {
            i as i64 - l as i64
        }
    }

    /// Decompose a flat index into per-axis indices (last axis fastest).
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let l = self.points_per_axis;
        let mut m = vec![0usize; self.dimension];
        let mut rem = flat;
        for j in (0..self.dimension).rev() {
            m[j] = rem % l;
            rem /= l;
        }
        m
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let l = self.points_per_axis;
        multi.iter().fold(0usize, |acc, &i| acc * l + (i % l))
    }

    /// Dual point ξ_k for a flat storage index.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let lh = self.points_per_axis as f64 * self.spacing;
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.signed_index(i) as f64 / lh)
            .collect()
    }

    /// All N dual points in canonical storage order.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.frequency(k)).collect()
    }

    /// Position of a grid site, using the centered representative
    /// n ∈ {−L/2, …, L/2 − 1} scaled by h.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.signed_index(i) as f64 * self.spacing)
            .collect()
    }

    /// Toroidal (minimum-image) distance between two sites in physical units.
    pub fn toroidal_distance(&self, a: &[usize], b: &[usize]) -> f64 {
        let l = self.points_per_axis as i64;
        let d2: f64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let mut d = (x as i64 - y as i64).rem_euclid(l);
                if d > l / 2 {
                    d -= l;
                }
                let dph = d as f64 * self.spacing;
                dph * dph
            })
            .sum();
        d2.sqrt()
    }

    /// h^d, the quadrature weight of one site.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    /// Center site (L/2 along each axis).
    pub fn center_site(&self) -> Vec<usize> {
        vec![self.points_per_axis / 2; self.dimension]
    }
}

/// Generator descriptor for a potential field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    Gaussian { amplitude: f64, width: f64, center: Vec<usize> },
    /// Compact plateau: amplitude inside a toroidal ball, zero outside.
    Plateau { amplitude: f64, radius: f64, center: Vec<usize> },
    Delta { amplitude: f64, site: Vec<usize> },
    /// Sparse nonnegative field: each site is filled with probability `fill`
    /// and a uniform value in (0, amplitude].
    SeededRandom { amplitude: f64, fill: f64, seed: u64 },
    Csv { path: String },
    Custom { label: String },
}

/// A real potential sampled on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialField {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub kind: PotentialKind,
    /// Coupling applied on top of the generator (V ← kappa·V₀).
    pub kappa: f64,
}

impl PotentialField {
    pub fn zero(grid: &TorusGrid) -> Self {
        PotentialField { values: vec![0.0; grid.len()], kind: PotentialKind::Zero, kappa: 1.0 }
    }

    pub fn from_values(values: Vec<f64>, grid: &TorusGrid, label: &str) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "potential has {} values, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(PotentialField {
            values,
            kind: PotentialKind::Custom { label: label.to_string() },
            kappa: 1.0,
        })
    }

    pub fn gaussian(grid: &TorusGrid, amplitude: f64, width: f64, center: &[usize]) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let d = grid.toroidal_distance(&grid.multi_index(i), center);
                amplitude * (-d * d / (2.0 * width * width)).exp()
            })
            .collect();
        PotentialField {
            values,
            kind: PotentialKind::Gaussian { amplitude, width, center: center.to_vec() },
            kappa: 1.0,
        }
    }

    pub fn plateau(grid: &TorusGrid, amplitude: f64, radius: f64, center: &[usize]) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let d = grid.toroidal_distance(&grid.multi_index(i), center);
                if d <= radius {
                    amplitude
                } else {
                    0.0
                }
            })
            .collect();
        PotentialField {
            values,
            kind: PotentialKind::Plateau { amplitude, radius, center: center.to_vec() },
            kappa: 1.0,
        }
    }

    pub fn delta(grid: &TorusGrid, amplitude: f64, site: &[usize]) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[grid.flat_index(site)] = amplitude;
        PotentialField {
            values,
            kind: PotentialKind::Delta { amplitude, site: site.to_vec() },
            kappa: 1.0,
        }
    }

    /// Nonnegative sparse random field, reproducible from the seed.
    pub fn seeded_random(grid: &TorusGrid, amplitude: f64, fill: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|_| {
                if rng.gen::<f64>() < fill {
                    amplitude * rng.gen::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        PotentialField { values, kind: PotentialKind::SeededRandom { amplitude, fill, seed }, kappa: 1.0 }
    }

    /// Parse "i0,i1,…,value" rows; unlisted sites are zero.
    pub fn from_csv_str(text: &str, grid: &TorusGrid, path: &str) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != grid.dimension + 1 {
                return Err(Error::InvalidInput(format!(
                    "csv line {}: expected {} fields, got {}",
                    lineno + 1,
                    grid.dimension + 1,
                    fields.len()
                )));
            }
            let mut idx = Vec::with_capacity(grid.dimension);
            for f in &fields[..grid.dimension] {
                let i: i64 = f
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("csv line {}: bad index {f}", lineno + 1)))?;
                idx.push(i.rem_euclid(grid.points_per_axis as i64) as usize);
            }
            let v: f64 = fields[grid.dimension]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("csv line {}: bad value", lineno + 1)))?;
            values[grid.flat_index(&idx)] = v;
        }
        Ok(PotentialField { values, kind: PotentialKind::Csv { path: path.to_string() }, kappa: 1.0 })
    }

    /// V ← kappa·V.
    pub fn scaled(&self, kappa: f64) -> PotentialField {
        PotentialField {
            values: self.values.iter().map(|v| kappa * v).collect(),
            kind: self.kind.clone(),
            kappa: self.kappa * kappa,
        }
    }

    /// V₊ pointwise.
    pub fn positive_part(&self) -> PotentialField {
        PotentialField {
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
            kind: self.kind.clone(),
            kappa: self.kappa,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// ℓ^q norm with the grid's h^d weight: (h^d Σ |V|^q)^{1/q}.
    pub fn lq_norm(&self, q: f64, grid: &TorusGrid) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(q)).sum();
        (grid.cell_volume() * s).powf(1.0 / q)
    }

    /// ℓ^q norm of the positive part.
    pub fn lq_norm_pos(&self, q: f64, grid: &TorusGrid) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.max(0.0).powf(q)).sum();
        (grid.cell_volume() * s).powf(1.0 / q)
    }

    /// h^d Σ f(V(x)); the integrand receives the raw value.
    pub fn integrate(&self, grid: &TorusGrid, f: impl Fn(f64) -> f64) -> f64 {
        grid.cell_volume() * self.values.iter().map(|&v| f(v)).sum::<f64>()
    }

    /// Flat indices of the (exactly) nonzero sites.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// d-dimensional FFT over the flat row-major layout.
pub(crate) struct FftNd {
    dimension: usize,
    l: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub(crate) fn new(dimension: usize, l: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dimension,
            l,
            forward: planner.plan_fft_forward(l),
            inverse: planner.plan_fft_inverse(l),
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let l = self.l;
        let n = data.len();
        let mut line = vec![Complex64::default(); l];
        for axis in 0..self.dimension {
            // stride of this axis in the row-major layout
            let stride = l.pow((self.dimension - 1 - axis) as u32);
            let block = stride * l;
            for base in (0..n).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + t * stride];
                    }
                    fft.process(&mut line);
                    for (t, &v) in line.iter().enumerate() {
                        data[start + t * stride] = v;
                    }
                }
            }
        }
    }

    /// û(k) = Σ_n u(n) e^{−2πi k·n/L}.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// u(n) = N⁻¹ Σ_k û(k) e^{2πi k·n/L}.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Matrix-free H = T(−i∇) − V with cached plans and multiplier table.
pub struct HamiltonianOp {
    grid: TorusGrid,
    multiplier: Vec<f64>,
    v: Vec<f64>,
    fft: FftNd,
}

impl HamiltonianOp {
    pub fn new(spec: &SymbolSpec, v: &PotentialField, grid: &TorusGrid) -> Result<Self> {
        if spec.dimension != grid.dimension {
            return Err(Error::InvalidInput("symbol and grid dimensions differ".into()));
        }
        if spec.kind.is_lattice() && grid.spacing != 1.0 {
            return Err(Error::InvalidInput(
                "lattice symbols require lattice grids (h = 1)".into(),
            ));
        }
        if v.values.len() != grid.len() {
            return Err(Error::InvalidInput("potential length mismatch".into()));
        }
        let multiplier = (0..grid.len())
            .map(|k| spec.eval_unchecked(&grid.frequency(k)))
            .collect();
        Ok(HamiltonianOp {
            grid: *grid,
            multiplier,
            v: v.values.clone(),
            fft: FftNd::new(grid.dimension, grid.points_per_axis),
        })
    }

    /// The multiplier values T(ξ_k) in storage order.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    /// Smallest strictly positive multiplier value (finite-size gap estimate).
    pub fn min_positive_multiplier(&self) -> f64 {
        self.multiplier
            .iter()
            .copied()
            .filter(|&t| t > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest multiplier value on the frequency-cutoff shell
    /// (any |k_j| = L/2); the aliasing headroom for continuum grids.
    pub fn cutoff_floor(&self) -> f64 {
        let l = self.grid.points_per_axis;
        (0..self.grid.len())
            .filter(|&k| self.grid.multi_index(k).iter().any(|&i| i == l / 2))
            .map(|k| self.multiplier[k])
            .fold(f64::INFINITY, f64::min)
    }

    /// (T(−i∇) − V) u via forward/inverse DFT.
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if u.len() != self.grid.len() {
            return Err(Error::InvalidInput(format!(
                "vector length {} does not match grid size {}",
                u.len(),
                self.grid.len()
            )));
        }
        let mut buf = u.to_vec();
        self.fft.forward(&mut buf);
        for (b, &t) in buf.iter_mut().zip(&self.multiplier) {
            *b *= t;
        }
        self.fft.inverse(&mut buf);
        for (i, b) in buf.iter_mut().enumerate() {
            *b -= self.v[i] * u[i];
        }
        Ok(buf)
    }

    /// Real-space convolution kernel of the multiplier. Real for the
    /// even symbols supported here; asserted at 1e−12.
    pub(crate) fn kernel(&self) -> Vec<f64> {
        let mut buf: Vec<Complex64> =
            self.multiplier.iter().map(|&t| Complex64::new(t, 0.0)).collect();
        self.fft.inverse(&mut buf);
        let scale = self.multiplier.iter().fold(1.0f64, |a, &t| a.max(t.abs()));
        debug_assert!(
            buf.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max) <= 1e-12 * scale.max(1.0),
            "multiplier kernel has nonreal entries"
        );
        buf.into_iter().map(|z| z.re).collect()
    }
}

/// One-shot convenience wrapper around [`HamiltonianOp::apply`].
pub fn apply_hamiltonian(
    spec: &SymbolSpec,
    v: &PotentialField,
    grid: &TorusGrid,
    u: &[Complex64],
) -> Result<Vec<Complex64>> {
    HamiltonianOp::new(spec, v, grid)?.apply(u)
}

/// Dense real-symmetric N×N assembly of H.
pub fn assemble_dense(
    spec: &SymbolSpec,
    v: &PotentialField,
    grid: &TorusGrid,
) -> Result<faer::Mat<f64>> {
    assemble_dense_with_cap(spec, v, grid, DEFAULT_DENSE_CAP)
}

pub fn assemble_dense_with_cap(
    spec: &SymbolSpec,
    v: &PotentialField,
    grid: &TorusGrid,
    cap: usize,
) -> Result<faer::Mat<f64>> {
    let n = grid.len();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let op = HamiltonianOp::new(spec, v, grid)?;
    let kernel = op.kernel();
    let l = grid.points_per_axis;
    let multis: Vec<Vec<usize>> = (0..n).map(|i| grid.multi_index(i)).collect();
    let mut m = faer::Mat::<f64>::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            let mut flat = 0usize;
            for (a, b) in multis[row].iter().zip(&multis[col]) {
                flat = flat * l + (a + l - b) % l;
            }
            m[(row, col)] = kernel[flat];
        }
        m[(col, col)] -= v.values[col];
    }
    // symmetrize roundoff so downstream consumers see an exactly
    // self-adjoint matrix (defect is ~1e-17 from the FFT)
    debug_assert!(linalg::symmetry_defect(&m) <= 1e-12);
    Ok(m)
}

/// Relative change of the lowest `count` eigenvalues of H under h → h/2 at
/// fixed box size Lh (continuum refinement diagnostic).
pub fn refinement_check(
    spec: &SymbolSpec,
    v_builder: impl Fn(&TorusGrid) -> PotentialField,
    grid: &TorusGrid,
    count: usize,
) -> Result<Vec<f64>> {
    let fine = TorusGrid::continuum(grid.dimension, grid.points_per_axis * 2, grid.spacing / 2.0)?;
    let coarse_m = assemble_dense(spec, &v_builder(grid), grid)?;
    let fine_m = assemble_dense(spec, &v_builder(&fine), &fine)?;
    let ec = linalg::eigvalsh_real(&coarse_m)?;
    let ef = linalg::eigvalsh_real(&fine_m)?;
    Ok((0..count.min(ec.len()))
        .map(|j| {
            let scale = ec[j].abs().max(ef[j].abs()).max(1e-12);
            (ec[j] - ef[j]).abs() / scale
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::LatticeBase;
    use std::f64::consts::PI;

    #[test]
    fn frequency_storage_order() {
        let g = TorusGrid::lattice(1, 4).unwrap();
        let f: Vec<f64> = (0..4).map(|k| g.frequency(k)[0]).collect();
        assert_eq!(f, vec![0.0, 0.25, -0.5, -0.25]);

        let g = TorusGrid::lattice(2, 2).unwrap();
        let fs = g.frequencies();
        assert_eq!(fs.len(), 4);
        for f in fs {
            for x in f {
                assert!(x == 0.0 || x == -0.5);
            }
        }

        let g = TorusGrid::continuum(1, 4, 0.5).unwrap();
        let f: Vec<f64> = (0..4).map(|k| g.frequency(k)[0]).collect();
        assert_eq!(f, vec![0.0, 0.5, -1.0, -0.5]);
    }

    #[test]
    fn odd_l_rejected() {
        assert!(TorusGrid::lattice(2, 15).is_err());
    }

    #[test]
    fn fft_roundtrip_identity() {
        let g = TorusGrid::lattice(2, 8).unwrap();
        let fft = FftNd::new(2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<Complex64> =
            (0..g.len()).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let mut buf = u.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        let scale: f64 = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in buf.iter().zip(&u) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn plane_wave_is_multiplier_eigenvector() {
        let spec = SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.5).unwrap();
        let grid = TorusGrid::lattice(2, 8).unwrap();
        let v = PotentialField::zero(&grid);
        let op = HamiltonianOp::new(&spec, &v, &grid).unwrap();
        let l = grid.points_per_axis as f64;
        for kflat in [0usize, 3, 17, 42] {
            let kidx = grid.multi_index(kflat);
            let u: Vec<Complex64> = (0..grid.len())
                .map(|n| {
                    let nidx = grid.multi_index(n);
                    let phase: f64 = kidx
                        .iter()
                        .zip(&nidx)
                        .map(|(&k, &n)| 2.0 * PI * (k * n) as f64 / l)
                        .sum();
                    Complex64::from_polar(1.0, phase)
                })
                .collect();
            let hu = op.apply(&u).unwrap();
            let t = spec.eval(&grid.frequency(kflat)).unwrap();
            for (a, b) in hu.iter().zip(&u) {
                assert!((a - t * b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn delta_maps_to_neighbor_average() {
        // plain standard multiplier: H δ_n = (2d)⁻¹ Σ_{‖m−n‖=1} δ_m
        let spec = SymbolSpec::lattice_standard(2).unwrap();
        let grid = TorusGrid::lattice(2, 8).unwrap();
        let v = PotentialField::zero(&grid);
        let op = HamiltonianOp::new(&spec, &v, &grid).unwrap();
        let site = [3usize, 4usize];
        let mut u = vec![Complex64::default(); grid.len()];
        u[grid.flat_index(&site)] = Complex64::new(1.0, 0.0);
        let hu = op.apply(&u).unwrap();
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            let dist: i64 = m
                .iter()
                .zip(&site)
                .map(|(&a, &b)| {
                    let l = grid.points_per_axis as i64;
                    let d = (a as i64 - b as i64).rem_euclid(l);
                    d.min(l - d)
                })
                .sum();
            let expected = if dist == 1 { 0.25 } else { 0.0 };
            assert!(
                (hu[i].re - expected).abs() < 1e-12 && hu[i].im.abs() < 1e-12,
                "site {m:?}: {:?}",
                hu[i]
            );
        }
    }

    #[test]
    fn quadratic_form_is_real_and_hermitian() {
        let spec = SymbolSpec::lattice_bcs(LatticeBase::Mv, 2, 0.3).unwrap();
        let grid = TorusGrid::lattice(2, 8).unwrap();
        let v = PotentialField::seeded_random(&grid, 1.0, 0.5, 11);
        let op = HamiltonianOp::new(&spec, &v, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let u: Vec<Complex64> = (0..grid.len())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let w: Vec<Complex64> = (0..grid.len())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let hu = op.apply(&u).unwrap();
            let hw = op.apply(&w).unwrap();
            let form: Complex64 = u.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
            assert!(form.im.abs() < 1e-10);
            let uhw: Complex64 = u.iter().zip(&hw).map(|(a, b)| a.conj() * b).sum();
            let whu: Complex64 = w.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
            assert!((uhw - whu.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn assemble_single_point() {
        let spec = SymbolSpec::lattice_bcs(LatticeBase::Standard, 1, 0.5).unwrap();
        let grid = TorusGrid::lattice(1, 2).unwrap();
        let mut v = PotentialField::zero(&grid);
        v.values[0] = 3.0;
        let m = assemble_dense(&spec, &v, &grid).unwrap();
        // 2-point grid: frequencies 0 and −1/2, T = {0.5, 1.5}; kernel mean = 1.0
        assert!((m[(0, 0)] - (1.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn dense_matches_matrix_free() {
        let spec = SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.5).unwrap();
        let grid = TorusGrid::lattice(2, 8).unwrap();
        let v = PotentialField::gaussian(&grid, 1.0, 1.5, &grid.center_site());
        let m = assemble_dense(&spec, &v, &grid).unwrap();
        assert!(linalg::symmetry_defect(&m) <= 1e-12);
        let op = HamiltonianOp::new(&spec, &v, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u: Vec<Complex64> = (0..grid.len())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let hu = op.apply(&u).unwrap();
            let scale: f64 = hu.iter().map(|z| z.norm()).fold(1e-30, f64::max);
            for row in 0..grid.len() {
                let mut acc = Complex64::default();
                for col in 0..grid.len() {
                    acc += m[(row, col)] * u[col];
                }
                assert!((acc - hu[row]).norm() / scale < 1e-10);
            }
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let spec = SymbolSpec::lattice_standard(2).unwrap();
        let grid = TorusGrid::lattice(2, 8).unwrap();
        let v = PotentialField::zero(&grid);
        assert!(matches!(
            assemble_dense_with_cap(&spec, &v, &grid, 10),
            Err(Error::DenseCapExceeded { .. })
        ));
    }

    #[test]
    fn csv_roundtrip() {
        let grid = TorusGrid::lattice(2, 4).unwrap();
        let text = "0,0,1.5\n1,2,-0.25\n# comment\n3,3,2.0\n";
        let v = PotentialField::from_csv_str(text, &grid, "mem").unwrap();
        assert_eq!(v.values[grid.flat_index(&[0, 0])], 1.5);
        assert_eq!(v.values[grid.flat_index(&[1, 2])], -0.25);
        assert_eq!(v.values[grid.flat_index(&[3, 3])], 2.0);
        assert_eq!(v.values.iter().filter(|&&x| x != 0.0).count(), 3);
    }

    #[test]
    fn lq_norm_weights_by_cell_volume() {
        let grid = TorusGrid::continuum(1, 4, 0.5).unwrap();
        let v = PotentialField::from_values(vec![2.0, 0.0, 0.0, 0.0], &grid, "t").unwrap();
        assert!((v.lq_norm(2.0, &grid) - (0.5f64 * 4.0).sqrt()).abs() < 1e-15);
    }
}
