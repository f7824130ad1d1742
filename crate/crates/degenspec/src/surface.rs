//! Level-set extraction S_t = {P = t} with Leray quadrature dσ = dΣ/|∇P|,
//! the Fourier transform of the surface measure with decay-rate fits, and the
//! surface operator u ↦ ∫ V̂(ξ−η) u(η) dσ(η) with its eigenvalues.
//!
//! d = 2 uses marching squares on the dual torus, d = 3 marching tetrahedra;
//! both Newton-project every emitted point onto the level set to residual
//! 1e−10 and weight it by (segment length or triangle area)/|∇P|.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit;
use crate::linalg;
use crate::symbols::{SymbolKind, SymbolSpec};
use crate::torus::{PotentialField, TorusGrid};

const NEWTON_TOL: f64 = 1e-10;
const CRITICAL_DISTANCE_FLOOR: f64 = 1e-6;

/// Quadrature points on a level set with Leray weights.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceMesh {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Level t in the T-parametrization (both sheets for BCS kinds).
    pub level: f64,
    /// Base-symbol levels of the sheets actually meshed.
    pub sheet_levels: Vec<f64>,
    pub resolution: usize,
    pub dimension: usize,
}

impl SurfaceMesh {
    /// σ_{S_t}(S_t) = Σ w_i.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean nearest-neighbor spacing; the resolvable-frequency scale of the
    /// quadrature.
    pub fn mean_spacing(&self) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let mut best = f64::INFINITY;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d2: f64 = self.points[i]
                    .iter()
                    .zip(&self.points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                best = best.min(d2);
            }
            acc += best.sqrt();
        }
        acc / n as f64
    }

    /// Largest |x| at which the quadrature of e^{2πi x·ξ} is trusted:
    /// (mean nearest-neighbor spacing)⁻¹ / 8.
    pub fn nyquist_guard(&self) -> f64 {
        1.0 / (8.0 * self.mean_spacing())
    }
}

/// (dσ)^∨(x) = Σ_i w_i e^{2πi x·ξ_i}.
pub fn surface_ft(mesh: &SurfaceMesh, x: &[f64]) -> Complex64 {
    let mut acc = Complex64::default();
    for (p, &w) in mesh.points.iter().zip(&mesh.weights) {
        let phase: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
        acc += w * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase);
    }
    acc
}

struct LevelProblem<'a> {
    spec: &'a SymbolSpec,
    level: f64,
    /// wrap Newton iterates back into the fundamental domain (lattice only)
    periodic: bool,
}

impl LevelProblem<'_> {
    fn f(&self, xi: &[f64]) -> f64 {
        self.spec.base_value(xi) - self.level
    }

    fn project(&self, xi: &mut Vec<f64>) -> Result<()> {
        for _ in 0..60 {
            let r = self.f(xi);
            if r.abs() <= NEWTON_TOL {
                if self.periodic {
                    for x in xi.iter_mut() {
                        *x -= x.round();
                    }
                }
                return Ok(());
            }
            let g = self.spec.gradient_unchecked(xi);
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2 < 1e-24 {
                break;
            }
            for (x, gv) in xi.iter_mut().zip(&g) {
                *x -= r * gv / g2;
            }
        }
        Err(Error::Decomposition(format!(
            "newton projection onto level {} did not converge",
            self.level
        )))
    }

    fn grad_norm(&self, xi: &[f64]) -> f64 {
        self.spec
            .gradient_unchecked(xi)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

fn lerp(p: &[f64], q: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect()
}

/// Marching squares over either the periodic torus or a centered square.
fn mesh_level_2d(
    spec: &SymbolSpec,
    level: f64,
    res: usize,
    domain_half_width: f64,
    periodic: bool,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let prob = LevelProblem { spec, level, periodic };
    let nodes = if periodic { res } else { res + 1 };
    let step = 2.0 * domain_half_width / res as f64;
    let coord = |i: usize| -domain_half_width + i as f64 * step;
    // sampled F on the node grid
    let mut fval = vec![0.0f64; nodes * nodes];
    for i in 0..nodes {
        for j in 0..nodes {
            fval[i * nodes + j] = prob.f(&[coord(i), coord(j)]);
        }
    }
    let sample = |i: usize, j: usize| fval[(i % nodes) * nodes + (j % nodes)];
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let cells = if periodic { res } else { res };
    for i in 0..cells {
        for j in 0..cells {
            if !periodic && (i + 1 >= nodes || j + 1 >= nodes) {
                continue;
            }
            let f00 = sample(i, j);
            let f10 = sample(i + 1, j);
            let f01 = sample(i, j + 1);
            let f11 = sample(i + 1, j + 1);
            let x0 = coord(i);
            let y0 = coord(j);
            let neg = |f: f64| f < 0.0;
            // crossing points on the four cell edges
            let mut crossings: Vec<Vec<f64>> = Vec::with_capacity(4);
            let mut edge = |fa: f64, fb: f64, pa: [f64; 2], pb: [f64; 2]| {
                if neg(fa) != neg(fb) {
                    let t = fa / (fa - fb);
                    crossings.push(lerp(&pa, &pb, t));
                }
            };
            edge(f00, f10, [x0, y0], [x0 + step, y0]);
            edge(f10, f11, [x0 + step, y0], [x0 + step, y0 + step]);
            edge(f11, f01, [x0 + step, y0 + step], [x0, y0 + step]);
            edge(f01, f00, [x0, y0 + step], [x0, y0]);
            let segments: Vec<(Vec<f64>, Vec<f64>)> = match crossings.len() {
                2 => vec![(crossings[0].clone(), crossings[1].clone())],
                4 => {
                    // saddle cell: decide pairing with the center sample
                    let fc = prob.f(&[x0 + 0.5 * step, y0 + 0.5 * step]);
                    // crossings are ordered bottom, right, top, left
                    if neg(fc) == neg(f00) {
                        vec![
                            (crossings[0].clone(), crossings[1].clone()),
                            (crossings[2].clone(), crossings[3].clone()),
                        ]
                    } else {
                        vec![
                            (crossings[0].clone(), crossings[3].clone()),
                            (crossings[1].clone(), crossings[2].clone()),
                        ]
                    }
                }
                _ => Vec::new(),
            };
            for (mut p, mut q) in segments {
                // project in the unwrapped chart so p and q stay adjacent
                let unwrapped = LevelProblem { spec, level, periodic: false };
                unwrapped.project(&mut p)?;
                unwrapped.project(&mut q)?;
                let len: f64 = p
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if len < 1e-14 {
                    continue;
                }
                let mut mid = lerp(&p, &q, 0.5);
                prob.project(&mut mid)?;
                let w = len / prob.grad_norm(&mid);
                points.push(mid);
                weights.push(w);
            }
        }
    }
    Ok((points, weights))
}

/// The six tetrahedra sharing the main diagonal v0–v6 of the unit cube,
/// corners numbered by (dx, dy, dz) bits: 0=(000) 1=(100) 2=(110) 3=(010)
/// 4=(001) 5=(101) 6=(111) 7=(011).
const CUBE_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];
const TETS: [[usize; 4]; 6] = [
    [0, 1, 2, 6],
    [0, 2, 3, 6],
    [0, 3, 7, 6],
    [0, 7, 4, 6],
    [0, 4, 5, 6],
    [0, 5, 1, 6],
];

fn mesh_level_3d(
    spec: &SymbolSpec,
    level: f64,
    res: usize,
    domain_half_width: f64,
    periodic: bool,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let prob = LevelProblem { spec, level, periodic };
    let nodes = if periodic { res } else { res + 1 };
    let step = 2.0 * domain_half_width / res as f64;
    let coord = |i: usize| -domain_half_width + i as f64 * step;
    let mut fval = vec![0.0f64; nodes * nodes * nodes];
    for i in 0..nodes {
        for j in 0..nodes {
            for k in 0..nodes {
                fval[(i * nodes + j) * nodes + k] = prob.f(&[coord(i), coord(j), coord(k)]);
            }
        }
    }
    let sample =
        |i: usize, j: usize, k: usize| fval[((i % nodes) * nodes + (j % nodes)) * nodes + k % nodes];
    let unwrapped = LevelProblem { spec, level, periodic: false };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let cells = res;
    for i in 0..cells {
        for j in 0..cells {
            for k in 0..cells {
                if !periodic && (i + 1 >= nodes || j + 1 >= nodes || k + 1 >= nodes) {
                    continue;
                }
                let corner_pos: Vec<[f64; 3]> = CUBE_CORNERS
                    .iter()
                    .map(|c| [coord(i + c[0]), coord(j + c[1]), coord(k + c[2])])
                    .collect();
                let corner_f: Vec<f64> = CUBE_CORNERS
                    .iter()
                    .map(|c| sample(i + c[0], j + c[1], k + c[2]))
                    .collect();
                for tet in &TETS {
                    let verts: Vec<&[f64; 3]> = tet.iter().map(|&v| &corner_pos[v]).collect();
                    let vals: Vec<f64> = tet.iter().map(|&v| corner_f[v]).collect();
                    let inside: Vec<usize> =
                        (0..4).filter(|&a| vals[a] < 0.0).collect();
                    let cross = |a: usize, b: usize| -> Vec<f64> {
                        let t = vals[a] / (vals[a] - vals[b]);
                        lerp(verts[a], verts[b], t)
                    };
                    let tris: Vec<[Vec<f64>; 3]> = match inside.len() {
                        1 | 3 => {
                            let odd = if inside.len() == 1 {
                                inside[0]
                            } else {
                                (0..4).find(|a| !inside.contains(a)).unwrap()
                            };
                            let others: Vec<usize> =
                                (0..4).filter(|&a| a != odd).collect();
                            vec![[
                                cross(odd, others[0]),
                                cross(odd, others[1]),
                                cross(odd, others[2]),
                            ]]
                        }
                        2 => {
                            let (a, b) = (inside[0], inside[1]);
                            let out: Vec<usize> =
                                (0..4).filter(|x| !inside.contains(x)).collect();
                            let (c, d) = (out[0], out[1]);
                            let pac = cross(a, c);
                            let pad = cross(a, d);
                            let pbc = cross(b, c);
                            let pbd = cross(b, d);
                            vec![
                                [pac.clone(), pad.clone(), pbd.clone()],
                                [pac, pbd, pbc],
                            ]
                        }
                        _ => Vec::new(),
                    };
                    for mut tri in tris {
                        for v in tri.iter_mut() {
                            unwrapped.project(v)?;
                        }
                        let e1: Vec<f64> =
                            tri[1].iter().zip(&tri[0]).map(|(a, b)| a - b).collect();
                        let e2: Vec<f64> =
                            tri[2].iter().zip(&tri[0]).map(|(a, b)| a - b).collect();
                        let cx = e1[1] * e2[2] - e1[2] * e2[1];
                        let cy = e1[2] * e2[0] - e1[0] * e2[2];
                        let cz = e1[0] * e2[1] - e1[1] * e2[0];
                        let area = 0.5 * (cx * cx + cy * cy + cz * cz).sqrt();
                        if area < 1e-20 {
                            continue;
                        }
                        let mut centroid: Vec<f64> = (0..3)
                            .map(|c| (tri[0][c] + tri[1][c] + tri[2][c]) / 3.0)
                            .collect();
                        prob.project(&mut centroid)?;
                        let w = area / prob.grad_norm(&centroid);
                        points.push(centroid);
                        weights.push(w);
                    }
                }
            }
        }
    }
    Ok((points, weights))
}

/// Base-symbol levels whose union forms S_t for this symbol.
fn sheet_levels(spec: &SymbolSpec, t: f64) -> Vec<f64> {
    if !spec.kind.is_bcs() {
        return vec![t];
    }
    // T = |P − μ_eff|^{1/s} = t ⇔ P = μ_eff ± t^s; continuum P bakes μ in.
    let shift = t.powf(1.0 / spec.power_inv_s);
    let mu_eff = match spec.kind {
        SymbolKind::LatticeBcs(_) => spec.mu,
        _ => 0.0,
    };
    if shift == 0.0 {
        vec![mu_eff]
    } else {
        vec![mu_eff + shift, mu_eff - shift]
    }
}

/// Extract S_t with Leray quadrature weights.
///
/// For BCS kinds the mesh is the disjoint union of the P = μ ± t^s sheets
/// (empty sheets skipped); plain lattice kinds mesh the single level P = t.
pub fn extract_level_set(spec: &SymbolSpec, t: f64, resolution: usize) -> Result<SurfaceMesh> {
    let d = spec.dimension;
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!("level-set extraction supports d in {{2, 3}}, got {d}")));
    }
    if resolution < 8 {
        return Err(Error::InvalidInput("resolution must be >= 8".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput("level t must be >= 0".into()));
    }
    let levels = sheet_levels(spec, t);
    let lattice = spec.kind.is_lattice();
    // reject levels grazing the critical set: Leray weights blow up there
    if lattice {
        let z = spec.critical_values()?;
        for &lv in &levels {
            if z.iter().any(|&zc| (zc - lv).abs() <= CRITICAL_DISTANCE_FLOOR) {
                return Err(Error::InvalidInput(format!(
                    "sheet level {lv} is within {CRITICAL_DISTANCE_FLOOR:e} of a critical value"
                )));
            }
        }
    } else {
        for &lv in &levels {
            if (lv - 1.0).abs() <= CRITICAL_DISTANCE_FLOOR {
                return Err(Error::InvalidInput(
                    "sheet level grazes the symbol maximum P = 1".into(),
                ));
            }
        }
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut meshed_levels = Vec::new();
    for &lv in &levels {
        let (half_width, periodic) = if lattice {
            (0.5, true)
        } else {
            if lv >= 1.0 {
                continue; // P = 1 − 4π²|ξ|² ≤ 1: empty sheet
            }
            let radius = (1.0 - lv).sqrt() / (2.0 * std::f64::consts::PI);
            (1.3 * radius + 0.05, false)
        };
        if lattice && lv.abs() >= 1.0 {
            continue; // outside the symbol range: empty sheet
        }
        let (mut p, mut w) = match d {
            2 => mesh_level_2d(spec, lv, resolution, half_width, periodic)?,
            _ => mesh_level_3d(spec, lv, resolution, half_width, periodic)?,
        };
        if !p.is_empty() {
            meshed_levels.push(lv);
        }
        points.append(&mut p);
        weights.append(&mut w);
    }
    if points.is_empty() {
        return Err(Error::EmptyLevelSet(t));
    }
    Ok(SurfaceMesh {
        points,
        weights,
        level: t,
        sheet_levels: meshed_levels,
        resolution,
        dimension: d,
    })
}

/// Fitted decay rate of |(dσ)^∨| along a direction set.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Fitted rate r̂ (negated log-log slope).
    pub r_hat: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// RMS residual of the log-log fit.
    pub residual_rms: f64,
    pub radii: Vec<f64>,
    pub nyquist_guard: f64,
    pub n_directions: usize,
}

/// Evenly spread unit vectors including the lattice axes and diagonals:
/// 16 for d = 2, the 26 sign vectors for d = 3.
pub fn default_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..16)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let mut dirs = Vec::new();
            for i in -1i32..=1 {
                for j in -1i32..=1 {
                    for k in -1i32..=1 {
                        if i == 0 && j == 0 && k == 0 {
                            continue;
                        }
                        let n = ((i * i + j * j + k * k) as f64).sqrt();
                        dirs.push(vec![i as f64 / n, j as f64 / n, k as f64 / n]);
                    }
                }
            }
            dirs
        }
        _ => panic!("directions defined for d in {{2, 3}}"),
    }
}

/// Geometric radius grid on [r_min, r_max].
pub fn geometric_radii(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let ratio = (r_max / r_min).powf(1.0 / (n as f64 - 1.0));
    (0..n).map(|k| r_min * ratio.powi(k as i32)).collect()
}

/// Least-squares decay fit of log(max over directions |(dσ)^∨(r·dir)|)
/// against log r; returns r̂ = −slope.
pub fn decay_rate(
    mesh: &SurfaceMesh,
    directions: &[Vec<f64>],
    radii: &[f64],
) -> Result<DecayFit> {
    if radii.len() < 4 {
        return Err(Error::InvalidInput("decay fit needs at least 4 radii".into()));
    }
    let guard = mesh.nyquist_guard();
    let r_max = radii.iter().fold(0.0f64, |a, &b| a.max(b));
    if r_max > guard {
        return Err(Error::InvalidInput(format!(
            "max radius {r_max:.2} exceeds the Nyquist guard {guard:.2}"
        )));
    }
    let sup_values: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            directions
                .iter()
                .map(|dir| {
                    let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
                    surface_ft(mesh, &x).norm()
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = sup_values.iter().map(|v| v.max(1e-300).ln()).collect();
    let (slope, _, stderr, rms) = fit::linear_fit(&lx, &ly);
    Ok(DecayFit {
        r_hat: -slope,
        stderr,
        residual_rms: rms,
        radii: radii.to_vec(),
        nyquist_guard: guard,
        n_directions: directions.len(),
    })
}

/// Measure-symmetrized surface operator B = D^{1/2} K D^{1/2} with
/// K_{ij} = V̂(ξ_i − ξ_j), V̂(ξ) = h^d Σ_x V(x) e^{−2πi x·ξ}, D = diag(w).
///
/// Hermitian by construction (upper triangle mirrored); cost is
/// O(|mesh|²·|supp V|), intended for localized potentials.
pub fn vs_operator(
    mesh: &SurfaceMesh,
    v: &PotentialField,
    grid: &TorusGrid,
) -> Result<Mat<Complex64>> {
    if mesh.dimension != grid.dimension {
        return Err(Error::InvalidInput("mesh and grid dimensions differ".into()));
    }
    let support = v.support();
    let positions: Vec<Vec<f64>> = support.iter().map(|&i| grid.position(i)).collect();
    let vals: Vec<f64> = support.iter().map(|&i| v.values[i]).collect();
    let cell = grid.cell_volume();
    let n = mesh.len();
    let sqrt_w: Vec<f64> = mesh.weights.iter().map(|w| w.sqrt()).collect();
    let mut b = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut k = Complex64::default();
            for (x, &vx) in positions.iter().zip(&vals) {
                let phase: f64 = x
                    .iter()
                    .zip(mesh.points[i].iter().zip(&mesh.points[j]))
                    .map(|(xc, (a, b))| xc * (a - b))
                    .sum();
                k += vx * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
            }
            let entry = cell * sqrt_w[i] * k * sqrt_w[j];
            b[(i, j)] = entry;
            b[(j, i)] = entry.conj();
        }
    }
    Ok(b)
}

/// Eigenvalues of the surface operator, sorted descending.
pub fn vs_eigenvalues(b: &Mat<Complex64>) -> Result<Vec<f64>> {
    let (mut vals, _) = linalg::eigh_complex(b)?;
    vals.reverse();
    Ok(vals)
}
