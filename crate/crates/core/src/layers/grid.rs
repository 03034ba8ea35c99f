use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};

use crate::error::{shape, Error, Result};
use crate::irreps::{IrrepsFeature, IrrepsLayout};
use crate::so3::fill_harmonics;

/// Point samples on the sphere with quadrature weights, plus the spherical
/// harmonics of every point up to `l_max`.
///
/// Latitudes (polar angle from `ŷ`) follow Fejér's first rule,
/// `θ_j = (2j+1)π / (2 n_lat)`, with weights exact for polynomials in `cos θ`
/// of degree below `n_lat`; longitudes are `n_lon` equally spaced angles. The
/// transform pair is exact for band-limit `l_max` whenever
/// `n_lat, n_lon ≥ 2(l_max + 1)`, which the constructor enforces.
#[derive(Debug, Clone)]
pub struct S2Grid {
    l_max: usize,
    n_lat: usize,
    n_lon: usize,
    points: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    /// `K × P` harmonics table, `K = (l_max+1)²`.
    to_grid: DMatrix<f64>,
    /// `P × K` weighted table used by the reconstruction.
    from_grid: DMatrix<f64>,
}

/// Smallest accepted number of points per axis for band-limit `l_max`.
pub fn min_resolution(l_max: usize) -> usize {
    2 * (l_max + 1)
}

fn fejer_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let theta = (2 * j + 1) as f64 * PI / (2 * n) as f64;
            let mut s = 0.0;
            for k in 1..=n / 2 {
                s += (2.0 * k as f64 * theta).cos() / (4 * k * k - 1) as f64;
            }
            2.0 / n as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}

impl S2Grid {
    pub fn new(l_max: usize, n_lat: usize, n_lon: usize) -> Result<S2Grid> {
        let need = min_resolution(l_max);
        if n_lat < need || n_lon < need {
            return Err(Error::Config(format!(
                "grid {n_lat}×{n_lon} is too coarse for L_max {l_max}; need at least {need} points per axis"
            )));
        }
        let lat_w = fejer_weights(n_lat);
        let dphi = 2.0 * PI / n_lon as f64;
        let k = (l_max + 1) * (l_max + 1);
        let p = n_lat * n_lon;
        let mut points = Vec::with_capacity(p);
        let mut weights = Vec::with_capacity(p);
        let mut to_grid = DMatrix::zeros(p, k);
        let mut row = vec![0.0; k];
        for (j, wj) in lat_w.iter().enumerate() {
            let theta = (2 * j + 1) as f64 * PI / (2 * n_lat) as f64;
            let (st, ct) = theta.sin_cos();
            for i in 0..n_lon {
                let (sp, cp) = (i as f64 * dphi).sin_cos();
                let v = Vector3::new(st * sp, ct, st * cp);
                fill_harmonics(v.x, v.y, v.z, l_max, &mut row);
                let idx = points.len();
                for (c, val) in row.iter().enumerate() {
                    to_grid[(idx, c)] = *val;
                }
                points.push(v);
                weights.push(wj * dphi);
            }
        }
        let mut from_grid = to_grid.clone();
        for l in 0..=l_max {
            let norm = (2 * l + 1) as f64 / (4.0 * PI);
            for c in l * l..(l + 1) * (l + 1) {
                for (idx, w) in weights.iter().enumerate() {
                    from_grid[(idx, c)] *= w * norm;
                }
            }
        }
        Ok(S2Grid {
            l_max,
            n_lat,
            n_lon,
            points,
            weights,
            to_grid: to_grid.transpose(),
            from_grid,
        })
    }

    /// Square `resolution × resolution` grid.
    pub fn square(l_max: usize, resolution: usize) -> Result<S2Grid> {
        S2Grid::new(l_max, resolution, resolution)
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Quadrature weights; they sum to `4π`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check(&self, l_max: usize) -> Result<()> {
        if l_max > self.l_max {
            return Err(Error::Config(format!(
                "grid built for L_max {} cannot transform L_max {l_max}",
                self.l_max
            )));
        }
        Ok(())
    }

    fn components(l_max: usize) -> usize {
        (l_max + 1) * (l_max + 1)
    }
}

/// Samples `s[c, p] = Σ_{L,m} x⁽ᴸ⁾_{m,c} Y⁽ᴸ⁾_m(p)` as a `C × P` matrix.
pub fn s2_project(x: &IrrepsFeature, grid: &S2Grid) -> Result<DMatrix<f64>> {
    grid.check(x.l_max())?;
    let k = S2Grid::components(x.l_max());
    // the flat feature is a column-major C × K matrix
    let xm = nalgebra::DMatrixView::from_slice(x.as_slice(), x.channels(), k);
    Ok(xm * grid.to_grid.rows(0, k))
}

/// Quadrature projection of `C × P` samples onto degrees `0..=l_max`.
pub fn s2_reconstruct(samples: &DMatrix<f64>, grid: &S2Grid, l_max: usize) -> Result<IrrepsFeature> {
    grid.check(l_max)?;
    if samples.ncols() != grid.len() {
        return Err(shape(format!(
            "{} sample columns for a grid of {} points",
            samples.ncols(),
            grid.len()
        )));
    }
    let k = S2Grid::components(l_max);
    let coeffs = samples * grid.from_grid.columns(0, k);
    IrrepsFeature::from_vec(
        IrrepsLayout::new(l_max, samples.nrows()),
        coeffs.as_slice().to_vec(),
    )
}

/// `G⁻¹(F(G(x)))` with `F` applied to every sample independently.
pub fn s2_activation(
    x: &IrrepsFeature,
    grid: &S2Grid,
    f: impl Fn(f64) -> f64,
) -> Result<IrrepsFeature> {
    let mut s = s2_project(x, grid)?;
    s.apply(|v| *v = f(*v));
    s2_reconstruct(&s, grid, x.l_max())
}

/// `G⁻¹(F(G(x)))` where `F` maps the `C × P` sample matrix to a
/// `C' × P` matrix, mixing channels at each point.
pub fn s2_activation_map(
    x: &IrrepsFeature,
    grid: &S2Grid,
    f: impl FnOnce(DMatrix<f64>) -> Result<DMatrix<f64>>,
) -> Result<IrrepsFeature> {
    let s = s2_project(x, grid)?;
    let out = f(s)?;
    s2_reconstruct(&out, grid, x.l_max())
}
