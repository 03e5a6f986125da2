use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_param_index, check_params, check_sensitivity, Bound, ModelDescriptor, SensingModel};
use crate::blocks::BlockStructure;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Monostatic single-frequency imaging geometry. Lengths are in the same
/// unit as `wavelength`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmGeometry {
    /// Number of antennas `M`.
    pub antennas: usize,
    /// Pixels along each side of the square imaging region.
    pub pixels_per_side: usize,
    /// Side of the square pixel blocks that form the block structure.
    pub square_side: usize,
    /// Side length of the imaging region, centered at the origin at z = 0.
    pub extent: f64,
    /// Antennas are confined to `|x|, |y| <= aperture_half_width`.
    pub aperture_half_width: f64,
    /// Height of the antenna plane.
    pub height: f64,
    pub wavelength: f64,
}

impl Default for EmGeometry {
    fn default() -> Self {
        Self {
            antennas: 64,
            pixels_per_side: 12,
            square_side: 4,
            extent: 5.0,
            aperture_half_width: 2.5,
            height: 5.0,
            wavelength: 1.0,
        }
    }
}

/// Phase-only scattering model `A_mn = exp(-j 2k |r_m - r_n|) / sqrt(M)` with
/// the antenna coordinates `(x_m, y_m)` as design parameters, laid out as
/// `p = (x_0, y_0, x_1, y_1, ...)`.
///
/// Pixels are ordered square by square (squares row-major, pixels row-major
/// within a square), so the contiguous block structure coincides with the
/// spatial squares.
#[derive(Debug, Clone)]
pub struct EmModel {
    geometry: EmGeometry,
    wavenumber: f64,
    pixels: Vec<[f64; 3]>,
    grid_index: Vec<(usize, usize)>,
}

impl EmModel {
    pub fn new(geometry: EmGeometry) -> Result<Self> {
        let g = &geometry;
        if g.antennas == 0 || g.pixels_per_side == 0 || g.square_side == 0 {
            return Err(Error::InvalidArgument("EM geometry counts must be positive".into()));
        }
        if !g.pixels_per_side.is_multiple_of(g.square_side) {
            return Err(Error::InvalidArgument(format!(
                "{}x{} pixel lattice cannot be tiled by {}x{} squares",
                g.pixels_per_side, g.pixels_per_side, g.square_side, g.square_side
            )));
        }
        if !(g.wavelength > 0.0) || !(g.height > 0.0) || !(g.extent >= 0.0) || !(g.aperture_half_width >= 0.0) {
            return Err(Error::InvalidArgument(
                "EM wavelength and antenna height must be positive, extent and aperture non-negative".into(),
            ));
        }
        let side = g.pixels_per_side;
        let squares = side / g.square_side;
        let step = if side > 1 { g.extent / (side - 1) as f64 } else { 0.0 };
        let coord = |i: usize| -0.5 * g.extent + step * i as f64;
        let mut pixels = Vec::with_capacity(side * side);
        let mut grid_index = Vec::with_capacity(side * side);
        for sq_row in 0..squares {
            for sq_col in 0..squares {
                for in_row in 0..g.square_side {
                    for in_col in 0..g.square_side {
                        let row = sq_row * g.square_side + in_row;
                        let col = sq_col * g.square_side + in_col;
                        pixels.push([coord(col), coord(row), 0.0]);
                        grid_index.push((row, col));
                    }
                }
            }
        }
        Ok(Self { wavenumber: 2.0 * std::f64::consts::PI / g.wavelength, geometry, pixels, grid_index })
    }

    pub fn geometry(&self) -> &EmGeometry {
        &self.geometry
    }

    /// Pixel position for signal index `n`.
    pub fn pixel(&self, n: usize) -> [f64; 3] {
        self.pixels[n]
    }

    /// `(row, col)` of signal index `n` on the pixel lattice.
    pub fn grid_position(&self, n: usize) -> (usize, usize) {
        self.grid_index[n]
    }

    /// Magnitudes of `x` laid out on the pixel lattice, row by row.
    pub fn magnitude_grid(&self, x: &CVector) -> Vec<Vec<f64>> {
        let side = self.geometry.pixels_per_side;
        let mut grid = vec![vec![0.0; side]; side];
        for (n, &(r, c)) in self.grid_index.iter().enumerate() {
            grid[r][c] = x[n].norm();
        }
        grid
    }

    fn distance(&self, p: &[f64], m: usize, n: usize) -> ([f64; 3], f64) {
        let px = self.pixels[n];
        let diff = [p[2 * m] - px[0], p[2 * m + 1] - px[1], self.geometry.height - px[2]];
        (diff, (diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]).sqrt())
    }

    fn scale(&self) -> f64 {
        1.0 / (self.geometry.antennas as f64).sqrt()
    }
}

impl SensingModel for EmModel {
    fn rows(&self) -> usize {
        self.geometry.antennas
    }

    fn cols(&self) -> usize {
        self.pixels.len()
    }

    fn num_params(&self) -> usize {
        2 * self.geometry.antennas
    }

    fn bound(&self, _j: usize) -> Bound {
        Bound::symmetric(self.geometry.aperture_half_width)
    }

    fn assemble(&self, p: &[f64]) -> Result<CMatrix> {
        check_params(self, p)?;
        let scale = self.scale();
        Ok(CMatrix::from_fn(self.rows(), self.cols(), |m, n| {
            let (_, d) = self.distance(p, m, n);
            Complex64::from_polar(scale, -2.0 * self.wavenumber * d)
        }))
    }

    fn partial(&self, p: &[f64], j: usize) -> Result<CMatrix> {
        check_params(self, p)?;
        check_param_index(self, j)?;
        let (m, axis) = (j / 2, j % 2);
        let scale = self.scale();
        let mut out = CMatrix::zeros(self.rows(), self.cols());
        for n in 0..self.cols() {
            let (diff, d) = self.distance(p, m, n);
            let a = Complex64::from_polar(scale, -2.0 * self.wavenumber * d);
            out[(m, n)] = Complex64::new(0.0, -2.0 * self.wavenumber * diff[axis] / d) * a;
        }
        Ok(out)
    }

    fn pullback(&self, p: &[f64], a: &CMatrix, s: &CMatrix) -> Result<Vec<f64>> {
        check_params(self, p)?;
        check_sensitivity(self, s)?;
        let two_k = 2.0 * self.wavenumber;
        let mut g = vec![0.0; self.num_params()];
        for m in 0..self.rows() {
            let (mut gx, mut gy) = (0.0, 0.0);
            for n in 0..self.cols() {
                let (diff, d) = self.distance(p, m, n);
                // 2 Re(conj(S) (-j c) A) = 2 c Im(conj(S) A)
                let w = 2.0 * two_k * (s[(m, n)].conj() * a[(m, n)]).im / d;
                gx += w * diff[0];
                gy += w * diff[1];
            }
            g[2 * m] = gx;
            g[2 * m + 1] = gy;
        }
        Ok(g)
    }

    /// Antennas on a uniform `sqrt(M) x sqrt(M)` grid spanning the aperture.
    /// The layout is deterministic; `seed` is unused.
    fn random_init(&self, _seed: u64) -> Result<Vec<f64>> {
        let m = self.geometry.antennas;
        let side = (m as f64).sqrt().round() as usize;
        if side * side != m {
            return Err(Error::InvalidArgument(format!("{m} antennas do not form a square grid")));
        }
        let half = self.geometry.aperture_half_width;
        let coord = |i: usize| if side > 1 { -half + 2.0 * half * i as f64 / (side - 1) as f64 } else { 0.0 };
        let mut p = Vec::with_capacity(2 * m);
        for row in 0..side {
            for col in 0..side {
                p.push(coord(col));
                p.push(coord(row));
            }
        }
        Ok(p)
    }

    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor::Em(self.geometry.clone())
    }

    fn natural_blocks(&self) -> Option<BlockStructure> {
        let l = self.geometry.square_side * self.geometry.square_side;
        BlockStructure::contiguous(self.cols(), self.cols() / l).ok()
    }
}
