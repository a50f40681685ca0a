use crate::domain::{Grid2D, SlownessSquaredModel};
use crate::error::Result;

/// Which edges carry a free surface (pressure-release) instead of an
/// absorbing sponge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FreeSurface {
    pub top: bool,
    pub bottom: bool,
    pub left: bool,
    pub right: bool,
}

/// Sponge-layer configuration. The taper is multiplicative per time step,
/// w(d) = exp(-(strength * d / width)^2) at depth d cells into the layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingConfig {
    pub layer_width: usize,
    pub strength: f64,
    pub free_surface: FreeSurface,
}

impl Default for AbsorbingConfig {
    fn default() -> Self {
        AbsorbingConfig {
            layer_width: 40,
            strength: 0.35,
            free_surface: FreeSurface::default(),
        }
    }
}

/// Physical grid extended by sponge layers plus a one-cell hard (zero) rim.
/// All per-cell coefficient fields live on the padded grid as flat row-major
/// vectors indexed `i * pnz + j`.
pub(crate) struct PaddedDomain {
    pub pnx: usize,
    pub pnz: usize,
    pub off_x: usize,
    pub off_z: usize,
    pub nx: usize,
    pub nz: usize,
    pub inv_dx2: f64,
    pub inv_dz2: f64,
    /// sqrt of the taper weight (1 in the physical region)
    pub wh: Vec<f64>,
    /// full taper weight, wh^2
    pub w: Vec<f64>,
    /// dt^2 / m, model edge-replicated into the sponge
    pub d: Vec<f64>,
    pub cell_area: f64,
}

impl PaddedDomain {
    pub fn new(model: &SlownessSquaredModel, absorb: &AbsorbingConfig, dt: f64) -> Result<Self> {
        let grid: &Grid2D = model.grid();
        let lw = absorb.layer_width;
        let fs = absorb.free_surface;
        let (lw_l, lw_r) = (if fs.left { 0 } else { lw }, if fs.right { 0 } else { lw });
        let (lw_t, lw_b) = (if fs.top { 0 } else { lw }, if fs.bottom { 0 } else { lw });
        let off_x = lw_l + 1;
        let off_z = lw_t + 1;
        let pnx = grid.nx + lw_l + lw_r + 2;
        let pnz = grid.nz + lw_t + lw_b + 2;

        let taper = |depth: usize, width: usize| -> f64 {
            if width == 0 || depth == 0 {
                1.0
            } else {
                let x = absorb.strength * depth as f64 / width as f64;
                (-x * x).exp()
            }
        };

        let mut wh = vec![0.0; pnx * pnz];
        let mut w = vec![0.0; pnx * pnz];
        let mut d = vec![0.0; pnx * pnz];
        let m = model.field();
        let dt2 = dt * dt;
        for pi in 0..pnx {
            for pj in 0..pnz {
                let idx = pi * pnz + pj;
                // signed distance to the physical region in each axis
                let depth_x = if pi < off_x {
                    off_x - pi
                } else if pi >= off_x + grid.nx {
                    pi + 1 - (off_x + grid.nx)
                } else {
                    0
                };
                let depth_z = if pj < off_z {
                    off_z - pj
                } else if pj >= off_z + grid.nz {
                    pj + 1 - (off_z + grid.nz)
                } else {
                    0
                };
                let wx = taper(
                    depth_x.min(lw_l.max(lw_r)),
                    if pi < off_x { lw_l } else { lw_r },
                );
                let wz = taper(
                    depth_z.min(lw_t.max(lw_b)),
                    if pj < off_z { lw_t } else { lw_b },
                );
                let weight = wx * wz;
                w[idx] = weight;
                wh[idx] = weight.sqrt();
                let mi = (pi as isize - off_x as isize).clamp(0, grid.nx as isize - 1) as usize;
                let mj = (pj as isize - off_z as isize).clamp(0, grid.nz as isize - 1) as usize;
                d[idx] = dt2 / m[(mi, mj)];
            }
        }

        Ok(PaddedDomain {
            pnx,
            pnz,
            off_x,
            off_z,
            nx: grid.nx,
            nz: grid.nz,
            inv_dx2: 1.0 / (grid.dx * grid.dx),
            inv_dz2: 1.0 / (grid.dz * grid.dz),
            wh,
            w,
            d,
            cell_area: grid.cell_area(),
        })
    }

    #[inline]
    pub fn pad_index(&self, i: usize, j: usize) -> usize {
        (i + self.off_x) * self.pnz + (j + self.off_z)
    }

    /// Padded flat indices of the one-cell halo ring just outside the
    /// physical region, in a fixed scan order.
    pub fn halo_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * (self.nx + 2) + 2 * self.nz);
        let (ox, oz) = (self.off_x as isize, self.off_z as isize);
        let at = |pi: isize, pj: isize| (pi as usize) * self.pnz + pj as usize;
        for pi in (ox - 1)..=(ox + self.nx as isize) {
            out.push(at(pi, oz - 1));
            out.push(at(pi, oz + self.nz as isize));
        }
        for pj in oz..(oz + self.nz as isize) {
            out.push(at(ox - 1, pj));
            out.push(at(ox + self.nx as isize, pj));
        }
        out
    }
}
