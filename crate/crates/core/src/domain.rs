//! Wire geometry: an axis-aligned rectangle [0,Lx]x[0,Ly] with conducting
//! contacts on the two horizontal edges (y=0, y=Ly) and insulating sides
//! (x=0, x=Lx), meshed by a uniform Cartesian grid with square cells.
//!
//! Boundary arclength runs counterclockwise from the corner (0,0).

use crate::error::{GlError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which of the four rectangle edges a boundary node sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Bottom, // y = 0, contact
    Right,  // x = Lx, insulator (component j = 2)
    Top,    // y = Ly, contact
    Left,   // x = 0, insulator (component j = 1)
}

impl Side {
    pub fn is_contact(self) -> bool {
        matches!(self, Side::Bottom | Side::Top)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// Contact boundary node (psi Dirichlet). Corners are classified here:
    /// psi = 0 on the closed set bar(dOmega_c), which contains all corners.
    Contact,
    /// Insulator boundary node (magnetic Neumann for psi, no current flux).
    Insulator,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub side: Side,
    pub s_start: f64,
    pub s_end: f64,
}

/// Rectangular wire with two contact and two insulator boundary components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub contact_segments: [BoundarySegment; 2],
    pub insulator_segments: [BoundarySegment; 2],
}

impl DomainSpec {
    pub fn perimeter(&self) -> f64 {
        2.0 * (self.lx + self.ly)
    }

    /// Arclength of the contact boundary.
    pub fn contact_length(&self) -> f64 {
        2.0 * self.lx
    }

    /// Arclength coordinate of the midpoint of insulator component j (1 or 2).
    pub fn insulator_midpoint(&self, j: usize) -> f64 {
        match j {
            2 => self.lx + 0.5 * self.ly,              // right side
            1 => 2.0 * self.lx + self.ly + 0.5 * self.ly, // left side
            _ => panic!("insulator component index must be 1 or 2"),
        }
    }

    /// Side and position (x or y along the side, in the side's own direction)
    /// for a boundary arclength s in [0, perimeter).
    pub fn locate(&self, s: f64) -> (Side, f64) {
        let (lx, ly) = (self.lx, self.ly);
        if s < lx {
            (Side::Bottom, s)
        } else if s < lx + ly {
            (Side::Right, s - lx)
        } else if s < 2.0 * lx + ly {
            (Side::Top, s - lx - ly)
        } else {
            (Side::Left, s - 2.0 * lx - ly)
        }
    }
}

/// Uniform node grid with square cells: h = Lx/(nx-1) = Ly/(ny-1).
///
/// Storage conventions (row-major, x fastest):
///   nodes:      idx = j*nx + i                (nx*ny)
///   x-links:    idx = j*(nx-1) + i, (i,j)->(i+1,j)   ((nx-1)*ny)
///   y-links:    idx = j*nx + i,     (i,j)->(i,j+1)   (nx*(ny-1))
///   plaquettes: idx = j*(nx-1) + i, corner (i,j)     ((nx-1)*(ny-1))
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn xlink(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }
    #[inline]
    pub fn ylink(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn plaq(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }
    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_xlinks(&self) -> usize {
        (self.nx - 1) * self.ny
    }
    pub fn n_ylinks(&self) -> usize {
        self.nx * (self.ny - 1)
    }
    pub fn n_plaq(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }
    #[inline]
    pub fn xy(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        if j == 0 || j == self.ny - 1 {
            NodeKind::Contact
        } else if i == 0 || i == self.nx - 1 {
            NodeKind::Insulator
        } else {
            NodeKind::Interior
        }
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Boundary nodes walked counterclockwise from (0,0), one entry per
    /// (node, side) incidence: each corner appears on both of its sides.
    /// Entries carry the arclength coordinate of the node.
    pub fn boundary_walk(&self) -> Vec<BoundaryPoint> {
        let (nx, ny, h) = (self.nx, self.ny, self.h);
        let lx = self.lx;
        let ly = self.ly;
        let mut out = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            out.push(BoundaryPoint { i, j: 0, side: Side::Bottom, s: i as f64 * h });
        }
        for j in 0..ny {
            out.push(BoundaryPoint { i: nx - 1, j, side: Side::Right, s: lx + j as f64 * h });
        }
        for i in (0..nx).rev() {
            out.push(BoundaryPoint {
                i,
                j: ny - 1,
                side: Side::Top,
                s: lx + ly + (nx - 1 - i) as f64 * h,
            });
        }
        for j in (0..ny).rev() {
            out.push(BoundaryPoint {
                i: 0,
                j,
                side: Side::Left,
                s: 2.0 * lx + ly + (ny - 1 - j) as f64 * h,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub i: usize,
    pub j: usize,
    pub side: Side,
    pub s: f64,
}

/// Build the standard wire geometry: contacts on y=0 and y=Ly, insulators on
/// x=0 and x=Lx, square mesh cells.
pub fn build_wire_domain(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<(DomainSpec, Grid)> {
    if !(lx > 0.0) || !(ly > 0.0) {
        return Err(GlError::Geometry(format!("degenerate sides Lx={lx}, Ly={ly}")));
    }
    if nx < 8 || ny < 8 {
        return Err(GlError::Geometry(format!("need nx, ny >= 8, got {nx}x{ny}")));
    }
    let hx = lx / (nx - 1) as f64;
    let hy = ly / (ny - 1) as f64;
    if (hx - hy).abs() > 1e-12 * hx.max(hy) {
        return Err(GlError::MeshAspect(format!(
            "cells are not square: Lx/(nx-1) = {hx} vs Ly/(ny-1) = {hy}"
        )));
    }
    let domain = DomainSpec {
        lx,
        ly,
        contact_segments: [
            BoundarySegment { side: Side::Bottom, s_start: 0.0, s_end: lx },
            BoundarySegment { side: Side::Top, s_start: lx + ly, s_end: 2.0 * lx + ly },
        ],
        insulator_segments: [
            BoundarySegment { side: Side::Left, s_start: 2.0 * lx + ly, s_end: 2.0 * (lx + ly) },
            BoundarySegment { side: Side::Right, s_start: lx, s_end: lx + ly },
        ],
    };
    let grid = Grid { nx, ny, h: hx, lx, ly };
    Ok((domain, grid))
}

/// Length of the boundary portion from s_from to s_to in the positive
/// (counterclockwise) direction.
pub fn boundary_portion_length(domain: &DomainSpec, s_from: f64, s_to: f64) -> Result<f64> {
    let p = domain.perimeter();
    for s in [s_from, s_to] {
        if !(0.0..p).contains(&s) {
            return Err(GlError::Domain(format!("arclength {s} outside [0, {p})")));
        }
    }
    Ok((s_to - s_from).rem_euclid(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurrentShape {
    /// Constant density on each contact (nonzero at the corners).
    Constant,
    /// Smooth bump (1 - cos(2 pi t)) with unit mean; vanishes at the corners.
    Bump,
}

/// Current density on the contact boundary, extended by zero on the
/// insulator sides. `amp_bottom` is the (signed) scale on y=0, `amp_top`
/// on y=Ly; the physical wire has amp_top = -amp_bottom.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurrentProfile {
    pub shape: CurrentShape,
    pub amp_bottom: f64,
    pub amp_top: f64,
}

impl CurrentProfile {
    /// Inlet density j0 at the bottom, outlet -j0 at the top.
    pub fn wire(j0: f64) -> Self {
        CurrentProfile { shape: CurrentShape::Constant, amp_bottom: j0, amp_top: -j0 }
    }

    pub fn bump(j0: f64) -> Self {
        CurrentProfile { shape: CurrentShape::Bump, amp_bottom: j0, amp_top: -j0 }
    }

    pub fn zero() -> Self {
        CurrentProfile { shape: CurrentShape::Constant, amp_bottom: 0.0, amp_top: 0.0 }
    }

    /// J at position x along a given side (0 on the insulators). The corners
    /// take the contact-side value: the extension by zero on the insulator is
    /// applied per side, so the trace integral along an insulator side is
    /// exactly zero regardless of the corner value.
    pub fn value(&self, domain: &DomainSpec, side: Side, x: f64) -> f64 {
        let amp = match side {
            Side::Bottom => self.amp_bottom,
            Side::Top => self.amp_top,
            Side::Left | Side::Right => return 0.0,
        };
        match self.shape {
            CurrentShape::Constant => amp,
            CurrentShape::Bump => amp * (1.0 - (2.0 * PI * x / domain.lx).cos()),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CurrentProfile {
            shape: self.shape,
            amp_bottom: self.amp_bottom * factor,
            amp_top: self.amp_top * factor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// (J2): the total current through the boundary vanishes.
    pub j2_pass: bool,
    pub j2_residual: f64,
    /// (J3): constant sign on each contact component.
    pub j3_pass: bool,
    pub total_bottom: f64,
    pub total_top: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.j2_pass && self.j3_pass
    }
}

/// Check assumptions (J2) and (J3) by trapezoid quadrature on the grid's
/// contact nodes. Report-style: never errors.
pub fn validate_current(
    profile: &CurrentProfile,
    domain: &DomainSpec,
    grid: &Grid,
) -> ValidationReport {
    let h = grid.h;
    let mut totals = [0.0f64; 2];
    let mut sign_ok = true;
    let mut max_abs = 0.0f64;
    for (c, side) in [(0usize, Side::Bottom), (1usize, Side::Top)] {
        let mut prev: Option<f64> = None;
        let mut pos = 0.0f64;
        let mut neg = 0.0f64;
        for i in 0..grid.nx {
            let x = i as f64 * h;
            let v = profile.value(domain, side, x);
            max_abs = max_abs.max(v.abs());
            if v > 1e-14 {
                pos += v;
            } else if v < -1e-14 {
                neg += -v;
            }
            if let Some(p) = prev {
                totals[c] += 0.5 * (p + v) * h;
            }
            prev = Some(v);
        }
        if pos > 0.0 && neg > 0.0 {
            sign_ok = false;
        }
    }
    let residual = (totals[0] + totals[1]).abs();
    let tol = 1e-10 * max_abs.max(1e-300) * domain.contact_length();
    ValidationReport {
        j2_pass: residual <= tol || max_abs == 0.0,
        j2_residual: residual,
        j3_pass: sign_ok,
        total_bottom: totals[0],
        total_top: totals[1],
    }
}
