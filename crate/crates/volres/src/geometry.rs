//! Cell decompositions of the reference domain and the voxel file format.
//!
//! All geometry is kept in reference coordinates; the contracted inclusion is
//! never meshed on its own, scaling is applied algebraically (see
//! [`DiscreteDomain::scaled`]).

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// One axis-aligned cell of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Cell center in reference coordinates.
    pub center: [f64; 3],
    /// Side lengths of the cell box (equal for cubic cells).
    pub sides: [f64; 3],
    /// Cell volume, equal to the product of the sides.
    pub volume: f64,
    /// Radius of the ball with the same volume.
    pub eq_radius: f64,
}

impl Cell {
    fn new(center: [f64; 3], sides: [f64; 3]) -> Self {
        let volume = sides[0] * sides[1] * sides[2];
        Cell {
            center,
            sides,
            volume,
            eq_radius: eq_radius(volume),
        }
    }

    fn covers_origin(&self) -> bool {
        (0..3).all(|k| self.center[k].abs() <= self.sides[k] * 0.5)
    }

    fn is_cubic(&self) -> bool {
        self.sides[0] == self.sides[1] && self.sides[1] == self.sides[2]
    }
}

/// Radius of the equal-volume ball, `(3 v / 4 pi)^(1/3)`.
pub fn eq_radius(volume: f64) -> f64 {
    (3.0 * volume / (4.0 * PI)).cbrt()
}

/// Construction recipe of a domain.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Ball { radius: f64 },
    Box { extents: [f64; 3] },
    Voxel { path: String },
}

/// Immutable cell decomposition of the reference set.
#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    cells: Vec<Cell>,
    total_volume: f64,
    diameter: f64,
    kind: DomainKind,
    contains_origin: bool,
}

impl DiscreteDomain {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Total volume, the sum of the cell volumes.
    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    /// Upper bound on the diameter of the covered set.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn contains_origin(&self) -> bool {
        self.contains_origin
    }

    /// Cell volumes in cell order (the weights of the discrete inner product).
    pub fn volumes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.volume).collect()
    }

    /// Radius of the smallest origin-centered ball covering every cell.
    pub fn circumradius(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let r = norm3(c.center);
                let half_diag = 0.5 * norm3(c.sides);
                r + half_diag
            })
            .fold(0.0, f64::max)
    }

    /// Short provenance tag used in exports and spectral data.
    pub fn describe(&self) -> String {
        match &self.kind {
            DomainKind::Ball { radius } => format!("ball(radius={radius},n={})", self.len()),
            DomainKind::Box { extents } => format!(
                "box(extents={}x{}x{},n={})",
                extents[0],
                extents[1],
                extents[2],
                self.len()
            ),
            DomainKind::Voxel { path } => format!("voxel({path},n={})", self.len()),
        }
    }

    /// The contracted domain: centers, sides and diameter scale by `eps`,
    /// volumes by `eps^3`. Used for physical-coordinate assembly.
    pub fn scaled(&self, eps: f64) -> DiscreteDomain {
        let cells: Vec<Cell> = self
            .cells
            .iter()
            .map(|c| {
                Cell::new(
                    [c.center[0] * eps, c.center[1] * eps, c.center[2] * eps],
                    [c.sides[0] * eps, c.sides[1] * eps, c.sides[2] * eps],
                )
            })
            .collect();
        let total_volume = cells.iter().map(|c| c.volume).sum();
        let kind = match &self.kind {
            DomainKind::Ball { radius } => DomainKind::Ball {
                radius: radius * eps,
            },
            DomainKind::Box { extents } => DomainKind::Box {
                extents: [extents[0] * eps, extents[1] * eps, extents[2] * eps],
            },
            DomainKind::Voxel { path } => DomainKind::Voxel { path: path.clone() },
        };
        DiscreteDomain {
            cells,
            total_volume,
            diameter: self.diameter * eps,
            kind,
            contains_origin: self.contains_origin,
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Uniform voxelization of the origin-centered ball.
///
/// Cells of the axis-aligned grid over the bounding cube whose centers lie
/// strictly inside the ball are kept with full cube volume.
pub fn make_ball(radius: f64, resolution: usize) -> Result<DiscreteDomain> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Config(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if resolution < 4 {
        return Err(Error::Config(format!(
            "ball resolution must be at least 4 cells per axis, got {resolution}"
        )));
    }
    let h = 2.0 * radius / resolution as f64;
    let coord = |i: usize| -radius + (i as f64 + 0.5) * h;
    let mut cells = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            for k in 0..resolution {
                let c = [coord(i), coord(j), coord(k)];
                if c[0] * c[0] + c[1] * c[1] + c[2] * c[2] < radius * radius {
                    cells.push(Cell::new(c, [h, h, h]));
                }
            }
        }
    }
    let contains_origin = cells.iter().any(Cell::covers_origin);
    if !contains_origin {
        return Err(Error::Domain(
            "voxelized ball does not cover the origin".into(),
        ));
    }
    let total_volume = cells.iter().map(|c| c.volume).sum();
    Ok(DiscreteDomain {
        cells,
        total_volume,
        diameter: 2.0 * radius,
        kind: DomainKind::Ball { radius },
        contains_origin,
    })
}

/// Exact tiling of an origin-centered box with `resolution` cells per axis.
pub fn make_box(extents: [f64; 3], resolution: usize) -> Result<DiscreteDomain> {
    for (k, &e) in extents.iter().enumerate() {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Config(format!(
                "box extent {k} must be positive, got {e}"
            )));
        }
    }
    if resolution == 0 {
        return Err(Error::Config("box resolution must be positive".into()));
    }
    let sides = [
        extents[0] / resolution as f64,
        extents[1] / resolution as f64,
        extents[2] / resolution as f64,
    ];
    let coord = |i: usize, k: usize| -0.5 * extents[k] + (i as f64 + 0.5) * sides[k];
    let mut cells = Vec::with_capacity(resolution * resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            for k in 0..resolution {
                cells.push(Cell::new([coord(i, 0), coord(j, 1), coord(k, 2)], sides));
            }
        }
    }
    let total_volume = cells.iter().map(|c| c.volume).sum();
    Ok(DiscreteDomain {
        cells,
        total_volume,
        diameter: norm3(extents),
        kind: DomainKind::Box { extents },
        contains_origin: true,
    })
}

/// Parses the voxel text format: one `x y z h` record per line, `#` comments.
pub fn parse_voxels(text: &str, origin_path: &str) -> Result<DiscreteDomain> {
    let mut cells = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields `x y z h`, found {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 4];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("field {} ({f:?}): {e}", k + 1),
            })?;
            if !vals[k].is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("field {} is not finite", k + 1),
                });
            }
        }
        let h = vals[3];
        if !(h > 0.0) {
            return Err(Error::Parse {
                line,
                msg: format!("cube side must be positive, got {h}"),
            });
        }
        cells.push(Cell::new([vals[0], vals[1], vals[2]], [h, h, h]));
    }
    if cells.is_empty() {
        return Err(Error::Domain("voxel file defines no cells".into()));
    }
    let contains_origin = cells.iter().any(Cell::covers_origin);
    if !contains_origin {
        return Err(Error::Domain("voxel set does not cover the origin".into()));
    }
    let total_volume = cells.iter().map(|c| c.volume).sum();
    let diameter = voxel_diameter(&cells);
    Ok(DiscreteDomain {
        cells,
        total_volume,
        diameter,
        kind: DomainKind::Voxel {
            path: origin_path.to_string(),
        },
        contains_origin,
    })
}

/// Loads a voxel file from disk.
pub fn load_voxels(path: impl AsRef<Path>) -> Result<DiscreteDomain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_voxels(&text, &path.display().to_string())
}

/// Max pairwise center distance plus one cell diagonal. An upper bound on the
/// true diameter, which is the safe direction for the localization constants.
fn voxel_diameter(cells: &[Cell]) -> f64 {
    let mut max_d2 = 0.0f64;
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            let dx = a.center[0] - b.center[0];
            let dy = a.center[1] - b.center[1];
            let dz = a.center[2] - b.center[2];
            let d2 = dx * dx + dy * dy + dz * dz;
            if d2 > max_d2 {
                max_d2 = d2;
            }
        }
    }
    let max_diag = cells.iter().map(|c| norm3(c.sides)).fold(0.0, f64::max);
    max_d2.sqrt() + max_diag
}

/// Serializes a domain in the voxel text format with 17 significant digits.
///
/// Non-cubic cells are exported as equal-volume cubes.
pub fn export_voxels(domain: &DiscreteDomain) -> String {
    let mut out = String::new();
    out.push_str("# x y z h\n");
    for c in &domain.cells {
        let h = if c.is_cubic() {
            c.sides[0]
        } else {
            c.volume.cbrt()
        };
        let _ = writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e}",
            c.center[0], c.center[1], c.center[2], h
        );
    }
    out
}

/// Writes a domain to disk in the voxel format.
pub fn save_voxels(domain: &DiscreteDomain, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), export_voxels(domain).as_bytes())
}
