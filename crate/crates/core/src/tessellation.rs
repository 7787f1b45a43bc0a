//! Cell pictures of the growth and Boolean models: every raster pixel is
//! assigned to the generator that claims it first (growth mode) or to the
//! generator minimizing the scaled distance (Boolean mode), the last
//! covered point can be starred, and the result is written as a P6 PPM
//! with an SVG overlay.

use crate::geom::{Location, Point, Window};
use crate::processes::{MarkKind, MarkedPointSet};
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::path::Path;

/// Per-pixel generator labels over a window raster.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRaster {
    pub width: usize,
    pub height: usize,
    /// Affine pixel -> plane map: `x = origin + (col + 0.5) * scale`,
    /// `y = origin_y + (row + 0.5) * scale` with row 0 at the bottom.
    pub origin: [f64; 2],
    pub scale: f64,
    /// Generator index per pixel, or [`CellRaster::OUTSIDE`].
    pub labels: Vec<u32>,
    pub generator_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMode {
    /// First claimant: argmin of birth time plus distance.
    Jm,
    /// Scaled nearest generator: argmin of distance over mark.
    Spbm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TessellationError {
    EmptyInput,
    ResolutionTooSmall { got: usize },
    NotPlanar { dim: usize },
    Io(String),
}

impl fmt::Display for TessellationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TessellationError::EmptyInput => write!(f, "cell assignment needs generators"),
            TessellationError::ResolutionTooSmall { got } => {
                write!(f, "resolution must be at least 16, got {got}")
            }
            TessellationError::NotPlanar { dim } => {
                write!(f, "rastering needs a 2D window, got d={dim}")
            }
            TessellationError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TessellationError {}

impl CellRaster {
    pub const OUTSIDE: u32 = u32::MAX;

    pub fn pixel_center(&self, col: usize, row: usize) -> Point {
        Point::new2(
            self.origin[0] + (col as f64 + 0.5) * self.scale,
            self.origin[1] + (row as f64 + 0.5) * self.scale,
        )
    }

    pub fn label_at(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

/// Label every pixel of a `resolution`-wide raster of the window with its
/// claiming generator; ties break to the lowest index. Cells of the scaled
/// model need not be connected.
pub fn assign_cells(
    w: &Window,
    input: &MarkedPointSet,
    mode: CellMode,
    resolution: usize,
) -> Result<CellRaster, TessellationError> {
    if input.is_empty() {
        return Err(TessellationError::EmptyInput);
    }
    if resolution < 16 {
        return Err(TessellationError::ResolutionTooSmall { got: resolution });
    }
    if w.dim() != 2 {
        return Err(TessellationError::NotPlanar { dim: w.dim() });
    }
    debug_assert!(match mode {
        CellMode::Jm => input.mark_kind == MarkKind::BirthTime,
        CellMode::Spbm => input.mark_kind == MarkKind::Radius,
    });
    let (lo, hi) = w.bounding_box();
    let (ex, ey) = (hi.x() - lo.x(), hi.y() - lo.y());
    let scale = ex.max(ey) / resolution as f64;
    let width = (ex / scale).round().max(1.0) as usize;
    let height = (ey / scale).round().max(1.0) as usize;
    let tol = crate::geom::DEFAULT_GEOM_TOL * w.diameter();
    let raster_origin = [lo.x(), lo.y()];
    let labels: Vec<u32> = (0..height)
        .into_par_iter()
        .flat_map_iter(|row| {
            let mut row_labels = Vec::with_capacity(width);
            for col in 0..width {
                let p = Point::new2(
                    raster_origin[0] + (col as f64 + 0.5) * scale,
                    raster_origin[1] + (row as f64 + 0.5) * scale,
                );
                if w.locate(&p, tol) == Location::Outside {
                    row_labels.push(CellRaster::OUTSIDE);
                    continue;
                }
                let mut best = f64::INFINITY;
                let mut best_i = CellRaster::OUTSIDE;
                for (i, (g, m)) in input.points.iter().zip(&input.marks).enumerate() {
                    let v = match mode {
                        CellMode::Jm => m + p.dist(g),
                        CellMode::Spbm => {
                            if *m > 0.0 {
                                p.dist(g) / m
                            } else {
                                f64::INFINITY
                            }
                        }
                    };
                    if v < best {
                        best = v;
                        best_i = i as u32;
                    }
                }
                row_labels.push(best_i);
            }
            row_labels
        })
        .collect();
    Ok(CellRaster {
        width,
        height,
        origin: raster_origin,
        scale,
        labels,
        generator_count: input.len(),
    })
}

/// Greedy cell coloring: adjacent cells (sharing a pixel edge) get
/// different palette entries; the palette starts at five colors and grows
/// only if the greedy pass needs more.
pub fn color_cells(raster: &CellRaster) -> Vec<usize> {
    let n = raster.generator_count;
    let mut adjacent = vec![std::collections::BTreeSet::new(); n];
    for row in 0..raster.height {
        for col in 0..raster.width {
            let a = raster.label_at(col, row);
            if a == CellRaster::OUTSIDE {
                continue;
            }
            for (dc, dr) in [(1usize, 0usize), (0, 1)] {
                let (c2, r2) = (col + dc, row + dr);
                if c2 >= raster.width || r2 >= raster.height {
                    continue;
                }
                let b = raster.label_at(c2, r2);
                if b != CellRaster::OUTSIDE && b != a {
                    adjacent[a as usize].insert(b as usize);
                    adjacent[b as usize].insert(a as usize);
                }
            }
        }
    }
    let mut colors = vec![usize::MAX; n];
    for i in 0..n {
        let used: std::collections::BTreeSet<usize> =
            adjacent[i].iter().filter(|&j| colors[*j] != usize::MAX).map(|j| colors[*j]).collect();
        let mut c = 0;
        while used.contains(&c) {
            c += 1;
        }
        colors[i] = c;
    }
    colors
}

const PALETTE: [[u8; 3]; 10] = [
    [230, 97, 90],
    [94, 158, 217],
    [120, 195, 135],
    [240, 200, 90],
    [170, 130, 200],
    [90, 200, 200],
    [230, 150, 60],
    [150, 150, 150],
    [200, 110, 160],
    [110, 120, 70],
];

const OUTSIDE_RGB: [u8; 3] = [255, 255, 255];

fn label_rgb(label: u32, colors: &[usize]) -> [u8; 3] {
    if label == CellRaster::OUTSIDE {
        OUTSIDE_RGB
    } else {
        PALETTE[colors[label as usize] % PALETTE.len()]
    }
}

/// Write the raster as a binary P6 PPM and a matching SVG overlay
/// (`<path>.svg`): window outline, generator dots scaled by mark, and an
/// optional star marker on the last covered point.
pub fn render(
    raster: &CellRaster,
    w: &Window,
    pts: &MarkedPointSet,
    star: Option<Point>,
    path: &Path,
) -> Result<(), TessellationError> {
    let colors = color_cells(raster);
    let mut ppm = Vec::with_capacity(raster.width * raster.height * 3 + 32);
    ppm.extend_from_slice(format!("P6\n{} {}\n255\n", raster.width, raster.height).as_bytes());
    for row in (0..raster.height).rev() {
        for col in 0..raster.width {
            ppm.extend_from_slice(&label_rgb(raster.label_at(col, row), &colors));
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| TessellationError::Io(e.to_string()))?;
    f.write_all(&ppm).map_err(|e| TessellationError::Io(e.to_string()))?;

    let svg_path = path.with_extension("svg");
    std::fs::write(svg_path, overlay_svg(raster, w, pts, star))
        .map_err(|e| TessellationError::Io(e.to_string()))
}

fn overlay_svg(raster: &CellRaster, w: &Window, pts: &MarkedPointSet, star: Option<Point>) -> String {
    let width = raster.width as f64 * raster.scale;
    let height = raster.height as f64 * raster.scale;
    // SVG y axis points down; flip around the window's vertical center.
    let fy = |y: f64| raster.origin[1] + height - (y - raster.origin[1]);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         viewBox=\"{} {} {} {}\">\n",
        raster.origin[0], raster.origin[1], width, height
    ));
    match w {
        Window::Disc { center, radius } => {
            s.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"black\" \
                 stroke-width=\"{}\"/>\n",
                center[0],
                fy(center[1]),
                radius,
                raster.scale
            ));
        }
        _ => {
            if let Some(vs) = w.as_polygon_vertices() {
                let pts_attr: Vec<String> =
                    vs.iter().map(|v| format!("{},{}", v[0], fy(v[1]))).collect();
                s.push_str(&format!(
                    "  <polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>\n",
                    pts_attr.join(" "),
                    raster.scale
                ));
            }
        }
    }
    let max_mark = pts.marks.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    for (p, m) in pts.points.iter().zip(&pts.marks) {
        // Larger marks draw as larger dots; growth-mode birth times draw
        // later seeds paler instead.
        let (r, opacity) = match pts.mark_kind {
            MarkKind::Radius => ((0.8 + 1.8 * m / max_mark) * raster.scale, 1.0),
            MarkKind::BirthTime => (1.4 * raster.scale, 1.0 - 0.75 * m / max_mark),
        };
        s.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"red\" fill-opacity=\"{:.3}\"/>\n",
            p.x(),
            fy(p.y()),
            r,
            opacity
        ));
    }
    if let Some(p) = star {
        let r = 2.2 * raster.scale;
        s.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"blue\"/>\n",
            p.x() - r,
            fy(p.y()) - r,
            2.0 * r,
            2.0 * r
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Re-read a P6 PPM written by [`render`] into per-pixel RGB rows
/// (top row first), for round-trip checks.
pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<[u8; 3]>), TessellationError> {
    let data = std::fs::read(path).map_err(|e| TessellationError::Io(e.to_string()))?;
    let header_end = data
        .windows(1)
        .enumerate()
        .filter(|(_, w)| w[0] == b'\n')
        .map(|(i, _)| i)
        .nth(2)
        .ok_or_else(|| TessellationError::Io("truncated PPM header".into()))?;
    let header = std::str::from_utf8(&data[..header_end])
        .map_err(|e| TessellationError::Io(e.to_string()))?;
    let mut it = header.split_whitespace();
    if it.next() != Some("P6") {
        return Err(TessellationError::Io("not a P6 PPM".into()));
    }
    let width: usize = it.next().unwrap_or("0").parse().unwrap_or(0);
    let height: usize = it.next().unwrap_or("0").parse().unwrap_or(0);
    let body = &data[header_end + 1..];
    let mut pixels = Vec::with_capacity(width * height);
    for chunk in body.chunks_exact(3).take(width * height) {
        pixels.push([chunk[0], chunk[1], chunk[2]]);
    }
    Ok((width, height, pixels))
}
