//! Farm layouts, crop classification and the relevance/susceptibility masks.

use std::fmt;
use std::str::FromStr;

use crate::environment::Measurement;
use crate::error::{Error, Result};
use crate::grid::Grid;

const WATERBERRY_LAYOUT: &str = include_str!("../layouts/waterberry.layout");

pub const WATERBERRY_WIDTH: usize = 6000;
pub const WATERBERRY_HEIGHT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CropKind {
    Tomato,
    Strawberry,
    Pond,
    Wetland,
    Unplanted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Client,
    /// Neighboring farm N1..N4.
    Neighbor(u8),
    Public,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CropCell {
    pub kind: CropKind,
    pub owner: Owner,
}

impl CropCell {
    pub const UNPLANTED: CropCell = CropCell {
        kind: CropKind::Unplanted,
        owner: Owner::Public,
    };

    fn client(kind: CropKind) -> Self {
        CropCell {
            kind,
            owner: Owner::Client,
        }
    }
}

/// The canonical layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryName {
    Waterberry,
    Miniberry10,
    Miniberry30,
    Miniberry100,
}

impl GeometryName {
    pub const ALL: [GeometryName; 4] = [
        GeometryName::Waterberry,
        GeometryName::Miniberry10,
        GeometryName::Miniberry30,
        GeometryName::Miniberry100,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeometryName::Waterberry => "waterberry",
            GeometryName::Miniberry10 => "miniberry-10",
            GeometryName::Miniberry30 => "miniberry-30",
            GeometryName::Miniberry100 => "miniberry-100",
        }
    }
}

impl fmt::Display for GeometryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeometryName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeometryName::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown geometry `{s}` (expected waterberry, miniberry-10, miniberry-30 or miniberry-100)"
                ))
            })
    }
}

/// A farm layout: one [`CropCell`] per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    name: String,
    cells: Grid<CropCell>,
}

/// A 0/1 grid selecting the cells that matter for one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMask {
    pub measurement: Measurement,
    pub values: Grid<bool>,
}

impl RelevanceMask {
    pub fn count(&self) -> usize {
        self.values.as_slice().iter().filter(|&&v| v).count()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        *self.values.get(x, y)
    }
}

/// Builds one of the canonical layouts by name.
pub fn build_geometry(name: &str) -> Result<Geometry> {
    let name: GeometryName = name.parse()?;
    Ok(match name {
        GeometryName::Waterberry => Geometry::from_layout(
            name.as_str(),
            WATERBERRY_WIDTH,
            WATERBERRY_HEIGHT,
            WATERBERRY_LAYOUT,
        )?,
        GeometryName::Miniberry10 => Geometry::miniberry(10),
        GeometryName::Miniberry30 => Geometry::miniberry(30),
        GeometryName::Miniberry100 => Geometry::miniberry(100),
    })
}

/// A parsed layout rectangle, half-open on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub cell: CropCell,
}

/// Parses the `x0 y0 x1 y1 kind owner` layout format. Blank lines and `#`
/// comments are skipped.
pub fn parse_layout(text: &str) -> Result<Vec<LayoutRect>> {
    let mut rects = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Format {
            what: "layout",
            message: format!("line {}: {msg}", lineno + 1),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        }
        let coord = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("bad coordinate `{s}`")))
        };
        let (x0, y0, x1, y1) = (
            coord(fields[0])?,
            coord(fields[1])?,
            coord(fields[2])?,
            coord(fields[3])?,
        );
        if x0 >= x1 || y0 >= y1 {
            return Err(bad("empty rectangle".into()));
        }
        let kind = match fields[4] {
            "tomato" => CropKind::Tomato,
            "strawberry" => CropKind::Strawberry,
            "pond" => CropKind::Pond,
            "wetland" => CropKind::Wetland,
            "unplanted" => CropKind::Unplanted,
            other => return Err(bad(format!("unknown kind `{other}`"))),
        };
        let owner = match fields[5] {
            "client" => Owner::Client,
            "public" => Owner::Public,
            "n1" => Owner::Neighbor(1),
            "n2" => Owner::Neighbor(2),
            "n3" => Owner::Neighbor(3),
            "n4" => Owner::Neighbor(4),
            other => return Err(bad(format!("unknown owner `{other}`"))),
        };
        if matches!(kind, CropKind::Pond | CropKind::Wetland) && matches!(owner, Owner::Neighbor(_))
        {
            return Err(bad("pond and wetland cannot belong to a neighbor".into()));
        }
        rects.push(LayoutRect {
            x0,
            y0,
            x1,
            y1,
            cell: CropCell { kind, owner },
        });
    }
    Ok(rects)
}

impl Geometry {
    /// Rasterizes a layout description onto a `width` x `height` grid.
    pub fn from_layout(name: &str, width: usize, height: usize, layout: &str) -> Result<Self> {
        let rects = parse_layout(layout)?;
        let mut cells = Grid::filled(width, height, CropCell::UNPLANTED);
        for r in &rects {
            if r.x1 > width || r.y1 > height {
                return Err(Error::Format {
                    what: "layout",
                    message: format!(
                        "rectangle [{}, {}) x [{}, {}) exceeds {width}x{height}",
                        r.x0, r.x1, r.y0, r.y1
                    ),
                });
            }
            for y in r.y0..r.y1 {
                let row = y * width;
                cells.as_mut_slice()[row + r.x0..row + r.x1].fill(r.cell);
            }
        }
        Ok(Geometry {
            name: name.to_string(),
            cells,
        })
    }

    /// Square Miniberry layout: strawberries on the left half, tomatoes on
    /// the right half, everything owned by the client.
    pub fn miniberry(size: usize) -> Self {
        let split = size / 2;
        let cells = Grid::from_fn(size, size, |x, _| {
            CropCell::client(if x < split {
                CropKind::Strawberry
            } else {
                CropKind::Tomato
            })
        });
        Geometry {
            name: format!("miniberry-{size}"),
            cells,
        }
    }

    /// Wraps an arbitrary cell grid. Mostly useful for tests.
    pub fn from_cells(name: impl Into<String>, cells: Grid<CropCell>) -> Self {
        Geometry {
            name: name.into(),
            cells,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn area(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &Grid<CropCell> {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> CropCell {
        *self.cells.get(x, y)
    }

    /// Bounding box `(x0, y0, x1, y1)` (half-open) of the client's cells of
    /// `kind`, or `None` when the client grows none.
    pub fn client_bounds(&self, kind: CropKind) -> Option<Region> {
        let mut bounds: Option<Region> = None;
        for (i, c) in self.cells.as_slice().iter().enumerate() {
            if c.kind == kind && c.owner == Owner::Client {
                let (x, y) = self.cells.coords(i);
                bounds = Some(match bounds {
                    None => Region::new(x, y, x + 1, y + 1),
                    Some(b) => Region::new(b.x0.min(x), b.y0.min(y), b.x1.max(x + 1), b.y1.max(y + 1)),
                });
            }
        }
        bounds
    }

    pub fn full_region(&self) -> Region {
        Region::new(0, 0, self.width(), self.height())
    }
}

/// Axis-aligned half-open cell rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Region {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Region { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }
}

/// Cells that count toward the score for measurement `m`.
pub fn relevance_mask(g: &Geometry, m: Measurement) -> RelevanceMask {
    let values = g.cells.map(|c| {
        c.owner == Owner::Client
            && match m {
                Measurement::Tylcv => c.kind == CropKind::Tomato,
                Measurement::Ccr => c.kind == CropKind::Strawberry,
                Measurement::Humidity => {
                    matches!(c.kind, CropKind::Tomato | CropKind::Strawberry)
                }
            }
    });
    RelevanceMask {
        measurement: m,
        values,
    }
}

/// Cells through which disease `m` can spread, regardless of owner.
pub fn susceptibility_mask(g: &Geometry, m: Measurement) -> Result<RelevanceMask> {
    let crop = m.host_crop().ok_or_else(|| {
        Error::contract("humidity has no susceptibility mask; pass a disease measurement")
    })?;
    Ok(RelevanceMask {
        measurement: m,
        values: g.cells.map(|c| c.kind == crop),
    })
}
