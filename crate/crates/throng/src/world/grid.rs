//! Rectangular field partition and the four half-cell-shifted grid layers.

use serde::{Deserialize, Serialize};

use super::field::{FieldConfig, Rect};
use super::vec2::Vec2;
use super::WorldError;

/// Grid layer. The shifted layers are offset by half a cell toward negative
/// x and/or y, so each shifted cell straddles a base-cell border.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    Base,
    ShiftedX,
    ShiftedY,
    ShiftedXy,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Base, Layer::ShiftedX, Layer::ShiftedY, Layer::ShiftedXy];

    pub fn shifted_x(self) -> bool {
        matches!(self, Layer::ShiftedX | Layer::ShiftedXy)
    }

    pub fn shifted_y(self) -> bool {
        matches!(self, Layer::ShiftedY | Layer::ShiftedXy)
    }

    pub fn with_shifts(sx: bool, sy: bool) -> Layer {
        match (sx, sy) {
            (false, false) => Layer::Base,
            (true, false) => Layer::ShiftedX,
            (false, true) => Layer::ShiftedY,
            (true, true) => Layer::ShiftedXy,
        }
    }

    pub fn toggle_x(self) -> Layer {
        Layer::with_shifts(!self.shifted_x(), self.shifted_y())
    }

    pub fn toggle_y(self) -> Layer {
        Layer::with_shifts(self.shifted_x(), !self.shifted_y())
    }
}

/// One cell of one layer. Ordering is (layer, column, row) so base-layer ids
/// sort first; region keys rely on that.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct GridId {
    pub layer: Layer,
    pub column: usize,
    pub row: usize,
}

impl GridId {
    pub fn new(layer: Layer, column: usize, row: usize) -> GridId {
        GridId { layer, column, row }
    }
}

impl std::fmt::Display for GridId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.layer {
            Layer::Base => "b",
            Layer::ShiftedX => "sx",
            Layer::ShiftedY => "sy",
            Layer::ShiftedXy => "sxy",
        };
        write!(f, "{}:{}:{}", tag, self.column, self.row)
    }
}

/// Field decomposition into square cells of `cell_size`; edge cells are
/// truncated to the field. Shifted layers hold one extra column/row unless
/// the remainder past the last half shift would be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    pub cell_size: f64,
    pub columns: usize,
    pub rows: usize,
    pub origin: Vec2,
    pub width: f64,
    pub height: f64,
}

/// Builds the base partition: columns = ceil(width / cell_size), likewise rows.
pub fn build_partition(field: &FieldConfig, cell_size: f64) -> Result<GridPartition, WorldError> {
    if !(cell_size > 0.0 && cell_size <= field.width.min(field.height)) {
        return Err(WorldError::InvalidCellSize(cell_size));
    }
    Ok(GridPartition {
        cell_size,
        columns: (field.width / cell_size).ceil() as usize,
        rows: (field.height / cell_size).ceil() as usize,
        origin: Vec2::ZERO,
        width: field.width,
        height: field.height,
    })
}

impl GridPartition {
    /// Column/row counts for a layer. A shifted axis gains a cell only when
    /// the extra half cell still intersects the field.
    pub fn layer_dims(&self, layer: Layer) -> (usize, usize) {
        let cols = if layer.shifted_x() {
            shifted_count(self.width, self.cell_size)
        } else {
            self.columns
        };
        let rows = if layer.shifted_y() {
            shifted_count(self.height, self.cell_size)
        } else {
            self.rows
        };
        (cols, rows)
    }

    pub fn contains_id(&self, id: GridId) -> bool {
        let (cols, rows) = self.layer_dims(id.layer);
        id.column < cols && id.row < rows
    }

    /// The cell rectangle, clipped to the field. Always has positive area
    /// for a valid id.
    pub fn grid_rect(&self, id: GridId) -> Rect {
        let s = self.cell_size;
        let x0 = self.origin.x + id.column as f64 * s - if id.layer.shifted_x() { s / 2.0 } else { 0.0 };
        let y0 = self.origin.y + id.row as f64 * s - if id.layer.shifted_y() { s / 2.0 } else { 0.0 };
        Rect::new(
            Vec2::new(x0.max(self.origin.x), y0.max(self.origin.y)),
            Vec2::new(
                (x0 + s).min(self.origin.x + self.width),
                (y0 + s).min(self.origin.y + self.height),
            ),
        )
    }

    pub fn grid_area(&self, id: GridId) -> f64 {
        self.grid_rect(id).area()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_size * std::f64::consts::SQRT_2
    }

    pub fn field_rect(&self) -> Rect {
        Rect::new(self.origin, self.origin + Vec2::new(self.width, self.height))
    }

    /// All ids of one layer, column-major ascending: deterministic scan order.
    pub fn layer_ids(&self, layer: Layer) -> impl Iterator<Item = GridId> + '_ {
        let (cols, rows) = self.layer_dims(layer);
        (0..cols).flat_map(move |c| (0..rows).map(move |r| GridId::new(layer, c, r)))
    }

    pub fn base_ids(&self) -> impl Iterator<Item = GridId> + '_ {
        self.layer_ids(Layer::Base)
    }

    pub fn all_ids(&self) -> impl Iterator<Item = GridId> + '_ {
        Layer::ALL.into_iter().flat_map(move |layer| self.layer_ids(layer))
    }
}

fn shifted_count(extent: f64, cell: f64) -> usize {
    // Cell j covers [j*cell - cell/2, j*cell + cell/2); it exists while its
    // low edge is inside the field.
    (extent / cell + 0.5).ceil() as usize
}

/// Maps an in-field point to its unique cell per layer. Cells are half-open
/// [low, high); the far field boundary folds into the last cell.
pub fn locate(partition: &GridPartition, p: Vec2, layer: Layer) -> Result<GridId, WorldError> {
    let local = p - partition.origin;
    if !(local.x >= 0.0 && local.x <= partition.width && local.y >= 0.0 && local.y <= partition.height)
    {
        return Err(WorldError::OutOfField(p.x, p.y));
    }
    let s = partition.cell_size;
    let (cols, rows) = partition.layer_dims(layer);
    let xoff = if layer.shifted_x() { s / 2.0 } else { 0.0 };
    let yoff = if layer.shifted_y() { s / 2.0 } else { 0.0 };
    let column = (((local.x + xoff) / s).floor() as usize).min(cols - 1);
    let row = (((local.y + yoff) / s).floor() as usize).min(rows - 1);
    Ok(GridId::new(layer, column, row))
}
