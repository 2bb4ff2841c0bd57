use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{Cell, ColumnKind};

/// Ten categorical hues, assigned in first-appearance order.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];
pub const DEFAULT_FILL: &str = "#8c8c8c";
pub const HIGHLIGHT_FILL: &str = "#ffd400";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeScale {
    pub min: f64,
    pub max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl SizeScale {
    /// Scale over the non-null values, with radius bounds of 0.3 and 1.2 cells.
    pub fn fit(values: &[Option<f64>], cell: f64) -> Option<SizeScale> {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        if present.is_empty() {
            return None;
        }
        Some(SizeScale {
            min: present.iter().copied().fold(f64::INFINITY, f64::min),
            max: present.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            r_min: 0.3 * cell,
            r_max: 1.2 * cell,
        })
    }

    /// Linear in the value. A constant column maps every unit to `r_max`.
    pub fn radius(&self, value: Option<f64>) -> f64 {
        match value {
            None => self.r_min,
            Some(_) if self.max == self.min => self.r_max,
            Some(v) => self.r_min + (v - self.min) / (self.max - self.min) * (self.r_max - self.r_min),
        }
    }
}

pub fn default_radius(cell: f64) -> f64 {
    0.4 * cell
}

/// Category-to-hue assignment, stable for a whole document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColorScale {
    index: BTreeMap<String, usize>,
}

impl ColorScale {
    /// Assigns palette slots to the distinct keys of `cells` in order.
    pub fn fit<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> ColorScale {
        let mut index = BTreeMap::new();
        for cell in cells {
            if let Some(key) = cell.group_key() {
                let next = index.len();
                index.entry(key).or_insert(next);
            }
        }
        ColorScale { index }
    }

    pub fn categories(&self) -> usize {
        self.index.len()
    }

    /// True when there are more categories than hues.
    pub fn cycles(&self) -> bool {
        self.index.len() > PALETTE.len()
    }

    pub fn fill(&self, cell: &Cell) -> &'static str {
        match cell.group_key().and_then(|k| self.index.get(&k).copied()) {
            Some(i) => PALETTE[i % PALETTE.len()],
            None => DEFAULT_FILL,
        }
    }
}

/// Visual encoding of a set of units: radius and fill per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Visuals {
    pub radii: Vec<f64>,
    pub fills: Vec<&'static str>,
    /// Circle packing is used whenever size carries data.
    pub packed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum VisualError {
    #[error("size needs a numerical attribute, found {0}")]
    SizeKind(ColumnKind),
    #[error("color needs a categorical attribute, found {0}")]
    ColorKind(ColumnKind),
}

/// Computes radius and fill for units given optional size and color
/// attributes (cells aligned with the units).
pub fn assign_visuals(
    n: usize,
    size: Option<(ColumnKind, &[Cell])>,
    color: Option<(ColumnKind, &[Cell], &ColorScale)>,
    cell: f64,
) -> Result<Visuals, VisualError> {
    let mut radii = alloc::vec![default_radius(cell); n];
    let mut fills = alloc::vec![DEFAULT_FILL; n];
    let mut packed = false;
    if let Some((kind, cells)) = size {
        if kind != ColumnKind::Numerical {
            return Err(VisualError::SizeKind(kind));
        }
        let values: Vec<Option<f64>> = cells.iter().map(Cell::as_number).collect();
        if let Some(scale) = SizeScale::fit(&values, cell) {
            radii = values.iter().map(|v| scale.radius(*v)).collect();
        }
        packed = true;
    }
    if let Some((kind, cells, scale)) = color {
        if kind != ColumnKind::Categorical {
            return Err(VisualError::ColorKind(kind));
        }
        fills = cells.iter().map(|c| scale.fill(c)).collect();
    }
    Ok(Visuals {
        radii,
        fills,
        packed,
    })
}
