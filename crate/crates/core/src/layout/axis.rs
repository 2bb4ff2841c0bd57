//! Band and linear arrangements along the x and y channels.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::grid::grid_layout;
use super::pack::circle_pack;
use crate::dataset::{Cell, ColumnKind, RowId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Band,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub label: String,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub channel: Channel,
    pub attribute: String,
    pub kind: ColumnKind,
    pub scale: AxisScale,
    pub ticks: Vec<Tick>,
}

/// An attribute bound to a channel, with one cell per arranged unit.
#[derive(Debug, Clone, Copy)]
pub struct AxisBinding<'a> {
    pub attribute: &'a str,
    pub kind: ColumnKind,
    pub cells: &'a [Cell],
    pub scale: AxisScale,
}

/// Units to arrange, in display order.
#[derive(Debug, Clone, Copy)]
pub struct ArrangeInput<'a> {
    pub ids: &'a [RowId],
    pub radii: &'a [f64],
    pub packed: bool,
    pub x: Option<AxisBinding<'a>>,
    pub y: Option<AxisBinding<'a>>,
    pub cell: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub positions: Vec<(f64, f64)>,
    /// Band label of each unit per bound channel, x first.
    pub keys: Vec<Option<String>>,
    pub axes: Vec<AxisSpec>,
    pub warnings: Vec<String>,
}

/// Distinct keys of `cells` as ordered bands plus each unit's band index.
/// Ordered kinds sort ascending; others keep the order of their first row.
pub fn bands(ids: &[RowId], cells: &[Cell], kind: ColumnKind) -> (Vec<String>, Vec<usize>) {
    // key -> (first row, representative cell)
    let mut first: BTreeMap<Option<String>, (RowId, &Cell)> = BTreeMap::new();
    for (id, cell) in ids.iter().zip(cells) {
        let entry = first.entry(cell.group_key()).or_insert((*id, cell));
        if *id < entry.0 {
            *entry = (*id, cell);
        }
    }
    let mut order: Vec<(Option<String>, RowId, &Cell)> =
        first.into_iter().map(|(k, (id, c))| (k, id, c)).collect();
    order.sort_by(|a, b| match (a.2.is_null(), b.2.is_null()) {
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ if kind.is_ordered() => a.2.sort_cmp(b.2).then(a.1.cmp(&b.1)),
        _ => a.1.cmp(&b.1),
    });
    let index: BTreeMap<&Option<String>, usize> =
        order.iter().enumerate().map(|(i, (k, _, _))| (k, i)).collect();
    let membership = cells.iter().map(|c| index[&c.group_key()]).collect();
    let labels = order
        .iter()
        .map(|(_, _, c)| c.text().unwrap_or("(null)").to_string())
        .collect();
    (labels, membership)
}

struct SubLayout {
    rel: Vec<(f64, f64)>,
    min: (f64, f64),
    max: (f64, f64),
}

fn sub_layout(radii: &[f64], packed: bool, cell: f64) -> SubLayout {
    let rel: Vec<(f64, f64)> = if packed {
        circle_pack(radii).into_iter().map(|c| (c.x, c.y)).collect()
    } else {
        grid_layout(radii.len(), cell)
    };
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for ((x, y), r) in rel.iter().zip(radii) {
        min = (min.0.min(x - r), min.1.min(y - r));
        max = (max.0.max(x + r), max.1.max(y + r));
    }
    if rel.is_empty() {
        min = (0.0, 0.0);
        max = (0.0, 0.0);
    }
    SubLayout { rel, min, max }
}

fn linear(
    input: &ArrangeInput<'_>,
    binding: AxisBinding<'_>,
    channel: Channel,
) -> Arrangement {
    let cell = input.cell;
    let extent = 20.0 * cell;
    let values: Vec<Option<f64>> = binding.cells.iter().map(Cell::ordinal).collect();
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    let degenerate = present.is_empty() || lo == hi;
    if degenerate {
        warnings.push(alloc::format!(
            "DegenerateScale: `{}` has a single value; units are centered",
            binding.attribute
        ));
    }
    let along: Vec<f64> = values
        .iter()
        .map(|v| match v {
            Some(v) if !degenerate => (v - lo) / (hi - lo) * extent,
            Some(_) => extent / 2.0,
            None => extent + 2.0 * cell,
        })
        .collect();
    // Units that land near an earlier one stack along the other channel.
    let across: Vec<f64> = along
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let stacked = along[..i].iter().filter(|b| libm::fabs(a - *b) < cell).count();
            stacked as f64 * cell
        })
        .collect();
    let positions = along
        .iter()
        .zip(&across)
        .map(|(a, b)| match channel {
            Channel::X => (*a, *b),
            Channel::Y => (*b, *a),
        })
        .collect();
    let mut ticks = Vec::new();
    if !present.is_empty() {
        let label = |v: f64| {
            binding
                .cells
                .iter()
                .find(|c| c.ordinal() == Some(v))
                .and_then(Cell::text)
                .unwrap_or("")
                .to_string()
        };
        if degenerate {
            ticks.push(Tick {
                label: label(lo),
                position: extent / 2.0,
            });
        } else {
            ticks.push(Tick {
                label: label(lo),
                position: 0.0,
            });
            ticks.push(Tick {
                label: label(hi),
                position: extent,
            });
        }
    }
    Arrangement {
        positions,
        keys: alloc::vec![None; input.ids.len()],
        axes: alloc::vec![AxisSpec {
            channel,
            attribute: binding.attribute.to_string(),
            kind: binding.kind,
            scale: AxisScale::Linear,
            ticks,
        }],
        warnings,
    }
}

type Banded<'a> = Option<(AxisBinding<'a>, (Vec<String>, Vec<usize>))>;

fn banded<'a>(ids: &[RowId], binding: Option<AxisBinding<'a>>) -> Banded<'a> {
    binding.map(|b| (b, bands(ids, b.cells, b.kind)))
}

/// Places units: banded channels split them into cells, each cell packs
/// its units as a grid (or circle packing when sized), and bands are spaced
/// one widest cell plus one spacing apart.
pub fn arrange(input: &ArrangeInput<'_>) -> Arrangement {
    let n = input.ids.len();
    match (input.x, input.y) {
        (Some(b), None) if b.scale == AxisScale::Linear => return linear(input, b, Channel::X),
        (None, Some(b)) if b.scale == AxisScale::Linear => return linear(input, b, Channel::Y),
        _ => {}
    }
    let xb = banded(input.ids, input.x);
    let yb = banded(input.ids, input.y);

    let slot = |i: usize| {
        (
            xb.as_ref().map_or(0, |(_, (_, m))| m[i]),
            yb.as_ref().map_or(0, |(_, (_, m))| m[i]),
        )
    };
    let mut members: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        members.entry(slot(i)).or_default().push(i);
    }
    let subs: BTreeMap<(usize, usize), SubLayout> = members
        .iter()
        .map(|(k, idx)| {
            let radii: Vec<f64> = idx.iter().map(|i| input.radii[*i]).collect();
            (*k, sub_layout(&radii, input.packed, input.cell))
        })
        .collect();
    let widest = subs.values().map(|s| s.max.0 - s.min.0).fold(0.0, f64::max);
    let tallest = subs.values().map(|s| s.max.1 - s.min.1).fold(0.0, f64::max);
    let pitch_x = widest + input.cell;
    let pitch_y = tallest + input.cell;

    let mut positions = alloc::vec![(0.0, 0.0); n];
    for (k, idx) in &members {
        let sub = &subs[k];
        for (slot_pos, &i) in idx.iter().enumerate() {
            let (rx, ry) = sub.rel[slot_pos];
            let x = match xb {
                Some(_) => rx - (sub.min.0 + sub.max.0) / 2.0 + k.0 as f64 * pitch_x,
                None if yb.is_some() => rx - sub.min.0,
                None => rx,
            };
            let y = match yb {
                Some(_) => ry - (sub.min.1 + sub.max.1) / 2.0 + k.1 as f64 * pitch_y,
                None if xb.is_some() => ry - sub.min.1,
                None => ry,
            };
            positions[i] = (x, y);
        }
    }

    let mut axes = Vec::new();
    let mut keys = alloc::vec![None; n];
    for (channel, b, pitch) in [(Channel::X, &xb, pitch_x), (Channel::Y, &yb, pitch_y)] {
        if let Some((binding, (labels, membership))) = b {
            axes.push(AxisSpec {
                channel,
                attribute: binding.attribute.to_string(),
                kind: binding.kind,
                scale: AxisScale::Band,
                ticks: labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| Tick {
                        label: l.clone(),
                        position: i as f64 * pitch,
                    })
                    .collect(),
            });
            for (i, m) in membership.iter().enumerate() {
                if keys[i].is_none() {
                    keys[i] = Some(labels[*m].clone());
                }
            }
        }
    }
    Arrangement {
        positions,
        keys,
        axes,
        warnings: Vec::new(),
    }
}

/// Arranges units along one channel by one attribute.
pub fn axis_layout(
    ids: &[RowId],
    radii: &[f64],
    cells: &[Cell],
    attribute: &str,
    kind: ColumnKind,
    channel: Channel,
    cell: f64,
) -> Arrangement {
    let scale = if kind == ColumnKind::Numerical {
        AxisScale::Linear
    } else {
        AxisScale::Band
    };
    let binding = AxisBinding {
        attribute,
        kind,
        cells,
        scale,
    };
    let (x, y) = match channel {
        Channel::X => (Some(binding), None),
        Channel::Y => (None, Some(binding)),
    };
    arrange(&ArrangeInput {
        ids,
        radii,
        packed: false,
        x,
        y,
        cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<RowId> {
        (0..n as u32).map(RowId).collect()
    }

    #[test]
    fn years_band_in_ascending_order() {
        let cells: Vec<Cell> = ["1999", "2000", "2000", "2001", "2000", "1998"]
            .iter()
            .map(|s| Cell::parse(s, ColumnKind::Temporal))
            .collect();
        let a = axis_layout(&ids(6), &[9.6; 6], &cells, "birth_year", ColumnKind::Temporal, Channel::X, 24.0);
        let labels: Vec<&str> = a.axes[0].ticks.iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, ["1998", "1999", "2000", "2001"]);
        // Units of the 1998 band sit left of every 1999 unit.
        assert!(a.positions[5].0 < a.positions[0].0);
        assert_eq!(a.keys[1].as_deref(), Some("2000"));
    }

    #[test]
    fn categories_band_in_first_appearance_order() {
        let cells: Vec<Cell> = ["US", "DE", "US", "CA"]
            .iter()
            .map(|s| Cell::parse(s, ColumnKind::Categorical))
            .collect();
        let a = axis_layout(&ids(4), &[9.6; 4], &cells, "country", ColumnKind::Categorical, Channel::X, 24.0);
        let labels: Vec<&str> = a.axes[0].ticks.iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, ["US", "DE", "CA"]);
    }

    #[test]
    fn single_band_is_centered() {
        let cells: Vec<Cell> = (0..3).map(|_| Cell::parse("CS", ColumnKind::Categorical)).collect();
        let a = axis_layout(&ids(3), &[9.6; 3], &cells, "major", ColumnKind::Categorical, Channel::X, 24.0);
        assert_eq!(a.axes[0].ticks.len(), 1);
        let min = a.positions.iter().map(|p| p.0 - 9.6).fold(f64::INFINITY, f64::min);
        let max = a.positions.iter().map(|p| p.0 + 9.6).fold(f64::NEG_INFINITY, f64::max);
        assert!(((min + max) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_linear_scale_centers_units() {
        let cells: Vec<Cell> = (0..3).map(|_| Cell::parse("5", ColumnKind::Numerical)).collect();
        let a = axis_layout(&ids(3), &[9.6; 3], &cells, "v", ColumnKind::Numerical, Channel::X, 24.0);
        assert!(a.warnings[0].starts_with("DegenerateScale"));
        assert!(a.positions.iter().all(|p| p.0 == 240.0));
    }

    #[test]
    fn linear_scale_spans_extent() {
        let cells: Vec<Cell> = ["1", "3", "2"].iter().map(|s| Cell::parse(s, ColumnKind::Numerical)).collect();
        let a = axis_layout(&ids(3), &[9.6; 3], &cells, "v", ColumnKind::Numerical, Channel::Y, 24.0);
        assert_eq!(a.positions[0].1, 0.0);
        assert_eq!(a.positions[1].1, 480.0);
        assert_eq!(a.positions[2].1, 240.0);
    }

    #[test]
    fn two_channels_form_a_matrix() {
        let xs: Vec<Cell> = ["a", "b", "a", "b"].iter().map(|s| Cell::parse(s, ColumnKind::Categorical)).collect();
        let ys: Vec<Cell> = ["1", "1", "2", "2"].iter().map(|s| Cell::parse(s, ColumnKind::Categorical)).collect();
        let bind = |cells: &'static [Cell]| AxisBinding {
            attribute: "k",
            kind: ColumnKind::Categorical,
            cells,
            scale: AxisScale::Band,
        };
        let xs: &'static [Cell] = alloc::boxed::Box::leak(xs.into_boxed_slice());
        let ys: &'static [Cell] = alloc::boxed::Box::leak(ys.into_boxed_slice());
        let a = arrange(&ArrangeInput {
            ids: &ids(4),
            radii: &[9.6; 4],
            packed: false,
            x: Some(bind(xs)),
            y: Some(bind(ys)),
            cell: 24.0,
        });
        assert_eq!(a.axes.len(), 2);
        assert_eq!(a.positions[0].1, a.positions[1].1);
        assert_eq!(a.positions[0].0, a.positions[2].0);
        assert!(a.positions[3].0 > a.positions[2].0 && a.positions[3].1 > a.positions[1].1);
    }
}
