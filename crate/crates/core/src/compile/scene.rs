//! Keyframe state carried from one compiled step to the next.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::action::{Action, ActionKind, Warning};
use crate::dataset::{Cell, ColumnKind, RowId, Table};
use crate::exec::StepValue;
use crate::layout::{
    arrange, assign_visuals, ArrangeInput, AxisBinding, AxisScale, AxisSpec, ColorScale, Annotation, Keyframe,
    UnitState, HIGHLIGHT_FILL,
};
use crate::qdmr::OpKind;

/// Highlight stacks up to this many levels.
const MAX_HIGHLIGHT: u8 = 3;

fn stroke_for(level: u8) -> f64 {
    match level {
        0 => 0.0,
        1 => 1.0,
        2 => 3.0,
        _ => 5.0,
    }
}

pub(crate) struct Scene<'t> {
    table: &'t Table,
    cell: f64,
    visible: Vec<RowId>,
    states: BTreeMap<RowId, UnitState>,
    axes: Vec<AxisSpec>,
    x: Option<usize>,
    y: Option<usize>,
    size: Option<usize>,
    color: Option<(usize, ColorScale)>,
    highlight: BTreeMap<RowId, u8>,
}

impl<'t> Scene<'t> {
    pub(crate) fn new(table: &'t Table, cell: f64) -> Scene<'t> {
        Scene {
            table,
            cell,
            visible: Vec::new(),
            states: BTreeMap::new(),
            axes: Vec::new(),
            x: None,
            y: None,
            size: None,
            color: None,
            highlight: BTreeMap::new(),
        }
    }

    fn column_name(&self, col: usize) -> &'t str {
        &self.table.columns()[col].name
    }

    /// Attribute currently bound to x.
    pub(crate) fn x_attribute(&self) -> Option<&'t str> {
        self.x.map(|c| self.column_name(c))
    }

    fn claim(&mut self, action: &Action, warnings: &mut Vec<Warning>) {
        let Some(name) = action.params.attribute.as_deref() else {
            return;
        };
        let Some(col) = self.table.column_index(name) else {
            return;
        };
        let current = match action.kind {
            ActionKind::XAxis => self.x,
            ActionKind::YAxis => self.y,
            ActionKind::Size => self.size,
            ActionKind::Color => self.color.as_ref().map(|(c, _)| *c),
            _ => return,
        };
        if let Some(prev) = current {
            if prev != col {
                warnings.push(Warning::new(
                    "ChannelConflict",
                    format!(
                        "{} moves from {} to {}",
                        action.kind,
                        self.column_name(prev),
                        self.column_name(col)
                    ),
                ));
            }
        }
        match action.kind {
            ActionKind::XAxis => self.x = Some(col),
            ActionKind::YAxis => self.y = Some(col),
            ActionKind::Size => self.size = Some(col),
            ActionKind::Color => {
                let scale = ColorScale::fit(self.table.row_ids().map(|id| self.table.cell(id, col)));
                if scale.cycles() {
                    warnings.push(Warning::new(
                        "PaletteCycled",
                        format!("{} has {} categories, more than the palette holds", name, scale.categories()),
                    ));
                }
                self.color = Some((col, scale));
            }
            _ => {}
        }
    }

    fn cells(&self, ids: &[RowId], col: usize) -> Vec<Cell> {
        ids.iter().map(|id| self.table.cell(*id, col).clone()).collect()
    }

    fn kind(&self, col: usize) -> ColumnKind {
        self.table.columns()[col].kind
    }

    /// Computes the keyframe after a step and advances the scene.
    pub(crate) fn frame(
        &mut self,
        index: usize,
        op: OpKind,
        value: &StepValue,
        actions: &[Action],
        caption: String,
        warnings: &mut Vec<Warning>,
    ) -> Keyframe {
        let target: Vec<RowId> = value.rows().to_vec();
        let target_set: BTreeSet<RowId> = target.iter().copied().collect();
        let prev_set: BTreeSet<RowId> = self.visible.iter().copied().collect();

        for action in actions {
            self.claim(action, warnings);
            if action.kind == ActionKind::Highlight {
                for id in &action.params.targets {
                    let level = self.highlight.entry(*id).or_insert(0);
                    *level = (*level + 1).min(MAX_HIGHLIGHT);
                }
            }
        }

        // Visible units in display order.
        let laid: Vec<RowId> = if op == OpKind::Sort {
            target.clone()
        } else {
            self.visible
                .iter()
                .copied()
                .filter(|id| target_set.contains(id))
                .chain(target.iter().copied().filter(|id| !prev_set.contains(id)))
                .collect()
        };
        let keep_positions = matches!(op, OpKind::Comparative | OpKind::Superlative)
            && laid.iter().all(|id| self.states.contains_key(id) && prev_set.contains(id));

        let base_fills: Vec<&'static str>;
        let mut placed: Vec<(f64, f64, f64, Option<String>)> = Vec::with_capacity(laid.len());
        if keep_positions {
            base_fills = self.base_fills(&laid, warnings);
            for id in &laid {
                let s = &self.states[id];
                placed.push((s.x, s.y, s.radius, s.group_key.clone()));
            }
        } else {
            let size_cells = self.size.map(|c| (self.kind(c), self.cells(&laid, c)));
            let visuals = match assign_visuals(
                laid.len(),
                size_cells.as_ref().map(|(k, c)| (*k, c.as_slice())),
                None,
                self.cell,
            ) {
                Ok(v) => v,
                Err(e) => {
                    warnings.push(Warning::new("KindMismatch", e.to_string()));
                    assign_visuals(laid.len(), None, None, self.cell).expect("no mappings cannot mismatch")
                }
            };
            base_fills = self.base_fills(&laid, warnings);
            let x_cells = self.x.map(|c| self.cells(&laid, c));
            let y_cells = self.y.map(|c| self.cells(&laid, c));
            let binding = |col: Option<usize>, cells: &'_ Option<Vec<Cell>>| -> Option<(&'t str, ColumnKind)> {
                match (col, cells) {
                    (Some(c), Some(_)) => Some((self.column_name(c), self.kind(c))),
                    _ => None,
                }
            };
            let xb = binding(self.x, &x_cells);
            let yb = binding(self.y, &y_cells);
            let arrangement = arrange(&ArrangeInput {
                ids: &laid,
                radii: &visuals.radii,
                packed: visuals.packed,
                x: xb.map(|(attribute, kind)| AxisBinding {
                    attribute,
                    kind,
                    cells: x_cells.as_deref().unwrap_or(&[]),
                    scale: AxisScale::Band,
                }),
                y: yb.map(|(attribute, kind)| AxisBinding {
                    attribute,
                    kind,
                    cells: y_cells.as_deref().unwrap_or(&[]),
                    scale: AxisScale::Band,
                }),
                cell: self.cell,
            });
            for w in arrangement.warnings {
                warnings.push(Warning::new("DegenerateScale", w));
            }
            for (i, (x, y)) in arrangement.positions.iter().enumerate() {
                placed.push((*x, *y, visuals.radii[i], arrangement.keys[i].clone()));
            }
            self.axes = arrangement.axes;
        }

        let mut next_states: BTreeMap<RowId, UnitState> = BTreeMap::new();
        for (i, id) in laid.iter().enumerate() {
            let level = self.highlight.get(id).copied().unwrap_or(0);
            let (x, y, radius, group_key) = placed[i].clone();
            next_states.insert(
                *id,
                UnitState {
                    unit_id: *id,
                    x,
                    y,
                    radius,
                    fill: if level > 0 { HIGHLIGHT_FILL } else { base_fills[i] }.to_string(),
                    opacity: 1.0,
                    stroke_width: stroke_for(level),
                    group_key,
                },
            );
        }

        let order: Vec<RowId> = if op == OpKind::Sort {
            laid.clone()
        } else {
            self.visible
                .iter()
                .copied()
                .chain(laid.iter().copied().filter(|id| !prev_set.contains(id)))
                .collect()
        };
        let units: Vec<UnitState> = order
            .iter()
            .map(|id| match next_states.get(id) {
                Some(s) => s.clone(),
                None => UnitState {
                    opacity: 0.0,
                    ..self.states[id].clone()
                },
            })
            .collect();

        let visible_set: BTreeSet<RowId> = laid.iter().copied().collect();
        let annotations = actions
            .iter()
            .filter(|a| a.kind == ActionKind::Annotate)
            .flat_map(|a| a.params.notes.iter())
            .map(|n| Annotation {
                targets: n.targets.iter().copied().filter(|t| visible_set.contains(t)).collect(),
                group: n.group.clone(),
                text: n.text.clone(),
            })
            .collect();

        for s in next_states.values() {
            self.states.insert(s.unit_id, s.clone());
        }
        self.visible = laid;

        Keyframe {
            index,
            units,
            caption,
            axes: self.axes.clone(),
            annotations,
        }
    }

    fn base_fills(&self, ids: &[RowId], warnings: &mut Vec<Warning>) -> Vec<&'static str> {
        let color_cells = self.color.as_ref().map(|(c, s)| (self.kind(*c), self.cells(ids, *c), s));
        match assign_visuals(
            ids.len(),
            None,
            color_cells.as_ref().map(|(k, c, s)| (*k, c.as_slice(), *s)),
            self.cell,
        ) {
            Ok(v) => v.fills,
            Err(e) => {
                warnings.push(Warning::new("KindMismatch", e.to_string()));
                alloc::vec![crate::layout::DEFAULT_FILL; ids.len()]
            }
        }
    }
}
