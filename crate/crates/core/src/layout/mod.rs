//! Deterministic geometry for unit visualizations: square packing, circle
//! packing, banded and linear axes, visual encodings and transition plans.

mod axis;
mod grid;
mod pack;
mod visual;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::compile::{Action, ActionKind};
use crate::dataset::RowId;

pub use axis::{arrange, axis_layout, bands, ArrangeInput, Arrangement, AxisBinding, AxisScale, AxisSpec, Channel, Tick};
pub use grid::{grid_aspect_ratio, grid_dims, grid_layout};
pub use pack::{circle_pack, enclose, Circle, OVERLAP_TOLERANCE};
pub use visual::{
    assign_visuals, default_radius, ColorScale, SizeScale, VisualError, Visuals, DEFAULT_FILL,
    HIGHLIGHT_FILL, PALETTE,
};

/// Default spacing between unit centers in a square packing.
pub const DEFAULT_CELL: f64 = 24.0;

/// Visual state of one unit in one keyframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitState {
    pub unit_id: RowId,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub fill: String,
    pub opacity: f64,
    pub stroke_width: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub group_key: Option<String>,
}

impl UnitState {
    pub fn is_visible(&self) -> bool {
        self.opacity > 0.0
    }

    pub fn circle(&self) -> Circle {
        Circle::new(self.x, self.y, self.radius)
    }
}

/// A tooltip attached to units or to a whole group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub targets: Vec<RowId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub group: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub index: usize,
    pub units: Vec<UnitState>,
    pub caption: String,
    pub axes: Vec<AxisSpec>,
    pub annotations: Vec<Annotation>,
}

impl Keyframe {
    pub fn unit(&self, id: RowId) -> Option<&UnitState> {
        self.units.iter().find(|u| u.unit_id == id)
    }

    pub fn visible_ids(&self) -> Vec<RowId> {
        self.units
            .iter()
            .filter(|u| u.is_visible())
            .map(|u| u.unit_id)
            .collect()
    }

    /// Unit ids are unique and every annotation target is a unit.
    pub fn is_consistent(&self) -> bool {
        let ids: BTreeSet<RowId> = self.units.iter().map(|u| u.unit_id).collect();
        ids.len() == self.units.len()
            && self
                .annotations
                .iter()
                .all(|a| a.targets.iter().all(|t| ids.contains(t)) && !a.text.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Move,
    FadeIn,
    FadeOut,
    Resize,
    Recolor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub action: ActionKind,
    pub units: Vec<RowId>,
    pub effect: Effect,
    pub duration_ms: u32,
    pub stagger_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub from_index: usize,
    pub to_index: usize,
    pub stages: Vec<Stage>,
    /// Annotations of the earlier frame, faded out as the transition starts.
    pub exit_annotations: Vec<usize>,
}

/// Animation timing defaults, overridable per document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub duration_ms: u32,
    pub stagger_ms: f64,
    pub max_total_stagger_ms: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            duration_ms: 800,
            stagger_ms: 15.0,
            max_total_stagger_ms: 600.0,
        }
    }
}

impl Timing {
    /// Per-unit delay for a stage touching `n` units.
    pub fn stagger_for(&self, n: usize) -> f64 {
        if n <= 1 {
            0.0
        } else {
            f64::min(self.stagger_ms, self.max_total_stagger_ms / (n - 1) as f64)
        }
    }
}

/// Plans the animation between two keyframes: one stage per action, in
/// action order.
pub fn plan_transition(prev: &Keyframe, next: &Keyframe, actions: &[Action], timing: &Timing) -> TransitionPlan {
    let prev_visible: BTreeSet<RowId> = prev.visible_ids().into_iter().collect();
    let next_visible: Vec<RowId> = next.visible_ids();
    let next_set: BTreeSet<RowId> = next_visible.iter().copied().collect();
    let entering: Vec<RowId> = next_visible
        .iter()
        .copied()
        .filter(|id| !prev_visible.contains(id))
        .collect();
    let staying: Vec<RowId> = next_visible
        .iter()
        .copied()
        .filter(|id| prev_visible.contains(id))
        .collect();
    // Units visible before and not after, in the earlier frame's order.
    let leaving: Vec<RowId> = prev
        .units
        .iter()
        .filter(|u| u.is_visible() && !next_set.contains(&u.unit_id))
        .map(|u| u.unit_id)
        .collect();
    let annotated: Vec<RowId> = {
        let mut seen = BTreeSet::new();
        next.annotations
            .iter()
            .flat_map(|a| a.targets.iter().copied())
            .filter(|id| seen.insert(*id))
            .collect()
    };

    let stages = actions
        .iter()
        .map(|action| {
            use ActionKind::*;
            let (effect, units) = match action.kind {
                Select | Union => (Effect::FadeIn, entering.clone()),
                Filter if !action.params.targets.is_empty() => {
                    let revealed: BTreeSet<RowId> = action.params.targets.iter().copied().collect();
                    let units = next_visible
                        .iter()
                        .copied()
                        .filter(|id| prev_visible.contains(id) || revealed.contains(id))
                        .collect();
                    (Effect::Move, units)
                }
                Filter | Intersect | Aggregate | Sort | XAxis | YAxis | Layout => {
                    (Effect::Move, staying.clone())
                }
                Size => (Effect::Resize, staying.clone()),
                Color => (Effect::Recolor, staying.clone()),
                Highlight => {
                    let targets: BTreeSet<RowId> = action.params.targets.iter().copied().collect();
                    (
                        Effect::FadeIn,
                        next_visible.iter().copied().filter(|id| targets.contains(id)).collect(),
                    )
                }
                Hide => (Effect::FadeOut, leaving.clone()),
                Annotate => (Effect::FadeIn, annotated.clone()),
            };
            Stage {
                action: action.kind,
                stagger_ms: timing.stagger_for(units.len()),
                units,
                effect,
                duration_ms: timing.duration_ms,
            }
        })
        .collect();

    TransitionPlan {
        from_index: prev.index,
        to_index: next.index,
        stages,
        exit_annotations: (0..prev.annotations.len()).collect(),
    }
}

/// Checks that every unit appearing or disappearing between two frames is
/// explained by a stage of the right kind. A filter may both drop records
/// and bring back ones the previous frame hid.
pub fn transition_conserves_units(prev: &Keyframe, next: &Keyframe, plan: &TransitionPlan) -> bool {
    let before: BTreeSet<RowId> = prev.visible_ids().into_iter().collect();
    let after: BTreeSet<RowId> = next.visible_ids().into_iter().collect();
    let mut staged: BTreeMap<RowId, Vec<ActionKind>> = BTreeMap::new();
    for stage in &plan.stages {
        for id in &stage.units {
            staged.entry(*id).or_default().push(stage.action);
        }
    }
    let via = |id: &RowId, allowed: &[ActionKind]| {
        staged
            .get(id)
            .is_some_and(|kinds| kinds.iter().any(|k| allowed.contains(k)))
    };
    after
        .difference(&before)
        .all(|id| via(id, &[ActionKind::Select, ActionKind::Union, ActionKind::Filter]))
        && before.difference(&after).all(|id| {
            via(
                id,
                &[ActionKind::Hide, ActionKind::Filter, ActionKind::Intersect],
            )
        })
}
