//! Playback over a compiled document: in-between frames for a playhead and
//! the reorder request produced by dragging a step to a new slot.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::compile::ActionKind;
use crate::dataset::RowId;
use crate::doc::DatamationDoc;
use crate::layout::{Effect, Keyframe, TransitionPlan, UnitState};

/// A position in the animation: `t` runs through stage `stage` of the
/// transition that leaves frame `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Playhead {
    pub frame: usize,
    pub stage: usize,
    pub t: f64,
}

impl Playhead {
    pub fn at_frame(frame: usize) -> Playhead {
        Playhead { frame, stage: 0, t: 0.0 }
    }

    /// Moves the playhead onto an existing frame and stage of `doc`, with
    /// `t` in [0, 1]. The last frame has no stages, so it pins to t = 0.
    pub fn clamped(self, doc: &DatamationDoc) -> Playhead {
        let frames = doc.steps.len();
        if frames == 0 {
            return Playhead::at_frame(0);
        }
        let frame = self.frame.min(frames - 1);
        let t = if self.t.is_nan() { 0.0 } else { self.t.clamp(0.0, 1.0) };
        match doc.transitions.get(frame) {
            Some(plan) if !plan.stages.is_empty() => Playhead {
                frame,
                stage: self.stage.min(plan.stages.len() - 1),
                t,
            },
            _ => Playhead::at_frame(frame),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Property {
    Position,
    Opacity,
    Radius,
    Fill,
    Stroke,
}

fn governs(action: ActionKind, effect: Effect) -> &'static [Property] {
    match (action, effect) {
        (ActionKind::Highlight, _) => &[Property::Fill, Property::Stroke],
        (_, Effect::Move) => &[Property::Position],
        (_, Effect::FadeIn | Effect::FadeOut) => &[Property::Opacity],
        (_, Effect::Resize) => &[Property::Radius],
        (_, Effect::Recolor) => &[Property::Fill],
    }
}

/// Index of the first stage animating `property` of `id`. A property no
/// stage claims changes during the first stage naming the unit, or during
/// the last stage when none does.
fn owner(plan: &TransitionPlan, id: RowId, property: Property) -> usize {
    plan.stages
        .iter()
        .position(|s| governs(s.action, s.effect).contains(&property) && s.units.contains(&id))
        .or_else(|| plan.stages.iter().position(|s| s.units.contains(&id)))
        .unwrap_or(plan.stages.len().saturating_sub(1))
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn parse_hex(color: &str) -> Option<[u8; 3]> {
    let hex = color.strip_prefix('#')?;
    if hex.len() != 6 {
        return None;
    }
    let channel = |i: usize| u8::from_str_radix(hex.get(i..i + 2)?, 16).ok();
    Some([channel(0)?, channel(2)?, channel(4)?])
}

/// Blends two `#rrggbb` colors; anything else switches halfway.
pub fn mix_fill(a: &str, b: &str, t: f64) -> String {
    match (parse_hex(a), parse_hex(b)) {
        (Some(x), Some(y)) => {
            let c = |i: usize| libm::round(lerp(f64::from(x[i]), f64::from(y[i]), t)) as u8;
            alloc::format!("#{:02x}{:02x}{:02x}", c(0), c(1), c(2))
        }
        _ => String::from(if t < 0.5 { a } else { b }),
    }
}

fn faded(unit: &UnitState) -> UnitState {
    UnitState {
        opacity: 0.0,
        ..unit.clone()
    }
}

fn tween(plan: &TransitionPlan, a: &UnitState, b: &UnitState, stage: usize, t: f64) -> UnitState {
    let progress = |p: Property| {
        let o = owner(plan, a.unit_id, p);
        match stage.cmp(&o) {
            core::cmp::Ordering::Less => 0.0,
            core::cmp::Ordering::Equal => t,
            core::cmp::Ordering::Greater => 1.0,
        }
    };
    let pos = progress(Property::Position);
    UnitState {
        unit_id: a.unit_id,
        x: lerp(a.x, b.x, pos),
        y: lerp(a.y, b.y, pos),
        radius: lerp(a.radius, b.radius, progress(Property::Radius)),
        fill: mix_fill(&a.fill, &b.fill, progress(Property::Fill)),
        opacity: lerp(a.opacity, b.opacity, progress(Property::Opacity)),
        stroke_width: lerp(a.stroke_width, b.stroke_width, progress(Property::Stroke)),
        group_key: if pos < 1.0 { a.group_key.clone() } else { b.group_key.clone() },
    }
}

/// The frame shown at a playhead. At t = 0 of the first stage this is the
/// departing keyframe; at t = 1 of the last stage it is the arriving one.
pub fn frame_at(doc: &DatamationDoc, playhead: Playhead) -> Option<Keyframe> {
    let head = playhead.clamped(doc);
    let prev = &doc.steps.get(head.frame)?.keyframe;
    let (Some(plan), Some(next)) = (doc.transitions.get(head.frame), doc.steps.get(head.frame + 1).map(|s| &s.keyframe)) else {
        return Some(prev.clone());
    };
    if plan.stages.is_empty() || (head.stage == 0 && head.t == 0.0) {
        return Some(prev.clone());
    }
    let last = plan.stages.len() - 1;
    if head.stage == last && head.t == 1.0 {
        return Some(next.clone());
    }

    let mut order: Vec<RowId> = next.units.iter().map(|u| u.unit_id).collect();
    let known: BTreeSet<RowId> = order.iter().copied().collect();
    order.extend(prev.units.iter().map(|u| u.unit_id).filter(|id| !known.contains(id)));
    let units = order
        .into_iter()
        .map(|id| {
            let (a, b) = match (prev.unit(id), next.unit(id)) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                (Some(a), None) => (a.clone(), faded(a)),
                (None, Some(b)) => (faded(b), b.clone()),
                (None, None) => unreachable!("ids come from the two frames"),
            };
            tween(plan, &a, &b, head.stage, head.t)
        })
        .collect();

    let annotating = plan.stages.iter().position(|s| s.action == ActionKind::Annotate);
    let annotations = match annotating {
        Some(s) if head.stage > s || (head.stage == s && head.t > 0.0) => next.annotations.clone(),
        _ => Vec::new(),
    };
    Some(Keyframe {
        index: prev.index,
        units,
        caption: next.caption.clone(),
        axes: next.axes.clone(),
        annotations,
    })
}

/// The step order (one-based, new position k holds old step order[k - 1])
/// for dragging step `from` onto slot `to`. Dropping a step on its own slot
/// or outside the pipeline asks for nothing.
pub fn drag_order(len: usize, from: usize, to: usize) -> Option<Vec<usize>> {
    if from == to || from == 0 || to == 0 || from > len || to > len {
        return None;
    }
    let mut order: Vec<usize> = (1..=len).collect();
    let moved = order.remove(from - 1);
    order.insert(to - 1, moved);
    Some(order)
}
