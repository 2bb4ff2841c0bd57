use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::RowId;
use crate::qdmr::{AggMethod, SortOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionFamily {
    Data,
    Visual,
    Annotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Select,
    Filter,
    Union,
    Intersect,
    Aggregate,
    Sort,
    XAxis,
    YAxis,
    Size,
    Color,
    Layout,
    Highlight,
    Hide,
    Annotate,
}

impl ActionKind {
    pub fn family(self) -> ActionFamily {
        use ActionKind::*;
        match self {
            Select | Filter | Union | Intersect | Aggregate | Sort => ActionFamily::Data,
            XAxis | YAxis | Size | Color | Layout => ActionFamily::Visual,
            Highlight | Hide | Annotate => ActionFamily::Annotation,
        }
    }

    pub fn as_str(self) -> &'static str {
        use ActionKind::*;
        match self {
            Select => "select",
            Filter => "filter",
            Union => "union",
            Intersect => "intersect",
            Aggregate => "aggregate",
            Sort => "sort",
            XAxis => "x_axis",
            YAxis => "y_axis",
            Size => "size",
            Color => "color",
            Layout => "layout",
            Highlight => "highlight",
            Hide => "hide",
            Annotate => "annotate",
        }
    }

    /// Accepts the action names used in prose, including `fill` for
    /// highlight and `x-axis` for x_axis.
    pub fn parse(name: &str) -> Option<ActionKind> {
        use ActionKind::*;
        let name = name.trim().to_ascii_lowercase().replace('-', "_");
        Some(match name.as_str() {
            "select" => Select,
            "filter" => Filter,
            "union" => Union,
            "intersect" => Intersect,
            "aggregate" => Aggregate,
            "sort" => Sort,
            "x_axis" => XAxis,
            "y_axis" => YAxis,
            "size" => Size,
            "color" => Color,
            "layout" => Layout,
            "highlight" | "fill" => Highlight,
            "hide" => Hide,
            "annotate" => Annotate,
            _ => return None,
        })
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tooltip attached to a set of units, optionally naming a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub targets: Vec<RowId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub group: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attribute: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub condition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method: Option<AggMethod>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order: Option<SortOrder>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub targets: Vec<RowId>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<Note>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub family: ActionFamily,
    pub kind: ActionKind,
    pub params: ActionParams,
}

impl Action {
    pub fn new(kind: ActionKind, params: ActionParams) -> Action {
        Action {
            family: kind.family(),
            kind,
            params,
        }
    }

    pub fn bare(kind: ActionKind) -> Action {
        Action::new(kind, ActionParams::default())
    }

    /// Tooltip text of an annotate action, one line per note.
    pub fn tooltip(&self) -> String {
        let texts: Vec<&str> = self.params.notes.iter().map(|n| n.text.as_str()).collect();
        texts.join("; ")
    }
}

/// A non-fatal problem attached to a compiled step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

impl Warning {
    pub fn new(code: &str, message: String) -> Warning {
        Warning {
            code: code.into(),
            message,
        }
    }
}

/// True when no visual action precedes a data action and no annotation
/// precedes a data or visual action.
pub fn actions_are_ordered(actions: &[Action]) -> bool {
    actions.windows(2).all(|w| w[0].family <= w[1].family)
}
