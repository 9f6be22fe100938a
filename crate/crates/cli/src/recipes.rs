//! Checked-in run configurations.

use crate::config::Command;

pub struct Recipe {
    pub name: &'static str,
    pub command: Command,
    pub json: &'static str,
}

pub const RECIPES: &[Recipe] = &[
    Recipe { name: "fig2f", command: Command::LdMap, json: include_str!("../recipes/fig2f.json") },
    Recipe { name: "fig4", command: Command::LdMap, json: include_str!("../recipes/fig4.json") },
    Recipe { name: "validate_nhim", command: Command::ValidateNhim, json: include_str!("../recipes/validate_nhim.json") },
    Recipe { name: "po_family", command: Command::PoFamily, json: include_str!("../recipes/po_family.json") },
    Recipe { name: "manifolds", command: Command::Manifolds, json: include_str!("../recipes/manifolds.json") },
    Recipe { name: "psection", command: Command::Psection, json: include_str!("../recipes/psection.json") },
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}

pub fn names() -> Vec<&'static str> {
    RECIPES.iter().map(|r| r.name).collect()
}
