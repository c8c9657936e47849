//! Weapon, armor, food and fuel tables shipped next to the recipe corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::item::{Inventory, ItemId};

pub const EQUIPMENT_TABLE: &str = include_str!("../../data/equipment.json");

/// Equipment slot order in observations: four armor slots, main hand, off hand.
pub const SLOT_NAMES: [&str; 6] = ["head", "chest", "legs", "feet", "hand", "off_hand"];
pub const HAND_SLOT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeaponStats {
    pub damage: f64,
    pub range: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ammo: Option<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmorStats {
    pub slot: String,
    pub points: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodStats {
    pub health: f64,
    pub hunger: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquipmentTable {
    pub material_rank: Vec<String>,
    pub unarmed: WeaponStats,
    pub weapons: BTreeMap<ItemId, WeaponStats>,
    pub armor: BTreeMap<ItemId, ArmorStats>,
    pub reduction_per_point: f64,
    pub food: BTreeMap<ItemId, FoodStats>,
    pub fuels: Vec<ItemId>,
}

impl EquipmentTable {
    pub fn bundled() -> Self {
        serde_json::from_str(EQUIPMENT_TABLE).expect("bundled equipment table parses")
    }

    /// Rank of the item's material prefix; unknown materials rank lowest.
    pub fn material_rank(&self, item: &str) -> usize {
        let material = item.split('_').next().unwrap_or("");
        self.material_rank
            .iter()
            .position(|m| m == material)
            .map_or(0, |p| p + 1)
    }

    pub fn weapon(&self, item: &str) -> &WeaponStats {
        self.weapons.get(item).unwrap_or(&self.unarmed)
    }

    pub fn is_weapon(&self, item: &str) -> bool {
        self.weapons.contains_key(item)
    }

    /// Best melee weapon in `inventory` whose id contains `class` (e.g.
    /// `"sword"`), ranked by material then damage.
    pub fn best_weapon(&self, inventory: &Inventory, class: &str) -> Option<ItemId> {
        inventory
            .iter()
            .filter(|(item, _)| item.as_str().contains(class) && self.weapons.contains_key(item.as_str()))
            .max_by(|(a, _), (b, _)| {
                let ka = (self.material_rank(a.as_str()), self.weapon(a.as_str()).damage);
                let kb = (self.material_rank(b.as_str()), self.weapon(b.as_str()).damage);
                ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(item, _)| item.clone())
    }

    /// Best armor piece for `slot` held in `inventory`.
    pub fn best_armor(&self, inventory: &Inventory, slot: &str) -> Option<ItemId> {
        inventory
            .iter()
            .filter_map(|(item, _)| self.armor.get(item.as_str()).map(|a| (item, a)))
            .filter(|(_, a)| a.slot == slot)
            .max_by_key(|(item, a)| (a.points, self.material_rank(item.as_str())))
            .map(|(item, _)| item.clone())
    }

    /// Fraction of incoming damage absorbed by the worn pieces.
    pub fn reduction(&self, equipment: &[Option<ItemId>]) -> f64 {
        let points: u32 = equipment
            .iter()
            .flatten()
            .filter_map(|i| self.armor.get(i.as_str()))
            .map(|a| a.points)
            .sum();
        (f64::from(points) * self.reduction_per_point).clamp(0.0, 0.8)
    }
}

impl Default for EquipmentTable {
    fn default() -> Self {
        Self::bundled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let t = EquipmentTable::bundled();
        assert_eq!(t.weapon("wooden_sword").damage, 4.0);
        assert_eq!(t.weapon("bow").damage, 6.0);
        assert_eq!(t.weapon("stick").damage, 1.0);
    }

    #[test]
    fn best_items_follow_material_order() {
        let t = EquipmentTable::bundled();
        let inv: Inventory = [("wooden_sword", 1), ("iron_sword", 1), ("bow", 1), ("iron_helmet", 1), ("diamond_helmet", 1)]
            .into_iter()
            .collect();
        assert_eq!(t.best_weapon(&inv, "sword").unwrap(), "iron_sword");
        assert_eq!(t.best_armor(&inv, "head").unwrap(), "diamond_helmet");
        assert_eq!(t.best_armor(&inv, "feet"), None);
    }

    #[test]
    fn full_diamond_set_halves_damage() {
        let t = EquipmentTable::bundled();
        let eq: Vec<Option<ItemId>> = ["diamond_helmet", "diamond_chestplate", "diamond_leggings", "diamond_boots"]
            .iter()
            .map(|s| Some(ItemId::from(*s)))
            .chain([None, None])
            .collect();
        assert!((t.reduction(&eq) - 0.5).abs() < 1e-12);
    }
}
