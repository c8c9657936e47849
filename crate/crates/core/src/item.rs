use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Item identifier, a short lowercase token such as `iron_pickaxe`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl Borrow<str> for ItemId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for ItemId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for ItemId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Item-count map. Zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Inventory(BTreeMap<ItemId, u32>);

impl Inventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, item: &str) -> u32 {
        self.0.get(item).copied().unwrap_or(0)
    }

    pub fn add(&mut self, item: &ItemId, n: u32) {
        if n == 0 {
            return;
        }
        *self.0.entry(item.clone()).or_insert(0) += n;
    }

    /// Removes `n` units, or nothing if fewer than `n` are held.
    pub fn remove(&mut self, item: &str, n: u32) -> bool {
        let held = self.count(item);
        if held < n {
            return false;
        }
        if held == n {
            self.0.remove(item);
        } else if let Some(c) = self.0.get_mut(item) {
            *c -= n;
        }
        true
    }

    pub fn set(&mut self, item: &ItemId, n: u32) {
        if n == 0 {
            self.0.remove(item.as_str());
        } else {
            self.0.insert(item.clone(), n);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ItemId, u32)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&v| u64::from(v)).sum()
    }

    /// True when every entry of `required` is covered.
    pub fn covers(&self, required: &Inventory) -> bool {
        required.iter().all(|(item, n)| self.count(item.as_str()) >= n)
    }

    pub fn merge(&mut self, other: &Inventory) {
        for (item, n) in other.iter() {
            self.add(item, n);
        }
    }
}

impl<I: Into<ItemId>> FromIterator<(I, u32)> for Inventory {
    fn from_iter<T: IntoIterator<Item = (I, u32)>>(iter: T) -> Self {
        let mut inv = Inventory::new();
        for (item, n) in iter {
            inv.add(&item.into(), n);
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remove_refuses_overdraw() {
        let mut inv: Inventory = [("log", 2)].into_iter().collect();
        assert!(!inv.remove("log", 3));
        assert_eq!(inv.count("log"), 2);
        assert!(inv.remove("log", 2));
        assert!(inv.is_empty());
    }

    #[test]
    fn zero_counts_are_not_stored() {
        let mut inv = Inventory::new();
        inv.add(&ItemId::from("stick"), 0);
        assert!(inv.is_empty());
        inv.set(&ItemId::from("stick"), 3);
        inv.set(&ItemId::from("stick"), 0);
        assert!(inv.is_empty());
    }
}
