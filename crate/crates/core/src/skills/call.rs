//! Skill calls and their textual form, e.g.
//! `combatWithEntity(bot, 'end_crystal', 'bow', true)`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::item::{Inventory, ItemId};
use crate::position::Position;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkillCall {
    ObtainItem {
        item: ItemId,
        count: u32,
    },
    MineItem {
        item: ItemId,
        count: u32,
        /// Exploration direction as a unit step.
        direction: Option<Position>,
        time_limit: Option<u64>,
    },
    CraftItem {
        item: ItemId,
        count: u32,
        use_station: Option<bool>,
    },
    SmeltItem {
        item: ItemId,
        count: u32,
        fuel: Option<ItemId>,
    },
    CollectItem {
        item: ItemId,
        count: u32,
        source: Option<String>,
    },
    ChatMessage {
        text: String,
        team: String,
    },
    GetFromChest {
        position: Position,
        items: Inventory,
    },
    DepositToChest {
        position: Position,
        items: Inventory,
    },
    CombatWithEntity {
        kind: String,
        weapon: Option<String>,
        looping: Option<bool>,
    },
    CombatWithPlayer {
        name: String,
        weapon: Option<String>,
    },
    EquipBest {
        slot: String,
    },
    ConsumeItem {
        item: ItemId,
    },
    InitialInventory {
        items: Inventory,
    },
    Idle {
        ticks: u32,
    },
}

impl SkillCall {
    pub fn idle() -> Self {
        SkillCall::Idle { ticks: 1 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SkillCall::ObtainItem { .. } => "obtainItem",
            SkillCall::MineItem { .. } => "mineItem",
            SkillCall::CraftItem { .. } => "craftItem",
            SkillCall::SmeltItem { .. } => "smeltItem",
            SkillCall::CollectItem { .. } => "collectItem",
            SkillCall::ChatMessage { .. } => "chatMessage",
            SkillCall::GetFromChest { .. } => "getItemFromChest",
            SkillCall::DepositToChest { .. } => "depositItemIntoChest",
            SkillCall::CombatWithEntity { .. } => "combatWithEntity",
            SkillCall::CombatWithPlayer { .. } => "combatWithPlayer",
            SkillCall::EquipBest { .. } => "equipBestToolOrArmor",
            SkillCall::ConsumeItem { .. } => "consumeItem",
            SkillCall::InitialInventory { .. } => "initialInventory",
            SkillCall::Idle { .. } => "idle",
        }
    }

    fn validate(&self) -> Result<(), ParseSkillError> {
        let count = match self {
            SkillCall::ObtainItem { count, .. }
            | SkillCall::MineItem { count, .. }
            | SkillCall::CraftItem { count, .. }
            | SkillCall::SmeltItem { count, .. }
            | SkillCall::CollectItem { count, .. } => Some(*count),
            SkillCall::Idle { ticks } => Some(*ticks),
            _ => None,
        };
        if count == Some(0) {
            return Err(ParseSkillError::Invalid("counts must be at least 1".into()));
        }
        Ok(())
    }
}

fn quote(out: &mut String, s: &str, delim: char) {
    out.push(delim);
    for c in s.chars() {
        if c == delim || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push(delim);
}

fn write_dict(out: &mut String, items: &Inventory) {
    out.push('{');
    for (k, (item, n)) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        quote(out, item.as_str(), '\'');
        let _ = write!(out, ": {n}");
    }
    out.push('}');
}

impl fmt::Display for SkillCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut args = String::from("bot");
        let id = |args: &mut String, s: &str| {
            args.push_str(", ");
            quote(args, s, '\'');
        };
        let opt_id = |args: &mut String, s: &Option<String>, more: bool| match s {
            Some(s) => id(args, s),
            None if more => args.push_str(", null"),
            None => {}
        };
        match self {
            SkillCall::ObtainItem { item, count } => {
                let _ = write!(args, ", {count}");
                id(&mut args, item.as_str());
            }
            SkillCall::MineItem { item, count, direction, time_limit } => {
                let _ = write!(args, ", {count}");
                id(&mut args, item.as_str());
                match direction {
                    Some(d) => {
                        let _ = write!(args, ", {d}");
                    }
                    None if time_limit.is_some() => args.push_str(", null"),
                    None => {}
                }
                if let Some(t) = time_limit {
                    let _ = write!(args, ", {t}");
                }
            }
            SkillCall::CraftItem { item, count, use_station } => {
                let _ = write!(args, ", {count}");
                id(&mut args, item.as_str());
                if let Some(b) = use_station {
                    let _ = write!(args, ", {b}");
                }
            }
            SkillCall::SmeltItem { item, count, fuel } => {
                let _ = write!(args, ", {count}");
                id(&mut args, item.as_str());
                opt_id(&mut args, &fuel.as_ref().map(|f| f.to_string()), false);
            }
            SkillCall::CollectItem { item, count, source } => {
                let _ = write!(args, ", {count}");
                id(&mut args, item.as_str());
                opt_id(&mut args, source, false);
            }
            SkillCall::ChatMessage { text, team } => {
                args.push_str(", ");
                quote(&mut args, text, '"');
                id(&mut args, team);
            }
            SkillCall::GetFromChest { position, items } | SkillCall::DepositToChest { position, items } => {
                let _ = write!(args, ", {position}, ");
                write_dict(&mut args, items);
            }
            SkillCall::CombatWithEntity { kind, weapon, looping } => {
                id(&mut args, kind);
                opt_id(&mut args, weapon, looping.is_some());
                if let Some(l) = looping {
                    let _ = write!(args, ", {l}");
                }
            }
            SkillCall::CombatWithPlayer { name, weapon } => {
                id(&mut args, name);
                opt_id(&mut args, weapon, false);
            }
            SkillCall::EquipBest { slot } => id(&mut args, slot),
            SkillCall::ConsumeItem { item } => id(&mut args, item.as_str()),
            SkillCall::InitialInventory { items } => {
                args.push_str(", ");
                write_dict(&mut args, items);
            }
            SkillCall::Idle { ticks } => {
                if *ticks != 1 {
                    let _ = write!(args, ", {ticks}");
                }
            }
        }
        write!(f, "{}({args})", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseSkillError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("bad arguments for `{skill}`: {msg}")]
    Arguments { skill: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Ident(String),
    Int(i64),
    Str(String),
    Tuple(Vec<Value>),
    Dict(Vec<(String, Value)>),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseSkillError> {
        Err(ParseSkillError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseSkillError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn ident(&mut self) -> Result<String, ParseSkillError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected identifier");
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn string(&mut self) -> Result<String, ParseSkillError> {
        let delim = self.src[self.pos];
        self.pos += 1;
        let mut out = Vec::new();
        loop {
            match self.src.get(self.pos) {
                None => return self.err("unterminated string"),
                Some(&b'\\') => {
                    let esc = self.src.get(self.pos + 1).copied();
                    match esc {
                        Some(b'n') => out.push(b'\n'),
                        Some(b't') => out.push(b'\t'),
                        Some(c) => out.push(c),
                        None => return self.err("dangling escape"),
                    }
                    self.pos += 2;
                }
                Some(&c) if c == delim => {
                    self.pos += 1;
                    break;
                }
                Some(&c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        String::from_utf8(out).or_else(|_| self.err("invalid utf-8 in string"))
    }

    fn value(&mut self) -> Result<Value, ParseSkillError> {
        match self.peek() {
            Some(b'\'') | Some(b'"') => self.string().map(Value::Str),
            Some(b'(') | Some(b'[') => {
                let close = if self.src[self.pos] == b'(' { b')' } else { b']' };
                self.pos += 1;
                let items = self.list(close)?;
                Ok(Value::Tuple(items))
            }
            Some(b'{') => {
                self.pos += 1;
                let mut entries = Vec::new();
                if self.peek() == Some(b'}') {
                    self.pos += 1;
                    return Ok(Value::Dict(entries));
                }
                loop {
                    let key = match self.value()? {
                        Value::Str(s) | Value::Ident(s) => s,
                        _ => return self.err("dictionary keys must be strings"),
                    };
                    self.expect(b':')?;
                    let v = self.value()?;
                    entries.push((key, v));
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b'}') => {
                            self.pos += 1;
                            return Ok(Value::Dict(entries));
                        }
                        _ => return self.err("expected `,` or `}`"),
                    }
                }
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                text.parse().map(Value::Int).or_else(|_| self.err("bad integer"))
            }
            Some(_) => self.ident().map(Value::Ident),
            None => self.err("unexpected end of input"),
        }
    }

    fn list(&mut self, close: u8) -> Result<Vec<Value>, ParseSkillError> {
        let mut items = Vec::new();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.value()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                _ => return self.err(format!("expected `,` or `{}`", close as char)),
            }
        }
    }
}

struct Args {
    skill: String,
    values: Vec<Value>,
}

impl Args {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseSkillError> {
        Err(ParseSkillError::Arguments { skill: self.skill.clone(), msg: msg.into() })
    }

    fn is_null(v: &Value) -> bool {
        matches!(v, Value::Ident(s) if matches!(s.as_str(), "null" | "None" | "undefined"))
    }

    fn get(&self, k: usize) -> Option<&Value> {
        self.values.get(k).filter(|v| !Self::is_null(v))
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), ParseSkillError> {
        if self.values.len() < min || self.values.len() > max {
            return self.err(format!("expected {min}..={max} arguments, got {}", self.values.len()));
        }
        Ok(())
    }

    fn string(&self, k: usize) -> Result<String, ParseSkillError> {
        match self.get(k) {
            Some(Value::Str(s)) => Ok(s.clone()),
            _ => self.err(format!("argument {k} must be a string")),
        }
    }

    fn opt_string(&self, k: usize) -> Result<Option<String>, ParseSkillError> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s.clone())),
            _ => self.err(format!("argument {k} must be a string")),
        }
    }

    fn int(&self, k: usize) -> Result<i64, ParseSkillError> {
        match self.get(k) {
            Some(Value::Int(n)) => Ok(*n),
            _ => self.err(format!("argument {k} must be an integer")),
        }
    }

    fn count(&self, k: usize) -> Result<u32, ParseSkillError> {
        let n = self.int(k)?;
        u32::try_from(n).ok().filter(|&n| n >= 1).map_or_else(|| self.err("count must be a positive integer"), Ok)
    }

    fn opt_bool(&self, k: usize) -> Result<Option<bool>, ParseSkillError> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Ident(s)) if s == "true" || s == "True" => Ok(Some(true)),
            Some(Value::Ident(s)) if s == "false" || s == "False" => Ok(Some(false)),
            _ => self.err(format!("argument {k} must be a boolean")),
        }
    }

    fn position(&self, k: usize) -> Result<Position, ParseSkillError> {
        match self.get(k) {
            Some(Value::Tuple(v)) if v.len() == 3 => {
                let mut xyz = [0i32; 3];
                for (slot, value) in xyz.iter_mut().zip(v) {
                    match value {
                        Value::Int(n) => *slot = i32::try_from(*n).or_else(|_| self.err("coordinate out of range"))?,
                        _ => return self.err("coordinates must be integers"),
                    }
                }
                Ok(Position::new(xyz[0], xyz[1], xyz[2]))
            }
            Some(Value::Str(s)) => s.parse().or_else(|_| self.err("bad position")),
            _ => self.err(format!("argument {k} must be a position")),
        }
    }

    fn items(&self, k: usize) -> Result<Inventory, ParseSkillError> {
        match self.get(k) {
            Some(Value::Dict(entries)) => {
                let mut inv = Inventory::new();
                for (item, v) in entries {
                    match v {
                        Value::Int(n) if *n >= 1 => inv.add(&ItemId::from(item.as_str()), u32::try_from(*n).unwrap_or(u32::MAX)),
                        _ => return self.err("item counts must be positive integers"),
                    }
                }
                Ok(inv)
            }
            _ => self.err(format!("argument {k} must be an item dictionary")),
        }
    }
}

impl FromStr for SkillCall {
    type Err = ParseSkillError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim().trim_end_matches(';').trim();
        let trimmed = trimmed.strip_prefix("await ").unwrap_or(trimmed);
        let mut lx = Lexer { src: trimmed.as_bytes(), pos: 0 };
        let name = lx.ident()?;
        lx.expect(b'(')?;
        let mut values = lx.list(b')')?;
        lx.skip_ws();
        if lx.pos != lx.src.len() {
            return lx.err("trailing input");
        }
        // The leading `bot` handle is optional.
        if matches!(values.first(), Some(Value::Ident(b)) if b == "bot") {
            values.remove(0);
        }
        let a = Args { skill: name.clone(), values };
        let call = match name.as_str() {
            "obtainItem" => {
                a.arity(2, 2)?;
                SkillCall::ObtainItem { count: a.count(0)?, item: a.string(1)?.into() }
            }
            "mineItem" => {
                a.arity(2, 4)?;
                SkillCall::MineItem {
                    count: a.count(0)?,
                    item: a.string(1)?.into(),
                    direction: a.get(2).map(|_| a.position(2)).transpose()?,
                    time_limit: a.get(3).map(|_| a.int(3).map(|t| t.max(0) as u64)).transpose()?,
                }
            }
            "craftItem" => {
                a.arity(2, 3)?;
                SkillCall::CraftItem { count: a.count(0)?, item: a.string(1)?.into(), use_station: a.opt_bool(2)? }
            }
            "smeltItem" => {
                a.arity(2, 3)?;
                SkillCall::SmeltItem {
                    count: a.count(0)?,
                    item: a.string(1)?.into(),
                    fuel: a.opt_string(2)?.map(ItemId::from),
                }
            }
            "collectItem" => {
                a.arity(2, 3)?;
                SkillCall::CollectItem { count: a.count(0)?, item: a.string(1)?.into(), source: a.opt_string(2)? }
            }
            "chatMessage" => {
                a.arity(2, 2)?;
                SkillCall::ChatMessage { text: a.string(0)?, team: a.string(1)? }
            }
            "getItemFromChest" => {
                a.arity(2, 2)?;
                SkillCall::GetFromChest { position: a.position(0)?, items: a.items(1)? }
            }
            "depositItemIntoChest" => {
                a.arity(2, 2)?;
                SkillCall::DepositToChest { position: a.position(0)?, items: a.items(1)? }
            }
            "combatWithEntity" => {
                a.arity(1, 3)?;
                SkillCall::CombatWithEntity { kind: a.string(0)?, weapon: a.opt_string(1)?, looping: a.opt_bool(2)? }
            }
            "combatWithPlayer" => {
                a.arity(1, 2)?;
                SkillCall::CombatWithPlayer { name: a.string(0)?, weapon: a.opt_string(1)? }
            }
            "equipBestToolOrArmor" => {
                a.arity(1, 1)?;
                SkillCall::EquipBest { slot: a.string(0)? }
            }
            "consumeItem" => {
                // A trailing flag appears in planner logs; it carries no meaning here.
                a.arity(1, 2)?;
                SkillCall::ConsumeItem { item: a.string(0)?.into() }
            }
            "initialInventory" => {
                a.arity(1, 1)?;
                SkillCall::InitialInventory { items: a.items(0)? }
            }
            "idle" => {
                a.arity(0, 1)?;
                let ticks = if a.get(0).is_some() { a.count(0)? } else { 1 };
                SkillCall::Idle { ticks }
            }
            other => return Err(ParseSkillError::UnknownSkill(other.to_owned())),
        };
        call.validate()?;
        Ok(call)
    }
}

impl Serialize for SkillCall {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SkillCall {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_planner_log_forms() {
        let c: SkillCall = "combatWithEntity(bot, 'end_crystal', 'bow', true)".parse().unwrap();
        assert_eq!(
            c,
            SkillCall::CombatWithEntity { kind: "end_crystal".into(), weapon: Some("bow".into()), looping: Some(true) }
        );
        let c: SkillCall = "obtainItem(bot, 10, 'porkchop')".parse().unwrap();
        assert_eq!(c, SkillCall::ObtainItem { item: "porkchop".into(), count: 10 });
        let c: SkillCall = "consumeItem(bot, 'golden_apple', false)".parse().unwrap();
        assert_eq!(c, SkillCall::ConsumeItem { item: "golden_apple".into() });
        let c: SkillCall = r#"chatMessage(bot, "Let's prioritize the \"crystals\".", 'A')"#.parse().unwrap();
        assert_eq!(
            c,
            SkillCall::ChatMessage { text: "Let's prioritize the \"crystals\".".into(), team: "A".into() }
        );
    }

    #[test]
    fn textual_form_matches_log_style() {
        let c = SkillCall::CombatWithEntity { kind: "end_crystal".into(), weapon: Some("bow".into()), looping: Some(true) };
        assert_eq!(c.to_string(), "combatWithEntity(bot, 'end_crystal', 'bow', true)");
        let c = SkillCall::GetFromChest {
            position: Position::new(1, 64, -3),
            items: [("iron_ingot", 3)].into_iter().collect(),
        };
        assert_eq!(c.to_string(), "getItemFromChest(bot, (1, 64, -3), {'iron_ingot': 3})");
        assert_eq!(SkillCall::idle().to_string(), "idle(bot)");
    }

    #[test]
    fn rejects_malformed_calls() {
        assert!(matches!("fly(bot)".parse::<SkillCall>(), Err(ParseSkillError::UnknownSkill(_))));
        assert!("obtainItem(bot, 0, 'x')".parse::<SkillCall>().is_err());
        assert!("obtainItem(bot, 'x')".parse::<SkillCall>().is_err());
        assert!("obtainItem(bot, 1, 'x'".parse::<SkillCall>().is_err());
        assert!("obtainItem(bot, 1, 'x') extra".parse::<SkillCall>().is_err());
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z_]{0,12}"
    }

    fn inventory() -> impl Strategy<Value = Inventory> {
        prop::collection::btree_map(ident(), 1u32..500, 0..4)
            .prop_map(|m| m.into_iter().collect())
    }

    fn call() -> impl Strategy<Value = SkillCall> {
        let pos = (-100i32..100, -64i32..320, -100i32..100).prop_map(|(x, y, z)| Position::new(x, y, z));
        prop_oneof![
            (ident(), 1u32..100).prop_map(|(i, c)| SkillCall::ObtainItem { item: i.into(), count: c }),
            (ident(), 1u32..100, prop::option::of(pos.clone()), prop::option::of(0u64..10_000)).prop_map(
                |(i, c, d, t)| SkillCall::MineItem { item: i.into(), count: c, direction: d, time_limit: t }
            ),
            (ident(), 1u32..100, prop::option::of(any::<bool>()))
                .prop_map(|(i, c, u)| SkillCall::CraftItem { item: i.into(), count: c, use_station: u }),
            (ident(), 1u32..100, prop::option::of(ident()))
                .prop_map(|(i, c, f)| SkillCall::SmeltItem { item: i.into(), count: c, fuel: f.map(Into::into) }),
            (ident(), 1u32..100, prop::option::of(ident()))
                .prop_map(|(i, c, s)| SkillCall::CollectItem { item: i.into(), count: c, source: s }),
            (".{0,40}", ident()).prop_map(|(text, team)| SkillCall::ChatMessage { text, team }),
            (pos.clone(), inventory()).prop_map(|(position, items)| SkillCall::GetFromChest { position, items }),
            (pos, inventory()).prop_map(|(position, items)| SkillCall::DepositToChest { position, items }),
            (ident(), prop::option::of(ident()), prop::option::of(any::<bool>()))
                .prop_map(|(kind, weapon, looping)| SkillCall::CombatWithEntity { kind, weapon, looping }),
            (ident(), prop::option::of(ident())).prop_map(|(name, weapon)| SkillCall::CombatWithPlayer { name, weapon }),
            ident().prop_map(|slot| SkillCall::EquipBest { slot }),
            ident().prop_map(|i| SkillCall::ConsumeItem { item: i.into() }),
            inventory().prop_map(|items| SkillCall::InitialInventory { items }),
            (1u32..50).prop_map(|ticks| SkillCall::Idle { ticks }),
        ]
    }

    proptest! {
        #[test]
        fn text_form_round_trips(c in call()) {
            let text = c.to_string();
            prop_assert_eq!(text.parse::<SkillCall>().unwrap(), c);
        }
    }
}
