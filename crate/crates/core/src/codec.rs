//! Canonical text form of a decision tree.
//!
//! A leaf is `{"leaf":0}` or `{"leaf":1}`; an internal vertex is
//! `{"var":k,"on0":<tree>,"on1":<tree>}`. Serialization emits exactly this,
//! with no whitespace and keys in this order. Parsing accepts any key order
//! and insignificant whitespace, and rejects unknown or duplicate keys.

use std::fmt;
use std::fmt::Write as _;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node};

pub fn to_text(tree: &DecisionTree) -> String {
    let mut out = String::new();
    write_tree(tree, &mut out);
    out
}

fn write_tree(tree: &DecisionTree, out: &mut String) {
    match tree {
        Node::Leaf(bit) => {
            let _ = write!(out, "{{\"leaf\":{}}}", u8::from(*bit));
        }
        Node::Query { var, on0, on1 } => {
            let _ = write!(out, "{{\"var\":{var},\"on0\":");
            write_tree(on0, out);
            out.push_str(",\"on1\":");
            write_tree(on1, out);
            out.push('}');
        }
    }
}

/// Parses exactly one tree.
pub fn from_text(text: &str) -> Result<DecisionTree> {
    serde_json::from_str(text).map_err(parse_error)
}

/// Parses a whitespace-separated sequence of trees (one per line in files
/// written by `sample`).
pub fn from_text_many(text: &str) -> Result<Vec<DecisionTree>> {
    serde_json::Deserializer::from_str(text)
        .into_iter::<DecisionTree>()
        .map(|r| r.map_err(parse_error))
        .collect()
}

fn parse_error(err: serde_json::Error) -> Error {
    let message = err.to_string();
    // serde_json appends " at line L column C"; keep only the message
    let message = match message.rfind(" at line ") {
        Some(cut) => message[..cut].to_string(),
        None => message,
    };
    Error::Parse {
        line: err.line(),
        column: err.column(),
        message,
    }
}

impl<'de> Deserialize<'de> for Node<bool> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        deserializer.deserialize_map(TreeVisitor)
    }
}

struct TreeVisitor;

#[derive(Deserialize)]
#[serde(field_identifier, rename_all = "lowercase")]
enum Field {
    Leaf,
    Var,
    On0,
    On1,
}

impl<'de> Visitor<'de> for TreeVisitor {
    type Value = DecisionTree;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a tree object {\"leaf\":0|1} or {\"var\":k,\"on0\":...,\"on1\":...}")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<DecisionTree, A::Error> {
        let mut leaf: Option<u8> = None;
        let mut var: Option<usize> = None;
        let mut on0: Option<DecisionTree> = None;
        let mut on1: Option<DecisionTree> = None;
        while let Some(key) = map.next_key::<Field>()? {
            match key {
                Field::Leaf => {
                    if leaf.is_some() {
                        return Err(de::Error::duplicate_field("leaf"));
                    }
                    let bit = map.next_value::<u8>()?;
                    if bit > 1 {
                        return Err(de::Error::invalid_value(
                            de::Unexpected::Unsigned(bit as u64),
                            &"0 or 1",
                        ));
                    }
                    leaf = Some(bit);
                }
                Field::Var => {
                    if var.is_some() {
                        return Err(de::Error::duplicate_field("var"));
                    }
                    var = Some(map.next_value()?);
                }
                Field::On0 => {
                    if on0.is_some() {
                        return Err(de::Error::duplicate_field("on0"));
                    }
                    on0 = Some(map.next_value()?);
                }
                Field::On1 => {
                    if on1.is_some() {
                        return Err(de::Error::duplicate_field("on1"));
                    }
                    on1 = Some(map.next_value()?);
                }
            }
        }
        match (leaf, var, on0, on1) {
            (Some(bit), None, None, None) => Ok(Node::Leaf(bit == 1)),
            (None, Some(var), Some(on0), Some(on1)) => Ok(Node::query(var, on0, on1)),
            (Some(_), _, _, _) => Err(de::Error::custom(
                "a leaf object must not carry var/on0/on1",
            )),
            (None, None, _, _) => Err(de::Error::missing_field("leaf")),
            (None, Some(_), None, _) => Err(de::Error::missing_field("on0")),
            (None, Some(_), _, None) => Err(de::Error::missing_field("on1")),
        }
    }
}
