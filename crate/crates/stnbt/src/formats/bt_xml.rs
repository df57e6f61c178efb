//! Behavior tree XML.
//!
//! ```xml
//! <behavior_tree root="0">
//!   <SEQUENCE id="0">
//!     <WAIT_TIME id="1" time_ms="0" node="1" signature="(a)" start_ms="0" snap="start"/>
//!     <CHECK_AT_START id="2" node="1" signature="(a)" start_ms="0" snap="start">
//!       <literals><literal>(p)</literal></literals>
//!     </CHECK_AT_START>
//!     ...
//! ```
//!
//! Element names are node kinds; composite nodes nest their children in
//! order. Node ids are kept so that trace records can be joined back to the
//! tree.

use std::io::Cursor;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};
use stnbt_core::bt::{BehaviorTree, BtKind, BtNode, ExecPhase, Snap, SnapRef};
use stnbt_core::pddl::{Literal, LiteralSet};
use stnbt_core::time::Millis;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum XmlError {
    #[error("XML: {0}")]
    Xml(#[from] quick_xml::Error),
    #[error("XML attribute: {0}")]
    Attr(#[from] quick_xml::events::attributes::AttrError),
    #[error("behavior tree XML: {0}")]
    Invalid(String),
}

fn bad(msg: impl Into<String>) -> XmlError {
    XmlError::Invalid(msg.into())
}

pub fn to_xml(t: &BehaviorTree) -> String {
    let mut w = Writer::new_with_indent(Cursor::new(Vec::new()), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .expect("in-memory write");
    let mut root = BytesStart::new("behavior_tree");
    root.push_attribute(("root", t.root.to_string().as_str()));
    w.write_event(Event::Start(root)).expect("in-memory write");
    write_node(&mut w, t, t.root);
    w.write_event(Event::End(BytesEnd::new("behavior_tree")))
        .expect("in-memory write");
    let mut s = String::from_utf8(w.into_inner().into_inner()).expect("utf-8");
    s.push('\n');
    s
}

fn write_node(w: &mut Writer<Cursor<Vec<u8>>>, t: &BehaviorTree, id: usize) {
    let n = t.node(id);
    let name = n.kind.as_str();
    let mut e = BytesStart::new(name);
    e.push_attribute(("id", n.id.to_string().as_str()));
    if let Some(p) = n.phase {
        e.push_attribute(("phase", p.as_str()));
    }
    if let Some(tm) = n.time {
        e.push_attribute(("time_ms", tm.0.to_string().as_str()));
    }
    if let Some(d) = n.duration {
        e.push_attribute(("duration_ms", d.0.to_string().as_str()));
    }
    if let Some(s) = &n.snap {
        e.push_attribute(("node", s.node.to_string().as_str()));
        e.push_attribute(("signature", s.signature.as_str()));
        e.push_attribute(("start_ms", s.start.0.to_string().as_str()));
        e.push_attribute(("snap", s.snap.as_str()));
    }
    if n.children.is_empty() && n.literals.is_none() {
        w.write_event(Event::Empty(e)).expect("in-memory write");
        return;
    }
    w.write_event(Event::Start(e)).expect("in-memory write");
    if let Some(lits) = &n.literals {
        if lits.is_empty() {
            w.write_event(Event::Empty(BytesStart::new("literals")))
                .expect("in-memory write");
        } else {
            w.write_event(Event::Start(BytesStart::new("literals")))
                .expect("in-memory write");
            for l in lits {
                w.write_event(Event::Start(BytesStart::new("literal")))
                    .expect("in-memory write");
                w.write_event(Event::Text(BytesText::new(&l.to_string())))
                    .expect("in-memory write");
                w.write_event(Event::End(BytesEnd::new("literal")))
                    .expect("in-memory write");
            }
            w.write_event(Event::End(BytesEnd::new("literals")))
                .expect("in-memory write");
        }
    }
    for &c in &n.children {
        write_node(w, t, c);
    }
    w.write_event(Event::End(BytesEnd::new(name))).expect("in-memory write");
}

fn node_from_start(e: &BytesStart) -> Result<BtNode, XmlError> {
    let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let kind = BtKind::parse(&tag).ok_or_else(|| bad(format!("unknown element <{tag}>")))?;
    let mut node = BtNode {
        id: usize::MAX,
        kind,
        children: Vec::new(),
        snap: None,
        time: None,
        literals: None,
        duration: None,
        phase: None,
    };
    let (mut sn, mut sig, mut st, mut sk) = (None, None, None, None);
    for a in e.attributes() {
        let a = a?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let val = a.unescape_value()?.into_owned();
        let int = |v: &str| {
            v.parse::<i64>()
                .map_err(|_| bad(format!("<{tag}> {key}=\"{v}\" is not an integer")))
        };
        match key.as_str() {
            "id" => node.id = int(&val)? as usize,
            "phase" => {
                node.phase = Some(match val.as_str() {
                    "dispatch" => ExecPhase::Dispatch,
                    "join" => ExecPhase::Join,
                    _ => return Err(bad(format!("unknown phase `{val}`"))),
                })
            }
            "time_ms" => node.time = Some(Millis(int(&val)?)),
            "duration_ms" => node.duration = Some(Millis(int(&val)?)),
            "node" => sn = Some(int(&val)? as usize),
            "signature" => sig = Some(val),
            "start_ms" => st = Some(Millis(int(&val)?)),
            "snap" => sk = Some(Snap::parse(&val).ok_or_else(|| bad(format!("unknown snap `{val}`")))?),
            _ => return Err(bad(format!("unknown attribute `{key}` on <{tag}>"))),
        }
    }
    if node.id == usize::MAX {
        return Err(bad(format!("<{tag}> without id")));
    }
    node.snap = match (sn, sig, st, sk) {
        (Some(node), Some(signature), Some(start), Some(snap)) => Some(SnapRef {
            node,
            signature,
            start,
            snap,
        }),
        (None, None, None, None) => None,
        _ => return Err(bad(format!("node {} has a partial snap reference", node.id))),
    };
    Ok(node)
}

/// Parses a document written by [`to_xml`] and checks the tree structure.
pub fn from_xml(text: &str) -> Result<BehaviorTree, XmlError> {
    let mut r = Reader::from_str(text);
    r.config_mut().trim_text(true);
    let mut nodes: Vec<Option<BtNode>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut root_attr: Option<usize> = None;
    let mut in_literals = false;
    let mut in_literal = false;
    let mut top: Option<usize> = None;

    let mut place = |n: BtNode, stack: &[usize], nodes: &mut Vec<Option<BtNode>>| -> Result<usize, XmlError> {
        let id = n.id;
        if nodes.len() <= id {
            nodes.resize(id + 1, None);
        }
        if nodes[id].is_some() {
            return Err(bad(format!("duplicate id {id}")));
        }
        match stack.last() {
            Some(&p) => nodes[p].as_mut().expect("open parent").children.push(id),
            None if top.is_none() => top = Some(id),
            None => return Err(bad("more than one top-level node")),
        }
        nodes[id] = Some(n);
        Ok(id)
    };

    loop {
        match r.read_event()? {
            Event::Decl(_) | Event::Comment(_) => {}
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"behavior_tree" => {
                for a in e.attributes() {
                    let a = a?;
                    if a.key.as_ref() == b"root" {
                        root_attr = a.unescape_value()?.parse().ok();
                    }
                }
            }
            Event::End(e) if e.name().as_ref() == b"behavior_tree" => break,
            Event::Start(e) if e.name().as_ref() == b"literals" => {
                let cur = *stack.last().ok_or_else(|| bad("<literals> outside a node"))?;
                nodes[cur].as_mut().expect("open").literals = Some(LiteralSet::new());
                in_literals = true;
            }
            Event::Empty(e) if e.name().as_ref() == b"literals" => {
                let cur = *stack.last().ok_or_else(|| bad("<literals> outside a node"))?;
                nodes[cur].as_mut().expect("open").literals = Some(LiteralSet::new());
            }
            Event::End(e) if e.name().as_ref() == b"literals" => in_literals = false,
            Event::Start(e) if e.name().as_ref() == b"literal" => {
                if !in_literals {
                    return Err(bad("<literal> outside <literals>"));
                }
                in_literal = true;
            }
            Event::End(e) if e.name().as_ref() == b"literal" => in_literal = false,
            Event::Text(t) if in_literal => {
                let txt = t.unescape()?;
                let lit = Literal::parse(&txt).map_err(|e| bad(format!("literal `{txt}`: {e}")))?;
                let cur = *stack.last().expect("literal inside node");
                let set = nodes[cur]
                    .as_mut()
                    .expect("open")
                    .literals
                    .get_or_insert_with(LiteralSet::new);
                set.insert(lit)
                    .map_err(|f| bad(format!("contradictory literals on {f}")))?;
            }
            Event::Start(e) => {
                let n = node_from_start(&e)?;
                let id = place(n, &stack, &mut nodes)?;
                stack.push(id);
            }
            Event::Empty(e) => {
                let n = node_from_start(&e)?;
                place(n, &stack, &mut nodes)?;
            }
            Event::End(_) => {
                stack.pop();
            }
            Event::Eof => return Err(bad("unexpected end of document")),
            Event::Text(t) => return Err(bad(format!("unexpected text `{}`", String::from_utf8_lossy(&t)))),
            _ => {}
        }
    }
    let root = top.ok_or_else(|| bad("document has no node"))?;
    if root_attr.is_some_and(|r| r != root) {
        return Err(bad("root attribute does not match the top-level node"));
    }
    let nodes: Vec<BtNode> = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| bad(format!("ids are not contiguous: {i} is missing"))))
        .collect::<Result<_, _>>()?;
    let mut t = BehaviorTree {
        root,
        nodes,
        action_index: Default::default(),
    };
    t.reindex();
    t.check().map_err(|e| bad(e.to_string()))?;
    Ok(t)
}
