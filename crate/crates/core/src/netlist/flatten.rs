use std::collections::HashMap;

use super::{Circuit, Element, ElementKind, NetlistError, GROUND};

/// Expands every instance recursively.
///
/// Internal nodes of instance `x1` become `x1.<node>`; an element `m3` inside
/// it becomes `m.x1.m3`, so the first letter still names the kind.
pub(super) fn flatten(c: &Circuit) -> Result<Circuit, NetlistError> {
    let mut out = Circuit {
        models: c.models.clone(),
        subckts: c.subckts.clone(),
        elements: Vec::with_capacity(c.elements.len()),
    };
    let mut stack = Vec::new();
    for e in &c.elements {
        expand(c, e, None, &HashMap::new(), &mut stack, &mut out.elements)?;
    }
    Ok(out)
}

fn expand(
    c: &Circuit,
    e: &Element,
    prefix: Option<&str>,
    node_map: &HashMap<String, String>,
    stack: &mut Vec<String>,
    out: &mut Vec<Element>,
) -> Result<(), NetlistError> {
    let map_node = |n: &String| -> String {
        if n == GROUND {
            return n.clone();
        }
        match (node_map.get(n), prefix) {
            (Some(outer), _) => outer.clone(),
            (None, Some(p)) => format!("{p}.{n}"),
            (None, None) => n.clone(),
        }
    };
    let nodes: Vec<String> = e.nodes.iter().map(map_node).collect();
    let line = e.line;

    let ElementKind::Instance { subckt } = &e.kind else {
        let name = match prefix {
            Some(p) => format!("{}.{}.{}", e.kind.letter(), p, e.name),
            None => e.name.clone(),
        };
        out.push(Element {
            name,
            kind: e.kind.clone(),
            nodes,
            line,
        });
        return Ok(());
    };

    let line_no = line.unwrap_or(0);
    let def = c.subckts.get(subckt).ok_or_else(|| NetlistError::UnknownModel {
        line: line_no,
        name: subckt.clone(),
    })?;
    if stack.contains(subckt) {
        let mut chain = stack.clone();
        chain.push(subckt.clone());
        return Err(NetlistError::SubcircuitCycle {
            line: line_no,
            chain: chain.join(" -> "),
        });
    }
    if def.ports.len() != nodes.len() {
        return Err(NetlistError::Arity {
            line: line_no,
            element: e.name.clone(),
            expected: def.ports.len(),
            found: nodes.len(),
        });
    }
    let inner_map: HashMap<String, String> = def.ports.iter().cloned().zip(nodes).collect();
    let inner_prefix = match prefix {
        Some(p) => format!("{p}.{}", e.name),
        None => e.name.clone(),
    };
    stack.push(subckt.clone());
    for inner in &def.elements {
        expand(c, inner, Some(&inner_prefix), &inner_map, stack, out)?;
    }
    stack.pop();
    Ok(())
}
