//! Events over model regions and the behavior graphs built from them.
//!
//! An event occupies a region: a set of stages and arcs. The behavior graph
//! orders events by data and trigger flow: `A -> B` when some arc leaves a
//! stage of `A` and reaches a stage of `B`, possibly passing through stages
//! that belong to no event. Each edge keeps the arc path that justifies it.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{Diagnostic, Location};
use crate::model::{EventDef, Model, StageKind};
use crate::validate::flow_chains;

/// Stage ids of the region (stage ids win over arc ids).
pub fn region_stages<'a>(m: &Model, e: &'a EventDef) -> Vec<&'a str> {
    e.region
        .iter()
        .filter(|r| m.stage(r).is_some())
        .map(String::as_str)
        .collect()
}

/// Arc ids of the region.
pub fn region_arcs<'a>(m: &Model, e: &'a EventDef) -> Vec<&'a str> {
    e.region
        .iter()
        .filter(|r| m.stage(r).is_none() && m.arc(r).is_some())
        .map(String::as_str)
        .collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Checks that the region exists and is weakly connected; warns when it
/// overlaps another event of the model.
pub fn check_region(m: &Model, e: &EventDef) -> Vec<Diagnostic> {
    let loc = || match &e.span {
        Some(s) => Location::Span(s.clone()),
        None => Location::Element(e.id.clone()),
    };
    let mut diags = Vec::new();
    if e.region.is_empty() {
        diags.push(Diagnostic::error(
            "region-empty",
            format!("event `{}` has an empty region", e.id),
            loc(),
        ));
        return diags;
    }
    for r in &e.region {
        if m.stage(r).is_none() && m.arc(r).is_none() {
            diags.push(Diagnostic::error(
                "region-dangling",
                format!("event `{}` references unknown element `{r}`", e.id),
                loc(),
            ));
        }
    }
    if !diags.is_empty() {
        return diags;
    }

    // vertices: region elements, plus endpoint stages of region arcs
    let mut index: HashMap<&str, usize> = HashMap::new();
    let stages = region_stages(m, e);
    let arcs = region_arcs(m, e);
    for r in &e.region {
        let n = index.len();
        index.entry(r.as_str()).or_insert(n);
    }
    let explicit = index.len();
    for a in &arcs {
        let arc = m.arc(a).unwrap();
        for ep in [&arc.source, &arc.target] {
            if let Some(s) = ep.as_stage() {
                let n = index.len();
                index.entry(s).or_insert(n);
            }
        }
    }
    let mut uf = UnionFind::new(index.len());
    for a in &arcs {
        let arc = m.arc(a).unwrap();
        for ep in [&arc.source, &arc.target] {
            if let Some(s) = ep.as_stage() {
                uf.union(index[*a], index[s]);
            }
        }
    }
    let in_region: HashSet<&str> = stages.iter().copied().collect();
    for arc in &m.arcs {
        if let (Some(s), Some(t)) = (arc.source.as_stage(), arc.target.as_stage()) {
            if in_region.contains(s) && in_region.contains(t) {
                uf.union(index[s], index[t]);
            }
        }
    }
    let roots: HashSet<usize> = (0..explicit).map(|i| uf.find(i)).collect();
    if roots.len() > 1 {
        diags.push(Diagnostic::error(
            "region-disconnected",
            format!(
                "region of event `{}` falls into {} disconnected parts",
                e.id,
                roots.len()
            ),
            loc(),
        ));
    }

    for other in m.events.iter().filter(|o| o.id != e.id) {
        let shared: Vec<&String> = e
            .region
            .iter()
            .filter(|r| other.region.contains(r))
            .collect();
        if !shared.is_empty() {
            diags.push(Diagnostic::warning(
                "region-overlap",
                format!(
                    "event `{}` shares {} with event `{}`",
                    e.id,
                    shared
                        .iter()
                        .map(|s| format!("`{s}`"))
                        .collect::<Vec<_>>()
                        .join(", "),
                    other.id
                ),
                loc(),
            ));
        }
    }
    diags
}

/// Region checks for every event of the model.
pub fn check_all_regions(m: &Model) -> Vec<Diagnostic> {
    m.events.iter().flat_map(|e| check_region(m, e)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorEdge {
    pub from: String,
    pub to: String,
    /// Arc ids leading from a stage of `from` to a stage of `to`.
    pub witness: Vec<String>,
}

/// Events as nodes with precedence edges. Cycles are allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<BehaviorEdge>,
    /// Mega-event id -> constituent node ids.
    #[serde(default)]
    pub composed: BTreeMap<String, Vec<String>>,
    /// Mega-event id -> edges that became internal when it was composed.
    #[serde(default)]
    pub internal: BTreeMap<String, Vec<BehaviorEdge>>,
}

/// Builds the behavior graph of `events` over `m`.
pub fn build_behavior(m: &Model, events: &[EventDef]) -> BehaviorGraph {
    let mut owners: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        for s in region_stages(m, e) {
            owners.entry(s).or_default().push(i);
        }
    }

    let mut found: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (ai, e) in events.iter().enumerate() {
        let mut visited: HashSet<&str> = HashSet::new();
        let mut queue: VecDeque<(&str, Vec<String>)> = VecDeque::new();
        for s in region_stages(m, e) {
            if visited.insert(s) {
                queue.push_back((s, Vec::new()));
            }
        }
        while let Some((stage, path)) = queue.pop_front() {
            for arc in m.arcs.iter().filter(|a| a.source.as_stage() == Some(stage)) {
                let Some(target) = arc.target.as_stage() else {
                    continue;
                };
                let mut witness = path.clone();
                witness.push(arc.id.clone());
                match owners.get(target) {
                    Some(targets) => {
                        for &bi in targets {
                            if bi != ai {
                                found.entry((ai, bi)).or_insert_with(|| witness.clone());
                            }
                        }
                    }
                    None => {
                        if visited.insert(target) {
                            queue.push_back((target, witness));
                        }
                    }
                }
            }
        }
    }

    BehaviorGraph {
        nodes: events.iter().map(|e| e.id.clone()).collect(),
        edges: found
            .into_iter()
            .map(|((a, b), witness)| BehaviorEdge {
                from: events[a].id.clone(),
                to: events[b].id.clone(),
                witness,
            })
            .collect(),
        composed: BTreeMap::new(),
        internal: BTreeMap::new(),
    }
}

/// Confirms that an edge's witness is a real arc path from a stage of
/// `from` to a stage of `to` through stages outside every region.
pub fn witness_holds(m: &Model, events: &[EventDef], edge: &BehaviorEdge) -> bool {
    let region = |id: &str| -> HashSet<&str> {
        events
            .iter()
            .find(|e| e.id == id)
            .map(|e| region_stages(m, e).into_iter().collect())
            .unwrap_or_default()
    };
    let regioned: HashSet<&str> = events.iter().flat_map(|e| region_stages(m, e)).collect();
    let (from, to) = (region(&edge.from), region(&edge.to));
    let arcs: Option<Vec<_>> = edge.witness.iter().map(|a| m.arc(a)).collect();
    let Some(arcs) = arcs else { return false };
    let Some(first) = arcs.first() else {
        return false;
    };
    if !first.source.as_stage().is_some_and(|s| from.contains(s)) {
        return false;
    }
    for pair in arcs.windows(2) {
        if pair[0].target != pair[1].source {
            return false;
        }
        if pair[0]
            .target
            .as_stage()
            .is_some_and(|s| regioned.contains(s))
        {
            return false;
        }
    }
    arcs.last()
        .unwrap()
        .target
        .as_stage()
        .is_some_and(|s| to.contains(s))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("event `{0}` is not a node of the behavior graph")]
    UnknownMember(String),
    #[error("nothing to compose")]
    EmptyMembers,
    #[error("`{0}` already names another node")]
    NameTaken(String),
}

impl EventError {
    pub fn code(&self) -> &'static str {
        match self {
            EventError::UnknownMember(_) => "unknown-member",
            EventError::EmptyMembers => "empty-members",
            EventError::NameTaken(_) => "name-taken",
        }
    }
}

/// Replaces `members` by a single mega-event `name`.
pub fn compose_events(
    g: &BehaviorGraph,
    members: &[&str],
    name: &str,
) -> Result<BehaviorGraph, EventError> {
    if members.is_empty() {
        return Err(EventError::EmptyMembers);
    }
    if let Some(x) = members.iter().find(|x| !g.nodes.iter().any(|n| n == *x)) {
        return Err(EventError::UnknownMember(x.to_string()));
    }
    if g.nodes.iter().any(|n| n == name) && !members.contains(&name) {
        return Err(EventError::NameTaken(name.to_string()));
    }
    let is_member = |x: &str| members.contains(&x);
    let image = |x: &str| -> String {
        if is_member(x) {
            name.to_string()
        } else {
            x.to_string()
        }
    };

    let mut nodes = Vec::new();
    let mut constituents = Vec::new();
    for n in &g.nodes {
        if is_member(n) {
            if constituents.is_empty() {
                nodes.push(name.to_string());
            }
            constituents.push(n.clone());
        } else {
            nodes.push(n.clone());
        }
    }
    let pos = |x: &str| nodes.iter().position(|n| n == x).unwrap();

    let mut internal = Vec::new();
    let mut edges: Vec<BehaviorEdge> = Vec::new();
    for e in &g.edges {
        if is_member(&e.from) && is_member(&e.to) {
            internal.push(e.clone());
            continue;
        }
        let (from, to) = (image(&e.from), image(&e.to));
        if !edges.iter().any(|x| x.from == from && x.to == to) {
            edges.push(BehaviorEdge {
                from,
                to,
                witness: e.witness.clone(),
            });
        }
    }
    edges.sort_by_key(|e| (pos(&e.from), pos(&e.to)));

    let mut out = g.clone();
    out.nodes = nodes.clone();
    out.edges = edges;
    out.composed.insert(name.to_string(), constituents);
    out.internal.insert(name.to_string(), internal);
    Ok(out)
}

impl BehaviorGraph {
    fn index(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let idx = self.index();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[idx[e.from.as_str()]].push(idx[e.to.as_str()]);
        }
        adj
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    /// Weakly connected components, each sorted by node order.
    pub fn weak_components(&self) -> Vec<Vec<String>> {
        let idx = self.index();
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(idx[e.from.as_str()], idx[e.to.as_str()]);
        }
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(n.clone());
        }
        groups.into_values().collect()
    }

    /// Strongly connected component id per node (Tarjan).
    pub fn scc_ids(&self) -> HashMap<String, usize> {
        struct State {
            index: Vec<Option<usize>>,
            low: Vec<usize>,
            on_stack: Vec<bool>,
            stack: Vec<usize>,
            next: usize,
            comp: Vec<usize>,
            comps: usize,
        }
        fn visit(v: usize, adj: &[Vec<usize>], s: &mut State) {
            s.index[v] = Some(s.next);
            s.low[v] = s.next;
            s.next += 1;
            s.stack.push(v);
            s.on_stack[v] = true;
            for &w in &adj[v] {
                match s.index[w] {
                    None => {
                        visit(w, adj, s);
                        s.low[v] = s.low[v].min(s.low[w]);
                    }
                    Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                    _ => {}
                }
            }
            if Some(s.low[v]) == s.index[v] {
                loop {
                    let w = s.stack.pop().unwrap();
                    s.on_stack[w] = false;
                    s.comp[w] = s.comps;
                    if w == v {
                        break;
                    }
                }
                s.comps += 1;
            }
        }
        let n = self.nodes.len();
        let adj = self.adjacency();
        let mut s = State {
            index: vec![None; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            next: 0,
            comp: vec![0; n],
            comps: 0,
        };
        for v in 0..n {
            if s.index[v].is_none() {
                visit(v, &adj, &mut s);
            }
        }
        self.nodes.iter().cloned().zip(s.comp).collect()
    }

    pub fn has_cycle(&self) -> bool {
        let ids = self.scc_ids();
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for c in ids.values() {
            *sizes.entry(*c).or_default() += 1;
        }
        sizes.values().any(|&s| s > 1) || self.edges.iter().any(|e| e.from == e.to)
    }

    /// Whether `to` is reachable from `from` by one or more edges.
    pub fn reaches(&self, from: &str, to: &str) -> bool {
        let idx = self.index();
        let (Some(&s), Some(&t)) = (idx.get(from), idx.get(to)) else {
            return false;
        };
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = adj[s].clone();
        while let Some(v) = stack.pop() {
            if v == t {
                return true;
            }
            if !seen[v] {
                seen[v] = true;
                stack.extend(&adj[v]);
            }
        }
        false
    }
}

/// One event per release -> transfer.. -> receive chain that crosses a
/// machine boundary, named `send(<thing>, <src>, <dst>)`.
pub fn detect_send_events(m: &Model) -> Vec<EventDef> {
    let mut seen: HashSet<(Vec<String>, String)> = HashSet::new();
    let mut out = Vec::new();
    for chain in flow_chains(m) {
        if !chain.complete || chain.transit.is_empty() {
            continue;
        }
        if m.stage(&chain.transit[0]).map(|s| s.kind) != Some(StageKind::Release)
            || m.endpoint_kind(&chain.terminal) != Some(StageKind::Receive)
        {
            continue;
        }
        let src = m.stage(&chain.transit[0]).unwrap().machine.clone();
        let dst = m.endpoint_machine(&chain.terminal).unwrap().to_string();
        if src == dst {
            continue;
        }
        let key = (chain.transit.clone(), chain.terminal.id().to_string());
        if !seen.insert(key) {
            continue;
        }
        let mut region = chain.transit.clone();
        region.push(chain.terminal.id().to_string());
        region.extend(chain.arcs[1..].iter().cloned());
        out.push(EventDef {
            id: format!("send{}", out.len() + 1),
            name: format!("send({}, {src}, {dst})", chain.thing),
            region,
            time: None,
            span: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;
    use crate::model::StageKind::*;

    fn chain_model() -> Model {
        let mut b = ModelBuilder::new();
        b.machine("root", None)
            .machine("a", Some("root"))
            .stage(Create, "c1", "a")
            .stage(Process, "p1", "a")
            .stage(Process, "p2", "a")
            .stage(Create, "c2", "a")
            .stage(Process, "p3", "a")
            .trigger("c1", "p1")
            .trigger("p1", "p2")
            .trigger("p2", "c2")
            .trigger("c2", "p3")
            .event("A", "a", &["c1"])
            .event("B", "b", &["p1", "t2", "p2"])
            .event("C", "c", &["p3"]);
        b.build().unwrap()
    }

    #[test]
    fn edges_pass_through_unregioned_stages() {
        let m = chain_model();
        let g = build_behavior(&m, &m.events);
        let pairs: Vec<(&str, &str)> = g
            .edges
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str()))
            .collect();
        assert_eq!(pairs, [("A", "B"), ("B", "C")]);
        assert_eq!(g.edges[1].witness, ["t3", "t4"]);
        assert!(g.edges.iter().all(|e| witness_holds(&m, &m.events, e)));
    }

    #[test]
    fn region_checks() {
        let m = chain_model();
        assert!(check_all_regions(&m).is_empty());

        let ghost = EventDef {
            id: "X".into(),
            name: "x".into(),
            region: vec!["gone".into()],
            time: None,
            span: None,
        };
        assert_eq!(check_region(&m, &ghost)[0].code, "region-dangling");

        let split = EventDef {
            region: vec!["c1".into(), "p3".into()],
            ..ghost.clone()
        };
        assert_eq!(check_region(&m, &split)[0].code, "region-disconnected");

        let overlap = EventDef {
            region: vec!["p1".into()],
            ..ghost
        };
        let d = check_region(&m, &overlap);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "region-overlap");
        assert!(!d[0].is_error());
    }

    #[test]
    fn compose_quotients_the_graph() {
        let m = chain_model();
        let g = build_behavior(&m, &m.events);
        let all = compose_events(&g, &["A", "B", "C"], "All").unwrap();
        assert_eq!(all.nodes, ["All"]);
        assert!(all.edges.is_empty());
        assert_eq!(all.internal["All"].len(), 2);

        let ab = compose_events(&g, &["A", "B"], "AB").unwrap();
        assert_eq!(ab.nodes, ["AB", "C"]);
        assert!(ab.has_edge("AB", "C"));

        assert_eq!(
            compose_events(&g, &["Z"], "Q").unwrap_err().code(),
            "unknown-member"
        );
        let nested = compose_events(&ab, &["AB", "C"], "ABC").unwrap();
        assert_eq!(nested.composed["ABC"], ["AB", "C"]);
        assert_eq!(nested.composed["AB"], ["A", "B"]);
    }

    #[test]
    fn cycles_and_components() {
        let g = BehaviorGraph {
            nodes: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            edges: vec![
                BehaviorEdge {
                    from: "a".into(),
                    to: "b".into(),
                    witness: vec![],
                },
                BehaviorEdge {
                    from: "b".into(),
                    to: "a".into(),
                    witness: vec![],
                },
                BehaviorEdge {
                    from: "c".into(),
                    to: "d".into(),
                    witness: vec![],
                },
            ],
            ..Default::default()
        };
        assert!(g.has_cycle());
        assert_eq!(g.weak_components().len(), 2);
        assert!(g.reaches("a", "a"));
        assert!(!g.reaches("c", "c"));
        let ids = g.scc_ids();
        assert_eq!(ids["a"], ids["b"]);
        assert_ne!(ids["c"], ids["d"]);
    }
}
