//! A small DOT reader used to check rendered output against the Graphviz
//! grammar (without ports or HTML labels, which we never emit).

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Punct(&'static str),
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && cs.get(i + 1) == Some(&'/') {
            while i < cs.len() && cs[i] != '\n' {
                i += 1;
            }
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match cs.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        let next = *cs.get(i + 1).ok_or("dangling escape")?;
                        s.push('\\');
                        s.push(next);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Id(s));
        } else if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_' || cs[i] == '.') {
                i += 1;
            }
            let word: String = cs[start..i].iter().collect();
            let numeral = word.chars().next().unwrap().is_ascii_digit() || word.starts_with('.');
            if numeral && word.parse::<f64>().is_err() {
                return Err(format!("bad numeral `{word}`"));
            }
            out.push(Tok::Id(word));
        } else {
            let two: String = cs[i..cs.len().min(i + 2)].iter().collect();
            let p = ["->", "--", "{", "}", "[", "]", ";", ",", "="]
                .into_iter()
                .find(|p| two.starts_with(p))
                .ok_or_else(|| format!("unexpected `{c}`"))?;
            i += p.len();
            out.push(Tok::Punct(p));
        }
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct DotGraph {
    pub directed: bool,
    pub name: Option<String>,
    /// Node ids in order of first mention.
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub subgraphs: Vec<String>,
    /// Nodes that carry an attribute list in a node statement.
    pub declared: Vec<String>,
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
    g: DotGraph,
}

fn is_kw(t: &Tok, kw: &str) -> bool {
    matches!(t, Tok::Id(s) if s.eq_ignore_ascii_case(kw))
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn expect(&mut self, p: &str) -> Result<(), String> {
        if self.punct(p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!(
                "expected `{p}` at token {}, found {:?}",
                self.pos,
                self.peek()
            ))
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(format!(
                "expected an ID at token {}, found {other:?}",
                self.pos
            )),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.peek().is_some_and(|t| is_kw(t, "strict")) {
            self.pos += 1;
        }
        match self.peek() {
            Some(t) if is_kw(t, "digraph") => self.g.directed = true,
            Some(t) if is_kw(t, "graph") => self.g.directed = false,
            other => return Err(format!("expected graph or digraph, found {other:?}")),
        }
        self.pos += 1;
        if let Some(Tok::Id(_)) = self.peek() {
            self.g.name = Some(self.id()?);
        }
        self.expect("{")?;
        self.stmt_list()?;
        self.expect("}")?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens after graph".into());
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !self.punct("}") {
            if self.peek().is_none() {
                return Err("unexpected end of input".into());
            }
            self.stmt()?;
            if self.punct(";") {
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn attr_list(&mut self) -> Result<(), String> {
        while self.punct("[") {
            self.pos += 1;
            while !self.punct("]") {
                self.id()?;
                self.expect("=")?;
                self.id()?;
                if self.punct(",") || self.punct(";") {
                    self.pos += 1;
                }
            }
            self.pos += 1;
        }
        Ok(())
    }

    fn subgraph(&mut self) -> Result<Vec<String>, String> {
        if self.peek().is_some_and(|t| is_kw(t, "subgraph")) {
            self.pos += 1;
            if let Some(Tok::Id(_)) = self.peek() {
                let name = self.id()?;
                self.g.subgraphs.push(name);
            }
        }
        let before = self.g.nodes.len();
        self.expect("{")?;
        self.stmt_list()?;
        self.expect("}")?;
        Ok(self.g.nodes[before..].to_vec())
    }

    fn node(&mut self, id: String) {
        if !self.g.nodes.contains(&id) {
            self.g.nodes.push(id);
        }
    }

    /// A node id or subgraph; returns the nodes it stands for.
    fn operand(&mut self) -> Result<Vec<String>, String> {
        if self.punct("{") || self.peek().is_some_and(|t| is_kw(t, "subgraph")) {
            self.subgraph()
        } else {
            let id = self.id()?;
            self.node(id.clone());
            Ok(vec![id])
        }
    }

    fn stmt(&mut self) -> Result<(), String> {
        let t = self.peek().cloned().ok_or("unexpected end")?;
        if ["graph", "node", "edge"].iter().any(|k| is_kw(&t, k)) {
            self.pos += 1;
            if !self.punct("[") {
                return Err(format!(
                    "attribute statement without attributes at token {}",
                    self.pos
                ));
            }
            return self.attr_list();
        }
        if let (Tok::Id(_), Some(Tok::Punct("="))) = (&t, self.toks.get(self.pos + 1)) {
            if !is_kw(&t, "subgraph") {
                self.pos += 2;
                self.id()?;
                return Ok(());
            }
        }
        let mut lhs = self.operand()?;
        let mut had_edge = false;
        while self.punct("->") || self.punct("--") {
            let op_directed = self.punct("->");
            if op_directed != self.g.directed {
                return Err("edge operator does not match graph kind".into());
            }
            self.pos += 1;
            let rhs = self.operand()?;
            for a in &lhs {
                for b in &rhs {
                    self.g.edges.push((a.clone(), b.clone()));
                }
            }
            lhs = rhs;
            had_edge = true;
        }
        if !had_edge && self.punct("[") {
            if let [single] = lhs.as_slice() {
                self.g.declared.push(single.clone());
            }
        }
        self.attr_list()
    }
}

/// Parses DOT text, failing on any grammar violation.
pub fn parse_dot(text: &str) -> Result<DotGraph, String> {
    let mut p = P {
        toks: lex(text)?,
        pos: 0,
        g: DotGraph::default(),
    };
    p.graph()?;
    Ok(p.g)
}
