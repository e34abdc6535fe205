//! Text front-end for encoder/decoder graphs.
//!
//! ```text
//! graph     := { statement ( ";" | newline ) }
//! statement := "observed" name { ","? name }
//!            | "latent" name { ","? name }
//!            | "encode" sources "->" name
//!            | "decode" sources "->" name
//!            | sources "->" name            # encoder if the target is latent
//!            | "tie" name name
//!            | "beta" "=" number
//! sources   := name | "(" name { "," name } ")"
//! name      := [A-Za-z_][A-Za-z0-9_']*
//! ```
//!
//! `#` starts a comment. Without `observed`/`latent` declarations, names
//! beginning with `Z` or `W` are latent and all others are observed. A bare
//! edge whose target is latent and whose sources are all observed is an
//! encoder edge; every other bare edge is a decoder edge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Observed,
    Latent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub sources: Vec<String>,
    pub target: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossGraphSpec {
    /// Node kinds in order of first appearance.
    pub nodes: Vec<(String, NodeKind)>,
    pub encoder: Vec<Edge>,
    pub decoder: Vec<Edge>,
    pub beta: f64,
    /// Latent pairs whose encoders share one network.
    pub ties: Vec<(String, String)>,
}

impl LossGraphSpec {
    pub fn kind(&self, name: &str) -> Option<NodeKind> {
        self.nodes.iter().find(|(n, _)| n == name).map(|(_, k)| *k)
    }

    pub fn latents(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|(_, k)| *k == NodeKind::Latent)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn observed(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|(_, k)| *k == NodeKind::Observed)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Number(f64),
    Arrow,
    LParen,
    RParen,
    Comma,
    Eq,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

/// Tokens of one statement with 1-based columns.
fn tokenize(text: &str, line: usize, offset: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, col));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, col));
                i += 2;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                out.push((Tok::Name(chars[start..i].iter().collect()), col));
            }
            _ if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '.' | '-' | '+')) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| parse_err(line, col, format!("invalid number `{s}`")))?;
                out.push((Tok::Number(v), col));
            }
            _ => return Err(parse_err(line, col, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Statement {
    line: usize,
    end_col: usize,
    toks: Vec<(Tok, usize)>,
}

enum EdgeRole {
    Encoder,
    Decoder,
    Bare,
}

struct PendingEdge {
    role: EdgeRole,
    sources: Vec<(String, usize)>,
    target: (String, usize),
    line: usize,
}

fn expect_name(st: &Statement, pos: usize) -> Result<(String, usize)> {
    match st.toks.get(pos) {
        Some((Tok::Name(n), c)) => Ok((n.clone(), *c)),
        Some((_, c)) => Err(parse_err(st.line, *c, "expected a node name")),
        None => Err(parse_err(st.line, st.end_col, "expected a node name")),
    }
}

/// Parses `sources -> target` starting at `pos`; returns the edge parts.
fn parse_edge(st: &Statement, mut pos: usize) -> Result<(Vec<(String, usize)>, (String, usize))> {
    let mut sources = Vec::new();
    match st.toks.get(pos) {
        Some((Tok::LParen, _)) => {
            pos += 1;
            loop {
                sources.push(expect_name(st, pos)?);
                pos += 1;
                match st.toks.get(pos) {
                    Some((Tok::Comma, _)) => pos += 1,
                    Some((Tok::RParen, _)) => {
                        pos += 1;
                        break;
                    }
                    Some((_, c)) => return Err(parse_err(st.line, *c, "expected `,` or `)`")),
                    None => return Err(parse_err(st.line, st.end_col, "unclosed `(`")),
                }
            }
        }
        _ => {
            sources.push(expect_name(st, pos)?);
            pos += 1;
        }
    }
    match st.toks.get(pos) {
        Some((Tok::Arrow, _)) => pos += 1,
        Some((_, c)) => return Err(parse_err(st.line, *c, "expected `->`")),
        None => return Err(parse_err(st.line, st.end_col, "expected `->`")),
    }
    let target = expect_name(st, pos)?;
    if let Some((_, c)) = st.toks.get(pos + 1) {
        return Err(parse_err(st.line, *c, "unexpected token after edge target"));
    }
    Ok((sources, target))
}

fn inferred_kind(name: &str) -> NodeKind {
    if name.starts_with('Z') || name.starts_with('W') {
        NodeKind::Latent
    } else {
        NodeKind::Observed
    }
}

/// Parses and validates a graph description.
pub fn parse_graph(text: &str) -> Result<LossGraphSpec> {
    let mut statements = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut offset = 0;
        for piece in body.split(';') {
            let toks = tokenize(piece, line, offset)?;
            if !toks.is_empty() {
                statements.push(Statement { line, end_col: offset + piece.chars().count() + 1, toks });
            }
            offset += piece.chars().count() + 1;
        }
    }

    let mut declared: BTreeMap<String, NodeKind> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut ties = Vec::new();
    let mut beta = None;
    for st in &statements {
        let (head, col) = &st.toks[0];
        match head {
            Tok::Name(kw) if kw == "observed" || kw == "latent" => {
                let kind = if kw == "observed" { NodeKind::Observed } else { NodeKind::Latent };
                let mut any = false;
                for (tok, c) in &st.toks[1..] {
                    match tok {
                        Tok::Name(n) => {
                            if let Some(prev) = declared.insert(n.clone(), kind) {
                                if prev != kind {
                                    return Err(parse_err(st.line, *c, format!("`{n}` declared as both observed and latent")));
                                }
                            }
                            if !order.contains(n) {
                                order.push(n.clone());
                            }
                            any = true;
                        }
                        Tok::Comma => {}
                        _ => return Err(parse_err(st.line, *c, "expected node names")),
                    }
                }
                if !any {
                    return Err(parse_err(st.line, st.end_col, "declaration lists no nodes"));
                }
            }
            Tok::Name(kw) if kw == "encode" || kw == "decode" => {
                let (sources, target) = parse_edge(st, 1)?;
                let role = if kw == "encode" { EdgeRole::Encoder } else { EdgeRole::Decoder };
                edges.push(PendingEdge { role, sources, target, line: st.line });
            }
            Tok::Name(kw) if kw == "tie" => {
                let a = expect_name(st, 1)?;
                let b = expect_name(st, 2)?;
                if let Some((_, c)) = st.toks.get(3) {
                    return Err(parse_err(st.line, *c, "`tie` takes exactly two nodes"));
                }
                ties.push((a, b, st.line));
            }
            Tok::Name(kw) if kw == "beta" => {
                match (st.toks.get(1), st.toks.get(2), st.toks.get(3)) {
                    (Some((Tok::Eq, _)), Some((Tok::Number(v), c)), None) => {
                        if !(*v > 0.0 && v.is_finite()) {
                            return Err(parse_err(st.line, *c, "beta must be positive and finite"));
                        }
                        beta = Some(*v);
                    }
                    _ => return Err(parse_err(st.line, *col, "expected `beta = <number>`")),
                }
            }
            Tok::Name(_) | Tok::LParen => {
                let (sources, target) = parse_edge(st, 0)?;
                edges.push(PendingEdge { role: EdgeRole::Bare, sources, target, line: st.line });
            }
            _ => return Err(parse_err(st.line, *col, "expected a statement")),
        }
    }

    // Resolve node kinds.
    let explicit = !declared.is_empty();
    let mut kinds = declared.clone();
    for e in &edges {
        for (n, c) in e.sources.iter().chain(std::iter::once(&e.target)) {
            if !kinds.contains_key(n) {
                if explicit {
                    return Err(parse_err(e.line, *c, format!("unknown node `{n}`")));
                }
                kinds.insert(n.clone(), inferred_kind(n));
            }
            if !order.contains(n) {
                order.push(n.clone());
            }
        }
    }
    for (a, b, line) in &ties {
        for (n, c) in [a, b] {
            if kinds.get(n) != Some(&NodeKind::Latent) {
                return Err(parse_err(*line, *c, format!("`{n}` is not a latent node")));
            }
        }
    }

    let mut encoder = Vec::new();
    let mut decoder = Vec::new();
    for e in edges {
        let names: Vec<String> = e.sources.iter().map(|(n, _)| n.clone()).collect();
        let target_latent = kinds[&e.target.0] == NodeKind::Latent;
        let sources_observed = names.iter().all(|n| kinds[n] == NodeKind::Observed);
        let is_encoder = match e.role {
            EdgeRole::Encoder => true,
            EdgeRole::Decoder => false,
            EdgeRole::Bare => target_latent && sources_observed,
        };
        if let Some((n, c)) = e.sources.iter().find(|(n, _)| *n == e.target.0) {
            return Err(parse_err(e.line, *c, format!("self-loop on `{n}`")));
        }
        let edge = Edge { sources: names, target: e.target.0, line: e.line };
        if is_encoder {
            encoder.push(edge);
        } else {
            decoder.push(edge);
        }
    }

    let spec = LossGraphSpec {
        nodes: order.into_iter().map(|n| {
            let k = kinds[&n];
            (n, k)
        }).collect(),
        encoder,
        decoder,
        beta: beta.unwrap_or(1.0),
        ties: ties.into_iter().map(|(a, b, _)| (a.0, b.0)).collect(),
    };
    validate(&spec)?;
    Ok(spec)
}

/// Reports the first edge of a cycle, if any.
fn find_cycle(edges: &[Edge]) -> Option<&Edge> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in edges {
        for s in &e.sources {
            adj.entry(s.as_str()).or_default().push(e.target.as_str());
        }
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn visit<'a>(n: &'a str, adj: &BTreeMap<&'a str, Vec<&'a str>>, state: &mut BTreeMap<&'a str, u8>) -> Option<&'a str> {
        state.insert(n, 1);
        for &m in adj.get(n).map(|v| v.as_slice()).unwrap_or(&[]) {
            match state.get(m).copied().unwrap_or(0) {
                1 => return Some(m),
                0 => {
                    if let Some(c) = visit(m, adj, state) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        state.insert(n, 2);
        None
    }
    let starts: Vec<&str> = adj.keys().copied().collect();
    for s in starts {
        if state.get(s).copied().unwrap_or(0) == 0 {
            if let Some(node) = visit(s, &adj, &mut state) {
                return edges.iter().find(|e| e.target == node);
            }
        }
    }
    None
}

fn validate(spec: &LossGraphSpec) -> Result<()> {
    for (edges, which) in [(&spec.encoder, "encoder"), (&spec.decoder, "decoder")] {
        if let Some(e) = find_cycle(edges) {
            return Err(parse_err(e.line, 1, format!("{which} graph has a cycle through `{}`", e.target)));
        }
    }
    // Every latent must be reachable from observed nodes through encoder edges.
    let mut reached: BTreeSet<&str> = spec.observed().into_iter().collect();
    loop {
        let before = reached.len();
        for e in &spec.encoder {
            if e.sources.iter().all(|s| reached.contains(s.as_str())) {
                reached.insert(e.target.as_str());
            }
        }
        if reached.len() == before {
            break;
        }
    }
    for l in spec.latents() {
        if !reached.contains(l) {
            let line = spec
                .decoder
                .iter()
                .find(|e| e.target == l || e.sources.iter().any(|s| s == l))
                .map(|e| e.line)
                .unwrap_or(1);
            return Err(parse_err(line, 1, format!("latent `{l}` has no encoder path from observed nodes")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_vae_structure() {
        let g = parse_graph("X->Zx; Zx->X").unwrap();
        assert_eq!(g.observed(), vec!["X"]);
        assert_eq!(g.latents(), vec!["Zx"]);
        assert_eq!(g.encoder.len(), 1);
        assert_eq!(g.decoder[0].target, "X");
        assert_eq!(g.beta, 1.0);
    }

    #[test]
    fn dvib_structure() {
        let g = parse_graph("X->Zx; Zx->Y").unwrap();
        assert_eq!(g.encoder[0].sources, vec!["X"]);
        assert_eq!(g.decoder[0].sources, vec!["Zx"]);
        assert_eq!(g.decoder[0].target, "Y");
    }

    #[test]
    fn keywords_groups_and_comments() {
        let text = "# joint encoder\nobserved X, Y\nlatent Z\nencode (X, Y) -> Z\ndecode Z -> X  # recon\ndecode Z -> Y\nbeta = 2.5\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.encoder[0].sources, vec!["X", "Y"]);
        assert_eq!(g.decoder.len(), 2);
        assert_eq!(g.beta, 2.5);
    }

    #[test]
    fn ties_are_recorded() {
        let g = parse_graph("X->Zx; Y->Zy; tie Zx Zy; Zx->Zy").unwrap();
        assert_eq!(g.ties, vec![("Zx".to_string(), "Zy".to_string())]);
        assert_eq!(g.decoder[0].sources, vec!["Zx"]);
    }

    #[test]
    fn cycles_are_rejected() {
        let err = parse_graph("X->Zx\ndecode Zx->Zy\ndecode Zy->Zx\nY->Zy").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("cycle"));
    }

    #[test]
    fn unknown_node_reports_location() {
        let err = parse_graph("observed X\nlatent Zx\nX -> Zx\nZx -> Q").unwrap_err();
        match err {
            Error::Parse { line, column, message } => {
                assert_eq!((line, column), (4, 7));
                assert!(message.contains("unknown node"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn latent_without_encoder_is_rejected() {
        let err = parse_graph("X->Zx; Zw->X").unwrap_err();
        assert!(err.to_string().contains("no encoder path"), "{err}");
    }

    #[test]
    fn syntax_errors_point_at_the_token() {
        match parse_graph("X -> Zx; Zx X").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 13)),
            e => panic!("{e}"),
        }
        assert!(parse_graph("beta = -1\nX->Zx").is_err());
        assert!(parse_graph("X->Zx; tie Zx X").is_err());
    }
}
