use std::fmt;

use serde::{Deserialize, Serialize};

use super::parse::{LossGraphSpec, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    EncoderKl,
    DecoderGaussianRecon,
    DecoderLatentMine,
}

/// One information term of a composite loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTerm {
    pub kind: TermKind,
    pub sources: Vec<String>,
    pub target: String,
    /// +1 for encoder terms, −β for decoder terms.
    pub coefficient: f64,
}

impl fmt::Display for LossTerm {
    /// `KL(X;Zx)`, `RECON(X|Zx)`, `MINE(Zx;Zy)`; multi-node sources are
    /// comma-joined.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = self.sources.join(",");
        match self.kind {
            TermKind::EncoderKl => write!(f, "KL({src};{})", self.target),
            TermKind::DecoderGaussianRecon => write!(f, "RECON({}|{src})", self.target),
            TermKind::DecoderLatentMine => write!(f, "MINE({src};{})", self.target),
        }
    }
}

/// Maps graph edges to loss terms. Edges that only involve observed nodes
/// are constants of the optimization and produce no term.
pub fn classify_terms(spec: &LossGraphSpec) -> Vec<LossTerm> {
    let kind = |n: &str| spec.kind(n).unwrap_or(NodeKind::Observed);
    let mut out = Vec::new();
    for e in &spec.encoder {
        if kind(&e.target) == NodeKind::Latent {
            out.push(LossTerm {
                kind: TermKind::EncoderKl,
                sources: e.sources.clone(),
                target: e.target.clone(),
                coefficient: 1.0,
            });
        }
    }
    for e in &spec.decoder {
        let latent_sources = e.sources.iter().any(|s| kind(s) == NodeKind::Latent);
        if !latent_sources {
            continue;
        }
        let term_kind = match kind(&e.target) {
            NodeKind::Observed => TermKind::DecoderGaussianRecon,
            NodeKind::Latent => TermKind::DecoderLatentMine,
        };
        out.push(LossTerm {
            kind: term_kind,
            sources: e.sources.clone(),
            target: e.target.clone(),
            coefficient: -spec.beta,
        });
    }
    out
}

/// Sorted term strings, for multiset comparison.
pub fn term_multiset(terms: &[LossTerm]) -> Vec<String> {
    let mut v: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
    v.sort();
    v
}
