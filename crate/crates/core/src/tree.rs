//! Tree data type, validation, seeds and file formats.
//!
//! A [`Tree`] is stored in compressed adjacency form: vertex ids are dense
//! `0..n`, each neighbor list is sorted ascending, and every vertex carries
//! its provenance (the growth step it was born at and its class).

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("input contains no edges")]
    EmptyInput,
    #[error("self loop at vertex {0}")]
    SelfLoop(u64),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(u64, u64),
    #[error("edge {0}-{1} closes a cycle")]
    CycleDetected(u64, u64),
    #[error("input has {components} connected components")]
    DisconnectedInput { components: usize },
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("invalid seed: {0}")]
    InvalidSeed(String),
    #[error("invalid provenance: {0}")]
    InvalidProvenance(String),
}

/// Which cohort a vertex belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    #[serde(rename = "SEED")]
    Seed,
    /// Born on an edge (subdivision vertex under Φ), initial degree 2.
    A,
    /// Born as a leaf, initial degree 1.
    B,
}

impl VertexClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexClass::Seed => "SEED",
            VertexClass::A => "A",
            VertexClass::B => "B",
        }
    }
}

impl FromStr for VertexClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SEED" => Ok(VertexClass::Seed),
            "A" => Ok(VertexClass::A),
            "B" => Ok(VertexClass::B),
            other => Err(format!("unknown vertex class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(rename = "birth")]
    pub birth_step: u32,
    pub class: VertexClass,
}

impl Provenance {
    pub const SEED: Provenance = Provenance {
        birth_step: 0,
        class: VertexClass::Seed,
    };

    pub fn born(step: u32, class: VertexClass) -> Self {
        Provenance {
            birth_step: step,
            class,
        }
    }
}

/// An immutable tree on vertices `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Tree {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    provenance: Vec<Provenance>,
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tree")
            .field("vertex_count", &self.vertex_count())
            .field("edge_count", &self.edge_count())
            .finish()
    }
}

impl Tree {
    /// Builds the adjacency structure from an edge list whose endpoints are
    /// already dense ids below `provenance.len()`. Tree-ness is not checked.
    pub(crate) fn from_edges_unchecked(edges: &[(u32, u32)], provenance: Vec<Provenance>) -> Tree {
        let n = provenance.len();
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in edges {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0u32; 2 * edges.len()];
        for &(u, v) in edges {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Tree {
            offsets,
            neighbors,
            provenance,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.provenance.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn provenance(&self, v: usize) -> Provenance {
        self.provenance[v]
    }

    pub fn provenances(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    /// Edges `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Returns the same tree with every vertex relabeled as a seed vertex.
    pub fn into_seed(mut self) -> Tree {
        self.provenance.fill(Provenance::SEED);
        self
    }

    /// Replaces the provenance labels, checking their consistency.
    pub fn with_provenance(mut self, provenance: Vec<Provenance>) -> Result<Tree, TreeError> {
        if provenance.len() != self.vertex_count() {
            return Err(TreeError::InvalidProvenance(format!(
                "{} labels for {} vertices",
                provenance.len(),
                self.vertex_count()
            )));
        }
        for (v, p) in provenance.iter().enumerate() {
            let ok = match p.class {
                VertexClass::Seed => p.birth_step == 0,
                VertexClass::A | VertexClass::B => p.birth_step >= 1,
            };
            if !ok {
                return Err(TreeError::InvalidProvenance(format!(
                    "vertex {v} has class {} with birth step {}",
                    p.class.as_str(),
                    p.birth_step
                )));
            }
        }
        self.provenance = provenance;
        Ok(self)
    }

    /// Re-checks every structural invariant with a single BFS.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.vertex_count();
        if n == 0 {
            return Err("empty tree".into());
        }
        if self.neighbors.len() != 2 * (n - 1) {
            return Err(format!("{} adjacency entries for {n} vertices", self.neighbors.len()));
        }
        for u in 0..n {
            for &v in self.neighbors(u) {
                if self.neighbors(v as usize).binary_search(&(u as u32)).is_err() {
                    return Err(format!("asymmetric adjacency {u}->{v}"));
                }
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        let mut tree_edges = 0;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    tree_edges += 1;
                    queue.push_back(v);
                }
            }
        }
        if reached != n || tree_edges != n - 1 {
            return Err(format!("BFS reached {reached} of {n} vertices"));
        }
        for (v, p) in self.provenance.iter().enumerate() {
            let ok = match p.class {
                VertexClass::Seed => p.birth_step == 0,
                _ => p.birth_step >= 1,
            };
            if !ok {
                return Err(format!("vertex {v} has inconsistent provenance {p:?}"));
            }
        }
        Ok(())
    }
}

/// Validates an edge list as a tree.
///
/// Ids may be sparse; they are compacted to `0..n` preserving their order.
/// All vertices are labeled as seed vertices.
pub fn validate_tree(edges: &[(u64, u64)]) -> Result<Tree, TreeError> {
    if edges.is_empty() {
        return Err(TreeError::EmptyInput);
    }
    let mut normalized: Vec<(u64, u64)> = Vec::with_capacity(edges.len());
    for &(u, v) in edges {
        if u == v {
            return Err(TreeError::SelfLoop(u));
        }
        normalized.push((u.min(v), u.max(v)));
    }
    let mut sorted = normalized.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(TreeError::DuplicateEdge(w[0].0, w[0].1));
    }

    let mut ids: Vec<u64> = normalized.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let n = ids.len();
    if n > u32::MAX as usize {
        return Err(TreeError::InvalidSeed(format!("{n} vertices exceed the id range")));
    }
    let index = |id: u64| ids.binary_search(&id).expect("id present") as u32;

    let mut dsu = DisjointSets::new(n);
    let mut compact = Vec::with_capacity(edges.len());
    for &(u, v) in &normalized {
        let (a, b) = (index(u), index(v));
        if !dsu.union(a as usize, b as usize) {
            return Err(TreeError::CycleDetected(u, v));
        }
        compact.push((a, b));
    }
    let components = n - compact.len();
    if components != 1 {
        return Err(TreeError::DisconnectedInput { components });
    }
    Ok(Tree::from_edges_unchecked(&compact, vec![Provenance::SEED; n]))
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Where the initial tree comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSpec {
    Edge,
    Path(usize),
    Star(usize),
    File(PathBuf),
}

impl FromStr for SeedSpec {
    type Err = String;

    /// Accepts `edge`, `path:M`, `star:M` and `file:PATH`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        if lower == "edge" {
            return Ok(SeedSpec::Edge);
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("unrecognized seed {s:?}; expected edge, path:M, star:M or file:PATH"))?;
        let size = || {
            arg.parse::<usize>()
                .map_err(|_| format!("seed size {arg:?} is not a nonnegative integer"))
        };
        match kind.to_ascii_lowercase().as_str() {
            "path" => Ok(SeedSpec::Path(size()?)),
            "star" => Ok(SeedSpec::Star(size()?)),
            "file" => Ok(SeedSpec::File(PathBuf::from(arg))),
            _ => Err(format!("unrecognized seed kind {kind:?}")),
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Edge => write!(f, "edge"),
            SeedSpec::Path(m) => write!(f, "path:{m}"),
            SeedSpec::Star(m) => write!(f, "star:{m}"),
            SeedSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

pub fn resolve_seed(spec: &SeedSpec) -> Result<Tree, TreeError> {
    match spec {
        SeedSpec::Edge => validate_tree(&[(0, 1)]),
        SeedSpec::Path(m) => {
            if *m < 2 {
                return Err(TreeError::InvalidSeed(format!("path needs at least 2 vertices, got {m}")));
            }
            let edges: Vec<_> = (1..*m as u64).map(|i| (i - 1, i)).collect();
            validate_tree(&edges)
        }
        SeedSpec::Star(m) => {
            if *m < 2 {
                return Err(TreeError::InvalidSeed(format!("star needs at least 2 vertices, got {m}")));
            }
            let edges: Vec<_> = (1..*m as u64).map(|i| (0, i)).collect();
            validate_tree(&edges)
        }
        SeedSpec::File(path) => Ok(read_tree_file(path)?.into_seed()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    EdgeList,
    Dot,
    Json,
}

impl TreeFormat {
    /// Guesses the format from a file extension, defaulting to an edge list.
    pub fn from_path(path: &Path) -> TreeFormat {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(ext) if ext == "json" => TreeFormat::Json,
            Some(ext) if ext == "dot" || ext == "gv" => TreeFormat::Dot,
            _ => TreeFormat::EdgeList,
        }
    }
}

pub fn read_tree_file(path: &Path) -> Result<Tree, TreeError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => TreeError::FileNotFound(path.to_path_buf()),
        _ => TreeError::ParseError {
            line: 0,
            message: format!("{}: {e}", path.display()),
        },
    })?;
    parse(&bytes, TreeFormat::from_path(path))
}

pub fn serialize(tree: &Tree, format: TreeFormat) -> Vec<u8> {
    match format {
        TreeFormat::EdgeList => {
            let mut out = String::with_capacity(tree.edge_count() * 12);
            for (u, v) in tree.edges() {
                out.push_str(&format!("{u} {v}\n"));
            }
            out.into_bytes()
        }
        TreeFormat::Dot => {
            let mut out = String::from("graph T {\n");
            for (v, p) in tree.provenances().iter().enumerate() {
                out.push_str(&format!(
                    "  {v} [class=\"{}\", birth={}];\n",
                    p.class.as_str(),
                    p.birth_step
                ));
            }
            for (u, v) in tree.edges() {
                out.push_str(&format!("  {u} -- {v};\n"));
            }
            out.push_str("}\n");
            out.into_bytes()
        }
        TreeFormat::Json => {
            let doc = JsonTree {
                n: tree.vertex_count(),
                edges: tree.edges().map(|(u, v)| [u as u64, v as u64]).collect(),
                provenance: tree.provenances().to_vec(),
            };
            let mut out = serde_json::to_vec(&doc).expect("tree serializes");
            out.push(b'\n');
            out
        }
    }
}

pub fn parse(bytes: &[u8], format: TreeFormat) -> Result<Tree, TreeError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TreeError::ParseError {
        line: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    match format {
        TreeFormat::EdgeList => parse_edge_list(text),
        TreeFormat::Dot => parse_dot(text),
        TreeFormat::Json => parse_json(text),
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTree {
    n: usize,
    edges: Vec<[u64; 2]>,
    provenance: Vec<Provenance>,
}

fn parse_id(token: &str, line: usize) -> Result<u64, TreeError> {
    token.parse::<u64>().map_err(|_| TreeError::ParseError {
        line,
        message: format!("{token:?} is not a nonnegative integer id"),
    })
}

fn parse_edge_list(text: &str) -> Result<Tree, TreeError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(TreeError::ParseError {
                line: i + 1,
                message: format!("expected two ids, found {}", tokens.len()),
            });
        }
        edges.push((parse_id(tokens[0], i + 1)?, parse_id(tokens[1], i + 1)?));
    }
    validate_tree(&edges)
}

/// Reads the DOT dialect written by [`serialize`]: an undirected `graph`
/// with optional `id [class="..", birth=..];` vertex lines and `u -- v;`
/// edge lines.
fn parse_dot(text: &str) -> Result<Tree, TreeError> {
    let mut edges = Vec::new();
    let mut labels: BTreeMap<u64, Provenance> = BTreeMap::new();
    let mut opened = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
            continue;
        }
        if !opened {
            if line.starts_with("graph") && line.ends_with('{') {
                opened = true;
                continue;
            }
            return Err(TreeError::ParseError {
                line: lineno,
                message: "expected `graph <name> {`".into(),
            });
        }
        if line == "}" {
            break;
        }
        let body = line.trim_end_matches(';').trim();
        if let Some((u, v)) = body.split_once("--") {
            edges.push((parse_id(u.trim(), lineno)?, parse_id(v.trim(), lineno)?));
        } else if let Some((id, attrs)) = body.split_once('[') {
            let id = parse_id(id.trim(), lineno)?;
            labels.insert(id, parse_dot_attrs(attrs.trim_end_matches(']'), lineno)?);
        } else {
            return Err(TreeError::ParseError {
                line: lineno,
                message: format!("unrecognized statement {body:?}"),
            });
        }
    }
    let tree = validate_tree(&edges)?;
    if labels.is_empty() {
        return Ok(tree);
    }
    let mut ids: Vec<u64> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let provenance = ids
        .iter()
        .map(|id| labels.get(id).copied().unwrap_or(Provenance::SEED))
        .collect();
    tree.with_provenance(provenance)
}

fn parse_dot_attrs(attrs: &str, line: usize) -> Result<Provenance, TreeError> {
    let mut prov = Provenance::SEED;
    for pair in attrs.split(',') {
        let Some((key, value)) = pair.split_once('=') else {
            continue;
        };
        let value = value.trim().trim_matches('"');
        match key.trim() {
            "class" => {
                prov.class = value
                    .parse()
                    .map_err(|message| TreeError::ParseError { line, message })?;
            }
            "birth" => {
                prov.birth_step = value.parse().map_err(|_| TreeError::ParseError {
                    line,
                    message: format!("bad birth step {value:?}"),
                })?;
            }
            _ => {}
        }
    }
    Ok(prov)
}

fn parse_json(text: &str) -> Result<Tree, TreeError> {
    let doc: JsonTree = serde_json::from_str(text).map_err(|e| TreeError::ParseError {
        line: e.line(),
        message: e.to_string(),
    })?;
    let edges: Vec<(u64, u64)> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
    let tree = validate_tree(&edges)?;
    let max_id = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0);
    if tree.vertex_count() != doc.n || max_id as usize + 1 != doc.n {
        return Err(TreeError::ParseError {
            line: 0,
            message: format!("declared n = {} but edges span ids 0..={max_id}", doc.n),
        });
    }
    tree.with_provenance(doc.provenance)
}
