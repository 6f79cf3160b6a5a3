//! Versioned plain-text format for protocol instances.
//!
//! ```text
//! qsteg-text 1
//! begin cc-code
//!   n = 2
//!   povm : begin povm
//!     element : matrix 2 2
//!       1e0 0e0 0e0 0e0
//!       0e0 0e0 0e0 0e0
//!   end
//! end
//! ```
//!
//! Matrices are row-major with each complex entry written as `re im` in
//! shortest round-trip base-10 form.

use std::fmt::Write as _;

use super::cc::{CcCode, StegoCcCode};
use super::qc_cc::{QcCode, StegoQcCcCode};
use super::resolvability::ResolvabilityCode;
use super::{Channel, Dm, Mat, Povm};
use crate::channel::IsometryT;
use crate::error::{Error, Result};
use crate::linalg::cplx;
use crate::state::{DensityMatrixT, HermitianOperatorT, PovmT};

pub const FORMAT_HEADER: &str = "qsteg-text";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(String),
    Reals(Vec<f64>),
    Ints(Vec<usize>),
    Matrix(Mat),
    Node(Node),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub tag: String,
    pub entries: Vec<(String, Value)>,
}

impl Node {
    pub fn new(tag: &str) -> Self {
        Self { tag: tag.into(), entries: Vec::new() }
    }

    pub fn scalar(mut self, key: &str, v: impl std::fmt::Display) -> Self {
        self.entries.push((key.into(), Value::Scalar(v.to_string())));
        self
    }

    pub fn real(self, key: &str, v: f64) -> Self {
        self.scalar(key, format!("{v:e}"))
    }

    pub fn reals(mut self, key: &str, v: &[f64]) -> Self {
        self.entries.push((key.into(), Value::Reals(v.to_vec())));
        self
    }

    pub fn ints(mut self, key: &str, v: &[usize]) -> Self {
        self.entries.push((key.into(), Value::Ints(v.to_vec())));
        self
    }

    pub fn matrix(mut self, key: &str, m: &Mat) -> Self {
        self.entries.push((key.into(), Value::Matrix(m.clone())));
        self
    }

    pub fn child(mut self, key: &str, n: Node) -> Self {
        self.entries.push((key.into(), Value::Node(n)));
        self
    }

    fn all<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a Value> + 'a {
        let key = key.to_string();
        self.entries.iter().filter(move |(k, _)| *k == key).map(|(_, v)| v)
    }

    fn one(&self, key: &str) -> Result<&Value> {
        self.all(key).next().ok_or_else(|| Error::Parse { line: 0, msg: format!("{}: missing `{key}`", self.tag) })
    }

    pub fn get_scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        match self.one(key)? {
            Value::Scalar(s) => s
                .parse()
                .map_err(|_| Error::Parse { line: 0, msg: format!("{}: bad value for `{key}`: {s}", self.tag) }),
            _ => Err(Error::Parse { line: 0, msg: format!("{}: `{key}` is not a scalar", self.tag) }),
        }
    }

    pub fn get_ints(&self, key: &str) -> Result<Vec<usize>> {
        match self.one(key)? {
            Value::Ints(v) => Ok(v.clone()),
            _ => Err(Error::Parse { line: 0, msg: format!("{}: `{key}` is not an integer list", self.tag) }),
        }
    }

    pub fn get_reals(&self, key: &str) -> Result<Vec<f64>> {
        match self.one(key)? {
            Value::Reals(v) => Ok(v.clone()),
            _ => Err(Error::Parse { line: 0, msg: format!("{}: `{key}` is not a real list", self.tag) }),
        }
    }

    pub fn get_matrix(&self, key: &str) -> Result<Mat> {
        match self.one(key)? {
            Value::Matrix(m) => Ok(m.clone()),
            _ => Err(Error::Parse { line: 0, msg: format!("{}: `{key}` is not a matrix", self.tag) }),
        }
    }

    pub fn matrices(&self, key: &str) -> Vec<Mat> {
        self.all(key)
            .filter_map(|v| match v {
                Value::Matrix(m) => Some(m.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn children(&self, key: &str) -> Vec<&Node> {
        self.all(key)
            .filter_map(|v| match v {
                Value::Node(n) => Some(n),
                _ => None,
            })
            .collect()
    }

    pub fn get_child(&self, key: &str) -> Result<&Node> {
        self.children(key)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("{}: missing child `{key}`", self.tag) })
    }

    fn expect_tag(&self, tag: &str) -> Result<()> {
        if self.tag == tag {
            Ok(())
        } else {
            Err(Error::Parse { line: 0, msg: format!("expected `{tag}`, found `{}`", self.tag) })
        }
    }
}

fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:e}")
}

fn write_node(out: &mut String, node: &Node, depth: usize) {
    let pad = "  ".repeat(depth + 1);
    for (k, v) in &node.entries {
        match v {
            Value::Scalar(s) => {
                let _ = writeln!(out, "{pad}{k} = {s}");
            }
            Value::Reals(xs) => {
                let body: Vec<String> = xs.iter().map(|&x| num(x)).collect();
                let _ = writeln!(out, "{pad}{k} : reals {}", xs.len());
                let _ = writeln!(out, "{pad}  {}", body.join(" "));
            }
            Value::Ints(xs) => {
                let body: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{pad}{k} : ints {}", xs.len());
                let _ = writeln!(out, "{pad}  {}", body.join(" "));
            }
            Value::Matrix(m) => {
                let _ = writeln!(out, "{pad}{k} : matrix {} {}", m.nrows(), m.ncols());
                for r in 0..m.nrows() {
                    let row: Vec<String> = (0..m.ncols())
                        .map(|c| format!("{} {}", num(m[(r, c)].re), num(m[(r, c)].im)))
                        .collect();
                    let _ = writeln!(out, "{pad}  {}", row.join(" "));
                }
            }
            Value::Node(n) => {
                let _ = writeln!(out, "{pad}{k} : begin {}", n.tag);
                write_node(out, n, depth + 1);
                let _ = writeln!(out, "{pad}end");
            }
        }
    }
}

pub fn to_text(node: &Node) -> String {
    let mut out = format!("{FORMAT_HEADER} {FORMAT_VERSION}\nbegin {}\n", node.tag);
    write_node(&mut out, node, 0);
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let l = self.lines.get(self.pos).copied();
        self.pos += 1;
        l.ok_or_else(|| Error::Parse { line: self.lines.last().map_or(1, |l| l.0), msg: "unexpected end of input".into() })
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_nums<T: std::str::FromStr>(line: usize, s: &str, expect: usize) -> Result<Vec<T>> {
    let v = s
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| perr(line, format!("bad number `{t}`"))))
        .collect::<Result<Vec<T>>>()?;
    if v.len() != expect {
        return Err(perr(line, format!("expected {expect} numbers, found {}", v.len())));
    }
    Ok(v)
}

fn parse_body(lines: &mut Lines, tag: &str) -> Result<Node> {
    let mut node = Node::new(tag);
    loop {
        let (ln, line) = lines.next()?;
        if line == "end" {
            return Ok(node);
        }
        if let Some((k, v)) = line.split_once(" = ") {
            node.entries.push((k.trim().into(), Value::Scalar(v.trim().into())));
            continue;
        }
        let (k, spec) = line.split_once(" : ").ok_or_else(|| perr(ln, format!("cannot parse `{line}`")))?;
        let parts: Vec<&str> = spec.split_whitespace().collect();
        let value = match parts.as_slice() {
            ["begin", t] => Value::Node(parse_body(lines, t)?),
            ["reals", n] => {
                let n: usize = n.parse().map_err(|_| perr(ln, "bad length"))?;
                let (l2, body) = lines.next()?;
                Value::Reals(parse_nums(l2, body, n)?)
            }
            ["ints", n] => {
                let n: usize = n.parse().map_err(|_| perr(ln, "bad length"))?;
                if n == 0 {
                    let (l2, body) = lines.next()?;
                    if !body.is_empty() {
                        return Err(perr(l2, "expected an empty list"));
                    }
                    Value::Ints(Vec::new())
                } else {
                    let (l2, body) = lines.next()?;
                    Value::Ints(parse_nums(l2, body, n)?)
                }
            }
            ["matrix", r, c] => {
                let r: usize = r.parse().map_err(|_| perr(ln, "bad row count"))?;
                let c: usize = c.parse().map_err(|_| perr(ln, "bad column count"))?;
                let mut m = Mat::zeros(r, c);
                for i in 0..r {
                    let (l2, body) = lines.next()?;
                    let xs: Vec<f64> = parse_nums(l2, body, 2 * c)?;
                    for j in 0..c {
                        m[(i, j)] = cplx(xs[2 * j], xs[2 * j + 1]);
                    }
                }
                Value::Matrix(m)
            }
            _ => return Err(perr(ln, format!("unknown value kind `{spec}`"))),
        };
        node.entries.push((k.trim().into(), value));
    }
}

pub fn from_text(text: &str) -> Result<Node> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).collect();
    let mut it = Lines { lines, pos: 0 };
    let (ln, head) = it.next()?;
    let version = head
        .strip_prefix(FORMAT_HEADER)
        .map(str::trim)
        .ok_or_else(|| perr(ln, format!("missing `{FORMAT_HEADER}` header")))?;
    if version != FORMAT_VERSION.to_string() {
        return Err(perr(ln, format!("unsupported version `{version}`")));
    }
    let (ln, open) = it.next()?;
    let tag = open.strip_prefix("begin ").ok_or_else(|| perr(ln, "expected `begin <tag>`"))?;
    let node = parse_body(&mut it, tag.trim())?;
    if let Some(&(ln, extra)) = it.lines.get(it.pos) {
        if !extra.is_empty() {
            return Err(perr(ln, "trailing content"));
        }
    }
    Ok(node)
}

pub trait ToNode {
    fn to_node(&self) -> Node;
}

pub trait FromNode: Sized {
    fn from_node(node: &Node) -> Result<Self>;
}

impl ToNode for Dm {
    fn to_node(&self) -> Node {
        Node::new("density-matrix").matrix("data", self.matrix())
    }
}

impl FromNode for Dm {
    fn from_node(node: &Node) -> Result<Self> {
        node.expect_tag("density-matrix")?;
        DensityMatrixT::new(node.get_matrix("data")?)
    }
}

impl ToNode for Channel {
    fn to_node(&self) -> Node {
        self.kraus()
            .iter()
            .fold(Node::new("channel").scalar("dim_in", self.dim_in()).scalar("dim_out", self.dim_out()), |n, k| {
                n.matrix("kraus", k)
            })
    }
}

impl FromNode for Channel {
    fn from_node(node: &Node) -> Result<Self> {
        node.expect_tag("channel")?;
        let ch = Channel::new(node.matrices("kraus"))?;
        if ch.dim_in() != node.get_scalar::<usize>("dim_in")? || ch.dim_out() != node.get_scalar::<usize>("dim_out")? {
            return Err(Error::Parse { line: 0, msg: "channel dimensions disagree with Kraus operators".into() });
        }
        Ok(ch)
    }
}

impl ToNode for Povm {
    fn to_node(&self) -> Node {
        self.elements().iter().fold(Node::new("povm"), |n, e| n.matrix("element", e.matrix()))
    }
}

impl FromNode for Povm {
    fn from_node(node: &Node) -> Result<Self> {
        node.expect_tag("povm")?;
        let els = node.matrices("element").into_iter().map(HermitianOperatorT::new).collect::<Result<Vec<_>>>()?;
        PovmT::new(els)
    }
}

impl ToNode for CcCode {
    fn to_node(&self) -> Node {
        let n = Node::new("cc-code").scalar("n", self.n());
        let n = self.codewords().iter().fold(n, |n, c| n.child("codeword", c.to_node()));
        n.child("povm", self.povm().to_node()).child("channel", self.channel().to_node())
    }
}

impl FromNode for CcCode {
    fn from_node(node: &Node) -> Result<Self> {
        node.expect_tag("cc-code")?;
        let words = node.children("codeword").into_iter().map(Dm::from_node).collect::<Result<Vec<_>>>()?;
        CcCode::new(
            node.get_scalar("n")?,
            words,
            Povm::from_node(node.get_child("povm")?)?,
            Channel::from_node(node.get_child("channel")?)?,
        )
    }
}

impl ToNode for QcCode {
    fn to_node(&self) -> Node {
        Node::new("qc-code")
            .matrix("isometry", self.isometry().matrix())
            .child("decoder", self.decoder().to_node())
            .child("channel", self.channel().to_node())
            .ints("correctable", self.correctable())
            .real("c", self.c())
    }
}

impl FromNode for QcCode {
    fn from_node(node: &Node) -> Result<Self> {
        node.expect_tag("qc-code")?;
        QcCode::new(
            IsometryT::new(node.get_matrix("isometry")?)?,
            Channel::from_node(node.get_child("decoder")?)?,
            Channel::from_node(node.get_child("channel")?)?,
            node.get_ints("correctable")?,
        )
    }
}

impl ToNode for StegoCcCode {
    fn to_node(&self) -> Node {
        let a = &self.audit;
        let mut n = Node::new("stego-cc-code")
            .scalar("m", self.m)
            .scalar("mbar", self.mbar)
            .scalar("keys", self.keys)
            .real("dist_trace", a.dist_trace)
            .real("p_decode", a.p_decode)
            .real("zeta_achieved", a.zeta_achieved)
            .real("eps_cover", a.eps_cover)
            .real("key_bits", a.key_bits);
        for (enc, dec) in self.encoders.iter().zip(&self.decoders) {
            let key = enc.iter().fold(Node::new("key"), |k, e| k.child("encoder", e.to_node()));
            n = n.child("key", key.child("decoder", dec.to_node()));
        }
        n
    }
}

impl ToNode for StegoQcCcCode {
    fn to_node(&self) -> Node {
        let a = &self.audit;
        let n = Node::new("stego-qc-cc-code")
            .scalar("mbar", self.mbar)
            .ints("g", &self.g)
            .ints("mu", &self.mu)
            .reals("p_j", &a.p_j)
            .real("c", a.c)
            .real("zeta_achieved", a.zeta_achieved)
            .real("decode_min", a.decode_min)
            .real("dist_max", a.dist_max);
        let n = self.encoders.iter().fold(n, |n, e| n.child("encoder", e.to_node()));
        n.child("decoder", self.decoder.to_node())
    }
}

impl ToNode for ResolvabilityCode {
    fn to_node(&self) -> Node {
        let n = Node::new("resolvability-code")
            .scalar("m", self.m)
            .scalar("k", self.k)
            .real("reliability", self.reliability)
            .real("distance", self.distance);
        let n = self.codebooks.iter().fold(n, |n, b| n.ints("codebook", b));
        self.decoders.iter().fold(n, |n, d| n.child("decoder", d.to_node()))
    }
}
