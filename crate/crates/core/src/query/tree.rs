use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::concept_graph::ConceptId;

/// A primitive of a query tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    And,
    Or,
    Not,
    Terminal(ConceptId),
}

impl Node {
    pub fn arity(self) -> usize {
        match self {
            Node::And | Node::Or => 2,
            Node::Not => 1,
            Node::Terminal(_) => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    /// Byte offset into the parsed text.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing operand")]
    MissingOperand,
    #[error("expected ')'")]
    ExpectedClose,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("expected an operator after '('")]
    ExpectedOperator,
    #[error("empty expression")]
    Empty,
    #[error("trailing input")]
    TrailingInput,
    #[error("nesting too deep")]
    TooDeep,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty tree")]
    Empty,
    #[error("node {0} is missing operands")]
    MissingOperands(usize),
    #[error("trailing nodes after position {0}")]
    Trailing(usize),
}

/// Boolean query over concept terminals, stored in prefix order.
///
/// Prefix order makes every subtree a contiguous slice, so subtree exchange
/// is a splice and evaluation is a single reverse pass with a stack.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryTree {
    nodes: Vec<Node>,
}

impl QueryTree {
    /// Validates arity over a prefix-ordered node list.
    pub fn from_prefix(nodes: Vec<Node>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let end = span_end(&nodes, 0).ok_or(TreeError::MissingOperands(0))?;
        if end != nodes.len() {
            return Err(TreeError::Trailing(end));
        }
        Ok(Self { nodes })
    }

    pub fn terminal(id: ConceptId) -> Self {
        Self {
            nodes: vec![Node::Terminal(id)],
        }
    }

    pub fn and(a: Self, b: Self) -> Self {
        Self::binary(Node::And, a, b)
    }

    pub fn or(a: Self, b: Self) -> Self {
        Self::binary(Node::Or, a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Self) -> Self {
        let mut nodes = Vec::with_capacity(a.nodes.len() + 1);
        nodes.push(Node::Not);
        nodes.extend(a.nodes);
        Self { nodes }
    }

    fn binary(op: Node, a: Self, b: Self) -> Self {
        let mut nodes = Vec::with_capacity(a.nodes.len() + b.nodes.len() + 1);
        nodes.push(op);
        nodes.extend(a.nodes);
        nodes.extend(b.nodes);
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Edges from the root to the deepest terminal; a lone terminal has depth 0.
    pub fn depth(&self) -> usize {
        let mut stack: Vec<usize> = Vec::with_capacity(self.nodes.len());
        for node in self.nodes.iter().rev() {
            let d = match node {
                Node::Terminal(_) => 0,
                Node::Not => stack.pop().unwrap() + 1,
                Node::And | Node::Or => {
                    let a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    a.max(b) + 1
                }
            };
            stack.push(d);
        }
        stack[0]
    }

    /// Concept ids at the leaves, in prefix order (with repeats).
    pub fn terminals(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Terminal(id) => Some(*id),
            _ => None,
        })
    }

    /// Arity sequence; equal for trees that differ only in their primitives.
    pub fn shape(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.arity()).collect()
    }

    /// Exclusive end of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        span_end(&self.nodes, start).expect("tree is well formed")
    }

    pub fn subtree(&self, start: usize) -> &[Node] {
        &self.nodes[start..self.subtree_end(start)]
    }

    /// Copy of `self` with the subtree at `start` replaced by `donor`.
    pub fn with_subtree(&self, start: usize, donor: &[Node]) -> Self {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - start) + donor.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(donor);
        nodes.extend_from_slice(&self.nodes[end..]);
        debug_assert!(span_end(&nodes, 0) == Some(nodes.len()));
        Self { nodes }
    }

    /// Replaces primitives without changing arity at any position.
    pub(crate) fn nodes_mut(&mut self) -> &mut [Node] {
        &mut self.nodes
    }

    /// Bottom-up evaluation with caller-supplied leaf values and connectives.
    pub fn fold<T, E>(
        &self,
        mut leaf: impl FnMut(ConceptId) -> Result<T, E>,
        mut not: impl FnMut(T) -> T,
        mut and: impl FnMut(T, T) -> T,
        mut or: impl FnMut(T, T) -> T,
    ) -> Result<T, E> {
        let mut stack: Vec<T> = Vec::with_capacity(self.nodes.len());
        for node in self.nodes.iter().rev() {
            let v = match *node {
                Node::Terminal(id) => leaf(id)?,
                Node::Not => not(stack.pop().unwrap()),
                Node::And => {
                    let a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    and(a, b)
                }
                Node::Or => {
                    let a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    or(a, b)
                }
            };
            stack.push(v);
        }
        Ok(stack.pop().unwrap())
    }

    /// Boolean evaluation given a truth value per terminal.
    pub fn eval<E>(&self, leaf: impl FnMut(ConceptId) -> Result<bool, E>) -> Result<bool, E> {
        self.fold(leaf, |a| !a, |a, b| a && b, |a, b| a || b)
    }

    fn write_from(&self, i: usize, f: &mut fmt::Formatter<'_>) -> Result<usize, fmt::Error> {
        match self.nodes[i] {
            Node::Terminal(id) => {
                write!(f, "w{}", id.0)?;
                Ok(i + 1)
            }
            op => {
                f.write_str(match op {
                    Node::And => "(AND",
                    Node::Or => "(OR",
                    _ => "(NOT",
                })?;
                let mut next = i + 1;
                for _ in 0..op.arity() {
                    f.write_str(" ")?;
                    next = self.write_from(next, f)?;
                }
                f.write_str(")")?;
                Ok(next)
            }
        }
    }
}

fn span_end(nodes: &[Node], start: usize) -> Option<usize> {
    let mut need = 1usize;
    for (i, node) in nodes.iter().enumerate().skip(start) {
        need = need - 1 + node.arity();
        if need == 0 {
            return Some(i + 1);
        }
    }
    None
}

/// Canonical prefix form, e.g. `(OR (AND w1 w2) (AND w3 (NOT w4)))`.
impl fmt::Display for QueryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_from(0, f).map(|_| ())
    }
}

impl FromStr for QueryTree {
    type Err = ParseError;

    /// Accepts the canonical form. Parentheses around an operator and its
    /// operands are optional since arities are fixed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser {
            tokens: lex(s),
            pos: 0,
            len: s.len(),
        };
        if parser.tokens.is_empty() {
            return Err(ParseError {
                position: 0,
                kind: ParseErrorKind::Empty,
            });
        }
        let mut nodes = Vec::new();
        parser.expr(&mut nodes, 0)?;
        if let Some(&(at, _)) = parser.tokens.get(parser.pos) {
            return Err(ParseError {
                position: at,
                kind: ParseErrorKind::TrailingInput,
            });
        }
        Ok(Self { nodes })
    }
}

const MAX_NESTING: usize = 512;

fn lex(s: &str) -> Vec<(usize, &str)> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(st) = start.take() {
                tokens.push((st, &s[st..i]));
            }
            if !c.is_whitespace() {
                tokens.push((i, &s[i..i + 1]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        tokens.push((st, &s[st..]));
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
    len: usize,
}

impl Parser<'_> {
    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.here(),
            kind,
        }
    }

    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|t| t.1)
    }

    fn expr(&mut self, out: &mut Vec<Node>, nesting: usize) -> Result<(), ParseError> {
        if nesting > MAX_NESTING {
            return Err(self.err(ParseErrorKind::TooDeep));
        }
        let Some(tok) = self.peek() else {
            return Err(self.err(ParseErrorKind::MissingOperand));
        };
        match tok {
            "(" => {
                self.pos += 1;
                let op = self.peek().and_then(operator);
                let Some(op) = op else {
                    return Err(self.err(ParseErrorKind::ExpectedOperator));
                };
                self.pos += 1;
                self.operands(op, out, nesting)?;
                if self.peek() != Some(")") {
                    return Err(self.err(ParseErrorKind::ExpectedClose));
                }
                self.pos += 1;
                Ok(())
            }
            ")" => Err(self.err(ParseErrorKind::MissingOperand)),
            word => {
                if let Some(op) = operator(word) {
                    self.pos += 1;
                    return self.operands(op, out, nesting);
                }
                let id = word
                    .strip_prefix('w')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|d| d.parse::<u32>().ok());
                match id {
                    Some(id) => {
                        out.push(Node::Terminal(ConceptId(id)));
                        self.pos += 1;
                        Ok(())
                    }
                    None => Err(self.err(ParseErrorKind::UnexpectedToken(word.to_owned()))),
                }
            }
        }
    }

    fn operands(&mut self, op: Node, out: &mut Vec<Node>, nesting: usize) -> Result<(), ParseError> {
        out.push(op);
        for _ in 0..op.arity() {
            if matches!(self.peek(), None | Some(")")) {
                return Err(self.err(ParseErrorKind::MissingOperand));
            }
            self.expr(out, nesting + 1)?;
        }
        Ok(())
    }
}

fn operator(word: &str) -> Option<Node> {
    match word {
        "AND" => Some(Node::And),
        "OR" => Some(Node::Or),
        "NOT" => Some(Node::Not),
        _ => None,
    }
}
