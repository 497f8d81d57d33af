//! Reader for sentiment treebank files: one labeled, parenthesized tree per
//! line, e.g. `(3 (2 It) (4 works))`.

use std::collections::HashSet;
use std::path::Path;

use super::{RawExample, Source, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeBody {
    Leaf(String),
    Node(Vec<SstTree>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SstTree {
    pub label: u8,
    pub body: TreeBody,
}

impl SstTree {
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.body {
            TreeBody::Leaf(w) => out.push(w),
            TreeBody::Node(children) => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Pre-order traversal, the tree itself first.
    pub fn subtrees(&self) -> Vec<&SstTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            if let TreeBody::Node(children) = &t.body {
                stack.extend(children.iter().rev());
            }
        }
        out
    }

    pub fn to_ptb_string(&self) -> String {
        let mut s = String::new();
        self.write_ptb(&mut s);
        s
    }

    fn write_ptb(&self, s: &mut String) {
        s.push('(');
        s.push_str(&self.label.to_string());
        match &self.body {
            TreeBody::Leaf(w) => {
                s.push(' ');
                s.push_str(w);
            }
            TreeBody::Node(children) => {
                for c in children {
                    s.push(' ');
                    c.write_ptb(s);
                }
            }
        }
        s.push(')');
    }
}

struct TreeParser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> TreeParser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: format!("{} (column {})", msg.into(), self.pos + 1),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected '{want}', found '{c}'"))),
            None => Err(self.err(format!("expected '{want}', found end of line"))),
        }
    }

    fn atom(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn tree(&mut self) -> Result<SstTree> {
        self.skip_ws();
        self.expect('(')?;
        let label_str = self.atom();
        if label_str.is_empty() {
            return Err(self.err("missing node label"));
        }
        let label: i64 = label_str
            .parse()
            .map_err(|_| self.err(format!("label {label_str:?} is not an integer")))?;
        if !(0..=4).contains(&label) {
            return Err(Error::Data(format!(
                "line {}: label {label} outside 0-4",
                self.line
            )));
        }
        self.skip_ws();
        let body = match self.peek() {
            Some('(') => {
                let mut children = Vec::new();
                while self.peek() == Some('(') {
                    children.push(self.tree()?);
                    self.skip_ws();
                }
                TreeBody::Node(children)
            }
            Some(')') | None => return Err(self.err("empty node")),
            Some(_) => TreeBody::Leaf(self.atom().to_string()),
        };
        self.skip_ws();
        self.expect(')')?;
        Ok(SstTree {
            label: label as u8,
            body,
        })
    }
}

/// Parses a single tree line. `line_no` is used in error messages.
pub fn parse_tree(line: &str, line_no: usize) -> Result<SstTree> {
    let mut p = TreeParser {
        src: line,
        pos: 0,
        line: line_no,
    };
    let tree = p.tree()?;
    p.skip_ws();
    if p.pos != line.len() {
        return Err(p.err("trailing characters after tree"));
    }
    Ok(tree)
}

pub fn parse_trees(text: &str) -> Result<Vec<SstTree>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_tree(l, i + 1))
        .collect()
}

/// Maps a 0–4 sentiment label to the task's class id; `None` drops the item.
pub fn map_label(task: Task, label: u8) -> Option<usize> {
    match task {
        Task::SstFine => Some(label as usize),
        Task::SstCoarse => match label {
            0 | 1 => Some(0),
            3 | 4 => Some(1),
            _ => None,
        },
        Task::Subjectivity => None,
    }
}

/// Turns trees into labeled examples.
///
/// With `include_phrases`, every labeled subtree becomes an example,
/// deduplicated by `(text, label)` across the whole input; otherwise only
/// the root sentences are kept.
pub fn examples_from_trees(trees: &[SstTree], task: Task, include_phrases: bool) -> Result<Vec<RawExample>> {
    if task == Task::Subjectivity {
        return Err(Error::Input("treebank files cannot feed the subjectivity task".into()));
    }
    let mut seen: HashSet<(String, usize)> = HashSet::new();
    let mut out = Vec::new();
    for tree in trees {
        let nodes = if include_phrases {
            tree.subtrees()
        } else {
            vec![tree]
        };
        for (k, node) in nodes.into_iter().enumerate() {
            let Some(label) = map_label(task, node.label) else {
                continue;
            };
            let tokens: Vec<String> = node.leaves().into_iter().map(str::to_string).collect();
            if tokens.is_empty() {
                continue;
            }
            if include_phrases && !seen.insert((tokens.join(" "), label)) {
                continue;
            }
            out.push(RawExample {
                text_tokens: tokens,
                label,
                source: if k == 0 { Source::SstSentence } else { Source::SstPhrase },
            });
        }
    }
    Ok(out)
}

pub fn parse_sst_str(text: &str, task: Task, include_phrases: bool) -> Result<Vec<RawExample>> {
    examples_from_trees(&parse_trees(text)?, task, include_phrases)
}

pub fn parse_sst_trees(path: &Path, task: Task, include_phrases: bool) -> Result<Vec<RawExample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sst_str(&text, task, include_phrases)
}
