//! Hierarchical view of a notebook: headers nest under the nearest preceding
//! header of a smaller level, prose hangs off its header and code cells are
//! leaves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::segment_sentences;
use crate::markdown::{split_blocks, Block};
use crate::notebook::{CellKind, NotebookDocument};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0} is not a code leaf")]
    NotALeaf(NodeId),
    #[error("no node with id {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    FakeRoot,
    Header,
    Text,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub kind: NodeKind,
    /// 1..=6, headers only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header_level: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_cell: Option<usize>,
    /// Heading title or prose; empty for code and the fake root.
    #[serde(default)]
    pub text: String,
    pub children: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookTree {
    pub root: NodeId,
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub node: NodeId,
    pub sentences: Vec<String>,
    pub depth: u32,
}

/// Markdown surrounding a code leaf, nearest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkdownContext {
    pub entries: Vec<ContextEntry>,
}

impl MarkdownContext {
    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.sentences.is_empty())
    }

    /// Sentences in priority order with their depth.
    pub fn sentences(&self) -> impl Iterator<Item = (&str, u32)> {
        self.entries
            .iter()
            .flat_map(|e| e.sentences.iter().map(move |s| (s.as_str(), e.depth)))
    }
}

impl NotebookTree {
    pub fn node(&self, id: NodeId) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    /// Code leaves in cell order.
    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Code)
    }

    pub fn leaf_for_cell(&self, cell: usize) -> Option<NodeId> {
        self.leaves()
            .find(|n| n.source_cell == Some(cell))
            .map(|n| n.id)
    }

    /// Checks the structural invariants against the document the tree was
    /// built from: cell coverage, code nodes as leaves, strictly increasing
    /// header levels along every path and consistent parent links.
    pub fn verify(&self, doc: &NotebookDocument) -> Result<(), String> {
        let roots: Vec<_> = self.nodes.iter().filter(|n| n.parent.is_none()).collect();
        if roots.len() != 1 || roots[0].id != self.root {
            return Err(format!("expected exactly one root, found {}", roots.len()));
        }
        let mut covered = vec![false; doc.len()];
        for node in &self.nodes {
            match (node.kind, node.source_cell) {
                (NodeKind::FakeRoot, None) => {}
                (NodeKind::FakeRoot, Some(_)) => {
                    return Err(format!("fake root {} maps to a cell", node.id))
                }
                (_, None) => return Err(format!("node {} maps to no cell", node.id)),
                (kind, Some(cell)) => {
                    let Some(c) = doc.cell(cell) else {
                        return Err(format!("node {} maps to missing cell {cell}", node.id));
                    };
                    let expected = if kind == NodeKind::Code {
                        CellKind::Code
                    } else {
                        CellKind::Markdown
                    };
                    if c.kind != expected {
                        return Err(format!("node {} kind does not match cell {cell}", node.id));
                    }
                    covered[cell] = true;
                }
            }
            if node.kind == NodeKind::Code && !node.children.is_empty() {
                return Err(format!("code node {} has children", node.id));
            }
            for &child in &node.children {
                if self.nodes.get(child).and_then(|c| c.parent) != Some(node.id) {
                    return Err(format!(
                        "child {child} of {} has a bad parent link",
                        node.id
                    ));
                }
            }
            if node.kind == NodeKind::Header {
                let level = node.header_level.unwrap_or(0);
                if !(1..=6).contains(&level) {
                    return Err(format!("header {} has level {level}", node.id));
                }
                let mut up = node.parent;
                while let Some(p) = up {
                    let pn = &self.nodes[p];
                    if pn.kind == NodeKind::Header && pn.header_level.unwrap_or(0) >= level {
                        return Err(format!(
                            "header {} nested under header {p} of level >=",
                            node.id
                        ));
                    }
                    up = pn.parent;
                }
            }
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            return Err(format!("cell {missing} is not covered by any node"));
        }
        Ok(())
    }
}

struct Builder {
    nodes: Vec<TreeNode>,
}

impl Builder {
    fn push(
        &mut self,
        kind: NodeKind,
        level: Option<u8>,
        cell: Option<usize>,
        text: String,
        parent: Option<NodeId>,
    ) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            kind,
            header_level: level,
            source_cell: cell,
            text,
            children: Vec::new(),
            parent,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }
}

/// Build the outline tree. Always succeeds; a notebook without headers gets a
/// fake root holding every cell.
pub fn build_tree(doc: &NotebookDocument) -> NotebookTree {
    let mut b = Builder { nodes: Vec::new() };
    let fake = b.push(NodeKind::FakeRoot, None, None, String::new(), None);
    // open headers, innermost last
    let mut open: Vec<(u8, NodeId)> = Vec::new();

    for cell in &doc.cells {
        let scope = |open: &Vec<(u8, NodeId)>| open.last().map(|&(_, id)| id).unwrap_or(fake);
        match cell.kind {
            CellKind::Code => {
                let parent = scope(&open);
                b.push(
                    NodeKind::Code,
                    None,
                    Some(cell.index),
                    String::new(),
                    Some(parent),
                );
            }
            CellKind::Markdown => {
                let blocks = split_blocks(&cell.source);
                if blocks.is_empty() {
                    let parent = scope(&open);
                    b.push(
                        NodeKind::Text,
                        None,
                        Some(cell.index),
                        String::new(),
                        Some(parent),
                    );
                    continue;
                }
                for block in blocks {
                    match block {
                        Block::Heading { level, title } => {
                            while open.last().is_some_and(|&(l, _)| l >= level) {
                                open.pop();
                            }
                            let parent = scope(&open);
                            let id = b.push(
                                NodeKind::Header,
                                Some(level),
                                Some(cell.index),
                                title,
                                Some(parent),
                            );
                            open.push((level, id));
                        }
                        Block::Prose(text) => {
                            let parent = scope(&open);
                            b.push(NodeKind::Text, None, Some(cell.index), text, Some(parent));
                        }
                    }
                }
            }
        }
    }

    let top = &b.nodes[fake].children;
    if top.len() == 1 && b.nodes[top[0]].kind == NodeKind::Header {
        // single top-level header: it becomes the root, ids shift down by one
        let mut nodes: Vec<TreeNode> = b.nodes.into_iter().skip(1).collect();
        for node in &mut nodes {
            node.id -= 1;
            node.parent = match node.parent {
                Some(0) | None => None,
                Some(p) => Some(p - 1),
            };
            for c in &mut node.children {
                *c -= 1;
            }
        }
        NotebookTree { root: 0, nodes }
    } else {
        NotebookTree {
            root: fake,
            nodes: b.nodes,
        }
    }
}

/// Markdown context of a code leaf: the prose run governing the leaf (the
/// text siblings right before it, or before the nearest preceding code
/// sibling) at depth 0, followed by every ancestor header. Depth counts the
/// headers passed on the way up, so the parent header is depth 0.
pub fn leaf_context(tree: &NotebookTree, leaf: NodeId) -> Result<MarkdownContext, TreeError> {
    let node = tree.node(leaf).ok_or(TreeError::UnknownNode(leaf))?;
    if node.kind != NodeKind::Code {
        return Err(TreeError::NotALeaf(leaf));
    }
    let mut entries = Vec::new();

    if let Some(parent) = node.parent {
        let siblings = &tree.nodes[parent].children;
        let pos = siblings.iter().position(|&c| c == leaf).unwrap_or(0);
        let mut before = siblings[..pos]
            .iter()
            .rev()
            .map(|&id| &tree.nodes[id])
            .peekable();
        while before.peek().is_some_and(|n| n.kind == NodeKind::Code) {
            before.next();
        }
        for sib in before.take_while(|n| n.kind == NodeKind::Text) {
            entries.push(ContextEntry {
                node: sib.id,
                sentences: sentences_of(&sib.text),
                depth: 0,
            });
        }
    }

    let mut depth = 0;
    let mut up = node.parent;
    while let Some(id) = up {
        let n = &tree.nodes[id];
        if n.kind == NodeKind::Header {
            entries.push(ContextEntry {
                node: id,
                sentences: sentences_of(&n.text),
                depth,
            });
            depth += 1;
        }
        up = n.parent;
    }
    Ok(MarkdownContext { entries })
}

fn sentences_of(text: &str) -> Vec<String> {
    segment_sentences(text)
        .into_iter()
        .map(|s| s.text)
        .collect()
}
