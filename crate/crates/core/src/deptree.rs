//! Target-side dependency tree data model, projectivity validation, and
//! parallel-corpus file I/O.
//!
//! Trees are unlabeled: a token carries its surface form, its subword pieces
//! and a PoS tag, and the tree is the head relation alone. Non-projective
//! trees can be represented but are rejected before oracle use.
//!
//! File formats:
//! - target corpus: UTF-8, one block per sentence, blocks separated by exactly
//!   one blank line. Each token line has 5 tab-separated columns:
//!   `INDEX  FORM  PIECES  POS  HEAD` where INDEX is 1-based, PIECES joins
//!   subword pieces with `|` (a literal `|` inside a piece is escaped as
//!   `\|`, a literal backslash as `\\`), and HEAD is 0 for the root.
//! - source corpus: UTF-8, one sentence per line, tokens separated by single
//!   spaces.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Subword continuation marker: a piece ending in `@@` glues to the next one.
pub const CONTINUATION_MARKER: &str = "@@";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("token has empty pieces")]
    EmptyPieces,
    #[error("token has empty PoS tag")]
    EmptyPos,
    #[error("pieces {pieces:?} do not reassemble form {form:?}")]
    FormMismatch { form: String, pieces: Vec<String> },
    #[error("tree has no tokens")]
    EmptyTree,
    #[error("head {head} out of range for {n} tokens")]
    HeadOutOfRange { head: usize, n: usize },
    #[error("token {index} is its own head")]
    SelfHead { index: usize },
    #[error("tree has {count} roots, expected exactly one")]
    RootCount { count: usize },
    #[error("head relation contains a cycle through token {index}")]
    Cycle { index: usize },
    #[error("source has {source} sentences but target has {target}")]
    CountMismatch { source: usize, target: usize },
}

fn parse_err(line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        msg: msg.into(),
    }
}

/// One surface token: its form, subword segmentation and PoS tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub pieces: Vec<String>,
    pub pos: String,
}

impl Token {
    pub fn new(
        form: impl Into<String>,
        pieces: Vec<String>,
        pos: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let form = form.into();
        let pos = pos.into();
        if pieces.is_empty() || pieces.iter().any(|p| p.is_empty()) {
            return Err(CorpusError::EmptyPieces);
        }
        if pos.is_empty() {
            return Err(CorpusError::EmptyPos);
        }
        let merged = merge_pieces_to_form(&pieces);
        if merged != form {
            return Err(CorpusError::FormMismatch { form, pieces });
        }
        Ok(Token { form, pieces, pos })
    }
}

/// Reassemble a single form from one token's pieces, resolving continuation
/// markers on non-final pieces.
pub fn merge_pieces_to_form(pieces: &[String]) -> String {
    let mut out = String::new();
    for (i, piece) in pieces.iter().enumerate() {
        if i + 1 < pieces.len() {
            out.push_str(piece.strip_suffix(CONTINUATION_MARKER).unwrap_or(piece));
        } else {
            out.push_str(piece);
        }
    }
    out
}

/// Merge a flat stream of subword tokens into surface words: a token ending
/// in the continuation marker glues to its successor.
pub fn merge_subwords(pieces: &[String]) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for piece in pieces {
        match piece.strip_suffix(CONTINUATION_MARKER) {
            Some(stem) => current.push_str(stem),
            None => {
                current.push_str(piece);
                words.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// A projectivity-checkable dependency tree. Tokens are indexed 1..=n in
/// surface order; `heads[i-1]` is the head of token i, with 0 denoting the
/// root attachment. Construction validates the single-root and acyclicity
/// invariants; projectivity is checked separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    tokens: Vec<Token>,
    heads: Vec<usize>,
}

impl DepTree {
    pub fn new(tokens: Vec<Token>, heads: Vec<usize>) -> Result<Self, CorpusError> {
        let n = tokens.len();
        if n == 0 {
            return Err(CorpusError::EmptyTree);
        }
        assert_eq!(heads.len(), n, "tokens/heads length mismatch");
        let mut roots = 0usize;
        for (i, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(CorpusError::HeadOutOfRange { head: h, n });
            }
            if h == i + 1 {
                return Err(CorpusError::SelfHead { index: i + 1 });
            }
            if h == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(CorpusError::RootCount { count: roots });
        }
        // Walk each token towards the root; a walk longer than n tokens
        // means we are inside a cycle.
        for start in 1..=n {
            let mut cur = start;
            let mut hops = 0usize;
            while cur != 0 {
                cur = heads[cur - 1];
                hops += 1;
                if hops > n {
                    return Err(CorpusError::Cycle { index: start });
                }
            }
        }
        Ok(DepTree { tokens, heads })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based surface index.
    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Head of the token at 1-based `index` (0 = root).
    pub fn head(&self, index: usize) -> usize {
        self.heads[index - 1]
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    /// 1-based index of the root token.
    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).unwrap() + 1
    }

    /// Left dependents of `head` in surface order (all strictly left of it).
    pub fn left_children(&self, head: usize) -> Vec<usize> {
        (1..head).filter(|&d| self.heads[d - 1] == head).collect()
    }

    /// Right dependents of `head` in surface order (all strictly right of it).
    pub fn right_children(&self, head: usize) -> Vec<usize> {
        (head + 1..=self.len())
            .filter(|&d| self.heads[d - 1] == head)
            .collect()
    }

    /// Total number of subword pieces over all tokens.
    pub fn piece_count(&self) -> usize {
        self.tokens.iter().map(|t| t.pieces.len()).sum()
    }

    /// Surface piece sequence in token order.
    pub fn pieces_in_order(&self) -> Vec<String> {
        self.tokens
            .iter()
            .flat_map(|t| t.pieces.iter().cloned())
            .collect()
    }

    /// Surface forms in token order.
    pub fn forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.clone()).collect()
    }

    /// True iff `ancestor` lies on the head path from `node` to the root.
    fn is_descendant_of(&self, node: usize, ancestor: usize) -> bool {
        let mut cur = node;
        while cur != 0 {
            cur = self.heads[cur - 1];
            if cur == ancestor {
                return true;
            }
        }
        false
    }

    /// A tree is projective iff for every arc (h, d), every token strictly
    /// between h and d is a descendant of h.
    pub fn is_projective(&self) -> bool {
        for d in 1..=self.len() {
            let h = self.heads[d - 1];
            if h == 0 {
                continue;
            }
            let (lo, hi) = if h < d { (h, d) } else { (d, h) };
            for between in lo + 1..hi {
                if !self.is_descendant_of(between, h) {
                    return false;
                }
            }
        }
        true
    }
}

/// A source sentence paired with its target dependency tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: DepTree,
}

fn escape_piece(piece: &str) -> String {
    piece.replace('\\', "\\\\").replace('|', "\\|")
}

fn split_pieces(field: &str, line: usize) -> Result<Vec<String>, CorpusError> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('|') => current.push('|'),
                Some('\\') => current.push('\\'),
                other => {
                    return Err(parse_err(
                        line,
                        format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default()),
                    ))
                }
            },
            '|' => pieces.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    pieces.push(current);
    Ok(pieces)
}

fn parse_block(lines: &[(usize, String)]) -> Result<DepTree, CorpusError> {
    let mut tokens = Vec::with_capacity(lines.len());
    let mut heads = Vec::with_capacity(lines.len());
    for (i, (lineno, text)) in lines.iter().enumerate() {
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 5 {
            return Err(parse_err(
                *lineno,
                format!("expected 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(*lineno, format!("bad token index {:?}", cols[0])))?;
        if index != i + 1 {
            return Err(parse_err(
                *lineno,
                format!("token index {} out of sequence (expected {})", index, i + 1),
            ));
        }
        let pieces = split_pieces(cols[2], *lineno)?;
        let head: usize = cols[4]
            .parse()
            .map_err(|_| parse_err(*lineno, format!("bad head {:?}", cols[4])))?;
        let token = Token::new(cols[1], pieces, cols[3])
            .map_err(|e| parse_err(*lineno, e.to_string()))?;
        tokens.push(token);
        heads.push(head);
    }
    let first_line = lines.first().map(|(l, _)| *l).unwrap_or(0);
    DepTree::new(tokens, heads).map_err(|e| parse_err(first_line, e.to_string()))
}

/// Read a target corpus: one [`DepTree`] per blank-line-separated block.
pub fn read_target_corpus<R: Read>(reader: R) -> Result<Vec<DepTree>, CorpusError> {
    let reader = BufReader::new(reader);
    let mut trees = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();
    let mut last_blank = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.is_empty() {
            if block.is_empty() {
                return Err(parse_err(
                    lineno,
                    if last_blank {
                        "consecutive blank lines (blocks are separated by exactly one)"
                    } else {
                        "blank line before any token line"
                    },
                ));
            }
            trees.push(parse_block(&block)?);
            block.clear();
            last_blank = true;
        } else {
            block.push((lineno, line));
            last_blank = false;
        }
    }
    if !block.is_empty() {
        trees.push(parse_block(&block)?);
    }
    Ok(trees)
}

pub fn read_target_corpus_path(path: impl AsRef<Path>) -> Result<Vec<DepTree>, CorpusError> {
    read_target_corpus(File::open(path)?)
}

/// Write a target corpus in the 5-column block format.
pub fn write_target_corpus<W: Write>(writer: &mut W, trees: &[DepTree]) -> Result<(), CorpusError> {
    for (i, tree) in trees.iter().enumerate() {
        if i > 0 {
            writeln!(writer)?;
        }
        write_tree_block(writer, tree)?;
    }
    Ok(())
}

pub fn write_tree_block<W: Write>(writer: &mut W, tree: &DepTree) -> Result<(), CorpusError> {
    for i in 1..=tree.len() {
        let token = tree.token(i);
        let pieces = token
            .pieces
            .iter()
            .map(|p| escape_piece(p))
            .collect::<Vec<_>>()
            .join("|");
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}",
            i,
            token.form,
            pieces,
            token.pos,
            tree.head(i)
        )?;
    }
    Ok(())
}

/// Read a source corpus: one pre-segmented sentence per line.
pub fn read_source_corpus<R: Read>(reader: R) -> Result<Vec<Vec<String>>, CorpusError> {
    let reader = BufReader::new(reader);
    let mut sentences = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            return Err(parse_err(idx + 1, "empty source line"));
        }
        sentences.push(line.split(' ').map(String::from).collect());
    }
    Ok(sentences)
}

/// Pair source line i with target block i.
pub fn read_parallel(
    source_path: impl AsRef<Path>,
    target_path: impl AsRef<Path>,
) -> Result<Vec<SentencePair>, CorpusError> {
    let sources = read_source_corpus(File::open(source_path)?)?;
    let targets = read_target_corpus_path(target_path)?;
    pair_up(sources, targets)
}

pub fn pair_up(
    sources: Vec<Vec<String>>,
    targets: Vec<DepTree>,
) -> Result<Vec<SentencePair>, CorpusError> {
    if sources.len() != targets.len() {
        return Err(CorpusError::CountMismatch {
            source: sources.len(),
            target: targets.len(),
        });
    }
    Ok(sources
        .into_iter()
        .zip(targets)
        .map(|(source, target)| SentencePair { source, target })
        .collect())
}

/// Outcome of the training-data length filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterStats {
    pub retained: usize,
    pub dropped: usize,
}

/// Keep pairs whose source length is at most `max_source_len`, preserving
/// order.
pub fn filter_by_length(
    pairs: Vec<SentencePair>,
    max_source_len: usize,
) -> (Vec<SentencePair>, FilterStats) {
    assert!(max_source_len >= 1, "length threshold must be at least 1");
    let total = pairs.len();
    let kept: Vec<SentencePair> = pairs
        .into_iter()
        .filter(|p| p.source.len() <= max_source_len)
        .collect();
    let stats = FilterStats {
        retained: kept.len(),
        dropped: total - kept.len(),
    };
    (kept, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(form: &str, pieces: &[&str], pos: &str) -> Token {
        Token::new(form, pieces.iter().map(|s| s.to_string()).collect(), pos).unwrap()
    }

    fn chain_tree(n: usize) -> DepTree {
        // token i headed by i-1; token 1 is the root
        let tokens = (0..n).map(|i| tok(&format!("w{i}"), &[&format!("w{i}")], "NN")).collect();
        let heads = (0..n).collect();
        DepTree::new(tokens, heads).unwrap()
    }

    #[test]
    fn chain_is_projective() {
        assert!(chain_tree(3).is_projective());
    }

    #[test]
    fn nested_left_arcs_projective() {
        // heads = [2, 0, 4, 2]: arcs 2->1, 4->3, 2->4; token 3 sits between
        // 2 and 4 and is a descendant of 2 via 4.
        let tokens = (0..4).map(|i| tok(&format!("w{i}"), &[&format!("w{i}")], "NN")).collect();
        let tree = DepTree::new(tokens, vec![2, 0, 4, 2]).unwrap();
        assert!(tree.is_projective());
    }

    #[test]
    fn crossing_arcs_not_projective() {
        // heads = [3, 4, 0, 3]: arc (4,2) crosses arc (3,1).
        let tokens = (0..4).map(|i| tok(&format!("w{i}"), &[&format!("w{i}")], "NN")).collect();
        let tree = DepTree::new(tokens, vec![3, 4, 0, 3]).unwrap();
        assert!(!tree.is_projective());
    }

    #[test]
    fn multi_root_rejected() {
        let tokens = vec![tok("a", &["a"], "X"), tok("b", &["b"], "X")];
        match DepTree::new(tokens, vec![0, 0]) {
            Err(CorpusError::RootCount { count: 2 }) => {}
            other => panic!("expected RootCount error, got {other:?}"),
        }
    }

    #[test]
    fn cycle_rejected() {
        let tokens = vec![
            tok("a", &["a"], "X"),
            tok("b", &["b"], "X"),
            tok("c", &["c"], "X"),
        ];
        match DepTree::new(tokens, vec![0, 3, 2]) {
            Err(CorpusError::Cycle { .. }) => {}
            other => panic!("expected Cycle error, got {other:?}"),
        }
    }

    #[test]
    fn token_form_must_match_pieces() {
        assert!(Token::new("until", vec!["Un@@".into(), "til".into()], "IN").is_err());
        let t = Token::new("Until", vec!["Un@@".into(), "til".into()], "IN").unwrap();
        assert_eq!(t.form, "Until");
    }

    #[test]
    fn merge_subwords_resolves_markers() {
        let pieces: Vec<String> = ["Un@@", "til", "the", "le@@", "ase"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(merge_subwords(&pieces), vec!["Until", "the", "lease"]);
    }

    #[test]
    fn minimal_block_parses() {
        let trees = read_target_corpus("1\tis\tis\tVBZ\t0\n".as_bytes()).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].len(), 1);
        assert_eq!(trees[0].token(1).pos, "VBZ");
    }

    #[test]
    fn head_out_of_range_reported() {
        let text = "1\ta\ta\tX\t5\n2\tb\tb\tX\t0\n3\tc\tc\tX\t2\n";
        let err = read_target_corpus(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn blank_line_separates_blocks() {
        let text = "1\ta\ta\tX\t0\n\n1\tb\tb\tY\t0\n";
        let trees = read_target_corpus(text.as_bytes()).unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[1].token(1).pos, "Y");
    }

    #[test]
    fn double_blank_line_rejected() {
        let text = "1\ta\ta\tX\t0\n\n\n1\tb\tb\tY\t0\n";
        assert!(read_target_corpus(text.as_bytes()).is_err());
    }

    #[test]
    fn pieces_escaping_roundtrips() {
        let token = Token::new("a|b\\c", vec!["a|b\\c".into()], "SYM").unwrap();
        let tree = DepTree::new(vec![token], vec![0]).unwrap();
        let mut buf = Vec::new();
        write_target_corpus(&mut buf, std::slice::from_ref(&tree)).unwrap();
        let back = read_target_corpus(&buf[..]).unwrap();
        assert_eq!(back[0], tree);
    }

    #[test]
    fn read_write_read_is_identity() {
        let trees = vec![chain_tree(4), chain_tree(1)];
        let mut buf = Vec::new();
        write_target_corpus(&mut buf, &trees).unwrap();
        let back = read_target_corpus(&buf[..]).unwrap();
        assert_eq!(back, trees);
        let mut buf2 = Vec::new();
        write_target_corpus(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn parallel_count_mismatch() {
        let sources = vec![vec!["a".to_string()], vec!["b".to_string()]];
        let targets = vec![chain_tree(1), chain_tree(1), chain_tree(2)];
        match pair_up(sources, targets) {
            Err(CorpusError::CountMismatch { source: 2, target: 3 }) => {}
            other => panic!("expected CountMismatch, got {other:?}"),
        }
    }

    #[test]
    fn source_line_splits_on_single_spaces() {
        let s = read_source_corpus("a b c\n".as_bytes()).unwrap();
        assert_eq!(s, vec![vec!["a".to_string(), "b".into(), "c".into()]]);
    }

    #[test]
    fn length_filter_boundary_inclusive() {
        let mk = |n: usize| SentencePair {
            source: (0..n).map(|i| format!("s{i}")).collect(),
            target: chain_tree(1),
        };
        let (kept, stats) = filter_by_length(vec![mk(5), mk(10), mk(11)], 10);
        assert_eq!(kept.len(), 2);
        assert_eq!(stats, FilterStats { retained: 2, dropped: 1 });

        let (kept, stats) = filter_by_length(vec![mk(2), mk(3)], 1);
        assert!(kept.is_empty());
        assert_eq!(stats.dropped, 2);

        let (kept, _) = filter_by_length(vec![mk(2), mk(3)], usize::MAX);
        assert_eq!(kept.len(), 2);
    }
}
