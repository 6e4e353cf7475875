//! Line-oriented config lists: one entry per line, `#` starts a comment.

pub struct ListLine<'a> {
    /// 1-based line number in the source text.
    pub number: usize,
    pub content: &'a str,
}

/// Non-blank, comment-stripped lines of `text`.
pub fn lines(text: &str) -> impl Iterator<Item = ListLine<'_>> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let content = line.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some(ListLine { number: i + 1, content })
    })
}
