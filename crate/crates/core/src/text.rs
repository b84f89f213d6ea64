//! Small text helpers shared by generation and parsing code.

pub fn first_words(text: &str, n: usize) -> String {
    text.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

/// Cut to at most `max` bytes, backing off to the last whitespace.
pub fn truncate_at_word(text: &str, max: usize) -> String {
    if text.len() <= max {
        return text.to_string();
    }
    let mut cut = max;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    let head = &text[..cut];
    let head = match head.rfind(char::is_whitespace) {
        Some(i) if i > 0 => &head[..i],
        _ => head,
    };
    head.trim_end().to_string()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
