//! Whitespace and punctuation tokenizer used for serialization, statistics
//! and lexical analysis.
//!
//! Punctuation is split from words (`hand,` -> `hand ,`), clitics become
//! their own tokens (`He's` -> `He 's`) and negative contractions keep the
//! `n` separate from the apostrophe (`don't` -> `do n 't`).

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut out);
    }
    out
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c.is_alphanumeric() {
            let start = i;
            i += 1;
            while i < n {
                let c = chars[i];
                let prev = chars[i - 1];
                let next = chars.get(i + 1).copied();
                let joins = c.is_alphanumeric()
                    || (c == '-' && prev.is_alphanumeric() && next.is_some_and(char::is_alphanumeric))
                    || ((c == '.' || c == ',') && prev.is_ascii_digit() && next.is_some_and(|d| d.is_ascii_digit()));
                if !joins {
                    break;
                }
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            // Clitic: apostrophe followed by letters.
            if i < n && is_apostrophe(chars[i]) && chars.get(i + 1).is_some_and(|c| c.is_alphabetic()) {
                let cstart = i;
                i += 1;
                while i < n && chars[i].is_alphabetic() {
                    i += 1;
                }
                let clitic: String = chars[cstart..i].iter().collect();
                let negation =
                    clitic[1..].eq_ignore_ascii_case("t") && word.chars().count() > 1 && word.ends_with(['n', 'N']);
                if negation {
                    let split = word.len() - 1;
                    out.push(word[..split].to_string());
                    out.push(word[split..].to_string());
                } else {
                    out.push(word);
                }
                out.push(clitic);
            } else {
                out.push(word);
            }
        } else {
            let start = i;
            i += 1;
            while i < n && chars[i] == c {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        }
    }
}

fn is_clitic(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if is_apostrophe(c)) && chars.next().is_some_and(char::is_alphabetic)
}

fn attaches_left(tok: &str) -> bool {
    tok.chars()
        .all(|c| matches!(c, '.' | ',' | '?' | '!' | ':' | ';' | ')' | ']' | '}' | '%'))
}

fn attaches_right(tok: &str) -> bool {
    matches!(tok, "(" | "[" | "{" | "$")
}

/// Rebuilds readable text from tokens produced by [`tokenize`].
///
/// This is the left inverse of `tokenize` for ordinary prose; whitespace
/// inside the original text is normalized to single spaces.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = true;
    let mut open_quote = false;
    for (i, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        let next = tokens.get(i + 1).map(|t| t.as_ref());
        let negation_n = (tok == "n" || tok == "N")
            && next.is_some_and(|t| t.len() > 1 && is_clitic(t) && t[1..].eq_ignore_ascii_case("t"));
        let mut glue = glue_next || attaches_left(tok) || is_clitic(tok) || negation_n;
        glue_next = attaches_right(tok);
        if tok == "\"" {
            if open_quote {
                glue = true;
            } else {
                glue_next = true;
            }
            open_quote = !open_quote;
        }
        if !glue {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}
