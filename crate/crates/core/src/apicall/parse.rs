use thiserror::Error;

use super::{ApiCall, InvokeType};

/// A call prefix was found but its body could not be read.
///
/// This is distinct from "not a call": a malformed attempt still counts as
/// an attempt to invoke.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed {} call: {reason}", invoke.prefix())]
pub struct MalformedCall {
    pub invoke: InvokeType,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Eq,
    Colon,
    Comma,
    LBrace,
    RBrace,
}

const PREFIXES: [(&str, InvokeType); 2] = [
    ("apicall", InvokeType::ApiCall),
    ("entityquery", InvokeType::EntityQuery),
];

/// Parse the first `ApiCall(` / `EntityQuery(` found in `text`.
///
/// Returns `Ok(None)` when the text contains no call prefix at all.
pub fn parse_api_call(text: &str) -> Result<Option<ApiCall>, MalformedCall> {
    let chars: Vec<char> = text.chars().collect();
    let Some((invoke, body_start)) = find_prefix(&chars) else {
        return Ok(None);
    };
    let malformed = |reason: &str| MalformedCall {
        invoke,
        reason: reason.to_string(),
    };
    let tokens = lex_body(&chars[body_start..]).map_err(|r| malformed(r))?;
    build_call(invoke, tokens)
        .map(Some)
        .map_err(|r| malformed(&r))
}

fn find_prefix(chars: &[char]) -> Option<(InvokeType, usize)> {
    for start in 0..chars.len() {
        for (word, invoke) in PREFIXES {
            let n = word.chars().count();
            if start + n > chars.len() {
                continue;
            }
            let matches = chars[start..start + n]
                .iter()
                .zip(word.chars())
                .all(|(c, w)| c.to_ascii_lowercase() == w);
            if !matches {
                continue;
            }
            let mut i = start + n;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '(' {
                return Some((invoke, i + 1));
            }
        }
    }
    None
}

fn closers_for(open: char) -> Option<&'static [char]> {
    match open {
        '\'' => Some(&['\'', '\u{2019}']),
        '`' => Some(&['\'', '`', '\u{2019}']),
        '\u{2018}' => Some(&['\u{2019}', '\'']),
        '"' => Some(&['"']),
        '\u{201C}' => Some(&['\u{201D}', '"']),
        _ => None,
    }
}

fn next_non_ws(chars: &[char], from: usize) -> Option<char> {
    chars[from..].iter().copied().find(|c| !c.is_whitespace())
}

fn closes_here(chars: &[char], after: usize) -> bool {
    matches!(
        next_non_ws(chars, after),
        None | Some(',' | ':' | '}' | ')' | '=')
    )
}

/// Tokenize a call body up to the closing paren.
fn lex_body(chars: &[char]) -> Result<Vec<Token>, &'static str> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            ')' => return Ok(tokens),
            '=' => tokens.push(Token::Eq),
            ':' => tokens.push(Token::Colon),
            ',' => tokens.push(Token::Comma),
            '{' => tokens.push(Token::LBrace),
            '}' => tokens.push(Token::RBrace),
            _ => {
                if let Some(closers) = closers_for(c) {
                    let (word, next) = read_quoted(chars, i + 1, closers)?;
                    tokens.push(Token::Word(word));
                    i = next;
                    continue;
                }
                let (word, next) = read_bare(chars, i);
                tokens.push(Token::Word(word));
                i = next;
                continue;
            }
        }
        i += 1;
    }
    Err("unbalanced parentheses")
}

fn read_quoted(
    chars: &[char],
    mut i: usize,
    closers: &[char],
) -> Result<(String, usize), &'static str> {
    let mut out = String::new();
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' {
            if i + 1 < chars.len() {
                out.push(chars[i + 1]);
                i += 2;
                continue;
            }
            return Err("dangling escape");
        }
        if closers.contains(&c) && closes_here(chars, i + 1) {
            return Ok((out, i + 1));
        }
        out.push(c);
        i += 1;
    }
    Err("unterminated quote")
}

fn read_bare(chars: &[char], mut i: usize) -> (String, usize) {
    let start = i;
    let mut depth = 0usize;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '(' => depth += 1,
            ')' if depth > 0 => depth -= 1,
            ')' | ',' | '=' | '{' | '}' if depth == 0 => break,
            ':' if depth == 0 => {
                let next = chars.get(i + 1).copied();
                let separator = match next {
                    None => true,
                    Some(n) => n.is_whitespace() || n == '{' || closers_for(n).is_some(),
                };
                if separator {
                    break;
                }
            }
            _ => {}
        }
        i += 1;
    }
    let word: String = chars[start..i].iter().collect();
    (word.trim().to_string(), i)
}

fn is_params_keyword(word: &str) -> bool {
    let w = word.trim().to_ascii_lowercase();
    w == "parameters" || w == "params"
}

fn build_call(invoke: InvokeType, tokens: Vec<Token>) -> Result<ApiCall, String> {
    let mut call = ApiCall::new(invoke, String::new());
    let mut method: Option<String> = None;
    let mut in_params = false;
    let mut depth = 0i32;
    let mut segment: Vec<Token> = Vec::new();
    let mut first_segment = true;

    let flush = |segment: &mut Vec<Token>,
                     in_params: &mut bool,
                     method: &mut Option<String>,
                     call: &mut ApiCall,
                     first: &mut bool|
     -> Result<(), String> {
        let mut seg: &[Token] = segment;
        if let [Token::Word(k), Token::Eq, rest @ ..] = seg {
            if is_params_keyword(k) && rest.len() != 1 {
                *in_params = true;
                seg = rest;
            }
        }
        let was_first = *first;
        *first = false;
        match seg {
            [] => {}
            [Token::Word(k), Token::Eq | Token::Colon, Token::Word(v)] => {
                if !*in_params && k.trim().eq_ignore_ascii_case("method") && method.is_none() {
                    *method = Some(v.clone());
                } else {
                    call.params.entry(k.trim().to_string()).or_insert_with(|| v.clone());
                }
            }
            [Token::Word(k), Token::Eq | Token::Colon] => {
                if !*in_params && k.trim().eq_ignore_ascii_case("method") {
                    return Err("empty method".into());
                }
                call.params.entry(k.trim().to_string()).or_default();
            }
            [Token::Word(m)] if was_first && method.is_none() => {
                *method = Some(m.clone());
            }
            _ => return Err(format!("unrecognized parameter segment {seg:?}")),
        }
        segment.clear();
        Ok(())
    };

    for token in tokens {
        match token {
            Token::LBrace => {
                depth += 1;
                in_params = true;
            }
            Token::RBrace => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced braces".into());
                }
            }
            Token::Comma => flush(
                &mut segment,
                &mut in_params,
                &mut method,
                &mut call,
                &mut first_segment,
            )?,
            other => segment.push(other),
        }
    }
    flush(
        &mut segment,
        &mut in_params,
        &mut method,
        &mut call,
        &mut first_segment,
    )?;
    if depth != 0 {
        return Err("unbalanced braces".into());
    }
    match method {
        Some(m) if !m.trim().is_empty() => {
            call.method = m;
            Ok(call)
        }
        _ => Err("missing method".into()),
    }
}
