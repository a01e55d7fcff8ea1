/// Tokens of one function, in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const OPERATORS_3: [&str; 3] = ["<<=", ">>=", "..."];
const OPERATORS_2: [&str; 21] = [
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "::", "##",
];

pub const STRING_TOKEN: &str = "<STR>";
pub const CHAR_TOKEN: &str = "<CHR>";

/// Maximal-munch lexer for C-family code. Comments are dropped, string and
/// character literals collapse to `<STR>` / `<CHR>`, and an unterminated
/// literal or comment runs to the end of input.
pub fn tokenize(code: &str) -> TokenSequence {
    let chars: Vec<char> = code.chars().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && next == Some('/') {
            while i < n && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && next == Some('*') {
            i += 2;
            while i < n && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                i += 1;
            }
            i = (i + 2).min(n);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < n && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect());
        } else if c.is_ascii_digit() {
            let start = i;
            while i < n && (chars[i].is_ascii_hexdigit() || matches!(chars[i], '.' | 'x' | 'X')) {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect());
        } else if c == '"' || c == '\'' {
            i += 1;
            while i < n && chars[i] != c {
                // skip the escaped character
                i += if chars[i] == '\\' { 2 } else { 1 };
            }
            i = (i + 1).min(n);
            let token = if c == '"' { STRING_TOKEN } else { CHAR_TOKEN };
            tokens.push(token.to_string());
        } else {
            let rest: String = chars[i..n.min(i + 3)].iter().collect();
            let op = OPERATORS_3
                .iter()
                .chain(OPERATORS_2.iter())
                .find(|op| rest.starts_with(*op));
            match op {
                Some(op) => {
                    tokens.push(op.to_string());
                    i += op.chars().count();
                }
                None => {
                    tokens.push(c.to_string());
                    i += 1;
                }
            }
        }
    }
    TokenSequence { tokens }
}
