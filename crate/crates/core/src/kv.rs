//! `key=value` text files with `#` comments, shared by every config file.

use std::collections::BTreeMap;

/// A value with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KvError {
    pub line: usize,
    pub msg: String,
}

pub type Entries = BTreeMap<String, Entry>;

pub fn parse(text: &str) -> Result<Entries, KvError> {
    let mut out = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(KvError {
                line,
                msg: format!("expected key=value, got `{body}`"),
            });
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(KvError {
                line,
                msg: "empty key".into(),
            });
        }
        let entry = Entry {
            line,
            value: v.trim().to_string(),
        };
        if let Some(prev) = out.insert(key.to_string(), entry) {
            return Err(KvError {
                line,
                msg: format!("duplicate key `{key}` (first on line {})", prev.line),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blanks_and_first_equals() {
        let e = parse("# c\n\n a = b=c \nport=22\n").unwrap();
        assert_eq!(e["a"], Entry { line: 3, value: "b=c".into() });
        assert_eq!(e["port"].line, 4);
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(parse("a=1\nnope\n").unwrap_err().line, 2);
        assert_eq!(parse("a=1\na=2\n").unwrap_err().line, 2);
        assert_eq!(parse("=2\n").unwrap_err().line, 1);
    }
}
