use std::collections::BTreeMap;

/// One synthesized program: buggy and fixed sources plus a test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub function_name: String,
    pub buggy: String,
    pub fixed: String,
    pub test: String,
}

fn between<'t>(text: &'t str, open: &str, close: &[&str]) -> Option<&'t str> {
    let start = text.find(open)? + open.len();
    let rest = &text[start..];
    let end = close.iter().filter_map(|c| rest.find(c)).min()?;
    Some(&rest[..end])
}

fn tidy(block: &str) -> String {
    let block = block.strip_prefix('\n').unwrap_or(block);
    let mut s = block.trim_end().to_string();
    s.push('\n');
    s
}

/// The text between `<<<SOURCE>>>` and `<<<END>>>`, or the only fenced code
/// block.
pub fn extract_source(text: &str) -> Option<String> {
    if let Some(b) = between(text, "<<<SOURCE>>>", &["<<<END>>>"]) {
        return Some(tidy(b));
    }
    let fences: Vec<usize> = text.match_indices("```").map(|(i, _)| i).collect();
    if fences.len() == 2 {
        let inner = &text[fences[0] + 3..fences[1]];
        let body = inner.split_once('\n').map(|(_, b)| b)?;
        return Some(tidy(body));
    }
    None
}

/// Splits a response into triples. A malformed block yields an error naming
/// the missing part.
pub fn parse_triples(text: &str) -> Vec<Result<Triple, String>> {
    let mut out = Vec::new();
    let starts: Vec<usize> = text
        .match_indices("FUNCTION:")
        .map(|(i, _)| i)
        .filter(|&i| i == 0 || text[..i].ends_with('\n'))
        .collect();
    if starts.is_empty() {
        return vec![Err("no FUNCTION: header".into())];
    }
    for (n, &s) in starts.iter().enumerate() {
        let e = starts.get(n + 1).copied().unwrap_or(text.len());
        let block = &text[s..e];
        let name = block["FUNCTION:".len()..]
            .lines()
            .next()
            .unwrap_or("")
            .trim()
            .to_string();
        let part = |open: &str, close: &[&str]| {
            between(block, open, close)
                .map(tidy)
                .ok_or_else(|| format!("missing {open}"))
        };
        let triple = (|| {
            if name.is_empty() {
                return Err("empty function name".to_string());
            }
            Ok(Triple {
                function_name: name.clone(),
                buggy: part("<<<BUGGY>>>", &["<<<FIXED>>>"])?,
                fixed: part("<<<FIXED>>>", &["<<<TEST>>>"])?,
                test: part("<<<TEST>>>", &["<<<END>>>"])?,
            })
        })();
        out.push(triple);
    }
    out
}

/// First JSON object in the text, as a string-to-string map.
pub fn parse_json_map(text: &str) -> Result<BTreeMap<String, String>, String> {
    let start = text.find('{').ok_or("no JSON object")?;
    let end = text.rfind('}').ok_or("no JSON object")?;
    if end < start {
        return Err("no JSON object".into());
    }
    serde_json::from_str(&text[start..=end]).map_err(|e| e.to_string())
}
