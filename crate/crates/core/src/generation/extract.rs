use crate::java::JavaSource;

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Fenced blocks in reply order as (lowercased tag, body). Any fence line
/// closes an open block; an unterminated block runs to the end.
fn fenced_blocks(reply: &str) -> Vec<(String, String)> {
    let mut blocks = Vec::new();
    let mut open: Option<(String, Vec<&str>)> = None;
    for line in reply.lines() {
        if is_fence(line) {
            match open.take() {
                Some((tag, body)) => blocks.push((tag, body.join("\n"))),
                None => {
                    let info = line.trim_start().trim_start_matches('`').trim();
                    let tag = info.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
                    open = Some((tag, Vec::new()));
                }
            }
        } else if let Some((_, body)) = open.as_mut() {
            body.push(line);
        }
    }
    if let Some((tag, body)) = open {
        blocks.push((tag, body.join("\n")));
    }
    blocks
}

/// Pull the Java test class out of a model reply:
/// 1. the first fenced block tagged `java`;
/// 2. else the first fenced block with any tag;
/// 3. else the whole reply, if it is a clean Java compilation unit
///    declaring at least one type;
/// 4. else nothing.
///
/// Blank blocks are ignored. The result never contains a fence line.
pub fn extract_code(reply: &str) -> Option<String> {
    let blocks: Vec<(String, String)> = fenced_blocks(reply)
        .into_iter()
        .filter(|(_, body)| !body.trim().is_empty())
        .collect();
    if let Some((_, body)) = blocks.iter().find(|(tag, _)| tag == "java") {
        return Some(body.clone());
    }
    if let Some((_, body)) = blocks.first() {
        return Some(body.clone());
    }
    if reply.lines().any(is_fence) {
        return None;
    }
    let parsed = JavaSource::parse_strict(reply).ok()?;
    if parsed.top_level_types().is_empty() {
        return None;
    }
    Some(reply.to_string())
}
