/// Identifier-aware terms for retrieval: split on non-alphanumeric
/// boundaries, then on snake_case and camelCase boundaries, lowercased.
///
/// `parseHTTPResponse_v2` becomes `parse`, `http`, `response`, `v2`.
pub fn code_terms(text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        split_camel(word, &mut terms);
    }
    terms
}

fn split_camel(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    let mut start = 0;
    for i in 1..chars.len() {
        let prev = chars[i - 1];
        let cur = chars[i];
        let next = chars.get(i + 1).copied();
        let lower_to_upper = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase();
        // "HTTPResponse": split before the 'R' that starts a lowercase run.
        let acronym_end = prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(|n| n.is_lowercase());
        if lower_to_upper || acronym_end {
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
            start = i;
        }
    }
    out.push(chars[start..].iter().collect::<String>().to_lowercase());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_identifiers() {
        assert_eq!(code_terms("parseHTTPResponse_v2"), ["parse", "http", "response", "v2"]);
        assert_eq!(code_terms("self.user_name = getUserName()"), ["self", "user", "name", "get", "user", "name"]);
        assert_eq!(code_terms("  ;; "), Vec::<String>::new());
        assert_eq!(code_terms("XMLParser utf8Decode"), ["xml", "parser", "utf8", "decode"]);
    }
}
