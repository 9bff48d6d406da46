//! Raw-text screen for SVG text-rendering tags.

const BANNED: [&str; 3] = ["text", "tspan", "textPath"];

/// Returns the first banned tag (`text`, `tspan`, `textPath`) opened or
/// closed anywhere in `source`.
///
/// Works on raw bytes so that unparseable output is screened too. Tag names
/// match case-insensitively and may carry a namespace prefix; words inside
/// attribute values or character data are not tags and never match.
pub fn check_banned_tags(source: &str) -> Option<&'static str> {
    let bytes = source.as_bytes();
    let mut i = 0;
    while let Some(off) = bytes[i..].iter().position(|&b| b == b'<') {
        let mut j = i + off + 1;
        if bytes.get(j) == Some(&b'/') {
            j += 1;
        }
        let start = j;
        while j < bytes.len() && is_name_byte(bytes[j]) {
            j += 1;
        }
        let mut name = &source[start..j];
        if let Some((_, local)) = name.rsplit_once(':') {
            name = local;
        }
        let terminated = match bytes.get(j) {
            None => true,
            Some(b) => b.is_ascii_whitespace() || *b == b'>' || *b == b'/',
        };
        if terminated {
            if let Some(tag) = BANNED.iter().find(|t| t.eq_ignore_ascii_case(name)) {
                return Some(tag);
            }
        }
        i += off + 1;
    }
    None
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b':')
}
