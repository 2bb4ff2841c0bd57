use alloc::string::String;
use alloc::vec::Vec;

/// Splits free text into normalized words: lowercased, with leading and
/// trailing punctuation removed. Inner punctuation survives so that values
/// like `3.5` or `2013-05-01` stay intact.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect()
}

/// Lowercase, drop every punctuation character, collapse whitespace.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        let cleaned: String = word
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if cleaned.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&cleaned);
    }
    out
}

/// Case-insensitive name comparison used for tables and columns.
pub(crate) fn same_name(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

/// Formats a number without a trailing `.0` and with at most `decimals`
/// fractional digits.
pub(crate) fn format_number(value: f64, decimals: usize) -> String {
    if value == libm::trunc(value) && libm::fabs(value) < 1e15 {
        return alloc::format!("{}", value as i64);
    }
    let s = alloc::format!("{:.*}", decimals, value);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    String::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn words_strip_outer_punctuation_only() {
        assert_eq!(
            tokenize_words("How many students were born in 2000?"),
            vec!["how", "many", "students", "were", "born", "in", "2000"]
        );
        assert_eq!(tokenize_words("mpg of 3.5, (CS)"), vec!["mpg", "of", "3.5", "cs"]);
        assert!(tokenize_words(" ?! ").is_empty());
    }

    #[test]
    fn normalize_collapses_and_strips() {
        assert_eq!(normalize_text("  How   MANY students?? "), "how many students");
        assert_eq!(normalize_text("U.S. flights"), "us flights");
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(3.0, 2), "3");
        assert_eq!(format_number(2.5, 2), "2.5");
        assert_eq!(format_number(1.0 / 3.0, 2), "0.33");
        assert_eq!(format_number(-4.0, 2), "-4");
    }
}
