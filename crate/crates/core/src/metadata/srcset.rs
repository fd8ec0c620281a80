/// Splits a `srcset` attribute into its image URLs following the HTML
/// image-candidate-string grammar. Entries with invalid descriptors are
/// dropped.
pub fn parse_srcset(input: &str) -> Vec<String> {
    let chars: Vec<char> = input.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        while pos < chars.len() && (chars[pos].is_whitespace() || chars[pos] == ',') {
            pos += 1;
        }
        if pos >= chars.len() {
            break;
        }
        let start = pos;
        while pos < chars.len() && !chars[pos].is_whitespace() {
            pos += 1;
        }
        let mut url: String = chars[start..pos].iter().collect();
        let mut descriptors = Vec::new();
        if url.ends_with(',') {
            url = url.trim_end_matches(',').to_string();
        } else {
            let mut current = String::new();
            let mut in_parens = false;
            while pos < chars.len() {
                let c = chars[pos];
                pos += 1;
                match c {
                    '(' => {
                        in_parens = true;
                        current.push(c);
                    }
                    ')' => {
                        in_parens = false;
                        current.push(c);
                    }
                    ',' if !in_parens => break,
                    c if c.is_whitespace() && !in_parens => {
                        if !current.is_empty() {
                            descriptors.push(std::mem::take(&mut current));
                        }
                    }
                    c => current.push(c),
                }
            }
            if !current.is_empty() {
                descriptors.push(current);
            }
        }
        if !url.is_empty() && descriptors_valid(&descriptors) {
            out.push(url);
        }
    }
    out
}

fn descriptors_valid(descriptors: &[String]) -> bool {
    let (mut w, mut x, mut h) = (0, 0, 0);
    for d in descriptors {
        let Some(last) = d.chars().last() else {
            return false;
        };
        let num = &d[..d.len() - last.len_utf8()];
        match last {
            'w' | 'h' => {
                if num.parse::<u64>().map_or(true, |n| n == 0) {
                    return false;
                }
                if last == 'w' {
                    w += 1;
                } else {
                    h += 1;
                }
            }
            'x' => {
                if num.parse::<f64>().map_or(true, |v| !v.is_finite() || v < 0.0) {
                    return false;
                }
                x += 1;
            }
            _ => return false,
        }
    }
    w <= 1 && x <= 1 && h <= 1 && !(w > 0 && x > 0) && !(h > 0 && w == 0)
}

#[cfg(test)]
mod tests {
    use super::parse_srcset;

    #[test]
    fn density_descriptors() {
        assert_eq!(parse_srcset("a.jpg 1x, b.jpg 2x"), vec!["a.jpg", "b.jpg"]);
    }

    #[test]
    fn width_descriptors_and_no_space_after_comma() {
        assert_eq!(parse_srcset("a.jpg 320w,b.jpg 640w"), vec!["a.jpg", "b.jpg"]);
    }

    #[test]
    fn url_with_commas_and_bare_urls() {
        assert_eq!(
            parse_srcset("img.php?s=1,2 1x, c.png,, d.png"),
            vec!["img.php?s=1,2", "c.png", "d.png"]
        );
    }

    #[test]
    fn malformed_entries_skipped() {
        assert_eq!(parse_srcset("a.jpg 2q, b.jpg 1x 2x, c.jpg 100w 2x, d.jpg 1.5x"), vec!["d.jpg"]);
        assert!(parse_srcset("").is_empty());
        assert!(parse_srcset(" , ,").is_empty());
    }
}
