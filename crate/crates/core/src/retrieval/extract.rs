use ego_tree::NodeRef;
use scraper::{Html, Node, Selector};

/// Elements whose contents are never visible text.
const HIDDEN: &[&str] = &["head", "script", "style", "noscript", "template", "svg"];

/// Elements that start a new line of text when rendered.
const BLOCK: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "br",
    "dd",
    "div",
    "dl",
    "dt",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "td",
    "th",
    "tr",
    "ul",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub title: String,
    pub body: String,
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn walk(node: NodeRef<'_, Node>, out: &mut String) {
    match node.value() {
        Node::Text(text) => out.push_str(text),
        Node::Element(el) => {
            let name = el.name();
            if HIDDEN.contains(&name) {
                return;
            }
            let block = BLOCK.contains(&name);
            if block {
                out.push(' ');
            }
            for child in node.children() {
                walk(child, out);
            }
            if block {
                out.push(' ');
            }
        }
        _ => {
            for child in node.children() {
                walk(child, out);
            }
        }
    }
}

/// Visible text of an HTML page in document order, whitespace collapsed.
/// The title falls back to `url` when the page has none. Returns `None` when
/// nothing visible is left.
pub fn extract_text(html: &str, url: &str) -> Option<Extracted> {
    let doc = Html::parse_document(html);
    let mut raw = String::new();
    walk(doc.tree.root(), &mut raw);
    let body = collapse(&raw);
    if body.is_empty() {
        return None;
    }
    let selector = Selector::parse("title").expect("static selector");
    let title = doc
        .select(&selector)
        .next()
        .map(|t| collapse(&t.text().collect::<String>()))
        .filter(|t| !t.is_empty())
        .unwrap_or_else(|| url.to_string());
    Some(Extracted { title, body })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_scripts_and_styles() {
        let html = "<html><head><title> Sky </title><style>p{}</style></head><body>\
                    <script>var x = 1;</script><p>Blue  sky.</p><noscript>js</noscript>\
                    <p>Red <b>sun</b>.</p></body></html>";
        let got = extract_text(html, "http://x").unwrap();
        assert_eq!(got.title, "Sky");
        assert_eq!(got.body, "Blue sky. Red sun.");
    }

    #[test]
    fn block_boundaries_separate_words() {
        let got = extract_text("<div>one</div><div>two</div><span>th</span>ree", "u").unwrap();
        assert_eq!(got.body, "one two three");
        assert_eq!(got.title, "u");
    }

    #[test]
    fn markup_only_page_is_empty() {
        assert_eq!(
            extract_text(
                "<html><head><script>x()</script></head><body> </body></html>",
                "u"
            ),
            None
        );
    }
}
