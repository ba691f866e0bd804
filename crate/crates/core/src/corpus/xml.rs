// Minimal tag scanner for SENSEVAL lexical-sample files. Only what the
// format needs: elements, attributes, character data, comments, processing
// instructions and DOCTYPE declarations. Unknown named entities are kept
// verbatim since several distributions of the data use SGML-only entities.

use super::{CorpusError, Result, WsdInstance};

enum Event {
    Start { name: String, attrs: Vec<(String, String)>, empty: bool },
    End { name: String },
    Text(String),
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

fn line_of(src: &str, pos: usize) -> usize {
    1 + src.as_bytes()[..pos.min(src.len())].iter().filter(|&&b| b == b'\n').count()
}

fn resolve_entities(raw: &str) -> String {
    if !raw.contains('&') {
        return raw.to_string();
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let resolved = tail[1..].find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let name = &tail[1..1 + semi];
            let ch = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                _ if name.starts_with("#x") || name.starts_with("#X") => {
                    u32::from_str_radix(&name[2..], 16).ok().and_then(char::from_u32)
                }
                _ if name.starts_with('#') => name[1..].parse::<u32>().ok().and_then(char::from_u32),
                _ => None,
            };
            ch.map(|c| (c, semi + 2))
        });
        match resolved {
            Some((c, consumed)) => {
                out.push(c);
                rest = &tail[consumed..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

impl<'a> Scanner<'a> {
    fn err(&self, pos: usize, message: impl Into<String>) -> CorpusError {
        CorpusError::Xml { line: line_of(self.src, pos), message: message.into() }
    }

    fn skip_past(&mut self, start: usize, terminator: &str, what: &str) -> Result<()> {
        match self.src[self.pos..].find(terminator) {
            Some(i) => {
                self.pos += i + terminator.len();
                Ok(())
            }
            None => Err(self.err(start, format!("unterminated {what}"))),
        }
    }

    fn next_event(&mut self) -> Result<Option<Event>> {
        loop {
            if self.pos >= self.src.len() {
                return Ok(None);
            }
            let rest = &self.src[self.pos..];
            if !rest.starts_with('<') {
                let end = rest.find('<').unwrap_or(rest.len());
                self.pos += end;
                return Ok(Some(Event::Text(resolve_entities(&rest[..end]))));
            }
            let start = self.pos;
            if rest.starts_with("<!--") {
                self.skip_past(start, "-->", "comment")?;
                continue;
            }
            if rest.starts_with("<?") {
                self.skip_past(start, "?>", "processing instruction")?;
                continue;
            }
            if rest.starts_with("<!") {
                self.skip_past(start, ">", "declaration")?;
                continue;
            }
            return self.tag(start).map(Some);
        }
    }

    fn tag(&mut self, start: usize) -> Result<Event> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos + 1;
        let closing = bytes.get(i) == Some(&b'/');
        if closing {
            i += 1;
        }
        let name_start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' && bytes[i] != b'/' {
            i += 1;
        }
        if i == name_start {
            return Err(self.err(start, "empty tag name"));
        }
        let name = self.src[name_start..i].to_ascii_lowercase();
        let mut attrs = Vec::new();
        let mut empty = false;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            match bytes.get(i) {
                None => return Err(self.err(start, format!("unterminated tag <{name}"))),
                Some(b'>') => {
                    i += 1;
                    break;
                }
                Some(b'/') if bytes.get(i + 1) == Some(&b'>') => {
                    empty = true;
                    i += 2;
                    break;
                }
                Some(_) if closing => return Err(self.err(start, format!("junk in end tag </{name}"))),
                Some(_) => {}
            }
            let attr_start = i;
            while i < bytes.len() && !matches!(bytes[i], b'=' | b'>' | b'/') && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let attr = self.src[attr_start..i].to_ascii_lowercase();
            if attr.is_empty() {
                return Err(self.err(start, format!("bad attribute in <{name}")));
            }
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if bytes.get(i) != Some(&b'=') {
                attrs.push((attr, String::new()));
                continue;
            }
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let value = match bytes.get(i) {
                Some(&q) if q == b'"' || q == b'\'' => {
                    let close = self.src[i + 1..]
                        .find(q as char)
                        .ok_or_else(|| self.err(start, format!("unterminated attribute value in <{name}")))?;
                    let v = &self.src[i + 1..i + 1 + close];
                    i += close + 2;
                    v
                }
                _ => {
                    let vs = i;
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                        i += 1;
                    }
                    &self.src[vs..i]
                }
            };
            attrs.push((attr, resolve_entities(value)));
        }
        self.pos = i;
        if closing {
            Ok(Event::End { name })
        } else {
            Ok(Event::Start { name, attrs, empty })
        }
    }
}

#[derive(Default)]
struct Pending {
    id: String,
    task: String,
    text: String,
    in_context: bool,
    head: Option<(usize, Option<usize>)>,
    senses: Vec<String>,
}

fn attr<'a>(attrs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub(super) fn parse_lexical_sample(src: &str) -> Result<Vec<WsdInstance>> {
    let mut scanner = Scanner { src, pos: 0 };
    let mut stack: Vec<(String, usize)> = Vec::new();
    let mut lexelt: Option<String> = None;
    let mut pending: Option<Pending> = None;
    let mut out = Vec::new();
    let mut missing = Vec::new();

    loop {
        let at = scanner.pos;
        let Some(event) = scanner.next_event()? else { break };
        match event {
            Event::Text(t) => {
                if let Some(p) = pending.as_mut().filter(|p| p.in_context) {
                    p.text.push_str(&t);
                }
            }
            Event::Start { name, attrs, empty } => {
                match name.as_str() {
                    "lexelt" => lexelt = attr(&attrs, "item").map(str::to_string),
                    "instance" => {
                        let id = attr(&attrs, "id")
                            .ok_or_else(|| scanner.err(at, "instance without id attribute"))?
                            .to_string();
                        let task = lexelt.clone().unwrap_or_else(|| match id.rfind('.') {
                            Some(dot) => id[..dot].to_string(),
                            None => id.clone(),
                        });
                        pending = Some(Pending { id, task, ..Pending::default() });
                    }
                    "answer" => {
                        if let (Some(p), Some(sense)) = (pending.as_mut(), attr(&attrs, "senseid")) {
                            p.senses.push(sense.to_string());
                        }
                    }
                    "context" => {
                        if let Some(p) = pending.as_mut() {
                            p.in_context = !empty;
                        }
                    }
                    "head" => {
                        if let Some(p) = pending.as_mut().filter(|p| p.in_context && p.head.is_none()) {
                            p.head = Some((p.text.len(), if empty { Some(p.text.len()) } else { None }));
                        }
                    }
                    _ => {}
                }
                if !empty {
                    stack.push((name, at));
                }
            }
            Event::End { name } => {
                match stack.pop() {
                    Some((open, _)) if open == name => {}
                    Some((open, _)) => {
                        return Err(scanner.err(at, format!("mismatched end tag </{name}>, expected </{open}>")))
                    }
                    None => return Err(scanner.err(at, format!("unexpected end tag </{name}>"))),
                }
                match name.as_str() {
                    "head" => {
                        if let Some(p) = pending.as_mut() {
                            if let Some((s, None)) = p.head {
                                p.head = Some((s, Some(p.text.len())));
                            }
                        }
                    }
                    "context" => {
                        if let Some(p) = pending.as_mut() {
                            p.in_context = false;
                        }
                    }
                    "instance" => {
                        if let Some(p) = pending.take() {
                            match p.head {
                                Some((s, Some(e))) if e > s => {
                                    let mut inst = WsdInstance::new(p.task, p.id, p.text, s, e);
                                    inst.gold_senses = p.senses.into_iter().collect();
                                    out.push(inst);
                                }
                                _ => missing.push(p.id),
                            }
                        }
                    }
                    "lexelt" => lexelt = None,
                    _ => {}
                }
            }
        }
    }
    if let Some((open, _)) = stack.last() {
        return Err(scanner.err(src.len(), format!("unclosed element <{open}> at end of input")));
    }
    if !missing.is_empty() {
        return Err(CorpusError::MissingHead { ids: missing });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entities() {
        assert_eq!(resolve_entities("a &amp; b &#x41;&#66; &foo; & c"), "a & b AB &foo; & c");
    }

    #[test]
    fn unquoted_attributes_and_case() {
        let xml = "<LEXELT ITEM=bank.n><INSTANCE ID=bank.1><CONTEXT>the <HEAD>bank</HEAD> is</CONTEXT></INSTANCE></LEXELT>";
        let insts = parse_lexical_sample(xml).unwrap();
        assert_eq!(insts[0].task_id, "bank.n");
        assert_eq!(insts[0].head(), "bank");
    }
}
