use std::collections::HashSet;

use super::value::parse_value;
use super::{
    Analysis, Circuit, CntfetSpec, Device, MeasureKind, MeasureSpec, NetlistError, Pulse, Source,
    SourceShape,
};
use crate::device::{Chirality, Polarity};

/// A source line after `+` continuations are folded in. `origins` maps byte
/// offsets of `text` back to (line, column) in the input.
struct LogicalLine {
    text: String,
    origins: Vec<(usize, usize, usize)>,
}

impl LogicalLine {
    fn locate(&self, offset: usize) -> (usize, usize) {
        let mut best = self.origins[0];
        for &o in &self.origins {
            if o.0 <= offset {
                best = o;
            }
        }
        (best.1, best.2 + (offset - best.0))
    }

    fn line(&self) -> usize {
        self.origins[0].1
    }
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    offset: usize,
}

struct Cursor<'a> {
    line: &'a LogicalLine,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a LogicalLine) -> Self {
        let mut raw: Vec<Token<'a>> = Vec::new();
        let mut start = None;
        for (i, ch) in line.text.char_indices() {
            let sep = ch.is_whitespace() || ch == '(' || ch == ')';
            match (sep, start) {
                (true, Some(s)) => {
                    raw.push(Token {
                        text: &line.text[s..i],
                        offset: s,
                    });
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            raw.push(Token {
                text: &line.text[s..],
                offset: s,
            });
        }
        // Glue `key = value` written with spaces into a single token.
        let mut tokens: Vec<Token<'a>> = Vec::new();
        let mut i = 0;
        while i < raw.len() {
            let mut tok = raw[i].clone();
            i += 1;
            loop {
                let wants_next = tok.text.ends_with('=');
                let next_is_eq = raw.get(i).is_some_and(|t| t.text.starts_with('='));
                if (wants_next || next_is_eq) && i < raw.len() {
                    let end = raw[i].offset + raw[i].text.len();
                    tok = Token {
                        text: &line.text[tok.offset..end],
                        offset: tok.offset,
                    };
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(tok);
        }
        Self {
            line,
            tokens,
            pos: 0,
        }
    }

    fn err_at(&self, offset: usize, message: impl Into<String>) -> NetlistError {
        let (line, column) = self.line.locate(offset);
        NetlistError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn err_here(&self, message: impl Into<String>) -> NetlistError {
        let offset = match self.tokens.get(self.pos) {
            Some(t) => t.offset,
            None => self.line.text.len(),
        };
        self.err_at(offset, message)
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, NetlistError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn done(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn expect_end(&self) -> Result<(), NetlistError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err_at(t.offset, format!("unexpected token `{}`", t.text))),
        }
    }

    fn node(&mut self, what: &str) -> Result<String, NetlistError> {
        let tok = self.next(what)?;
        if tok.text.contains('=') || tok.text.contains(',') {
            return Err(self.err_at(tok.offset, format!("invalid node name `{}`", tok.text)));
        }
        Ok(tok.text.to_string())
    }

    fn value(&mut self, what: &str) -> Result<f64, NetlistError> {
        let tok = self.next(what)?;
        self.value_of(&tok, what)
    }

    fn value_of(&self, tok: &Token<'_>, what: &str) -> Result<f64, NetlistError> {
        parse_value(tok.text)
            .ok_or_else(|| self.err_at(tok.offset, format!("invalid {what} `{}`", tok.text)))
    }

    fn keyword(&mut self, expected: &str) -> Result<(), NetlistError> {
        let tok = self.next(expected)?;
        if tok.text.eq_ignore_ascii_case(expected) {
            Ok(())
        } else {
            Err(self.err_at(
                tok.offset,
                format!("expected `{expected}`, found `{}`", tok.text),
            ))
        }
    }

    /// Remaining tokens as `key=value` pairs, keys lowercased.
    fn key_values(&mut self) -> Result<Vec<(String, Token<'a>)>, NetlistError> {
        let mut out: Vec<(String, Token<'a>)> = Vec::new();
        while let Some(tok) = self.peek().cloned() {
            self.pos += 1;
            let Some((key, value)) = tok.text.split_once('=') else {
                return Err(self.err_at(
                    tok.offset,
                    format!("expected key=value, found `{}`", tok.text),
                ));
            };
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() || value.trim().is_empty() {
                return Err(self.err_at(tok.offset, format!("malformed parameter `{}`", tok.text)));
            }
            if out.iter().any(|(k, _)| *k == key) {
                return Err(self.err_at(tok.offset, format!("parameter `{key}` given twice")));
            }
            let trimmed = value.trim();
            let value_offset = tok.offset + tok.text.len() - value.len()
                + (value.len() - value.trim_start().len());
            out.push((
                key,
                Token {
                    text: &self.line.text[value_offset..value_offset + trimmed.len()],
                    offset: value_offset,
                },
            ));
        }
        Ok(out)
    }
}

fn logical_lines(input: &str) -> Result<(Vec<LogicalLine>, bool), NetlistError> {
    let mut lines: Vec<LogicalLine> = Vec::new();
    let mut saw_end = false;
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim_start();
        let lead = raw.len() - trimmed.len();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('+') {
            let Some(prev) = lines.last_mut() else {
                return Err(NetlistError::Syntax {
                    line: line_no,
                    column: lead + 1,
                    message: "continuation line with nothing to continue".into(),
                });
            };
            prev.text.push(' ');
            prev.origins.push((prev.text.len(), line_no, lead + 2));
            prev.text.push_str(rest);
            continue;
        }
        if trimmed
            .split_whitespace()
            .next()
            .is_some_and(|t| t.eq_ignore_ascii_case(".end"))
        {
            saw_end = true;
            break;
        }
        lines.push(LogicalLine {
            text: trimmed.to_string(),
            origins: vec![(0, line_no, lead + 1)],
        });
    }
    Ok((lines, saw_end))
}

/// Parses arbitrary bytes; invalid UTF-8 is reported as a syntax error.
pub fn parse_bytes(input: &[u8]) -> Result<Circuit, NetlistError> {
    match std::str::from_utf8(input) {
        Ok(text) => parse(text),
        Err(e) => {
            let prefix = &input[..e.valid_up_to()];
            let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
            let column = prefix.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
            Err(NetlistError::Syntax {
                line,
                column,
                message: "input is not valid UTF-8".into(),
            })
        }
    }
}

/// Parses netlist text into a validated [`Circuit`].
pub fn parse(input: &str) -> Result<Circuit, NetlistError> {
    let (lines, saw_end) = logical_lines(input)?;
    let mut circuit = Circuit::default();
    let mut names: HashSet<String> = HashSet::new();

    for line in &lines {
        let mut cur = Cursor::new(line);
        let Some(first) = cur.peek().cloned() else {
            continue;
        };
        if first.text.starts_with('.') {
            parse_directive(&mut cur, &mut circuit)?;
            continue;
        }
        let lead = first
            .text
            .chars()
            .next()
            .unwrap_or(' ')
            .to_ascii_uppercase();
        if !matches!(lead, 'M' | 'R' | 'C' | 'V') {
            let (l, c) = line.locate(first.offset);
            return Err(NetlistError::UnknownDeviceKind {
                line: l,
                column: c,
                name: first.text.to_string(),
            });
        }
        if !names.insert(first.text.to_ascii_lowercase()) {
            return Err(NetlistError::DuplicateName {
                line: line.line(),
                name: first.text.to_string(),
            });
        }
        match lead {
            'M' => circuit.devices.push(parse_cntfet(&mut cur)?),
            'R' => circuit.devices.push(parse_resistor(&mut cur)?),
            'C' => circuit.devices.push(parse_capacitor(&mut cur)?),
            _ => circuit.sources.push(parse_source(&mut cur)?),
        }
    }

    if !saw_end {
        return Err(NetlistError::MissingEnd);
    }
    if !circuit.references_ground() {
        return Err(NetlistError::MissingGround);
    }
    Ok(circuit)
}

fn parse_cntfet(cur: &mut Cursor<'_>) -> Result<Device, NetlistError> {
    let name = cur.next("device name")?.text.to_string();
    let drain = cur.node("drain node")?;
    let gate = cur.node("gate node")?;
    let source = cur.node("source node")?;
    let model = cur.next("model (nfet or pfet)")?;
    let polarity = match model.text.to_ascii_lowercase().as_str() {
        "nfet" => Polarity::N,
        "pfet" => Polarity::P,
        _ => {
            return Err(cur.err_at(
                model.offset,
                format!("unknown CNTFET model `{}`", model.text),
            ))
        }
    };
    let (mut n, mut m, mut tubes) = (None, None, 1u32);
    for (key, tok) in cur.key_values()? {
        let parsed: u32 = tok.text.parse().map_err(|_| {
            cur.err_at(
                tok.offset,
                format!("`{key}` must be a non-negative integer"),
            )
        })?;
        match key.as_str() {
            "n" => n = Some(parsed),
            "m" => m = Some(parsed),
            "tubes" => tubes = parsed,
            _ => return Err(cur.err_at(tok.offset, format!("unknown CNTFET parameter `{key}`"))),
        }
    }
    let (Some(n), Some(m)) = (n, m) else {
        return Err(cur.err_here("CNTFET requires n= and m="));
    };
    let chirality = Chirality::new(n, m).map_err(|e| cur.err_at(model.offset, e.to_string()))?;
    if !chirality.is_semiconducting() {
        return Err(NetlistError::MetallicChirality {
            line: cur.line.line(),
            name,
            n,
            m,
        });
    }
    if tubes == 0 {
        return Err(cur.err_here("tubes must be positive"));
    }
    Ok(Device::cntfet(
        name,
        &drain,
        &gate,
        &source,
        CntfetSpec {
            polarity,
            chirality,
            tubes,
        },
    ))
}

fn parse_resistor(cur: &mut Cursor<'_>) -> Result<Device, NetlistError> {
    let name = cur.next("resistor name")?.text.to_string();
    let a = cur.node("node")?;
    let b = cur.node("node")?;
    let tok = cur.next("resistance")?;
    let ohms = cur.value_of(&tok, "resistance")?;
    if ohms <= 0.0 {
        return Err(cur.err_at(tok.offset, "resistance must be positive"));
    }
    cur.expect_end()?;
    Ok(Device::resistor(name, &a, &b, ohms))
}

fn parse_capacitor(cur: &mut Cursor<'_>) -> Result<Device, NetlistError> {
    let name = cur.next("capacitor name")?.text.to_string();
    let a = cur.node("node")?;
    let b = cur.node("node")?;
    let tok = cur.next("capacitance")?;
    let farads = cur.value_of(&tok, "capacitance")?;
    if farads <= 0.0 {
        return Err(cur.err_at(tok.offset, "capacitance must be positive"));
    }
    let mut ic = None;
    for (key, tok) in cur.key_values()? {
        if key != "ic" {
            return Err(cur.err_at(tok.offset, format!("unknown capacitor parameter `{key}`")));
        }
        ic = Some(cur.value_of(&tok, "initial condition")?);
    }
    Ok(Device::capacitor(name, &a, &b, farads, ic))
}

fn parse_source(cur: &mut Cursor<'_>) -> Result<Source, NetlistError> {
    let name = cur.next("source name")?.text.to_string();
    let plus = cur.node("positive node")?;
    let minus = cur.node("negative node")?;
    let kind = cur.next("DC or PULSE")?;
    let shape = match kind.text.to_ascii_lowercase().as_str() {
        "dc" => SourceShape::Dc(cur.value("DC value")?),
        "pulse" => {
            let mut v = [0.0; 7];
            for (slot, what) in v
                .iter_mut()
                .zip(["v1", "v2", "delay", "rise", "fall", "width", "period"])
            {
                *slot = cur.value(what)?;
            }
            let p = Pulse {
                v1: v[0],
                v2: v[1],
                delay: v[2],
                rise: v[3],
                fall: v[4],
                width: v[5],
                period: v[6],
            };
            if p.rise <= 0.0 || p.fall <= 0.0 {
                return Err(cur.err_at(kind.offset, "PULSE rise and fall must be positive"));
            }
            if p.delay < 0.0 || p.width < 0.0 {
                return Err(cur.err_at(kind.offset, "PULSE delay and width must be non-negative"));
            }
            if p.period < p.width + p.rise + p.fall {
                return Err(
                    cur.err_at(kind.offset, "PULSE period shorter than rise + width + fall")
                );
            }
            SourceShape::Pulse(p)
        }
        _ => SourceShape::Dc(cur.value_of(&kind, "source value")?),
    };
    cur.expect_end()?;
    Ok(Source {
        name,
        plus,
        minus,
        shape,
    })
}

fn parse_directive(cur: &mut Cursor<'_>, circuit: &mut Circuit) -> Result<(), NetlistError> {
    let head = cur.next("directive")?;
    match head.text.to_ascii_lowercase().as_str() {
        ".title" => {
            let rest = cur.line.text[head.offset + head.text.len()..].trim();
            circuit.title = rest.to_string();
            cur.pos = cur.tokens.len();
        }
        ".temp" => {
            circuit.temp_c = cur.value("temperature")?;
            cur.expect_end()?;
        }
        ".op" => {
            circuit.analyses.push(Analysis::Op);
            cur.expect_end()?;
        }
        ".tran" => {
            let step = cur.value("time step")?;
            let stop = cur.value("stop time")?;
            if step <= 0.0 || stop <= step {
                return Err(cur.err_at(head.offset, "require 0 < step < stop"));
            }
            circuit.analyses.push(Analysis::Tran { step, stop });
            cur.expect_end()?;
        }
        ".measure" | ".meas" => circuit.measures.push(parse_measure(cur)?),
        other => return Err(cur.err_at(head.offset, format!("unknown directive `{other}`"))),
    }
    if !cur.done() {
        return Err(cur.err_here("unexpected trailing tokens"));
    }
    Ok(())
}

fn parse_measure(cur: &mut Cursor<'_>) -> Result<MeasureSpec, NetlistError> {
    cur.keyword("tran")?;
    let name_tok = cur.next("measurement name")?;
    if name_tok.text.contains('=') {
        return Err(cur.err_at(name_tok.offset, "invalid measurement name"));
    }
    let name = name_tok.text.to_string();
    let kind_tok = cur.next("AVG, DELAY or PDP")?;
    let kind = match kind_tok.text.to_ascii_lowercase().as_str() {
        "avg" => {
            cur.keyword("power")?;
            let (mut source, mut from, mut to) = (None, None, None);
            for (key, tok) in cur.key_values()? {
                match key.as_str() {
                    "src" => source = Some(tok.text.to_string()),
                    "from" => from = Some(cur.value_of(&tok, "time")?),
                    "to" => to = Some(cur.value_of(&tok, "time")?),
                    _ => {
                        return Err(cur.err_at(tok.offset, format!("unknown AVG parameter `{key}`")))
                    }
                }
            }
            let source =
                source.ok_or_else(|| cur.err_at(kind_tok.offset, "AVG power requires src="))?;
            MeasureKind::AvgPower { source, from, to }
        }
        "delay" => {
            let (mut inputs, mut outputs) = (None, None);
            let (mut fraction, mut vdd, mut from, mut to) = (0.5, None, None, None);
            for (key, tok) in cur.key_values()? {
                let list = || -> Option<Vec<String>> {
                    let items: Vec<String> = tok.text.split(',').map(str::to_string).collect();
                    items.iter().all(|s| !s.is_empty()).then_some(items)
                };
                match key.as_str() {
                    "in" => {
                        inputs =
                            Some(list().ok_or_else(|| cur.err_at(tok.offset, "bad node list"))?)
                    }
                    "out" => {
                        outputs =
                            Some(list().ok_or_else(|| cur.err_at(tok.offset, "bad node list"))?)
                    }
                    "frac" => {
                        fraction = cur.value_of(&tok, "fraction")?;
                        if !(fraction > 0.0 && fraction < 1.0) {
                            return Err(
                                cur.err_at(tok.offset, "frac must lie strictly between 0 and 1")
                            );
                        }
                    }
                    "vdd" => vdd = Some(cur.value_of(&tok, "supply voltage")?),
                    "from" => from = Some(cur.value_of(&tok, "time")?),
                    "to" => to = Some(cur.value_of(&tok, "time")?),
                    _ => {
                        return Err(
                            cur.err_at(tok.offset, format!("unknown DELAY parameter `{key}`"))
                        )
                    }
                }
            }
            let (Some(inputs), Some(outputs)) = (inputs, outputs) else {
                return Err(cur.err_at(kind_tok.offset, "DELAY requires in= and out="));
            };
            MeasureKind::Delay {
                inputs,
                outputs,
                fraction,
                vdd,
                from,
                to,
            }
        }
        "pdp" => MeasureKind::Pdp,
        other => return Err(cur.err_at(kind_tok.offset, format!("unknown measurement `{other}`"))),
    };
    cur.expect_end()?;
    Ok(MeasureSpec { name, kind })
}
