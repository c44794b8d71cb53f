//! Line-based instance file format.
//!
//! ```text
//! MAX2CSP 1
//! n <int> R <int> m <int>
//! C <i> <j> <weight> <k> <a1> <b1> ... <ak> <bk>
//! ```
//!
//! Lines starting with `#` are comments. Indices are 0-based.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::{Constraint, Instance};
use crate::error::{Error, Result};

pub fn serialize(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str("MAX2CSP 1\n");
    let _ = writeln!(out, "n {} R {} m {}", inst.n(), inst.domain(), inst.constraints().len());
    for c in inst.constraints() {
        let _ = write!(out, "C {} {} {} {}", c.i, c.j, c.weight, c.rel.len());
        for (a, b) in &c.rel {
            let _ = write!(out, " {a} {b}");
        }
        out.push('\n');
    }
    out
}

fn int(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

pub fn parse(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, magic) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    if magic.split_whitespace().collect::<Vec<_>>() != ["MAX2CSP", "1"] {
        return Err(Error::parse(ln, format!("expected `MAX2CSP 1`, found `{magic}`")));
    }

    let (ln, header) = lines.next().ok_or_else(|| Error::parse(ln, "missing size header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "n" || toks[2] != "R" || toks[4] != "m" {
        return Err(Error::parse(ln, format!("expected `n <int> R <int> m <int>`, found `{header}`")));
    }
    let n = int(Some(toks[1]), ln, "n")?;
    let r = int(Some(toks[3]), ln, "R")?;
    let m = int(Some(toks[5]), ln, "m")?;
    if r < 2 {
        return Err(Error::parse(ln, format!("R must be at least 2, got {r}")));
    }
    if n < 1 {
        return Err(Error::parse(ln, "n must be at least 1"));
    }

    let mut constraints = Vec::with_capacity(m);
    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("C") {
            return Err(Error::parse(ln, format!("expected constraint line, found `{line}`")));
        }
        let i = int(toks.next(), ln, "i")?;
        let j = int(toks.next(), ln, "j")?;
        let wtok = toks.next().ok_or_else(|| Error::parse(ln, "missing weight"))?;
        let weight: f64 = wtok.parse().map_err(|_| Error::parse(ln, format!("bad weight `{wtok}`")))?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::parse(ln, format!("weight must be finite and nonnegative, got {wtok}")));
        }
        let k = int(toks.next(), ln, "k")?;
        if i >= n || j >= n {
            return Err(Error::parse(ln, format!("variable index out of range 0..{n}")));
        }
        if i == j {
            return Err(Error::parse(ln, format!("self-loop on variable {i}")));
        }
        let mut rel = BTreeSet::new();
        for _ in 0..k {
            let a = int(toks.next(), ln, "value")?;
            let b = int(toks.next(), ln, "value")?;
            if a >= r || b >= r {
                return Err(Error::parse(ln, format!("value pair ({a},{b}) out of range 0..{r}")));
            }
            if !rel.insert((a, b)) {
                return Err(Error::parse(ln, format!("duplicate pair ({a},{b})")));
            }
        }
        if let Some(extra) = toks.next() {
            return Err(Error::parse(ln, format!("trailing token `{extra}`")));
        }
        constraints.push(Constraint { i, j, rel, weight });
    }
    if constraints.len() != m {
        return Err(Error::parse(0, format!("header declares m = {m} but {} constraints found", constraints.len())));
    }
    Instance::new(n, r, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::example_instance;

    #[test]
    fn example_round_trip() {
        let inst = example_instance();
        let text = serialize(&inst);
        assert_eq!(parse(&text).unwrap(), inst);
        assert!(text.starts_with("MAX2CSP 1\nn 3 R 3 m 5\nC 0 2 1 6 0 1 0 2 1 0 1 2 2 0 2 1\n"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# hello\nMAX2CSP 1\n\nn 2 R 2 m 1\n# c\nC 0 1 0.5 1 1 1\n";
        let inst = parse(text).unwrap();
        assert_eq!(inst.constraints()[0].weight, 0.5);
    }

    #[test]
    fn weights_use_shortest_repr() {
        let inst = Instance::new(2, 2, vec![Constraint::new(0, 1, [(0, 0)], 0.1)]).unwrap();
        assert!(serialize(&inst).contains("C 0 1 0.1 1 0 0"));
    }

    #[test]
    fn rejects_r_one() {
        assert!(parse("MAX2CSP 1\nn 2 R 1 m 0\n").is_err());
    }

    #[test]
    fn rejects_variable_n() {
        let err = parse("MAX2CSP 1\nn 2 R 2 m 1\nC 0 2 1 1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_malformed() {
        for text in [
            "",
            "MAX2CSP 2\nn 2 R 2 m 0\n",
            "MAX2CSP 1\nn 2 R 2\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nC 0 1 1 2 0 0 0 0\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nC 0 1 1 1 0\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nC 0 1 -1 1 0 0\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nC 0 1 inf 1 0 0\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nC 0 0 1 1 0 0\n",
            "MAX2CSP 1\nn 2 R 2 m 2\nC 0 1 1 1 0 0\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nC 0 1 1 1 0 0 9\n",
            "MAX2CSP 1\nn 2 R 2 m 1\nX 0 1 1 1 0 0\n",
        ] {
            assert!(parse(text).is_err(), "accepted {text:?}");
        }
    }
}
