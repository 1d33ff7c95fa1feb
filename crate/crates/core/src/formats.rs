//! Line-oriented text formats: corpora, vocabularies, relevance judgments
//! and run files.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ranking::RankedList;

fn line_error(kind: &'static str, line: usize, message: impl std::fmt::Display) -> Error {
    Error::format(kind, format!("line {line}: {message}"))
}

/// `id \t term term ...` records with integer term ids.
pub fn read_corpus(r: impl BufRead) -> Result<Vec<(u64, Vec<u32>)>> {
    let mut out = Vec::new();
    for (i, raw) in read_records(r, "corpus")? {
        let (id, body) = raw;
        let terms = body
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| line_error("corpus", i, format!("bad term id {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if terms.is_empty() {
            return Err(line_error("corpus", i, "record has no terms"));
        }
        out.push((id, terms));
    }
    check_unique_ids(&out, "corpus")?;
    Ok(out)
}

/// `id \t free text` records.
pub fn read_text_corpus(r: impl BufRead) -> Result<Vec<(u64, String)>> {
    let out: Vec<(u64, String)> = read_records(r, "corpus")?
        .into_iter()
        .map(|(_, rec)| rec)
        .collect();
    check_unique_ids(&out, "corpus")?;
    Ok(out)
}

fn read_records(r: impl BufRead, kind: &'static str) -> Result<Vec<(usize, (u64, String))>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| line_error(kind, n, "expected `id<TAB>body`"))?;
        let id = id
            .trim()
            .parse::<u64>()
            .map_err(|_| line_error(kind, n, format!("bad id {id:?}")))?;
        out.push((n, (id, body.to_string())));
    }
    Ok(out)
}

fn check_unique_ids<T>(records: &[(u64, T)], kind: &'static str) -> Result<()> {
    let mut ids: Vec<u64> = records.iter().map(|r| r.0).collect();
    ids.sort_unstable();
    match ids.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(Error::format(kind, format!("duplicate id {}", w[0]))),
        None => Ok(()),
    }
}

pub fn write_corpus(w: &mut impl Write, records: &[(u64, Vec<u32>)]) -> Result<()> {
    for (id, terms) in records {
        let body: Vec<String> = terms.iter().map(u32::to_string).collect();
        writeln!(w, "{id}\t{}", body.join(" "))?;
    }
    Ok(())
}

/// Lowercased whitespace tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Term ↔ id mapping for text mode.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::format("vocabulary", format!("invalid term {t:?}")));
            }
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(Error::format("vocabulary", format!("duplicate term {t:?}")));
            }
        }
        Ok(Vocabulary { terms, ids })
    }

    /// Ids by descending corpus frequency, ties broken lexicographically.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for text in texts {
            for tok in tokenize(text) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut terms: Vec<(String, u64)> = counts.into_iter().collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let terms: Vec<String> = terms.into_iter().map(|t| t.0).collect();
        let ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { terms, ids }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    /// Known token ids and the tokens that were not found.
    pub fn encode(&self, text: &str) -> (Vec<u32>, Vec<String>) {
        let mut known = Vec::new();
        let mut unknown = Vec::new();
        for tok in tokenize(text) {
            match self.id(&tok) {
                Some(id) => known.push(id),
                None => unknown.push(tok),
            }
        }
        (known, unknown)
    }

    /// One `term \t id` line per entry, ascending id.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            writeln!(w, "{t}\t{i}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (term, id) = line
                .split_once('\t')
                .ok_or_else(|| line_error("vocabulary", i + 1, "expected `term<TAB>id`"))?;
            let id: u32 = id
                .parse()
                .map_err(|_| line_error("vocabulary", i + 1, format!("bad id {id:?}")))?;
            pairs.push((id, term.to_string()));
        }
        pairs.sort_by_key(|p| p.0);
        if pairs.iter().enumerate().any(|(i, p)| p.0 as usize != i) {
            return Err(Error::format("vocabulary", "ids must be exactly 0..n"));
        }
        Vocabulary::from_terms(pairs.into_iter().map(|p| p.1).collect())
    }
}

/// `query_id \t doc_id` lines.
pub fn read_qrels(r: impl BufRead) -> Result<BTreeMap<u64, Vec<u64>>> {
    let mut out: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| line_error("qrels", i + 1, format!("bad id {s:?}")))
        };
        if cols.len() != 2 {
            return Err(line_error("qrels", i + 1, "expected `query<TAB>doc`"));
        }
        let docs = out.entry(parse(cols[0])?).or_default();
        let d = parse(cols[1])?;
        if !docs.contains(&d) {
            docs.push(d);
        }
    }
    Ok(out)
}

pub fn write_qrels(w: &mut impl Write, qrels: &BTreeMap<u64, Vec<u64>>) -> Result<()> {
    for (q, docs) in qrels {
        for d in docs {
            writeln!(w, "{q}\t{d}")?;
        }
    }
    Ok(())
}

/// Ranked lists keyed by query, in file order.
pub type Run = Vec<(u64, RankedList)>;

/// `query_id \t doc_id \t rank \t score`, ranks from 1 per query.
pub fn write_run(w: &mut impl Write, run: &[(u64, RankedList)]) -> Result<()> {
    for (qid, list) in run {
        for (rank, (doc, score)) in list.entries().iter().enumerate() {
            writeln!(w, "{qid}\t{doc}\t{}\t{score}", rank + 1)?;
        }
    }
    Ok(())
}

pub fn read_run(r: impl BufRead) -> Result<Run> {
    let mut run: Run = Vec::new();
    let mut current: Option<(u64, Vec<(u64, f64)>)> = None;
    let mut seen = std::collections::BTreeSet::new();
    let close = |cur: Option<(u64, Vec<(u64, f64)>)>, run: &mut Run| -> Result<()> {
        if let Some((q, entries)) = cur {
            run.push((q, RankedList::new(entries)?));
        }
        Ok(())
    };
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(line_error("run", n, "expected 4 tab-separated columns"));
        }
        let qid: u64 = cols[0]
            .parse()
            .map_err(|_| line_error("run", n, "bad query id"))?;
        let doc: u64 = cols[1]
            .parse()
            .map_err(|_| line_error("run", n, "bad doc id"))?;
        let rank: usize = cols[2]
            .parse()
            .map_err(|_| line_error("run", n, "bad rank"))?;
        let score: f64 = cols[3]
            .parse()
            .map_err(|_| line_error("run", n, "bad score"))?;
        if current.as_ref().is_none_or(|c| c.0 != qid) {
            if !seen.insert(qid) {
                return Err(line_error(
                    "run",
                    n,
                    format!("query {qid} is not contiguous"),
                ));
            }
            close(current.take(), &mut run)?;
            current = Some((qid, Vec::new()));
        }
        let entries = &mut current.as_mut().expect("opened above").1;
        if rank != entries.len() + 1 {
            return Err(line_error(
                "run",
                n,
                format!("rank {rank} breaks the sequence for query {qid}"),
            ));
        }
        entries.push((doc, score));
    }
    close(current, &mut run)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses_and_reports_lines() {
        let text = "1\t4 5 6\n\n2\t7\n";
        assert_eq!(
            read_corpus(text.as_bytes()).unwrap(),
            vec![(1, vec![4, 5, 6]), (2, vec![7])]
        );
        match read_corpus("1\t4\n2\t4 x\n".as_bytes()) {
            Err(Error::Format { message, .. }) => assert!(message.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
        assert!(read_corpus("1\t4\n1\t5\n".as_bytes()).is_err());
        assert!(read_corpus("7 8\n".as_bytes()).is_err());
    }

    #[test]
    fn corpus_round_trip() {
        let recs = vec![(3, vec![1, 2]), (9, vec![0])];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &recs).unwrap();
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn vocabulary_orders_by_frequency() {
        let v = Vocabulary::build(["The cat", "the dog", "a Cat the"]);
        assert_eq!(v.id("the"), Some(0));
        assert_eq!(v.id("cat"), Some(1));
        assert_eq!(v.id("a"), Some(2));
        assert_eq!(v.id("dog"), Some(3));
        let (ids, unknown) = v.encode("THE bird cat");
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(unknown, vec!["bird".to_string()]);

        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(Vocabulary::read_from(buf.as_slice()).unwrap(), v);
        assert!(Vocabulary::read_from("a\t0\nb\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn run_round_trip_is_exact() {
        let run = vec![
            (
                4,
                RankedList::new(vec![(10, 2.5), (3, 0.1 + 0.2), (7, 0.0)]).unwrap(),
            ),
            (1, RankedList::new(vec![(2, 1e-300)]).unwrap()),
        ];
        let mut buf = Vec::new();
        write_run(&mut buf, &run).unwrap();
        assert_eq!(read_run(buf.as_slice()).unwrap(), run);
    }

    #[test]
    fn run_rejects_broken_ranks() {
        assert!(read_run("1\t5\t2\t1.0\n".as_bytes()).is_err());
        assert!(read_run("1\t5\t1\t1.0\n2\t5\t1\t1.0\n1\t6\t2\t0.5\n".as_bytes()).is_err());
        assert!(read_run("1\t5\t1\t1.0\n1\t6\t2\t2.0\n".as_bytes()).is_err());
    }

    #[test]
    fn qrels_group_by_query() {
        let q = read_qrels("1\t5\n1\t6\n2\t5\n1\t5\n".as_bytes()).unwrap();
        assert_eq!(q[&1], vec![5, 6]);
        assert_eq!(q[&2], vec![5]);
        let mut buf = Vec::new();
        write_qrels(&mut buf, &q).unwrap();
        assert_eq!(read_qrels(buf.as_slice()).unwrap(), q);
    }
}
