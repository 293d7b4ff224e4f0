//! The on-disk model format. One JSON document describes an event tree, a
//! price process, and optionally a payoff, a menu of named claims, and
//! sequence specifications. All numbers are "num/den" strings; nothing in
//! a document is ever a float.

use crate::market::{MarketModel, PortfolioMenu};
use crate::rational::{format_rat, parse_rat, Ext, Rat};
use crate::space::{AdaptedProcess, FilteredSpace, Rv, VecRv};
use crate::topology::{SequenceSpec, Tail};
use crate::{Error, Result};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuDocument {
    /// A time label from `times`.
    pub anchor: String,
    pub names: Vec<String>,
    /// entries[i][w]: value of entry i at outcome w, as "num/den".
    pub entries: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum TailDocument {
    Constant,
    Periodic(usize),
    /// Pointwise limit; entries may be "inf" or "-inf".
    Monotone(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDocument {
    /// prefix[n][w], as "num/den".
    pub prefix: Vec<Vec<String>>,
    pub tail: TailDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub outcomes: Vec<String>,
    /// One strictly positive "num/den" per outcome, summing to one.
    pub probabilities: Vec<String>,
    pub times: Vec<String>,
    /// partitions[t]: the date-t atoms as lists of outcome labels.
    pub partitions: Vec<Vec<Vec<String>>>,
    /// Number of assets d.
    pub assets: usize,
    /// prices[t][w]: d nonnegative rationals.
    pub prices: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub menu: Option<MenuDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<Vec<SequenceDocument>>,
}

/// Everything a document describes, in validated in-memory form.
pub struct BuiltModel {
    pub model: MarketModel,
    pub payoff: Option<Rv>,
    pub menu: Option<PortfolioMenu>,
    pub sequences: Vec<SequenceSpec>,
}

pub fn parse_document(text: &str) -> Result<ModelDocument> {
    serde_json::from_str(text).map_err(|e| Error::input(format!("document does not parse: {e}")))
}

pub fn render_document(doc: &ModelDocument) -> String {
    serde_json::to_string_pretty(doc).expect("documents always serialize")
}

fn parse_row(row: &[String], n: usize, what: &str) -> Result<Vec<Rat>> {
    if row.len() != n {
        return Err(Error::input(format!(
            "{what} lists {} values for {n} outcomes",
            row.len()
        )));
    }
    row.iter().map(|s| parse_rat(s)).collect()
}

fn outcome_positions(doc: &ModelDocument, labels: &[String], what: &str) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            doc.outcomes
                .iter()
                .position(|o| o == l)
                .ok_or_else(|| Error::input(format!("{what} names unknown outcome {l}")))
        })
        .collect()
}

/// Builds the space, market, and optional extras, failing on the first
/// violated invariant.
pub fn build(doc: &ModelDocument) -> Result<BuiltModel> {
    let n = doc.outcomes.len();
    let prob = parse_row(&doc.probabilities, n, "probabilities")?;
    if doc.partitions.len() != doc.times.len() {
        return Err(Error::input(format!(
            "{} partitions for {} times",
            doc.partitions.len(),
            doc.times.len()
        )));
    }
    let mut partitions = Vec::with_capacity(doc.partitions.len());
    for (t, part) in doc.partitions.iter().enumerate() {
        let mut atoms = Vec::with_capacity(part.len());
        for atom in part {
            atoms.push(outcome_positions(
                doc,
                atom,
                &format!("partition at time {}", doc.times.get(t).cloned().unwrap_or_default()),
            )?);
        }
        partitions.push(atoms);
    }
    let space = FilteredSpace::new(
        doc.outcomes.clone(),
        doc.times.clone(),
        partitions,
        prob,
    )?;

    if doc.prices.len() != space.num_times() {
        return Err(Error::input(format!(
            "{} price layers for {} times",
            doc.prices.len(),
            space.num_times()
        )));
    }
    let mut layers = Vec::with_capacity(doc.prices.len());
    for (t, layer) in doc.prices.iter().enumerate() {
        if layer.len() != n {
            return Err(Error::input(format!(
                "price layer {t} lists {} outcomes, the space has {n}",
                layer.len()
            )));
        }
        let mut values = Vec::with_capacity(n);
        for (w, coords) in layer.iter().enumerate() {
            let row = coords.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?;
            if row.len() != doc.assets {
                return Err(Error::input(format!(
                    "price at time {t}, outcome {}: {} coordinates for {} assets",
                    doc.outcomes[w],
                    row.len(),
                    doc.assets
                )));
            }
            values.push(row);
        }
        layers.push(VecRv::new(doc.assets, values));
    }
    let prices = AdaptedProcess::new(&space, layers)?;
    let model = MarketModel::new(space, prices)?;
    let space = &model.space;

    let payoff = match &doc.payoff {
        Some(row) => Some(Rv::new(parse_row(row, n, "payoff")?)),
        None => None,
    };
    let menu = match &doc.menu {
        Some(m) => {
            let anchor = space.time_index(&m.anchor)?;
            if m.names.len() != m.entries.len() {
                return Err(Error::input(format!(
                    "menu pairs {} names with {} entries",
                    m.names.len(),
                    m.entries.len()
                )));
            }
            let entries = m
                .entries
                .iter()
                .enumerate()
                .map(|(i, row)| Ok(Rv::new(parse_row(row, n, &format!("menu entry {}", m.names[i]))?)))
                .collect::<Result<Vec<_>>>()?;
            Some(PortfolioMenu::new(space, anchor, m.names.clone(), entries)?)
        }
        None => None,
    };
    let sequences = match &doc.sequences {
        Some(seqs) => seqs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let prefix = s
                    .prefix
                    .iter()
                    .map(|row| Ok(Rv::new(parse_row(row, n, &format!("sequence {i} prefix"))?)))
                    .collect::<Result<Vec<_>>>()?;
                let tail = match &s.tail {
                    TailDocument::Constant => Tail::Constant,
                    TailDocument::Periodic(p) => Tail::Periodic(*p),
                    TailDocument::Monotone(row) => {
                        if row.len() != n {
                            return Err(Error::input(format!(
                                "sequence {i} limit lists {} values for {n} outcomes",
                                row.len()
                            )));
                        }
                        Tail::Monotone(
                            row.iter().map(|v| Ext::parse(v)).collect::<Result<Vec<_>>>()?,
                        )
                    }
                };
                SequenceSpec::new(space, prefix, tail)
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    Ok(BuiltModel {
        model,
        payoff,
        menu,
        sequences,
    })
}

/// Runs every document invariant and reports all violations, not just the
/// first; an empty list means the document builds.
pub fn validate(doc: &ModelDocument) -> Vec<String> {
    let mut out = Vec::new();
    let n = doc.outcomes.len();
    if n == 0 {
        out.push("no outcomes".to_string());
    }
    for (i, label) in doc.outcomes.iter().enumerate() {
        if doc.outcomes[..i].contains(label) {
            out.push(format!("duplicate outcome label {label}"));
        }
    }
    for (i, label) in doc.times.iter().enumerate() {
        if doc.times[..i].contains(label) {
            out.push(format!("duplicate time label {label}"));
        }
    }
    if doc.times.is_empty() {
        out.push("no times".to_string());
    }

    // Probabilities: parse, positivity, exact unit mass.
    if doc.probabilities.len() != n {
        out.push(format!(
            "{} probabilities for {n} outcomes",
            doc.probabilities.len()
        ));
    }
    let mut masses = Vec::new();
    for (w, s) in doc.probabilities.iter().enumerate() {
        match parse_rat(s) {
            Ok(p) => {
                if !p.is_positive() {
                    out.push(format!("probability of outcome {w} is {s}, not positive"));
                }
                masses.push(p);
            }
            Err(e) => out.push(format!("probability {w}: {e}")),
        }
    }
    if masses.len() == doc.probabilities.len() && !masses.is_empty() {
        let total: Rat = masses.iter().cloned().sum();
        if !total.is_one() {
            out.push(format!("probabilities sum to {} != 1", format_rat(&total)));
        }
    }

    // Partitions: known labels, exact coverage, refinement, terminal
    // singletons.
    if doc.partitions.len() != doc.times.len() {
        out.push(format!(
            "{} partitions for {} times",
            doc.partitions.len(),
            doc.times.len()
        ));
    }
    let resolve = |atom: &[String]| -> (Vec<usize>, Vec<String>) {
        let mut ids = Vec::new();
        let mut missing = Vec::new();
        for l in atom {
            match doc.outcomes.iter().position(|o| o == l) {
                Some(i) => ids.push(i),
                None => missing.push(l.clone()),
            }
        }
        (ids, missing)
    };
    let mut resolved: Vec<Option<Vec<Vec<usize>>>> = Vec::new();
    for (t, part) in doc.partitions.iter().enumerate() {
        let tname = doc.times.get(t).cloned().unwrap_or_else(|| t.to_string());
        let mut atoms = Vec::new();
        let mut seen = vec![0usize; n];
        let mut clean = true;
        for atom in part {
            let (ids, missing) = resolve(atom);
            for l in missing {
                out.push(format!("partition at time {tname} names unknown outcome {l}"));
                clean = false;
            }
            for &w in &ids {
                seen[w] += 1;
            }
            atoms.push(ids);
        }
        for (w, &count) in seen.iter().enumerate() {
            if count == 0 {
                out.push(format!(
                    "partition at time {tname} misses outcome {}",
                    doc.outcomes[w]
                ));
                clean = false;
            } else if count > 1 {
                out.push(format!(
                    "partition at time {tname} repeats outcome {}",
                    doc.outcomes[w]
                ));
                clean = false;
            }
        }
        resolved.push(if clean { Some(atoms) } else { None });
    }
    for t in 1..resolved.len() {
        if let (Some(prev), Some(cur)) = (&resolved[t - 1], &resolved[t]) {
            for atom in cur {
                let inside_one = prev.iter().any(|p| atom.iter().all(|w| p.contains(w)));
                if !inside_one {
                    let named: Vec<&str> =
                        atom.iter().map(|&w| doc.outcomes[w].as_str()).collect();
                    out.push(format!(
                        "atom {{{}}} at time {} splits across earlier atoms",
                        named.join(", "),
                        doc.times[t]
                    ));
                }
            }
        }
    }
    if let Some(Some(last)) = resolved.last() {
        for atom in last {
            if atom.len() > 1 {
                let named: Vec<&str> = atom.iter().map(|&w| doc.outcomes[w].as_str()).collect();
                out.push(format!(
                    "terminal atom {{{}}} is not a single outcome",
                    named.join(", ")
                ));
            }
        }
    }

    // Prices: shape, parse, nonnegative, measurable per date.
    if doc.prices.len() != doc.times.len() {
        out.push(format!(
            "{} price layers for {} times",
            doc.prices.len(),
            doc.times.len()
        ));
    }
    for (t, layer) in doc.prices.iter().enumerate() {
        let tname = doc.times.get(t).cloned().unwrap_or_else(|| t.to_string());
        if layer.len() != n {
            out.push(format!(
                "price layer at time {tname} lists {} outcomes for {n}",
                layer.len()
            ));
            continue;
        }
        let mut parsed: Vec<Option<Vec<Rat>>> = Vec::new();
        for (w, coords) in layer.iter().enumerate() {
            if coords.len() != doc.assets {
                out.push(format!(
                    "price at time {tname}, outcome {}: {} coordinates for {} assets",
                    doc.outcomes[w],
                    coords.len(),
                    doc.assets
                ));
                parsed.push(None);
                continue;
            }
            let mut row = Vec::new();
            let mut ok = true;
            for s in coords {
                match parse_rat(s) {
                    Ok(v) => {
                        if v.is_negative() {
                            out.push(format!(
                                "price at time {tname}, outcome {} is negative",
                                doc.outcomes[w]
                            ));
                        }
                        row.push(v);
                    }
                    Err(e) => {
                        out.push(format!("price at time {tname}: {e}"));
                        ok = false;
                    }
                }
            }
            parsed.push(if ok { Some(row) } else { None });
        }
        if let Some(Some(atoms)) = resolved.get(t) {
            for atom in atoms {
                let rows: Vec<&Vec<Rat>> = atom
                    .iter()
                    .filter_map(|&w| parsed.get(w).and_then(|r| r.as_ref()))
                    .collect();
                if rows.len() == atom.len() && rows.windows(2).any(|p| p[0] != p[1]) {
                    let named: Vec<&str> =
                        atom.iter().map(|&w| doc.outcomes[w].as_str()).collect();
                    out.push(format!(
                        "price at time {tname} differs inside atom {{{}}}",
                        named.join(", ")
                    ));
                }
            }
        }
    }

    // Optional sections.
    if let Some(payoff) = &doc.payoff {
        if payoff.len() != n {
            out.push(format!("payoff lists {} values for {n} outcomes", payoff.len()));
        }
        for s in payoff {
            if let Err(e) = parse_rat(s) {
                out.push(format!("payoff: {e}"));
            }
        }
    }
    if let Some(menu) = &doc.menu {
        if !doc.times.contains(&menu.anchor) {
            out.push(format!("menu anchor {} is not a time label", menu.anchor));
        }
        if menu.names.len() != menu.entries.len() {
            out.push(format!(
                "menu pairs {} names with {} entries",
                menu.names.len(),
                menu.entries.len()
            ));
        }
        for (i, name) in menu.names.iter().enumerate() {
            if menu.names[..i].contains(name) {
                out.push(format!("duplicate menu entry name {name}"));
            }
        }
        for (i, entry) in menu.entries.iter().enumerate() {
            if entry.len() != n {
                out.push(format!(
                    "menu entry {i} lists {} values for {n} outcomes",
                    entry.len()
                ));
            }
            for s in entry {
                if let Err(e) = parse_rat(s) {
                    out.push(format!("menu entry {i}: {e}"));
                }
            }
        }
    }
    if let Some(seqs) = &doc.sequences {
        for (i, s) in seqs.iter().enumerate() {
            if s.prefix.is_empty() {
                out.push(format!("sequence {i} has an empty prefix"));
            }
            for row in &s.prefix {
                if row.len() != n {
                    out.push(format!(
                        "sequence {i} prefix row lists {} values for {n} outcomes",
                        row.len()
                    ));
                }
                for v in row {
                    if let Err(e) = parse_rat(v) {
                        out.push(format!("sequence {i}: {e}"));
                    }
                }
            }
            match &s.tail {
                TailDocument::Constant => {}
                TailDocument::Periodic(p) => {
                    if *p == 0 || *p > s.prefix.len() {
                        out.push(format!(
                            "sequence {i} period {p} does not fit its prefix of {}",
                            s.prefix.len()
                        ));
                    }
                }
                TailDocument::Monotone(limit) => {
                    if limit.len() != n {
                        out.push(format!(
                            "sequence {i} limit lists {} values for {n} outcomes",
                            limit.len()
                        ));
                    }
                    for v in limit {
                        if let Err(e) = Ext::parse(v) {
                            out.push(format!("sequence {i} limit: {e}"));
                        }
                    }
                }
            }
        }
    }

    // Whatever the piecewise checks missed, the real constructors catch.
    if out.is_empty() {
        if let Err(e) = build(doc) {
            out.push(e.to_string());
        }
    }
    out
}

/// Renders an in-memory model back into a document.
pub fn describe(model: &MarketModel) -> ModelDocument {
    let space = &model.space;
    let n = space.num_outcomes();
    ModelDocument {
        outcomes: (0..n).map(|w| space.outcome_label(w).to_string()).collect(),
        probabilities: (0..n).map(|w| format_rat(space.prob(w))).collect(),
        times: (0..space.num_times())
            .map(|t| space.time_label(t).to_string())
            .collect(),
        partitions: (0..space.num_times())
            .map(|t| {
                space
                    .atoms(t)
                    .iter()
                    .map(|atom| {
                        atom.iter()
                            .map(|&w| space.outcome_label(w).to_string())
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        assets: model.dim(),
        prices: (0..space.num_times())
            .map(|t| {
                (0..n)
                    .map(|w| model.prices.at(t, w).iter().map(format_rat).collect())
                    .collect()
            })
            .collect(),
        payoff: None,
        menu: None,
        sequences: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn sample() -> ModelDocument {
        parse_document(
            r#"{
            "outcomes": ["u", "d"],
            "probabilities": ["1/2", "1/2"],
            "times": ["0", "1"],
            "partitions": [[["u", "d"]], [["u"], ["d"]]],
            "assets": 1,
            "prices": [[["1"], ["1"]], [["2"], ["1/2"]]],
            "payoff": ["1", "0"]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn documents_build_and_round_trip() {
        let doc = sample();
        assert!(validate(&doc).is_empty());
        let built = build(&doc).unwrap();
        assert_eq!(built.model.dim(), 1);
        assert_eq!(built.model.prices.at(1, 1), &[rat(1, 2)]);
        assert_eq!(built.payoff.unwrap().values, vec![rat(1, 1), rat(0, 1)]);
        let rendered = render_document(&doc);
        assert_eq!(parse_document(&rendered).unwrap(), doc);
    }

    #[test]
    fn bad_mass_and_bad_refinement_are_both_reported() {
        let mut doc = sample();
        doc.probabilities = vec!["1/2".into(), "2/5".into()];
        doc.partitions = vec![
            vec![vec!["u".into()], vec!["d".into()]],
            vec![vec!["u".into(), "d".into()]],
        ];
        let violations = validate(&doc);
        assert!(violations.iter().any(|v| v == "probabilities sum to 9/10 != 1"));
        assert!(violations
            .iter()
            .any(|v| v.contains("atom {u, d} at time 1 splits across earlier atoms")));
        assert!(violations
            .iter()
            .any(|v| v.contains("terminal atom {u, d} is not a single outcome")));
        assert!(build(&doc).is_err());
    }

    #[test]
    fn non_measurable_prices_are_named() {
        let mut doc = sample();
        doc.prices[0] = vec![vec!["1".into()], vec!["3".into()]];
        let violations = validate(&doc);
        assert!(violations
            .iter()
            .any(|v| v.contains("price at time 0 differs inside atom {u, d}")));
    }

    #[test]
    fn sequences_and_menu_sections_validate() {
        let mut doc = sample();
        doc.menu = Some(MenuDocument {
            anchor: "9".into(),
            names: vec!["a".into(), "a".into()],
            entries: vec![vec!["1".into(), "2".into()], vec!["0".into()]],
        });
        doc.sequences = Some(vec![SequenceDocument {
            prefix: vec![vec!["1".into(), "1".into()]],
            tail: TailDocument::Periodic(3),
        }]);
        let violations = validate(&doc);
        assert!(violations.iter().any(|v| v.contains("anchor 9")));
        assert!(violations.iter().any(|v| v.contains("duplicate menu entry name a")));
        assert!(violations.iter().any(|v| v.contains("menu entry 1 lists 1 values")));
        assert!(violations.iter().any(|v| v.contains("period 3")));
    }
}
