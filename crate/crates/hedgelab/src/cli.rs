//! Command-line front end. Every command loads one JSON model document,
//! computes a verdict with certificates, re-verifies each certificate, and
//! prints a report. Exit codes: 0 verdict computed, 2 invalid input, 3 a
//! certificate failed its own re-check.

use crate::arbitrage::{
    check_aip, check_aip_stopping, check_na, check_nupbr, find_emm, ArbitrageWitness, NaOutcome,
    WitnessKind,
};
use crate::conditional::cond_esssup;
use crate::document::{build, parse_document, validate, BuiltModel};
use crate::market::{portfolio_value, PortfolioMenu, Revision, SimpleStrategy};
use crate::maxingale::{
    cond_esssup_at, is_strong_sub_maxingale, is_sub_maxingale, lemma_suite, strong_gap_search,
    value_at, StoppingTime,
};
use crate::pricing::{
    closed_price_invariance, id_extension_price_set, menu_price_membership, menu_price_set,
    superhedge_dp, PriceSetDescription,
};
use crate::rational::{format_rat, rint, Ext, Rat};
use crate::report::Report;
use crate::space::{FilteredSpace, Rv};
use crate::topology::{converges, is_cauchy, is_limit, pdist, pdist_hat, CauchyWitness, SequenceSpec};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use num_traits::Zero;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Instant;

const STOPPING_PAIR_BUDGET: usize = 4000;
const MAXINGALE_BUDGET: usize = 10_000;
const GAP_ATTEMPTS: usize = 40;

#[derive(Parser)]
#[command(
    name = "hedgelab",
    version,
    about = "Arbitrage detection and super-hedging prices on finite event trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Path to a JSON model document.
    #[arg(long)]
    model: PathBuf,
    /// Time label, for commands anchored at one date.
    #[arg(long)]
    time: Option<String>,
    /// Menu entry name, for commands that single out one claim.
    #[arg(long)]
    claim: Option<String>,
    /// Work budget for sampled stopping-time searches.
    #[arg(long)]
    budget: Option<usize>,
    /// Render the report as plain text instead of JSON.
    #[arg(long)]
    human: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check absence of instantaneous profits, date by date.
    CheckAip(ModelArgs),
    /// Check absence of instantaneous profits over stopping-time pairs.
    CheckAipStopping(ModelArgs),
    /// Check classical no-arbitrage.
    CheckNa(ModelArgs),
    /// Search for an equivalent martingale measure.
    FindEmm(ModelArgs),
    /// Check for unbounded profit with bounded risk.
    CheckNupbr(ModelArgs),
    /// Minimal super-hedging price of the document payoff.
    Price(ModelArgs),
    /// Price the payoff against the menu, with the glued infimum.
    PriceMenu(ModelArgs),
    /// Test the claimed entry against the price set of the other entries.
    PriceMembership(ModelArgs),
    /// Check the price infimum is stable under the document's sequences.
    ClosedPrice(ModelArgs),
    /// Pseudo-distance diagnostics.
    #[command(subcommand)]
    Topology(TopologyCmd),
    /// Maxingale property checks on the price process.
    #[command(subcommand)]
    Maxingale(MaxingaleCmd),
    /// Randomized searches.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// List every violated document invariant.
    Validate(ModelArgs),
}

#[derive(Subcommand)]
enum TopologyCmd {
    /// Gauge between the first two menu entries at the anchor date.
    Pdist(ModelArgs),
    /// Convergence of each document sequence.
    Converges(ModelArgs),
    /// Whether the claimed menu entry is a limit of each sequence.
    IsLimit(ModelArgs),
    /// Cauchy analysis of each document sequence.
    Cauchy(ModelArgs),
}

#[derive(Subcommand)]
enum MaxingaleCmd {
    /// Date-indexed sub-maxingale test, one verdict per asset.
    Sub(ModelArgs),
    /// Stopping-time-indexed sub-maxingale test, one verdict per asset.
    Strong(ModelArgs),
    /// The masking, stability, and bridge identities, one run per asset.
    LemmaSuite(ModelArgs),
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Hunt for a date-indexed sub-maxingale without the strong property.
    StrongGap(ModelArgs),
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let started = Instant::now();
    match dispatch(&cli.command) {
        Ok((human, mut report)) => {
            report.timing_ms = started.elapsed().as_millis();
            if human {
                print!("{}", report.to_human());
            } else {
                println!("{}", report.to_json());
            }
            0
        }
        Err(e @ Error::InvalidInput(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e @ Error::Verification(_)) => {
            eprintln!("error: {e}");
            3
        }
    }
}

fn seed_from_env() -> Result<u64> {
    match std::env::var("HEDGELAB_SEED") {
        Ok(s) => s
            .parse::<u64>()
            .map_err(|_| Error::input(format!("HEDGELAB_SEED must be an unsigned integer, got {s}"))),
        Err(_) => Ok(0),
    }
}

fn load(args: &ModelArgs) -> Result<BuiltModel> {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", args.model.display())))?;
    build(&parse_document(&text)?)
}

fn dispatch(command: &Command) -> Result<(bool, Report)> {
    match command {
        Command::CheckAip(a) => run_check_aip(a),
        Command::CheckAipStopping(a) => run_check_aip_stopping(a),
        Command::CheckNa(a) => run_check_na(a),
        Command::FindEmm(a) => run_find_emm(a),
        Command::CheckNupbr(a) => run_check_nupbr(a),
        Command::Price(a) => run_price(a),
        Command::PriceMenu(a) => run_price_menu(a),
        Command::PriceMembership(a) => run_price_membership(a),
        Command::ClosedPrice(a) => run_closed_price(a),
        Command::Topology(TopologyCmd::Pdist(a)) => run_pdist(a),
        Command::Topology(TopologyCmd::Converges(a)) => run_converges(a),
        Command::Topology(TopologyCmd::IsLimit(a)) => run_is_limit(a),
        Command::Topology(TopologyCmd::Cauchy(a)) => run_cauchy(a),
        Command::Maxingale(MaxingaleCmd::Sub(a)) => run_maxingale_sub(a),
        Command::Maxingale(MaxingaleCmd::Strong(a)) => run_maxingale_strong(a),
        Command::Maxingale(MaxingaleCmd::LemmaSuite(a)) => run_lemma_suite(a),
        Command::Experiment(ExperimentCmd::StrongGap(a)) => run_strong_gap(a),
        Command::Validate(a) => run_validate(a),
    }
}

// ---- JSON shapes for the certificate payloads -------------------------

fn rv_json(x: &Rv) -> Value {
    Value::Array(x.values.iter().map(|v| json!(format_rat(v))).collect())
}

fn rat_list(xs: &[Rat]) -> Value {
    Value::Array(xs.iter().map(|v| json!(format_rat(v))).collect())
}

fn ext_list(xs: &[Ext]) -> Value {
    Value::Array(xs.iter().map(|v| json!(v.to_string())).collect())
}

fn strategy_json(strategy: &SimpleStrategy) -> Value {
    let revision = match &strategy.revision {
        Revision::Deterministic(dates) => json!({ "dates": dates }),
        Revision::Stopping(times) => json!({
            "stopping_times": times.iter().map(|t| t.values().to_vec()).collect::<Vec<_>>()
        }),
    };
    let positions: Vec<Value> = strategy
        .positions
        .iter()
        .map(|layer| {
            Value::Array(
                layer
                    .values
                    .iter()
                    .map(|coords| rat_list(coords))
                    .collect(),
            )
        })
        .collect();
    json!({ "revision": revision, "positions": positions })
}

fn witness_json(model: &crate::market::MarketModel, w: &ArbitrageWitness) -> Result<Value> {
    w.verify(model)?;
    let kind = match &w.kind {
        WitnessKind::InstantaneousProfit { time, atom, floor } => json!({
            "type": "instantaneous-profit",
            "time": time,
            "atom": atom,
            "floor": format_rat(floor),
        }),
        WitnessKind::NaViolation => json!({ "type": "arbitrage" }),
        WitnessKind::ConeDirection => json!({ "type": "cone-direction" }),
    };
    Ok(json!({
        "kind": kind,
        "strategy": strategy_json(&w.strategy),
        "terminal_value": rv_json(&w.terminal_value),
    }))
}

fn optional_witness(
    model: &crate::market::MarketModel,
    w: &Option<ArbitrageWitness>,
) -> Result<Value> {
    Ok(match w {
        Some(w) => witness_json(model, w)?,
        None => Value::Null,
    })
}

fn price_set_json(space: &FilteredSpace, menu: &PortfolioMenu, desc: &PriceSetDescription) -> Value {
    let entry_prices: Vec<Value> = menu
        .names
        .iter()
        .zip(&desc.entry_prices)
        .map(|(name, p)| json!({ "name": name, "price": rv_json(p) }))
        .collect();
    json!({
        "anchor": space.time_label(desc.time),
        "entry_prices": entry_prices,
        "infimum": ext_list(&desc.pi),
        "attained_on": desc.lambda,
        "uniform_attainer": desc.uniform_attainer.map(|i| menu.names[i].clone()),
    })
}

// ---- Command bodies ---------------------------------------------------

fn verdict_word(holds: bool) -> String {
    if holds { "holds" } else { "fails" }.to_string()
}

fn run_check_aip(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let report = check_aip(&built.model)?;
    let certs = json!({
        "hull_checks": report.hull_checks,
        "failure": report.failure.map(|(t, a)| json!({ "time": t, "atom": a })),
        "witness": optional_witness(&built.model, &report.witness)?,
    });
    Ok((
        args.human,
        Report::new("check-aip", verdict_word(report.holds), certs),
    ))
}

fn run_check_aip_stopping(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let seed = seed_from_env()?;
    let budget = args.budget.unwrap_or(STOPPING_PAIR_BUDGET);
    let report = check_aip_stopping(&built.model, budget, seed)?;
    let certs = json!({
        "exhaustive": report.exhaustive,
        "pairs_checked": report.pairs_checked,
        "hull_checks": report.hull_checks,
        "failing_pair": report.failing_pair.as_ref().map(|(s, t)| json!({
            "earlier": s, "later": t,
        })),
        "witness": optional_witness(&built.model, &report.witness)?,
    });
    let mut out = Report::new("check-aip-stopping", verdict_word(report.holds), certs);
    out.seed = Some(seed);
    Ok((args.human, out))
}

fn run_check_na(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let report = check_na(&built.model)?;
    let emm = match &report.emm {
        Some(emm) => {
            emm.verify(&built.model)?;
            json!({ "q": rat_list(&emm.q), "margin": format_rat(&emm.margin) })
        }
        None => Value::Null,
    };
    let certs = json!({
        "martingale_measure": emm,
        "witness": optional_witness(&built.model, &report.witness)?,
    });
    Ok((
        args.human,
        Report::new("check-na", verdict_word(report.holds), certs),
    ))
}

fn run_find_emm(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let (verdict, certs) = match find_emm(&built.model)? {
        NaOutcome::Emm(emm) => {
            emm.verify(&built.model)?;
            (
                "found".to_string(),
                json!({ "q": rat_list(&emm.q), "margin": format_rat(&emm.margin) }),
            )
        }
        NaOutcome::Violation(w) => (
            "none".to_string(),
            json!({ "witness": witness_json(&built.model, &w)? }),
        ),
    };
    Ok((args.human, Report::new("find-emm", verdict, certs)))
}

fn run_check_nupbr(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let report = check_nupbr(&built.model, &rint(1))?;
    let certs = json!({
        "optimum": report.optimum.to_string(),
        "floor": format_rat(&report.floor),
        "witness": optional_witness(&built.model, &report.witness)?,
    });
    Ok((
        args.human,
        Report::new("check-nupbr", verdict_word(report.holds), certs),
    ))
}

fn payoff_of(built: &BuiltModel) -> Result<&Rv> {
    built
        .payoff
        .as_ref()
        .ok_or_else(|| Error::input("the document has no payoff"))
}

fn menu_of(built: &BuiltModel) -> Result<&PortfolioMenu> {
    built
        .menu
        .as_ref()
        .ok_or_else(|| Error::input("the document has no menu"))
}

fn run_price(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let h = payoff_of(&built)?;
    let result = superhedge_dp(&built.model, h)?;
    let space = &built.model.space;
    // Emission check: the assembled stand-alone hedge really dominates the
    // claim from the computed initial capital.
    if let Some(strategy) = &result.strategy {
        let gains = portfolio_value(&built.model, strategy, space.last_time())?;
        for w in 0..space.num_outcomes() {
            let p0 = result
                .prices
                .at(0, w)
                .as_rat()
                .ok_or_else(|| Error::verify("a hedged root prices at infinity"))?;
            if &(p0 + &gains.values[w]) < &h.values[w] {
                return Err(Error::verify("the minimal hedge fails to cover the payoff"));
            }
        }
    }
    let layers: Vec<Value> = (0..space.num_times())
        .map(|t| {
            Value::Array(
                (0..space.num_outcomes())
                    .map(|w| json!(result.prices.at(t, w).to_string()))
                    .collect(),
            )
        })
        .collect();
    let roots: Vec<String> = space.atoms(0)
        .iter()
        .map(|atom| result.prices.at(0, atom[0]).to_string())
        .collect();
    let verdict = format!("initial price {}", roots.join(", "));
    let certs = json!({
        "prices": layers,
        "strategy": result.strategy.as_ref().map(strategy_json),
    });
    Ok((args.human, Report::new("price", verdict, certs)))
}

fn run_price_menu(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let h = payoff_of(&built)?;
    let menu = menu_of(&built)?;
    let space = &built.model.space;
    let ids = id_extension_price_set(space, menu, h)?;
    // Emission check: the glued claim prices back to the infimum exactly.
    if let Some(attainer) = &ids.attainer {
        let price = cond_esssup(space, ids.desc.time, &h.sub(attainer))?;
        for w in 0..space.num_outcomes() {
            if ids.desc.pi[w] != Ext::fin(price.values[w].clone()) {
                return Err(Error::verify("the glued claim misses the infimum"));
            }
        }
    }
    let pi_text: Vec<String> = ids.desc.pi.iter().map(|e| e.to_string()).collect();
    let verdict = format!("infimum [{}]", pi_text.join(", "));
    let certs = json!({
        "price_set": price_set_json(space, menu, &ids.desc),
        "assignment": ids.assignment.iter().map(|&i| menu.names[i].clone()).collect::<Vec<_>>(),
        "glued_attainer": ids.attainer.as_ref().map(rv_json),
    });
    Ok((args.human, Report::new("price-menu", verdict, certs)))
}

fn claim_index(menu: &PortfolioMenu, args: &ModelArgs) -> Result<usize> {
    let name = args
        .claim
        .as_ref()
        .ok_or_else(|| Error::input("--claim must name a menu entry"))?;
    menu.names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::input(format!("no menu entry named {name}")))
}

fn run_price_membership(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let h = payoff_of(&built)?;
    let menu = menu_of(&built)?;
    let space = &built.model.space;
    // The claimed entry is the candidate; the others form the menu it is
    // tested against.
    let idx = claim_index(menu, args)?;
    let candidate = &menu.entries[idx];
    let mut names = menu.names.clone();
    let mut entries = menu.entries.clone();
    names.remove(idx);
    entries.remove(idx);
    let rest = PortfolioMenu::new(space, menu.anchor, names, entries)?;
    let desc = menu_price_set(space, &rest, h)?;
    let candidate_price = cond_esssup(space, desc.time, &h.sub(candidate))?;
    let report = menu_price_membership(space, &desc, &candidate_price)?;
    // Emission checks: domination and shortfall certificates replay.
    if let Some(i) = report.dominated_entry {
        for w in 0..space.num_outcomes() {
            if candidate_price.values[w] < desc.entry_prices[i].values[w] {
                return Err(Error::verify("the dominated entry is not dominated"));
            }
        }
    }
    if let Some(w) = report.shortfall {
        if Ext::fin(candidate_price.values[w].clone()) >= desc.pi[w] {
            return Err(Error::verify("the shortfall outcome does not undercut"));
        }
    }
    let verdict = if report.in_raw {
        "in the raw price set"
    } else if report.in_extended {
        "in the extended price set only"
    } else {
        "outside the price set"
    };
    let certs = json!({
        "candidate": menu.names[idx],
        "candidate_price": rv_json(&candidate_price),
        "dominated_entry": report.dominated_entry.map(|i| rest.names[i].clone()),
        "shortfall_outcome": report.shortfall.map(|w| space.outcome_label(w).to_string()),
        "price_set": price_set_json(space, &rest, &desc),
    });
    Ok((
        args.human,
        Report::new("price-membership", verdict.to_string(), certs),
    ))
}

fn run_closed_price(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let h = payoff_of(&built)?;
    let menu = menu_of(&built)?;
    let space = &built.model.space;
    let report = closed_price_invariance(space, menu, h, &built.sequences)?;
    // Emission check: no adjoined limit prices below the infimum.
    for fate in &report.fates {
        if let Some(price) = &fate.limit_price {
            for w in 0..space.num_outcomes() {
                if Ext::fin(price.values[w].clone()) < report.pi[w] {
                    if !fate.lowered_pi {
                        return Err(Error::verify("a lowered infimum went unreported"));
                    }
                }
            }
        }
    }
    let verdict = if report.invariant {
        "invariant"
    } else {
        "infimum moved"
    };
    let fates: Vec<Value> = report
        .fates
        .iter()
        .map(|f| {
            json!({
                "convergent": f.convergent,
                "divergent_outcome": f.divergent_outcome.map(|w| space.outcome_label(w).to_string()),
                "limit_price": f.limit_price.as_ref().map(rv_json),
                "lowered_infimum": f.lowered_pi,
            })
        })
        .collect();
    let certs = json!({
        "infimum": ext_list(&report.pi),
        "sequences": fates,
    });
    Ok((
        args.human,
        Report::new("closed-price", verdict.to_string(), certs),
    ))
}

fn anchor_time(space: &FilteredSpace, args: &ModelArgs) -> Result<usize> {
    match &args.time {
        Some(label) => space.time_index(label),
        None => Ok(0),
    }
}

fn run_pdist(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let menu = menu_of(&built)?;
    if menu.len() < 2 {
        return Err(Error::input("the gauge needs two menu entries"));
    }
    let space = &built.model.space;
    let t = anchor_time(space, args)?;
    let x = &menu.entries[0];
    let y = &menu.entries[1];
    let plain = pdist(space, x, y)?;
    let atomwise = pdist_hat(space, t, x, y)?;
    if plain > atomwise {
        return Err(Error::verify("the plain gauge exceeded the atomwise one"));
    }
    let verdict = format!("gauge {}, atomwise {}", format_rat(&plain), format_rat(&atomwise));
    let certs = json!({
        "between": [menu.names[0], menu.names[1]],
        "time": space.time_label(t),
        "gauge": format_rat(&plain),
        "atomwise_gauge": format_rat(&atomwise),
    });
    Ok((args.human, Report::new("topology pdist", verdict, certs)))
}

fn sequences_of(built: &BuiltModel) -> Result<&[SequenceSpec]> {
    if built.sequences.is_empty() {
        return Err(Error::input("the document has no sequences"));
    }
    Ok(&built.sequences)
}

fn run_converges(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let seqs = sequences_of(&built)?;
    let space = &built.model.space;
    let t = anchor_time(space, args)?;
    let mut rows = Vec::new();
    let mut all = true;
    for seq in seqs {
        let verdict = converges(space, t, seq)?;
        // Emission check: the canonical limit is accepted by the limit test.
        if let Some(limit) = &verdict.canonical_limit {
            if !is_limit(space, t, seq, limit)?.accepted {
                return Err(Error::verify("the canonical limit fails the limit test"));
            }
        }
        all &= verdict.converges;
        rows.push(json!({
            "converges": verdict.converges,
            "infimum": ext_list(&verdict.infimum),
            "canonical_limit": verdict.canonical_limit.as_ref().map(rv_json),
            "divergent_outcome": verdict
                .divergent_outcome
                .map(|w| space.outcome_label(w).to_string()),
        }));
    }
    let verdict = if all { "all converge" } else { "divergence" };
    let certs = json!({ "time": space.time_label(t), "sequences": rows });
    Ok((
        args.human,
        Report::new("topology converges", verdict.to_string(), certs),
    ))
}

fn run_is_limit(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let seqs = sequences_of(&built)?;
    let menu = menu_of(&built)?;
    let idx = claim_index(menu, args)?;
    let z = &menu.entries[idx];
    let space = &built.model.space;
    let t = anchor_time(space, args)?;
    let mut rows = Vec::new();
    let mut all = true;
    for seq in seqs {
        let verdict = is_limit(space, t, seq, z)?;
        // Emission check: acceptance means exactly that every deciding
        // excess vanishes.
        let tail_clean = verdict.decisive_alphas.iter().all(|a| a.values.iter().all(Rat::is_zero));
        if verdict.accepted != tail_clean {
            return Err(Error::verify("the limit verdict contradicts its witnesses"));
        }
        all &= verdict.accepted;
        rows.push(json!({
            "accepted": verdict.accepted,
            "prefix_excesses": verdict.prefix_alphas.iter().map(rv_json).collect::<Vec<_>>(),
            "deciding_excesses": verdict.decisive_alphas.iter().map(rv_json).collect::<Vec<_>>(),
        }));
    }
    let verdict = if all { "limit" } else { "not a limit" };
    let certs = json!({
        "candidate": menu.names[idx],
        "time": space.time_label(t),
        "sequences": rows,
    });
    Ok((
        args.human,
        Report::new("topology is-limit", verdict.to_string(), certs),
    ))
}

fn run_cauchy(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let seqs = sequences_of(&built)?;
    let space = &built.model.space;
    let t = anchor_time(space, args)?;
    let mut rows = Vec::new();
    let mut all = true;
    for seq in seqs {
        let verdict = is_cauchy(space, t, seq)?;
        let witness = match &verdict.witness {
            Some(CauchyWitness::DistinctPeriod { i, j, dist }) => {
                // Emission check: the named members really sit apart.
                let a = seq.member(*i);
                let b = seq.member(*j);
                let wide = pdist_hat(space, t, &a, &b)?.max(pdist_hat(space, t, &b, &a)?);
                if &wide != dist {
                    return Err(Error::verify("the separated pair is not that far apart"));
                }
                json!({ "kind": "separated-pair", "members": [i, j], "distance": format_rat(dist) })
            }
            Some(CauchyWitness::UnboundedOutcome(w)) => {
                json!({ "kind": "unbounded-tail", "outcome": space.outcome_label(*w) })
            }
            None => Value::Null,
        };
        all &= verdict.cauchy;
        rows.push(json!({ "cauchy": verdict.cauchy, "witness": witness }));
    }
    let verdict = if all { "cauchy" } else { "not cauchy" };
    let certs = json!({ "time": space.time_label(t), "sequences": rows });
    Ok((
        args.human,
        Report::new("topology cauchy", verdict.to_string(), certs),
    ))
}

fn price_layers(built: &BuiltModel, coordinate: usize) -> Vec<Rv> {
    (0..built.model.space.num_times())
        .map(|t| built.model.prices.layer(t).coordinate(coordinate))
        .collect()
}

fn run_maxingale_sub(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let space = &built.model.space;
    let mut rows = Vec::new();
    let mut all = true;
    for i in 0..built.model.dim() {
        let m = price_layers(&built, i);
        let verdict = is_sub_maxingale(space, &m)?;
        let violation = match &verdict.violation {
            Some(v) => {
                // Emission check: the named conditional supremum replays.
                let sup = cond_esssup(space, v.u, &m[v.t])?;
                let w = space.atoms(v.u)[v.atom][0];
                if sup.values[w] != v.conditional_sup || m[v.u].values[w] != v.level {
                    return Err(Error::verify("the violation does not replay"));
                }
                json!({
                    "earlier": v.u, "later": v.t, "atom": v.atom,
                    "conditional_sup": format_rat(&v.conditional_sup),
                    "level": format_rat(&v.level),
                })
            }
            None => Value::Null,
        };
        all &= verdict.holds;
        rows.push(json!({ "asset": i, "holds": verdict.holds, "violation": violation }));
    }
    let verdict = if all { "sub-maxingale" } else { "not a sub-maxingale" };
    Ok((
        args.human,
        Report::new("maxingale sub", verdict.to_string(), json!({ "assets": rows })),
    ))
}

fn stopping_json(tau: &StoppingTime) -> Value {
    json!(tau.values().to_vec())
}

fn run_maxingale_strong(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let space = &built.model.space;
    let seed = seed_from_env()?;
    let budget = args.budget.unwrap_or(MAXINGALE_BUDGET);
    let mut rows = Vec::new();
    let mut all = true;
    for i in 0..built.model.dim() {
        let m = price_layers(&built, i);
        let verdict = is_strong_sub_maxingale(space, &m, budget, seed)?;
        let violation = match &verdict.violation {
            Some(v) => {
                // Emission check: the stopped comparison replays at the
                // named outcome.
                let stopped = value_at(space, &m, &v.tau)?;
                let sup = cond_esssup_at(space, &v.s, &stopped)?;
                let level = value_at(space, &m, &v.s)?;
                if sup.values[v.outcome] <= level.values[v.outcome] {
                    return Err(Error::verify("the strong violation does not replay"));
                }
                json!({
                    "earlier": stopping_json(&v.s),
                    "later": stopping_json(&v.tau),
                    "outcome": space.outcome_label(v.outcome),
                })
            }
            None => Value::Null,
        };
        all &= verdict.holds;
        rows.push(json!({
            "asset": i,
            "holds": verdict.holds,
            "exhaustive": verdict.exhaustive,
            "pairs_checked": verdict.pairs_checked.to_string(),
            "violation": violation,
        }));
    }
    let verdict = if all { "strong sub-maxingale" } else { "fails" };
    let mut out = Report::new(
        "maxingale strong",
        verdict.to_string(),
        json!({ "assets": rows }),
    );
    out.seed = Some(seed);
    Ok((args.human, out))
}

fn run_lemma_suite(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let space = &built.model.space;
    let seed = seed_from_env()?;
    let budget = args.budget.unwrap_or(MAXINGALE_BUDGET);
    let mut rows = Vec::new();
    let mut all = true;
    for i in 0..built.model.dim() {
        let m = price_layers(&built, i);
        // The test claim: the payoff when the document carries one, else
        // the terminal prices themselves.
        let x = match &built.payoff {
            Some(h) => h.clone(),
            None => m[m.len() - 1].clone(),
        };
        let report = lemma_suite(space, &m, &x, budget, seed)?;
        all &= report.all_hold();
        rows.push(json!({
            "asset": i,
            "exhaustive": report.exhaustive,
            "stopping_times": report.stopping_times.to_string(),
            "pairs_checked": report.pairs_checked.to_string(),
            "is_sub": report.is_sub,
            "stopped_dominance": report.stopped_dominance,
            "masking": report.masking,
            "pair_dominance": report.pair_dominance,
            "bridge_agrees": report.bridge_agrees,
        }));
    }
    let verdict = if all { "all identities hold" } else { "failure" };
    let mut out = Report::new(
        "maxingale lemma-suite",
        verdict.to_string(),
        json!({ "assets": rows }),
    );
    out.seed = Some(seed);
    Ok((args.human, out))
}

fn run_strong_gap(args: &ModelArgs) -> Result<(bool, Report)> {
    let built = load(args)?;
    let space = &built.model.space;
    let seed = seed_from_env()?;
    let budget = args.budget.unwrap_or(STOPPING_PAIR_BUDGET);
    let search = strong_gap_search(space, GAP_ATTEMPTS, budget, seed)?;
    let example = match &search.example {
        Some(m) => {
            // Emission check: the example is a sub-maxingale and fails the
            // strong test, both replayed.
            if !is_sub_maxingale(space, m)?.holds {
                return Err(Error::verify("the gap example is not a sub-maxingale"));
            }
            if is_strong_sub_maxingale(space, m, budget, seed)?.holds {
                return Err(Error::verify("the gap example passes the strong test"));
            }
            Value::Array(m.iter().map(rv_json).collect())
        }
        None => Value::Null,
    };
    let verdict = if search.example.is_some() {
        "gap found"
    } else {
        "no gap found"
    };
    let certs = json!({
        "attempts": search.attempts,
        "sub_maxingales": search.sub_maxingales,
        "gaps": search.gaps,
        "example": example,
    });
    let mut out = Report::new("experiment strong-gap", verdict.to_string(), certs);
    out.seed = Some(seed);
    Ok((args.human, out))
}

fn run_validate(args: &ModelArgs) -> Result<(bool, Report)> {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", args.model.display())))?;
    let violations = match parse_document(&text) {
        Ok(doc) => validate(&doc),
        Err(e) => vec![e.to_string()],
    };
    let verdict = if violations.is_empty() { "valid" } else { "invalid" };
    let certs = json!({ "violations": violations });
    Ok((
        args.human,
        Report::new("validate", verdict.to_string(), certs),
    ))
}
