//! Subcommands behind the `dchaos` binary. Each one reads an
//! [`ExperimentConfig`], writes CSV or sequence files into the output
//! directory and reports whether its checks passed.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{ExperimentConfig, Points, SequenceSource, SystemSpec};

use crate::construction::{
    chaotic_set_to_sequence, extract_witnesses, synthetic_uniform_witness, uniform_chaotic_to_sequence, SequenceReport,
};
use crate::distribution::{classify, profile, PairVerdict};
use crate::error::{Error, Result};
use crate::frac;
use crate::index_seq::{merge_density_one, upper_density, IndexSequence};
use crate::oracle::{predict_block_profile, FamilyParams};
use crate::systems::{BlockFamily, IntervalPair, OrbitPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Density,
    Distfn,
    Classify,
    Merge,
    Pipeline,
    Uniform,
    Oracle,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Density => "density",
            Subcommand::Distfn => "distfn",
            Subcommand::Classify => "classify",
            Subcommand::Merge => "merge",
            Subcommand::Pipeline => "pipeline",
            Subcommand::Uniform => "uniform",
            Subcommand::Oracle => "oracle",
        }
    }
}

/// What a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// False when a verification step inside the run failed.
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Exit status for a finished run: 0 success, 1 validation failure, 2 runtime error.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.passed => 0,
        Ok(_) => 1,
        Err(Error::Parse { .. } | Error::InvalidArgument(_) | Error::WitnessInvalid { .. }) => 1,
        Err(_) => 2,
    }
}

pub fn run(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut out = Outcome {
        passed: true,
        ..Default::default()
    };
    match cmd {
        Subcommand::Density => density(cfg, &mut out)?,
        Subcommand::Distfn => distfn(cfg, pairs(cfg)?, &mut out)?,
        Subcommand::Classify => classify_all(cfg, pairs(cfg)?, &mut out)?,
        Subcommand::Merge => merge(cfg, &mut out)?,
        Subcommand::Pipeline => pipeline(cfg, pairs(cfg)?, &mut out)?,
        Subcommand::Uniform => uniform(cfg, &mut out)?,
        Subcommand::Oracle => oracle(cfg, &mut out)?,
    }
    Ok(out)
}

fn create(cfg: &ExperimentConfig, out: &mut Outcome, name: &str) -> Result<BufWriter<File>> {
    let path = cfg.out.join(name);
    out.files.push(path.clone());
    Ok(BufWriter::new(File::create(path)?))
}

fn family(cfg: &ExperimentConfig) -> Result<Option<BlockFamily>> {
    match &cfg.system {
        SystemSpec::Family {
            alphabet,
            members,
            block_lengths,
        } => BlockFamily::new(*alphabet, block_lengths.clone(), *members).map(Some),
        _ => Ok(None),
    }
}

/// Interval points, drawn from the seed when not listed.
pub fn interval_points(points: &Points, seed: u64) -> Vec<f64> {
    match points {
        Points::Given(p) => p.clone(),
        Points::Random(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..*n).map(|_| rng.gen_range(f64::EPSILON..1.0)).collect()
        }
    }
}

/// Every pair of the configured system, indexed by point.
fn pairs(cfg: &ExperimentConfig) -> Result<Pairs> {
    match &cfg.system {
        SystemSpec::Family { .. } => Ok(Pairs::new(family(cfg)?.expect("family system").pairs())),
        SystemSpec::Shift(p) => Ok(Pairs::new(vec![(0, 1, p.clone())])),
        SystemSpec::Interval {
            map,
            points,
            max_iterations,
        } => {
            let xs = interval_points(points, cfg.seed);
            if xs.len() < 2 {
                return Err(Error::InvalidArgument("interval systems need at least two points".into()));
            }
            let mut pairs = Vec::new();
            for a in 0..xs.len() {
                for b in a + 1..xs.len() {
                    pairs.push((a, b, IntervalPair::new(map.clone(), xs[a], xs[b], *max_iterations)?));
                }
            }
            Ok(Pairs::new(pairs))
        }
    }
}

/// Type-erased pairs, cloneable for the pipeline.
struct Pairs(Vec<(usize, usize, DynPair)>);

#[derive(Clone)]
struct DynPair(std::sync::Arc<dyn OrbitPair>);

impl OrbitPair for DynPair {
    fn distance_at(&self, n: u64) -> Result<crate::systems::Distance> {
        self.0.distance_at(n)
    }

    fn distance_series(&self, times: &IndexSequence, count: usize) -> Result<Vec<crate::systems::Distance>> {
        self.0.distance_series(times, count)
    }

    fn scan(&self, from: u64, to: u64, f: &mut dyn FnMut(u64, crate::systems::Distance) -> bool) -> Result<()> {
        self.0.scan(from, to, f)
    }

    fn describe(&self) -> String {
        self.0.describe()
    }
}

impl Pairs {
    fn new<P: OrbitPair + 'static>(pairs: Vec<(usize, usize, P)>) -> Self {
        Pairs(
            pairs
                .into_iter()
                .map(|(a, b, p)| (a, b, DynPair(std::sync::Arc::new(p))))
                .collect(),
        )
    }
}

fn density(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let p = cfg.density_of.load()?;
    let q = cfg.sequence.load()?;
    let est = upper_density(&p, &q, cfg.horizon, cfg.checkpoint_stride)?;
    let mut w = create(cfg, out, "density.csv")?;
    write_header(&mut w, &cfg.header("density"))?;
    writeln!(w, "running_sup,running_sup_float,value_at_horizon,value_at_horizon_float")?;
    writeln!(
        w,
        "{},{},{},{}",
        frac::display(&est.running_sup),
        frac::to_f64(&est.running_sup),
        frac::display(&est.value_at_horizon),
        frac::to_f64(&est.value_at_horizon)
    )?;
    writeln!(w)?;
    writeln!(w, "k,density,density_float")?;
    for (k, v) in &est.checkpoints {
        writeln!(w, "{k},{},{}", frac::display(v), frac::to_f64(v))?;
    }
    w.flush()?;
    out.summary.push(format!("running sup {} at horizon {}", frac::display(&est.running_sup), cfg.horizon));
    Ok(())
}

fn write_header(w: &mut impl Write, header: &[String]) -> Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    Ok(())
}

fn distfn(cfg: &ExperimentConfig, pairs: Pairs, out: &mut Outcome) -> Result<()> {
    let (a, b) = cfg.select;
    let pair = pairs
        .0
        .iter()
        .find(|(i, j, _)| (*i, *j) == (a.min(b), a.max(b)))
        .ok_or_else(|| Error::InvalidArgument(format!("no pair {a}-{b} in the configured system")))?;
    let q = cfg.sequence.load()?;
    let d = &cfg.distribution;
    let prof = profile(&pair.2, &q, &d.t_grid, cfg.horizon, d.tail_fraction, cfg.checkpoint_stride)?;
    let mut w = create(cfg, out, "distfn.csv")?;
    prof.write_csv(&mut w, &cfg.header("distfn"))?;
    w.flush()?;
    Ok(())
}

fn classify_all(cfg: &ExperimentConfig, pairs: Pairs, out: &mut Outcome) -> Result<()> {
    let q = cfg.sequence.load()?;
    let mut w = create(cfg, out, "classify.csv")?;
    write_header(&mut w, &cfg.header("classify"))?;
    writeln!(w, "{}", PairVerdict::CSV_HEADER)?;
    for (i, j, p) in &pairs.0 {
        let v = classify(p, &q, cfg.delta, &cfg.distribution)?;
        writeln!(w, "{}", v.csv_row(&format!("{i}-{j}")))?;
        out.summary.push(format!("{i}-{j}: {:?}", v.flags()));
    }
    w.flush()?;
    Ok(())
}

fn merge(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let family: Vec<IndexSequence> = cfg.merge_inputs.iter().map(SequenceSource::load).collect::<Result<_>>()?;
    let merged = merge_density_one(&family, cfg.horizon, &cfg.merge)?;
    let header = cfg.header("merge");
    let mut w = create(cfg, out, "q.txt")?;
    merged.sequence.write_to(&mut w, cfg.horizon, &header)?;
    w.flush()?;

    let mut w = create(cfg, out, "merge_audit.csv")?;
    write_header(&mut w, &header)?;
    writeln!(w, "member,running_sup,running_sup_float,value_at_horizon")?;
    for (k, s) in family.iter().enumerate() {
        let est = upper_density(s, &merged.sequence, cfg.horizon, cfg.checkpoint_stride)?;
        writeln!(
            w,
            "{k},{},{},{}",
            frac::display(&est.running_sup),
            frac::to_f64(&est.running_sup),
            frac::display(&est.value_at_horizon)
        )?;
        out.summary.push(format!("member {k}: running sup {}", frac::to_f64(&est.running_sup)));
    }
    writeln!(w)?;
    writeln!(w, "stage,member,target_denominator,length,first_term,last_term,checkpoint,truncated")?;
    for st in &merged.plan.stages {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            st.stage, st.member, st.target_denominator, st.length, st.first_term, st.last_term, st.checkpoint, st.truncated
        )?;
    }
    w.flush()?;
    Ok(())
}

fn pipeline(cfg: &ExperimentConfig, pairs: Pairs, out: &mut Outcome) -> Result<()> {
    let budget = match (cfg.search_budget, family(cfg)?) {
        (Some(b), _) => b,
        (None, Some(f)) => f.total_length(),
        (None, None) => 10 * cfg.horizon as u64,
    };
    // Merge stages overshoot the horizon, so members need spare terms.
    let max_count = cfg.max_count.unwrap_or(2 * cfg.horizon);
    let witnesses = extract_witnesses(&pairs.0, cfg.witness_delta, budget, cfg.min_count, max_count)?;
    let header = cfg.header("pipeline");
    let report = chaotic_set_to_sequence(&witnesses, &pairs.0, cfg.horizon, &cfg.merge, &cfg.distribution)?;

    // Times beyond max(Q) never enter Q; the file keeps only those that could.
    let last = report.q.prefix().last().copied().unwrap_or(0);
    let mut used = witnesses.clone();
    for p in &mut used.pairs {
        p.proximal.retain(|&t| t <= last);
        p.distal.retain(|&t| t <= last);
    }
    let mut w = create(cfg, out, "witnesses.txt")?;
    used.write_to(&mut w, &header)?;
    w.flush()?;

    let invalid = witnesses.verify(&pairs.0)?;
    let mut rechecked = true;
    for p in &report.pairs {
        let pair = &pairs.0.iter().find(|(i, j, _)| (*i, *j) == (p.i, p.j)).expect("classified pair").2;
        rechecked &= p.verdict.recheck(pair)?;
    }
    write_report(cfg, out, &report, &header)?;
    out.passed = invalid.is_empty() && rechecked && report.failures().is_empty();
    out.summary.push(format!(
        "{} pairs, {} failing, {} invalid witness times, rechecks {}",
        report.pairs.len(),
        report.failures().len(),
        invalid.len(),
        if rechecked { "agree" } else { "disagree" }
    ));
    Ok(())
}

fn write_report(cfg: &ExperimentConfig, out: &mut Outcome, report: &SequenceReport, header: &[String]) -> Result<()> {
    let mut w = create(cfg, out, "q.txt")?;
    report.q.write_to(&mut w, report.horizon(), header)?;
    w.flush()?;
    let mut w = create(cfg, out, "report.csv")?;
    report.write_csv(&mut w, header)?;
    w.flush()?;
    Ok(())
}

fn uniform(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let witness = synthetic_uniform_witness(&cfg.layout)?;
    let report = uniform_chaotic_to_sequence(&witness, cfg.horizon, &cfg.merge, &cfg.distribution)?;
    let header = cfg.header("uniform");
    write_report(cfg, out, &report.sequence, &header)?;
    let mut w = create(cfg, out, "returns.csv")?;
    write_header(&mut w, &header)?;
    writeln!(w, "pair,initial,rigidity_checked,rigidity_violations,proximal_checked,proximal_violations")?;
    for c in &report.returns {
        writeln!(
            w,
            "{}-{},{},{},{},{},{}",
            c.i, c.j, c.initial, c.rigidity_checked, c.rigidity_violations, c.proximal_checked, c.proximal_violations
        )?;
    }
    w.flush()?;
    let violations: usize = report.returns.iter().map(|c| c.rigidity_violations + c.proximal_violations).sum();
    let not_distributional = report.sequence.pairs.iter().filter(|p| !p.verdict.distributional).count();
    out.passed = violations == 0 && not_distributional == 0;
    out.summary.push(format!(
        "{} top-level pairs, {not_distributional} not distributional in Q, {violations} return violations",
        report.returns.len()
    ));
    Ok(())
}

fn oracle(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let SystemSpec::Family {
        alphabet,
        members,
        block_lengths,
    } = &cfg.system
    else {
        return Err(Error::InvalidArgument("oracle needs [system] kind = family".into()));
    };
    let params = FamilyParams {
        alphabet_size: *alphabet,
        members: *members,
        block_lengths: block_lengths.clone(),
        delta: cfg.delta,
        t_grid: cfg.distribution.t_grid.clone(),
        eps_one: cfg.distribution.eps_one,
        tail_fraction: cfg.distribution.tail_fraction,
    };
    let prediction = predict_block_profile(&params)?;
    let fam = params.family()?;
    let horizon = fam.total_length() as usize;
    let q = IndexSequence::naturals();
    let mut w = create(cfg, out, "oracle.csv")?;
    let mut header = cfg.header("oracle");
    header.push(format!("family total length {horizon}, computed along the naturals"));
    write_header(&mut w, &header)?;
    writeln!(w, "pair,block,boundary,t,phi_predicted,phi_computed,agree")?;
    let mut disagreements = 0;
    for (i, j, pair) in fam.pairs() {
        let prof = profile(&pair, &q, &params.t_grid, horizon, params.tail_fraction, 1)?;
        for (b, &e) in prediction.boundaries.iter().enumerate() {
            for (k, t) in params.t_grid.iter().enumerate() {
                let predicted = prediction.phi[b][k];
                let computed = prof.phi_at(k, e as usize).expect("boundary within horizon");
                let agree = predicted == computed;
                disagreements += usize::from(!agree);
                writeln!(
                    w,
                    "{i}-{j},{},{e},{t},{},{},{agree}",
                    b + 1,
                    frac::display(&predicted),
                    frac::display(&computed)
                )?;
            }
        }
    }
    w.flush()?;
    let mut w = create(cfg, out, "prediction.csv")?;
    prediction.write_csv(&mut w, &header)?;
    w.flush()?;
    out.passed = disagreements == 0;
    out.summary.push(format!(
        "{disagreements} disagreements; predicted distributional-delta {}",
        prediction.distributional_delta
    ));
    Ok(())
}

/// Reads the config file (if any) and applies flag overrides.
pub fn load_config(path: Option<&Path>, overrides: &[(&str, &str, String)]) -> Result<ExperimentConfig> {
    match path {
        None => ExperimentConfig::parse("", Path::new("."), overrides),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", p.display())))?;
            let base = p.parent().unwrap_or(Path::new("."));
            ExperimentConfig::parse(&text, base, overrides)
        }
    }
}
