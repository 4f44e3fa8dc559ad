use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use regevo::analytics::{self, TierThresholds};
use regevo::cache_sim::{self, ReplayContext};
use regevo::config;
use regevo::error::{Error, Result};
use regevo::manifest::{RunManifest, MANIFEST_FILE};
use regevo::prob::{self, HypergeomParams};
use regevo::{
    encode_trace, read_trace, run_search, CachePolicy, SearchConfig, SpaceSpec, TraceEvent,
};

const TRACE_FILE: &str = "trace.jsonl";

#[derive(Parser)]
#[command(
    name = "regevo",
    version,
    about = "Parallel regularized-evolution search simulator and trace analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a search and write its trace
    Run(RunArgs),
    /// Analyze a trace
    Analyze(AnalyzeArgs),
    /// Evaluate a closed-form formula
    #[command(subcommand)]
    Prob(ProbCommand),
    /// Replay a trace against repository admission policies
    CacheSim(CacheSimArgs),
}

#[derive(Args)]
struct OutDir {
    /// Output directory
    #[arg(long, env = "REGEVO_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Search-space TOML (built-in default space if omitted)
    #[arg(long)]
    space: Option<PathBuf>,
    /// Search TOML (built-in default search if omitted)
    #[arg(long)]
    search: Option<PathBuf>,
    /// Overrides the configured rng_seed
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct AnalyzeArgs {
    trace: PathBuf,
    /// Write the prefix trie, pruned below this fraction
    #[arg(long, value_name = "THETA")]
    trie: Option<f64>,
    /// Trie depth limit
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 100)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    prefix_len: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Sliding-window prefix histograms
    #[arg(long)]
    histograms: bool,
    /// Popularity tiers per window
    #[arg(long)]
    tiers: bool,
    /// Quality series and improvement steps
    #[arg(long)]
    quality: bool,
    /// Worker locality of donor use
    #[arg(long)]
    locality: bool,
    /// Donor frequency per window
    #[arg(long)]
    donors: bool,
    /// Donors examined by the locality report
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Locality time bucket in simulated seconds
    #[arg(long, default_value_t = 60.0)]
    bucket: f64,
    /// Leave the most used donor out of the locality report
    #[arg(long)]
    skip_top: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Subcommand)]
enum ProbCommand {
    /// Hypergeometric probability p(X = k | H(N, K, n))
    Hypergeom {
        #[arg(long = "N")]
        total: u64,
        #[arg(long = "K")]
        marked: u64,
        #[arg(long = "n")]
        draws: u64,
        #[arg(long = "k")]
        k: u64,
    },
    /// Upper bound on the chance that the rank-λ member is the best of a sample (rank 1 = worst)
    TransferBound {
        #[arg(long = "P")]
        population: u64,
        #[arg(long)]
        rank: u64,
        #[arg(long = "s")]
        sample: u64,
    },
    /// Sample size at which some prefix repeats k times with probability p
    Birthday {
        #[arg(long = "c")]
        prefixes: f64,
        #[arg(long = "k")]
        repeats: u32,
        #[arg(long = "p", default_value_t = 0.5)]
        prob: f64,
    },
    /// Approximate expected r-th order statistic of w standard normals
    OrderStat {
        #[arg(long = "r")]
        rank: u64,
        #[arg(long = "w")]
        count: u64,
    },
    /// Idle-wait bound for quanta scheduling
    DelayBound {
        #[arg(long)]
        swait: u64,
        #[arg(long = "w")]
        workers: u64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        sigma: f64,
    },
    /// Expected samplings until the best member is selected, P/s
    EvalsUntilDonor {
        #[arg(long = "P")]
        population: u64,
        #[arg(long = "s")]
        sample: u64,
    },
}

#[derive(Args)]
struct CacheSimArgs {
    trace: PathBuf,
    /// store-all, skip-bottom, prob:<eps>, tier:<min>:<window>, each with optional @<capacity>
    #[arg(long = "policy", default_values_t = [String::from("store-all"), String::from("skip-bottom")])]
    policies: Vec<String>,
    /// Capacity for policies that do not name one
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long, default_value_t = 100)]
    population: usize,
    #[arg(long, default_value_t = 5)]
    sample: usize,
    #[command(flatten)]
    out: OutDir,
}

/// Files produced by one command, committed together.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    /// Writes every file through a temporary name, then the manifest. On
    /// failure, files already written by this call are removed.
    fn commit(self, mut manifest: RunManifest) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        let mut files = self.files;
        files.push((MANIFEST_FILE.to_string(), manifest.to_json()));
        let mut written: Vec<PathBuf> = Vec::new();
        for (name, content) in &files {
            let path = self.dir.join(name);
            if let Err(e) = write_atomic(&path, content) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e);
            }
            written.push(path);
        }
        Ok(())
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn manifest_for(command: &str, out: &Path) -> RunManifest {
    let mut m = RunManifest::new(command, out);
    m.args = std::env::args().skip(1).collect();
    m
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let spec = match &args.space {
        Some(p) => config::load_space(p)?,
        None => SpaceSpec::default(),
    };
    let mut search = match &args.search {
        Some(p) => config::load_search(p)?,
        None => SearchConfig::default(),
    };
    if let Some(seed) = args.seed {
        search.rng_seed = seed;
    }
    let outcome = run_search(&search, &spec)?;
    let trace = &outcome.trace;

    let mut outputs = Outputs::new(&args.out.out);
    outputs.add(TRACE_FILE, encode_trace(trace)?);
    let mut manifest = manifest_for("run", &args.out.out);
    manifest.config_paths = args
        .space
        .iter()
        .chain(args.search.iter())
        .cloned()
        .collect();
    manifest.seed = Some(search.rng_seed);
    manifest.config = json!({ "space": spec, "search": search });
    outputs.commit(manifest)?;

    let best = trace
        .iter()
        .map(|e| e.quality)
        .fold(f64::NEG_INFINITY, f64::max);
    let transfers = trace.iter().filter(|e| e.donor_id.is_some()).count();
    let makespan = trace.last().map_or(0.0, |e| e.end_ts);
    println!("candidates      {}", trace.len());
    println!("best quality    {best}");
    println!("transfers       {transfers}");
    println!("mean idle wait  {:.3} s", outcome.delay.mean_wait);
    println!("makespan        {makespan:.3} s");
    println!(
        "trace           {}",
        args.out.out.join(TRACE_FILE).display()
    );
    Ok(())
}

fn has_transfers(trace: &[TraceEvent]) -> bool {
    trace.iter().any(|e| e.donor_id.is_some())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    if trace.is_empty() {
        return Err(Error::MissingContext(format!(
            "{} holds no events",
            args.trace.display()
        )));
    }
    let any = args.trie.is_some()
        || args.histograms
        || args.tiers
        || args.quality
        || args.locality
        || args.donors;
    let transfers = has_transfers(&trace);
    if (args.locality || args.donors) && !transfers {
        return Err(Error::MissingContext(format!(
            "{} records no transfers; locality and donor analyses need a transfer-enabled trace",
            args.trace.display()
        )));
    }
    let trie_theta = args.trie.or((!any).then_some(0.01));
    let histograms = args.histograms || !any;
    let tiers = args.tiers || !any;
    let quality = args.quality || !any;
    let locality = args.locality || (!any && transfers);
    let donors = args.donors || (!any && transfers);

    let mut outputs = Outputs::new(&args.out.out);
    if let Some(theta) = trie_theta {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidParams(format!(
                "trie threshold {theta} must lie in [0, 1)"
            )));
        }
        let trie = analytics::build_trie(&trace, theta, args.depth);
        println!("trie: {} nodes at or above {theta}", trie.node_count());
        outputs.add("trie.dot", trie.to_dot());
    }
    if histograms || tiers {
        let window = args.window.min(trace.len());
        let hists = analytics::window_histograms(&trace, window, args.prefix_len, args.stride)?;
        let ids = analytics::prefix_ids(&trace, args.prefix_len);
        if histograms {
            outputs.add("histograms.csv", analytics::histograms_csv(&hists, &ids)?);
        }
        if tiers {
            let reports: Vec<_> = hists
                .iter()
                .map(|h| analytics::classify_tiers(h, TierThresholds::default()))
                .collect();
            let first_tier1 = reports.iter().find(|r| r.in_tier(1).next().is_some());
            match first_tier1 {
                Some(r) => println!(
                    "tiers: first tier-1 prefix in window ending at {}",
                    r.window_end_index
                ),
                None => println!("tiers: no tier-1 prefix"),
            }
            outputs.add("tiers.csv", analytics::tiers_csv(&hists, &reports, &ids)?);
        }
    }
    if quality {
        let series = analytics::quality_series(&trace);
        println!(
            "quality: best {} after {} improvement steps",
            series.cumulative_max.last().copied().unwrap_or(0.0),
            series.steps.len()
        );
        outputs.add("quality.csv", analytics::quality_csv(&trace, &series)?);
        outputs.add("steps.csv", analytics::steps_csv(&trace, &series)?);
    }
    if donors {
        let window = args.window.min(trace.len());
        let windows = analytics::donor_frequency(&trace, window)?;
        outputs.add("donors.csv", analytics::donors_csv(&windows)?);
    }
    if locality {
        let report = analytics::worker_locality(&trace, args.top_k, args.bucket, args.skip_top)?;
        if let Some(r) = report.longest_run() {
            println!(
                "locality: longest run {} on worker {} (donor {}), max {} workers per bucket",
                r.length,
                r.worker,
                r.donor,
                report.max_cooccurrence()
            );
        }
        outputs.add("locality_runs.csv", analytics::locality_runs_csv(&report)?);
        outputs.add(
            "locality_buckets.csv",
            analytics::locality_buckets_csv(&report)?,
        );
    }

    let mut manifest = manifest_for("analyze", &args.out.out);
    manifest.config_paths = vec![args.trace.clone()];
    manifest.config = json!({
        "trie": trie_theta,
        "depth": args.depth,
        "window": args.window,
        "prefix_len": args.prefix_len,
        "stride": args.stride,
        "top_k": args.top_k,
        "bucket": args.bucket,
        "skip_top": args.skip_top,
    });
    outputs.commit(manifest)
}

fn cmd_prob(cmd: ProbCommand) -> Result<()> {
    let line = match cmd {
        ProbCommand::Hypergeom {
            total,
            marked,
            draws,
            k,
        } => {
            let params = HypergeomParams::new(total, marked, draws)?;
            let value = prob::hypergeom_pmf(params, k);
            match prob::hypergeom_pmf_exact(params, k) {
                Some(r) => format!("hypergeom N={total} K={marked} n={draws} k={k}: {value} ({r})"),
                None => format!("hypergeom N={total} K={marked} n={draws} k={k}: {value}"),
            }
        }
        ProbCommand::TransferBound {
            population,
            rank,
            sample,
        } => format!(
            "transfer-bound P={population} rank={rank} s={sample}: {}",
            prob::transfer_prob_bound(population, rank, sample)?
        ),
        ProbCommand::Birthday {
            prefixes,
            repeats,
            prob: p,
        } => format!(
            "birthday c={prefixes} k={repeats} p={p}: {}",
            prob::birthday_threshold(prefixes, repeats, p)?
        ),
        ProbCommand::OrderStat { rank, count } => format!(
            "order-stat r={rank} w={count}: {}",
            prob::normal_order_stat(rank, count)?
        ),
        ProbCommand::DelayBound {
            swait,
            workers,
            mu,
            sigma,
        } => format!(
            "delay-bound swait={swait} w={workers} mu={mu} sigma={sigma}: {}",
            prob::quanta_delay_bound(swait, workers, mu, sigma)?
        ),
        ProbCommand::EvalsUntilDonor { population, sample } => format!(
            "evals-until-donor P={population} s={sample}: {}",
            prob::expected_evals_until_donor(population, sample)?
        ),
    };
    println!("{line}");
    Ok(())
}

fn cmd_cache_sim(args: CacheSimArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    let ctx = ReplayContext {
        population_size: args.population,
        sample_size: args.sample,
    };
    let mut rows = Vec::new();
    for spelling in &args.policies {
        let mut policy: CachePolicy = spelling.parse()?;
        if policy.capacity.is_none() {
            policy.capacity = args.capacity;
        }
        policy.validate()?;
        let report = cache_sim::replay(&trace, &policy, &ctx)?;
        rows.push((policy, report));
    }
    let summary: String = rows.iter().map(|(p, r)| cache_sim::summary(p, r)).collect();
    print!("{summary}");

    let mut outputs = Outputs::new(&args.out.out);
    outputs.add("cache_report.csv", cache_sim::reports_csv(&rows));
    outputs.add("cache_summary.txt", summary);
    let mut manifest = manifest_for("cache-sim", &args.out.out);
    manifest.config_paths = vec![args.trace.clone()];
    manifest.config = json!({
        "policies": rows.iter().map(|(p, _)| p.label()).collect::<Vec<_>>(),
        "population": args.population,
        "sample": args.sample,
    });
    outputs.commit(manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Prob(c) => cmd_prob(c),
        Command::CacheSim(a) => cmd_cache_sim(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
