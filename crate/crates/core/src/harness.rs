//! Command implementations behind the `drpe` binary.
//!
//! Exit codes: 0 success, 1 a written or checked solution failed
//! validation, 2 usage error, 3 size guard, 4 any other failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{initial_tsp_sequence, limop, rts_3nn, sa_rts_3opt, Budget, SaParams};
use crate::energy::{check_extended_tour, extended_instance, pract, ExtendedCosts};
use crate::error::{Error, Result};
use crate::exact::solve_exact;
use crate::generator::{generate_batch, SettingName, Size};
use crate::io::{load_instance, load_tour, save_instance, save_tour, tour_to_json, SolutionMeta};
use crate::meta_graph::TransitionLookup;
use crate::model::{validate_tour, CostModel, DroneTour, Instance};
use crate::oracle::{count_bs_neighbors, enumerate_bs_neighbors, neighborhood_lower_bound, MAX_ENUMERATION};
use crate::search::{rts, vlsn_ls, vlsn_vnd, vlsn_with_config, SearchConfig, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SIZE_GUARD: i32 = 3;
pub const EXIT_OTHER: i32 = 4;

/// Largest instance for which `bench` computes an exact reference on its own.
pub const AUTO_EXACT_LIMIT: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "drpe", version, about = "Drone routing with energy replenishment")]
pub struct Cli {
    /// Master seed for randomized algorithms and generation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "DRPE_WORKERS")]
    pub workers: Option<usize>,
    /// Per-run wall-clock limit in seconds, checked between neighborhoods.
    #[arg(long, global = true)]
    pub time_limit: Option<f64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate benchmark instances and a manifest.
    Generate(GenerateArgs),
    /// Solve one instance and write the solution.
    Solve(SolveArgs),
    /// Solve one instance exactly.
    Exact(InstanceArgs),
    /// Run a campaign over an instance directory and write gap tables.
    Bench(BenchArgs),
    /// Check a solution against an instance.
    Validate(ValidateArgs),
    /// Count neighbors of the identity order.
    Enumerate(EnumerateArgs),
    /// Print the pattern transition table as CSV.
    DumpLookup(DumpLookupArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
pub enum Algo {
    Vlsn,
    VlsnLs,
    VlsnVnd,
    Rts,
    Exact,
    Limop,
    Rts3nn,
    Sa,
    Pract,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Vlsn => "vlsn",
            Algo::VlsnLs => "vlsn-ls",
            Algo::VlsnVnd => "vlsn-vnd",
            Algo::Rts => "rts",
            Algo::Exact => "exact",
            Algo::Limop => "limop",
            Algo::Rts3nn => "rts3nn",
            Algo::Sa => "sa",
            Algo::Pract => "pract",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Base,
    Extended,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SettingSelection {
    All,
    One(SettingName),
}

fn parse_setting(s: &str) -> std::result::Result<SettingSelection, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(SettingSelection::All);
    }
    s.parse()
        .map(SettingSelection::One)
        .map_err(|e: Error| e.to_string())
}

fn parse_size(s: &str) -> std::result::Result<Size, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Setting name, or `all`.
    #[arg(long, value_parser = parse_setting)]
    pub setting: SettingSelection,
    #[arg(long, value_parser = parse_size)]
    pub size: Size,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(short, long)]
    pub instance: PathBuf,
}

/// Algorithm parameters shared by `solve` and `bench`.
#[derive(Clone, Debug, Args)]
pub struct AlgoOptions {
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub p0: usize,
    #[arg(long, default_value_t = 8)]
    pub p_max: usize,
    #[arg(long, default_value_t = 2)]
    pub klim: usize,
    /// Iterations for rts3nn and sa.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    /// Seconds for rts3nn and sa; overrides `--budget`.
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModelChoice::Base)]
    pub model: ModelChoice,
    /// JSON file with extended-model costs; missing fields take defaults.
    #[arg(long)]
    pub extended: Option<PathBuf>,
    /// Skip the boundary shifts tried when both depots coincide.
    #[arg(long)]
    pub no_single_depot_extension: bool,
}

impl Default for AlgoOptions {
    fn default() -> Self {
        AlgoOptions {
            p: 4,
            p0: 2,
            p_max: 8,
            klim: 2,
            budget: 200,
            budget_seconds: None,
            model: ModelChoice::Base,
            extended: None,
            no_single_depot_extension: false,
        }
    }
}

impl AlgoOptions {
    fn budget(&self) -> Budget {
        match self.budget_seconds {
            Some(s) => Budget::Seconds(s),
            None => Budget::Iterations(self.budget),
        }
    }

    fn costs(&self) -> Result<ExtendedCosts> {
        match &self.extended {
            Some(path) => Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?),
            None => Ok(ExtendedCosts::default()),
        }
    }

    /// Instance as solved: the extended model replaces the flight limit.
    pub fn prepare(&self, inst: Instance) -> Result<Instance> {
        match self.model {
            ModelChoice::Base => Ok(inst),
            ModelChoice::Extended => extended_instance(&inst, self.costs()?),
        }
    }

    fn search_config(&self, seed: u64, time_limit: Option<f64>, p: usize) -> SearchConfig {
        SearchConfig {
            p,
            p0: self.p0,
            p_max: self.p_max,
            time_limit,
            seed,
            single_depot_extension: !self.no_single_depot_extension,
        }
    }

    /// Stable digest of every parameter that influences `algo`.
    pub fn config_hash(&self, algo: Algo, seed: u64, time_limit: Option<f64>) -> String {
        let text = format!(
            "{}|p={}|p0={}|pmax={}|klim={}|budget={:?}|model={:?}|extended={:?}|ext={}|seed={}|limit={:?}",
            algo.name(),
            self.p,
            self.p0,
            self.p_max,
            self.klim,
            self.budget(),
            self.model,
            self.costs().ok(),
            !self.no_single_depot_extension,
            seed,
            time_limit
        );
        hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(short, long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::VlsnLs)]
    pub algo: Algo,
    #[command(flatten)]
    pub options: AlgoOptions,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of instance files.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![Algo::Exact, Algo::VlsnLs, Algo::VlsnVnd, Algo::Rts, Algo::Limop])]
    pub algos: Vec<Algo>,
    #[command(flatten)]
    pub options: AlgoOptions,
    /// Best-known registry; defaults to `best_known.json` in the output directory.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Also print the summary as a LaTeX table.
    #[arg(long)]
    pub latex: bool,
    /// Write every solution under `solutions/` in the output directory.
    #[arg(long)]
    pub save_solutions: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(short, long)]
    pub instance: PathBuf,
    #[arg(short, long)]
    pub solution: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelChoice::Base)]
    pub model: ModelChoice,
    #[arg(long)]
    pub extended: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Print every neighbor (at most 10 destinations).
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct DumpLookupArgs {
    #[arg(long)]
    pub p: usize,
    /// Largest operation length listed; defaults to `2p - 1`.
    #[arg(long)]
    pub max_h: Option<usize>,
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SizeGuard(_) => EXIT_SIZE_GUARD,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_OTHER,
    }
}

/// Parses `args` (program name first) and runs the command; usage errors
/// print clap's message and yield exit code 2.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match run(&cli) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(cli, a),
        Command::Solve(a) => cmd_solve(cli, &a.instance, a.algo, &a.options),
        Command::Exact(a) => cmd_solve(cli, &a.instance, Algo::Exact, &AlgoOptions::default()),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Validate(a) => cmd_validate(a),
        Command::Enumerate(a) => cmd_enumerate(cli, a),
        Command::DumpLookup(a) => cmd_dump_lookup(cli, a),
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub setting: SettingName,
    pub size: Size,
    pub seed: u64,
    pub n_d: usize,
    pub n_r: usize,
    pub rows: usize,
    pub cols: usize,
    pub l: f64,
    pub delta: f64,
    pub e_max: f64,
    pub density_target: f64,
    pub density_realized: f64,
    pub depot: usize,
    pub attempts: usize,
    pub grid: String,
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Result<i32> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("instances"));
    std::fs::create_dir_all(&dir)?;
    let names: Vec<SettingName> = match a.setting {
        SettingSelection::All => SettingName::ALL.to_vec(),
        SettingSelection::One(n) => vec![n],
    };
    let manifest_path = dir.join("manifest.json");
    let mut manifest: Vec<ManifestEntry> = match std::fs::read_to_string(&manifest_path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => Vec::new(),
    };
    for name in names {
        for (inst, info) in generate_batch(name, a.size, cli.seed, a.count)? {
            let s = &info.setting;
            let file = format!("{}.json", inst.name());
            save_instance(dir.join(&file), &inst)?;
            manifest.retain(|m| m.file != file);
            manifest.push(ManifestEntry {
                file,
                setting: s.name,
                size: s.size,
                seed: s.seed,
                n_d: s.n_d,
                n_r: s.n_r,
                rows: s.rows,
                cols: s.cols,
                l: s.l,
                delta: s.delta,
                e_max: s.e_max,
                density_target: s.density,
                density_realized: s.n_d as f64 / (s.l * s.l),
                depot: info.depot,
                attempts: info.attempts,
                grid: format!("{}x{} corners included", s.rows, s.cols),
            });
        }
    }
    manifest.sort_by(|a, b| a.file.cmp(&b.file));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    eprintln!("wrote {} instances to {}", manifest.len(), dir.display());
    Ok(EXIT_OK)
}

/// Runs `algo` on a prepared instance.
pub fn run_algorithm(
    inst: &Instance,
    algo: Algo,
    opts: &AlgoOptions,
    seed: u64,
    time_limit: Option<f64>,
) -> Result<SolveReport> {
    let started = Instant::now();
    let x0 = || initial_tsp_sequence(inst);
    let mut report = match algo {
        Algo::Vlsn => vlsn_with_config(inst, &x0(), &opts.search_config(seed, time_limit, opts.p)),
        Algo::VlsnLs => vlsn_ls(inst, &x0(), &opts.search_config(seed, time_limit, opts.p)),
        Algo::VlsnVnd => vlsn_vnd(inst, &x0(), &opts.search_config(seed, time_limit, opts.p0)),
        Algo::Rts => rts(inst),
        Algo::Exact => solve_exact(inst),
        Algo::Limop => limop(inst, opts.klim),
        Algo::Rts3nn => rts_3nn(inst, opts.budget(), seed),
        Algo::Sa => sa_rts_3opt(inst, opts.budget(), &SaParams::default(), seed),
        Algo::Pract => {
            let costs = match inst.model() {
                CostModel::Extended(c) => *c,
                CostModel::Base => ExtendedCosts::degenerate(inst.e_max()),
            };
            pract(inst, &costs, &x0())
        }
    }?;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Whether `tour` is acceptable for `inst`. PRACT does not plan hover
/// energy, so its tours are held to the planned-energy check only.
pub fn check_solution(inst: &Instance, tour: &DroneTour, algo: Option<Algo>) -> (bool, Vec<String>) {
    match inst.model() {
        CostModel::Base => {
            let r = validate_tour(tour, inst);
            (r.passed(), r.messages.clone())
        }
        CostModel::Extended(costs) => {
            let r = check_extended_tour(tour, inst, costs);
            let energy = if algo == Some(Algo::Pract) {
                r.planned_energy_ok
            } else {
                r.energy_ok
            };
            let mut messages = Vec::new();
            if !r.structure_ok {
                messages.push("tour structure or makespan check failed".into());
            }
            if !energy {
                messages.push("an operation exceeds the usable energy".into());
            }
            if r.forced_landings > 0 {
                messages.push(format!(
                    "{} operation(s) need a forced landing while waiting",
                    r.forced_landings
                ));
            }
            (r.structure_ok && energy, messages)
        }
    }
}

fn cmd_solve(cli: &Cli, path: &Path, algo: Algo, opts: &AlgoOptions) -> Result<i32> {
    let inst = opts.prepare(load_instance(path)?)?;
    let report = run_algorithm(&inst, algo, opts, cli.seed, cli.time_limit)?;
    let (ok, messages) = check_solution(&inst, &report.tour, Some(algo));
    for m in &messages {
        eprintln!("validation: {m}");
    }
    if !ok {
        return Ok(EXIT_VALIDATION);
    }
    let meta = SolutionMeta {
        instance: Some(inst.name().to_string()),
        algorithm: Some(algo.name().to_string()),
        seed: Some(cli.seed),
    };
    write_output(cli.out.as_deref(), &(tour_to_json(&report.tour, meta) + "\n"))?;
    eprintln!(
        "{} {}: makespan {:.6} in {:.3}s ({} iterations, {} neighborhoods)",
        algo.name(),
        inst.name(),
        report.makespan,
        report.wall_time_s,
        report.stats.iterations,
        report.stats.neighborhoods
    );
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let opts = AlgoOptions {
        model: a.model,
        extended: a.extended.clone(),
        ..Default::default()
    };
    let inst = opts.prepare(load_instance(&a.instance)?)?;
    let (tour, meta) = load_tour(&a.solution)?;
    let algo = meta
        .algorithm
        .as_deref()
        .and_then(|s| Algo::from_str(s, true).ok());
    let (ok, messages) = check_solution(&inst, &tour, algo);
    for m in &messages {
        println!("{m}");
    }
    println!(
        "{}: {}",
        a.solution.display(),
        if ok { "valid" } else { "INVALID" }
    );
    Ok(if ok { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_enumerate(cli: &Cli, a: &EnumerateArgs) -> Result<i32> {
    if a.p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let mut text = String::new();
    writeln!(text, "n,p,count,lower_bound,enumerated").unwrap();
    let enumerated = if a.n <= MAX_ENUMERATION {
        let x: Vec<usize> = (0..a.n).collect();
        Some(enumerate_bs_neighbors(&x, a.p)?)
    } else {
        None
    };
    writeln!(
        text,
        "{},{},{},{:.6},{}",
        a.n,
        a.p,
        count_bs_neighbors(a.n, a.p),
        neighborhood_lower_bound(a.n, a.p),
        enumerated.as_ref().map_or(String::new(), |v| v.len().to_string())
    )
    .unwrap();
    if a.list {
        let Some(list) = enumerated else {
            return Err(Error::SizeGuard(format!(
                "listing is limited to {MAX_ENUMERATION} destinations"
            )));
        };
        for y in list {
            let items: Vec<String> = y.iter().map(|v| (v + 1).to_string()).collect();
            writeln!(text, "{}", items.join(" ")).unwrap();
        }
    }
    write_output(cli.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_dump_lookup(cli: &Cli, a: &DumpLookupArgs) -> Result<i32> {
    let lookup = TransitionLookup::new(a.p)?;
    let max_h = a.max_h.unwrap_or(2 * a.p - 1).max(1);
    write_output(cli.out.as_deref(), &lookup.to_csv(max_h))?;
    Ok(EXIT_OK)
}

/// One (instance, algorithm) cell of a campaign.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRun {
    pub setting: String,
    pub instance: String,
    pub algorithm: String,
    pub value: f64,
    pub reference: f64,
    pub gap_pct: f64,
    pub matches_reference: bool,
    pub valid: bool,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config_hash: String,
    pub file_sha256: String,
}

/// One (setting, algorithm) row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub setting: String,
    pub algorithm: String,
    pub instances: usize,
    pub avg_gap_pct: f64,
    pub worst_gap_pct: f64,
    pub optimum_found: usize,
    pub avg_runtime_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutcome {
    pub runs: Vec<BenchRun>,
    pub rows: Vec<BenchRow>,
    pub invalid: usize,
}

/// Instance files of `dir` (the manifest excluded) with their setting label.
pub fn campaign_instances(dir: &Path) -> Result<Vec<(PathBuf, String)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "manifest.json")
        })
        .collect();
    files.sort();
    let manifest: Vec<ManifestEntry> = std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    Ok(files
        .into_iter()
        .map(|p| {
            let file = p.file_name().unwrap().to_string_lossy().to_string();
            let label = manifest
                .iter()
                .find(|m| m.file == file)
                .map(|m| m.setting.to_string())
                .or_else(|| {
                    file.split('-')
                        .nth(1)
                        .and_then(|s| s.parse::<SettingName>().ok())
                        .map(|s| s.to_string())
                })
                .unwrap_or_else(|| "all".into());
            (p, label)
        })
        .collect())
}

fn setting_order(label: &str) -> usize {
    label
        .parse::<SettingName>()
        .ok()
        .and_then(|s| SettingName::ALL.iter().position(|&n| n == s))
        .unwrap_or(SettingName::ALL.len())
}

pub fn load_registry(path: &Path) -> BTreeMap<String, f64> {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default()
}

/// Runs every algorithm on every instance of `dir`, then measures gaps
/// against the exact value (computed when missing and small enough) or the
/// best value known for the instance file.
pub fn bench(
    dir: &Path,
    algos: &[Algo],
    opts: &AlgoOptions,
    seed: u64,
    time_limit: Option<f64>,
    registry: &mut BTreeMap<String, f64>,
) -> Result<(BenchOutcome, Vec<(String, Algo, DroneTour)>)> {
    let files = campaign_instances(dir)?;
    let mut loaded = Vec::with_capacity(files.len());
    for (path, label) in &files {
        let bytes = std::fs::read(path)?;
        let hash = hex::encode(Sha256::digest(&bytes));
        let inst = opts.prepare(load_instance(path)?)?;
        loaded.push((inst, label.clone(), hash));
    }
    let mut algos: Vec<Algo> = algos.to_vec();
    algos.dedup();
    let cells: Vec<(usize, Algo)> = (0..loaded.len())
        .flat_map(|i| algos.iter().map(move |&a| (i, a)))
        .collect();
    let results: Vec<(usize, Algo, Result<SolveReport>)> = cells
        .par_iter()
        .map(|&(i, algo)| {
            let run_seed = seed + i as u64;
            (
                i,
                algo,
                run_algorithm(&loaded[i].0, algo, opts, run_seed, time_limit),
            )
        })
        .collect();

    // References.
    let mut reference = vec![f64::INFINITY; loaded.len()];
    let mut exact_known = vec![false; loaded.len()];
    for (i, algo, r) in &results {
        if let (Algo::Exact, Ok(rep)) = (algo, r) {
            reference[*i] = rep.makespan;
            exact_known[*i] = true;
        }
    }
    let missing: Vec<usize> = (0..loaded.len())
        .filter(|&i| !exact_known[i] && loaded[i].0.n_d() <= AUTO_EXACT_LIMIT)
        .collect();
    let computed: Vec<(usize, Option<f64>)> = missing
        .par_iter()
        .map(|&i| (i, solve_exact(&loaded[i].0).ok().map(|r| r.makespan)))
        .collect();
    for (i, v) in computed {
        if let Some(v) = v {
            reference[i] = v;
            exact_known[i] = true;
        }
    }
    for (i, _, r) in &results {
        if let Ok(rep) = r {
            if !exact_known[*i] {
                reference[*i] = reference[*i].min(rep.makespan);
            }
        }
    }
    for (i, (_, _, hash)) in loaded.iter().enumerate() {
        let entry = registry.entry(hash.clone()).or_insert(f64::INFINITY);
        if exact_known[i] {
            *entry = reference[i];
        } else {
            *entry = entry.min(reference[i]);
            reference[i] = *entry;
        }
    }

    let mut runs = Vec::new();
    let mut tours = Vec::new();
    let mut invalid = 0;
    for (i, algo, r) in results {
        let (inst, label, hash) = &loaded[i];
        let run_seed = seed + i as u64;
        match r {
            Ok(rep) => {
                let (valid, _) = check_solution(inst, &rep.tour, Some(algo));
                if !valid {
                    invalid += 1;
                }
                let gap = (rep.makespan - reference[i]) / reference[i];
                runs.push(BenchRun {
                    setting: label.clone(),
                    instance: inst.name().to_string(),
                    algorithm: algo.name().into(),
                    value: rep.makespan,
                    reference: reference[i],
                    gap_pct: 100.0 * gap,
                    matches_reference: gap.abs() <= 1e-9,
                    valid,
                    wall_time_s: rep.wall_time_s,
                    seed: run_seed,
                    config_hash: opts.config_hash(algo, run_seed, time_limit),
                    file_sha256: hash.clone(),
                });
                tours.push((inst.name().to_string(), algo, rep.tour));
            }
            Err(e) => log::warn!("{} on {}: {e}", algo.name(), inst.name()),
        }
    }

    let mut labels: Vec<String> = loaded.iter().map(|(_, l, _)| l.clone()).collect();
    labels.sort_by_key(|l| (setting_order(l), l.clone()));
    labels.dedup();
    let mut rows = Vec::new();
    for label in &labels {
        for algo in &algos {
            let cell: Vec<&BenchRun> = runs
                .iter()
                .filter(|r| &r.setting == label && r.algorithm == algo.name())
                .collect();
            if cell.is_empty() {
                continue;
            }
            let k = cell.len() as f64;
            rows.push(BenchRow {
                setting: label.clone(),
                algorithm: algo.name().into(),
                instances: cell.len(),
                avg_gap_pct: cell.iter().map(|r| r.gap_pct).sum::<f64>() / k,
                worst_gap_pct: cell.iter().map(|r| r.gap_pct).fold(f64::NEG_INFINITY, f64::max),
                optimum_found: cell.iter().filter(|r| r.matches_reference).count(),
                avg_runtime_s: cell.iter().map(|r| r.wall_time_s).sum::<f64>() / k,
            });
        }
    }
    Ok((BenchOutcome { runs, rows, invalid }, tours))
}

/// LaTeX table: one row per setting, average and worst gap per algorithm.
pub fn latex_table(rows: &[BenchRow]) -> String {
    let mut algos: Vec<&str> = Vec::new();
    let mut settings: Vec<&str> = Vec::new();
    for r in rows {
        if !algos.contains(&r.algorithm.as_str()) {
            algos.push(&r.algorithm);
        }
        if !settings.contains(&r.setting.as_str()) {
            settings.push(&r.setting);
        }
    }
    let mut s = String::new();
    writeln!(s, "\\begin{{tabular}}{{l{}}}", "rr".repeat(algos.len())).unwrap();
    writeln!(s, "\\toprule").unwrap();
    let heads: Vec<String> = algos
        .iter()
        .map(|a| format!("\\multicolumn{{2}}{{c}}{{{a}}}"))
        .collect();
    writeln!(s, "Setting & {} \\\\", heads.join(" & ")).unwrap();
    let sub: Vec<&str> = algos.iter().map(|_| "avg & worst").collect();
    writeln!(s, " & {} \\\\", sub.join(" & ")).unwrap();
    writeln!(s, "\\midrule").unwrap();
    for setting in settings {
        let cells: Vec<String> = algos
            .iter()
            .map(|a| {
                rows.iter()
                    .find(|r| r.setting == setting && r.algorithm == *a)
                    .map_or(" & ".into(), |r| {
                        format!("{:.2} & {:.2}", r.avg_gap_pct, r.worst_gap_pct)
                    })
            })
            .collect();
        writeln!(s, "{setting} & {} \\\\", cells.join(" & ")).unwrap();
    }
    writeln!(s, "\\bottomrule").unwrap();
    writeln!(s, "\\end{{tabular}}").unwrap();
    s
}

fn write_csv<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<i32> {
    let started = Instant::now();
    let out = cli.out.clone().unwrap_or_else(|| a.dir.join("bench"));
    std::fs::create_dir_all(&out)?;
    let registry_path = a.registry.clone().unwrap_or_else(|| out.join("best_known.json"));
    let mut registry = load_registry(&registry_path);
    let (outcome, tours) = bench(
        &a.dir,
        &a.algos,
        &a.options,
        cli.seed,
        cli.time_limit,
        &mut registry,
    )?;
    write_csv(&out.join("results.csv"), &outcome.rows)?;
    write_csv(&out.join("runs.csv"), &outcome.runs)?;
    std::fs::write(&registry_path, serde_json::to_string_pretty(&registry)? + "\n")?;
    if a.save_solutions {
        let sol_dir = out.join("solutions");
        std::fs::create_dir_all(&sol_dir)?;
        for (name, algo, tour) in &tours {
            let meta = SolutionMeta {
                instance: Some(name.clone()),
                algorithm: Some(algo.name().into()),
                seed: Some(cli.seed),
            };
            save_tour(sol_dir.join(format!("{name}.{}.json", algo.name())), tour, meta)?;
        }
    }
    if a.latex {
        print!("{}", latex_table(&outcome.rows));
    }
    eprintln!(
        "{} runs, {} rows written to {} in {:.1}s",
        outcome.runs.len(),
        outcome.rows.len(),
        out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(if outcome.invalid > 0 {
        EXIT_VALIDATION
    } else {
        EXIT_OK
    })
}

/// Instance generation for library callers: writes `count` instances of each
/// requested setting and returns their paths.
pub fn write_instances(
    dir: &Path,
    names: &[SettingName],
    size: Size,
    seed: u64,
    count: usize,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for &name in names {
        for (inst, _) in generate_batch(name, size, seed, count)? {
            let path = dir.join(format!("{}.json", inst.name()));
            save_instance(&path, &inst)?;
            paths.push(path);
        }
    }
    Ok(paths)
}
