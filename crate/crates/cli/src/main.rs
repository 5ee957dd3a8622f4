use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zonematch::bench::bench_xmatch;
use zonematch::catalog::ingest_csv;
use zonematch::output::{write_cone, write_pairs, write_scan};
use zonematch::query::best_matches;
use zonematch::synth::{BandRange, Footprint, SyntheticSpec};
use zonematch::units::parse_angle;
use zonematch::{
    plan, report, run_cone, run_scan, run_xmatch, ConeQuery, Error, ExecutionReport, MatchSpec,
    ScanFilter, SkyPoint, Strategy, ZoneConfig, ZoneIndex,
};

#[derive(Parser)]
#[command(
    name = "zonematch",
    version,
    about = "Zone-partitioned cone search and cross-match over sky catalogs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic catalog CSV.
    Gen(GenArgs),
    /// Read a catalog CSV, report rejected rows and write an index snapshot.
    Ingest(IngestArgs),
    /// Assign zones to workers and optionally print the workload report.
    Plan(PlanArgs),
    /// Parallel magnitude-range scan.
    Scan(ScanArgs),
    /// Parallel cone search.
    Cone(ConeArgs),
    /// Parallel radius cross-match of two catalogs.
    Xmatch(XmatchArgs),
    /// Timing benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Cross-match elapsed time and speedup per worker count.
    Xmatch(BenchXmatchArgs),
}

fn angle(s: &str) -> Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn parsed<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn default_workers() -> u32 {
    std::thread::available_parallelism().map_or(1, |n| n.get() as u32)
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    count: u64,
    /// full-sky, dec-band:LO:HI, clustered, or clustered:RA0,RA1,DEC0,DEC1/...
    #[arg(long, value_parser = parsed::<Footprint>)]
    footprint: Footprint,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Magnitude band as name:lo:hi; repeatable.
    #[arg(long = "band", value_parser = parsed::<BandRange>, default_value = "r:5:15")]
    bands: Vec<BandRange>,
    #[arg(long, default_value_t = 0)]
    first_id: u64,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_parser = angle, default_value = "4arcmin")]
    zone_height: f64,
    #[arg(long)]
    out: PathBuf,
}

/// How an index argument is loaded: snapshots carry their own zone height,
/// CSV catalogs are indexed on the fly with `--zone-height`.
#[derive(Args)]
struct IndexOpts {
    #[arg(long, value_parser = angle, default_value = "4arcmin")]
    zone_height: f64,
}

#[derive(Args)]
struct ExecOpts {
    #[arg(long, default_value_t = default_workers())]
    workers: u32,
    #[arg(long, value_parser = parsed::<Strategy>, default_value = "density")]
    strategy: Strategy,
    /// Result CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Execution report JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value_t = default_workers())]
    workers: u32,
    #[arg(long, value_parser = parsed::<Strategy>, default_value = "density")]
    strategy: Strategy,
    /// Print the per-worker workload report.
    #[arg(long)]
    report: bool,
    /// Print the workload report as JSON instead of a table.
    #[arg(long, requires = "report")]
    json: bool,
    /// Plan JSON; standard output when omitted and no report is requested.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    load: IndexOpts,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value = "r")]
    band: String,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [9.0, 10.0], allow_negative_numbers = true)]
    between: Vec<f64>,
    #[command(flatten)]
    exec: ExecOpts,
    #[command(flatten)]
    load: IndexOpts,
}

#[derive(Args)]
struct ConeArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    ra: f64,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    dec: f64,
    #[arg(long, value_parser = angle, default_value = "1arcmin")]
    radius: f64,
    #[command(flatten)]
    exec: ExecOpts,
    #[command(flatten)]
    load: IndexOpts,
}

#[derive(Args)]
struct XmatchArgs {
    #[arg(long)]
    leading: PathBuf,
    #[arg(long)]
    other: PathBuf,
    #[arg(long, value_parser = angle, default_value = "10arcsec")]
    radius: f64,
    /// Keep only the closest partner of each leading object.
    #[arg(long)]
    best_match: bool,
    /// Drop pairs whose two ids are equal.
    #[arg(long)]
    no_self: bool,
    #[command(flatten)]
    exec: ExecOpts,
    #[command(flatten)]
    load: IndexOpts,
}

#[derive(Args)]
struct BenchXmatchArgs {
    #[arg(long)]
    leading: PathBuf,
    #[arg(long)]
    other: PathBuf,
    #[arg(long, value_parser = angle, default_value = "10arcsec")]
    radius: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    workers: Vec<u32>,
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long, value_parser = parsed::<Strategy>, default_value = "density")]
    strategy: Strategy,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Plot-ready CSV of worker_count, elapsed, speedup.
    #[arg(long)]
    plot_csv: Option<PathBuf>,
    #[command(flatten)]
    load: IndexOpts,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult = Result<(), Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `emit` against the `--out` file, or standard output.
fn emit_to(
    out: Option<&Path>,
    emit: impl FnOnce(&mut dyn Write) -> Result<(), Error>,
) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            emit(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        None => {
            let mut buf = Vec::new();
            emit(&mut buf)?;
            print_out(&String::from_utf8_lossy(&buf))
        }
    }
}

/// Standard output that treats a closed pipe as the end of output.
fn print_out(text: &str) -> Result<(), Error> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn load(path: &Path, opts: &IndexOpts) -> Result<ZoneIndex, Error> {
    let loaded = ZoneIndex::open(path, ZoneConfig::new(opts.zone_height)?)?;
    for r in &loaded.rejections {
        eprintln!("{}: {r}", path.display());
    }
    Ok(loaded.index)
}

fn finish_stats(report: &ExecutionReport, stats: Option<&Path>) -> Result<(), Error> {
    eprint!("{}", report.to_table());
    if let Some(path) = stats {
        write_text(path, &(report.to_json()? + "\n"))?;
    }
    Ok(())
}

fn gen(a: GenArgs) -> CliResult {
    let spec = SyntheticSpec {
        count: a.count,
        footprint: a.footprint,
        bands: a.bands,
        seed: a.seed,
        first_id: a.first_id,
    };
    spec.write_csv_file(&a.out)?;
    Ok(())
}

fn ingest(a: IngestArgs) -> CliResult {
    let cfg = ZoneConfig::new(a.zone_height)?;
    let ingested = ingest_csv(&a.input, None, cfg)?;
    for r in &ingested.rejections {
        eprintln!("{r}");
    }
    ingested.index.write_snapshot(&a.out)?;
    eprintln!(
        "indexed {} objects into {} zones ({} rows rejected)",
        ingested.index.total_count(),
        ingested.index.histogram().occupied().count(),
        ingested.rejections.len()
    );
    Ok(())
}

fn plan_cmd(a: PlanArgs) -> CliResult {
    let index = load(&a.index, &a.load)?;
    let hist = index.histogram();
    let p = plan(a.strategy, &hist, a.workers)?;
    if let Some(path) = &a.out {
        write_text(path, &(p.to_json()? + "\n"))?;
    }
    if a.report {
        let r = report(&p, &hist)?;
        let text = if a.json {
            r.to_json()? + "\n"
        } else {
            r.to_table()
        };
        print_out(&text)?;
    } else if a.out.is_none() {
        print_out(&(p.to_json()? + "\n"))?;
    }
    Ok(())
}

fn scan(a: ScanArgs) -> CliResult {
    let index = load(&a.index, &a.load)?;
    let filter = ScanFilter::new(a.band, a.between[0], a.between[1])?;
    let p = plan(a.exec.strategy, &index.histogram(), a.exec.workers)?;
    let (hits, rep) = run_scan(&index, &filter, &p)?;
    emit_to(a.exec.out.as_deref(), |w| write_scan(w, &hits))?;
    finish_stats(&rep, a.exec.stats.as_deref())?;
    Ok(())
}

fn cone(a: ConeArgs) -> CliResult {
    let index = load(&a.index, &a.load)?;
    let q = ConeQuery::new(SkyPoint::new(a.ra, a.dec)?, a.radius)?;
    let p = plan(a.exec.strategy, &index.histogram(), a.exec.workers)?;
    let (hits, rep) = run_cone(&index, &q, &p)?;
    emit_to(a.exec.out.as_deref(), |w| write_cone(w, &hits))?;
    finish_stats(&rep, a.exec.stats.as_deref())?;
    Ok(())
}

fn xmatch(a: XmatchArgs) -> CliResult {
    let leading = load(&a.leading, &a.load)?;
    let other = load(&a.other, &a.load)?;
    let spec = MatchSpec::new(a.radius)?.exclude_self(a.no_self);
    let lead_hist = leading.histogram();

    // The same plan applied with either catalog leading, for comparison.
    for (label, idx) in [("leading", &leading), ("other", &other)] {
        let h = idx.histogram();
        let r = report(&plan(a.exec.strategy, &h, a.exec.workers)?, &h)?;
        eprintln!("workload if the {label} catalog `{}` leads:", idx.name());
        eprint!("{}", r.to_table());
    }

    let p = plan(a.exec.strategy, &lead_hist, a.exec.workers)?;
    let (mut pairs, rep) = run_xmatch(&leading, &other, &spec, &p)?;
    if a.best_match {
        pairs = best_matches(&pairs);
    }
    emit_to(a.exec.out.as_deref(), |w| write_pairs(w, &pairs))?;
    finish_stats(&rep, a.exec.stats.as_deref())?;
    Ok(())
}

fn bench(cmd: BenchCommand) -> CliResult {
    let BenchCommand::Xmatch(a) = cmd;
    if a.repeat == 0 {
        return Err(Failure::Usage("--repeat must be at least 1".into()));
    }
    let leading = load(&a.leading, &a.load)?;
    let other = load(&a.other, &a.load)?;
    let spec = MatchSpec::new(a.radius)?;
    let rep = bench_xmatch(&leading, &other, &spec, a.strategy, &a.workers, a.repeat)?;
    write_text(&a.out, &(rep.to_json()? + "\n"))?;
    if let Some(path) = &a.plot_csv {
        let mut w = create(path)?;
        rep.write_plot_csv(&mut w)?;
    }
    print_out(&rep.to_table())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Ingest(a) => ingest(a),
        Command::Plan(a) => plan_cmd(a),
        Command::Scan(a) => scan(a),
        Command::Cone(a) => cone(a),
        Command::Xmatch(a) => xmatch(a),
        Command::Bench(c) => bench(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
