//! `pednet`: batch front door to pedigree-net bundles.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 ok, 1 data
//! errors, 2 usage errors.

mod svg;

/// `println!` that ignores a closed stdout instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pednet_core::genotype::{check_net, infer_second_parent, match_genotype, parse_calls};
use pednet_core::io::{pedigree_bytes, write_synth_bundle, BundleStore, DirectoryStore, IoError};
use pednet_core::layout::compute_layout;
use pednet_core::notation::{atomize, parse, serialize_purdy};
use pednet_core::overlay::SizeMode;
use pednet_core::synth::{generate, SynthConfig, DEFAULT_MARKERS};
use pednet_core::{usage_stats, DataBundle, LayoutConfig, LineId, MatchHit, Notation, PedigreeError};
use pednet_service::view::SimilarityOverlay;
use pednet_service::{build_overlay, layout_view, AppState, OverlayRequest};

#[derive(Parser)]
#[command(name = "pednet", version, about = "Explore plant pedigree nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NotationArg {
    Purdy,
    Star,
    Mixed,
}

impl From<NotationArg> for Notation {
    fn from(n: NotationArg) -> Self {
        match n {
            NotationArg::Purdy => Notation::Purdy,
            NotationArg::Star => Notation::Star,
            NotationArg::Mixed => Notation::Mixed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a pedigree string (or a file holding one) into a cross tree.
    Parse {
        #[arg(long, value_enum, default_value = "mixed")]
        notation: NotationArg,
        /// Print parent/child relations as pedigree CSV instead of the tree.
        #[arg(long, requires = "child")]
        atomize: bool,
        /// Name of the line the pedigree describes.
        #[arg(long)]
        child: Option<String>,
        /// Print the tree as JSON.
        #[arg(long, conflicts_with = "atomize")]
        json: bool,
        input: String,
    },
    /// Load and validate a bundle; exit 0 iff clean.
    Validate { bundle: PathBuf },
    /// Lay out a bundle; prints layout JSON and optionally writes SVG.
    Layout {
        bundle: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// `trait=NAME` (repeatable, merged) or `similarity=LINE`.
        #[arg(long)]
        overlay: Vec<String>,
        /// Cut-off for a similarity overlay.
        #[arg(long)]
        cutoff: Option<f64>,
        /// `uses` or `descendants`.
        #[arg(long)]
        size_by: Option<SizeMode>,
    },
    /// Mendelian consistency of every complete, genotyped family.
    CheckGenotypes { bundle: PathBuf },
    /// Rank candidates for the unknown second parent.
    FindParent {
        bundle: PathBuf,
        #[arg(long)]
        child: String,
        #[arg(long)]
        known: String,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Match a genotype row against every genotyped line.
    Match {
        bundle: PathBuf,
        /// File of calls separated by whitespace or commas.
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Write a synthetic bundle with recorded ground truth.
    Synth {
        #[arg(long, default_value_t = 803)]
        lines: usize,
        #[arg(long, default_value_t = DEFAULT_MARKERS)]
        markers: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        error_rate: f64,
        #[arg(long)]
        missing_rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API over one bundle.
    Serve {
        #[arg(env = "PEDNET_BUNDLE")]
        bundle: PathBuf,
        #[arg(long, env = "PEDNET_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

enum Failure {
    Data(String),
    Usage(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse {
            notation,
            atomize,
            child,
            json,
            input,
        } => run_parse(notation.into(), atomize, child.as_deref(), json, &input),
        Command::Validate { bundle } => run_validate(&bundle),
        Command::Layout {
            bundle,
            svg,
            overlay,
            cutoff,
            size_by,
        } => run_layout(&bundle, svg.as_deref(), &overlay, cutoff, size_by),
        Command::CheckGenotypes { bundle } => run_check(&bundle),
        Command::FindParent {
            bundle,
            child,
            known,
            limit,
        } => run_find_parent(&bundle, &child, &known, limit),
        Command::Match { bundle, query, limit } => run_match(&bundle, &query, limit),
        Command::Synth {
            lines,
            markers,
            seed,
            error_rate,
            missing_rate,
            out,
        } => run_synth(lines, markers, seed, error_rate, missing_rate, &out),
        Command::Serve { bundle, port, host } => run_serve(bundle, SocketAddr::new(host, port)),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(dir: &Path) -> Result<DataBundle, Failure> {
    let bundle = DirectoryStore::new(dir).load()?;
    for d in &bundle.row_diagnostics {
        eprintln!("warning: {}:{}: {}", d.file, d.row, d.reason);
    }
    Ok(bundle)
}

fn print_json(v: &impl serde::Serialize) {
    out!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run_parse(notation: Notation, atomize_it: bool, child: Option<&str>, as_json: bool, input: &str) -> Outcome {
    let text = if Path::new(input).is_file() {
        std::fs::read_to_string(input).map_err(|e| Failure::Data(format!("{input}: {e}")))?
    } else {
        input.to_string()
    };
    let tree = match parse(text.trim(), notation) {
        Ok(t) => t,
        Err(diags) => {
            for d in &diags {
                eprintln!("error: {d}");
            }
            return Ok(ExitCode::from(1));
        }
    };
    if atomize_it {
        let child = child.expect("clap requires --child");
        let atoms = atomize(&tree, child);
        out!("{}", String::from_utf8(pedigree_bytes(&atoms.relations)).expect("utf-8").trim_end());
    } else if as_json {
        print_json(&tree);
    } else {
        out!("{tree}");
        out!("{}", serialize_purdy(&tree));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(dir: &Path) -> Outcome {
    let raw = DirectoryStore::new(dir).load_raw()?;
    let row_diagnostics = raw.row_diagnostics.clone();
    for d in &row_diagnostics {
        eprintln!("error: {}:{}: {}", d.file, d.row, d.reason);
    }
    let bundle = match raw.assemble() {
        Ok(b) => b,
        Err(IoError::Pedigree(PedigreeError::Rejected(diags))) => {
            for d in &diags {
                eprintln!("{d}");
            }
            print_json(&json!({
                "clean": false,
                "row_diagnostics": row_diagnostics,
                "net_diagnostics": diags,
            }));
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    for d in &bundle.net_diagnostics {
        eprintln!("{d}");
    }
    for o in &bundle.orphans {
        eprintln!("warning: `{o}` has data but is not in the pedigree");
    }
    let report = bundle.matrix.as_ref().map(|m| check_net(&bundle.net, m));
    let findings = report.as_ref().map_or(0, |r| r.findings.len());
    if findings > 0 {
        eprintln!("error: {findings} Mendelian inconsistencies");
    }
    let clean = row_diagnostics.is_empty() && findings == 0;
    print_json(&json!({
        "clean": clean,
        "digest": bundle.digest(),
        "lines": bundle.net.len(),
        "relations": bundle.net.relations().len(),
        "row_diagnostics": row_diagnostics,
        "net_diagnostics": bundle.net_diagnostics,
        "orphans": bundle.orphans,
        "mendelian": report.map(|r| json!({
            "findings": r.findings.len(),
            "families_checked": r.families_checked,
            "families_skipped": r.families_skipped,
            "loci_tested": r.loci_tested,
            "loci_untested": r.loci_untested,
            "per_line": r.per_line,
        })),
    }));
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn overlay_request(specs: &[String], cutoff: Option<f64>, size_by: Option<SizeMode>) -> Result<OverlayRequest, Failure> {
    let mut req = OverlayRequest {
        size_by,
        ..OverlayRequest::default()
    };
    for spec in specs {
        match spec.split_once('=') {
            Some(("trait", name)) => req.traits.push(name.to_string()),
            Some(("similarity", base)) if req.similarity.is_none() => {
                req.similarity = Some(SimilarityOverlay {
                    base: LineId::from(base),
                    cutoff,
                })
            }
            _ => return Err(Failure::Usage(format!("bad overlay `{spec}`; expected trait=NAME or similarity=LINE"))),
        }
    }
    if req.similarity.is_some() && !req.traits.is_empty() {
        return Err(Failure::Usage("trait and similarity overlays are exclusive".into()));
    }
    Ok(req)
}

fn run_layout(dir: &Path, svg_out: Option<&Path>, overlay: &[String], cutoff: Option<f64>, size_by: Option<SizeMode>) -> Outcome {
    let req = overlay_request(overlay, cutoff, size_by)?;
    let bundle = load(dir)?;
    let stats = usage_stats(&bundle.net);
    let layout = compute_layout(&bundle.net, &LayoutConfig::default()).map_err(|e| Failure::Data(e.to_string()))?;
    let spec = build_overlay(&bundle, &stats, &req).map_err(|f| Failure::Data(pednet_service::ApiError::from(f).message))?;
    let view = layout_view(&layout, &spec);
    if let Some(path) = svg_out {
        std::fs::write(path, svg::render(&view, &bundle.net))
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }
    print_json(&view);
    Ok(ExitCode::SUCCESS)
}

fn require_genotypes(bundle: &DataBundle) -> Result<&pednet_core::GenotypeMatrix, Failure> {
    bundle
        .matrix
        .as_ref()
        .ok_or_else(|| Failure::Data("bundle has no genotypes".into()))
}

fn run_check(dir: &Path) -> Outcome {
    let bundle = load(dir)?;
    let report = check_net(&bundle.net, require_genotypes(&bundle)?);
    out!("child\tparents\tlocus\tmarker\tchild_call\tparent_calls\tkind");
    for f in &report.findings {
        let parents: Vec<&str> = f.parents.iter().map(LineId::as_str).collect();
        let calls: Vec<String> = f.parent_calls.iter().map(ToString::to_string).collect();
        let kind = serde_json::to_value(f.kind).expect("serializable");
        out!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            f.child,
            parents.join("|"),
            f.locus,
            f.marker,
            f.child_call,
            calls.join("|"),
            kind.as_str().unwrap_or_default()
        );
    }
    eprintln!(
        "{} findings over {} families ({} skipped)",
        report.findings.len(),
        report.families_checked,
        report.families_skipped
    );
    Ok(if report.findings.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_find_parent(dir: &Path, child: &str, known: &str, limit: Option<usize>) -> Outcome {
    let bundle = load(dir)?;
    let matrix = require_genotypes(&bundle)?;
    let ranked = infer_second_parent(matrix, &LineId::from(child), &LineId::from(known))
        .map_err(|e| Failure::Data(e.to_string()))?;
    out!("rank\tline\tviolations\ttested");
    for c in ranked.iter().take(limit.unwrap_or(usize::MAX)) {
        out!("{}\t{}\t{}\t{}", c.rank, c.line, c.violations, c.tested);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_match(dir: &Path, query: &Path, limit: Option<usize>) -> Outcome {
    let text = std::fs::read_to_string(query).map_err(|e| Failure::Data(format!("{}: {e}", query.display())))?;
    let calls = parse_calls(&text).map_err(|e| Failure::Data(format!("{}: {e}", query.display())))?;
    let bundle = load(dir)?;
    let hits: Vec<MatchHit> =
        match_genotype(require_genotypes(&bundle)?, &calls).map_err(|e| Failure::Data(e.to_string()))?;
    out!("rank\tline\tscore\tcompared\tlow_confidence");
    for (i, h) in hits.iter().take(limit.unwrap_or(usize::MAX)).enumerate() {
        let score = h.similarity.score.map_or("-".to_string(), |s| format!("{s:.6}"));
        out!("{}\t{}\t{}\t{}\t{}", i + 1, h.line, score, h.similarity.compared, h.low_confidence);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_synth(lines: usize, markers: usize, seed: u64, error_rate: f64, missing_rate: Option<f64>, out: &Path) -> Outcome {
    if !(0.0..=1.0).contains(&error_rate) {
        return Err(Failure::Usage(format!("--error-rate {error_rate} is outside [0, 1]")));
    }
    let mut config = SynthConfig {
        lines,
        markers,
        seed,
        error_rate,
        ..SynthConfig::default()
    };
    if let Some(m) = missing_rate {
        if !(0.0..=1.0).contains(&m) {
            return Err(Failure::Usage(format!("--missing-rate {m} is outside [0, 1]")));
        }
        config.missing_rate = m;
    }
    let data = generate(&config);
    let manifest = write_synth_bundle(&data, out)?;
    print_json(&json!({
        "out": out.display().to_string(),
        "digest": manifest.bundle_digest(),
        "lines": data.lines.len(),
        "relations": data.relations.len(),
        "genotyped": data.matrix.line_count(),
        "markers": data.matrix.marker_count(),
        "planted_errors": data.planted.len(),
    }));
    Ok(ExitCode::SUCCESS)
}

fn run_serve(bundle: PathBuf, addr: SocketAddr) -> Outcome {
    let state = AppState::load(&bundle).map_err(|e| Failure::Data(format!("{}: {e}", bundle.display())))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Data(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Data(format!("cannot listen on {addr}: {e}")))?;
        eprintln!("serving {} on http://{addr}", bundle.display());
        pednet_service::serve_on(listener, Arc::new(state))
            .await
            .map_err(|e| Failure::Data(e.to_string()))
    })?;
    Ok(ExitCode::SUCCESS)
}
