use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use field_atlas::engine::{CardRequest, NewSession};
use field_atlas::format;
use field_atlas::plot::{render_svg, PlotSpec};
use field_atlas::{Engine, ServiceConfig};
use field_atlas_core::authline::verify_session;
use field_atlas_core::etm::{compare_dtw, compare_frechet};
use field_atlas_core::fixture;
use field_atlas_core::geo::{GeoPoint, Geofence};
use field_atlas_core::model::SessionHeader;

/// Batch interface to a Field Atlas data directory.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Data directory; overrides the config file.
    #[arg(long, global = true, env = "ATLAS_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// TOML file with service-shaped parameters.
    #[arg(long, global = true, env = "ATLAS_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty session.
    New {
        #[arg(long)]
        learner: String,
        #[arg(long)]
        title: String,
        #[arg(long)]
        id: Option<String>,
        /// Geofence as LAT,LON,RADIUS_M.
        #[arg(long, value_parser = parse_geofence)]
        geofence: Option<Geofence>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Import a session file, or append card requests (one JSON object per line) to --session.
    Ingest {
        file: PathBuf,
        #[arg(long)]
        session: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Build the trajectory of a session and optionally write the plot and export record.
    Etm {
        #[arg(long)]
        session: String,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check authenticity. Exits 0 iff the session is authentic.
    Verify {
        #[arg(long, required_unless_present = "file", conflicts_with = "file")]
        session: Option<String>,
        /// A session file outside the data directory.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Distance between two session trajectories in their latent planes.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_enum, default_value_t = Metric::Frechet)]
        metric: Metric,
        #[arg(long)]
        json: bool,
    },
    /// A learner's semantic links.
    Links {
        #[arg(long)]
        learner: String,
        #[arg(long)]
        json: bool,
    },
    /// Run the provocation gate on a text against a session's vocabulary. Exits 1 on rejection.
    Gate {
        #[arg(long)]
        session: String,
        #[arg(long)]
        text: String,
        #[arg(long)]
        json: bool,
    },
    /// Generate a provocation for a capture card.
    Provoke {
        #[arg(long)]
        card: String,
        /// Append the provocation to the card's session.
        #[arg(long)]
        append: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write the bundled Maya demo sessions into the data directory.
    Fixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Frechet,
    Dtw,
}

fn parse_geofence(s: &str) -> Result<Geofence, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [lat, lon, r] = parts[..] else {
        return Err("expected LAT,LON,RADIUS_M".into());
    };
    let center = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
    Geofence::new(center, r).map_err(|e| e.to_string())
}

fn load_config(cli: &Cli) -> anyhow::Result<ServiceConfig> {
    let mut config = match &cli.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    if let Some(d) = &cli.data_dir {
        config.data_dir = d.clone();
    }
    Ok(config)
}

fn json_line(out: &mut impl Write, value: &impl serde::Serialize) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn is_header_line(line: &str) -> bool {
    serde_json::from_str::<SessionHeader>(line).is_ok()
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = load_config(&cli)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::New {
            learner,
            title,
            id,
            geofence,
            dim,
        } => {
            let engine = Engine::open(config)?;
            let state = engine.create_session(NewSession {
                id,
                learner_id: learner,
                title,
                geofence,
                embed_dim: dim,
            })?;
            json_line(&mut out, state.session.header())?;
        }
        Command::Ingest { file, session, json } => {
            let engine = Engine::open(config)?;
            let reader = BufReader::new(File::open(&file).with_context(|| format!("opening {}", file.display()))?);
            let mut lines = reader.lines();
            let first = loop {
                match lines.next() {
                    Some(l) => {
                        let l = l?;
                        if !l.trim().is_empty() {
                            break l;
                        }
                    }
                    None => bail!("{} is empty", file.display()),
                }
            };
            if is_header_line(&first) {
                if session.is_some() {
                    bail!("{} is a session file; --session applies only to card-request files", file.display());
                }
                let f = File::open(&file)?;
                let imported = format::load_session(BufReader::new(f))
                    .with_context(|| format!("loading {}", file.display()))?;
                let state = engine.import_session(imported)?;
                writeln!(out, "imported {} ({} cards)", state.session.id(), state.session.len())?;
            } else {
                let Some(sid) = session else {
                    bail!("card-request files need --session");
                };
                for (i, line) in std::iter::once(Ok(first)).chain(lines).enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let req: CardRequest =
                        serde_json::from_str(&line).with_context(|| format!("{}:{}", file.display(), i + 1))?;
                    let outcome = engine
                        .ingest(&sid, req)
                        .with_context(|| format!("{}:{}", file.display(), i + 1))?;
                    if json {
                        json_line(&mut out, &outcome)?;
                        continue;
                    }
                    let tag = if outcome.replayed { " (replayed)" } else { "" };
                    writeln!(out, "{:>4} {}{tag}", outcome.card.seq, outcome.card.card.id)?;
                    if let Some(p) = &outcome.provocation {
                        writeln!(out, "{:>4} {} provocation: {}", p.card.seq, p.card.card.id, p.text)?;
                    }
                }
            }
        }
        Command::Etm { session, svg, json } => {
            let engine = Engine::open(config)?;
            let t = engine.trajectory(&session)?;
            writeln!(
                out,
                "session {}: points {}, pivots {}, duration {:.1} min",
                t.session_id,
                t.points.len(),
                t.pivots.len(),
                t.duration_minutes()
            )?;
            writeln!(out, "{:>3}  {:<24} {:>8} {:>9} {:>9} {:>9}", "#", "card", "t_min", "v", "x", "y")?;
            let start = t.timeline.first().map(|e| e.ts);
            for (i, p) in t.points.iter().enumerate() {
                let mins = start.map_or(0.0, |s| p.t.minutes_since(&s));
                writeln!(
                    out,
                    "{:>3}  {:<24} {:>8.2} {:>9.5} {:>9.5} {:>9.5}",
                    i, p.card_id, mins, p.v, p.xy[0], p.xy[1]
                )?;
            }
            for pv in &t.pivots {
                writeln!(
                    out,
                    "pivot at {} ({}): turn cosine {:.4}, step {:.4}, after {}",
                    pv.index,
                    t.points[pv.index].card_id,
                    pv.turn_cosine,
                    pv.magnitude,
                    pv.attributed_provocation.as_deref().unwrap_or("-")
                )?;
            }
            if let Some(path) = svg {
                let bytes = render_svg(&t, &PlotSpec::default())?;
                write_file(&path, bytes.as_bytes())?;
            }
            if let Some(path) = json {
                let mut text = format::trajectory_json(&t);
                text.push('\n');
                write_file(&path, text.as_bytes())?;
            }
        }
        Command::Verify { session, file, json } => {
            let path = match (&session, &file) {
                (_, Some(f)) => f.clone(),
                (Some(s), None) => config.data_dir.join(format!("{s}.jsonl")),
                (None, None) => unreachable!("clap requires one of --session or --file"),
            };
            let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let s = format::load_session_unverified(BufReader::new(f))
                .with_context(|| format!("loading {}", path.display()))?;
            let report = verify_session(&s, &config.auth);
            if json {
                writeln!(out, "{}", format::report_json(&report))?;
            } else {
                let verdict = if report.authentic { "authentic" } else { "NOT authentic" };
                writeln!(out, "session {}: {verdict}", report.session_id)?;
                for v in &report.violations {
                    writeln!(out, "  {:?} [{}] {}", v.code, v.card_ids.join(", "), v.detail)?;
                }
            }
            return Ok(if report.authentic { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Compare { a, b, metric, json } => {
            let engine = Engine::open(config)?;
            let ta = engine.trajectory(&a)?.xy();
            let tb = engine.trajectory(&b)?.xy();
            let (name, d) = match metric {
                Metric::Frechet => ("frechet", compare_frechet(&ta, &tb)?),
                Metric::Dtw => ("dtw", compare_dtw(&ta, &tb)?),
            };
            if json {
                json_line(&mut out, &serde_json::json!({ "a": a, "b": b, "metric": name, "distance": d }))?;
            } else {
                writeln!(out, "{name}({a}, {b}) = {d:.6}")?;
            }
        }
        Command::Links { learner, json } => {
            let engine = Engine::open(config)?;
            let links = engine.learner_links(&learner)?;
            if json {
                out.write_all(format::links_jsonl(&links).as_bytes())?;
            } else {
                for l in &links {
                    writeln!(
                        out,
                        "{} -> {}  {:.4}{}{}",
                        l.from_card,
                        l.to_card,
                        l.similarity,
                        if l.cross_session { "  cross-session" } else { "" },
                        if l.surfaced { "  surfaced" } else { "" }
                    )?;
                }
            }
        }
        Command::Gate { session, text, json } => {
            let engine = Engine::open(config)?;
            let verdict = engine.gate_text(&session, &text)?;
            if json {
                json_line(&mut out, &verdict)?;
            } else {
                writeln!(out, "{}", if verdict.passed { "passed" } else { "rejected" })?;
                for r in &verdict.rule_results {
                    let mark = if r.passed { "ok  " } else { "FAIL" };
                    writeln!(out, "  {mark} {:?}: {}", r.rule, r.detail)?;
                }
            }
            return Ok(if verdict.passed { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Provoke { card, append, json } => {
            let engine = Engine::open(config)?;
            let p = engine.provoke_card(&card)?;
            let stored = if append { Some(engine.append_provocation(&p)?) } else { None };
            if json {
                json_line(
                    &mut out,
                    &serde_json::json!({
                        "text": p.text(),
                        "trigger_card": p.trigger_card(),
                        "linked_card": p.linked_card(),
                        "gate": p.gate(),
                        "card": stored,
                    }),
                )?;
            } else {
                writeln!(out, "{}", p.text())?;
                if let Some(v) = stored {
                    writeln!(out, "appended as {} (seq {})", v.card.id, v.seq)?;
                }
            }
        }
        Command::Fixture => {
            let engine = Engine::open(config)?;
            for s in fixture::maya_sessions() {
                let state = engine.import_session(s)?;
                writeln!(out, "imported {} ({} cards)", state.session.id(), state.session.len())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("atlas: {e:#}");
            ExitCode::from(2)
        }
    }
}
