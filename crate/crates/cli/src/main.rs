mod error;

use std::io::{Read, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use skyroute_core::analysis::{
    compare, read_flown, render_report, resolve_home, summarize, ErrorReport, ReportFormat,
};
use skyroute_core::document::{decode_route, KEY_PATH};
use skyroute_core::geodesy::{GeodesyMode, HomePoint};
use skyroute_core::sim::{default_home, simulate, SimConfig};
use skyroute_core::store::RouteStore;
use skyroute_service::ServiceConfig;

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "skyroute",
    version,
    about = "Waypoint route store, flight simulator and flown-route error analysis"
)]
struct Cli {
    /// Route store file.
    #[arg(
        long,
        global = true,
        env = "SKYROUTE_STORE",
        default_value = "routes.json"
    )]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List stored routes.
    List,
    /// Print a route document.
    Show { id: String },
    /// Validate a stored route or every route in a document file.
    Validate { target: String },
    /// Merge a route document file into the store.
    Import { file: PathBuf },
    /// Write the whole store as one document (`-` for stdout).
    Export { file: PathBuf },
    /// Delete a route.
    Delete { id: String },
    /// Fly a route in the simulator and print the flown-trace document.
    Simulate(SimulateArgs),
    /// Compare a flown trace against the planned route.
    Analyze(AnalyzeArgs),
    /// Render the comparison as a table.
    Report {
        #[command(flatten)]
        flown: FlownArgs,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Emit planned and flown x/z series for plotting.
    Plotdata(FlownArgs),
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SKYROUTE_PORT")]
        port: Option<u16>,
        #[arg(long, env = "SKYROUTE_BIND")]
        bind: Option<std::net::IpAddr>,
        #[arg(long, env = "SKYROUTE_MODE")]
        mode: Option<GeodesyMode>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    id: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    speed: Option<f64>,
    /// Horizontal measurement noise per axis, meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    tick: Option<f64>,
    #[arg(long, default_value = "corrected")]
    mode: GeodesyMode,
    /// Takeoff point as `lat,lon`; defaults to the first waypoint.
    #[arg(long, value_parser = parse_home)]
    home: Option<HomePoint>,
}

#[derive(Args)]
struct FlownArgs {
    id: String,
    /// Flown-trace document or `{"points": [...]}` record; `-` reads stdin.
    #[arg(long)]
    flown: PathBuf,
    /// Takeoff point as `lat,lon`; defaults to the document's HOME, then
    /// the first planned waypoint.
    #[arg(long, value_parser = parse_home)]
    home: Option<HomePoint>,
    /// Defaults to the mode recorded in the document, else legacy.
    #[arg(long)]
    mode: Option<GeodesyMode>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    flown: FlownArgs,
    /// Report max and mean errors rounded to 0.1 m.
    #[arg(long)]
    round: bool,
}

fn parse_home(text: &str) -> Result<HomePoint, String> {
    let (lat, lon) = text.split_once(',').ok_or("expected lat,lon")?;
    let number = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok(HomePoint::new(number(lat)?, number(lon)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn open_store(file: &FsPath) -> Result<RouteStore, CliError> {
    Ok(RouteStore::open(file)?)
}

fn read_input(file: &FsPath) -> Result<String, CliError> {
    let mut text = String::new();
    if file.as_os_str() == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(file)
            .map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    }
    Ok(text)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Io(format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List => print_json(&open_store(&cli.store)?.list_routes()),
        Command::Show { id } => {
            let store = open_store(&cli.store)?;
            let path = store.load_route(&id)?;
            print_json(&json!({ id: skyroute_core::document::encode_route(&path) }))
        }
        Command::Validate { target } => validate(&cli.store, &target),
        Command::Import { file } => {
            let count = open_store(&cli.store)?.import_tree(&read_input(&file)?)?;
            print_json(&json!({ "imported": count }))
        }
        Command::Export { file } => {
            let text = open_store(&cli.store)?.export_tree();
            if file.as_os_str() == "-" {
                emit(&(text + "\n"))
            } else {
                std::fs::write(&file, text + "\n")
                    .map_err(|e| CliError::Io(format!("{}: {e}", file.display())))
            }
        }
        Command::Delete { id } => {
            open_store(&cli.store)?.delete_route(&id)?;
            print_json(&json!({ "deleted": id }))
        }
        Command::Simulate(args) => {
            let path = open_store(&cli.store)?.load_route(&args.id)?;
            let defaults = SimConfig::default();
            let config = SimConfig {
                speed_mps: args.speed.unwrap_or(defaults.speed_mps),
                tick_s: args.tick.unwrap_or(defaults.tick_s),
                noise_sigma_m: args.noise,
                rng_seed: args.seed,
                ..defaults
            };
            let home = args
                .home
                .or_else(|| default_home(&path))
                .ok_or_else(|| CliError::Domain("route has no waypoints".into()))?;
            let result = simulate(&path, home, &config, args.mode)?;
            print_json(&result.to_document())
        }
        Command::Analyze(args) => {
            let report = analyze(&cli.store, &args.flown)?;
            if args.round {
                let s = summarize(&report)?;
                print_json(&json!({
                    "route_id": report.route_id,
                    "mode": report.mode,
                    "home": report.home,
                    "max_error_x": s.max_error_x,
                    "max_error_z": s.max_error_z,
                    "mean_error_x": s.mean_error_x,
                    "mean_error_z": s.mean_error_z,
                }))
            } else {
                print_json(&report)
            }
        }
        Command::Report { flown, format } => {
            let format: ReportFormat = format.parse()?;
            let report = analyze(&cli.store, &flown)?;
            emit(&render_report(&report, format)?)
        }
        Command::Plotdata(flown) => {
            let report = analyze(&cli.store, &flown)?;
            emit(&plot_series(&report))
        }
        Command::Serve { port, bind, mode } => {
            let mut config = ServiceConfig {
                store: Some(cli.store),
                ..ServiceConfig::default()
            };
            if let Some(port) = port {
                config.bind.set_port(port);
            }
            if let Some(bind) = bind {
                config.bind.set_ip(bind);
            }
            if let Some(mode) = mode {
                config.default_mode = mode;
            }
            let runtime =
                tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("listening on http://{}", config.bind);
            runtime
                .block_on(skyroute_service::serve(config))
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn validate(store_file: &FsPath, target: &str) -> Result<(), CliError> {
    let file = FsPath::new(target);
    let store = RouteStore::in_memory();
    let mut results = Vec::new();
    let mut invalid = Vec::new();
    if file.is_file() {
        let document: Value = serde_json::from_str(&read_input(file)?)?;
        let routes = document
            .as_object()
            .ok_or_else(|| CliError::Schema("expected an object of routes".into()))?;
        for (route_id, record) in routes {
            let draft = decode_route(route_id, record)?;
            let report = draft.validate(store.limits());
            let mut notes = Vec::new();
            if draft.legacy {
                notes.push("legacy schema upgraded");
            }
            results.push(json!({
                "route_id": route_id,
                "valid": report.is_valid(),
                "violations": report.messages(),
                "notes": notes,
            }));
            if !report.is_valid() {
                invalid.extend(
                    report
                        .messages()
                        .into_iter()
                        .map(|m| format!("{route_id}: {m}")),
                );
            }
        }
    } else {
        let stored = open_store(store_file)?;
        let draft = stored.snapshot().draft(target)?;
        let report = draft.validate(stored.limits());
        invalid.extend(report.messages());
        results.push(json!({
            "route_id": target,
            "valid": report.is_valid(),
            "violations": report.messages(),
            "notes": if draft.legacy { vec!["legacy schema upgraded"] } else { vec![] },
        }));
    }
    print_json(&results)?;
    if invalid.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation {
            message: "validation failed".into(),
            violations: invalid,
        })
    }
}

/// Mode recorded by the simulator under the route record, if any.
fn recorded_mode(document: &Value) -> Option<GeodesyMode> {
    let record = if document.get(KEY_PATH).is_some() {
        document
    } else {
        document.as_object()?.values().next()?
    };
    record.get("MODE")?.as_str()?.parse().ok()
}

fn analyze(store_file: &FsPath, args: &FlownArgs) -> Result<ErrorReport, CliError> {
    let planned = open_store(store_file)?.load_route(&args.id)?;
    let document: Value = serde_json::from_str(&read_input(&args.flown)?)?;
    let (flown, recorded_home) = read_flown(&document)?;
    let home = resolve_home(args.home, recorded_home, &planned)
        .ok_or_else(|| CliError::Domain("no home position: route is empty".into()))?;
    let mode = args
        .mode
        .or_else(|| recorded_mode(&document))
        .unwrap_or(GeodesyMode::Legacy);
    Ok(compare(&planned, &flown, home, mode)?)
}

fn plot_series(report: &ErrorReport) -> String {
    let mut out = String::from("series,order,x_m,z_m\nhome,,0,0\n");
    for r in &report.rows {
        out.push_str(&format!(
            "planned,{},{},{}\n",
            r.order, r.x_planned, r.z_planned
        ));
    }
    for r in &report.rows {
        out.push_str(&format!("flown,{},{},{}\n", r.order, r.x_flown, r.z_flown));
    }
    out
}
