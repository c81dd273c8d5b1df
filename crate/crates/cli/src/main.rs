mod lmfdb;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cm_adelic::verify::{entanglement_check, frobenius_consistency};
use cm_adelic::{adelic_image_with, parse_curve, Error, Table, WeierstrassCurve};

use lmfdb::LookupError;
use report::{ImageJson, TableRow, VerifyJson};

const EXIT_OK: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_NOT_CM: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_UNAVAILABLE: u8 = 69;

#[derive(Parser, Debug)]
#[command(name = "cmimage", version, about = "Adelic Galois images of CM elliptic curves over Q")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,

    /// Never contact LMFDB; labels must be embedded or cached.
    #[arg(long, global = true)]
    no_network: bool,

    /// Cache directory for LMFDB lookups (default: $CM_ADELIC_CACHE or the platform cache dir).
    #[arg(long, global = true, value_name = "DIR")]
    cache: Option<PathBuf>,

    /// Load the simplest-curve table from a file instead of the embedded copy.
    #[arg(long, global = true, value_name = "FILE", hide = true)]
    table: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the adelic image at a level of definition.
    Image(CurveArgs),
    /// Check the computed image against Frobenius data and the entanglement pattern.
    Verify {
        #[command(flatten)]
        curve: CurveArgs,
        /// Test all primes up to this bound.
        #[arg(long, default_value_t = 1000, value_name = "B")]
        primes: u64,
    },
    /// List simplest CM curves.
    Table(TableArgs),
    /// Print the minimal level of definition.
    MinimalLevel(CurveArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct CurveArgs {
    /// Long Weierstrass model "[a1,a2,a3,a4,a6]".
    #[arg(long, value_name = "AINVS")]
    curve: Option<String>,
    /// Short Weierstrass model "[A,B]" for y² = x³ + Ax + B.
    #[arg(long, value_name = "AB")]
    short: Option<String>,
    /// LMFDB label such as 441.c2.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct TableArgs {
    /// Discriminant of the CM order.
    #[arg(long, allow_hyphen_values = true)]
    disc: Option<i64>,
    /// All records.
    #[arg(long)]
    all: bool,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Failure {
        Failure { code, kind, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure::new(EXIT_USAGE, "Usage", message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let (code, kind) = match &e {
            Error::NotCm => (EXIT_NOT_CM, "NotCM"),
            Error::Unsupported(_) => (EXIT_NOT_CM, "Unsupported"),
            Error::FrobeniusMismatch { .. } => (EXIT_INTERNAL, "FrobeniusMismatch"),
            Error::EntanglementMismatch(_) => (EXIT_INTERNAL, "EntanglementMismatch"),
            Error::DataTable(_) => (EXIT_INTERNAL, "DataTable"),
            _ => (EXIT_INTERNAL, "Internal"),
        };
        Failure::new(code, kind, e.to_string())
    }
}

struct Input {
    label: Option<String>,
    curve: WeierstrassCurve,
}

fn load_table(cli: &Cli) -> Result<Table, Failure> {
    let Some(path) = &cli.table else {
        return Ok(Table::embedded().clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INTERNAL, "DataTable", format!("{}: {e}", path.display())))?;
    let table = Table::parse(&text)
        .map_err(|e| Failure::new(EXIT_INTERNAL, "DataTable", format!("load invariant violated: {e}")))?;
    table
        .validate_images()
        .map_err(|e| Failure::new(EXIT_INTERNAL, "DataTable", format!("load invariant violated: {e}")))?;
    Ok(table)
}

fn parse_model(spec: &str, expected: usize) -> Result<WeierstrassCurve, Failure> {
    let count = spec.trim().trim_start_matches('[').trim_end_matches(']').split(',').count();
    if count != expected {
        return Err(Failure::usage(format!("expected {expected} coefficients in {spec:?}, got {count}")));
    }
    parse_curve(spec).map_err(|e| Failure::usage(e.to_string()))
}

fn resolve(cli: &Cli, args: &CurveArgs, table: &Table) -> Result<Input, Failure> {
    if let Some(spec) = &args.curve {
        return Ok(Input { label: None, curve: parse_model(spec, 5)? });
    }
    if let Some(spec) = &args.short {
        return Ok(Input { label: None, curve: parse_model(spec, 2)? });
    }
    let label = args.label.as_deref().expect("clap requires one curve argument");
    if let Some(rec) = table.get(label) {
        return Ok(Input { label: Some(label.to_string()), curve: rec.curve() });
    }
    let ainvs = lmfdb::lookup(label, cli.cache.as_deref(), cli.no_network).map_err(|e| match e {
        LookupError::BadLabel(l) => Failure::usage(format!("malformed LMFDB label {l:?}")),
        LookupError::Unavailable(m) => Failure::new(EXIT_UNAVAILABLE, "Unavailable", m),
        LookupError::Corrupt(m) => Failure::new(EXIT_INTERNAL, "Cache", format!("corrupt cache entry {m}")),
    })?;
    let spec = format!("[{}]", ainvs.join(","));
    let curve = parse_curve(&spec).map_err(|e| Failure::new(EXIT_INTERNAL, "Cache", format!("{label}: {e}")))?;
    Ok(Input { label: Some(label.to_string()), curve })
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report values serialize"));
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let table = load_table(cli)?;
    match &cli.command {
        Command::Image(args) => {
            let input = resolve(cli, args, &table)?;
            let img = adelic_image_with(&input.curve, &table)?;
            let out = ImageJson::new(input.label, &input.curve, &img, None);
            if cli.json {
                print_json(&out);
            } else {
                print!("{}", out.to_text());
            }
        }
        Command::MinimalLevel(args) => {
            let input = resolve(cli, args, &table)?;
            let img = adelic_image_with(&input.curve, &table)?;
            if cli.json {
                print_json(&serde_json::json!({
                    "label": input.label,
                    "level": img.level,
                    "minimal_level": img.minimal_level,
                }));
            } else {
                println!("{}", img.minimal_level);
            }
        }
        Command::Verify { curve, primes } => {
            let input = resolve(cli, curve, &table)?;
            let img = adelic_image_with(&input.curve, &table)?;
            let frob = frobenius_consistency(&input.curve, &img, *primes)?;
            let ent = entanglement_check(&img)?;
            let verify = VerifyJson::new(&frob, ent.as_ref());
            let out = ImageJson::new(input.label, &input.curve, &img, Some(verify));
            if cli.json {
                print_json(&out);
            } else {
                print!("{}", out.to_text());
            }
        }
        Command::Table(args) => {
            let rows: Vec<TableRow> = match args.disc {
                Some(d) => {
                    let recs = table.simplest_curves_for(d).map_err(|e| Failure::usage(e.to_string()))?;
                    if recs.is_empty() {
                        return Err(Failure::usage(format!("no simplest curves with discriminant {d}")));
                    }
                    recs.into_iter().map(TableRow::from).collect()
                }
                None => table.curves().iter().map(TableRow::from).collect(),
            };
            if cli.json {
                print_json(&rows);
            } else {
                for r in &rows {
                    println!("{}", r.to_text());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error [{}]: {}", f.kind, f.message);
            if cli.json {
                print_json(&serde_json::json!({ "error": f.kind, "message": f.message }));
            }
            ExitCode::from(f.code)
        }
    }
}
