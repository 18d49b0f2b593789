use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fell_core::io::{compose_instance, emit_instance, exit_code, parse_instance, summarize, worst, Instance, InstanceDocument};
use fell_core::{gen, Error, Report, Status};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fell", version, about = "Verify and compose finite Fell-bundle equivalences")]
struct Cli {
    /// Seed for random generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the verification sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Plain-text output instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite of one object, or of every object in the file.
    Verify {
        file: PathBuf,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Tensor two bundle spaces, form the quotient, and write the result with certificates.
    Compose {
        file: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Write a generated instance.
    Gen {
        kind: GenKind,
        #[arg(long)]
        out: PathBuf,
        /// Points of a pair groupoid.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Group order.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Use the Klein four-group instead of a cyclic group.
        #[arg(long)]
        klein: bool,
        /// Points acted on by a transformation groupoid.
        #[arg(long, default_value_t = 2)]
        points: usize,
        /// Unit dimension of a full matrix bundle.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Amplification of the Pauli bundle.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Unit dimensions over A, B and C, comma separated; C is optional.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        da: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        db: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        dc: Option<Vec<usize>>,
        #[arg(long, default_value_t = 3)]
        max_units: usize,
        #[arg(long, default_value_t = 3)]
        max_dim: usize,
    },
    /// Summarize a document and its certificates.
    Report { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    #[value(name = "pair-groupoid", alias = "pair")]
    PairGroupoid,
    Group,
    Transformation,
    FullMatrixBundle,
    ProjectiveRepBundle,
    CanonicalEquivalence,
    RandomDims,
}

/// A failure before any report exists: unreadable input, bad schema, bad references.
fn fail(human: bool, e: &Error) -> ExitCode {
    if human {
        eprintln!("error: {e}");
    } else {
        let err = match e {
            Error::Parse { path, msg } => json!({ "path": path, "message": msg }),
            other => json!({ "message": other.to_string() }),
        };
        println!("{}", json!({ "status": "structural_fail", "error": err }));
    }
    ExitCode::from(2)
}

/// Writes to stdout, ignoring a closed pipe.
fn out(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
}

fn load(path: &Path) -> Result<InstanceDocument, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse { path: String::new(), msg: format!("{}: {e}", path.display()) })?;
    parse_instance(&text)
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Parse { path: String::new(), msg: format!("{}: {e}", path.display()) })
}

fn status_label(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::AxiomFail => "axiom_fail",
        Status::StructuralFail => "structural_fail",
    }
}

fn verify(cli: &Cli, file: &Path, target: Option<&str>, tol: Option<f64>) -> Result<ExitCode, Error> {
    let doc = load(file)?;
    let inst = Instance::resolve_with_tol(&doc, tol)?;
    let names: Vec<String> = match target {
        Some(t) => vec![t.to_string()],
        None => inst.objects.iter().map(|(_, n)| n.clone()).collect(),
    };
    let mut reports: Vec<(String, &'static str, Report)> = Vec::new();
    for name in names {
        let kind = inst.kind_of(&name).ok_or_else(|| Error::Lookup(format!("no object named {name:?}")))?;
        reports.push((name.clone(), kind.label(), inst.verify(&name)?));
    }
    let status = worst(reports.iter().map(|(_, _, r)| r.status));
    if cli.human {
        let mut text: String = reports.iter().map(|(_, _, r)| r.to_string()).collect();
        text.push_str(&format!("overall: {}\n", status_label(status)));
        out(&text);
    } else {
        let doc_out = json!({
            "status": status,
            "reports": reports
                .iter()
                .map(|(n, k, r)| json!({ "target": n, "kind": k, "report": r }))
                .collect::<Vec<_>>(),
        });
        out(&format!("{}\n", serde_json::to_string_pretty(&doc_out).expect("reports serialize")));
    }
    Ok(ExitCode::from(exit_code(status) as u8))
}

fn compose(cli: &Cli, file: &Path, left: &str, right: &str, out_path: &Path, tol: Option<f64>) -> Result<ExitCode, Error> {
    let doc = load(file)?;
    let inst = Instance::resolve_with_tol(&doc, tol)?;
    let c = compose_instance(&doc, &inst, left, right)?;
    write(out_path, &emit_instance(&c.document))?;
    if cli.human {
        let mut text: String =
            c.certificates.iter().map(|cert| format!("{} for {}: {}", cert.kind, cert.target, cert.report)).collect();
        text.push_str(&format!("wrote {} ({} classes)\n", out_path.display(), c.quotient.n_classes()));
        out(&text);
    } else {
        let summary = json!({
            "status": c.status,
            "composed": c.name,
            "classes": c.quotient.n_classes(),
            "out": out_path.display().to_string(),
            "certificates": c.certificates.iter().map(|cert| json!({
                "kind": cert.kind,
                "status": cert.report.status,
                "axiom": cert.report.axiom,
                "witness": cert.report.witness,
                "max_residual": cert.report.max_residual(),
                "morita": cert.morita,
            })).collect::<Vec<_>>(),
        });
        out(&format!("{}\n", serde_json::to_string_pretty(&summary).expect("summaries serialize")));
    }
    Ok(ExitCode::from(exit_code(c.status) as u8))
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Verify { file, target, tol } => verify(cli, file, target.as_deref(), *tol),
        Command::Compose { file, left, right, out, tol } => compose(cli, file, left, right, out, *tol),
        Command::Gen { kind, out, n, order, klein, points, dim, k, da, db, dc, max_units, max_dim } => {
            let doc = match kind {
                GenKind::PairGroupoid => gen::pair_groupoid(*n)?,
                GenKind::Group => gen::group(*order, *klein)?,
                GenKind::Transformation => gen::transformation(*order, *points)?,
                GenKind::FullMatrixBundle => gen::full_matrix_bundle(*n, *dim)?,
                GenKind::ProjectiveRepBundle => gen::projective_rep_bundle(*k)?,
                GenKind::CanonicalEquivalence => gen::canonical_equivalence(da, db, dc.as_deref())?,
                GenKind::RandomDims => gen::random_dims(cli.seed, *max_units, *max_dim)?,
            };
            write(out, &emit_instance(&doc))?;
            if cli.human {
                println!("wrote {}", out.display());
            } else {
                println!("{}", json!({ "status": "pass", "out": out.display().to_string() }));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { file } => {
            out(&summarize(&load(file)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("warning: {e}");
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => fail(cli.human, &e),
    }
}
