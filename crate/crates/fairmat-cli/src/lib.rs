//! Command-line front end: mechanisms, verifiers, decomposition, the
//! instance gallery, the hardness reduction, and certificate re-checking.
//!
//! Exit codes: 0 success; 2 a requested verification check failed; 3
//! infeasible or invalid input; 64 usage errors. The `FAIRMAT_GUARD`
//! environment variable overrides the enumeration guards (either a bare
//! integer or `subset=S,family=F,assignments=A`); raising it beyond the
//! defaults is unsupported territory.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairmat::domain::{validate_instance, FractionalAssignment, Instance, Lottery};
use fairmat::io;
use fairmat::mechanisms::{
    mech_anonymous, mech_eating, mech_naive_ps, mech_rotation, mech_two_agent, MechanismResult,
};
use fairmat::rat;
use fairmat::sdrel;
use fairmat::verify::{self, CertificateDoc};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_INVALID_INPUT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "fairmat",
    about = "Exact sd-efficient / sd-envy-free random assignment under hereditary and matroid constraints",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Human,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechanismName {
    TwoAgent,
    Eating,
    Rotation,
    NaivePs,
    Anonymous,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Debug)]
enum CheckName {
    Efficiency,
    Envy,
    Proportionality,
    Feasibility,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CertifyTarget {
    Thm4,
    Thm5,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance file.
    Solve(SolveArgs),
    /// Re-check properties of a fractional assignment (and optional lottery).
    Verify(VerifyArgs),
    /// Decompose a feasible fractional assignment into a lottery.
    Decompose(DecomposeArgs),
    /// List or emit the built-in instances.
    Gallery(GalleryArgs),
    /// Build the two-agent knapsack reduction instance from integer values.
    ReducePartition(ReduceArgs),
    /// Produce and re-verify the nonexistence certificates.
    Certify(CertifyArgs),
    /// Re-check a serialized certificate document.
    CheckCertificate(CheckCertArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismName,
    #[arg(long)]
    instance: PathBuf,
    /// Also decompose the output matrix into an explicit lottery.
    #[arg(long)]
    decompose: bool,
    /// Re-run the fairness/efficiency predicates on the output.
    #[arg(long)]
    verify: bool,
    /// Duality-gap tolerance for the anonymous mechanism.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value = "human")]
    output: OutputMode,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    pi: PathBuf,
    #[arg(long)]
    lottery: Option<PathBuf>,
    /// Comma-separated: efficiency,envy,proportionality,feasibility.
    #[arg(long, value_delimiter = ',', required = true)]
    checks: Vec<CheckName>,
    #[arg(long, value_enum, default_value = "human")]
    output: OutputMode,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    pi: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    output: OutputMode,
}

#[derive(Args)]
struct GalleryArgs {
    #[arg(long, conflicts_with = "id")]
    list: bool,
    #[arg(long)]
    id: Option<String>,
    /// Write the instance JSON to a file instead of stdout.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Comma-separated positive integers.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u64>,
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, value_enum)]
    target: CertifyTarget,
    /// Interior samples for the polytope sweep.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 20240917)]
    seed: u64,
    /// Write the certificates to a JSON file.
    #[arg(long)]
    emit: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    output: OutputMode,
}

#[derive(Args)]
struct CheckCertArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    output: OutputMode,
}

/// Run with the given arguments, writing to `out`. Returns the exit code.
pub fn run<W: Write>(args: &[String], out: &mut W) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successful exits.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = write!(out, "{err}");
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args, out),
        Command::Verify(args) => cmd_verify(args, out),
        Command::Decompose(args) => cmd_decompose(args, out),
        Command::Gallery(args) => cmd_gallery(args, out),
        Command::ReducePartition(args) => cmd_reduce(args, out),
        Command::Certify(args) => cmd_certify(args, out),
        Command::CheckCertificate(args) => cmd_check_certificate(args, out),
    };
    match result {
        Ok(code) => code,
        Err(CliError { code, message }) => {
            let _ = writeln!(out, "error: {message}");
            code
        }
    }
}

struct CliError {
    code: i32,
    message: String,
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INVALID_INPUT,
        message: message.into(),
    }
}

fn read_json(path: &PathBuf) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| invalid(format!("cannot parse {}: {e}", path.display())))
}

fn load_instance(path: &PathBuf) -> Result<Instance, CliError> {
    let value = read_json(path)?;
    let inst = io::instance_from_json(&value).map_err(|e| invalid(e.to_string()))?;
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(invalid(format!("instance invalid: {}", lines.join("; "))));
    }
    Ok(inst)
}

fn write_or_print<W: Write>(
    out: &mut W,
    emit: &Option<PathBuf>,
    value: &Value,
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match emit {
        Some(path) => std::fs::write(path, text.as_bytes())
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            let _ = writeln!(out, "{text}");
            Ok(())
        }
    }
}

fn matrix_lines(inst: &Instance, pi: &FractionalAssignment) -> Vec<String> {
    let mut lines = Vec::new();
    let header: Vec<String> = inst.items.iter().map(|it| it.label.clone()).collect();
    lines.push(format!("        {}", header.join("  ")));
    for i in 0..pi.n() {
        let cells: Vec<String> = (0..pi.m())
            .map(|e| {
                format!(
                    "{:>width$}",
                    rat::display(pi.entry(i, e)),
                    width = header[e].len().max(3)
                )
            })
            .collect();
        lines.push(format!("agent {i}  {}", cells.join("  ")));
    }
    lines
}

struct CheckOutcome {
    name: &'static str,
    pass: bool,
    detail: String,
    /// A re-checkable certificate document, where one exists (envy
    /// violations with an explicit lottery at hand).
    certificate: Option<Value>,
}

fn run_checks(
    inst: &Instance,
    pi: &FractionalAssignment,
    lottery: Option<&Lottery>,
    checks: &[CheckName],
) -> Result<Vec<CheckOutcome>, CliError> {
    let mut outcomes = Vec::new();
    for check in checks {
        match check {
            CheckName::Feasibility => {
                let (ok, _) =
                    verify::check_feasible(inst, pi).map_err(|e| invalid(e.to_string()))?;
                outcomes.push(CheckOutcome {
                    name: "feasibility",
                    pass: ok,
                    detail: if ok {
                        "matrix lies in the assignment polytope".into()
                    } else {
                        "matrix outside the assignment polytope".into()
                    },
                    certificate: None,
                });
            }
            CheckName::Efficiency => {
                let (ok, witness) =
                    sdrel::is_sd_efficient(inst, pi).map_err(|e| invalid(e.to_string()))?;
                let detail = if ok {
                    "no feasible matrix dominates".to_string()
                } else {
                    "a dominating feasible matrix exists".to_string()
                };
                let certificate = witness.map(|w| {
                    io::certificate_to_json(&verify::CertificateDoc {
                        instance: inst.clone(),
                        certificate: verify::Certificate::DominatingPoint {
                            pi: pi.clone(),
                            witness: w,
                        },
                    })
                });
                outcomes.push(CheckOutcome {
                    name: "efficiency",
                    pass: ok,
                    detail,
                    certificate,
                });
            }
            CheckName::Envy => {
                // The exact lottery-level inequality wherever a lottery is
                // at hand (given or decomposable); the identical-constraint
                // row comparison otherwise.
                let owned_lottery = match lottery {
                    Some(l) => Some(l.clone()),
                    None if inst.identical_constraints() => None,
                    None => Some(verify::decompose(inst, pi).map_err(|e| invalid(e.to_string()))?),
                };
                let report = match &owned_lottery {
                    Some(l) => sdrel::is_sd_envy_free(inst, l),
                    None => sdrel::is_sd_envy_free_fractional(inst, pi),
                }
                .map_err(|e| invalid(e.to_string()))?;
                let pass = report.all_satisfied();
                let certificate = match (&owned_lottery, pass) {
                    (Some(l), false) => verify::envy_certificate(l, &report).map(|c| {
                        io::certificate_to_json(&verify::CertificateDoc {
                            instance: inst.clone(),
                            certificate: c,
                        })
                    }),
                    _ => None,
                };
                outcomes.push(CheckOutcome {
                    name: "envy",
                    pass,
                    detail: if pass {
                        "no ordered pair envies".into()
                    } else {
                        format!("violated pairs {:?}", report.violating_pairs())
                    },
                    certificate,
                });
            }
            CheckName::Proportionality => {
                let flags =
                    sdrel::is_sd_proportional(inst, pi).map_err(|e| invalid(e.to_string()))?;
                let pass = flags.iter().all(|&b| b);
                outcomes.push(CheckOutcome {
                    name: "proportionality",
                    pass,
                    detail: format!("per-agent verdicts {flags:?}"),
                    certificate: None,
                });
            }
        }
    }
    Ok(outcomes)
}

fn checks_json(outcomes: &[CheckOutcome]) -> Value {
    let mut obj = serde_json::Map::new();
    for o in outcomes {
        let mut entry = json!({ "pass": o.pass, "detail": o.detail });
        if let Some(cert) = &o.certificate {
            entry["certificate"] = cert.clone();
        }
        obj.insert(o.name.to_string(), entry);
    }
    Value::Object(obj)
}

fn cmd_solve<W: Write>(args: SolveArgs, out: &mut W) -> Result<i32, CliError> {
    let inst = load_instance(&args.instance)?;
    let mut result: MechanismResult = match args.mechanism {
        MechanismName::TwoAgent => mech_two_agent(&inst),
        MechanismName::Eating => mech_eating(&inst),
        MechanismName::Rotation => mech_rotation(&inst),
        MechanismName::NaivePs => mech_naive_ps(&inst),
        MechanismName::Anonymous => mech_anonymous(&inst, args.tol),
    }
    .map_err(|e| invalid(e.to_string()))?;
    if args.decompose && result.lottery.is_none() {
        result.lottery =
            Some(verify::decompose(&inst, &result.pi).map_err(|e| invalid(e.to_string()))?);
    }
    let outcomes = if args.verify {
        // Feasibility, efficiency, and envy are always re-checked;
        // proportionality only when the mechanism claims it.
        let mut checks = vec![
            CheckName::Feasibility,
            CheckName::Efficiency,
            CheckName::Envy,
        ];
        if result
            .guarantees
            .contains(&fairmat::mechanisms::Guarantee::SdProportional)
        {
            checks.push(CheckName::Proportionality);
        }
        run_checks(&inst, &result.pi, result.lottery.as_ref(), &checks)?
    } else {
        Vec::new()
    };
    match args.output {
        OutputMode::Json => {
            let mut doc = json!({
                "mechanism": result.provenance,
                "guarantees": result.guarantees.iter().map(|g| format!("{g:?}")).collect::<Vec<_>>(),
                "pi": io::pi_to_json(&result.pi)["pi"],
            });
            if let Some(l) = &result.lottery {
                doc["lottery"] = io::lottery_to_json(&inst, l);
            }
            if args.verify {
                doc["checks"] = checks_json(&outcomes);
            }
            write_or_print(out, &None, &doc)?;
        }
        OutputMode::Human => {
            let _ = writeln!(out, "{}", result.provenance);
            for line in matrix_lines(&inst, &result.pi) {
                let _ = writeln!(out, "{line}");
            }
            if let Some(l) = &result.lottery {
                let _ = writeln!(out, "lottery ({} draws):", l.support.len());
                for (p, x) in &l.support {
                    let bundles: Vec<String> = x
                        .bundles
                        .iter()
                        .map(|b| {
                            let items: Vec<&str> = b.iter().map(|e| inst.label(e)).collect();
                            format!("{{{}}}", items.join(","))
                        })
                        .collect();
                    let _ = writeln!(out, "  {}  ->  {}", rat::display(p), bundles.join(" | "));
                }
            }
            for o in &outcomes {
                let _ = writeln!(
                    out,
                    "check {:<16} {}  ({})",
                    o.name,
                    if o.pass { "pass" } else { "FAIL" },
                    o.detail
                );
            }
        }
    }
    if outcomes.iter().any(|o| !o.pass) {
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

fn cmd_verify<W: Write>(args: VerifyArgs, out: &mut W) -> Result<i32, CliError> {
    let inst = load_instance(&args.instance)?;
    let pi = io::pi_from_json(&read_json(&args.pi)?).map_err(|e| invalid(e.to_string()))?;
    if pi.n() != inst.n() || pi.m() != inst.m() {
        return Err(invalid("matrix shape does not match the instance"));
    }
    let lottery = match &args.lottery {
        Some(path) => Some(
            io::lottery_from_json(&inst, &read_json(path)?).map_err(|e| invalid(e.to_string()))?,
        ),
        None => None,
    };
    if let Some(l) = &lottery {
        if !l.is_valid(&inst) {
            return Err(invalid("lottery is not valid for the instance"));
        }
        if fairmat::domain::induced_fractional(l, inst.m()) != pi {
            return Err(invalid("lottery does not induce the given matrix"));
        }
    }
    let outcomes = run_checks(&inst, &pi, lottery.as_ref(), &args.checks)?;
    match args.output {
        OutputMode::Json => {
            let doc = json!({ "checks": checks_json(&outcomes) });
            write_or_print(out, &None, &doc)?;
        }
        OutputMode::Human => {
            for o in &outcomes {
                let _ = writeln!(
                    out,
                    "check {:<16} {}  ({})",
                    o.name,
                    if o.pass { "pass" } else { "FAIL" },
                    o.detail
                );
            }
        }
    }
    Ok(if outcomes.iter().all(|o| o.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_decompose<W: Write>(args: DecomposeArgs, out: &mut W) -> Result<i32, CliError> {
    let inst = load_instance(&args.instance)?;
    let pi = io::pi_from_json(&read_json(&args.pi)?).map_err(|e| invalid(e.to_string()))?;
    let lottery = verify::decompose(&inst, &pi).map_err(|e| invalid(e.to_string()))?;
    match args.output {
        OutputMode::Json => write_or_print(out, &None, &io::lottery_to_json(&inst, &lottery))?,
        OutputMode::Human => {
            let _ = writeln!(out, "lottery ({} draws):", lottery.support.len());
            for (p, x) in &lottery.support {
                let bundles: Vec<String> = x
                    .bundles
                    .iter()
                    .map(|b| {
                        let items: Vec<&str> = b.iter().map(|e| inst.label(e)).collect();
                        format!("{{{}}}", items.join(","))
                    })
                    .collect();
                let _ = writeln!(out, "  {}  ->  {}", rat::display(p), bundles.join(" | "));
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_gallery<W: Write>(args: GalleryArgs, out: &mut W) -> Result<i32, CliError> {
    if args.list {
        for id in fairmat::instances::GALLERY_IDS {
            let entry = fairmat::instances::gallery(id).expect("built-in id");
            let _ = writeln!(out, "{:<16} {}", entry.id, entry.notes);
        }
        let _ = writeln!(
            out,
            "{:<16} parameterized nonexistence family (N >= 3)",
            "thm5-general-N"
        );
        let _ = writeln!(
            out,
            "{:<16} parameterized knapsack reduction",
            "npc-a1,a2,..."
        );
        return Ok(EXIT_OK);
    }
    let Some(id) = args.id else {
        return Err(CliError {
            code: EXIT_USAGE,
            message: "pass --list or --id ID".into(),
        });
    };
    let entry = fairmat::instances::gallery(&id).map_err(|e| invalid(e.to_string()))?;
    write_or_print(out, &args.emit, &io::instance_to_json(&entry.instance))?;
    Ok(EXIT_OK)
}

fn cmd_reduce<W: Write>(args: ReduceArgs, out: &mut W) -> Result<i32, CliError> {
    if args.values.is_empty() || args.values.contains(&0) {
        return Err(invalid("values must be positive integers"));
    }
    let inst = fairmat::instances::build_partition_reduction(&args.values);
    write_or_print(out, &args.emit, &io::instance_to_json(&inst))?;
    Ok(EXIT_OK)
}

fn cmd_certify<W: Write>(args: CertifyArgs, out: &mut W) -> Result<i32, CliError> {
    match args.target {
        CertifyTarget::Thm4 => {
            let cert = verify::certify_thm4_nonexistence().map_err(|e| invalid(e.to_string()))?;
            let docs = [
                CertificateDoc {
                    instance: cert.instance.clone(),
                    certificate: cert.support_restriction.clone(),
                },
                CertificateDoc {
                    instance: cert.instance.clone(),
                    certificate: cert.envy_infeasibility.clone(),
                },
            ];
            let mut all_ok = true;
            for doc in &docs {
                let ok = verify::check_certificate(doc).map_err(|e| invalid(e.to_string()))?;
                all_ok &= ok;
            }
            let payload = json!({
                "target": "thm4",
                "forced_top_share": [
                    rat::display(&cert.forced_top_share.0),
                    rat::display(&cert.forced_top_share.1),
                ],
                "reverified": all_ok,
                "certificates": docs.iter().map(io::certificate_to_json).collect::<Vec<_>>(),
            });
            if let Some(path) = &args.emit {
                write_or_print(out, &Some(path.clone()), &payload)?;
            }
            match args.output {
                OutputMode::Json => write_or_print(out, &None, &payload)?,
                OutputMode::Human => {
                    let _ = writeln!(
                        out,
                        "support restriction: every partial-coverage assignment dominated ({} cases)",
                        match &cert.support_restriction {
                            fairmat::verify::Certificate::SupportRestriction { dominations } =>
                                dominations.len(),
                            _ => 0,
                        }
                    );
                    let _ = writeln!(
                        out,
                        "full-coverage envy system: infeasible, Farkas certificate re-verified"
                    );
                    let _ = writeln!(
                        out,
                        "forced top-item share bracket: [{}, {}]",
                        rat::display(&cert.forced_top_share.0),
                        rat::display(&cert.forced_top_share.1)
                    );
                    let _ = writeln!(out, "certificates re-verified: {all_ok}");
                }
            }
            Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        CertifyTarget::Thm5 => {
            let report = verify::certify_thm5_sampling(args.samples, args.seed)
                .map_err(|e| invalid(e.to_string()))?;
            let all_ok = report.all_certified();
            let inst = fairmat::instances::gallery("thm5")
                .expect("built-in")
                .instance;
            let vertex_docs: Vec<Value> = report
                .vertices
                .iter()
                .map(|c| {
                    io::certificate_to_json(&CertificateDoc {
                        instance: inst.clone(),
                        certificate: c.certificate.clone(),
                    })
                })
                .collect();
            let payload = json!({
                "target": "thm5",
                "seed": report.seed,
                "dimension": report.q_dimension,
                "vertices": report.vertices.len(),
                "samples": report.samples.len(),
                "all_certified": all_ok,
                "bounds": {
                    "gamma_min": rat::display(&report.bounds.gamma_min),
                    "alpha_max": rat::display(&report.bounds.alpha_max),
                    "beta_max": rat::display(&report.bounds.beta_max),
                    "beta_vs_alpha_max": rat::display(&report.bounds.beta_vs_alpha_max),
                },
                "note": report.note,
                "certificates": vertex_docs,
            });
            if let Some(path) = &args.emit {
                write_or_print(out, &Some(path.clone()), &payload)?;
            }
            match args.output {
                OutputMode::Json => write_or_print(out, &None, &payload)?,
                OutputMode::Human => {
                    let _ = writeln!(
                        out,
                        "restricted polytope: dimension {}, {} vertices, {} interior samples (seed {})",
                        report.q_dimension,
                        report.vertices.len(),
                        report.samples.len(),
                        report.seed
                    );
                    let _ = writeln!(
                        out,
                        "share bounds: gamma >= {}, alpha <= {}, beta <= {}, 2*beta - 3*alpha <= {}",
                        rat::display(&report.bounds.gamma_min),
                        rat::display(&report.bounds.alpha_max),
                        rat::display(&report.bounds.beta_max),
                        rat::display(&report.bounds.beta_vs_alpha_max)
                    );
                    let _ = writeln!(out, "every point received a dominating witness: {all_ok}");
                    let _ = writeln!(out, "{}", report.note);
                }
            }
            Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn cmd_check_certificate<W: Write>(args: CheckCertArgs, out: &mut W) -> Result<i32, CliError> {
    let value = read_json(&args.file)?;
    let docs: Vec<Value> = match value.get("certificates").and_then(Value::as_array) {
        Some(arr) => arr.clone(),
        None => vec![value],
    };
    let mut all_ok = true;
    let mut verdicts = Vec::new();
    for (idx, doc_value) in docs.iter().enumerate() {
        let doc = io::certificate_from_json(doc_value).map_err(|e| invalid(e.to_string()))?;
        let ok = verify::check_certificate(&doc).map_err(|e| invalid(e.to_string()))?;
        all_ok &= ok;
        verdicts.push(json!({ "index": idx, "valid": ok }));
        if matches!(args.output, OutputMode::Human) {
            let _ = writeln!(
                out,
                "certificate {idx}: {}",
                if ok { "valid" } else { "INVALID" }
            );
        }
    }
    if matches!(args.output, OutputMode::Json) {
        write_or_print(
            out,
            &None,
            &json!({ "certificates": verdicts, "all_valid": all_ok }),
        )?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
