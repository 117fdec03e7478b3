use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdclean::approx::{over_clean, under_clean};
use mdclean::md::{chase, check_unique_clean_preconditions, enumerate_clean};
use mdclean::project::instance_to_json;
use mdclean::query::{clean_answer, eval, is_monotone_syntax, relax};
use mdclean::sat::{gen3sat_json, CnfFormula, SatEncoding};
use mdclean::swoosh::{correspondence_check, md_reconstruction, record_of, records_of, UnionMerge};
use mdclean::{ChasePolicy, Error, Project, Query};
use serde_json::{json, Value as Json};

mod table;

const EXIT_IO: u8 = 3;
const EXIT_INVALID: u8 = 4;
const EXIT_QUERY: u8 = 5;
const EXIT_TRUNCATED: u8 = 6;
const EXIT_STEP_BOUND: u8 = 7;
const EXIT_CONTRACT: u8 = 8;
const EXIT_CHECK_FAILED: u8 = 9;

#[derive(Parser)]
#[command(name = "mdclean", version, about = "Clean relational data with matching dependencies")]
struct Cli {
    /// Print a JSON document instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a project and report on its domains and dependencies.
    Validate { project: PathBuf },
    /// Chase the project's instance to a clean instance.
    Clean {
        project: PathBuf,
        /// md-order, reverse-md-order, priority:ID,... or random:SEED.
        #[arg(long, default_value = "md-order")]
        policy: String,
    },
    /// List every clean instance reachable from the project's instance.
    Enumerate {
        project: PathBuf,
        #[arg(long, default_value_t = 64)]
        limit: usize,
    },
    /// Certain and possible answers of a named query.
    Answer {
        project: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 64)]
        limit: usize,
    },
    /// Under- and over-clean instances, and optionally a query over them.
    Approx {
        project: PathBuf,
        #[arg(long)]
        query: Option<String>,
    },
    /// Rewrite a named query into its relaxed, monotone form.
    Relax {
        project: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Compare the chase with union-merge entity resolution.
    Swoosh {
        project: PathBuf,
        /// Defaults to the only relation of the project.
        #[arg(long)]
        relation: Option<String>,
    },
    /// Build the hardness project of a 3-CNF formula in DIMACS form.
    Gen3sat {
        formula: PathBuf,
        #[arg(long, value_enum, default_value_t = Encoding::PerLiteral)]
        encoding: Encoding,
        /// Write the project here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    PerLiteral,
    PerClause,
}

/// A finished report: what to print, and whether its checks held.
struct Report {
    text: String,
    json: Json,
    code: u8,
}

impl Report {
    fn ok(text: String, json: Json) -> Self {
        Report { text, json, code: 0 }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Parse { .. } | Error::Validation(_) => EXIT_INVALID,
        Error::Query(_) => EXIT_QUERY,
        Error::IncompleteEnumeration { .. } => EXIT_TRUNCATED,
        Error::StepBoundExceeded { .. } => EXIT_STEP_BOUND,
        Error::Domain { .. } | Error::Contract(_) | Error::NotApplicable { .. } => EXIT_CONTRACT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report.json).expect("report serializes"));
            } else {
                print!("{}", report.text);
            }
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> mdclean::Result<Report> {
    match command {
        Command::Validate { project } => validate(&Project::load(project)?),
        Command::Clean { project, policy } => clean(&Project::load(project)?, &policy.parse()?),
        Command::Enumerate { project, limit } => enumerate(&Project::load(project)?, limit),
        Command::Answer { project, query, limit } => answer(&Project::load(project)?, &query, limit),
        Command::Approx { project, query } => approx(&Project::load(project)?, query.as_deref()),
        Command::Relax { project, query } => relaxed(&Project::load(project)?, &query),
        Command::Swoosh { project, relation } => swoosh(&Project::load(project)?, relation.as_deref()),
        Command::Gen3sat { formula, encoding, output } => gen3sat(&formula, encoding, output.as_deref()),
    }
}

fn validate(p: &Project) -> mdclean::Result<Report> {
    let mut text = String::new();
    let relations: Vec<Json> = p
        .schema
        .relations()
        .iter()
        .enumerate()
        .map(|(r, rel)| json!({"name": rel.name, "arity": rel.arity(), "tuples": p.instance.tuples(r).len()}))
        .collect();
    writeln!(text, "{} domains, {} relations, {} tuples", p.domains.len(), relations.len(), p.instance.len()).unwrap();
    for md in &p.sigma {
        writeln!(text, "  {md}").unwrap();
    }
    let mut rows = Vec::new();
    let mut axioms = Vec::new();
    let mut all_hold = true;
    for (name, report) in p.axiom_reports()? {
        let verdict = |holds: bool| if holds { "ok" } else { "FAILS" };
        all_hold &= report.semilattice_ok();
        rows.push(vec![
            name.clone(),
            verdict(report.idempotency.holds).into(),
            verdict(report.commutativity.holds).into(),
            verdict(report.associativity.holds).into(),
            verdict(report.similarity_preservation.holds).into(),
        ]);
        axioms.push(json!({
            "domain": name,
            "idempotency": report.idempotency.holds,
            "commutativity": report.commutativity.holds,
            "associativity": report.associativity.holds,
            "similarity_preservation": report.similarity_preservation.holds,
        }));
    }
    text.push_str(&table::render(&["domain", "I", "C", "A", "similarity-preserving"], &rows));
    let pre = check_unique_clean_preconditions(&p.sigma, &p.schema)?;
    writeln!(
        text,
        "interaction-free: {}; similarity-preserving: {}; unique clean instance guaranteed: {}",
        pre.interaction_free,
        pre.similarity_preserving,
        pre.guarantees_unique()
    )
    .unwrap();
    if !pre.non_preserving_domains.is_empty() {
        writeln!(text, "non-preserving domains: {}", pre.non_preserving_domains.join(", ")).unwrap();
    }
    let json = json!({
        "relations": relations,
        "mds": p.sigma.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "axioms": axioms,
        "interaction_free": pre.interaction_free,
        "similarity_preserving": pre.similarity_preserving,
        "non_preserving_domains": pre.non_preserving_domains,
        "unique_clean_instance": pre.guarantees_unique(),
    });
    Ok(Report { text, json, code: if all_hold { 0 } else { EXIT_CHECK_FAILED } })
}

fn clean(p: &Project, policy: &ChasePolicy) -> mdclean::Result<Report> {
    let trace = chase(&p.instance, &p.sigma, policy)?;
    let mut text = format!("{} steps\n", trace.steps.len());
    for step in &trace.steps {
        writeln!(text, "  {step}").unwrap();
    }
    text.push_str(&table::instance(&trace.result));
    let json = json!({
        "steps": trace.steps.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "data": instance_to_json(&trace.result),
    });
    Ok(Report::ok(text, json))
}

fn enumerate(p: &Project, limit: usize) -> mdclean::Result<Report> {
    let e = enumerate_clean(&p.instance, &p.sigma, limit)?;
    let mut text = String::new();
    for (k, d) in e.instances.iter().enumerate() {
        writeln!(text, "clean instance {}", k + 1).unwrap();
        text.push_str(&table::instance(d));
    }
    writeln!(text, "{} clean instances, {} states explored", e.instances.len(), e.explored).unwrap();
    if e.truncated {
        text.push_str("enumeration incomplete\n");
    }
    let json = json!({
        "instances": e.instances.iter().map(instance_to_json).collect::<Vec<_>>(),
        "truncated": e.truncated,
    });
    Ok(Report { text, json, code: if e.truncated { EXIT_TRUNCATED } else { 0 } })
}

fn answer(p: &Project, name: &str, limit: usize) -> mdclean::Result<Report> {
    let q = p.query(name)?;
    let a = clean_answer(q, &p.instance, &p.sigma, limit)?;
    let text = format!("certain\n{}possible\n{}", table::instance(&a.cert), table::instance(&a.poss));
    let json = json!({"certain": instance_to_json(&a.cert), "possible": instance_to_json(&a.poss)});
    Ok(Report::ok(text, json))
}

fn approx(p: &Project, name: Option<&str>) -> mdclean::Result<Report> {
    let down = under_clean(&p.instance, &p.sigma)?;
    let up = over_clean(&p.instance, &p.sigma)?;
    let mut text = format!("under-clean\n{}over-clean\n{}", table::instance(&down), table::instance(&up));
    let mut json = json!({"under": instance_to_json(&down), "over": instance_to_json(&up)});
    if let Some(name) = name {
        let q = p.query(name)?;
        let (lower, upper) = (eval(q, &down)?, eval(q, &up)?);
        if !is_monotone_syntax(q) {
            text.push_str("query is not monotone; the bounds need not hold\n");
        }
        write!(text, "lower answer\n{}upper answer\n{}", table::instance(&lower), table::instance(&upper)).unwrap();
        json["monotone"] = is_monotone_syntax(q).into();
        json["lower"] = instance_to_json(&lower);
        json["upper"] = instance_to_json(&upper);
    }
    Ok(Report::ok(text, json))
}

fn relaxed(p: &Project, name: &str) -> mdclean::Result<Report> {
    let q: Query = relax(p.query(name)?);
    Ok(Report::ok(format!("{q}\n"), json!({"query": q.to_string()})))
}

fn swoosh(p: &Project, relation: Option<&str>) -> mdclean::Result<Report> {
    let rel = match relation {
        Some(name) => p
            .schema
            .relation(name)
            .ok_or_else(|| Error::Contract(format!("unknown relation `{name}`")))?,
        None => match p.schema.relations() {
            [only] => only,
            _ => return Err(Error::Contract("the project has several relations; pass --relation".into())),
        },
    };
    let um = UnionMerge::from_relation(rel)?;
    let sigma = md_reconstruction(&p.schema, &rel.name)?;
    let clean = chase(&p.instance, &sigma, &ChasePolicy::MdOrder)?.result;
    let resolved = um.entity_resolve(&records_of(&p.instance, &rel.name)?)?;
    let report = correspondence_check(&um, &clean, &rel.name, &resolved)?;
    let mut text = format!("{} dependencies reconstructed\nclean instance\n", sigma.len());
    text.push_str(&table::instance(&clean));
    text.push_str("resolved records\n");
    for r in &resolved {
        writeln!(text, "  {r}").unwrap();
    }
    let dominated = |held: bool| if held { "holds" } else { "FAILS" };
    writeln!(text, "every resolved record is a clean tuple: {}", dominated(report.part_a())).unwrap();
    writeln!(text, "every clean tuple is dominated by a resolved record: {}", dominated(report.part_b())).unwrap();
    let clean_records = clean
        .relation(&rel.name)
        .unwrap_or_default()
        .iter()
        .map(|t| record_of(t).map(|r| r.to_string()))
        .collect::<mdclean::Result<Vec<_>>>()?;
    let json = json!({
        "clean": instance_to_json(&clean),
        "clean_records": clean_records,
        "resolved": resolved.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "unmatched_records": report.unmatched_records.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "undominated_tuples": report.undominated_tuples.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "passed": report.passed(),
    });
    Ok(Report { text, json, code: if report.passed() { 0 } else { EXIT_CHECK_FAILED } })
}

fn gen3sat(formula: &Path, encoding: Encoding, output: Option<&Path>) -> mdclean::Result<Report> {
    let text = std::fs::read_to_string(formula).map_err(|e| Error::Io(format!("{}: {e}", formula.display())))?;
    let f = CnfFormula::from_dimacs(&text)?;
    let encoding = match encoding {
        Encoding::PerLiteral => SatEncoding::PerLiteral,
        Encoding::PerClause => SatEncoding::PerClause,
    };
    let project = gen3sat_json(&f, encoding);
    let rendered = serde_json::to_string_pretty(&project).expect("project serializes") + "\n";
    match output {
        Some(path) => {
            std::fs::write(path, &rendered).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let summary = format!("{} clauses, {} tuples written to {}\n", f.clauses.len(), 4 * f.clauses.len(), path.display());
            Ok(Report::ok(summary, project))
        }
        None => Ok(Report::ok(rendered, project)),
    }
}
