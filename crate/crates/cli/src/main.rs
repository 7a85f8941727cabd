//! `tamelocal`: realize tame towers, list characters, compute adjoint local
//! factors and run the formal-degree and root-number verifications.
//!
//! Exit codes: 0 when every verdict matches expectation, 1 on a mismatch,
//! 2 on a configuration error.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use config::{Config, Format, Settings};
use tamelocal::chars::CharSetup;
use tamelocal::localfactors::{factor_report, FactorReport};
use tamelocal::tamefield::TowerParams;
use tamelocal::verifier::{
    standard_grid, to_csv, verify_decomposition, verify_formal_degree, verify_instance,
    verify_root_number, weil_quotient, CocycleChoice, Instance, Status, SweepReport, TowerCache,
    VerdictReport, VerifyError,
};

#[derive(Parser)]
#[command(
    name = "tamelocal",
    version,
    about = "Adjoint local factors of tame symplectic parameters"
)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Flags {
    /// Config file of key=value lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Residue characteristic of F.
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Residue degree of F over Q_p (default 1).
    #[arg(long, global = true)]
    f0: Option<u64>,
    /// Ramification index of K/F.
    #[arg(long, global = true)]
    e: Option<u64>,
    /// Residue degree of K/F.
    #[arg(long, global = true)]
    f: Option<u64>,
    /// Exponent in ρ^f = δ^m (default 0).
    #[arg(long, global = true)]
    m: Option<u64>,
    /// Depth of θ (default 4).
    #[arg(long, global = true)]
    r: Option<u64>,
    /// Index of θ in the canonical order; all admissible θ when absent.
    #[arg(long, global = true)]
    theta_index: Option<usize>,
    /// trivial, cyclic or random.
    #[arg(long, global = true)]
    cocycle: Option<String>,
    /// Seed for the random cocycle.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// json, csv or pretty.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Directory for cached JSON reports.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Worker threads (default 1).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sweep: comma-separated residue characteristics.
    #[arg(long, global = true)]
    primes: Option<String>,
    /// Sweep: comma-separated values of n.
    #[arg(long, global = true)]
    n_values: Option<String>,
    /// Sweep: comma-separated values of m.
    #[arg(long, global = true)]
    m_values: Option<String>,
}

impl Flags {
    fn settings(&self) -> Result<Settings, String> {
        let list = |k: &str, v: &Option<String>| {
            v.as_deref().map(|v| config::parse_list(k, v)).transpose()
        };
        Ok(Settings {
            p: self.p,
            f0: self.f0,
            e: self.e,
            f: self.f,
            m: self.m,
            r: self.r,
            theta_index: self.theta_index,
            cocycle: self.cocycle.clone(),
            seed: self.seed,
            format: self.format.clone(),
            cache_dir: self.cache_dir.clone(),
            jobs: self.jobs,
            primes: list("primes", &self.primes)?,
            n_values: list("n-values", &self.n_values)?,
            m_values: list("m-values", &self.m_values)?,
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Describe the tower K/F.
    Tower {
        #[command(subcommand)]
        cmd: TowerCmd,
    },
    /// Characters of the tower.
    Chars {
        #[command(subcommand)]
        cmd: CharsCmd,
    },
    /// Local factors.
    Factors {
        #[command(subcommand)]
        cmd: FactorsCmd,
    },
    /// Check one identity on one tower.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Runs both identities over a grid of towers.
    Sweep,
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Galois group, involutions, subfield lattice and `Ū`.
    Describe,
}

#[derive(Subcommand)]
enum CharsCmd {
    /// Admissible θ in canonical order.
    List,
}

#[derive(Subcommand)]
enum FactorsCmd {
    /// Conductor, ε, root number, L and γ of `Ad∘φ`.
    Adjoint,
}

#[derive(Subcommand, Clone, Copy)]
enum VerifyCmd {
    /// Formal degree against the adjoint γ-factor.
    FormalDegree,
    /// Adjoint root number against θ(−1).
    RootNumber,
    /// Conductor and L-factor by pieces against the group-level routes.
    Decomposition,
}

/// A failure that ends the run with a given exit code.
struct Fail(u8, String);

fn config_err(msg: impl Into<String>) -> Fail {
    Fail(2, msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Fail> {
    let mut settings = cli.flags.settings().map_err(config_err)?;
    if let Some(path) = &cli.flags.config {
        settings = settings.over(Settings::from_file(path).map_err(config_err)?);
    }
    let cfg = Config::resolve(settings).map_err(config_err)?;
    let cache = TowerCache::new();
    let out = match &cli.cmd {
        Cmd::Tower {
            cmd: TowerCmd::Describe,
        } => describe(&cfg, &cache)?,
        Cmd::Chars {
            cmd: CharsCmd::List,
        } => list_chars(&cfg, &cache)?,
        Cmd::Factors {
            cmd: FactorsCmd::Adjoint,
        } => factors(&cfg, &cache)?,
        Cmd::Verify { cmd } => return verify(&cfg, &cache, *cmd),
        Cmd::Sweep => return run_sweep(&cfg, &cache),
    };
    emit(&out);
    Ok(0)
}

fn emit(s: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(s.as_bytes());
    if !s.ends_with('\n') {
        let _ = stdout.write_all(b"\n");
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn setup(
    cfg: &Config,
    cache: &TowerCache,
) -> Result<(TowerParams, std::sync::Arc<CharSetup>), Fail> {
    let params = cfg.tower().map_err(config_err)?;
    let s = cache.get(params).map_err(|e| config_err(e.to_string()))?;
    Ok((params, s))
}

/// The selected θ indices: the one given, or all admissible.
fn theta_indices(cfg: &Config, s: &CharSetup) -> Result<Vec<usize>, Fail> {
    let count = s.admissible_thetas().len();
    match cfg.settings.theta_index {
        Some(k) if k >= count => Err(config_err(format!(
            "theta index {k} out of range ({count} admissible)"
        ))),
        Some(k) => Ok(vec![k]),
        None => Ok((0..count).collect()),
    }
}

fn pool(cfg: &Config) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .expect("thread pool")
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

// ---- tower describe ----

#[derive(Serialize)]
struct SubfieldRow {
    tag: String,
    e: u64,
    f: u64,
}

#[derive(Serialize)]
struct TowerDescription {
    params: TowerParams,
    n: u64,
    q: u64,
    gamma_order: u64,
    involution_case: String,
    involutions: Vec<String>,
    tau: String,
    subfields: Vec<SubfieldRow>,
    ubar_invariants: Vec<u64>,
    ubar_order: u64,
    admissible_thetas: usize,
    predicted_thetas: u64,
}

fn describe(cfg: &Config, cache: &TowerCache) -> Result<String, Fail> {
    let (params, s) = setup(cfg, cache)?;
    let t = &s.tower;
    let h = t.gamma.involutions();
    let lattice = t
        .gamma
        .subfield_lattice(t.tau)
        .map_err(|e| config_err(e.to_string()))?;
    let d = TowerDescription {
        params,
        n: params.n(),
        q: params.q(),
        gamma_order: t.gamma.order(),
        involution_case: format!("{:?}", h.case),
        involutions: h.elements.iter().map(ToString::to_string).collect(),
        tau: t.tau.to_string(),
        subfields: lattice
            .iter()
            .map(|i| SubfieldRow {
                tag: i.tag.to_string(),
                e: i.e_over_base,
                f: i.f_over_base,
            })
            .collect(),
        ubar_invariants: s.ubar.invariants().to_vec(),
        ubar_order: s.ubar.order(),
        admissible_thetas: s.admissible_thetas().len(),
        predicted_thetas: s.predicted_theta_count(),
    };
    Ok(match cfg.format {
        Format::Json => to_json(&d),
        Format::Csv => {
            let rows = vec![
                vec!["params".into(), params.to_string()],
                vec!["gamma_order".into(), d.gamma_order.to_string()],
                vec!["involution_case".into(), d.involution_case.clone()],
                vec!["involutions".into(), d.involutions.join(" ")],
                vec!["tau".into(), d.tau.clone()],
                vec![
                    "subfields".into(),
                    d.subfields
                        .iter()
                        .map(|r| format!("{}(e={},f={})", r.tag, r.e, r.f))
                        .collect::<Vec<_>>()
                        .join(" "),
                ],
                vec!["ubar_order".into(), d.ubar_order.to_string()],
                vec!["admissible_thetas".into(), d.admissible_thetas.to_string()],
            ];
            csv_rows(&["key", "value"], &rows)
        }
        Format::Pretty => {
            let mut s = format!("tower {params} (n = {}, q = {})\n", d.n, d.q);
            s += &format!(
                "  |Γ| = {}, τ = {}, involutions {} ({})\n",
                d.gamma_order,
                d.tau,
                d.involutions.join(", "),
                d.involution_case
            );
            for r in &d.subfields {
                s += &format!("  {}: e = {}, f = {}\n", r.tag, r.e, r.f);
            }
            s += &format!(
                "  |Ū| = {} with invariants {:?}\n",
                d.ubar_order, d.ubar_invariants
            );
            s += &format!(
                "  admissible θ: {} (predicted {})",
                d.admissible_thetas, d.predicted_thetas
            );
            s
        }
    })
}

// ---- chars list ----

#[derive(Serialize)]
struct ThetaRow {
    index: usize,
    modulus: u64,
    exps: Vec<u64>,
    theta_minus_one: i64,
    vartheta_minus_one: i64,
    conductor_tilde: usize,
}

fn list_chars(cfg: &Config, cache: &TowerCache) -> Result<String, Fail> {
    let (_, s) = setup(cfg, cache)?;
    let thetas = s.admissible_thetas();
    let rows: Vec<ThetaRow> = theta_indices(cfg, &s)?
        .into_iter()
        .map(|i| {
            let th = &thetas[i];
            let vt = s.vartheta(th);
            ThetaRow {
                index: i,
                modulus: th.modulus,
                exps: th.exps.clone(),
                theta_minus_one: s.sign_at_minus_one(th),
                vartheta_minus_one: s.sign_at_minus_one(&vt),
                conductor_tilde: s.conductor_tilde(&vt),
            }
        })
        .collect();
    Ok(match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => csv_rows(
            &[
                "index",
                "modulus",
                "exps",
                "theta_minus_one",
                "vartheta_minus_one",
                "conductor_tilde",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.index.to_string(),
                        r.modulus.to_string(),
                        r.exps
                            .iter()
                            .map(ToString::to_string)
                            .collect::<Vec<_>>()
                            .join(" "),
                        r.theta_minus_one.to_string(),
                        r.vartheta_minus_one.to_string(),
                        r.conductor_tilde.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Pretty => rows
            .iter()
            .map(|r| {
                format!(
                    "θ[{}] = ζ_{}^{:?}  θ(−1) = {}  ϑ(−1) = {}  f(ϑ̃) = {}",
                    r.index,
                    r.modulus,
                    r.exps,
                    r.theta_minus_one,
                    r.vartheta_minus_one,
                    r.conductor_tilde
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

// ---- factors adjoint ----

#[derive(Serialize)]
struct FactorRow {
    theta_index: usize,
    report: FactorReport,
}

fn factors(cfg: &Config, cache: &TowerCache) -> Result<String, Fail> {
    let (_, s) = setup(cfg, cache)?;
    let idx = theta_indices(cfg, &s)?;
    let g = match weil_quotient(&s, cfg.cocycle) {
        Ok(g) => Some(g),
        Err(VerifyError::QuotientTooLarge { .. }) => None,
        Err(e) => return Err(config_err(e.to_string())),
    };
    let thetas = s.admissible_thetas();
    let rows: Vec<FactorRow> = pool(cfg).install(|| {
        idx.par_iter()
            .map(|&i| {
                let vt = s.vartheta(&thetas[i]);
                factor_report(&s, g.as_ref(), &vt)
                    .map(|report| FactorRow {
                        theta_index: i,
                        report,
                    })
                    .map_err(|e| Fail(1, format!("θ[{i}]: {e}")))
            })
            .collect::<Result<_, _>>()
    })?;
    Ok(match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => csv_rows(
            &[
                "theta_index",
                "a",
                "eps",
                "w",
                "L",
                "gamma_at_0",
                "closed_form_match",
            ],
            &rows
                .iter()
                .map(|r| {
                    let rep = &r.report;
                    vec![
                        r.theta_index.to_string(),
                        rep.a.to_string(),
                        rep.eps.render(),
                        rep.w.render(),
                        rep.l.render(),
                        rep.gamma_at_0.render(),
                        rep.closed_form_match
                            .iter()
                            .map(|(k, v)| format!("{k}={v}"))
                            .collect::<Vec<_>>()
                            .join(" "),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Pretty => rows
            .iter()
            .map(|r| {
                let rep = &r.report;
                let bad: Vec<&String> = rep
                    .closed_form_match
                    .iter()
                    .filter(|(_, v)| !**v)
                    .map(|(k, _)| k)
                    .collect();
                format!(
                    "θ[{}]: a = {}  ε = {}  w = {}  P(T) = {}  γ(0) = {}  closed forms: {}",
                    r.theta_index,
                    rep.a,
                    rep.eps.render(),
                    rep.w.render(),
                    rep.l.render(),
                    rep.gamma_at_0.render(),
                    if bad.is_empty() {
                        "all match".to_string()
                    } else {
                        format!("mismatch in {bad:?}")
                    }
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

// ---- verification ----

fn cocycle_tag(c: CocycleChoice) -> String {
    match c {
        CocycleChoice::Trivial => "trivial".into(),
        CocycleChoice::Cyclic => "cyclic".into(),
        CocycleChoice::Random(s) => format!("random{s}"),
    }
}

/// Runs `f`, reusing a stored report from the cache directory if present.
fn cached(
    cfg: &Config,
    kind: &str,
    inst: &Instance,
    f: impl FnOnce() -> VerdictReport,
) -> VerdictReport {
    let Some(dir) = &cfg.cache_dir else {
        return f();
    };
    let p = &inst.params;
    let name = format!(
        "{kind}-p{}-f0{}-e{}-f{}-m{}-r{}-t{}-{}.json",
        p.p,
        p.f0,
        p.e,
        p.f,
        p.m,
        p.r,
        inst.theta_index,
        cocycle_tag(inst.cocycle)
    );
    let path = dir.join(name);
    if let Some(rep) = std::fs::read_to_string(&path)
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
    {
        return rep;
    }
    let rep = f();
    if rep.status != Status::Error {
        let _ = std::fs::write(&path, to_json(&rep));
    }
    rep
}

fn error_report(inst: &Instance, e: &VerifyError) -> VerdictReport {
    VerdictReport {
        instance: inst.key(),
        checks: Vec::new(),
        status: Status::Error,
        notes: vec![e.to_string()],
    }
}

fn render_reports(cfg: &Config, reports: &[VerdictReport], all: bool) -> String {
    match cfg.format {
        Format::Json => to_json(&SweepReport {
            reports: reports.to_vec(),
            all_as_expected: all,
        }),
        Format::Csv => to_csv(reports).expect("in-memory CSV"),
        Format::Pretty => {
            let mut s = String::new();
            for r in reports {
                let k = r.instance;
                let status = match r.status {
                    Status::AsExpected => "as expected",
                    Status::Mismatch => "MISMATCH",
                    Status::Error => "ERROR",
                };
                s += &format!(
                    "p={} f0={} e={} f={} m={} r={} θ[{}]: {status}\n",
                    k.p, k.f0, k.e, k.f, k.m, k.r, k.theta_index
                );
                for c in &r.checks {
                    let rel = if c.equal { "=" } else { "≠" };
                    let note = if c.expected == c.equal {
                        ""
                    } else {
                        "  (unexpected)"
                    };
                    let pred = if !c.expected && !c.equal {
                        "  (predicted failure)"
                    } else {
                        ""
                    };
                    s += &format!(
                        "  {} [{}]: {} {rel} {}{note}{pred}\n",
                        c.name, c.route, c.lhs, c.rhs
                    );
                }
                for n in &r.notes {
                    s += &format!("  note: {n}\n");
                }
            }
            s += if all {
                "all verdicts as expected"
            } else {
                "some verdicts not as expected"
            };
            s
        }
    }
}

fn verify(cfg: &Config, cache: &TowerCache, cmd: VerifyCmd) -> Result<u8, Fail> {
    let (params, s) = setup(cfg, cache)?;
    let idx = theta_indices(cfg, &s)?;
    let (kind, f): (
        &str,
        fn(&Instance, &TowerCache) -> Result<VerdictReport, VerifyError>,
    ) = match cmd {
        VerifyCmd::FormalDegree => ("formal-degree", verify_formal_degree),
        VerifyCmd::RootNumber => ("root-number", verify_root_number),
        VerifyCmd::Decomposition => ("decomposition", verify_decomposition),
    };
    let reports: Vec<VerdictReport> = pool(cfg).install(|| {
        idx.par_iter()
            .map(|&i| {
                let inst = Instance {
                    params,
                    theta_index: i,
                    cocycle: cfg.cocycle,
                };
                cached(cfg, kind, &inst, || {
                    f(&inst, cache).unwrap_or_else(|e| error_report(&inst, &e))
                })
            })
            .collect()
    });
    let all = reports.iter().all(|r| r.status == Status::AsExpected);
    emit(&render_reports(cfg, &reports, all));
    Ok(u8::from(!all))
}

fn run_sweep(cfg: &Config, cache: &TowerCache) -> Result<u8, Fail> {
    let st = &cfg.settings;
    let f0 = st.f0.unwrap_or(1);
    let fields: Vec<(u64, u64)> = st
        .primes
        .clone()
        .unwrap_or_else(|| vec![3, 5])
        .into_iter()
        .map(|p| (p, f0))
        .collect();
    let ns = st.n_values.clone().unwrap_or_else(|| vec![1, 2]);
    let ms = st.m_values.clone().unwrap_or_else(|| vec![0]);
    let r = st.r.unwrap_or(4);
    let mut grid = standard_grid(&fields, &ns, &ms, r, st.theta_index.unwrap_or(0));
    for inst in &mut grid {
        inst.cocycle = cfg.cocycle;
    }
    let reports: Vec<VerdictReport> = pool(cfg).install(|| {
        grid.par_iter()
            .map(|inst| cached(cfg, "sweep", inst, || verify_instance(inst, cache)))
            .collect()
    });
    let all = reports.iter().all(|r| r.status == Status::AsExpected);
    emit(&render_reports(cfg, &reports, all));
    Ok(u8::from(!all))
}
