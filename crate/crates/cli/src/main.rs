//! Batch front-end for the concentration library.
//!
//! Every subcommand reads a JSON input document, runs exact computations,
//! and emits a JSON report embedding the fully resolved configuration and
//! the library version, plus a human-readable table.  With `--out` the
//! JSON goes to that file and the table to stdout; without it the JSON is
//! stdout and the table moves to stderr, so each stream stays parseable.
//!
//! Exit codes: 0 all checks passed, 1 a mathematical check failed,
//! 2 usage or validation error (including exceeded enumeration budgets).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use conc_core::bounds::{
    exp_moment_certificate, kappa, sup_certificate, tail_certificate, ustat_build,
    ustat_certificate, Certificate, StatementKind, TailReport,
};
use conc_core::diff_ops::{difference_tensor_with_budget, OperatorKind, DEFAULT_TENSOR_BUDGET};
use conc_core::efron_stein::{
    alternating_identity, efron_stein_check, higher_order_es, variance_identity, ESReport,
};
use conc_core::error::Error;
use conc_core::hoeffding::{decompose, fourier_walsh, is_degenerate_from};
use conc_core::io::{InputDoc, SmoothDoc};
use conc_core::montecarlo::{sample_exp_moment, Evaluable, MCEstimate, SampleSource};
use conc_core::smooth::{lsi_certificate, sphere_certificate, SmoothNorms};
use conc_core::{FunctionTable, Result};

#[derive(Parser)]
#[command(
    name = "conc",
    version,
    about = "Exact concentration-of-measure toolkit for finite product spaces",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input JSON document.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Write the JSON report here (table then goes to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Tensor / statement order d.
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Statement kind: certify takes exp|tail|sup|ustat, tensor takes an
    /// operator kind (h, h+, h-, v, dd, d, d+, d-), mc-validate takes the
    /// path of a certificate JSON.
    #[arg(long, global = true)]
    statement: Option<String>,

    /// Seed for Monte Carlo subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sample count for Monte Carlo subcommands.
    #[arg(long, global = true)]
    samples: Option<u64>,

    /// Difference-tensor cost budget (tuples times outcomes).
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Residual tolerance for identity checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Orthogonal decomposition into degenerate components.
    Decompose,
    /// Difference-operator hypermatrix norms.
    Tensor,
    /// Norm equalities, variance identities, and variance bounds.
    VerifyIdentities,
    /// Exponential-moment / tail / supremum / U-statistic certificates.
    Certify,
    /// Certificates for smooth functions of continuous measures.
    SmoothCertify,
    /// Sampling validation of a previously emitted certificate.
    McValidate,
    /// Combined decomposition + identities + certificate report.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Tensor => "tensor",
            Command::VerifyIdentities => "verify-identities",
            Command::Certify => "certify",
            Command::SmoothCertify => "smooth-certify",
            Command::McValidate => "mc-validate",
            Command::Report => "report",
        }
    }
}

/// Fully resolved run parameters; defaults are materialized so the report
/// records exactly what was executed.
#[derive(Clone, Serialize)]
struct ResolvedConfig {
    command: &'static str,
    input: Option<String>,
    out: Option<String>,
    order: usize,
    statement: Option<String>,
    seed: u64,
    samples: u64,
    budget: u64,
    tolerance: f64,
    threads: Option<usize>,
}

struct Ctx {
    config: ResolvedConfig,
    /// Whether --order was given explicitly (commands that can derive the
    /// order from the input only do so when it was not).
    order_explicit: bool,
    input_text: Option<String>,
}

impl Ctx {
    fn doc(&self) -> Result<InputDoc> {
        InputDoc::parse(self.text()?)
    }

    fn text(&self) -> Result<&str> {
        self.input_text
            .as_deref()
            .ok_or_else(|| invalid("this command needs --input <file.json>"))
    }

    /// Copy of the config with the effective order and statement filled in,
    /// so reports record what actually ran.
    fn resolved(&self, order: usize, statement: Option<String>) -> ResolvedConfig {
        ResolvedConfig {
            order,
            statement: statement.or_else(|| self.config.statement.clone()),
            ..self.config.clone()
        }
    }
}

fn invalid(reason: impl Into<String>) -> Error {
    Error::InvalidInput {
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// report plumbing
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Report<T: Serialize> {
    version: &'static str,
    /// Wall-clock stamp; the single line of the report allowed to differ
    /// between identical runs.
    timestamp_unix_ms: u128,
    config: ResolvedConfig,
    pass: bool,
    #[serde(flatten)]
    body: T,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// One row of the human-readable table.
fn row(out: &mut String, label: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "  {label:<44} {value}");
}

fn row_check(out: &mut String, label: &str, value: f64, pass: bool) {
    let verdict = if pass { "ok" } else { "FAIL" };
    let _ = writeln!(out, "  {label:<44} {value:>14.6e}  {verdict}");
}

struct Rendered {
    json: String,
    table: String,
    pass: bool,
}

fn render<T: Serialize>(
    config: ResolvedConfig,
    pass: bool,
    body: T,
    table: String,
) -> Result<Rendered> {
    let command = config.command;
    let report = Report {
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix_ms: now_ms(),
        config,
        pass,
        body,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| invalid(format!("report serialization: {e}")))?;
    let mut full = format!("{command} report\n");
    full.push_str(&table);
    let _ = writeln!(
        full,
        "  {:<44} {}",
        "overall",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(Rendered {
        json,
        table: full,
        pass,
    })
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ComponentSummary {
    coords: Vec<usize>,
    l2_norm: f64,
    sup_norm: f64,
}

#[derive(Serialize)]
struct DecomposeBody {
    mean: f64,
    variance: f64,
    degree_profile: Vec<f64>,
    components: Vec<ComponentSummary>,
    reconstruction_residual: f64,
    degeneracy_residual: f64,
    /// Max |<h_S, h_T>| over distinct pairs; `None` when the component
    /// count makes the pairwise sweep too large.
    orthogonality_residual: Option<f64>,
    /// Fourier-Walsh coefficients when every coordinate is a fair sign.
    fourier: Option<Vec<(Vec<usize>, f64)>>,
}

fn run_decompose(ctx: &Ctx) -> Result<Rendered> {
    let f = ctx.doc()?.function()?;
    let dec = decompose(&f)?;
    let tol = ctx.config.tolerance;

    let reconstruction_residual = f.sub(&dec.reconstruct()?)?.sup_norm();
    let mut degeneracy_residual = 0.0_f64;
    let mut components = Vec::with_capacity(dec.n_components());
    for (coords, h) in dec.components() {
        for &i in &coords {
            degeneracy_residual = degeneracy_residual.max(h.cond_expectation(&[i])?.sup_norm());
        }
        components.push(ComponentSummary {
            coords,
            l2_norm: h.lp_norm(2.0)?,
            sup_norm: h.sup_norm(),
        });
    }
    let orthogonality_residual = if dec.n_components() <= 256 {
        let tables: Vec<&FunctionTable> = dec.components().map(|(_, h)| h).collect();
        let mut worst = 0.0_f64;
        for (a, ha) in tables.iter().enumerate() {
            for hb in &tables[a + 1..] {
                worst = worst.max(ha.inner(hb)?.abs());
            }
        }
        Some(worst)
    } else {
        None
    };
    let fourier = match fourier_walsh(&f) {
        Ok(poly) => Some(
            poly.terms()
                .map(|(coords, a)| (coords.to_vec(), a))
                .collect(),
        ),
        Err(Error::NotRademacher { .. }) => None,
        Err(e) => return Err(e),
    };

    let pass = reconstruction_residual <= tol
        && degeneracy_residual <= tol
        && orthogonality_residual.unwrap_or(0.0) <= tol;

    let mut table = String::new();
    row(&mut table, "mean", dec.mean());
    row(&mut table, "variance", f.variance());
    row(&mut table, "components", components.len());
    row_check(
        &mut table,
        "reconstruction residual",
        reconstruction_residual,
        reconstruction_residual <= tol,
    );
    row_check(
        &mut table,
        "degeneracy residual",
        degeneracy_residual,
        degeneracy_residual <= tol,
    );
    if let Some(orth) = orthogonality_residual {
        row_check(&mut table, "orthogonality residual", orth, orth <= tol);
    }
    for (k, mass) in dec.degree_profile().iter().enumerate() {
        row(&mut table, &format!("degree {k} mass"), format!("{mass:.12e}"));
    }

    let body = DecomposeBody {
        mean: dec.mean(),
        variance: f.variance(),
        degree_profile: dec.degree_profile(),
        components,
        reconstruction_residual,
        degeneracy_residual,
        orthogonality_residual,
        fourier,
    };
    render(ctx.config.clone(), pass, body, table)
}

// ---------------------------------------------------------------------------
// tensor
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TensorEntrySummary {
    tuple: Vec<usize>,
    l2_norm: f64,
    sup_norm: f64,
}

#[derive(Serialize)]
struct TensorBody {
    kind: String,
    order: usize,
    hs2_norm: f64,
    hs_sup_norm: f64,
    n_tuples: usize,
    /// Per-tuple norms, included while the tuple count stays printable.
    entries: Option<Vec<TensorEntrySummary>>,
}

fn run_tensor(ctx: &Ctx) -> Result<Rendered> {
    let f = ctx.doc()?.function()?;
    let kind: OperatorKind = ctx.config.statement.as_deref().unwrap_or("h").parse()?;
    let d = ctx.config.order;
    let field = difference_tensor_with_budget(&f, kind, d, ctx.config.budget as u128)?;
    let hs2_norm = field.lp_norm(2.0)?;
    let hs_sup_norm = field.lp_norm(f64::INFINITY)?;
    let n_tuples = field.entries().count();
    let entries = if n_tuples <= 64 {
        let mut list = Vec::with_capacity(n_tuples);
        for (tuple, table) in field.entries() {
            list.push(TensorEntrySummary {
                tuple: tuple.to_vec(),
                l2_norm: table.lp_norm(2.0)?,
                sup_norm: table.sup_norm(),
            });
        }
        Some(list)
    } else {
        None
    };

    let mut table = String::new();
    row(&mut table, "operator kind", kind);
    row(&mut table, "order", d);
    row(&mut table, "||F||_HS,2", format!("{hs2_norm:.12e}"));
    row(&mut table, "||F||_HS,inf", format!("{hs_sup_norm:.12e}"));
    row(&mut table, "coordinate tuples", n_tuples);
    if let Some(list) = &entries {
        for e in list {
            row(
                &mut table,
                &format!("entry {:?}", e.tuple),
                format!("l2 {:.6e}  sup {:.6e}", e.l2_norm, e.sup_norm),
            );
        }
    }

    let body = TensorBody {
        kind: kind.to_string(),
        order: d,
        hs2_norm,
        hs_sup_norm,
        n_tuples,
        entries,
    };
    render(
        ctx.resolved(d, Some(kind.to_string())),
        true,
        body,
        table,
    )
}

// ---------------------------------------------------------------------------
// verify-identities
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckResult {
    name: String,
    /// Residual (for identities) or violated amount (for one-sided bounds);
    /// compared against the tolerance.
    residual: f64,
    pass: bool,
}

#[derive(Serialize)]
struct IdentityBody {
    variance: f64,
    norm_square_values: Vec<(String, f64)>,
    checks: Vec<CheckResult>,
    es_reports: Vec<ESReport>,
}

fn run_verify_identities(ctx: &Ctx) -> Result<Rendered> {
    let f = ctx.doc()?.function()?;
    let tol = ctx.config.tolerance;
    let variance = f.variance();
    let mut checks = Vec::new();

    // The five second-moment quantities that coincide for every f.
    let square = |kind: OperatorKind, factor: f64| -> Result<f64> {
        let norm =
            difference_tensor_with_budget(&f, kind, 1, ctx.config.budget as u128)?.lp_norm(2.0)?;
        Ok(factor * norm * norm)
    };
    let norm_square_values = vec![
        ("E |v f|^2".to_string(), square(OperatorKind::V, 1.0)?),
        ("E |D f|^2".to_string(), square(OperatorKind::DD, 1.0)?),
        ("E |d f|^2".to_string(), square(OperatorKind::DSmall, 1.0)?),
        ("2 E |d+ f|^2".to_string(), square(OperatorKind::DPlus, 2.0)?),
        ("2 E |d- f|^2".to_string(), square(OperatorKind::DMinus, 2.0)?),
    ];
    let lo = norm_square_values
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let hi = norm_square_values
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / hi.abs().max(1.0);
    checks.push(CheckResult {
        name: "second-moment equalities".into(),
        residual: spread,
        pass: spread <= tol,
    });

    for kind in [OperatorKind::V, OperatorKind::DD, OperatorKind::DSmall] {
        let sum: f64 = variance_identity(&f, kind)?.iter().sum();
        let residual = (sum - variance).abs() / variance.abs().max(1.0);
        checks.push(CheckResult {
            name: format!("per-degree variance identity ({kind})"),
            residual,
            pass: residual <= tol,
        });
    }
    for kind in [
        OperatorKind::V,
        OperatorKind::DD,
        OperatorKind::DSmall,
        OperatorKind::DPlus,
        OperatorKind::DMinus,
    ] {
        let alt: f64 = alternating_identity(&f, kind)?.iter().sum();
        let residual = (alt - variance).abs() / variance.abs().max(1.0);
        checks.push(CheckResult {
            name: format!("alternating variance identity ({kind})"),
            residual,
            pass: residual <= tol,
        });
    }

    let mut es_reports = Vec::new();
    for kind in [
        OperatorKind::V,
        OperatorKind::DD,
        OperatorKind::DSmall,
        OperatorKind::DPlus,
        OperatorKind::DMinus,
    ] {
        let report = efron_stein_check(&f, kind)?;
        checks.push(CheckResult {
            name: format!("variance bound, order 1 ({kind})"),
            residual: (-report.gap).max(0.0),
            pass: report.gap >= -tol,
        });
        es_reports.push(report);
        // The order-d bound only applies to functions degenerate from
        // degree d; skip it (rather than fail) when f is not.
        if ctx.config.order > 1 && is_degenerate_from(&f, ctx.config.order)? {
            let report = higher_order_es(&f, ctx.config.order, kind)?;
            checks.push(CheckResult {
                name: format!("variance bound, order {} ({kind})", ctx.config.order),
                residual: (-report.gap).max(0.0),
                pass: report.gap >= -tol,
            });
            es_reports.push(report);
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    let mut table = String::new();
    row(&mut table, "variance", format!("{variance:.12e}"));
    for (name, value) in &norm_square_values {
        row(&mut table, name, format!("{value:.12e}"));
    }
    for c in &checks {
        row_check(&mut table, &c.name, c.residual, c.pass);
    }

    let body = IdentityBody {
        variance,
        norm_square_values,
        checks,
        es_reports,
    };
    render(ctx.config.clone(), pass, body, table)
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CertifyBody {
    certificate: Certificate,
    centered: bool,
    tail_grid: Option<Vec<TailReport>>,
}

fn centered(f: &FunctionTable) -> Result<FunctionTable> {
    Ok(f.add_scalar(-f.mean()))
}

fn certificate_table(table: &mut String, cert: &Certificate) {
    row(table, "statement", format!("{:?}", cert.statement));
    row(table, "order", cert.order);
    row(table, "constant", format!("{:.12e}", cert.constant));
    row(table, "scale", format!("{:.12e}", cert.scale));
    row(table, "rate", format!("{:.12e}", cert.rate));
    for c in &cert.conditions {
        row_check(
            table,
            &format!("condition {} <= {:.4e}", c.name, c.threshold),
            c.lhs,
            c.pass,
        );
    }
    if let Some(exact) = cert.exact_moment {
        row_check(table, "exact exponential moment <= 2", exact, exact <= cert.bound);
    }
    for note in &cert.notes {
        row(table, "note", note);
    }
}

fn run_certify(ctx: &Ctx) -> Result<Rendered> {
    let doc = ctx.doc()?;
    let statement = ctx.config.statement.as_deref().unwrap_or("exp").to_string();
    let mut d = ctx.config.order;

    let (cert, was_centered, tail_grid) = match statement.as_str() {
        "exp" | "tail" => {
            let f = doc.function()?;
            let g = centered(&f)?;
            let cert = exp_moment_certificate(&g, d)?;
            let grid = if statement == "tail" {
                let sup = g.sup_norm();
                let mut grid = Vec::with_capacity(20);
                for j in 1..=20 {
                    grid.push(tail_certificate(&g, d, j as f64 * sup / 20.0)?);
                }
                Some(grid)
            } else {
                None
            };
            (cert, true, grid)
        }
        "sup" => {
            let fs = doc.function_list()?;
            (sup_certificate(&fs, d)?, true, None)
        }
        "ustat" => {
            let kernel = doc.function()?;
            let params = doc
                .ustat
                .ok_or_else(|| invalid("certify --statement ustat needs a `ustat` block"))?;
            let arity = kernel.space().n_coords();
            if ctx.order_explicit && d != arity {
                return Err(invalid(format!(
                    "--order {d} conflicts with the kernel arity {arity}"
                )));
            }
            d = arity;
            (
                ustat_certificate(&kernel, params.n, arity, params.bound)?,
                false,
                None,
            )
        }
        other => {
            return Err(invalid(format!(
                "unknown certify statement `{other}`; expected exp, tail, sup, or ustat"
            )))
        }
    };

    let pass = cert.conditions.iter().all(|c| c.pass)
        && cert.exact_moment.map_or(true, |m| m <= cert.bound);
    let mut table = String::new();
    certificate_table(&mut table, &cert);
    if let Some(grid) = &tail_grid {
        for report in grid {
            row(
                &mut table,
                &format!("tail bound at t = {:.4e}", report.t),
                format!("{:.6e}", report.probability_bound),
            );
        }
    }
    if was_centered {
        row(&mut table, "note", "the function was centered before certification");
    }

    let body = CertifyBody {
        certificate: cert,
        centered: was_centered,
        tail_grid,
    };
    render(ctx.resolved(d, Some(statement)), pass, body, table)
}

// ---------------------------------------------------------------------------
// smooth-certify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SmoothBody {
    certificate: Certificate,
    norms: SmoothNorms,
    sigma2: f64,
}

fn run_smooth_certify(ctx: &Ctx) -> Result<Rendered> {
    let doc = SmoothDoc::parse(ctx.text()?)?;
    let d = if ctx.order_explicit {
        ctx.config.order
    } else if let Some(op2) = &doc.op2 {
        op2.len() + 1
    } else if let Some(poly) = &doc.poly {
        poly.build()?.degree()
    } else {
        ctx.config.order
    };
    let norms = doc.norms(d, ctx.config.samples, ctx.config.seed)?;
    let cert = match doc.sphere {
        Some(n) => sphere_certificate(n, d, &norms)?,
        None => lsi_certificate(&norms, doc.sigma2, d, doc.variant)?,
    };

    let mut table = String::new();
    certificate_table(&mut table, &cert);
    for (k, nv) in (1..d).zip(&norms.op2) {
        row(
            &mut table,
            &format!("||f^({k})||_Op,2"),
            format!("{:.12e} ({:?})", nv.value, nv.provenance),
        );
    }

    let body = SmoothBody {
        certificate: cert,
        norms,
        sigma2: doc.sigma2,
    };
    render(ctx.resolved(d, None), true, body, table)
}

// ---------------------------------------------------------------------------
// mc-validate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct McBody {
    statement: StatementKind,
    order: usize,
    rate: f64,
    bound: f64,
    estimate: MCEstimate,
    /// value - bound - 4 stderr; a pass requires this to be <= 0.
    margin: f64,
    exact_moment: Option<f64>,
}

/// Reports produced by `certify` wrap the certificate in a `certificate`
/// field; accept both that envelope and a bare certificate.
#[derive(serde::Deserialize)]
struct CertificateEnvelope {
    certificate: Certificate,
}

fn read_certificate(path: &str) -> Result<Certificate> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{path}: {e}")))?;
    serde_json::from_str::<CertificateEnvelope>(&text)
        .map(|e| e.certificate)
        .or_else(|_| serde_json::from_str::<Certificate>(&text))
        .map_err(|e| invalid(format!("{path}: not a certificate JSON: {e}")))
}

fn run_mc_validate(ctx: &Ctx) -> Result<Rendered> {
    let cert_path = ctx
        .config
        .statement
        .as_deref()
        .ok_or_else(|| invalid("mc-validate needs --statement <certificate.json>"))?;
    let cert = read_certificate(cert_path)?;
    let doc = ctx.doc()?;
    let exponent = 2.0 / cert.order as f64;
    let (samples, seed) = (ctx.config.samples, ctx.config.seed);

    // Rebuild the certified target from the input document.
    let estimate = match cert.statement {
        StatementKind::ExpMoment => {
            let g = centered(&doc.function()?)?;
            let source = SampleSource::Space(Arc::clone(g.space()));
            sample_exp_moment(&source, &Evaluable::Table(&g), cert.rate, exponent, samples, seed)?
        }
        StatementKind::UStat => {
            let params = doc.ustat.ok_or_else(|| {
                invalid("validating a U-statistic certificate needs a `ustat` block")
            })?;
            let stat = ustat_build(&doc.function()?, params.n)?;
            let source = SampleSource::Space(Arc::clone(stat.space()));
            sample_exp_moment(&source, &Evaluable::Table(&stat), cert.rate, exponent, samples, seed)?
        }
        StatementKind::SupClass => {
            let fs = doc.function_list()?;
            let mut sup_vals: Vec<f64> = fs[0].values().iter().map(|v| v.abs()).collect();
            for f in &fs[1..] {
                for (acc, &v) in sup_vals.iter_mut().zip(f.values()) {
                    *acc = acc.max(v.abs());
                }
            }
            let g = centered(&FunctionTable::from_values(
                Arc::clone(fs[0].space()),
                sup_vals,
            )?)?;
            let source = SampleSource::Space(Arc::clone(g.space()));
            sample_exp_moment(&source, &Evaluable::Table(&g), cert.rate, exponent, samples, seed)?
        }
        StatementKind::Smooth => {
            let poly = doc.polynomial()?;
            let source = SampleSource::Gaussian { dim: poly.n_vars() };
            sample_exp_moment(&source, &Evaluable::Poly(&poly), cert.rate, exponent, samples, seed)?
        }
        StatementKind::Sphere => {
            return Err(Error::UnsupportedKind {
                kind: "sphere".into(),
                reason: "sphere statements have no sampler here; validate externally".into(),
            })
        }
    };

    let margin = estimate.value - cert.bound - 4.0 * estimate.stderr;
    let pass = margin <= 0.0;
    let mut table = String::new();
    row(&mut table, "statement", format!("{:?}", cert.statement));
    row(&mut table, "rate", format!("{:.12e}", cert.rate));
    row(&mut table, "samples", estimate.n_samples);
    row(&mut table, "seed", estimate.seed);
    row(&mut table, "estimated moment", format!("{:.9e}", estimate.value));
    row(&mut table, "standard error", format!("{:.3e}", estimate.stderr));
    if estimate.clamped > 0 {
        row(&mut table, "clamped samples", estimate.clamped);
    }
    if let Some(exact) = cert.exact_moment {
        row(&mut table, "exact moment", format!("{exact:.9e}"));
    }
    row_check(&mut table, "moment <= bound + 4 stderr", estimate.value, pass);

    let body = McBody {
        statement: cert.statement,
        order: cert.order,
        rate: cert.rate,
        bound: cert.bound,
        estimate,
        margin,
        exact_moment: cert.exact_moment,
    };
    render(ctx.resolved(cert.order, None), pass, body, table)
}

// ---------------------------------------------------------------------------
// report (bundle)
// ---------------------------------------------------------------------------

fn run_report(ctx: &Ctx) -> Result<Rendered> {
    let dec = run_decompose(ctx)?;
    let ids = run_verify_identities(ctx)?;
    let cert = run_certify(ctx)?;
    let pass = dec.pass && ids.pass && cert.pass;

    // Nest the section payloads, dropping their per-section envelopes.
    let strip = |r: &Rendered| -> Result<serde_json::Value> {
        let mut v: serde_json::Value = serde_json::from_str(&r.json)
            .map_err(|e| invalid(format!("internal report parse: {e}")))?;
        if let Some(map) = v.as_object_mut() {
            map.remove("version");
            map.remove("timestamp_unix_ms");
            map.remove("config");
        }
        Ok(v)
    };

    #[derive(Serialize)]
    struct BundleBody {
        kappa_limit: f64,
        decompose: serde_json::Value,
        identities: serde_json::Value,
        certificate: serde_json::Value,
    }
    let body = BundleBody {
        kappa_limit: kappa(2.0)?.kappa_limit,
        decompose: strip(&dec)?,
        identities: strip(&ids)?,
        certificate: strip(&cert)?,
    };

    let mut table = String::new();
    table.push_str(&dec.table);
    table.push_str(&ids.table);
    table.push_str(&cert.table);
    render(ctx.config.clone(), pass, body, table)
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

fn configure_threads() -> Result<Option<usize>> {
    match std::env::var("CONC_THREADS") {
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                invalid(format!("CONC_THREADS must be a positive integer, got `{raw}`"))
            })?;
            if n == 0 {
                return Err(invalid("CONC_THREADS must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn exit_for(error: &Error) -> u8 {
    match error {
        Error::ConditionsFailed { .. }
        | Error::BoundViolated { .. }
        | Error::KernelNotDegenerate { .. }
        | Error::KernelBoundExceeded { .. }
        | Error::MeanNotZero { .. }
        | Error::NotDegenerate { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli, threads: Option<usize>) -> Result<bool> {
    let config = ResolvedConfig {
        command: cli.command.name(),
        input: cli.input.as_ref().map(|p| p.display().to_string()),
        out: cli.out.as_ref().map(|p| p.display().to_string()),
        order: cli.order.unwrap_or(1),
        statement: cli.statement.clone(),
        seed: cli.seed.unwrap_or(0),
        samples: cli.samples.unwrap_or(100_000),
        budget: cli.budget.unwrap_or(DEFAULT_TENSOR_BUDGET as u64),
        tolerance: cli.tolerance.unwrap_or(1e-10),
        threads,
    };
    if config.order == 0 {
        return Err(invalid("--order must be at least 1"));
    }
    if !(config.tolerance.is_finite() && config.tolerance >= 0.0) {
        return Err(invalid("--tolerance must be a finite nonnegative real"));
    }
    let input_text = match &cli.input {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let ctx = Ctx {
        config,
        order_explicit: cli.order.is_some(),
        input_text,
    };

    let rendered = match cli.command {
        Command::Decompose => run_decompose(&ctx)?,
        Command::Tensor => run_tensor(&ctx)?,
        Command::VerifyIdentities => run_verify_identities(&ctx)?,
        Command::Certify => run_certify(&ctx)?,
        Command::SmoothCertify => run_smooth_certify(&ctx)?,
        Command::McValidate => run_mc_validate(&ctx)?,
        Command::Report => run_report(&ctx)?,
    };

    match &cli.out {
        Some(path) => {
            std::fs::write(path, rendered.json.as_bytes())
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            print!("{}", rendered.table);
        }
        None => {
            eprint!("{}", rendered.table);
            println!("{}", rendered.json);
        }
    }
    Ok(rendered.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match configure_threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli, threads) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
