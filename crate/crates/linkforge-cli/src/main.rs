//! linkforge: compile, solve, sample, trace and verify linkages from the shell.
//!
//! Exit codes: 0 success, 1 a check or solve failed, 2 bad usage or input.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use linkforge::compiler::{compile_text, BoundsBox, Flavor};
use linkforge::geom::Point;
use linkforge::io::{self, compiled_document, complex_document, export_trace, rebuild, set_document, LinkageDocument, RealizationSet, Rebuilt, TraceFormat};
use linkforge::linkage::{Linkage, VertexId};
use linkforge::numeric::{sample_configs_with, trace, verify_functional, verify_invariance, SolveOptions};
use linkforge::setbuilder::{build_config_cabled, build_semiconfig, rigidify_complex, ComplexRealization, QuasiAlgPresentation};

#[derive(Parser)]
#[command(name = "linkforge", version, about = "Compile polynomial maps and sets into linkages and check them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a polynomial map over balls into a functional linkage document.
    Compile {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 1.0)]
        domain_radius: f64,
        #[arg(long, default_value = "cabled")]
        flavor: Flavor,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find one realization, optionally with the inputs pinned.
    Solve {
        doc: PathBuf,
        /// Input point, coordinates separated by commas; repeat per input.
        #[arg(long = "input")]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 0)]
        sheet: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Sample realizations by random restarts.
    Sample {
        doc: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// json (whole realizations) or csv (parameter vertices only).
        #[arg(long, default_value = "json")]
        format: String,
        #[command(flatten)]
        common: Common,
    },
    /// Outputs of a compiled map along a straight input path.
    Trace {
        doc: PathBuf,
        /// Start tuple: points separated by ';', coordinates by ','.
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        sheet: u64,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Coordinate pair for svg, 0-based.
        #[arg(long, default_value = "0,1")]
        plane: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a document numerically; exit 1 when the check fails.
    Verify {
        doc: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build a linkage for a presented set.
    BuildSet {
        presentation: PathBuf,
        #[arg(long, default_value = "cabled")]
        flavor: Flavor,
        /// Inequality cable length.
        #[arg(long, default_value_t = 1.0)]
        cable: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rigidify a glued simplicial complex given as JSON.
    Rigidify {
        complex: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Check(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(usage)
        }
    }
}

fn print_json(v: &Value) {
    print!("{}", String::from_utf8(io::to_canonical_json(v)).expect("utf8"));
}

fn read_doc(path: &Path) -> Result<LinkageDocument, Failure> {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    io::load(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_point(s: &str, n: usize) -> Result<Point, Failure> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| usage(format!("bad point '{s}'")))?;
    if v.len() != n {
        return Err(usage(format!("point '{s}' needs {n} coordinates")));
    }
    Ok(Point::from_vec(v))
}

fn parse_tuple(s: &str, n: usize) -> Result<Vec<Point>, Failure> {
    s.split(';').map(|p| parse_point(p, n)).collect()
}

fn sheets_value(bits: u32) -> Value {
    if bits < 53 {
        json!(1u64 << bits)
    } else {
        json!(format!("2^{bits}"))
    }
}

fn manifest(l: &Linkage, bits: u32, census: &BTreeMap<String, usize>) -> Value {
    json!({
        "vertices": l.vertex_count(),
        "edges": l.edge_count(),
        "fixed": l.fixed().len(),
        "sheet_bits": bits,
        "sheets": sheets_value(bits),
        "census": census,
    })
}

fn write_doc(doc: &LinkageDocument, out: Option<&Path>, summary: Value) -> Outcome {
    let bytes = io::save(doc);
    match out {
        Some(_) => {
            emit(out, &bytes)?;
            print_json(&summary);
            Ok(())
        }
        None => emit(None, &bytes),
    }
}

fn cmd_compile(n: usize, expr: &str, radius: f64, flavor: Flavor, out: Option<&Path>) -> Outcome {
    let probe = linkforge::compiler::parse_polymap(expr, n, None, None).map_err(usage)?;
    let bounds = BoundsBox::uniform(n, probe.k, radius);
    let c = compile_text(expr, n, &bounds, flavor).map_err(usage)?;
    let doc = compiled_document(&c, expr);
    write_doc(&doc, out, manifest(&c.gadget.linkage, c.gadget.sheet_bits(), &c.gadget.census))
}

fn opts(common: &Common) -> SolveOptions {
    SolveOptions { tol: common.tol.min(SolveOptions::default().tol), seed: common.seed, ..SolveOptions::default() }
}

fn cmd_solve(doc: &LinkageDocument, inputs: &[String], sheet: u64, common: &Common) -> Outcome {
    let l = doc.to_linkage().map_err(usage)?;
    let o = opts(common);
    let phi = if inputs.is_empty() {
        let got = sample_configs_with(&l, &BTreeMap::new(), 1, common.seed, &o, None).map_err(usage)?;
        got.configs.into_iter().next().ok_or_else(|| Failure::Check(got.shortfall.unwrap_or_default()))?
    } else {
        let f = rebuild(doc).map_err(usage)?.functional().ok_or_else(|| usage("--input needs a compiled or set document"))?;
        let x: Vec<Point> = inputs.iter().map(|s| parse_point(s, l.dim())).collect::<Result<_, _>>()?;
        if x.len() != f.inputs.len() {
            return Err(usage(format!("expected {} --input points", f.inputs.len())));
        }
        let pins: BTreeMap<VertexId, Point> = f.inputs.iter().cloned().zip(x.iter().cloned()).collect();
        let guess = f.forward(&x, sheet).ok();
        linkforge::numeric::solve_realization(&l, &pins, guess.as_ref(), &o).map_err(|e| Failure::Check(e.to_string()))?
    };
    eprintln!("max residual {:e}", l.max_residual(&phi).map_err(usage)?);
    emit(common.out.as_deref(), &io::to_canonical_json(&RealizationSet::new(&l, &[phi])))
}

fn cmd_sample(doc: &LinkageDocument, count: usize, format: &str, common: &Common) -> Outcome {
    let l = doc.to_linkage().map_err(usage)?;
    if format != "json" && format != "csv" {
        return Err(usage(format!("unknown sample format '{format}' (json|csv)")));
    }
    let o = opts(common);
    let built = rebuild(doc).map_err(usage)?;
    let (got, params) = match &built {
        Rebuilt::Set(s) => (s.sample(count, common.seed, &o).map_err(usage)?, s.inputs.clone()),
        _ => {
            let params = doc.functional.as_ref().map(|f| f.inputs.iter().map(|&i| VertexId(i)).collect()).unwrap_or_else(|| l.vertices().collect());
            (sample_configs_with(&l, &BTreeMap::new(), count, common.seed, &o, None).map_err(usage)?, params)
        }
    };
    let bytes = if format == "json" {
        io::to_canonical_json(&RealizationSet::new(&l, &got.configs))
    } else {
        let rows: Vec<Vec<Vec<f64>>> =
            got.configs.iter().map(|phi| params.iter().map(|&v| phi.get(v).expect("placed").as_slice().to_vec()).collect()).collect();
        if rows.is_empty() {
            Vec::new()
        } else {
            export_trace(&rows, TraceFormat::Csv, (0, 1)).map_err(usage)?
        }
    };
    emit(common.out.as_deref(), &bytes)?;
    match got.shortfall {
        Some(s) => Err(Failure::Check(s)),
        None => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace(doc: &LinkageDocument, from: &str, to: &str, steps: usize, sheet: u64, format: &str, plane: &str, out: Option<&Path>) -> Outcome {
    let f = rebuild(doc).map_err(usage)?.functional().ok_or_else(|| usage("trace needs a compiled document"))?;
    let fmt: TraceFormat = format.parse().map_err(usage)?;
    let plane: Vec<usize> = plane.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| usage("bad --plane"))?;
    let [a, b] = plane[..] else { return Err(usage("--plane takes two indices")) };
    let (x0, x1) = (parse_tuple(from, doc.dim)?, parse_tuple(to, doc.dim)?);
    if x0.len() != x1.len() || steps == 0 {
        return Err(usage("--from and --to need the same number of points and --steps ≥ 1"));
    }
    let path: Vec<Vec<Point>> = (0..=steps)
        .map(|i| {
            let t = i as f64 / steps as f64;
            x0.iter().zip(&x1).map(|(p, q)| p * (1.0 - t) + q * t).collect()
        })
        .collect();
    let tr = trace(&f, &path, sheet, f64::INFINITY).map_err(usage)?;
    let bytes = export_trace(&tr.outputs, fmt, (a, b)).map_err(usage)?;
    emit(out, &bytes)
}

fn cmd_verify(doc: &LinkageDocument, samples: usize, common: &Common) -> Outcome {
    let l = doc.to_linkage().map_err(usage)?;
    let built = rebuild(doc).map_err(usage)?;
    let (report, pass) = match &built {
        Rebuilt::Function(c) => {
            let map = c.map.clone();
            let r = verify_functional(&c.gadget, &move |x| map.eval(x), samples, common.tol, common.seed);
            let pass = r.pass;
            (serde_json::to_value(&r).expect("report"), pass)
        }
        Rebuilt::Set(s) => {
            let got = s.sample(samples, common.seed, &opts(common)).map_err(usage)?;
            let worst = got
                .configs
                .iter()
                .map(|phi| s.point_of(phi).map(|x| s.presentation.violation(&x)).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            let residual = got.configs.iter().map(|phi| l.max_residual(phi).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            let pass = got.shortfall.is_none() && worst < common.tol && residual < common.tol;
            (json!({"samples": got.configs.len(), "max_violation": worst, "max_residual": residual, "shortfall": got.shortfall, "pass": pass}), pass)
        }
        Rebuilt::Complex(..) | Rebuilt::Plain => {
            let r = verify_invariance(&l, samples, common.tol, common.seed).map_err(usage)?;
            let pass = r.pass;
            (serde_json::to_value(&r).expect("report"), pass)
        }
    };
    emit(common.out.as_deref(), &io::to_canonical_json(&report))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("verification failed".into()))
    }
}

fn cmd_build_set(path: &Path, flavor: Flavor, cable: f64, out: Option<&Path>) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let pres: QuasiAlgPresentation = text.parse().map_err(usage)?;
    let s = match flavor {
        Flavor::Classical => build_semiconfig(&pres),
        Flavor::Cabled => build_config_cabled(&pres, cable, 0),
    }
    .map_err(usage)?;
    let mut summary = manifest(&s.linkage, s.sheet_bits(), &s.compiled.gadget.census);
    summary["inputs"] = json!(s.inputs.iter().map(|v| v.0).collect::<Vec<_>>());
    write_doc(&set_document(&s), out, summary)
}

fn cmd_rigidify(path: &Path, out: Option<&Path>) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let cx: ComplexRealization = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let r = rigidify_complex(&cx).map_err(usage)?;
    let summary = json!({"vertices": r.linkage.vertex_count(), "edges": r.linkage.edge_count()});
    write_doc(&complex_document(&r, &cx), out, summary)
}

fn run(cli: Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Compile { n, expr, domain_radius, flavor, out } => cmd_compile(*n, expr, *domain_radius, *flavor, out.as_deref()),
        Cmd::Solve { doc, inputs, sheet, common } => cmd_solve(&read_doc(doc)?, inputs, *sheet, common),
        Cmd::Sample { doc, count, format, common } => cmd_sample(&read_doc(doc)?, *count, format, common),
        Cmd::Trace { doc, from, to, steps, sheet, format, plane, out } => {
            cmd_trace(&read_doc(doc)?, from, to, *steps, *sheet, format, plane, out.as_deref())
        }
        Cmd::Verify { doc, samples, common } => cmd_verify(&read_doc(doc)?, *samples, common),
        Cmd::BuildSet { presentation, flavor, cable, out } => cmd_build_set(presentation, *flavor, *cable, out.as_deref()),
        Cmd::Rigidify { complex, out } => cmd_rigidify(complex, out.as_deref()),
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("linkforge: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("linkforge: {msg}");
            ExitCode::from(2)
        }
    }
}
