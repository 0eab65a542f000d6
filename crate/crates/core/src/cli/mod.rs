//! Command-line surface. `run` parses arguments, dispatches and returns the
//! exit code together with the rendered output, so that the binary and the
//! tests share one code path.

use crate::classsets::eichler_mass;
use crate::core_algebra::arith::{is_squarefree, prime_divisors, Int};
use crate::embeddings::local::local_numbers;
use crate::embeddings::{CMSet, Torsor};
use crate::error::{Error, Result};
use crate::orders::{eichler_order, Catalog};
use crate::quad::QuadOrder;
use crate::specialize::equidist::{equidistribution_stats, EquiCase};
use crate::specialize::{run_phi, sample_discs, Case, Ctx, AnyCmSet};
use clap::{Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "heegner", about = "Oriented Eichler orders, CM points and their specialization")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Maximal-order catalog replacing the bundled one.
    #[arg(long, global = true)]
    pub catalog: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Class set of oriented Eichler orders (definite D).
    Pic {
        #[arg(long = "D")]
        d: u64,
        #[arg(long = "N", default_value_t = 1)]
        n: u64,
    },
    /// CM set of an imaginary quadratic order.
    Cm {
        #[arg(long = "D")]
        d: u64,
        #[arg(long = "N", default_value_t = 1)]
        n: u64,
        #[arg(long = "dK", allow_hyphen_values = true)]
        dk: i64,
        #[arg(long = "c", default_value_t = 1)]
        c: u64,
    },
    /// Specialization map table with its bijectivity and equivariance checks.
    Specialize {
        #[arg(long)]
        case: String,
        #[arg(long = "D")]
        d: u64,
        #[arg(long = "N", default_value_t = 1)]
        n: u64,
        #[arg(long)]
        p: u64,
        #[arg(long = "dK", allow_hyphen_values = true)]
        dk: i64,
        #[arg(long = "c", default_value_t = 1)]
        c: u64,
    },
    /// Invariant suites: mass, counting, phi or all.
    Check {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 60)]
        bound: u64,
    },
    /// Distribution of specialized points over target classes.
    Equidist {
        #[arg(long = "D")]
        d: u64,
        #[arg(long = "N", default_value_t = 1)]
        n: u64,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "singular")]
        case: String,
        #[arg(long, default_value_t = 1000)]
        dmax: u64,
    },
}

/// Integers that fit in 64 bits as JSON numbers, larger ones as strings.
pub fn int_json(x: &Int) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn quad_order(dk: i64, c: u64) -> Result<QuadOrder> {
    QuadOrder::new(dk, c)
}

fn is_definite(d: u64) -> bool {
    prime_divisors(d).len() % 2 == 1
}

/// Definite (D, N) with D N <= bound, N squarefree and coprime to D.
pub fn definite_pairs(bound: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for d in 2..=bound {
        if !is_squarefree(d) || !is_definite(d) {
            continue;
        }
        for n in 1..=bound / d {
            if is_squarefree(n) && n.gcd(&d) == 1 {
                out.push((d, n));
            }
        }
    }
    out
}

fn cmd_pic(d: u64, n: u64, ctx: &Ctx) -> Result<Value> {
    if !is_definite(d) {
        return Err(Error::Precondition(format!("indefinite: Pic trivial for D = {d}")));
    }
    let cs = ctx.class_set(d, n)?;
    let mass = eichler_mass(d, n);
    let computed = cs.computed_mass();
    let reps: Vec<Value> = cs
        .reps
        .iter()
        .enumerate()
        .map(|(k, r)| {
            json!({
                "class": k,
                "basis": r.order.order.basis.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                "units": r.units,
            })
        })
        .collect();
    Ok(json!({
        "command": "pic",
        "d": d,
        "n": n,
        "classes": cs.reps.len(),
        "mass": mass.to_string(),
        "computed_mass": computed.to_string(),
        "mass_check": if mass == computed { "ok" } else { "failed" },
        "representatives": reps,
    }))
}

fn cm_points_json(cm: &CMSet) -> Vec<Value> {
    cm.points
        .iter()
        .enumerate()
        .map(|(i, p)| json!({"point": i, "class": p.class, "key": p.key.iter().map(int_json).collect::<Vec<_>>()}))
        .collect()
}

fn cmd_cm(d: u64, n: u64, dk: i64, c: u64, ctx: &Ctx) -> Result<Value> {
    let r = quad_order(dk, c)?;
    let o = eichler_order(d, n, &ctx.cat)?;
    let local = local_numbers(&o.order, &r)?;
    let h = r.class_number();
    let expected = local.iter().fold(h, |a, (_, m)| a * *m as usize);
    let local_json: Vec<Value> = local.iter().map(|(p, m)| json!({"p": p, "m_p": m})).collect();
    let (len, points) = if o.alg().is_definite() {
        let cm = ctx.cm_set(d, n, &r)?;
        (cm.len(), cm_points_json(&cm))
    } else if expected == 0 {
        (0, vec![])
    } else {
        let t = Torsor::new(d, n, &r, &ctx.cat, 8)?;
        let pts = (0..t.len())
            .map(|i| {
                let (m, f) = t.coords(i);
                json!({"point": i, "w": m, "form": [f.a, f.b, f.c]})
            })
            .collect();
        (t.len(), pts)
    };
    Ok(json!({
        "command": "cm",
        "d": d,
        "n": n,
        "disc": r.disc,
        "h": h,
        "local": local_json,
        "formula": expected,
        "cardinality": len,
        "formula_check": if len == expected { "ok" } else { "failed" },
        "points": points,
    }))
}

fn cmd_specialize(case: &str, d: u64, n: u64, p: u64, dk: i64, c: u64, ctx: &Ctx) -> Result<Value> {
    let case = Case::parse(case)?;
    let r = quad_order(dk, c)?;
    let rep = run_phi(case, d, n, p, &r, ctx)?;
    let tgt = AnyCmSet::new(rep.target_d, rep.target_n, &r, ctx)?;
    let src = AnyCmSet::new(d, n, &r, ctx)?;
    let point_coords = |set: &AnyCmSet, i: usize| match set {
        AnyCmSet::Torsor(tor) => {
            let (m, f) = tor.coords(i);
            json!({"w": m, "form": [f.a, f.b, f.c]})
        }
        AnyCmSet::Definite(cm) => {
            json!({"class": cm.points[i].class, "key": cm.points[i].key.iter().map(int_json).collect::<Vec<_>>()})
        }
    };
    let rows: Vec<Value> = rep
        .images
        .iter()
        .enumerate()
        .map(|(i, (copy, t))| {
            json!({
                "source": i,
                "source_coords": point_coords(&src, i),
                "copy": copy,
                "target_point": t,
                "target_class": tgt.point_class(*t),
                "target_coords": point_coords(&tgt, *t),
            })
        })
        .collect();
    Ok(json!({
        "command": "specialize",
        "case": case.name(),
        "d": d,
        "n": n,
        "p": p,
        "disc": r.disc,
        "target": {"d": rep.target_d, "n": rep.target_n, "copies": rep.copies, "cardinality": rep.target_len},
        "source_cardinality": rep.source_len,
        "rows": rows,
        "bijection": rep.bijective,
        "pic_equivariant": rep.pic_equivariant,
        "w_equivariant": rep.w_equivariant,
        "wp_swaps_copies": rep.wp_swaps,
        "triangle": rep.triangle,
        "al_square": rep.al_square,
        "failures": rep.failures,
    }))
}

fn check_row(check: &str, input: Value, pass: bool, detail: Value) -> Value {
    json!({"check": check, "input": input, "pass": pass, "detail": detail})
}

fn suite_mass(bound: u64, ctx: &Ctx, rows: &mut Vec<Value>) -> Result<()> {
    for (d, n) in definite_pairs(bound) {
        let cs = ctx.class_set(d, n)?;
        let ok = cs.computed_mass() == eichler_mass(d, n);
        rows.push(check_row("mass", json!({"d": d, "n": n}), ok, json!({"classes": cs.reps.len()})));
    }
    Ok(())
}

fn suite_counting(bound: u64, ctx: &Ctx, rows: &mut Vec<Value>) -> Result<()> {
    for (d, n) in definite_pairs(bound) {
        let o = eichler_order(d, n, &ctx.cat)?;
        let mut taken = 0;
        for a in 3..=200i64 {
            if taken == 2 {
                break;
            }
            if !crate::quad::is_fundamental(-a) {
                continue;
            }
            let r = QuadOrder::new(-a, 1)?;
            let local = local_numbers(&o.order, &r)?;
            let expected = local.iter().fold(r.class_number(), |s, (_, m)| s * *m as usize);
            if expected == 0 {
                continue;
            }
            taken += 1;
            let got = ctx.cm_set(d, n, &r)?.len();
            rows.push(check_row(
                "counting",
                json!({"d": d, "n": n, "disc": -a}),
                got == expected,
                json!({"enumerated": got, "formula": expected}),
            ));
        }
    }
    Ok(())
}

fn suite_phi(bound: u64, ctx: &Ctx, rows: &mut Vec<Value>) -> Result<()> {
    let configs = [
        (Case::CdSingular, 6, 1, 2),
        (Case::CdSingular, 6, 1, 3),
        (Case::CdSingular, 10, 1, 2),
        (Case::CdSmooth, 6, 1, 3),
        (Case::CdSmooth, 10, 1, 5),
        (Case::GoodSs, 1, 1, 2),
        (Case::GoodSs, 1, 1, 3),
        (Case::DrSingular, 1, 2, 2),
        (Case::DrSingular, 1, 3, 3),
        (Case::DrSmooth, 2, 5, 5),
    ];
    for (case, d, n, p) in configs {
        let (td, tn, _) = case.target(d, n, p);
        if td * tn > bound || d * n > bound {
            continue;
        }
        for disc in sample_discs(case, d, n, p, 1, 200) {
            let r = QuadOrder::new(disc, 1)?;
            let rep = run_phi(case, d, n, p, &r, ctx)?;
            rows.push(check_row(
                case.name(),
                json!({"d": d, "n": n, "p": p, "disc": disc}),
                rep.ok(),
                json!({"failures": rep.failures, "source": rep.source_len, "target": rep.target_len}),
            ));
        }
    }
    Ok(())
}

fn cmd_check(suite: &str, bound: u64, ctx: &Ctx) -> Result<Value> {
    let mut rows = Vec::new();
    match suite {
        "mass" => suite_mass(bound, ctx, &mut rows)?,
        "counting" => suite_counting(bound, ctx, &mut rows)?,
        "phi" => suite_phi(bound, ctx, &mut rows)?,
        "all" => {
            suite_mass(bound, ctx, &mut rows)?;
            suite_counting(bound, ctx, &mut rows)?;
            suite_phi(bound, ctx, &mut rows)?;
        }
        _ => return Err(Error::Domain(format!("unknown suite {suite}"))),
    }
    let failures = rows.iter().filter(|r| r["pass"] == json!(false)).count();
    Ok(json!({"command": "check", "suite": suite, "bound": bound, "checks": rows.len(), "failures": failures, "ledger": rows}))
}

fn cmd_equidist(d: u64, n: u64, p: u64, case: &str, dmax: u64, ctx: &Ctx) -> Result<Value> {
    let case = match case {
        "singular" => EquiCase::Singular,
        "components" => EquiCase::Components,
        _ => return Err(Error::Domain(format!("unknown equidistribution case {case}"))),
    };
    let rep = equidistribution_stats(d, n, p, case, dmax, ctx)?;
    let mut v = serde_json::to_value(&rep).map_err(|e| Error::Invariant(e.to_string()))?;
    v["command"] = json!("equidist");
    v["trend"] = json!(rep.tv_upper < rep.tv_lower);
    Ok(v)
}

/// Rows of the CSV projection of a command's JSON output.
fn csv_rows(v: &Value) -> (Vec<String>, Vec<Vec<String>>) {
    let cell = |x: &Value| match x {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let table = ["rows", "ledger", "points", "representatives"]
        .iter()
        .find_map(|k| v.get(*k).and_then(|t| t.as_array()).cloned());
    let Some(items) = table else {
        let obj = v.as_object().cloned().unwrap_or_default();
        return (obj.keys().cloned().collect(), vec![obj.values().map(cell).collect()]);
    };
    let header: Vec<String> = items
        .first()
        .and_then(|r| r.as_object())
        .map(|o| o.keys().cloned().collect())
        .unwrap_or_default();
    let rows = items
        .iter()
        .map(|r| header.iter().map(|h| cell(&r[h.as_str()])).collect())
        .collect();
    (header, rows)
}

fn render_csv(v: &Value) -> Result<String> {
    let (header, rows) = csv_rows(v);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Invariant(e.to_string());
    w.write_record(&header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

/// Fiber graph of a specialization table: source points pointing at the
/// oriented classes of their images.
fn render_dot(v: &Value) -> Result<String> {
    let rows = v
        .get("rows")
        .and_then(|r| r.as_array())
        .ok_or_else(|| Error::Precondition("dot output is only available for specialize".into()))?;
    let mut s = String::from("digraph fibers {\n");
    let mut classes = std::collections::BTreeSet::new();
    for r in rows {
        classes.insert((r["copy"].as_u64().unwrap_or(0), r["target_class"].as_u64().unwrap_or(0)));
    }
    for (c, k) in &classes {
        s.push_str(&format!("  \"copy{c}_class{k}\" [shape=box];\n"));
    }
    for r in rows {
        s.push_str(&format!(
            "  \"src{}\" -> \"copy{}_class{}\" [label=\"{}\"];\n",
            r["source"], r["copy"], r["target_class"], r["target_point"]
        ));
    }
    s.push_str("}\n");
    Ok(s)
}

fn dispatch(cli: &Cli) -> Result<Value> {
    let cat = match &cli.catalog {
        Some(path) => Catalog::from_path(path)?,
        None => Catalog::default(),
    };
    let ctx = Ctx::new(cat);
    match &cli.cmd {
        Command::Pic { d, n } => cmd_pic(*d, *n, &ctx),
        Command::Cm { d, n, dk, c } => cmd_cm(*d, *n, *dk, *c, &ctx),
        Command::Specialize { case, d, n, p, dk, c } => cmd_specialize(case, *d, *n, *p, *dk, *c, &ctx),
        Command::Check { suite, bound } => cmd_check(suite, *bound, &ctx),
        Command::Equidist { d, n, p, case, dmax } => cmd_equidist(*d, *n, *p, case, *dmax, &ctx),
    }
}

/// Whether a successful report recorded a failed invariant.
fn has_failures(v: &Value) -> bool {
    let nonempty = |k: &str| v.get(k).and_then(|f| f.as_array()).map_or(false, |a| !a.is_empty());
    nonempty("failures")
        || v.get("failures").and_then(|f| f.as_u64()).map_or(false, |k| k > 0)
        || v.get("mass_check") == Some(&json!("failed"))
        || v.get("formula_check") == Some(&json!("failed"))
}

/// Run with the given arguments (program name first). Returns the exit
/// code and the rendered output.
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    let (code, value) = match dispatch(&cli) {
        Ok(v) => (if has_failures(&v) { 3 } else { 0 }, v),
        Err(e) => (e.exit_code(), json!({"error": {"kind": e.kind(), "message": e.to_string()}})),
    };
    let text = match cli.format {
        Format::Json => Ok(serde_json::to_string_pretty(&value).expect("serializable") + "\n"),
        Format::Csv => render_csv(&value),
        Format::Dot => render_dot(&value),
    };
    match text {
        Ok(t) => (code, t),
        Err(e) => (e.exit_code(), format!("{e}\n")),
    }
}

/// Entry point of the binary: run and write to --out or stdout.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let out_path = {
        let mut it = args.iter();
        let mut path = None;
        while let Some(a) = it.next() {
            if a == "--out" {
                path = it.next().cloned();
            } else if let Some(p) = a.strip_prefix("--out=") {
                path = Some(p.to_string());
            }
        }
        path
    };
    let (code, text) = run(args);
    match out_path {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, &text) {
                eprintln!("cannot write {p}: {e}");
                return 2;
            }
        }
        None => print!("{text}"),
    }
    code
}
