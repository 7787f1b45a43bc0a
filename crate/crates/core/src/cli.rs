//! Command-line front end: one subcommand per capability, flags validated
//! before any computation, JSON config files mirroring the flags (flags
//! override the file), and stable help text per subcommand.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use crate::coverage::{
    coverage_threshold, grid_oracle_max, jm_cover_time, last_covered_point, Field,
    GrowthConfiguration, InstanceDump, LastCoveredQuery,
};
use crate::geom::Window;
use crate::limits::{
    c_d, c_dk, c_prime_d, chiu_f, chiu_gap, limit_cdf, omega, ModelSpec, TheoremId,
};
use crate::montecarlo::{
    jm_spbm_equivalence_test, persist, run_cover_time_experiment, scaling_lemma_test, Engine,
    ExperimentConfig, ExperimentModel,
};
use crate::processes::{
    sample_halo, sample_marked_poisson, sample_spacetime_poisson, RadiusLaw, RngSpec,
};
use crate::tessellation::{assign_cells, render, CellMode};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const SUBCOMMANDS: [&str; 11] = [
    "constants",
    "limit-cdf",
    "simulate-jm",
    "simulate-spbm",
    "threshold",
    "cover-time",
    "experiment",
    "scaling-test",
    "equivalence-test",
    "chiu-check",
    "tessellate",
];

/// Parse argv and run. Returns the process exit code.
pub fn dispatch(args: &[String]) -> i32 {
    match run(args) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            2
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn domain<T, E: std::fmt::Display>(e: E) -> Result<T, CliError> {
    Err(CliError::Domain(e.to_string()))
}

/// Run a parsed invocation, returning the one-line summary for stdout.
pub fn run(args: &[String]) -> Result<String, CliError> {
    let Some(sub) = args.first() else {
        return usage(top_level_help());
    };
    if sub == "--help" || sub == "-h" || sub == "help" {
        return usage(top_level_help());
    }
    if !SUBCOMMANDS.contains(&sub.as_str()) {
        return usage(format!("unknown subcommand {sub:?}\n\n{}", top_level_help()));
    }
    let mut flags = Flags::parse(sub, &args[1..])?;
    if flags.take_bool("help")? {
        return usage(help_text(sub));
    }
    if let Some(threads) = flags.take_u64("threads")? {
        // Best effort: the global pool can be initialized only once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads as usize).build_global();
    }
    let summary = match sub.as_str() {
        "constants" => cmd_constants(&mut flags)?,
        "limit-cdf" => cmd_limit_cdf(&mut flags)?,
        "simulate-jm" => cmd_simulate_jm(&mut flags)?,
        "simulate-spbm" => cmd_simulate_spbm(&mut flags)?,
        "threshold" => cmd_threshold(&mut flags)?,
        "cover-time" => cmd_cover_time(&mut flags)?,
        "experiment" => cmd_experiment(&mut flags)?,
        "scaling-test" => cmd_scaling_test(&mut flags)?,
        "equivalence-test" => cmd_equivalence_test(&mut flags)?,
        "chiu-check" => cmd_chiu_check(&mut flags)?,
        "tessellate" => cmd_tessellate(&mut flags)?,
        _ => unreachable!(),
    };
    flags.finish()?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Flag parsing: `--key value` or `--key=value`, merged over a JSON config
// file, every consumed value validated at parse time.

struct Flags {
    sub: String,
    values: BTreeMap<String, String>,
    bools: BTreeMap<String, bool>,
}

impl Flags {
    fn parse(sub: &str, args: &[String]) -> Result<Flags, CliError> {
        let mut values = BTreeMap::new();
        let mut bools = BTreeMap::new();
        let mut i = 0;
        while i < args.len() {
            let a = &args[i];
            let Some(stripped) = a.strip_prefix("--") else {
                return usage(format!("unexpected argument {a:?}\n\n{}", help_text(sub)));
            };
            if let Some((k, v)) = stripped.split_once('=') {
                values.insert(k.to_string(), v.to_string());
                i += 1;
                continue;
            }
            // Boolean flags take no value; everything else takes one.
            if matches!(stripped, "help" | "unrestricted" | "star") {
                bools.insert(stripped.to_string(), true);
                i += 1;
                continue;
            }
            let Some(v) = args.get(i + 1) else {
                return usage(format!("flag --{stripped} needs a value\n\n{}", help_text(sub)));
            };
            values.insert(stripped.to_string(), v.clone());
            i += 2;
        }
        let mut flags = Flags { sub: sub.to_string(), values, bools };
        // Config file first, so explicit flags override it.
        if let Some(path) = flags.values.remove("config") {
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read config {path:?}: {e}")))?;
            let json: serde_json::Value = serde_json::from_str(&raw)
                .map_err(|e| CliError::Usage(format!("bad config JSON: {e}")))?;
            let Some(obj) = json.as_object() else {
                return usage("config file must hold a JSON object");
            };
            for (k, v) in obj {
                if flags.values.contains_key(k) || flags.bools.contains_key(k) {
                    continue;
                }
                match v {
                    serde_json::Value::Bool(b) => {
                        flags.bools.insert(k.clone(), *b);
                    }
                    serde_json::Value::String(s) => {
                        flags.values.insert(k.clone(), s.clone());
                    }
                    other => {
                        flags.values.insert(k.clone(), other.to_string());
                    }
                }
            }
        }
        Ok(flags)
    }

    fn take_bool(&mut self, key: &str) -> Result<bool, CliError> {
        Ok(self.bools.remove(key).unwrap_or(false))
    }

    fn take_str(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("--{key} expects a number, got {v:?}"))),
        }
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("--{key} expects an integer, got {v:?}"))),
        }
    }

    fn need_f64(&mut self, key: &str) -> Result<f64, CliError> {
        self.take_f64(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{key}\n\n{}", help_text(&self.sub))))
    }

    fn need_u64(&mut self, key: &str) -> Result<u64, CliError> {
        self.take_u64(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{key}\n\n{}", help_text(&self.sub))))
    }

    fn take_window(&mut self) -> Result<Option<Window>, CliError> {
        let Some(spec) = self.values.remove("window") else {
            return Ok(None);
        };
        parse_window(&spec).map(Some)
    }

    fn need_window(&mut self) -> Result<Window, CliError> {
        self.take_window()?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --window\n\n{}", help_text(&self.sub))))
    }

    fn take_law(&mut self) -> Result<Option<RadiusLaw>, CliError> {
        match self.values.remove("law") {
            None => Ok(None),
            Some(s) => RadiusLaw::parse(&s).map(Some).map_err(|e| CliError::Usage(e.to_string())),
        }
    }

    fn take_out(&mut self) -> Option<PathBuf> {
        self.values.remove("out").map(PathBuf::from)
    }

    fn take_format(&mut self) -> Result<OutputFormat, CliError> {
        match self.values.remove("format").as_deref() {
            None | Some("csv") => Ok(OutputFormat::Csv),
            Some("json") => Ok(OutputFormat::Json),
            Some(other) => usage(format!("--format must be csv or json, got {other:?}")),
        }
    }

    /// All flags must have been consumed; leftovers are usage errors.
    fn finish(self) -> Result<(), CliError> {
        if let Some(k) = self.values.keys().chain(self.bools.keys()).next() {
            return usage(format!("unknown flag --{k}\n\n{}", help_text(&self.sub)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum OutputFormat {
    Csv,
    Json,
}

fn parse_window(spec: &str) -> Result<Window, CliError> {
    let trimmed = spec.trim();
    if trimmed.starts_with('{') {
        return serde_json::from_str::<Window>(trimmed)
            .map_err(|e| CliError::Usage(format!("bad window JSON: {e}")));
    }
    if trimmed == "square" || trimmed == "unit-square" {
        return Ok(Window::unit_square());
    }
    if let Some(r) = trimmed.strip_prefix("disc:") {
        let r: f64 = r
            .parse()
            .map_err(|_| CliError::Usage(format!("bad disc radius {r:?}")))?;
        return Window::disc([0.0, 0.0], r).map_err(|e| CliError::Usage(e.to_string()));
    }
    if let Some(sides) = trimmed.strip_prefix("box:") {
        let sides: Vec<f64> = sides
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("bad box sides {sides:?}")))?;
        let d = sides.len();
        return Window::rect_box(d, sides).map_err(|e| CliError::Usage(e.to_string()));
    }
    usage(format!(
        "--window expects square | disc:<radius> | box:<sides,...> | inline JSON, got {trimmed:?}"
    ))
}

fn write_or_print(out: Option<PathBuf>, content: &str, what: &str) -> Result<String, CliError> {
    match out {
        Some(path) => {
            std::fs::write(&path, content).map_err(|e| {
                CliError::Domain(format!("cannot write {}: {e}", path.display()))
            })?;
            Ok(format!("{what} written to {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(format!("{what} written to stdout"))
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommand handlers.

fn cmd_constants(flags: &mut Flags) -> Result<String, CliError> {
    let d = flags.need_u64("d")? as u32;
    let k = flags.take_u64("k")?.unwrap_or(1) as u32;
    if d == 0 || k == 0 {
        return usage("--d and --k must be positive");
    }
    let cdk = if d >= 2 { Some(c_dk(d, k).map_err(|e| CliError::Domain(e.to_string()))?) } else { None };
    let cpd = if d >= 2 { Some(c_prime_d(d).map_err(|e| CliError::Domain(e.to_string()))?) } else { None };
    let json = serde_json::json!({
        "d": d,
        "k": k,
        "omega_d": omega(d),
        "c_d": c_d(d),
        "c_dk": cdk,
        "c_prime_d": cpd,
    });
    let content = serde_json::to_string_pretty(&json).expect("serializable") + "\n";
    write_or_print(flags.take_out(), &content, "constants")
}

fn parse_beta_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return usage(format!("--beta-grid expects lo:hi:step, got {spec:?}"));
    };
    let (lo, hi, step): (f64, f64, f64) = (
        lo.parse().map_err(|_| CliError::Usage(format!("bad grid start {lo:?}")))?,
        hi.parse().map_err(|_| CliError::Usage(format!("bad grid end {hi:?}")))?,
        step.parse().map_err(|_| CliError::Usage(format!("bad grid step {step:?}")))?,
    );
    if step <= 0.0 || hi < lo {
        return usage("--beta-grid needs step > 0 and hi >= lo");
    }
    let n = ((hi - lo) / step).round() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

fn cmd_limit_cdf(flags: &mut Flags) -> Result<String, CliError> {
    let theorem = flags
        .take_str("theorem")
        .ok_or_else(|| CliError::Usage(format!("missing required flag --theorem\n\n{}", help_text("limit-cdf"))))?;
    let Some(id) = TheoremId::parse(&theorem) else {
        let labels: Vec<&str> = TheoremId::ALL.iter().map(|t| t.label()).collect();
        return usage(format!("unknown theorem id {theorem:?}; known: {}", labels.join(", ")));
    };
    let d = flags.take_u64("d")?.unwrap_or(2) as u32;
    let k = flags.take_u64("k")?.unwrap_or(1) as u32;
    let area = flags.take_f64("area")?.unwrap_or(1.0);
    let perimeter = flags.take_f64("perimeter")?.unwrap_or(4.0);
    let law = flags.take_law()?;
    let grid = parse_beta_grid(&flags.take_str("beta-grid").unwrap_or_else(|| "-5:15:0.1".into()))?;
    let spec = ModelSpec::new(d, k, area, perimeter, law);
    let law = limit_cdf(id, &spec).map_err(|e| CliError::Domain(e.to_string()))?;
    let format = flags.take_format()?;
    let mut content = String::new();
    match format {
        OutputFormat::Csv => {
            content.push_str("beta,F\n");
            for b in &grid {
                let _ = writeln!(content, "{b},{:.17e}", law.cdf(*b));
            }
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> =
                grid.iter().map(|b| serde_json::json!({"beta": b, "F": law.cdf(*b)})).collect();
            content = serde_json::to_string_pretty(&rows).expect("serializable") + "\n";
        }
    }
    write_or_print(flags.take_out(), &content, &format!("limit CDF {id} over {} betas", grid.len()))
}

fn cmd_simulate_jm(flags: &mut Flags) -> Result<String, CliError> {
    let window = flags.need_window()?;
    let rho = flags.need_f64("rho")?;
    let t = flags.need_f64("t")?;
    let seed = flags.need_u64("seed")?;
    let stream = flags.take_u64("stream")?.unwrap_or(0);
    let unrestricted = flags.take_bool("unrestricted")?;
    let spec = RngSpec::new(seed, stream);
    let sample = if unrestricted {
        sample_halo(&window, rho, t, &spec)
    } else {
        sample_spacetime_poisson(&window, rho, t, &spec)
    }
    .map_err(|e| CliError::Domain(e.to_string()))?;
    let n = sample.len();
    match flags.take_out() {
        Some(path) => {
            sample
                .write_csv_with_sidecar(&path, &spec)
                .map_err(|e| CliError::Domain(e.to_string()))?;
            Ok(format!("{n} seeds written to {}", path.display()))
        }
        None => {
            print!("{}", sample.to_csv());
            Ok(format!("{n} seeds written to stdout"))
        }
    }
}

fn cmd_simulate_spbm(flags: &mut Flags) -> Result<String, CliError> {
    let window = flags.need_window()?;
    let n = flags.need_f64("n")?;
    let law = flags
        .take_law()?
        .ok_or_else(|| CliError::Usage(format!("missing required flag --law\n\n{}", help_text("simulate-spbm"))))?;
    let seed = flags.need_u64("seed")?;
    let stream = flags.take_u64("stream")?.unwrap_or(0);
    let spec = RngSpec::new(seed, stream);
    let sample =
        sample_marked_poisson(&window, n, &law, &spec).map_err(|e| CliError::Domain(e.to_string()))?;
    let count = sample.len();
    match flags.take_out() {
        Some(path) => {
            sample
                .write_csv_with_sidecar(&path, &spec)
                .map_err(|e| CliError::Domain(e.to_string()))?;
            Ok(format!("{count} marked points written to {}", path.display()))
        }
        None => {
            print!("{}", sample.to_csv());
            Ok(format!("{count} marked points written to stdout"))
        }
    }
}

fn parse_oracle(flags: &mut Flags) -> Result<Option<f64>, CliError> {
    match flags.take_str("oracle").as_deref() {
        None | Some("off") => Ok(None),
        Some(s) => {
            let Some(h) = s.strip_prefix("grid:") else {
                return usage(format!("--oracle expects off or grid:<h>, got {s:?}"));
            };
            let h: f64 =
                h.parse().map_err(|_| CliError::Usage(format!("bad oracle spacing {h:?}")))?;
            if h <= 0.0 {
                return usage("--oracle grid spacing must be positive");
            }
            Ok(Some(h))
        }
    }
}

fn cmd_threshold(flags: &mut Flags) -> Result<String, CliError> {
    let window = flags.need_window()?;
    let n = flags.need_f64("n")?;
    let law = flags
        .take_law()?
        .ok_or_else(|| CliError::Usage(format!("missing required flag --law\n\n{}", help_text("threshold"))))?;
    let k = flags.take_u64("k")?.unwrap_or(1) as u32;
    let seed = flags.need_u64("seed")?;
    let stream = flags.take_u64("stream")?.unwrap_or(0);
    let tol = flags.take_f64("tol")?.unwrap_or(1e-7 * window.diameter());
    let oracle = parse_oracle(flags)?;
    let spec = RngSpec::new(seed, stream);
    let pts =
        sample_marked_poisson(&window, n, &law, &spec).map_err(|e| CliError::Domain(e.to_string()))?;
    let r = coverage_threshold(&window, &pts, k, tol).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut summary = format!("threshold R = {:.9} ({} points, sandwich {})", r.value, pts.len(), if r.sandwich_ok { "ok" } else { "VIOLATED" });
    if let Some(h) = oracle {
        let iv = grid_oracle_max(&Field::Spbm { pts: &pts, k }, &window, h)
            .map_err(|e| CliError::Domain(e.to_string()))?;
        let consistent = r.value >= iv.lower - tol && r.value <= iv.upper + tol;
        let _ = write!(
            summary,
            "; oracle [{:.9}, {:.9}] {}",
            iv.lower,
            iv.upper,
            if consistent { "consistent" } else { "INCONSISTENT" }
        );
    }
    if let Some(path) = flags.take_out() {
        let disks_verdict = crate::coverage::is_k_covered(
            &window,
            &pts.points
                .iter()
                .zip(&pts.marks)
                .map(|(p, y)| crate::geom::Disk::new(*p, r.value * y))
                .collect::<Vec<_>>(),
            k,
            crate::geom::DEFAULT_GEOM_TOL * window.diameter(),
        )
        .map_err(|e| CliError::Domain(e.to_string()))?;
        let dump = InstanceDump {
            window,
            points: pts.points.clone(),
            marks: pts.marks.clone(),
            k,
            tol,
            witness: disks_verdict.witness,
            verdict: disks_verdict,
        };
        std::fs::write(&path, dump.to_json())
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?;
        let _ = write!(summary, "; instance dump at {}", path.display());
    }
    Ok(summary)
}

fn cmd_cover_time(flags: &mut Flags) -> Result<String, CliError> {
    let window = flags.need_window()?;
    let rho = flags.need_f64("rho")?;
    let seed = flags.need_u64("seed")?;
    let stream = flags.take_u64("stream")?.unwrap_or(0);
    let tol = flags.take_f64("tol")?.unwrap_or(1e-7 * window.diameter());
    let unrestricted = flags.take_bool("unrestricted")?;
    let oracle = parse_oracle(flags)?;
    let spec = RngSpec::new(seed, stream);
    // Start from a generous horizon and extend the same realization until
    // the cover time fits inside it.
    let mut t_max = window.diameter() * 0.5;
    let mut seeds = if unrestricted {
        sample_halo(&window, rho, t_max, &spec)
    } else {
        sample_spacetime_poisson(&window, rho, t_max, &spec)
    }
    .map_err(|e| CliError::Domain(e.to_string()))?;
    let mut attempt = 0u64;
    let result = loop {
        let g = GrowthConfiguration::new(seeds.clone(), !unrestricted, Some(t_max));
        match jm_cover_time(&window, &g, tol) {
            Ok(r) => break (r, g),
            Err(crate::coverage::CoverageError::InsufficientHalo { .. }) if attempt < 40 => {
                attempt += 1;
                let t_new = 2.0 * t_max;
                let ext = if unrestricted {
                    crate::processes::sample_halo_shell(
                        &window,
                        rho,
                        t_max,
                        t_new,
                        &spec.substream(attempt),
                    )
                } else {
                    let mut e = sample_spacetime_poisson(
                        &window,
                        rho,
                        t_new - t_max,
                        &spec.substream(attempt),
                    )
                    .map_err(|e| CliError::Domain(e.to_string()))?;
                    for m in &mut e.marks {
                        *m += t_max;
                    }
                    Ok(e)
                }
                .map_err(|e| CliError::Domain(e.to_string()))?;
                seeds.points.extend(ext.points);
                seeds.marks.extend(ext.marks);
                t_max = t_new;
            }
            Err(e) => return domain(e),
        }
    };
    let (r, g) = result;
    let mut summary = format!(
        "cover time T = {:.9} ({} seeds, {}, sandwich {})",
        r.value,
        g.seeds.len(),
        if unrestricted { "unrestricted" } else { "restricted" },
        if r.sandwich_ok { "ok" } else { "VIOLATED" }
    );
    if let Some(h) = oracle {
        let iv = grid_oracle_max(&Field::Jm(&g), &window, h)
            .map_err(|e| CliError::Domain(e.to_string()))?;
        let consistent = r.value >= iv.lower - tol && r.value <= iv.upper + tol;
        let _ = write!(
            summary,
            "; oracle [{:.9}, {:.9}] {}",
            iv.lower,
            iv.upper,
            if consistent { "consistent" } else { "INCONSISTENT" }
        );
    }
    if let Some(path) = flags.take_out() {
        let (argmax, xi) = last_covered_point(&window, &LastCoveredQuery::Jm(&g), tol)
            .map_err(|e| CliError::Domain(e.to_string()))?;
        let json = serde_json::json!({
            "cover_time": r.value,
            "last_covered_point": [argmax.x(), argmax.y()],
            "xi_at_argmax": xi,
            "seeds": g.seeds.len(),
            "restricted": !unrestricted,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&json).expect("serializable"))
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?;
        let _ = write!(summary, "; details at {}", path.display());
    }
    Ok(summary)
}

fn cmd_experiment(flags: &mut Flags) -> Result<String, CliError> {
    let model = match flags.take_str("model").as_deref() {
        Some("jm_restricted") | None => ExperimentModel::JmRestricted,
        Some("jm_unrestricted") => ExperimentModel::JmUnrestricted,
        Some("spbm_restricted") => ExperimentModel::SpbmRestricted,
        Some("spbm_unrestricted") => ExperimentModel::SpbmUnrestricted,
        Some(other) => {
            return usage(format!(
                "--model must be one of jm_restricted, jm_unrestricted, spbm_restricted, spbm_unrestricted; got {other:?}"
            ))
        }
    };
    let window = flags.take_window()?.unwrap_or_else(Window::unit_square);
    let scales: Vec<f64> = flags
        .take_str("scales")
        .unwrap_or_else(|| "100,1000".into())
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage("bad --scales list".into()))?;
    let k = flags.take_u64("k")?.unwrap_or(1) as u32;
    let law = flags.take_law()?;
    let replications = flags.take_u64("reps")?.unwrap_or(200);
    let master_seed = flags.take_u64("seed")?.unwrap_or(0);
    let tol = flags.take_f64("tol")?.unwrap_or(1e-7 * window.diameter());
    let engine = match parse_oracle(flags)? {
        Some(h) => Engine::Grid { h },
        None => Engine::Exact,
    };
    let cfg = ExperimentConfig {
        model,
        window,
        scales,
        k,
        law,
        replications,
        master_seed,
        tol,
        engine,
    };
    let summaries = run_cover_time_experiment(&cfg).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut summary = String::new();
    for s in &summaries {
        let ks: Vec<String> =
            s.ks_to_limit.iter().map(|(l, v)| format!("{l}: {v:.4}")).collect();
        let _ = writeln!(
            summary,
            "scale {:>10}: {} reps, KS {{{}}} [{:.1}s]",
            s.scale,
            s.rows.len(),
            ks.join(", "),
            s.wall_seconds
        );
    }
    if let Some(path) = flags.take_out() {
        persist(&summaries, &cfg, &path).map_err(|e| CliError::Domain(e.to_string()))?;
        let _ = write!(summary, "persisted to {}", path.display());
    } else {
        summary.pop();
    }
    Ok(summary)
}

fn cmd_scaling_test(flags: &mut Flags) -> Result<String, CliError> {
    let l = flags.take_f64("l")?.unwrap_or(3.0);
    let window = flags.take_window()?.unwrap_or_else(Window::unit_square);
    let reps = flags.take_u64("reps")?.unwrap_or(2000);
    let seed = flags.take_u64("seed")?.unwrap_or(0);
    if l <= 1.0 {
        return usage("--l must exceed 1");
    }
    let r = scaling_lemma_test(l, &window, reps, &RngSpec::new(seed, 0))
        .map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(format!(
        "scaling check at L = {}: two-sample KS = {:.5} vs 1% critical {:.5} -> {}",
        r.l,
        r.ks,
        r.critical_value_1pct,
        if r.pass { "consistent" } else { "REJECTED" }
    ))
}

fn cmd_equivalence_test(flags: &mut Flags) -> Result<String, CliError> {
    let rho = flags.need_f64("rho")?;
    let t = flags.need_f64("t")?;
    let window = flags.take_window()?.unwrap_or_else(Window::unit_square);
    let reps = flags.take_u64("reps")?.unwrap_or(2000);
    let seed = flags.take_u64("seed")?.unwrap_or(0);
    let r = jm_spbm_equivalence_test(rho, t, &window, reps, &RngSpec::new(seed, 0))
        .map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(format!(
        "growth vs uniform-radius coverage at (rho={rho}, t={t}): {:.4} vs {:.4}, z = {:.2} -> {}",
        r.p_growth,
        r.p_boolean,
        r.z_score,
        if r.pass { "consistent" } else { "REJECTED" }
    ))
}

fn cmd_chiu_check(flags: &mut Flags) -> Result<String, CliError> {
    let d = flags.take_u64("d")?.unwrap_or(2) as u32;
    let us: Vec<f64> = flags
        .take_str("u")
        .unwrap_or_else(|| "-2,0,2".into())
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage("bad --u list".into()))?;
    let ls: Vec<f64> = flags
        .take_str("l-grid")
        .unwrap_or_else(|| "1e3,1e4,1e6,1e8".into())
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage("bad --l-grid list".into()))?;
    let mut content = String::from("d,u,L,gap,F\n");
    let mut all_shrink = true;
    for &u in &us {
        let mut prev: Option<f64> = None;
        for &l in &ls {
            let gap = chiu_gap(l, u, d).map_err(|e| CliError::Domain(e.to_string()))?;
            if let Some(p) = prev {
                all_shrink &= gap.abs() < p;
            }
            prev = Some(gap.abs());
            let _ = writeln!(content, "{d},{u},{l},{gap:.12e},{:.12}", chiu_f(u, d));
        }
    }
    let out_note = write_or_print(flags.take_out(), &content, "consistency table")?;
    Ok(format!(
        "{out_note}; gaps {} along the dilation grid",
        if all_shrink { "shrink" } else { "DO NOT shrink" }
    ))
}

fn cmd_tessellate(flags: &mut Flags) -> Result<String, CliError> {
    let window = flags.take_window()?.unwrap_or_else(Window::unit_square);
    let mode = match flags.take_str("mode").as_deref() {
        Some("jm") | None => CellMode::Jm,
        Some("spbm") => CellMode::Spbm,
        Some(other) => return usage(format!("--mode must be jm or spbm, got {other:?}")),
    };
    let resolution = flags.take_u64("resolution")?.unwrap_or(512) as usize;
    let seed = flags.take_u64("seed")?.unwrap_or(0);
    let star = flags.take_bool("star")?;
    let spec = RngSpec::new(seed, 0);
    let tol = 1e-7 * window.diameter();
    let (sample, star_point) = match mode {
        CellMode::Jm => {
            let rho = flags.need_f64("rho")?;
            let t = flags.take_f64("t")?;
            // Default horizon: run long enough for full coverage.
            let mut t_max = t.unwrap_or(window.diameter());
            let mut seeds = sample_spacetime_poisson(&window, rho, t_max, &spec)
                .map_err(|e| CliError::Domain(e.to_string()))?;
            let mut g = GrowthConfiguration::new(seeds.clone(), true, Some(t_max));
            let star_point = if star {
                let mut attempt = 0;
                loop {
                    match last_covered_point(&window, &LastCoveredQuery::Jm(&g), tol) {
                        Ok((p, _)) => break Some(p),
                        Err(crate::coverage::CoverageError::InsufficientHalo { .. })
                            if attempt < 20 =>
                        {
                            attempt += 1;
                            let t_new = 2.0 * t_max;
                            let mut e = sample_spacetime_poisson(
                                &window,
                                rho,
                                t_new - t_max,
                                &spec.substream(attempt),
                            )
                            .map_err(|e| CliError::Domain(e.to_string()))?;
                            for m in &mut e.marks {
                                *m += t_max;
                            }
                            seeds.points.extend(e.points);
                            seeds.marks.extend(e.marks);
                            t_max = t_new;
                            g = GrowthConfiguration::new(seeds.clone(), true, Some(t_max));
                        }
                        Err(e) => return domain(e),
                    }
                }
            } else {
                None
            };
            (g.seeds, star_point)
        }
        CellMode::Spbm => {
            let n = flags.need_f64("n")?;
            let law = flags
                .take_law()?
                .ok_or_else(|| CliError::Usage(format!("missing required flag --law\n\n{}", help_text("tessellate"))))?;
            let pts = sample_marked_poisson(&window, n, &law, &spec)
                .map_err(|e| CliError::Domain(e.to_string()))?;
            let star_point = if star {
                Some(
                    last_covered_point(&window, &LastCoveredQuery::Spbm { pts: &pts, k: 1 }, tol)
                        .map_err(|e| CliError::Domain(e.to_string()))?
                        .0,
                )
            } else {
                None
            };
            (pts, star_point)
        }
    };
    let raster = assign_cells(&window, &sample, mode, resolution)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let path = flags.take_out().unwrap_or_else(|| PathBuf::from("tessellation.ppm"));
    render(&raster, &window, &sample, star_point, &path)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(format!(
        "{}x{} raster of {} cells written to {} (+ .svg overlay)",
        raster.width,
        raster.height,
        sample.len(),
        path.display()
    ))
}

// ---------------------------------------------------------------------------
// Help text (golden-file tested; keep wording stable).

fn top_level_help() -> String {
    let mut s = String::from(
        "usage: covertimes <subcommand> [flags]\n\nsubcommands:\n",
    );
    for (name, blurb) in [
        ("constants", "dimensional constants as JSON"),
        ("limit-cdf", "evaluate a limiting CDF on a beta grid"),
        ("simulate-jm", "sample space-time growth seeds"),
        ("simulate-spbm", "sample radius-marked Boolean-model points"),
        ("threshold", "coverage threshold of one sampled instance"),
        ("cover-time", "cover time of one sampled growth instance"),
        ("experiment", "replicated standardized cover-time / threshold ECDFs"),
        ("scaling-test", "two-sample check of the dilation identity"),
        ("equivalence-test", "growth vs uniform-radius coverage probabilities"),
        ("chiu-check", "consistency gaps against the classical cube-window form"),
        ("tessellate", "render cell pictures as PPM + SVG"),
    ] {
        let _ = writeln!(s, "  {name:<17} {blurb}");
    }
    s.push_str("\nrun `covertimes <subcommand> --help` for flags\n");
    s
}

pub fn help_text(sub: &str) -> String {
    let common = "  --threads N          worker threads (default: machine parallelism)\n  --config PATH        JSON file of flag values (flags override it)\n  --help               show this help\n";
    let window_line = "  --window W           square | disc:<radius> | box:<s1,s2[,s3]> | JSON (window units)\n";
    match sub {
        "constants" => format!(
            "usage: covertimes constants --d D [flags]\n\nflags:\n  --d D                dimension (integer >= 1)\n  --k K                coverage multiplicity (integer >= 1, default 1)\n  --out PATH           write JSON here instead of stdout\n{common}"
        ),
        "limit-cdf" => format!(
            "usage: covertimes limit-cdf --theorem ID [flags]\n\nflags:\n  --theorem ID         one of 1228a, ttaulim, 0322b, taulim, Tlim3d, taulim3d, 0128a, 0128b, 0315b\n  --d D                dimension (default 2)\n  --k K                coverage multiplicity (default 1)\n  --area A             window area |A| (area units, default 1)\n  --perimeter P        window perimeter (length units, default 4)\n  --law SPEC           constant:c | uniform:b | exp:rate | pareto:alpha[,xm]\n  --beta-grid LO:HI:STEP  evaluation grid (default -5:15:0.1)\n  --format F           csv | json (default csv)\n  --out PATH           write table here instead of stdout\n{common}"
        ),
        "simulate-jm" => format!(
            "usage: covertimes simulate-jm --window W --rho R --t T --seed S [flags]\n\nflags:\n{window_line}  --rho R              seed arrival intensity (seeds per unit area per unit time)\n  --t T                sampling horizon (time units)\n  --seed S             master seed (64-bit integer)\n  --stream I           stream index (default 0)\n  --unrestricted       sample the halo of the full-space process\n  --out PATH           CSV here (a JSON sidecar lands next to it)\n{common}"
        ),
        "simulate-spbm" => format!(
            "usage: covertimes simulate-spbm --window W --n N --law L --seed S [flags]\n\nflags:\n{window_line}  --n N                point intensity (points per unit area; need not be integer)\n  --law SPEC           constant:c | uniform:b | exp:rate | pareto:alpha[,xm]\n  --seed S             master seed (64-bit integer)\n  --stream I           stream index (default 0)\n  --out PATH           CSV here (a JSON sidecar lands next to it)\n{common}"
        ),
        "threshold" => format!(
            "usage: covertimes threshold --window W --n N --law L --seed S [flags]\n\nflags:\n{window_line}  --n N                point intensity (points per unit area)\n  --law SPEC           constant:c | uniform:b | exp:rate | pareto:alpha[,xm]\n  --k K                coverage multiplicity (default 1)\n  --seed S             master seed (64-bit integer)\n  --stream I           stream index (default 0)\n  --tol T              bisection tolerance (window units, default 1e-7 * diameter)\n  --oracle SPEC        off | grid:<h> certified cross-check (h in window units)\n  --out PATH           write the instance dump JSON here\n{common}"
        ),
        "cover-time" => format!(
            "usage: covertimes cover-time --window W --rho R --seed S [flags]\n\nflags:\n{window_line}  --rho R              seed arrival intensity (seeds per unit area per unit time)\n  --seed S             master seed (64-bit integer)\n  --stream I           stream index (default 0)\n  --tol T              bisection tolerance (window units, default 1e-7 * diameter)\n  --unrestricted       seeds arrive in all of the plane (halo sampling)\n  --oracle SPEC        off | grid:<h> certified cross-check (h in window units)\n  --out PATH           write cover time + last covered point JSON here\n{common}"
        ),
        "experiment" => format!(
            "usage: covertimes experiment [flags]\n\nflags:\n  --model M            jm_restricted | jm_unrestricted | spbm_restricted | spbm_unrestricted\n{window_line}  --scales LIST        comma-separated intensities, increasing (default 100,1000)\n  --k K                coverage multiplicity (default 1)\n  --law SPEC           radius law for Boolean models\n  --reps N             replications per scale (default 200)\n  --seed S             master seed (default 0)\n  --tol T              bisection tolerance (window units, default 1e-7 * diameter)\n  --oracle SPEC        off (exact engine) | grid:<h> (certified grid engine)\n  --out PATH           persist rows CSV + metadata sidecar here\n{common}"
        ),
        "scaling-test" => format!(
            "usage: covertimes scaling-test [flags]\n\nflags:\n  --l L                dilation factor (> 1, default 3)\n{window_line}  --reps N             replications per arm (default 2000)\n  --seed S             master seed (default 0)\n{common}"
        ),
        "equivalence-test" => format!(
            "usage: covertimes equivalence-test --rho R --t T [flags]\n\nflags:\n  --rho R              growth-seed intensity (per unit area per unit time)\n  --t T                observation time (time units)\n{window_line}  --reps N             replications per arm (default 2000)\n  --seed S             master seed (default 0)\n{common}"
        ),
        "chiu-check" => format!(
            "usage: covertimes chiu-check [flags]\n\nflags:\n  --d D                dimension (default 2)\n  --u LIST             standardized levels (default -2,0,2)\n  --l-grid LIST        dilation factors (default 1e3,1e4,1e6,1e8)\n  --out PATH           write the gap table CSV here instead of stdout\n{common}"
        ),
        "tessellate" => format!(
            "usage: covertimes tessellate [flags]\n\nflags:\n  --mode M             jm | spbm (default jm)\n{window_line}  --rho R              growth mode: seed intensity (per unit area per unit time)\n  --t T                growth mode: horizon (default: run to full coverage)\n  --n N                scaled mode: point intensity (per unit area)\n  --law SPEC           scaled mode: radius law\n  --resolution PIX     pixels along the longer side (>= 16, default 512)\n  --seed S             master seed (default 0)\n  --star               mark the last covered point\n  --out PATH           PPM path (default tessellation.ppm; SVG lands next to it)\n{common}"
        ),
        other => format!("no help for {other:?}\n"),
    }
}
