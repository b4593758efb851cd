use std::path::{Path, PathBuf};

use rarity_core::audiostats::{self, CorpusSummary};
use rarity_core::binomtail::{
    self, calibrate_p, exact_tail_parts, BinomialSpec, Calibration, Direction, SweepConfig,
    SweepSeries, TailQuery, ThresholdRatio, FLAGSHIP_K, FLAGSHIP_N, FLAGSHIP_TARGET_LOG10,
};
use rarity_core::spaces::{self, DawSpaceSpec, TableFormat};
use rarity_core::xprec::{LogMagnitude, Precision, XReal};

use crate::args::*;
use crate::output::Lines;
use crate::plot::{sweep_csv, sweep_svg};
use crate::{report, usage, CliError, Context, Output};

/// Fractions with more digits than this are summarized instead of printed.
const EXACT_PRINT_DIGITS: usize = 400;

pub(crate) fn dispatch(command: Command, ctx: &Context) -> Result<Output, CliError> {
    match command {
        Command::Tail(a) => tail(a, ctx),
        Command::Chernoff(a) => chernoff(a, ctx),
        Command::Sweep(a) => sweep(a, ctx),
        Command::Crossover(a) => crossover(a, ctx),
        Command::Calibrate(a) => calibrate(a, ctx),
        Command::Analyze(a) => analyze(a, ctx),
        Command::Noise(a) => noise(a, ctx),
        Command::Montecarlo(a) => monte_carlo(a, ctx),
        Command::Spaces(a) => spaces(a, ctx),
        Command::Report(a) => report::run(a, ctx),
    }
}

fn stdout(text: String) -> Output {
    Output {
        stdout: text,
        stderr: String::new(),
    }
}

fn lines(ctx: &Context) -> Lines {
    Lines::new(&ctx.stamp(), ctx.precision, ctx.digits)
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Upper => "upper",
        Direction::Lower => "lower",
    }
}

fn tail(a: TailArgs, ctx: &Context) -> Result<Output, CliError> {
    let spec = BinomialSpec::parse(a.n, &a.p, ctx.precision).map_err(usage)?;
    let direction = Direction::from(a.direction);
    let exact_p = spec.exact_p();
    let query = TailQuery::new(spec, a.k, direction).map_err(usage)?;
    let value = binomtail::tail(&query)?;
    let mut out = lines(ctx);
    out.kv("n", a.n)
        .kv("K", a.k)
        .kv("p", a.p.trim())
        .kv("direction", direction_name(direction))
        .magnitude("probability", &value);
    if a.exact {
        let ratio = exact_p.ok_or_else(|| {
            CliError::Usage(format!(
                "--exact needs p as a fraction or plain decimal, got {:?}",
                a.p
            ))
        })?;
        let exact = exact_tail_parts(a.n, a.k, direction, ratio)?;
        let num = exact.numer().to_string();
        let den = exact.denom().to_string();
        if num.len() + den.len() <= EXACT_PRINT_DIGITS {
            out.kv("exact", format!("{num}/{den}"));
        } else {
            out.kv("exact_numerator_digits", num.len())
                .kv("exact_denominator_digits", den.len());
        }
        out.kv("exact_probability", exact.to_scientific(ctx.digits));
        let log = exact.log10(ctx.precision)?;
        match log.log10() {
            Some(v) => out.real("exact_log10", v),
            None => out.kv("exact_log10", "-inf"),
        };
    }
    Ok(stdout(out.finish()))
}

fn chernoff(a: ChernoffArgs, ctx: &Context) -> Result<Output, CliError> {
    let spec = BinomialSpec::parse(a.n, &a.p, ctx.precision).map_err(usage)?;
    let direction = Direction::from(a.direction);
    let bound = binomtail::chernoff(&spec, a.k, direction).map_err(usage)?;
    let mut out = lines(ctx);
    out.kv("n", a.n)
        .kv("k", a.k)
        .kv("p", a.p.trim())
        .kv("direction", direction_name(direction))
        .magnitude("bound", &bound);
    if bound.log10().is_some_and(XReal::is_zero) {
        out.kv(
            "note",
            "k/n is on the mode side of p, so the bound is the trivial 1",
        );
    }
    Ok(stdout(out.finish()))
}

/// The flagship calibration, shared by every `--p calibrated`.
pub(crate) fn flagship_calibration(prec: Precision) -> Result<Calibration, CliError> {
    Ok(calibrate_p(
        FLAGSHIP_N,
        FLAGSHIP_K,
        FLAGSHIP_TARGET_LOG10,
        prec,
    )?)
}

fn sweep_config(r: &RangeArgs, ctx: &Context) -> Result<SweepConfig, CliError> {
    let ratio = ThresholdRatio::parse(&r.ratio).map_err(usage)?;
    let p = if r.p.trim() == "calibrated" {
        flagship_calibration(ctx.precision)?.p
    } else {
        binomtail::parse_probability(&r.p, ctx.precision)
            .map_err(usage)?
            .0
    };
    SweepConfig::new(r.n_min, r.n_max, ratio, p).map_err(usage)
}

fn range_lines(out: &mut Lines, r: &RangeArgs, config: &SweepConfig) {
    out.kv("n_min", config.n_min)
        .kv("n_max", config.n_max)
        .kv("ratio", r.ratio.trim())
        .real("p", &config.p)
        .kv("direction", direction_name(r.direction.into()));
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn sweep(a: SweepArgs, ctx: &Context) -> Result<Output, CliError> {
    let config = sweep_config(&a.range, ctx)?;
    let direction = Direction::from(a.range.direction);
    let series = binomtail::sweep(&config, direction)?;
    let csv = sweep_csv(&series);
    if let Some(svg) = &a.svg {
        let title = format!(
            "{} tail, n = {}..{}",
            direction_name(direction),
            config.n_min,
            config.n_max
        );
        write_file(
            svg,
            sweep_svg(&series, &title, Some(-80.0), &ctx.stamp()).as_bytes(),
        )?;
    }
    let Some(path) = &a.out else {
        return Ok(stdout(csv));
    };
    write_file(path, csv.as_bytes())?;
    let mut out = lines(ctx);
    range_lines(&mut out, &a.range, &config);
    out.kv("points", series.len()).kv("csv", path.display());
    if let Some(svg) = &a.svg {
        out.kv("svg", svg.display());
    }
    summary_lines(&mut out, &series);
    Ok(stdout(out.finish()))
}

fn summary_lines(out: &mut Lines, series: &SweepSeries) {
    if let (Some(first), Some(last)) = (series.points.first(), series.points.last()) {
        out.magnitude(&format!("at_n{}", first.0), &first.1);
        if last.0 != first.0 {
            out.magnitude(&format!("at_n{}", last.0), &last.1);
        }
    }
    if let Some((slope, intercept, r2)) = series.linear_fit() {
        out.kv("fit_slope", slope)
            .kv("fit_intercept", intercept)
            .kv("fit_r2", r2);
    }
}

fn crossover(a: CrossoverArgs, ctx: &Context) -> Result<Output, CliError> {
    if !a.threshold.is_finite() {
        return Err(CliError::Usage("--threshold must be finite".into()));
    }
    let config = sweep_config(&a.range, ctx)?;
    let direction = Direction::from(a.range.direction);
    let found = binomtail::crossover(&config, direction, a.threshold)?;
    let mut out = lines(ctx);
    range_lines(&mut out, &a.range, &config);
    out.kv("threshold_log10", a.threshold);
    match found {
        Some(n) => {
            let k = config.ratio.threshold(n, direction);
            let spec = BinomialSpec::new(n, config.p.clone())?;
            let value = binomtail::tail(&TailQuery::new(spec, k, direction)?)?;
            out.kv("crossover", n)
                .kv("K", k)
                .magnitude("probability", &value);
        }
        None => {
            out.kv("crossover", "none");
        }
    }
    Ok(stdout(out.finish()))
}

fn calibrate(a: CalibrateArgs, ctx: &Context) -> Result<Output, CliError> {
    if !a.target.is_finite() {
        return Err(CliError::Usage("--target must be finite".into()));
    }
    let cal = calibrate_p(a.n, a.k, a.target, ctx.precision)?;
    let spec = BinomialSpec::new(a.n, cal.p.clone())?;
    let value = binomtail::tail(&TailQuery::upper(spec, a.k)?)?;
    let mut out = lines(ctx);
    out.kv("n", a.n)
        .kv("K", a.k)
        .kv("target_log10", a.target)
        .real("p", &cal.p)
        .real("bracket_low", &cal.bracket.0)
        .real("bracket_high", &cal.bracket.1)
        .kv("iterations", cal.iterations)
        .kv("residual", cal.residual())
        .magnitude("probability", &value);
    Ok(stdout(out.finish()))
}

fn is_pattern(text: &str) -> bool {
    text.contains(['*', '?', '['])
}

/// Expands glob patterns in sorted order; returns the paths and the
/// patterns that matched nothing.
pub(crate) fn expand_inputs(inputs: &[String]) -> Result<(Vec<PathBuf>, Vec<String>), CliError> {
    let mut paths = Vec::new();
    let mut unmatched = Vec::new();
    for input in inputs {
        if !is_pattern(input) {
            paths.push(PathBuf::from(input));
            continue;
        }
        let found = glob::glob(input)
            .map_err(|e| CliError::Usage(format!("bad pattern {input:?}: {e}")))?
            .filter_map(Result::ok)
            .filter(|p| p.is_file());
        let mut found: Vec<PathBuf> = found.collect();
        found.sort();
        if found.is_empty() {
            unmatched.push(input.clone());
        }
        paths.extend(found);
    }
    Ok((paths, unmatched))
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<(), CliError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--epsilon must be positive, got {epsilon}"
        )))
    }
}

/// Stderr lines naming every input that did not contribute.
pub(crate) fn skipped_lines(summary: Option<&CorpusSummary>, unmatched: &[String]) -> String {
    let mut text = String::new();
    for pattern in unmatched {
        text.push_str(&format!("skipped {pattern}: no file matches\n"));
    }
    for (path, reason) in summary.map(|s| s.skipped.as_slice()).unwrap_or_default() {
        text.push_str(&format!("skipped {}: {reason}\n", path.display()));
    }
    text
}

fn analyze(a: AnalyzeArgs, ctx: &Context) -> Result<Output, CliError> {
    check_epsilon(a.epsilon)?;
    let (paths, unmatched) = expand_inputs(&a.inputs)?;
    if paths.is_empty() {
        return Err(CliError::Runtime(format!(
            "no input files{}",
            if unmatched.is_empty() {
                String::new()
            } else {
                format!(" match {}", unmatched.join(" "))
            }
        )));
    }
    let summary = match audiostats::corpus_summary(&paths, a.epsilon) {
        Ok(s) => s,
        Err(e) => {
            return Err(CliError::Runtime(format!(
                "{}{e}",
                skipped_lines(None, &unmatched)
            )));
        }
    };
    let mut stderr = skipped_lines(Some(&summary), &unmatched);
    stderr.push_str(&format!(
        "# {}\npooled zcr {} (published corpus observation: about 0.05)\npooled proximity_rate {} at epsilon {} (published: about 0.997)\n",
        ctx.stamp(),
        summary.pooled.zcr,
        summary.pooled.proximity_rate,
        a.epsilon
    ));
    let csv = summary.to_csv();
    match &a.out {
        Some(path) => {
            write_file(path, csv.as_bytes())?;
            Ok(Output {
                stdout: String::new(),
                stderr,
            })
        }
        None => Ok(Output {
            stdout: csv,
            stderr,
        }),
    }
}

/// `P(|x - y| < ε)` for independent uniforms on `[-a, a]`.
pub(crate) fn noise_proximity_expectation(epsilon: f64, amplitude: f64) -> f64 {
    let u = (epsilon / (2.0 * amplitude)).min(1.0);
    2.0 * u - u * u
}

fn noise(a: NoiseArgs, ctx: &Context) -> Result<Output, CliError> {
    check_epsilon(a.epsilon)?;
    if !(a.amplitude > 0.0 && a.amplitude <= 1.0) {
        return Err(CliError::Usage(format!(
            "--amplitude must be in (0, 1], got {}",
            a.amplitude
        )));
    }
    let buffer = audiostats::white_noise(a.samples, ctx.seed, a.amplitude).map_err(usage)?;
    let stats = audiostats::signal_stats(&buffer, a.epsilon).map_err(usage)?;
    if let Some(path) = &a.out {
        audiostats::write_wav(&buffer, path, 16)?;
    }
    let mut out = lines(ctx);
    out.kv("algorithm", audiostats::PRNG_ALGORITHM)
        .kv("seed", ctx.seed)
        .kv("samples", a.samples)
        .kv("amplitude", a.amplitude)
        .kv("epsilon", a.epsilon)
        .kv("zcr", stats.zcr)
        .kv("expected_zcr", 0.5)
        .kv("proximity_rate", stats.proximity_rate)
        .kv(
            "expected_proximity_rate",
            noise_proximity_expectation(a.epsilon, a.amplitude),
        );
    if let Some(path) = &a.out {
        out.kv("wav", path.display());
    }
    Ok(stdout(out.finish()))
}

fn monte_carlo(a: MonteCarloArgs, ctx: &Context) -> Result<Output, CliError> {
    let spec = BinomialSpec::parse(a.n, &a.p, ctx.precision).map_err(usage)?;
    let direction = Direction::from(a.direction);
    let p = spec.p().to_f64();
    let query = TailQuery::new(spec, a.k, direction).map_err(usage)?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let result =
        audiostats::monte_carlo_tail(a.n, a.k, p, direction, a.trials, ctx.seed).map_err(usage)?;
    let analytic = binomtail::tail(&query)?;
    let analytic_f64 = 10f64.powf(analytic.log10_f64());
    let mut out = lines(ctx);
    out.kv("algorithm", audiostats::PRNG_ALGORITHM)
        .kv("seed", result.seed)
        .kv("n", a.n)
        .kv("K", a.k)
        .kv("p", a.p.trim())
        .kv("direction", direction_name(direction))
        .kv("trials", result.trials)
        .kv("successes", result.successes)
        .kv("estimate", result.estimate)
        .kv("ci95_low", result.ci_low)
        .kv("ci95_high", result.ci_high)
        .magnitude("analytic", &analytic)
        .kv(
            "analytic_in_ci",
            result.ci_low <= analytic_f64 && analytic_f64 <= result.ci_high,
        );
    Ok(stdout(out.finish()))
}

fn parse_daw(text: &str) -> Result<DawSpaceSpec, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("--daw expects four integers X,N,M,Y, got {text:?}"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let mut v = [0u64; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| bad())?;
    }
    DawSpaceSpec::new(v[0], v[1], v[2], v[3]).map_err(usage)
}

fn spaces(a: SpacesArgs, ctx: &Context) -> Result<Output, CliError> {
    let prec = ctx.precision;
    if let Some(text) = &a.daw {
        let spec = parse_daw(text)?;
        let log10 = spaces::daw_space_log10(&spec, prec)?;
        let mut out = lines(ctx);
        out.kv("x", spec.x)
            .kv("n", spec.n)
            .kv("m", spec.m)
            .kv("y", spec.y)
            .magnitude("projects", &LogMagnitude::from_log10(log10));
        return Ok(stdout(out.finish()));
    }
    let registry = spaces::builtin_scenarios(prec)?;
    let format = TableFormat::from(a.format);
    let mut text = String::new();
    match format {
        TableFormat::Markdown => text.push_str(&format!("<!-- {} -->\n", ctx.stamp())),
        TableFormat::Plain => text.push_str(&format!("# {}\n", ctx.stamp())),
        TableFormat::Csv => {}
    }
    text.push_str(&spaces::render_table(&registry, format, prec)?);
    if a.notes {
        text.push('\n');
        for note in spaces::table_notes(&registry, prec)? {
            let prefix = if format == TableFormat::Markdown {
                "- "
            } else {
                "# "
            };
            text.push_str(&format!("{prefix}{note}\n"));
        }
    }
    Ok(stdout(text))
}
