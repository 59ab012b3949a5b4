//! The four subcommands: reduce, pcol, bench-quadrature, he-demo.

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use pcol_core::{
    integrate_pcol, mc_pcol_2d, reference_pcol, EncounterGeometry, GeometryError, McConfig,
    QuadratureSpec, Rule,
};
use pcol_pipeline::{
    build_lookup_table, combine_encrypted_shares, eval_integrand_encrypted, integrand_taylor,
    pcol_from_table, pcol_online, pcol_taylor_reference, ApproxConfig, GeometryShares, OpCounter,
    PointInput,
};
use pcol_threshold::Network;

use crate::input::load_conjunction;
use crate::report::{Cell, Format, Table};
use crate::CliError;

pub fn parse_format(s: &str) -> Result<Format, CliError> {
    Format::parse(s).ok_or_else(|| CliError::Usage(format!("unknown format {s:?}")))
}

fn parse_rule(s: &str) -> Result<Rule, CliError> {
    Rule::parse(s).map_err(|e| CliError::Usage(format!("unknown rule {s:?}: {e}")))
}

fn domain_error(e: GeometryError) -> CliError {
    match e {
        GeometryError::ZeroRelativeVelocity { .. } | GeometryError::DegenerateCovariance { .. } => {
            CliError::Domain(e.to_string())
        }
        GeometryError::InvalidObjectState(_) => CliError::Usage(e.to_string()),
    }
}

// ── reduce ────────────────────────────────────────────────────────────────

pub fn cmd_reduce(input: &PathBuf) -> Result<(), CliError> {
    let (s1, s2) = load_conjunction(input)?;
    let geometry = pcol_core::reduce_conjunction(&s1, &s2).map_err(domain_error)?;
    if !pcol_core::is_at_tca(&s1, &s2) {
        eprintln!(
            "warning: rel_position . rel_velocity = {:.3e}; the states do not look like a TCA snapshot",
            pcol_core::tca_defect(&s1, &s2)
        );
    }
    println!("{{");
    println!("  \"combined_radius_m\": {},", geometry.combined_radius);
    println!("  \"sigma_x_m\": {},", geometry.sigma_x);
    println!("  \"sigma_z_m\": {},", geometry.sigma_z);
    println!("  \"rotation_angle_rad\": {},", geometry.rotation_angle);
    println!(
        "  \"miss_vector_m\": [{}, {}],",
        geometry.miss_vector.x, geometry.miss_vector.y
    );
    println!("  \"relative_speed_mps\": {}", geometry.relative_speed);
    println!("}}");
    Ok(())
}

// ── pcol ──────────────────────────────────────────────────────────────────

pub struct PcolArgs {
    pub input: Option<PathBuf>,
    pub r: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_z: Option<f64>,
    pub rule: String,
    pub h_r: f64,
    pub h_phi: f64,
    pub mc: Option<u64>,
    pub reference: bool,
    pub format: String,
    pub seed: u64,
}

fn resolve_geometry(
    input: &Option<PathBuf>,
    r: Option<f64>,
    sigma_x: Option<f64>,
    sigma_z: Option<f64>,
) -> Result<EncounterGeometry, CliError> {
    match input {
        Some(path) => {
            let (s1, s2) = load_conjunction(path)?;
            pcol_core::reduce_conjunction(&s1, &s2).map_err(domain_error)
        }
        None => {
            let (r, sx, sz) = match (r, sigma_x, sigma_z) {
                (Some(r), Some(sx), Some(sz)) => (r, sx, sz),
                _ => {
                    return Err(CliError::Usage(
                        "provide either --input or all of --r, --sigma-x, --sigma-z".into(),
                    ))
                }
            };
            EncounterGeometry::centered(r, sx, sz).map_err(domain_error)
        }
    }
}

pub fn cmd_pcol(args: &PcolArgs) -> Result<(), CliError> {
    let geometry = resolve_geometry(&args.input, args.r, args.sigma_x, args.sigma_z)?;
    let rule = parse_rule(&args.rule)?;
    let spec = QuadratureSpec::new(rule, args.h_r, args.h_phi)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let format = parse_format(&args.format)?;

    let start = Instant::now();
    let (p_col, nodes) =
        integrate_pcol(&geometry, &spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let wall = start.elapsed().as_secs_f64();

    let mut columns = vec![
        "rule",
        "h_r",
        "h_phi",
        "p_col",
        "eval_count",
        "addition_count",
    ];
    let mut row = vec![
        Cell::Text(rule.label()),
        Cell::Number(spec.h_r),
        Cell::Number(spec.h_phi),
        Cell::Number(p_col),
        Cell::Integer(nodes.eval_count as u64),
        Cell::Integer(nodes.addition_count as u64),
    ];
    if args.reference {
        let reference = reference_pcol(&geometry).map_err(|e| CliError::Domain(e.to_string()))?;
        let abs = (p_col - reference).abs();
        columns.extend(["reference", "abs_error", "rel_error_percent"]);
        row.extend([
            Cell::Number(reference),
            Cell::Number(abs),
            Cell::Number(100.0 * abs / reference),
        ]);
    }
    if let Some(samples) = args.mc {
        let cfg = McConfig::new(samples, args.seed, 1.0, 0.1)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let (estimate, stderr) = mc_pcol_2d(&geometry, &cfg);
        columns.extend(["mc_estimate", "mc_stderr"]);
        row.extend([Cell::Number(estimate), Cell::Number(stderr)]);
    }
    columns.push("wall_time_s");
    row.push(Cell::Number(wall));

    let mut table = Table::new(columns);
    table.push(row);
    println!("{}", table.render(format));
    Ok(())
}

// ── bench-quadrature ──────────────────────────────────────────────────────

pub fn cmd_bench_quadrature(
    r: f64,
    sigma_x: f64,
    sigma_z: f64,
    format: &str,
) -> Result<(), CliError> {
    let format = parse_format(format)?;
    let geometry = EncounterGeometry::centered(r, sigma_x, sigma_z).map_err(domain_error)?;
    let reference = reference_pcol(&geometry).map_err(|e| CliError::Domain(e.to_string()))?;

    let rules = [
        Rule::Trapezoid,
        Rule::TrapezoidSimpson,
        Rule::GaussLegendre(2),
        Rule::GaussLegendre(3),
        Rule::GaussLegendre(4),
    ];
    let steps = [0.5, 0.1, 0.05];

    let mut table = Table::new(vec![
        "rule",
        "h_r",
        "h_phi",
        "abs_error",
        "rel_error_percent",
        "wall_time_s",
        "eval_count",
        "addition_count",
    ]);
    for rule in rules {
        for h in steps {
            let spec =
                QuadratureSpec::new(rule, h, h).map_err(|e| CliError::Usage(e.to_string()))?;
            let start = Instant::now();
            let (p, nodes) =
                integrate_pcol(&geometry, &spec).map_err(|e| CliError::Usage(e.to_string()))?;
            let wall = start.elapsed().as_secs_f64();
            let abs = (p - reference).abs();
            table.push(vec![
                Cell::Text(rule.label()),
                Cell::Number(h),
                Cell::Number(h),
                Cell::Number(abs),
                Cell::Number(100.0 * abs / reference),
                Cell::Number(wall),
                Cell::Integer(nodes.eval_count as u64),
                Cell::Integer(nodes.addition_count as u64),
            ]);
        }
    }
    println!("{}", table.render(format));
    Ok(())
}

// ── he-demo ───────────────────────────────────────────────────────────────

pub struct HeDemoArgs {
    pub parties: usize,
    pub mode: String,
    pub rule: String,
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    pub preset: String,
    pub seed: u64,
    pub point: Option<String>,
    pub r: f64,
    pub sigma_x: f64,
    pub sigma_z: f64,
    pub format: String,
}

fn protocol_error(e: pcol_pipeline::PipelineError) -> CliError {
    CliError::Protocol(e.to_string())
}

pub fn cmd_he_demo(args: &HeDemoArgs) -> Result<(), CliError> {
    if args.parties < 2 {
        return Err(CliError::Usage(format!(
            "full-threshold sessions need at least 2 parties, got {}",
            args.parties
        )));
    }
    let format = parse_format(&args.format)?;
    let params = match args.preset.as_str() {
        "toy" => pcol_ckks::gen_params(pcol_ckks::Preset::Toy),
        "desk" => pcol_ckks::gen_params(pcol_ckks::Preset::Desk),
        "std-like" => pcol_ckks::gen_params(pcol_ckks::Preset::StdLike),
        other => return Err(CliError::Usage(format!("unknown preset {other:?}"))),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let point = match (args.mode.as_str(), &args.point) {
        ("online", Some(p)) => {
            let parts: Vec<&str> = p.split(',').collect();
            if parts.len() != 2 {
                return Err(CliError::Usage("--point expects y,phi".into()));
            }
            let y: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| CliError::Usage("bad --point y".into()))?;
            let phi: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| CliError::Usage("bad --point phi".into()))?;
            Some((y, phi))
        }
        ("table" | "online", None) => None,
        ("table", Some(_)) => {
            return Err(CliError::Usage("--point applies to --mode online".into()))
        }
        (other, _) => return Err(CliError::Usage(format!("unknown mode {other:?}"))),
    };

    let start = Instant::now();
    let slots = params.slot_count();
    let rotation_steps: Vec<usize> = if point.is_some() {
        Vec::new()
    } else {
        (0..slots.trailing_zeros()).map(|i| 1usize << i).collect()
    };
    let mut net = Network::new(params, args.parties, args.seed, &rotation_steps)
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    net.run_keygen()
        .map_err(|e| CliError::Protocol(format!("key generation failed: {e}")))?;
    let ev = net.evaluator_handle();
    let (pk, relin, rotations) = {
        let keys = net.keys().map_err(|e| CliError::Protocol(e.to_string()))?;
        (
            keys.public.clone(),
            keys.relin.clone(),
            keys.rotations.clone(),
        )
    };

    // each operator contributes an encrypted additive share of the
    // sigma-derived inverses
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed ^ 0x5eed_0f_1e1d);
    let shares = GeometryShares::split(args.sigma_x, args.sigma_z, args.parties, &mut rng);
    let encrypted: Vec<_> = shares
        .iter()
        .map(|s| s.encrypt(&ev, &pk, &mut rng))
        .collect::<Result<_, _>>()
        .map_err(protocol_error)?;
    let geometry = combine_encrypted_shares(&ev, &encrypted, args.parties, args.r)
        .map_err(protocol_error)?;

    let config = ApproxConfig::new(args.n1, args.n2);
    let rule = parse_rule(&args.rule)?;
    let spec = QuadratureSpec::new(rule, args.h, args.h)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let (label, ct, counter, plain_value, truth): (&str, _, OpCounter, f64, f64) = match point {
        Some((y, phi)) => {
            let phi_pt = ev
                .encode(
                    &vec![phi; slots],
                    ev.params().max_level(),
                    ev.params().scale() * ev.params().scale(),
                )
                .map_err(|e| CliError::Protocol(e.to_string()))?;
            let phi_ct = ev
                .encrypt(&phi_pt, &pk, &mut rng)
                .map_err(|e| CliError::Protocol(e.to_string()))?;
            let mut counter = OpCounter::default();
            let ct = eval_integrand_encrypted(
                &ev,
                &geometry,
                &PointInput::Plain(y),
                &PointInput::Encrypted(phi_ct),
                &config,
                &relin,
                &mut net,
                &mut counter,
            )
            .map_err(protocol_error)?;
            let plain = integrand_taylor(y, phi, args.sigma_x, args.sigma_z, args.n1, args.n2);
            let truth = pcol_core::integrand_p(y, phi, args.sigma_x, args.sigma_z);
            ("point", ct, counter, plain, truth)
        }
        None if args.mode == "table" => {
            let table =
                build_lookup_table(&ev, args.sigma_x, args.sigma_z, &spec, args.r, &pk, &mut rng)
                    .map_err(protocol_error)?;
            let mut counter = OpCounter::default();
            let ct = pcol_from_table(&ev, &table, &spec, &rotations, &mut counter)
                .map_err(protocol_error)?;
            let geometry_plain =
                EncounterGeometry::centered(args.r, args.sigma_x, args.sigma_z)
                    .map_err(domain_error)?;
            let (plain, _) =
                integrate_pcol(&geometry_plain, &spec).map_err(|e| CliError::Usage(e.to_string()))?;
            let truth =
                reference_pcol(&geometry_plain).map_err(|e| CliError::Domain(e.to_string()))?;
            ("table", ct, counter, plain, truth)
        }
        None => {
            let (ct, counter) = pcol_online(
                &ev,
                &geometry,
                &spec,
                &config,
                &relin,
                &rotations,
                &mut net,
            )
            .map_err(protocol_error)?;
            let plain =
                pcol_taylor_reference(args.sigma_x, args.sigma_z, args.r, &spec, args.n1, args.n2)
                    .map_err(protocol_error)?;
            let geometry_plain =
                EncounterGeometry::centered(args.r, args.sigma_x, args.sigma_z)
                    .map_err(domain_error)?;
            let truth =
                reference_pcol(&geometry_plain).map_err(|e| CliError::Domain(e.to_string()))?;
            ("online", ct, counter, plain, truth)
        }
    };

    let decrypted = net
        .collective_decrypt(&ct)
        .map_err(|e| CliError::Protocol(format!("collective decryption failed: {e}")))?[0];
    let wall = start.elapsed().as_secs_f64();

    let deviation = (decrypted - plain_value).abs() / plain_value.abs().max(1e-300);
    let abs_error = (decrypted - truth).abs();
    let mut table = Table::new(vec![
        "mode",
        "parties",
        "n1",
        "n2",
        "decrypted",
        "plaintext_value",
        "rel_deviation",
        "abs_error_vs_exact",
        "additions",
        "multiplications",
        "refreshes",
        "wall_time_s",
    ]);
    table.push(vec![
        Cell::Text(label.into()),
        Cell::Integer(args.parties as u64),
        Cell::Integer(args.n1 as u64),
        Cell::Integer(args.n2 as u64),
        Cell::Number(decrypted),
        Cell::Number(plain_value),
        Cell::Number(deviation),
        Cell::Number(abs_error),
        Cell::Integer(counter.additions as u64),
        Cell::Integer(counter.multiplications as u64),
        Cell::Integer(counter.refreshes as u64),
        Cell::Number(wall),
    ]);
    println!("{}", table.render(format));
    Ok(())
}
