use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use serde::Serialize;

use phasekey::lipschitz::LipschitzReport;
use phasekey::matfile::{format_matrix, parse_matrix, parse_vector};
use phasekey::properties::run_battery;
use phasekey::{
    alpha, beta, beta_tilde, build_report, check_achievement, dist_hat_h, dist_hat_v, generate_key,
    has_complement_property, is_full_spark, is_phase_retrievable, is_universal_key,
    CertificateReport, Error, Key, Matrix, PhaseRetriever, Witness,
};

use crate::report::{
    rows_of, BoundsBody, CertificateOut, CheckBody, ClauseOut, DecodeBody, Envelope, Inputs,
    MetricBody, VerifyBody, Witnesses, SCHEMA_VERSION,
};
use crate::{Certificate, DecodeEncoder, Encoder, Space};

pub struct Context {
    pub timing: bool,
}

/// Maps a failure onto the exit-code contract: 1 for out-of-range input or a
/// key that cannot decode, 3 for searches over the size cap, 2 for the rest.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::SearchTooLarge(_)) => 3,
        Some(Error::NotInRange { .. })
        | Some(Error::NotPhaseRetrievable { .. })
        | Some(Error::AmbiguityDetected) => 1,
        _ => 2,
    }
}

fn read_matrix(path: &Path) -> Result<Matrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("in {}", path.display()))
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_vector(&text).with_context(|| format!("in {}", path.display()))
}

fn read_key(path: &Path) -> Result<Key> {
    Ok(Key::new(read_matrix(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn key_inputs(path: &Path, key: &Key) -> Inputs {
    Inputs {
        key: Some(path.display().to_string()),
        d: Some(key.dim()),
        frame_size: Some(key.frame_size()),
        ..Inputs::default()
    }
}

fn emit<T: Serialize>(
    ctx: &Context,
    started: Instant,
    command: &'static str,
    inputs: Inputs,
    body: T,
    dest: Option<&Path>,
) -> Result<()> {
    let envelope = Envelope {
        schema: SCHEMA_VERSION,
        command,
        inputs,
        body,
        elapsed_ms: ctx.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    match dest {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict_code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

pub fn keygen(rows: usize, cols: usize, seed: u64, out: &Path) -> Result<ExitCode> {
    let key = generate_key(rows, cols, seed)?;
    write_text(out, &format_matrix(key.matrix()))?;
    Ok(ExitCode::SUCCESS)
}

fn certificate_out(name: &'static str, report: CertificateReport) -> CertificateOut {
    let (witness_kind, witness) = match &report.witness {
        Some(w @ Witness::Partition(_)) => (Some("partition"), Some(w.one_based())),
        Some(w @ Witness::Columns(_)) => (Some("columns"), Some(w.one_based())),
        None => (None, None),
    };
    CertificateOut {
        certificate: name,
        verdict: report.verdict,
        method: report.method,
        witness_kind,
        witness,
    }
}

pub fn check(
    ctx: &Context,
    key_path: &Path,
    certificate: Option<Certificate>,
    dest: Option<&Path>,
) -> Result<ExitCode> {
    let started = Instant::now();
    let key = read_key(key_path)?;
    let requested = match certificate {
        Some(c) => vec![c],
        None => vec![
            Certificate::FullSpark,
            Certificate::Complement,
            Certificate::PhaseRetrievable,
            Certificate::UniversalKey,
        ],
    };
    let mut certificates = Vec::with_capacity(requested.len());
    for c in requested {
        let out = match c {
            Certificate::FullSpark => certificate_out("full-spark", is_full_spark(&key)?),
            Certificate::Complement => {
                certificate_out("complement", has_complement_property(&key)?)
            }
            Certificate::PhaseRetrievable => {
                certificate_out("phase-retrievable", is_phase_retrievable(&key)?)
            }
            Certificate::UniversalKey => certificate_out("universal-key", is_universal_key(&key)?),
        };
        certificates.push(out);
    }
    let all_true = certificates.iter().all(|c| c.verdict);
    let body = CheckBody {
        certificates,
        all_true,
    };
    emit(
        ctx,
        started,
        "check",
        key_inputs(key_path, &key),
        body,
        dest,
    )?;
    Ok(verdict_code(all_true))
}

fn witnesses_of(report: &LipschitzReport) -> Witnesses {
    Witnesses {
        x_max: report.signal.x_max.clone(),
        y_max: report.signal.y_max.clone(),
        x_min: report.signal.x_min.clone(),
        y_min: report.signal.y_min.clone(),
        config_x_max: rows_of(&report.config.x_max),
        config_y_max: rows_of(&report.config.y_max),
        config_x_min: rows_of(&report.config.x_min),
        config_y_min: rows_of(&report.config.y_min),
    }
}

pub fn bounds(ctx: &Context, key_path: &Path, dest: Option<&Path>) -> Result<ExitCode> {
    let started = Instant::now();
    let key = read_key(key_path)?;
    let report = build_report(&key)?;
    let (achievement, achievement_clauses, achievement_error, passed) =
        match check_achievement(&key, &report) {
            Ok(a) => {
                let label = if a.lower_checked {
                    "pass"
                } else {
                    "pass (upper only)"
                };
                let clauses = a
                    .clauses
                    .iter()
                    .map(|c| ClauseOut {
                        clause: c.name,
                        lhs: c.lhs,
                        rhs: c.rhs,
                    })
                    .collect();
                (label.to_string(), clauses, None, true)
            }
            Err(e @ Error::AchievementFailure { .. }) => {
                ("fail".to_string(), Vec::new(), Some(e.to_string()), false)
            }
            Err(e) => return Err(e.into()),
        };
    let body = BoundsBody {
        a0: report.a0,
        b0: report.b0,
        i0: report.i0.one_based(),
        i0_complement: report.i0.complement().one_based(),
        degenerate: report.is_degenerate(&key),
        u: report.u.clone(),
        u1: report.u1.clone(),
        u2: report.u2.clone(),
        u1_placeholder: report.u1_placeholder,
        u2_placeholder: report.u2_placeholder,
        witnesses: witnesses_of(&report),
        achievement,
        achievement_clauses,
        achievement_error,
    };
    emit(
        ctx,
        started,
        "bounds",
        key_inputs(key_path, &key),
        body,
        dest,
    )?;
    Ok(verdict_code(passed))
}

pub fn encode(
    encoder: Encoder,
    key_path: &Path,
    input: &Path,
    out: &Path,
    perms: Option<&Path>,
) -> Result<ExitCode> {
    let key = read_key(key_path)?;
    if perms.is_some() && encoder != Encoder::Beta {
        bail!("--perms is only meaningful with --encoder beta");
    }
    let embedded = match encoder {
        Encoder::Alpha => {
            let x = read_vector(input)?;
            Matrix::row_vector(&alpha(&key, &x)?)
        }
        Encoder::Beta => {
            let x = read_matrix(input)?;
            let emb = beta(&key, &x)?;
            if let Some(path) = perms {
                // line k: 1-based sorted position of each input row in column k
                let mut text = String::new();
                for p in &emb.perms {
                    let line: Vec<String> =
                        p.as_slice().iter().map(|i| (i + 1).to_string()).collect();
                    text.push_str(&line.join(","));
                    text.push('\n');
                }
                write_text(path, &text)?;
            }
            emb.values
        }
        Encoder::BetaTilde => {
            let x = read_matrix(input)?;
            Matrix::row_vector(&beta_tilde(&key, &x)?.to_vec())
        }
    };
    write_text(out, &format_matrix(&embedded))?;
    Ok(ExitCode::SUCCESS)
}

fn retriever(key: &Key) -> Result<PhaseRetriever> {
    match PhaseRetriever::new(key) {
        Err(Error::NotPhaseRetrievable { witness }) => {
            let one_based: Vec<usize> = witness.iter().map(|k| k + 1).collect();
            Err(anyhow::Error::new(Error::NotPhaseRetrievable { witness })).context(format!(
                "key failed the phase-retrievable certificate, violating partition {one_based:?}"
            ))
        }
        other => Ok(other?),
    }
}

pub fn decode(
    ctx: &Context,
    encoder: DecodeEncoder,
    key_path: &Path,
    input: &Path,
    out: &Path,
    dest: Option<&Path>,
) -> Result<ExitCode> {
    let started = Instant::now();
    let key = read_key(key_path)?;
    let solver = retriever(&key)?;
    let (name, recovery) = match encoder {
        DecodeEncoder::Beta => ("beta", solver.invert_beta(&read_matrix(input)?)?),
        DecodeEncoder::BetaTilde => (
            "beta-tilde",
            solver.invert_beta_tilde(&read_vector(input)?)?,
        ),
    };
    write_text(out, &format_matrix(&recovery.config))?;
    if dest.is_some() {
        let inputs = Inputs {
            input: Some(input.display().to_string()),
            n: Some(2),
            ..key_inputs(key_path, &key)
        };
        let body = DecodeBody {
            encoder: name,
            residual: recovery.residual,
            recovered: rows_of(&recovery.config),
        };
        emit(ctx, started, "decode", inputs, body, dest)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn metric(
    ctx: &Context,
    space: Space,
    x_path: &Path,
    y_path: &Path,
    dest: Option<&Path>,
) -> Result<ExitCode> {
    let started = Instant::now();
    let mut inputs = Inputs {
        x: Some(x_path.display().to_string()),
        y: Some(y_path.display().to_string()),
        ..Inputs::default()
    };
    let body = match space {
        Space::HatH => {
            let x = read_vector(x_path)?;
            let y = read_vector(y_path)?;
            inputs.d = Some(x.len());
            MetricBody {
                space: "hatH",
                distance: dist_hat_h(&x, &y)?,
                permutation: None,
            }
        }
        Space::HatV => {
            let x = read_matrix(x_path)?;
            let y = read_matrix(y_path)?;
            inputs.n = Some(x.rows());
            inputs.d = Some(x.cols());
            let (distance, perm) = dist_hat_v(&x, &y)?;
            MetricBody {
                space: "hatV",
                distance,
                permutation: Some(perm.as_slice().iter().map(|i| i + 1).collect()),
            }
        }
    };
    emit(ctx, started, "metric", inputs, body, dest)?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(
    ctx: &Context,
    key_path: &Path,
    samples: usize,
    seed: u64,
    dest: Option<&Path>,
) -> Result<ExitCode> {
    let started = Instant::now();
    let key = read_key(key_path)?;
    let battery = run_battery(&key, samples, seed)?;
    let all_passed = battery.all_passed();
    for f in battery.failures() {
        eprintln!(
            "FAIL {}: {} of {} checks failed{}",
            f.name,
            f.failures,
            f.checked,
            f.detail
                .as_deref()
                .map(|d| format!(" ({d})"))
                .unwrap_or_default()
        );
    }
    let inputs = Inputs {
        samples: Some(samples),
        seed: Some(seed),
        ..key_inputs(key_path, &key)
    };
    let body = VerifyBody {
        phase_retrievable: battery.phase_retrievable,
        properties: battery.outcomes,
        all_passed,
    };
    emit(ctx, started, "verify", inputs, body, dest)?;
    Ok(verdict_code(all_passed))
}
