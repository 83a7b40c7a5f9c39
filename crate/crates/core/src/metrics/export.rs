//! Plot-ready CSV and JSON output. Plots themselves are out of scope; the
//! CSV column schemas documented in `docs/metrics.md` are the contract.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::metrics::MetricsBundle;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), ExportError> {
    let path = dir.join(name);
    let io = |source| ExportError::Io { path: path.display().to_string(), source };
    let mut f = fs::File::create(&path).map_err(io)?;
    f.write_all(content.as_bytes())
        .map_err(|source| ExportError::Io { path: path.display().to_string(), source })
}

fn retrievals_csv(bundle: &MetricsBundle) -> String {
    let mut out = String::from("client,round,issued_us,elapsed_us,outcome\n");
    for r in &bundle.retrievals {
        match r.elapsed_us {
            Some(e) => out.push_str(&format!(
                "{},{},{},{},success\n",
                r.client, r.round, r.issued_us, e
            )),
            None => out.push_str(&format!("{},{},{},,failure\n", r.client, r.round, r.issued_us)),
        }
    }
    out
}

fn cdf_csv(bundle: &MetricsBundle) -> String {
    let mut out = String::from("client,elapsed_us,cum_fraction\n");
    for (client, summary) in &bundle.per_client {
        if summary.issued == 0 {
            continue;
        }
        let mut samples = summary.samples_us.clone();
        samples.sort_unstable();
        // cumulative fraction over all issued requests, so the curve tops
        // out at the success rate
        for (idx, sample) in samples.iter().enumerate() {
            let fraction = (idx + 1) as f64 / summary.issued as f64;
            out.push_str(&format!("{client},{sample},{fraction:.6}\n"));
        }
    }
    out
}

fn server_rate_csv(bundle: &MetricsBundle) -> String {
    let mut out = String::from("second,responses\n");
    for (second, count) in &bundle.server_tx_per_second {
        out.push_str(&format!("{second},{count}\n"));
    }
    out
}

fn link_stress_csv(bundle: &MetricsBundle) -> String {
    let mut out =
        String::from("from,to,requests,responses,request_attempts,response_attempts,bytes\n");
    for ((from, to), s) in &bundle.link_stress {
        out.push_str(&format!(
            "{from},{to},{},{},{},{},{}\n",
            s.requests, s.responses, s.request_attempts, s.response_attempts, s.bytes
        ));
    }
    out
}

fn crypto_csv(bundle: &MetricsBundle) -> String {
    let mut out = String::from(
        "scope,aead,sign,verify,hmac,aead_per_retrieval,sign_per_retrieval,verify_per_retrieval,hmac_per_retrieval\n",
    );
    for (node, c) in &bundle.node_crypto {
        out.push_str(&format!(
            "{node},{},{},{},{},,,,\n",
            c.aead_ops, c.sign_ops, c.verify_ops, c.hmac_ops
        ));
    }
    let client = &bundle.client_crypto_per_retrieval;
    out.push_str(&format!(
        "client,,,,,{:.4},{:.4},{:.4},{:.4}\n",
        client.aead, client.sign, client.verify, client.hmac
    ));
    let server = &bundle.server_crypto_per_retrieval;
    out.push_str(&format!(
        "server,,,,,{:.4},{:.4},{:.4},{:.4}\n",
        server.aead, server.sign, server.verify, server.hmac
    ));
    out
}

/// Writes one CSV per metric family plus a JSON summary into `dir`,
/// creating it if needed. An empty bundle produces headers-only files.
pub fn export_bundle(bundle: &MetricsBundle, dir: &Path) -> Result<(), ExportError> {
    fs::create_dir_all(dir).map_err(|source| ExportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_file(dir, "retrievals.csv", &retrievals_csv(bundle))?;
    write_file(dir, "retrieval_cdf.csv", &cdf_csv(bundle))?;
    write_file(dir, "server_rate.csv", &server_rate_csv(bundle))?;
    write_file(dir, "link_stress.csv", &link_stress_csv(bundle))?;
    write_file(dir, "crypto_ops.csv", &crypto_csv(bundle))?;

    let summary = serde_json::json!({
        "mode": bundle.mode,
        "seed": bundle.seed,
        "rounds": bundle.rounds,
        "clients": bundle.clients,
        "total_issued": bundle.total_issued,
        "total_delivered": bundle.total_delivered,
        "success_rate": if bundle.total_issued > 0 {
            bundle.total_delivered as f64 / bundle.total_issued as f64
        } else {
            0.0
        },
        "per_client_success": bundle
            .per_client
            .iter()
            .map(|(k, v)| (k.clone(), v.success_rate))
            .collect::<std::collections::BTreeMap<_, _>>(),
        "server_responses_total": bundle.server_responses_total,
        "server_responses_per_round": bundle.server_responses_per_round,
        "server_rate_steady_mean": bundle.server_rate_steady_mean,
        "client_crypto_per_retrieval": bundle.client_crypto_per_retrieval,
        "server_crypto_per_retrieval": bundle.server_crypto_per_retrieval,
    });
    write_file(
        dir,
        "summary.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary).expect("serializable")),
    )
}
