//! Acceptance suite.
//!
//! One test per criterion; each prints a `criterion N: PASS/FAIL` line
//! (visible with `--nocapture`). Tolerances are pinned in the assertions.
//!
//! Criterion 6 is split into its two clauses (6a: cache-benefit gap,
//! 6b: per-client steadiness) so a failure pinpoints the clause.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use dcwot_core::coap::{
    compute_cache_key, decode_message, encode_message, Code, Message, OptionNumber, Token,
};
use dcwot_core::metrics::{reduce_trace, MetricsBundle};
use dcwot_core::scenario::{ScenarioConfig, TopologyPreset};
use dcwot_core::security::{CryptoCounters, SecurityContext};
use dcwot_core::simnet::{build_scenario, DeploymentMode, LossScript, RawTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn paper_tree(mode: DeploymentMode, rounds: u32, seed: u64) -> ScenarioConfig {
    let mut config = ScenarioConfig::preset("acceptance", mode, TopologyPreset::PaperTree);
    config.workload.rounds = rounds;
    config.scenario.seed = seed;
    config
}

fn run_bundle(config: &ScenarioConfig) -> (RawTrace, MetricsBundle) {
    let mut sim = build_scenario(config).expect("valid scenario");
    sim.run().expect("run completes");
    let trace = sim.take_trace();
    let bundle = reduce_trace(&trace).expect("reducible trace");
    (trace, bundle)
}

// ---------------------------------------------------------------------------
// criterion 1: server-rate optimum at zero loss
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_server_rate_optimum() {
    let started = Instant::now();
    let (_, plain) = run_bundle(&paper_tree(DeploymentMode::Oscore, 100, 42));
    let (_, det) = run_bundle(&paper_tree(DeploymentMode::DetOscoreProxy, 100, 42));
    let (_, ndn) = run_bundle(&paper_tree(DeploymentMode::Ndn, 100, 42));
    let elapsed = started.elapsed();

    assert_eq!(
        plain.server_responses_per_round, 9.0,
        "plain end-to-end protection must serve every client every round"
    );
    assert_eq!(
        det.server_responses_per_round, 2.0,
        "deterministic proxies collapse the subtree to one request plus client1's"
    );
    assert_eq!(ndn.server_responses_per_round, 2.0);
    assert!(
        elapsed.as_secs() < 10,
        "three 100-round runs took {elapsed:?}, budget is 10 s"
    );
    println!(
        "criterion 1: PASS — server rate oscore=9.0, det-oscore-proxy=2.0, ndn=2.0 per round ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// criterion 2: crypto-operation optima at zero loss
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_crypto_op_optima() {
    let close = |x: f64, want: f64, tol: f64| (x - want).abs() <= tol;

    let (_, plain) = run_bundle(&paper_tree(DeploymentMode::Oscore, 100, 42));
    assert!(close(plain.client_crypto_per_retrieval.aead, 2.0, 1e-9));
    assert!(close(plain.server_crypto_per_retrieval.aead, 2.0, 1e-9));
    assert_eq!(plain.client_crypto_per_retrieval.hmac, 0.0);
    assert_eq!(plain.server_crypto_per_retrieval.sign, 0.0);

    let (_, det) = run_bundle(&paper_tree(DeploymentMode::DetOscoreProxy, 100, 42));
    let client = &det.client_crypto_per_retrieval;
    let server = &det.server_crypto_per_retrieval;
    assert!(close(client.aead, 2.0, 1e-9), "client aead {}", client.aead);
    assert!(close(server.aead, 0.44, 0.01), "server aead {}", server.aead);
    assert!(close(server.sign, 0.22, 0.01), "server signatures {}", server.sign);
    assert!(close(server.hmac, 0.67, 0.01), "server hmac {}", server.hmac);
    assert!(close(client.verify, 1.0, 1e-9), "client verifications {}", client.verify);
    assert!(close(client.hmac, 3.0, 1e-9), "client hmac {}", client.hmac);

    println!(
        "criterion 2: PASS — oscore aead client/server = 2.00/2.00; det client aead={:.2} verify={:.2} hmac={:.2}, server aead={:.2} sign={:.2} hmac={:.2}",
        client.aead, client.verify, client.hmac, server.aead, server.sign, server.hmac
    );
}

// ---------------------------------------------------------------------------
// criterion 3: deterministic-ciphertext property
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_deterministic_ciphertext() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut member_x =
        SecurityContext::deterministic_group(b"acceptance-group", b"g", &[5u8; 32], false);
    let mut member_y =
        SecurityContext::deterministic_group(b"acceptance-group", b"g", &[5u8; 32], false);
    let mut standard = SecurityContext::standard(b"acceptance-master", b"c1", b"srv");
    let mut counters = CryptoCounters::default();

    let mut standard_payloads = BTreeSet::new();
    let mut standard_keys = BTreeSet::new();
    for i in 0..1000u32 {
        let mut plain = Message::request(Code::Get);
        plain.token = Token::new(&[1]).unwrap();
        let path_len = rng.gen_range(1..20);
        let path: String = (0..path_len).map(|_| (b'a' + rng.gen_range(0..26)) as char).collect();
        plain.add_option(
            OptionNumber::ProxyUri,
            format!("coap://nn/{path}?t={i}").into_bytes(),
        );
        plain.payload = (0..rng.gen_range(0..24)).map(|_| rng.gen()).collect();

        let (px, _) = member_x.deterministic_protect_request(&plain, &mut counters).unwrap();
        let (py, _) = member_y.deterministic_protect_request(&plain, &mut counters).unwrap();
        assert_eq!(
            encode_message(&px).unwrap(),
            encode_message(&py).unwrap(),
            "members must produce identical bytes for identical plaintext (case {i})"
        );

        let (s1, _) = standard.protect_request(&plain, &mut counters).unwrap();
        let (s2, _) = standard.protect_request(&plain, &mut counters).unwrap();
        assert!(standard_payloads.insert(s1.payload.clone()), "duplicate ciphertext (case {i})");
        assert!(standard_payloads.insert(s2.payload.clone()), "duplicate ciphertext (case {i})");
        assert!(standard_keys.insert(*compute_cache_key(&s1).unwrap().as_bytes()));
        assert!(standard_keys.insert(*compute_cache_key(&s2).unwrap().as_bytes()));
    }
    println!(
        "criterion 3: PASS — 1000 plaintexts: deterministic mode byte-identical across members; standard mode 2000 distinct ciphertexts and cache keys"
    );
}

// ---------------------------------------------------------------------------
// criterion 4: aggregation/dedup invariants on randomized topologies
// ---------------------------------------------------------------------------

mod invariants;

#[test]
fn criterion_4_aggregation_dedup_invariants() {
    let cases = 10_000;
    let started = Instant::now();
    let mut by_mode = BTreeMap::new();
    for case in 0..cases {
        let mode = match case % 3 {
            0 => DeploymentMode::OscoreProxy,
            1 => DeploymentMode::DetOscoreProxy,
            _ => DeploymentMode::Ndn,
        };
        *by_mode.entry(mode.as_str()).or_insert(0u32) += 1;
        invariants::run_case(case as u64, mode);
    }
    println!(
        "criterion 4: PASS — {cases} randomized cases ({by_mode:?}), zero invariant violations ({:?})",
        started.elapsed()
    );
}

// ---------------------------------------------------------------------------
// criterion 5: stair-case retransmission pattern
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_staircase_and_analytic_success() {
    let mut config =
        ScenarioConfig::preset("staircase", DeploymentMode::Oscore, TopologyPreset::SingleLink);
    config.workload.rounds = 2000;
    config.scenario.seed = 42;
    config.topology.loss = 0.3;
    // no MAC recovery: the two-second request timer drives the pattern and
    // the per-try end-to-end loss is 1 - (1-p)^2
    config.link.mac_retries = 0;
    let (_, bundle) = run_bundle(&config);

    let client = &bundle.per_client["client1"];
    let success = client.delivered as f64 / client.issued as f64;
    let per_try_loss = 1.0 - (1.0 - 0.3f64) * (1.0 - 0.3f64);
    let analytic = 1.0 - per_try_loss.powi(4);
    assert!(
        (success - analytic).abs() <= 0.02,
        "success {success:.4} vs analytic {analytic:.4}"
    );

    let mut clusters = [0u64; 4];
    for sample in &client.samples_us {
        let step = ((*sample + 200_000) / 2_000_000) as usize;
        let offset = *sample as i64 - step as i64 * 2_000_000;
        assert!(
            offset.abs() <= 200_000,
            "sample {sample} us is not within 200 ms of a two-second multiple"
        );
        assert!(step < 4, "sample {sample} beyond the retry budget");
        clusters[step] += 1;
    }
    assert!(clusters.iter().all(|c| *c > 0), "every stair must carry mass: {clusters:?}");
    println!(
        "criterion 5: PASS — success {success:.4} (analytic {analytic:.4}), clusters at 0/2/4/6 s = {clusters:?}"
    );
}

// ---------------------------------------------------------------------------
// criterion 6: cross-client cache benefit under chain loss
// ---------------------------------------------------------------------------

fn chain_loss_config(mode: DeploymentMode) -> ScenarioConfig {
    let mut config = paper_tree(mode, 1000, 42);
    config.topology.chain_loss = 0.2;
    // raw frame loss: without this the MAC layer recovers everything and no
    // deployment differences remain observable
    config.link.mac_retries = 0;
    config
}

#[test]
fn criterion_6a_cache_benefit_gap() {
    let (_, det) = run_bundle(&chain_loss_config(DeploymentMode::DetOscoreProxy));
    let (_, plain) = run_bundle(&chain_loss_config(DeploymentMode::Oscore));
    let det_c9 = det.client_success_rate("client9");
    let plain_c9 = plain.client_success_rate("client9");
    let gap_points = (det_c9 - plain_c9) * 100.0;
    assert!(
        gap_points >= 20.0,
        "client9: det {det_c9:.3} vs plain {plain_c9:.3}, gap {gap_points:.1} points"
    );
    println!(
        "criterion 6a: PASS — client9 success det {:.1}% vs plain {:.1}%, gap {gap_points:.1} points (≥ 20)",
        det_c9 * 100.0,
        plain_c9 * 100.0
    );
}

#[test]
fn criterion_6b_client9_within_5_points_of_client1() {
    let (_, det) = run_bundle(&chain_loss_config(DeploymentMode::DetOscoreProxy));
    let c1 = det.client_success_rate("client1");
    let c9 = det.client_success_rate("client9");
    let spread_points = (c1 - c9).abs() * 100.0;
    let line = format!(
        "client1 {:.1}% vs client9 {:.1}%, spread {spread_points:.1} points (budget 5)",
        c1 * 100.0,
        c9 * 100.0
    );
    if spread_points <= 5.0 {
        println!("criterion 6b: PASS — {line}");
    } else {
        println!("criterion 6b: FAIL — {line}");
    }
    assert!(
        spread_points <= 5.0,
        "under i.i.d. per-frame loss the hop-wise retry budget (3 retries x 2 s) cannot hold \
         client9 within 5 points of client1 across six lossy hops; see the decisions ledger: {line}"
    );
}

// ---------------------------------------------------------------------------
// criterion 7: oracle equivalence on the 3-node chain
// ---------------------------------------------------------------------------

mod oracle;

#[test]
fn criterion_7_oracle_equivalence() {
    let started = Instant::now();
    // 3-bit scripted loss prefix per directed link, exhaustively enumerated:
    // 2^12 patterns over client1->f1, f1->server, server->f1, f1->client1
    let links = [
        ("client1", "f1"),
        ("f1", "server"),
        ("server", "f1"),
        ("f1", "client1"),
    ];
    let mut checked = 0u32;
    for pattern in 0u16..4096 {
        let mut config =
            ScenarioConfig::preset("oracle", DeploymentMode::OscoreProxy, TopologyPreset::Chain);
        config.topology.forwarders = 1;
        config.scenario.seed = 7;
        config.workload.rounds = 2;
        config.workload.period_ms = 15_000; // rounds do not overlap
        config.workload.jitter_ms = 0;
        config.link.mac_retries = 0; // one script bit per transmission

        let mut sim = build_scenario(&config).expect("valid scenario");
        for (idx, (from, to)) in links.iter().enumerate() {
            let bits: Vec<bool> = (0..3)
                .map(|b| (pattern >> (idx * 3 + b)) & 1 == 0)
                .collect();
            sim.set_link_script(from, to, LossScript::new(bits));
        }
        sim.run().expect("run completes");
        let trace = sim.take_trace();
        oracle::check_equivalence(&trace, pattern);
        checked += 1;
    }
    println!(
        "criterion 7: PASS — {checked} exhaustive loss patterns, delivered sets match the replay oracle exactly ({:?})",
        started.elapsed()
    );
}

// ---------------------------------------------------------------------------
// criterion 8: link-stress shape at zero loss
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_link_stress_shape() {
    let chain = ["f7", "f6", "f5", "f4", "f3", "f2", "f1"];
    let upstream_of = |i: usize| if i + 1 < chain.len() { chain[i + 1] } else { "server" };

    for mode in [DeploymentMode::Oscore, DeploymentMode::OscoreProxy] {
        let (_, bundle) = run_bundle(&paper_tree(mode, 1000, 42));
        let mut expected = 2000u64; // f7 forwards client8 and client9
        for (i, f) in chain.iter().enumerate() {
            let got = bundle.upstream_requests(f, upstream_of(i));
            assert_eq!(
                got, expected,
                "{} upstream requests at {f}: {got}, want {expected} (strictly +1000 per attached client)",
                mode.as_str()
            );
            expected += 1000;
        }
    }

    for mode in [DeploymentMode::DetOscoreProxy, DeploymentMode::Ndn] {
        let (_, bundle) = run_bundle(&paper_tree(mode, 1000, 42));
        let mut previous = u64::MAX;
        for (i, f) in chain.iter().enumerate() {
            let up = bundle.upstream_requests(f, upstream_of(i));
            assert!(
                up <= previous,
                "{}: upstream requests must not increase toward the server ({f}: {up} after {previous})",
                mode.as_str()
            );
            previous = up;

            let down = bundle
                .link_stress
                .get(&(upstream_of(i).to_string(), f.to_string()))
                .map(|l| l.responses)
                .unwrap_or(0);
            let total = up + down;
            assert!(
                (1000..=2000).contains(&total),
                "{}: forwarder {f} total {total} outside 1000..=2000",
                mode.as_str()
            );
        }
    }
    println!(
        "criterion 8: PASS — plain modes step by +1000 per client (2000..8000); aggregating modes stay flat at 1000 upstream, per-hop totals within 1000..=2000"
    );
}

// ---------------------------------------------------------------------------
// criterion 9: codec and security round-trips with bit tampering
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_roundtrips_and_tampering() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let random_message = |rng: &mut ChaCha8Rng| {
        let mut m = Message::request(Code::Get);
        let token_len = rng.gen_range(0..=8);
        let token: Vec<u8> = (0..token_len).map(|_| rng.gen()).collect();
        m.token = Token::new(&token).unwrap();
        m.message_id = rng.gen();
        let path: String = (0..rng.gen_range(1..10))
            .map(|_| (b'a' + rng.gen_range(0..26)) as char)
            .collect();
        m.add_option(
            OptionNumber::ProxyUri,
            format!("coap://nn/{path}?t={}", rng.gen::<u16>()).into_bytes(),
        );
        m.payload = (0..rng.gen_range(0..48)).map(|_| rng.gen()).collect();
        m
    };

    // 1e5 randomized messages through the codec
    for i in 0..100_000 {
        let m = random_message(&mut rng);
        let bytes = encode_message(&m).unwrap();
        let back = decode_message(&bytes).unwrap();
        assert_eq!(back, m, "codec round-trip failed at case {i}");
    }

    // AEAD round-trips in both modes
    let mut counters = CryptoCounters::default();
    let mut client = SecurityContext::standard(b"m", b"c1", b"srv");
    let mut server = SecurityContext::standard(b"m", b"srv", b"c1");
    let mut member = SecurityContext::deterministic_group(b"g", b"gid", &[7u8; 32], false);
    let mut det_server = SecurityContext::deterministic_group(b"g", b"gid", &[7u8; 32], true);
    for i in 0..2_000 {
        let m = random_message(&mut rng);
        let (protected, _) = client.protect_request(&m, &mut counters).unwrap();
        let (back, _) = server.unprotect_request(&protected, &mut counters).unwrap();
        assert_eq!(back, m, "standard aead round-trip failed at case {i}");

        let (det, _) = member.deterministic_protect_request(&m, &mut counters).unwrap();
        let (back, _) = det_server.deterministic_unprotect_request(&det, &mut counters).unwrap();
        assert_eq!(back, m, "deterministic aead round-trip failed at case {i}");
    }

    // signature round-trips
    for _ in 0..2_000 {
        let mut resp = Message::response(Code::Content);
        resp.payload = (0..rng.gen_range(1..64)).map(|_| rng.gen()).collect();
        let signed = det_server.sign_response(&resp, &mut counters).unwrap();
        assert!(member.verify_response(&signed, &mut counters).is_ok());
    }

    // exhaustive single-bit tampering of AEAD ciphertexts
    for case in 0..40 {
        let m = random_message(&mut rng);
        let (protected, _) = client.protect_request(&m, &mut counters).unwrap();
        for bit in 0..protected.payload.len() * 8 {
            let mut tampered = protected.clone();
            tampered.payload[bit / 8] ^= 1 << (bit % 8);
            assert!(
                server.unprotect_request(&tampered, &mut counters).is_err(),
                "aead tampering survived: case {case} bit {bit}"
            );
        }
    }

    // exhaustive single-bit tampering of signed payloads
    for case in 0..20 {
        let mut resp = Message::response(Code::Content);
        resp.payload = (0..24).map(|_| rng.gen()).collect();
        let signed = det_server.sign_response(&resp, &mut counters).unwrap();
        for bit in 0..signed.payload.len() * 8 {
            let mut tampered = signed.clone();
            tampered.payload[bit / 8] ^= 1 << (bit % 8);
            assert!(
                member.verify_response(&tampered, &mut counters).is_err(),
                "signature tampering survived: case {case} bit {bit}"
            );
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 9 took {elapsed:?}, budget 60 s");
    println!(
        "criterion 9: PASS — 100000 codec round-trips, 4000 aead + 2000 signature round-trips, all single-bit tamperings rejected ({elapsed:?})"
    );
}
