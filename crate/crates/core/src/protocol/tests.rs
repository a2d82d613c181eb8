use super::*;
use crate::source::examples::*;
use crate::typicality::is_strongly_typical;
use crate::source::VarSet;

// X uniform, Y = X + Bern(0.1), Z = Y + Bern(0.2): Z depends on Y given X,
// so point Q does not collapse onto point P.
fn chain_through_y() -> JointDistribution {
    let flip = |a: usize, b: usize, p: f64| if a == b { 1.0 - p } else { p };
    JointDistribution::from_fn([2, 2, 2], |x, y, z| 0.5 * flip(x, y, 0.1) * flip(y, z, 0.2)).unwrap()
}

fn config(scheme: Scheme, n: usize, epsilon: f64) -> SchemeConfig {
    let mut c = SchemeConfig::new(scheme, n, epsilon);
    c.codebook_mode = CodebookMode::ExplicitTable;
    c.master_seed = 11;
    c
}

fn typical(dist: &JointDistribution, vars: VarSet, seqs: &[&[u8]], eps: f64) -> bool {
    let params = TypicalityParams::new(eps, seqs[0].len()).unwrap();
    is_strongly_typical(seqs, &dist.marginal(vars), &params).unwrap()
}

#[test]
fn identical_xz_recovers_z_whenever_x_is_typical() {
    let d = shared_xz_independent_y();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointP, 20, 0.1))).unwrap();
    assert_eq!(p.blocks()[0].rates.pk_owner, Var::X);
    let mut decoded = 0;
    for seed in 0..40 {
        let run = p.run(seed).unwrap();
        let x_view = run.views[0][Var::X.index()];
        if typical(&d, VarSet::X, &[&run.source.x], 0.1) {
            assert_eq!(x_view.status, DecodeStatus::Ok);
            decoded += 1;
        }
        if x_view.status.is_ok() {
            assert_eq!(run.keys.secret_claim(Var::X), run.keys.secret_claim(Var::Z));
        }
    }
    assert!(decoded > 0);
}

#[test]
fn trivial_z_alphabet() {
    let d = JointDistribution::from_fn([2, 2, 1], |x, y, _| if x == y { 0.5 } else { 0.0 }).unwrap();
    for scheme in [Scheme::PointP, Scheme::PointT, Scheme::PointQ] {
        let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(scheme, 12, 0.3))).unwrap();
        assert_eq!(p.secret_alphabet(), 1);
        let f = p.run(0).unwrap().transcript.find(0, MessageLabel::F);
        for seed in 0..5 {
            let run = p.run(seed).unwrap();
            assert_eq!(run.transcript.find(0, MessageLabel::F), f);
            assert!(run.keys.secret_claims.iter().all(|c| c.is_none_or(|k| k == 0)));
        }
    }
}

#[test]
fn all_unit_alphabets() {
    let d = point_mass();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 6, 0.2))).unwrap();
    let run = p.run(3).unwrap();
    assert_eq!(run.transcript, p.run(4).unwrap().transcript);
    assert!(run.keys.status.iter().all(|s| s.is_ok()));
    assert!(run.keys.secret_agrees());
    assert!(run.keys.private_agrees());
    assert_eq!((run.keys.secret_alphabet, run.keys.private_alphabet), (1, 1));
}

#[test]
fn decoders_ignore_foreign_sequences() {
    let d = markov_chain(0.1, 0.3);
    for scheme in Scheme::ALL {
        let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(scheme, 10, 0.4))).unwrap();
        for seed in 0..6 {
            let run = p.run(seed).unwrap();
            let flip = |s: &[u8]| s.iter().map(|b| 1 - b).collect::<Vec<u8>>();
            for terminal in Var::ALL {
                // Keep the terminal's own sequence and corrupt the others.
                let mut seqs = [flip(&run.source.x), flip(&run.source.y), flip(&run.source.z)];
                seqs[terminal.index()] = run.source.get(terminal).to_vec();
                let [x, y, z] = seqs;
                let corrupted = SourceTriple::new(x, y, z).unwrap();
                let view = p
                    .view(0, terminal, corrupted.get(terminal), &run.transcript)
                    .unwrap();
                assert_eq!(view, run.views[0][terminal.index()]);
            }
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let d = markov_chain(0.1, 0.3);
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 12, 0.35))).unwrap();
    assert_eq!(p.run(42).unwrap(), p.run(42).unwrap());
    let again = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 12, 0.35))).unwrap();
    assert_eq!(p.run(42).unwrap(), again.run(42).unwrap());
}

#[test]
fn true_sequence_lies_in_its_announced_bin() {
    let d = chain_through_y();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 12, 0.35))).unwrap();
    let b = &p.blocks()[0];
    for seed in 0..10 {
        let run = p.run(seed).unwrap();
        for (label, v) in [(MessageLabel::F, Var::Z), (MessageLabel::G, Var::X), (MessageLabel::L, Var::Y)] {
            let cb = b.codebook(v).unwrap();
            assert_eq!(run.transcript.find(0, label), Some(cb.bin_of(run.source.get(v))));
        }
    }
}

#[test]
fn point_t_on_identical_bits_agrees_when_decoded() {
    let d = identical_bits();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointT, 20, 0.3))).unwrap();
    let (rs, rp) = p.achieved_rates();
    assert!(rs > 0.3 && rp == 0.0, "{rs} {rp}");
    let mut ok = 0;
    for seed in 0..30 {
        let run = p.run(seed).unwrap();
        if run.keys.status.iter().all(|s| s.is_ok()) {
            assert!(run.keys.secret_agrees());
            assert!(run.keys.private_agrees());
            ok += 1;
        } else {
            assert!(!typical(&d, VarSet::X, &[&run.source.x], 0.3));
        }
    }
    assert!(ok > 0);
}

#[test]
fn point_e_on_xor_recovers_x_exactly() {
    let d = xor_triple();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointE, 10, 0.4))).unwrap();
    assert_eq!(p.blocks()[0].rates.r_p, 1.0 - 0.4);
    for seed in 0..20 {
        let run = p.run(seed).unwrap();
        assert!(!run.keys.secret_assigned);
        assert_eq!(run.keys.secret_claims, [None; 3]);
        let x = &run.source.x;
        let y_view = run.views[0][Var::Y.index()];
        if typical(&d, VarSet::XYZ, &[x, &run.source.y, &run.source.z], 0.4) {
            assert_eq!(y_view.status, DecodeStatus::Ok);
            assert!(run.keys.private_agrees());
        }
    }
}

#[test]
fn point_e_with_useless_z() {
    let d = shared_xy_independent_z();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointE, 10, 0.4))).unwrap();
    let (_, rp) = p.achieved_rates();
    assert!(rp > 0.5);
    for seed in 0..20 {
        let run = p.run(seed).unwrap();
        if typical(&d, VarSet::XYZ, &[&run.source.x, &run.source.y, &run.source.z], 0.4) {
            assert!(run.keys.private_agrees());
        }
    }
}

#[test]
fn markov_source_point_q_collapses_to_point_p() {
    // Y - X - Z is a Markov chain, so H(Y|X) = H(Y|XZ).
    let d = markov_chain(0.1, 0.3);
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 12, 0.35))).unwrap();
    assert_eq!(p.blocks()[0].scheme, Scheme::PointP);
}

#[test]
fn degenerate_point_q_runs_point_p() {
    // H(Y|X) = H(Y|XZ) = 0
    let d = shared_xy_independent_z();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 12, 0.3))).unwrap();
    let b = &p.blocks()[0];
    assert_eq!((b.requested, b.scheme), (Scheme::PointQ, Scheme::PointP));
    for seed in 0..20 {
        let run = p.run(seed).unwrap();
        assert!(run.transcript.find(0, MessageLabel::L).is_none());
        if typical(&d, VarSet::XYZ, &[&run.source.x, &run.source.y, &run.source.z], 0.3) {
            assert!(run.keys.private_agrees());
        }
    }
}

#[test]
fn point_q_sends_three_messages() {
    let d = chain_through_y();
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointQ, 12, 0.35))).unwrap();
    assert_eq!(p.blocks()[0].scheme, Scheme::PointQ);
    let run = p.run(1).unwrap();
    let labels: Vec<_> = run.transcript.messages.iter().map(|m| (m.sender, m.label)).collect();
    assert_eq!(
        labels,
        [(Var::Z, MessageLabel::F), (Var::X, MessageLabel::G), (Var::Y, MessageLabel::L)]
    );
    let p = Protocol::prepare(&d, &ProtocolConfig::Single(config(Scheme::PointP, 12, 0.35))).unwrap();
    let run = p.run(1).unwrap();
    let labels: Vec<_> = run.transcript.messages.iter().map(|m| (m.sender, m.label)).collect();
    // Y is closer to Z here, so Y carries the private key and sends g.
    assert_eq!(labels, [(Var::Z, MessageLabel::F), (Var::Y, MessageLabel::G)]);
}

#[test]
fn point_p_rates_meet_distributed_coding_conditions() {
    let d = xor_triple();
    let pr = d.profile();
    let r = derive_rates(Scheme::PointP, &pr, 0.0, 0.0);
    assert!(r.r_z > pr.h_z_given_xy);
    assert!(r.r_x + r.r_z >= pr.h_xz_given_y - 1e-12);
}

#[test]
fn time_share_boundaries_match_single_schemes() {
    let d = markov_chain(0.1, 0.3);
    let a = config(Scheme::PointP, 0, 0.35);
    let mut b = config(Scheme::PointT, 0, 0.35);
    b.master_seed = 99;
    let n = 12;
    for (lambda, single) in [(1.0, &a), (0.0, &b)] {
        let shared = time_share(&d, &a, &b, lambda, n, 5).unwrap();
        let mut alone = single.clone();
        alone.n = n;
        let alone = Protocol::prepare(&d, &ProtocolConfig::Single(alone)).unwrap().run(5).unwrap();
        assert_eq!(shared, alone);
    }
}

#[test]
fn time_share_midpoint_rates() {
    let d = identical_bits();
    let n = 20;
    let e = config(Scheme::PointE, n, 0.2);
    let t = config(Scheme::PointT, n, 0.2);
    let single = |c: &SchemeConfig| {
        Protocol::prepare(&d, &ProtocolConfig::Single(c.clone()))
            .unwrap()
            .achieved_rates()
    };
    let (re, rt) = (single(&e), single(&t));
    let shared = Protocol::prepare(
        &d,
        &ProtocolConfig::TimeShare {
            first: e,
            second: t,
            lambda: 0.5,
            n,
        },
    )
    .unwrap();
    assert_eq!(shared.blocks().len(), 2);
    assert_eq!((shared.blocks()[1].offset, shared.blocks()[1].len), (10, 10));
    let (rs, rp) = shared.achieved_rates();
    assert!((rs - 0.5 * (re.0 + rt.0)).abs() <= 1.0 / n as f64);
    assert!((rp - 0.5 * (re.1 + rt.1)).abs() <= 1.0 / n as f64);
    let run = shared.run(8).unwrap();
    assert!(run.keys.secret_assigned);
    assert_eq!(run.transcript.block(1).count(), 2);
}

#[test]
fn concatenated_keys_use_mixed_radix() {
    let d = identical_bits();
    let t = config(Scheme::PointT, 0, 0.3);
    let shared = Protocol::prepare(
        &d,
        &ProtocolConfig::TimeShare {
            first: t.clone(),
            second: t,
            lambda: 0.5,
            n: 24,
        },
    )
    .unwrap();
    let radix = shared.blocks()[0].secret_alphabet();
    assert_eq!(shared.secret_alphabet(), radix * shared.blocks()[1].secret_alphabet());
    let run = shared.run(2).unwrap();
    if let (Some(a), Some(b)) = (run.views[0][2].secret_key, run.views[1][2].secret_key) {
        assert_eq!(run.keys.secret_claim(Var::Z), Some(a + b * radix));
    }
}
