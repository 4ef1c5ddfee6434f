//! `demo-oracle`: exact checks on hand-sized distributions.

use std::collections::BTreeMap;

use ctxcal_core::oracle::{strings_of_length, JointTable, OracleError, ToyModel, SYMMETRY_TOLERANCE, TABLE_TOLERANCE};

use crate::{Failure, Result};

fn oracle_err(e: OracleError) -> Failure {
    Failure::Runtime(e.to_string())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

pub fn run() -> Result<()> {
    let mut all_ok = true;

    // X = next word, Y = preceding context; the context sharpens the choice.
    let joint = JointTable::from_matrix(&[vec![0.30, 0.05], vec![0.10, 0.25], vec![0.05, 0.25]]).map_err(oracle_err)?;
    let h_x = joint.entropy_of(&[0]).map_err(oracle_err)?;
    let h_x_given_y = joint.conditional_entropy(0, &[1]).map_err(oracle_err)?;
    let (forward, reverse) = joint.mutual_information_routes().map_err(oracle_err)?;
    let symmetric = (forward - reverse).abs() < SYMMETRY_TOLERANCE;
    all_ok &= symmetric && h_x_given_y <= h_x;
    println!("Identity on a 3x2 joint (nats)");
    println!("  H(X) = {h_x:.6}, H(X|Y) = {h_x_given_y:.6}");
    println!("  H(X) - H(X|Y) = {forward:.6}");
    println!("  H(Y) - H(Y|X) = {reverse:.6}  [{}]", verdict(symmetric));

    // Three-way joint: adding a second conditioning variable can only help.
    let joint3 = JointTable::new(
        vec![2, 2, 2],
        vec![0.20, 0.05, 0.10, 0.15, 0.05, 0.15, 0.25, 0.05],
    )
    .map_err(oracle_err)?;
    let h = joint3.entropy_of(&[0]).map_err(oracle_err)?;
    let h_y = joint3.conditional_entropy(0, &[1]).map_err(oracle_err)?;
    let h_yz = joint3.conditional_entropy(0, &[1, 2]).map_err(oracle_err)?;
    let ordered = h_yz <= h_y + TABLE_TOLERANCE && h_y <= h + TABLE_TOLERANCE;
    all_ok &= ordered;
    println!();
    println!("Conditioning on a 2x2x2 joint (nats)");
    println!("  H(X) = {h:.6} >= H(X|Y) = {h_y:.6} >= H(X|Y,Z) = {h_yz:.6}  [{}]", verdict(ordered));

    // One table drives both the likelihood and the sampler.
    let mut rows = BTreeMap::new();
    rows.insert(String::new(), vec![0.6, 0.3, 0.1]);
    rows.insert("a".to_string(), vec![0.2, 0.7, 0.1]);
    rows.insert("b".to_string(), vec![0.5, 0.0, 0.5]);
    rows.insert("c".to_string(), vec![1.0, 0.0, 0.0]);
    let vocab = vec!['a', 'b', 'c'];
    let model = ToyModel::new(vocab.clone(), rows, 2).map_err(oracle_err)?;
    let sampler = model.sampler_distribution(2).map_err(oracle_err)?;
    println!();
    println!("Likelihood vs sampler on a 3-symbol model, length 2");
    println!("| seq | log P | exp(log P) | sampler P |");
    println!("|---|---|---|---|");
    let mut worst = 0.0f64;
    let mut total = 0.0;
    for seq in strings_of_length(&vocab, 2) {
        let logp = model.sequence_logprob(&seq).map_err(oracle_err)?;
        let q = sampler.get(&seq).copied().unwrap_or(0.0);
        worst = worst.max((logp.probability() - q).abs());
        total += logp.probability();
        println!("| {seq} | {logp} | {:.6} | {q:.6} |", logp.probability());
    }
    let dual = worst <= TABLE_TOLERANCE && (total - 1.0).abs() <= TABLE_TOLERANCE;
    all_ok &= dual;
    println!("max |exp(log P) - sampler P| = {worst:.1e}, sum = {total:.12}  [{}]", verdict(dual));

    if all_ok {
        Ok(())
    } else {
        Err(Failure::Runtime("oracle checks failed".into()))
    }
}
