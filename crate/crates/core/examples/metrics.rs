//! Purity, mutual information, AMI and ARI on small partitions.

use clusterlens::metrics::{ami, ari, contingency, expected_mutual_information, mutual_information, purity, ContingencyTable};

fn main() -> clusterlens::Result<()> {
    let table = ContingencyTable::from_counts(2, 2, vec![2, 0, 1, 1])?;
    println!("purity [[2,0],[1,1]] = {}", purity(&table)?);
    println!("EMI    [[2,0],[1,1]] = {:.6}", expected_mutual_information(&table)?);

    let same = contingency(&[0, 0, 1, 1], &[0, 0, 1, 1])?;
    println!("MI of identical halves = {:.6} (ln 2)", mutual_information(&same)?);
    println!("AMI of identical halves = {}", ami(&same)?);

    println!("ARI [0,0,1,1] vs [0,1,0,1] = {}", ari(&[0, 0, 1, 1], &[0, 1, 0, 1])?);

    let pred = [0, 0, 1, 1, 2, 2, 2, 0];
    let truth = [1, 0, 1, 1, 0, 2, 2, 2];
    let t = contingency(&pred, &truth)?;
    println!("8 points: purity {:.3}, ami {:.3}, ari {:.3}", purity(&t)?, ami(&t)?, ari(&pred, &truth)?);
    Ok(())
}
