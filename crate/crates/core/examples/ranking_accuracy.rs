//! Pairwise ranking accuracy of two proxy metrics over a small system
//! table, with the within/across split and a bootstrap p-value.

use xsimkit::ranking::{pairwise_accuracy, significance, split_report, Group, Polarity, Split, SystemRecord};

fn table(proxies: &[f64]) -> Vec<SystemRecord> {
    let downstream = [30.1, 27.5, 25.0, 22.2, 28.9, 19.4, 17.0, 21.3];
    let names = ["a", "b", "c", "ext"];
    downstream
        .iter()
        .zip(proxies)
        .enumerate()
        .map(|(i, (&d, &p))| {
            let group = if i % 4 == 3 { Group::Across } else { Group::Within };
            SystemRecord::new(names[i % 4], ["x-eng", "y-eng"][i / 4], p, d).with_group(group)
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weak = table(&[2.0, 2.0, 3.0, 1.0, 5.0, 5.0, 6.0, 6.0]);
    let strong = table(&[10.0, 14.0, 18.0, 21.0, 12.0, 30.0, 35.0, 24.0]);
    for (label, records) in [("weak", &weak), ("strong", &strong)] {
        let all = pairwise_accuracy(records, Polarity::Error)?;
        let within = split_report(records, Split::Within, Polarity::Error)?;
        let across = split_report(records, Split::Across, Polarity::Error)?;
        println!(
            "{label:>6}: {:.2} over {} pairs ({} tied); within {:.2}, across {:.2}",
            all.accuracy, all.total_pairs, all.tied, within.accuracy, across.accuracy
        );
    }
    let p = significance(&strong, &weak, Polarity::Error, 1000, 0)?;
    println!("p(strong <= weak) = {p:.3}");
    Ok(())
}
